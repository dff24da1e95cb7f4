use serde::{Deserialize, Serialize};

use super::{check_cols, normalized_weights};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub max_iter: usize,
    pub l2: f64,
    /// Stops when the gradient norm, or the relative objective decrease,
    /// falls below this.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            max_iter: 50_000,
            l2: 1e-3,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Objective `Σ w_i ℓ_i / n + (l2 / 2) |β|^2` and its gradient, with the
/// bias derivative last. `ℓ_i` is the cross-entropy of `σ(β·x_i + b)`; the
/// bias is not penalised.
pub fn logistic_objective(m: &Matrix, labels: &[u8], weights: &[f64], beta: &[f64], bias: f64, l2: f64) -> (f64, Vec<f64>) {
    let (n, d) = (m.rows(), m.cols());
    let mut f = 0.0;
    let mut g = vec![0.0; d + 1];
    for i in 0..n {
        let x = m.row(i);
        let z = bias + x.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
        let y = f64::from(labels[i]);
        f += weights[i] * (softplus(z) - y * z);
        let r = weights[i] * (sigmoid(z) - y);
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj += r * xj;
        }
        g[d] += r;
    }
    let nf = n as f64;
    f /= nf;
    g.iter_mut().for_each(|v| *v /= nf);
    f += 0.5 * l2 * beta.iter().map(|b| b * b).sum::<f64>();
    for (gj, b) in g.iter_mut().zip(beta) {
        *gj += l2 * b;
    }
    (f, g)
}

/// Gradient descent with Armijo backtracking from zero.
pub fn train_logistic(m: &Matrix, labels: &[u8], weights: Option<&[f64]>, cfg: LogisticConfig) -> Result<LinearModel> {
    let w = normalized_weights(m, labels, weights)?;
    if !(cfg.l2 >= 0.0) || cfg.max_iter == 0 {
        return Err(Error::invalid("logistic config needs l2 >= 0 and max_iter > 0"));
    }
    let d = m.cols();
    let mut theta = vec![0.0; d + 1];
    let eval = |t: &[f64]| logistic_objective(m, labels, &w, &t[..d], t[d], cfg.l2);
    let (mut f, mut g) = eval(&theta);
    let mut step: f64 = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        if !f.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch: iterations,
                batch: 0,
                detail: "logistic objective".into(),
            });
        }
        let gg: f64 = g.iter().map(|v| v * v).sum();
        if gg.sqrt() <= cfg.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut t = (step * 2.0).min(1e3);
        let (cand, fc, gc) = loop {
            let cand: Vec<f64> = theta.iter().zip(&g).map(|(a, b)| a - t * b).collect();
            let (fc, gc) = eval(&cand);
            if fc <= f - 1e-4 * t * gg || t < 1e-18 {
                break (cand, fc, gc);
            }
            t *= 0.5;
        };
        step = t;
        let decrease = f - fc;
        theta = cand;
        f = fc;
        g = gc;
        if decrease.abs() <= cfg.tol * f.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    let bias = theta.pop().unwrap_or(0.0);
    Ok(LinearModel {
        weights: theta,
        bias,
        iterations,
        converged,
    })
}

impl LinearModel {
    pub fn predict_proba(&self, m: &Matrix) -> Result<Vec<f64>> {
        check_cols(self.weights.len(), m)?;
        Ok((0..m.rows())
            .map(|i| sigmoid(self.bias + m.row(i).iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()))
            .collect())
    }

    pub fn predict(&self, m: &Matrix) -> Result<Vec<u8>> {
        Ok(self.predict_proba(m)?.into_iter().map(|p| u8::from(p > 0.5)).collect())
    }
}
