//! Batched forward and backward passes.

use serde::{Deserialize, Serialize};

use super::arch::{Shapes, OUTPUTS};
use super::layers::{conv1d, conv1d_input_grad, dense, dense_input_grad, maxpool, relu_inplace, softmax2};
use super::params::NetworkParameters;
use crate::exec::Exec;
use crate::{Error, Result};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy)]
pub enum Mode<'a> {
    /// Batch statistics; `dropout` holds one scaled keep-mask value per
    /// hidden unit per instance (`0` or `1 / (1 - rate)`).
    Train { dropout: Option<&'a [f64]> },
    /// Running statistics, no dropout.
    Eval,
}

/// Class probabilities of one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probabilities: [f64; 2],
    pub class: u8,
}

impl Prediction {
    pub fn from_probabilities(p: [f64; 2]) -> Self {
        Prediction {
            probabilities: p,
            class: u8::from(p[1] > p[0]),
        }
    }

    /// Probability of the favorable class 1.
    pub fn favorable(&self) -> f64 {
        self.probabilities[1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BnCache {
    pub xhat: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub inv_std: Vec<f64>,
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    pub batch: usize,
    pub(crate) shapes: Shapes,
    pub(crate) x: Vec<f64>,
    pub(crate) bn1: BnCache,
    pub(crate) a1: Vec<f64>,
    pub(crate) p1: Vec<f64>,
    pub(crate) p1_idx: Vec<u32>,
    pub(crate) bn2: BnCache,
    pub(crate) a2: Vec<f64>,
    pub(crate) p2: Vec<f64>,
    pub(crate) p2_idx: Vec<u32>,
    pub(crate) hpre: Vec<f64>,
    pub(crate) h: Vec<f64>,
    pub(crate) mask: Option<Vec<f64>>,
    pub probs: Vec<[f64; 2]>,
}

impl Cache {
    pub fn predictions(&self) -> Vec<Prediction> {
        self.probs.iter().map(|&p| Prediction::from_probabilities(p)).collect()
    }

    pub fn favorable(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p[1]).collect()
    }

    /// ReLU and pooling decisions; two caches with equal patterns lie in the
    /// same smooth region of the network function.
    pub(crate) fn pattern(&self) -> (Vec<bool>, Vec<u32>, Vec<u32>) {
        let relu = self
            .a1
            .iter()
            .chain(&self.a2)
            .chain(&self.hpre)
            .map(|&v| v > 0.0)
            .collect();
        (relu, self.p1_idx.clone(), self.p2_idx.clone())
    }
}

fn check_input(params: &NetworkParameters, x: &[f64], batch: usize) -> Result<()> {
    let l = params.arch.input_len;
    if batch == 0 || x.len() != batch * l {
        return Err(Error::Shape {
            expected: format!("{batch} x {l} inputs"),
            actual: format!("{} values", x.len()),
        });
    }
    Ok(())
}

/// Batch norm over `[b][c][t]` data. Train mode uses per-channel batch
/// statistics (biased variance); eval mode the running ones.
fn batchnorm(
    z: &mut [f64],
    batch: usize,
    channels: usize,
    len: usize,
    gamma: &[f64],
    beta: &[f64],
    running: Option<(&[f64], &[f64])>,
    exec: Exec,
) -> BnCache {
    let n = (batch * len) as f64;
    let per = channels * len;
    let (mean, var): (Vec<f64>, Vec<f64>) = match running {
        Some((m, v)) => (m.to_vec(), v.to_vec()),
        None => exec
            .map(channels, |c| {
                let mut s = 0.0;
                for b in 0..batch {
                    s += z[b * per + c * len..b * per + (c + 1) * len].iter().sum::<f64>();
                }
                let mu = s / n;
                let mut q = 0.0;
                for b in 0..batch {
                    q += z[b * per + c * len..b * per + (c + 1) * len]
                        .iter()
                        .map(|v| (v - mu) * (v - mu))
                        .sum::<f64>();
                }
                (mu, q / n)
            })
            .into_iter()
            .unzip(),
    };
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
    let mut xhat = vec![0.0; z.len()];
    exec.for_each_chunk(&mut xhat, per, |b, xh| {
        for c in 0..channels {
            for t in 0..len {
                xh[c * len + t] = (z[b * per + c * len + t] - mean[c]) * inv_std[c];
            }
        }
    });
    exec.for_each_chunk(z, per, |b, zb| {
        for c in 0..channels {
            for t in 0..len {
                zb[c * len + t] = gamma[c] * xhat[b * per + c * len + t] + beta[c];
            }
        }
    });
    BnCache {
        xhat,
        mean,
        var,
        inv_std,
    }
}

/// Runs the network on `batch` row-major instances of `x`.
pub fn forward(params: &NetworkParameters, x: &[f64], batch: usize, mode: Mode, exec: Exec) -> Result<Cache> {
    check_input(params, x, batch)?;
    let a = params.arch;
    let s = a.shapes()?;
    let (l0, f1, f2, k, h) = (a.input_len, a.conv1_filters, a.conv2_filters, a.kernel, a.hidden);
    let (train, dropout) = match mode {
        Mode::Train { dropout } => (true, dropout),
        Mode::Eval => (false, None),
    };
    if let Some(m) = dropout {
        if m.len() != batch * h {
            return Err(Error::Shape {
                expected: format!("{batch} x {h} dropout mask"),
                actual: format!("{} values", m.len()),
            });
        }
    }

    let mut a1 = vec![0.0; batch * f1 * s.conv1_len];
    exec.for_each_chunk(&mut a1, f1 * s.conv1_len, |b, out| {
        conv1d(&x[b * l0..(b + 1) * l0], 1, &params.conv1_w, &params.conv1_b, k, out)
    });
    let run1 = (!train).then(|| (params.bn1_mean.as_slice(), params.bn1_var.as_slice()));
    let bn1 = batchnorm(&mut a1, batch, f1, s.conv1_len, &params.bn1_gamma, &params.bn1_beta, run1, exec);
    relu_inplace(&mut a1);

    let (p1, p1_idx) = pool_batch(&a1, batch, f1, s.conv1_len, a.pool, exec);

    let mut a2 = vec![0.0; batch * f2 * s.conv2_len];
    let p1_per = f1 * s.pool1_len;
    exec.for_each_chunk(&mut a2, f2 * s.conv2_len, |b, out| {
        conv1d(&p1[b * p1_per..(b + 1) * p1_per], f1, &params.conv2_w, &params.conv2_b, k, out)
    });
    let run2 = (!train).then(|| (params.bn2_mean.as_slice(), params.bn2_var.as_slice()));
    let bn2 = batchnorm(&mut a2, batch, f2, s.conv2_len, &params.bn2_gamma, &params.bn2_beta, run2, exec);
    relu_inplace(&mut a2);

    let (p2, p2_idx) = pool_batch(&a2, batch, f2, s.conv2_len, a.pool, exec);

    let mut hpre = vec![0.0; batch * h];
    exec.for_each_chunk(&mut hpre, h, |b, out| {
        dense(&p2[b * s.flat..(b + 1) * s.flat], &params.dense_w, &params.dense_b, out)
    });
    let mut hv = hpre.clone();
    relu_inplace(&mut hv);
    if let Some(m) = dropout {
        hv.iter_mut().zip(m).for_each(|(v, m)| *v *= m);
    }

    let mut logits = vec![0.0; batch * OUTPUTS];
    exec.for_each_chunk(&mut logits, OUTPUTS, |b, out| {
        dense(&hv[b * h..(b + 1) * h], &params.out_w, &params.out_b, out)
    });
    let probs = logits.chunks(OUTPUTS).map(|z| softmax2([z[0], z[1]])).collect();

    Ok(Cache {
        batch,
        shapes: s,
        x: x.to_vec(),
        bn1,
        a1,
        p1,
        p1_idx,
        bn2,
        a2,
        p2,
        p2_idx,
        hpre,
        h: hv,
        mask: dropout.map(<[f64]>::to_vec),
        probs,
    })
}

fn pool_batch(a: &[f64], batch: usize, ch: usize, len: usize, p: usize, exec: Exec) -> (Vec<f64>, Vec<u32>) {
    let per = ch * (len / p);
    let parts = exec.map(batch, |b| {
        let mut out = vec![0.0; per];
        let mut idx = vec![0u32; per];
        maxpool(&a[b * ch * len..(b + 1) * ch * len], ch, p, &mut out, &mut idx);
        (out, idx)
    });
    let mut out = Vec::with_capacity(batch * per);
    let mut idx = Vec::with_capacity(batch * per);
    for (o, i) in parts {
        out.extend(o);
        idx.extend(i);
    }
    (out, idx)
}

/// Exponential moving update of the running batch-norm statistics from a
/// training batch; the running variance uses the unbiased batch variance.
pub fn update_running_stats(params: &mut NetworkParameters, cache: &Cache) {
    let s = cache.shapes;
    let upd = |rm: &mut [f64], rv: &mut [f64], bn: &BnCache, n: usize| {
        let corr = if n > 1 { n as f64 / (n - 1) as f64 } else { 1.0 };
        for c in 0..rm.len() {
            rm[c] = (1.0 - BN_MOMENTUM) * rm[c] + BN_MOMENTUM * bn.mean[c];
            rv[c] = (1.0 - BN_MOMENTUM) * rv[c] + BN_MOMENTUM * bn.var[c] * corr;
        }
    };
    upd(&mut params.bn1_mean, &mut params.bn1_var, &cache.bn1, cache.batch * s.conv1_len);
    upd(&mut params.bn2_mean, &mut params.bn2_var, &cache.bn2, cache.batch * s.conv2_len);
}

/// Batch-norm backward. `dy` holds the gradient at the BN output and is
/// overwritten with the gradient at its input.
fn batchnorm_backward(
    dy: &mut [f64],
    bn: &BnCache,
    gamma: &[f64],
    batch: usize,
    channels: usize,
    len: usize,
    exec: Exec,
) -> (Vec<f64>, Vec<f64>) {
    let per = channels * len;
    let n = (batch * len) as f64;
    let sums: Vec<(f64, f64)> = exec.map(channels, |c| {
        let (mut sdy, mut sdyx) = (0.0, 0.0);
        for b in 0..batch {
            let o = b * per + c * len;
            for t in 0..len {
                sdy += dy[o + t];
                sdyx += dy[o + t] * bn.xhat[o + t];
            }
        }
        (sdy, sdyx)
    });
    let dbeta: Vec<f64> = sums.iter().map(|s| s.0).collect();
    let dgamma: Vec<f64> = sums.iter().map(|s| s.1).collect();
    exec.for_each_chunk(dy, per, |b, d| {
        for c in 0..channels {
            let k = gamma[c] * bn.inv_std[c] / n;
            for t in 0..len {
                let i = c * len + t;
                d[i] = k * (n * d[i] - dbeta[c] - bn.xhat[b * per + i] * dgamma[c]);
            }
        }
    });
    (dgamma, dbeta)
}

fn pool_backward(dp: &[f64], idx: &[u32], batch: usize, in_per: usize, exec: Exec) -> Vec<f64> {
    let out_per = dp.len() / batch;
    let mut da = vec![0.0; batch * in_per];
    exec.for_each_chunk(&mut da, in_per, |b, d| {
        for i in 0..out_per {
            d[idx[b * out_per + i] as usize] += dp[b * out_per + i];
        }
    });
    da
}

/// `(dw, db)` of a convolution over the batch, parallel over output filters.
fn conv_param_grads(
    dout: &[f64],
    input: &[f64],
    batch: usize,
    cin: usize,
    cout: usize,
    k: usize,
    exec: Exec,
) -> (Vec<f64>, Vec<f64>) {
    let olen = dout.len() / (batch * cout);
    let len = olen + k - 1;
    let per_grads = exec.map(cout, |o| {
        let mut dw = vec![0.0; cin * k];
        let mut db = 0.0;
        for b in 0..batch {
            let d = &dout[(b * cout + o) * olen..(b * cout + o + 1) * olen];
            db += d.iter().sum::<f64>();
            for c in 0..cin {
                let xi = &input[(b * cin + c) * len..(b * cin + c + 1) * len];
                for j in 0..k {
                    dw[c * k + j] += d.iter().zip(&xi[j..j + olen]).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
        (dw, db)
    });
    let mut dw = Vec::with_capacity(cout * cin * k);
    let mut db = Vec::with_capacity(cout);
    for (w, b) in per_grads {
        dw.extend(w);
        db.push(b);
    }
    (dw, db)
}

/// `(dw, db)` of a dense layer over the batch, parallel over output rows.
fn dense_param_grads(dout: &[f64], input: &[f64], batch: usize, nout: usize, exec: Exec) -> (Vec<f64>, Vec<f64>) {
    let nin = input.len() / batch;
    let mut dw = vec![0.0; nout * nin];
    exec.for_each_chunk(&mut dw, nin, |j, row| {
        for b in 0..batch {
            let g = dout[b * nout + j];
            if g == 0.0 {
                continue;
            }
            for (r, x) in row.iter_mut().zip(&input[b * nin..(b + 1) * nin]) {
                *r += g * x;
            }
        }
    });
    let db = (0..nout).map(|j| (0..batch).map(|b| dout[b * nout + j]).sum()).collect();
    (dw, db)
}

/// Gradients of a loss whose derivative with respect to each instance's
/// favorable probability is `dp`. Running statistics and the frozen
/// convolution biases are zero in the result.
pub fn backward(params: &NetworkParameters, cache: &Cache, dp: &[f64], exec: Exec) -> Result<NetworkParameters> {
    let batch = cache.batch;
    if dp.len() != batch {
        return Err(Error::Shape {
            expected: format!("{batch} probability gradients"),
            actual: dp.len().to_string(),
        });
    }
    let a = params.arch;
    let s = cache.shapes;
    let (f1, f2, k, h) = (a.conv1_filters, a.conv2_filters, a.kernel, a.hidden);
    let mut g = NetworkParameters::zeros(a)?;
    g.bn1_gamma.fill(0.0);
    g.bn2_gamma.fill(0.0);
    g.bn1_var.fill(0.0);
    g.bn2_var.fill(0.0);

    // p1 = σ(z1 - z0): ∂p1/∂z1 = p0 p1 = -∂p1/∂z0
    let mut dlogits = vec![0.0; batch * OUTPUTS];
    for b in 0..batch {
        let [p0, p1] = cache.probs[b];
        let d = dp[b] * p0 * p1;
        dlogits[b * 2] = -d;
        dlogits[b * 2 + 1] = d;
    }
    (g.out_w, g.out_b) = dense_param_grads(&dlogits, &cache.h, batch, OUTPUTS, exec);

    let mut dh = vec![0.0; batch * h];
    exec.for_each_chunk(&mut dh, h, |b, d| dense_input_grad(&dlogits[b * 2..b * 2 + 2], &params.out_w, d));
    if let Some(m) = &cache.mask {
        dh.iter_mut().zip(m).for_each(|(v, m)| *v *= m);
    }
    dh.iter_mut().zip(&cache.hpre).for_each(|(v, &z)| {
        if z <= 0.0 {
            *v = 0.0
        }
    });
    (g.dense_w, g.dense_b) = dense_param_grads(&dh, &cache.p2, batch, h, exec);

    let mut dp2 = vec![0.0; batch * s.flat];
    exec.for_each_chunk(&mut dp2, s.flat, |b, d| dense_input_grad(&dh[b * h..(b + 1) * h], &params.dense_w, d));

    let mut dz2 = pool_backward(&dp2, &cache.p2_idx, batch, f2 * s.conv2_len, exec);
    dz2.iter_mut().zip(&cache.a2).for_each(|(v, &a)| {
        if a <= 0.0 {
            *v = 0.0
        }
    });
    (g.bn2_gamma, g.bn2_beta) = batchnorm_backward(&mut dz2, &cache.bn2, &params.bn2_gamma, batch, f2, s.conv2_len, exec);
    (g.conv2_w, _) = conv_param_grads(&dz2, &cache.p1, batch, f1, f2, k, exec);

    let p1_per = f1 * s.pool1_len;
    let z2_per = f2 * s.conv2_len;
    let mut dp1 = vec![0.0; batch * p1_per];
    exec.for_each_chunk(&mut dp1, p1_per, |b, d| {
        conv1d_input_grad(&dz2[b * z2_per..(b + 1) * z2_per], f1, &params.conv2_w, k, f2, d)
    });
    let mut dz1 = pool_backward(&dp1, &cache.p1_idx, batch, f1 * s.conv1_len, exec);
    dz1.iter_mut().zip(&cache.a1).for_each(|(v, &a)| {
        if a <= 0.0 {
            *v = 0.0
        }
    });
    (g.bn1_gamma, g.bn1_beta) = batchnorm_backward(&mut dz1, &cache.bn1, &params.bn1_gamma, batch, f1, s.conv1_len, exec);
    (g.conv1_w, _) = conv_param_grads(&dz1, &cache.x, batch, 1, f1, k, exec);
    Ok(g)
}

/// Eval-mode predictions for every row of `x`.
pub fn predict_batch(params: &NetworkParameters, x: &[f64], exec: Exec) -> Result<Vec<Prediction>> {
    let l = params.arch.input_len;
    if l == 0 || x.len() % l != 0 || x.is_empty() {
        return Err(Error::Shape {
            expected: format!("multiple of {l} inputs"),
            actual: format!("{} values", x.len()),
        });
    }
    let n = x.len() / l;
    let rows = exec.map(n, |i| {
        forward(params, &x[i * l..(i + 1) * l], 1, Mode::Eval, Exec::Sequential).map(|c| c.predictions()[0])
    });
    rows.into_iter().collect()
}

/// Eval-mode prediction for one instance.
pub fn predict(params: &NetworkParameters, instance: &[f64]) -> Result<Prediction> {
    if instance.len() != params.arch.input_len {
        return Err(Error::Shape {
            expected: format!("{} inputs", params.arch.input_len),
            actual: instance.len().to_string(),
        });
    }
    Ok(forward(params, instance, 1, Mode::Eval, Exec::Sequential)?.predictions()[0])
}
