//! Central-difference gradient checking.

use rand::Rng as _;

use super::arch::Arch;
use super::loss::{bce_eval_full, mafl_eval, LossEval, LossKind, PROB_CLIP};
use super::model::{backward, forward, Cache, Mode};
use super::params::NetworkParameters;
use crate::exec::Exec;
use crate::rng::seeded;
use crate::Result;

pub const DEFAULT_STEP: f64 = 1e-4;
/// Step shrink factors tried when a perturbation crosses a kink.
const RETRIES: [f64; 3] = [1.0, 0.1, 0.01];

#[derive(Debug, Clone)]
pub struct GradCheckCase {
    pub x: Vec<f64>,
    pub batch: usize,
    pub labels: Vec<u8>,
    pub masks: Vec<Vec<u8>>,
    pub loss: LossKind,
    pub lambda: f64,
    pub reg_coef: f64,
    pub dropout: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `tensor[index]` of the worst coordinate.
    pub worst: String,
    pub checked: usize,
    /// Coordinates where every step crossed a ReLU, pooling, clip or
    /// absolute-value kink.
    pub skipped: usize,
}

impl GradCheckCase {
    fn eval(&self, params: &NetworkParameters) -> Result<(Cache, LossEval)> {
        let cache = forward(params, &self.x, self.batch, Mode::Train { dropout: self.dropout.as_deref() }, Exec::Sequential)?;
        let p = cache.favorable();
        let e = match self.loss {
            LossKind::Bce => bce_eval_full(&self.labels, &p, None)?,
            LossKind::Mafl => mafl_eval(&self.labels, &p, None, &self.masks, self.lambda, self.reg_coef)?,
        };
        Ok((cache, e))
    }
}

type Pattern = ((Vec<bool>, Vec<u32>, Vec<u32>), Vec<i8>, Vec<bool>);

fn pattern(cache: &Cache) -> Pattern {
    let p = cache.favorable();
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    let signs = p.iter().map(|v| (v - mean).partial_cmp(&0.0).map_or(0, |o| o as i8)).collect();
    let clipped = p.iter().map(|&v| !(PROB_CLIP..=1.0 - PROB_CLIP).contains(&v)).collect();
    (cache.pattern(), signs, clipped)
}

/// Largest relative error `|a - n| / max(1e-8, |a| + |n|)` between analytic
/// and central-difference gradients over every trainable coordinate.
pub fn grad_check(params: &NetworkParameters, case: &GradCheckCase, step: f64) -> Result<GradCheckReport> {
    let (cache, base) = case.eval(params)?;
    let analytic = backward(params, &cache, &base.grad, Exec::Sequential)?;
    let base_pattern = pattern(&cache);
    let specs = params.tensor_specs();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: String::new(),
        checked: 0,
        skipped: 0,
    };
    let mut probe = params.clone();
    for (t, (name, _, trainable)) in specs.iter().enumerate() {
        if !trainable {
            continue;
        }
        for i in 0..params.tensors()[t].len() {
            let orig = params.tensors()[t][i];
            let mut numeric = None;
            for shrink in RETRIES {
                let h = step * shrink;
                probe.tensors_mut()[t][i] = orig + h;
                let (cp, ep) = case.eval(&probe)?;
                probe.tensors_mut()[t][i] = orig - h;
                let (cm, em) = case.eval(&probe)?;
                probe.tensors_mut()[t][i] = orig;
                if pattern(&cp) == base_pattern && pattern(&cm) == base_pattern {
                    numeric = Some((ep.terms.total - em.terms.total) / (2.0 * h));
                    break;
                }
            }
            let Some(n) = numeric else {
                report.skipped += 1;
                continue;
            };
            let a = analytic.tensors()[t][i];
            let rel = (a - n).abs() / (a.abs() + n.abs()).max(1e-8);
            report.checked += 1;
            if rel > report.max_rel_error || report.worst.is_empty() {
                report.max_rel_error = rel;
                report.worst = format!("{name}[{i}]");
            }
        }
    }
    Ok(report)
}

/// Seeded reduced network with a random batch holding both groups of every
/// mask and a frozen dropout mask.
pub fn reduced_fixture(seed: u64, loss: LossKind, batch: usize, attributes: usize) -> Result<(NetworkParameters, GradCheckCase)> {
    let arch = Arch::reduced();
    let mut params = NetworkParameters::init(arch, seed)?;
    let mut r = seeded(seed ^ 0x5EED);
    // Non-trivial batch-norm affine parameters.
    for v in params.bn1_gamma.iter_mut().chain(params.bn2_gamma.iter_mut()) {
        *v = 0.5 + r.random::<f64>();
    }
    for v in params.bn1_beta.iter_mut().chain(params.bn2_beta.iter_mut()) {
        *v = r.random::<f64>() - 0.5;
    }
    for v in params.dense_b.iter_mut() {
        *v = 0.2 * (r.random::<f64>() - 0.5);
    }
    let x = (0..batch * arch.input_len).map(|_| r.random::<f64>()).collect();
    let labels = (0..batch).map(|i| (i % 2) as u8).collect();
    let masks = (0..attributes)
        .map(|k| {
            let mut m: Vec<u8> = (0..batch).map(|_| u8::from(r.random::<bool>())).collect();
            m[k % batch] = 1;
            m[(k + 1) % batch] = 0;
            m
        })
        .collect();
    let keep = 0.75;
    let dropout = Some(
        (0..batch * arch.hidden)
            .map(|_| if r.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect(),
    );
    Ok((
        params,
        GradCheckCase {
            x,
            batch,
            labels,
            masks,
            loss,
            lambda: 1.0,
            reg_coef: 0.01,
            dropout,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_gradients_match() {
        let (p, case) = reduced_fixture(1, LossKind::Bce, 6, 1).unwrap();
        let r = grad_check(&p, &case, DEFAULT_STEP).unwrap();
        assert!(r.max_rel_error < 1e-4, "{r:?}");
        assert!(r.checked > 0);
    }

    #[test]
    fn mafl_gradients_match() {
        let (p, case) = reduced_fixture(2, LossKind::Mafl, 6, 2).unwrap();
        let r = grad_check(&p, &case, DEFAULT_STEP).unwrap();
        assert!(r.max_rel_error < 1e-4, "{r:?}");
    }

    #[test]
    fn single_group_batch_still_checks() {
        let (p, mut case) = reduced_fixture(3, LossKind::Mafl, 6, 1).unwrap();
        case.masks = vec![vec![1; 6]];
        let r = grad_check(&p, &case, DEFAULT_STEP).unwrap();
        assert!(r.max_rel_error < 1e-4, "{r:?}");
    }

    #[test]
    fn backward_is_repeatable() {
        let (p, case) = reduced_fixture(4, LossKind::Mafl, 6, 1).unwrap();
        let (c, e) = case.eval(&p).unwrap();
        let a = backward(&p, &c, &e.grad, Exec::Sequential).unwrap();
        let b = backward(&p, &c, &e.grad, Exec::Sequential).unwrap();
        assert_eq!(a, b);
    }
}
