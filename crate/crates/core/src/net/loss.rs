//! Binary cross-entropy and the multi-attribute fairness loss.
//!
//! With favorable probabilities `p`, labels `y`, weights `w` and privileged
//! masks `m_k`:
//!
//! ```text
//! bce        = Σ w_i ℓ_i / Σ w_i,  ℓ_i = -[y ln p̃ + (1 - y) ln(1 - p̃)],  p̃ = clip(p, 1e-7, 1 - 1e-7)
//! disparity  = Σ_k (mean(p | m_k = 1) - mean(p | m_k = 0))^2
//! dispersion = Σ_i |p_i - mean(p)|
//! mafl       = bce + λ disparity + reg dispersion
//! ```
//!
//! Attributes whose mask holds a single group within the batch add nothing to
//! the disparity. The derivative of `|·|` and of the clip is taken as 0 at
//! their kinks.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const PROB_CLIP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Bce,
    Mafl,
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bce" => Ok(LossKind::Bce),
            "mafl" => Ok(LossKind::Mafl),
            _ => Err(Error::invalid(format!("unknown loss `{s}`"))),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::Bce => "bce",
            LossKind::Mafl => "mafl",
        })
    }
}

/// Loss value split into its addends, already multiplied by their
/// coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTerms {
    pub bce: f64,
    pub disparity: f64,
    pub dispersion: f64,
    pub total: f64,
}

/// Loss together with its derivative in each favorable probability.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub terms: LossTerms,
    pub grad: Vec<f64>,
    /// Mask indices skipped because the batch held one group only.
    pub skipped: Vec<usize>,
}

fn check(y_true: &[u8], y_pred: &[f64], weights: Option<&[f64]>) -> Result<()> {
    if y_pred.is_empty() {
        return Err(Error::invalid("loss of an empty batch"));
    }
    if y_true.len() != y_pred.len() || weights.is_some_and(|w| w.len() != y_pred.len()) {
        return Err(Error::Shape {
            expected: format!("{} labels and weights", y_pred.len()),
            actual: format!("{} labels", y_true.len()),
        });
    }
    Ok(())
}

/// `x_0 + mean(x - x_0)`, exact when every value is equal.
fn shifted_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut first = None;
    let (mut s, mut n) = (0.0, 0usize);
    for v in values {
        let f = *first.get_or_insert(v);
        s += v - f;
        n += 1;
    }
    first.map_or(0.0, |f| f + s / n as f64)
}

fn bce_eval(y_true: &[u8], y_pred: &[f64], weights: Option<&[f64]>) -> (f64, Vec<f64>) {
    let n = y_pred.len();
    let wsum: f64 = weights.map_or(n as f64, |w| w.iter().sum());
    let mut total = 0.0;
    let mut grad = vec![0.0; n];
    for i in 0..n {
        let w = weights.map_or(1.0, |w| w[i]);
        let p = y_pred[i].clamp(PROB_CLIP, 1.0 - PROB_CLIP);
        let clipped = p != y_pred[i];
        let (l, d) = if y_true[i] == 1 { (-p.ln(), -1.0 / p) } else { (-(1.0 - p).ln(), 1.0 / (1.0 - p)) };
        total += w * l;
        if !clipped {
            grad[i] = w * d / wsum;
        }
    }
    (total / wsum, grad)
}

/// Weighted mean binary cross-entropy on clipped probabilities.
pub fn bce_loss(y_true: &[u8], y_pred: &[f64], weights: Option<&[f64]>) -> Result<f64> {
    check(y_true, y_pred, weights)?;
    Ok(bce_eval(y_true, y_pred, weights).0)
}

/// Fairness loss value, addends and gradient. `masks[k][i]` is 1 when
/// instance `i` belongs to the privileged group of attribute `k`.
pub fn mafl_eval(
    y_true: &[u8],
    y_pred: &[f64],
    weights: Option<&[f64]>,
    masks: &[Vec<u8>],
    lambda: f64,
    reg_coef: f64,
) -> Result<LossEval> {
    check(y_true, y_pred, weights)?;
    let n = y_pred.len();
    if let Some(m) = masks.iter().find(|m| m.len() != n) {
        return Err(Error::Shape {
            expected: format!("{n} group entries"),
            actual: m.len().to_string(),
        });
    }
    let (bce, mut grad) = bce_eval(y_true, y_pred, weights);

    let mut disparity = 0.0;
    let mut skipped = Vec::new();
    for (k, m) in masks.iter().enumerate() {
        let n_prv = m.iter().filter(|&&g| g == 1).count();
        let n_unprv = n - n_prv;
        if n_prv == 0 || n_unprv == 0 {
            log::debug!("fairness term {k} skipped: batch holds one group");
            skipped.push(k);
            continue;
        }
        let group = |want: u8| y_pred.iter().zip(m).filter(move |(_, &g)| g == want).map(|(p, _)| *p);
        let d = shifted_mean(group(1)) - shifted_mean(group(0));
        disparity += d * d;
        let (gp, gu) = (2.0 * lambda * d / n_prv as f64, -2.0 * lambda * d / n_unprv as f64);
        for (gi, &g) in grad.iter_mut().zip(m) {
            *gi += if g == 1 { gp } else { gu };
        }
    }

    let mean = shifted_mean(y_pred.iter().copied());
    let signs: Vec<f64> = y_pred
        .iter()
        .map(|p| {
            let d = p - mean;
            if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect();
    let dispersion: f64 = y_pred.iter().map(|p| (p - mean).abs()).sum();
    let sign_mean = signs.iter().sum::<f64>() / n as f64;
    for (gi, s) in grad.iter_mut().zip(&signs) {
        *gi += reg_coef * (s - sign_mean);
    }

    let terms = LossTerms {
        bce,
        disparity: lambda * disparity,
        dispersion: reg_coef * dispersion,
        total: bce + lambda * disparity + reg_coef * dispersion,
    };
    Ok(LossEval { terms, grad, skipped })
}

/// Fairness loss with its addends.
pub fn mafl_loss(
    y_true: &[u8],
    y_pred: &[f64],
    masks: &[Vec<u8>],
    lambda: f64,
    reg_coef: f64,
) -> Result<LossTerms> {
    Ok(mafl_eval(y_true, y_pred, None, masks, lambda, reg_coef)?.terms)
}

/// BCE value and gradient in the same shape as [`mafl_eval`].
pub fn bce_eval_full(y_true: &[u8], y_pred: &[f64], weights: Option<&[f64]>) -> Result<LossEval> {
    check(y_true, y_pred, weights)?;
    let (bce, grad) = bce_eval(y_true, y_pred, weights);
    Ok(LossEval {
        terms: LossTerms {
            bce,
            total: bce,
            ..Default::default()
        },
        grad,
        skipped: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bce_closed_forms() {
        assert!((bce_loss(&[1], &[0.5], None).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((bce_loss(&[1, 0], &[0.8, 0.2], None).unwrap() - 0.8f64.ln().abs()).abs() < 1e-15);
        assert!(bce_loss(&[1, 0], &[1.0, 0.0], None).unwrap() <= 1e-6);
        assert!(bce_loss(&[], &[], None).is_err());
    }

    #[test]
    fn mafl_hand_example() {
        let t = mafl_loss(&[1, 0], &[0.8, 0.2], &[vec![1, 0]], 1.0, 0.01).unwrap();
        assert!((t.bce - 0.22314355131420976).abs() < 1e-12);
        assert!((t.disparity - 0.36).abs() < 1e-12);
        assert!((t.dispersion - 0.006).abs() < 1e-12);
        assert!((t.total - 0.58914355131420976).abs() < 1e-12);
    }

    #[test]
    fn uniform_predictions_have_no_penalty() {
        let t = mafl_loss(&[1, 0, 1], &[0.4; 3], &[vec![1, 0, 0], vec![0, 1, 1]], 1.0, 0.01).unwrap();
        assert_eq!(t.disparity, 0.0);
        assert_eq!(t.dispersion, 0.0);
        assert_eq!(t.total, t.bce);
    }

    #[test]
    fn single_group_mask_is_skipped() {
        let e = mafl_eval(&[1, 0], &[0.9, 0.3], None, &[vec![1, 1], vec![1, 0]], 1.0, 0.0).unwrap();
        assert_eq!(e.skipped, vec![0]);
        assert!((e.terms.disparity - 0.36).abs() < 1e-12);
    }

    #[test]
    fn disparity_gradient_closed_form() {
        let p = [0.7, 0.4, 0.1, 0.6];
        let m = vec![1, 1, 0, 0];
        let e = mafl_eval(&[0; 4], &p, None, &[m], 2.0, 0.0).unwrap();
        let base = bce_eval(&[0; 4], &p, None).1;
        let d = (0.7 + 0.4) / 2.0 - (0.1 + 0.6) / 2.0;
        for i in 0..4 {
            let expected = 2.0 * 2.0 * d * if i < 2 { 0.5 } else { -0.5 };
            assert!((e.grad[i] - base[i] - expected).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn reduces_to_bce(p in proptest::collection::vec(0.0f64..1.0, 1..20), seed in any::<u64>()) {
            let y: Vec<u8> = (0..p.len()).map(|i| ((seed >> (i % 64)) & 1) as u8).collect();
            let m: Vec<u8> = (0..p.len()).map(|i| ((seed >> ((i + 7) % 64)) & 1) as u8).collect();
            let t = mafl_loss(&y, &p, &[m], 0.0, 0.0).unwrap();
            prop_assert_eq!(t.total, bce_loss(&y, &p, None).unwrap());
            prop_assert!(t.total >= 0.0);
        }

        #[test]
        fn permutation_invariant(p in proptest::collection::vec(0.01f64..0.99, 2..12)) {
            let n = p.len();
            let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
            let m: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
            let a = mafl_loss(&y, &p, &[m.clone()], 1.0, 0.01).unwrap();
            let rev = |v: &[u8]| v.iter().rev().copied().collect::<Vec<_>>();
            let pr: Vec<f64> = p.iter().rev().copied().collect();
            let b = mafl_loss(&rev(&y), &pr, &[rev(&m)], 1.0, 0.01).unwrap();
            prop_assert!((a.total - b.total).abs() < 1e-12);
        }
    }
}
