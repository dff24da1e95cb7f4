use serde::{Deserialize, Serialize};

use super::{check_cols, normalized_weights};
use crate::{Matrix, Result};

/// Features at or above this count as 1.
pub const BINARIZE_AT: f64 = 0.5;
/// Laplace smoothing for the feature probabilities.
pub const NB_ALPHA: f64 = 1.0;

pub fn binarize(x: f64) -> bool {
    x >= BINARIZE_AT
}

/// Bernoulli naive Bayes tables over binarised features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    /// Weighted class priors `[P(y=0), P(y=1)]`.
    pub priors: [f64; 2],
    /// `feature_probs[c][j] = P(x_j = 1 | y = c)`.
    pub feature_probs: [Vec<f64>; 2],
}

pub fn train_naive_bayes(m: &Matrix, labels: &[u8], weights: Option<&[f64]>) -> Result<NaiveBayes> {
    let w = normalized_weights(m, labels, weights)?;
    let d = m.cols();
    let mut class_w = [0.0; 2];
    let mut ones = [vec![0.0; d], vec![0.0; d]];
    for i in 0..m.rows() {
        let c = labels[i] as usize;
        class_w[c] += w[i];
        for (o, &x) in ones[c].iter_mut().zip(m.row(i)) {
            if binarize(x) {
                *o += w[i];
            }
        }
    }
    let total = class_w[0] + class_w[1];
    let probs = |c: usize| ones[c].iter().map(|o| (o + NB_ALPHA) / (class_w[c] + 2.0 * NB_ALPHA)).collect();
    Ok(NaiveBayes {
        priors: [class_w[0] / total, class_w[1] / total],
        feature_probs: [probs(0), probs(1)],
    })
}

impl NaiveBayes {
    fn log_joint(&self, row: &[f64]) -> [f64; 2] {
        [0, 1].map(|c| {
            self.priors[c].ln()
                + row
                    .iter()
                    .zip(&self.feature_probs[c])
                    .map(|(&x, &p)| if binarize(x) { p.ln() } else { (1.0 - p).ln() })
                    .sum::<f64>()
        })
    }

    pub fn predict_proba(&self, m: &Matrix) -> Result<Vec<f64>> {
        check_cols(self.feature_probs[0].len(), m)?;
        Ok((0..m.rows())
            .map(|i| {
                let [a, b] = self.log_joint(m.row(i));
                if b == f64::NEG_INFINITY {
                    0.0
                } else {
                    1.0 / (1.0 + (a - b).exp())
                }
            })
            .collect())
    }

    /// Maximum posterior; ties go to class 0.
    pub fn predict(&self, m: &Matrix) -> Result<Vec<u8>> {
        check_cols(self.feature_probs[0].len(), m)?;
        Ok((0..m.rows())
            .map(|i| {
                let [a, b] = self.log_joint(m.row(i));
                u8::from(b > a)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predictive_feature() {
        let m = Matrix::from_vec(4, 2, vec![0.9, 0.3, 0.1, 0.3, 0.8, 0.7, 0.0, 0.6]).unwrap();
        let nb = train_naive_bayes(&m, &[1, 0, 1, 0], None).unwrap();
        assert_eq!(nb.predict(&m).unwrap(), vec![1, 0, 1, 0]);
        assert!(nb.feature_probs.iter().flatten().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn uniform_features_give_weighted_majority() {
        let m = Matrix::from_vec(3, 1, vec![0.2; 3]).unwrap();
        let nb = train_naive_bayes(&m, &[1, 0, 0], Some(&[5.0, 1.0, 1.0])).unwrap();
        assert_eq!(nb.predict(&m).unwrap(), vec![1, 1, 1]);
        let nb = train_naive_bayes(&m, &[1, 0, 0], None).unwrap();
        assert_eq!(nb.predict(&m).unwrap(), vec![0, 0, 0]);
    }

    #[test]
    fn tie_goes_to_zero() {
        let m = Matrix::from_vec(2, 1, vec![0.7, 0.7]).unwrap();
        let nb = train_naive_bayes(&m, &[1, 0], None).unwrap();
        assert_eq!(nb.predict(&m).unwrap(), vec![0, 0]);
    }
}
