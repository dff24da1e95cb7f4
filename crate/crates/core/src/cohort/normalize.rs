use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

/// Per-column `(min, max)` fitted on training data.
///
/// Constant columns map to 0. Values outside the fitted range, which can only
/// occur on held-out data, are clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub ranges: Vec<(f64, f64)>,
}

impl MinMaxScaler {
    pub fn fit(m: &Matrix) -> Result<Self> {
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); m.cols()];
        for r in 0..m.rows() {
            for (c, &v) in m.row(r).iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::invalid(format!("non-finite value at row {r}, column {c}")));
                }
                let (lo, hi) = &mut ranges[c];
                *lo = lo.min(v);
                *hi = hi.max(v);
            }
        }
        if m.rows() == 0 {
            ranges.iter_mut().for_each(|r| *r = (0.0, 0.0));
        }
        Ok(MinMaxScaler { ranges })
    }

    pub fn transform(&self, m: &Matrix) -> Result<Matrix> {
        if m.cols() != self.ranges.len() {
            return Err(Error::Shape {
                expected: format!("{} columns", self.ranges.len()),
                actual: format!("{} columns", m.cols()),
            });
        }
        let mut out = m.clone();
        for r in 0..out.rows() {
            for (v, &(lo, hi)) in out.row_mut(r).iter_mut().zip(&self.ranges) {
                if !v.is_finite() {
                    return Err(Error::invalid(format!("non-finite value at row {r}")));
                }
                *v = if hi > lo { ((*v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
            }
        }
        Ok(out)
    }

    /// Inverse map. Constant columns come back as their constant.
    pub fn inverse_transform(&self, m: &Matrix) -> Matrix {
        let mut out = m.clone();
        for r in 0..out.rows() {
            for (v, &(lo, hi)) in out.row_mut(r).iter_mut().zip(&self.ranges) {
                *v = if hi > lo { lo + *v * (hi - lo) } else { lo };
            }
        }
        out
    }
}

/// Fits a scaler on `m` and returns the normalised matrix with it.
pub fn minmax_normalize(m: &Matrix) -> Result<(Matrix, MinMaxScaler)> {
    let scaler = MinMaxScaler::fit(m)?;
    Ok((scaler.transform(m)?, scaler))
}
