use serde::{Deserialize, Serialize};

use super::check_lengths;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RocConfig {
    pub threshold: f64,
    pub margin: f64,
}

impl Default for RocConfig {
    fn default() -> Self {
        RocConfig { threshold: 0.5, margin: 0.1 }
    }
}

impl RocConfig {
    pub fn validate(&self) -> Result<()> {
        let t = self.threshold;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::invalid(format!("threshold {t} outside (0, 1)")));
        }
        if !(self.margin >= 0.0 && self.margin < t.min(1.0 - t)) {
            return Err(Error::invalid(format!("margin {} outside [0, {})", self.margin, t.min(1.0 - t))));
        }
        Ok(())
    }
}

/// Thresholds favorable scores (class 1 when `score > threshold`), except
/// that scores strictly inside the margin go to the favorable class for the
/// unprivileged group and the unfavorable class for the privileged group.
pub fn roc_adjust(scores: &[f64], group: &[u8], cfg: RocConfig) -> Result<Vec<u8>> {
    cfg.validate()?;
    check_lengths(scores.len(), group.len(), "group entries")?;
    Ok(scores
        .iter()
        .zip(group)
        .map(|(&s, &g)| {
            if (s - cfg.threshold).abs() < cfg.margin {
                u8::from(g == 0)
            } else {
                u8::from(s > cfg.threshold)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_margin_is_thresholding() {
        let cfg = RocConfig { threshold: 0.5, margin: 0.0 };
        assert_eq!(roc_adjust(&[0.2, 0.5, 0.7, 0.5], &[0, 0, 1, 1], cfg).unwrap(), vec![0, 0, 1, 0]);
    }

    #[test]
    fn margin_rule() {
        let out = roc_adjust(&[0.45, 0.55, 0.95, 0.05], &[0, 1, 1, 0], RocConfig::default()).unwrap();
        assert_eq!(out, vec![1, 0, 1, 0]);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(roc_adjust(&[0.5], &[0], RocConfig { threshold: 0.0, margin: 0.0 }).is_err());
        assert!(roc_adjust(&[0.5], &[0], RocConfig { threshold: 0.3, margin: 0.3 }).is_err());
    }
}
