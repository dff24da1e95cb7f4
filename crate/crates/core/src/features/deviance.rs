//! Day-over-day deviance transforms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::{Error, Result};

/// Clamp applied before taking logarithms.
pub const LOG_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DevianceVariant {
    /// `x_d - x_{d-1}`
    Mathematical,
    /// `ln max(x_d, ε) - ln max(x_{d-1}, ε)`
    Logarithmic,
    /// `cos x_d · cos x_{d-1}`
    Cosine,
    /// `ln cosh(x_d - x_{d-1})`
    Logcosh,
}

impl DevianceVariant {
    pub const ALL: [DevianceVariant; 4] = [
        DevianceVariant::Mathematical,
        DevianceVariant::Logarithmic,
        DevianceVariant::Cosine,
        DevianceVariant::Logcosh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DevianceVariant::Mathematical => "mathematical",
            DevianceVariant::Logarithmic => "logarithmic",
            DevianceVariant::Cosine => "cosine",
            DevianceVariant::Logcosh => "logcosh",
        }
    }

    pub fn apply(self, cur: f64, prev: f64) -> f64 {
        match self {
            DevianceVariant::Mathematical => cur - prev,
            DevianceVariant::Logarithmic => cur.max(LOG_EPSILON).ln() - prev.max(LOG_EPSILON).ln(),
            DevianceVariant::Cosine => cur.cos() * prev.cos(),
            DevianceVariant::Logcosh => logcosh(cur - prev),
        }
    }
}

impl fmt::Display for DevianceVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DevianceVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DevianceVariant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown deviance variant `{s}`")))
    }
}

/// `ln cosh x` without overflow for large `|x|`.
pub fn logcosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevianceVector {
    pub variant: DevianceVariant,
    pub keys: Vec<String>,
    pub values: Vec<f64>,
}

/// Element-wise deviance of `current` against `previous`.
pub fn deviance(current: &FeatureVector, previous: &FeatureVector, variant: DevianceVariant) -> Result<DevianceVector> {
    if current.keys != previous.keys {
        let first = current
            .keys
            .iter()
            .zip(&previous.keys)
            .find(|(a, b)| a != b)
            .map(|(a, b)| format!("`{a}` vs `{b}`"))
            .unwrap_or_else(|| format!("{} vs {} keys", current.keys.len(), previous.keys.len()));
        return Err(Error::KeyMismatch(first));
    }
    Ok(DevianceVector {
        variant,
        keys: current.keys.clone(),
        values: current
            .values
            .iter()
            .zip(&previous.values)
            .map(|(&c, &p)| variant.apply(c, p))
            .collect(),
    })
}
