//! Statistical-domain features.
//!
//! For a series `x` of length `n` with sorted copy `s`, mean `μ` and central
//! moments `m_k = mean((x - μ)^k)`:
//!
//! | feature | definition |
//! |---------|------------|
//! | `ecdf_0..9` | fraction of samples `<= min + (j + 0.5) / 10 * (max - min)` |
//! | `ecdf_percentile_0/1` | smallest sample whose ECDF reaches 0.2 / 0.8 |
//! | `ecdf_percentile_count_0/1` | number of samples `<=` that percentile value |
//! | `histogram_0..9` | relative frequency in 10 equal bins over `[min, max]` |
//! | `iqr` | `Q(0.75) - Q(0.25)`, `Q` the linear-interpolation quantile at `(n - 1) p` |
//! | `kurtosis` | `m_4 / m_2^2 - 3`, 0 for a constant series |
//! | `max`, `min`, `mean`, `median` | as named (`median = Q(0.5)`) |
//! | `mean_abs_deviation` | `mean(|x - μ|)` |
//! | `median_abs_deviation` | `median(|x - median(x)|)` |
//! | `rms` | `sqrt(mean(x^2))` |
//! | `skewness` | `m_3 / m_2^1.5`, 0 for a constant series |
//! | `std`, `variance` | sample (n - 1) estimators |

use super::stats::{histogram, is_constant, mean, min_max, quantile_sorted, sorted, HIST_BINS};
use super::{expand_names, NamedValues};
use crate::{Error, Result};

pub(crate) const ECDF_POINTS: usize = 10;
pub(crate) const PERCENTILES: [f64; 2] = [0.2, 0.8];
/// Slack when comparing an ECDF step `k / n` against a percentile level.
pub(crate) const PERCENTILE_SLACK: f64 = 1e-12;

pub(crate) const BASE: &[(&str, usize)] = &[
    ("ecdf", ECDF_POINTS),
    ("ecdf_percentile", PERCENTILES.len()),
    ("ecdf_percentile_count", PERCENTILES.len()),
    ("histogram", HIST_BINS),
    ("iqr", 1),
    ("kurtosis", 1),
    ("max", 1),
    ("mean", 1),
    ("mean_abs_deviation", 1),
    ("median", 1),
    ("median_abs_deviation", 1),
    ("min", 1),
    ("rms", 1),
    ("skewness", 1),
    ("std", 1),
    ("variance", 1),
];

static NAMES: std::sync::LazyLock<Vec<String>> = std::sync::LazyLock::new(|| expand_names(BASE));

pub fn names() -> &'static [String] {
    &NAMES
}

/// Statistical features of `x` (length at least 2), in [`names`] order.
pub fn extract_statistical(x: &[f64]) -> Result<NamedValues> {
    if x.len() < 2 {
        return Err(Error::SeriesTooShort {
            required: 2,
            actual: x.len(),
        });
    }
    let n = x.len();
    let nf = n as f64;
    let s = sorted(x);
    let (min, max) = min_max(x);
    let mu = mean(x);
    let mut out = Vec::with_capacity(NAMES.len());

    for j in 0..ECDF_POINTS {
        let t = min + (j as f64 + 0.5) / ECDF_POINTS as f64 * (max - min);
        let count = s.partition_point(|&v| v <= t);
        out.push(count as f64 / nf);
    }
    let pct: Vec<f64> = PERCENTILES
        .iter()
        .map(|&p| {
            let k = ((p * nf - PERCENTILE_SLACK * nf).ceil() as usize).clamp(1, n);
            s[k - 1]
        })
        .collect();
    out.extend_from_slice(&pct);
    for &v in &pct {
        out.push(s.partition_point(|&w| w <= v) as f64);
    }
    out.extend_from_slice(&histogram(x, min, max));

    out.push(quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25));
    let (mut m2, mut m3, mut m4, mut mad) = (0.0, 0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mu;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        mad += d.abs();
    }
    let constant = is_constant(x);
    let (skew, kurt) = if constant || m2 == 0.0 {
        (0.0, 0.0)
    } else {
        let m2n = m2 / nf;
        ((m3 / nf) / m2n.powf(1.5), (m4 / nf) / (m2n * m2n) - 3.0)
    };
    let med = quantile_sorted(&s, 0.5);
    let abs_dev: Vec<f64> = x.iter().map(|v| (v - med).abs()).collect();
    let var = m2 / (nf - 1.0);

    out.push(kurt);
    out.push(max);
    out.push(mu);
    out.push(mad / nf);
    out.push(med);
    out.push(quantile_sorted(&sorted(&abs_dev), 0.5));
    out.push(min);
    out.push((x.iter().map(|v| v * v).sum::<f64>() / nf).sqrt());
    out.push(skew);
    out.push(var.sqrt());
    out.push(var);
    debug_assert_eq!(out.len(), NAMES.len());
    Ok(NamedValues::new(&NAMES, out))
}
