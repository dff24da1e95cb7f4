//! Temporal-domain features. Time is the sample index `t = 0..n-1` and
//! `Δx_t = x_{t+1} - x_t`.
//!
//! | feature | definition |
//! |---------|------------|
//! | `abs_energy` | `Σ x_t^2` |
//! | `auc` | trapezoidal area, `Σ (x_t + x_{t+1}) / 2` |
//! | `autocorrelation` | lag-1, `Σ (x_t - μ)(x_{t+1} - μ) / Σ (x_t - μ)^2`, 0 for a constant series |
//! | `centroid` | energy-weighted time, `Σ t x_t^2 / Σ x_t^2`, 0 for zero energy |
//! | `entropy` | Shannon entropy (nats) of the 10-bin value histogram |
//! | `mean_abs_diff`, `median_abs_diff` | mean / median of `|Δx|` |
//! | `mean_diff`, `median_diff` | mean / median of `Δx` |
//! | `negative_turning_points` | count of `x_{t-1} < x_t > x_{t+1}` (slope turns negative) |
//! | `peak_to_peak` | `max - min` |
//! | `positive_turning_points` | count of `x_{t-1} > x_t < x_{t+1}` (slope turns positive) |
//! | `signal_distance` | `Σ sqrt(1 + Δx_t^2)` |
//! | `slope` | least-squares slope of `x` on `t` |
//! | `sum_abs_diff` | `Σ |Δx|` |
//! | `total_energy` | `Σ x_t^2 / (n - 1)` |
//! | `zero_crossing_rate` | number of `t` with `sign(x_t) != sign(x_{t+1})`, sign in {-1, 0, 1} |
//! | `neighbourhood_peaks` | count of `t` with `x_t` strictly above every sample within 10 positions |

use super::stats::{histogram, is_constant, ls_slope, mean, median, min_max, shannon};
use super::{expand_names, NamedValues};
use crate::{Error, Result};

pub(crate) const PEAK_WINDOW: usize = 10;

pub(crate) const BASE: &[(&str, usize)] = &[
    ("abs_energy", 1),
    ("auc", 1),
    ("autocorrelation", 1),
    ("centroid", 1),
    ("entropy", 1),
    ("mean_abs_diff", 1),
    ("mean_diff", 1),
    ("median_abs_diff", 1),
    ("median_diff", 1),
    ("negative_turning_points", 1),
    ("peak_to_peak", 1),
    ("positive_turning_points", 1),
    ("signal_distance", 1),
    ("slope", 1),
    ("sum_abs_diff", 1),
    ("total_energy", 1),
    ("zero_crossing_rate", 1),
    ("neighbourhood_peaks", 1),
];

static NAMES: std::sync::LazyLock<Vec<String>> = std::sync::LazyLock::new(|| expand_names(BASE));

pub fn names() -> &'static [String] {
    &NAMES
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

pub(crate) fn neighbourhood_peaks(x: &[f64], w: usize) -> usize {
    if x.len() <= 2 * w {
        return 0;
    }
    (w..x.len() - w)
        .filter(|&i| (i - w..=i + w).all(|j| j == i || x[i] > x[j]))
        .count()
}

/// Temporal features of `x` (length at least 3), in [`names`] order.
pub fn extract_temporal(x: &[f64]) -> Result<NamedValues> {
    if x.len() < 3 {
        return Err(Error::SeriesTooShort {
            required: 3,
            actual: x.len(),
        });
    }
    let n = x.len();
    let mu = mean(x);
    let diff: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let abs_diff: Vec<f64> = diff.iter().map(|d| d.abs()).collect();
    let energy: f64 = x.iter().map(|v| v * v).sum();
    let (min, max) = min_max(x);

    let autocorr = {
        let den: f64 = x.iter().map(|v| (v - mu) * (v - mu)).sum();
        if is_constant(x) || den == 0.0 {
            0.0
        } else {
            x.windows(2).map(|w| (w[0] - mu) * (w[1] - mu)).sum::<f64>() / den
        }
    };
    let centroid = if energy > 0.0 {
        x.iter().enumerate().map(|(t, v)| t as f64 * v * v).sum::<f64>() / energy
    } else {
        0.0
    };
    let (mut neg_turn, mut pos_turn) = (0usize, 0usize);
    for w in x.windows(3) {
        if w[0] < w[1] && w[1] > w[2] {
            neg_turn += 1;
        }
        if w[0] > w[1] && w[1] < w[2] {
            pos_turn += 1;
        }
    }
    let t: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let crossings = x.windows(2).filter(|w| sign(w[0]) != sign(w[1])).count();

    let out = vec![
        energy,
        x.windows(2).map(|w| (w[0] + w[1]) / 2.0).sum(),
        autocorr,
        centroid,
        shannon(&histogram(x, min, max)),
        mean(&abs_diff),
        mean(&diff),
        median(&abs_diff),
        median(&diff),
        neg_turn as f64,
        max - min,
        pos_turn as f64,
        diff.iter().map(|d| (1.0 + d * d).sqrt()).sum(),
        ls_slope(&t, x),
        abs_diff.iter().sum(),
        energy / (n - 1) as f64,
        crossings as f64,
        neighbourhood_peaks(x, PEAK_WINDOW) as f64,
    ];
    debug_assert_eq!(out.len(), NAMES.len());
    Ok(NamedValues::new(&NAMES, out))
}
