//! Small numeric helpers shared by the extractors.

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub(crate) fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Linear-interpolation quantile of sorted data at position `(n - 1) * p`.
pub(crate) fn quantile_sorted(s: &[f64], p: f64) -> f64 {
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

pub(crate) fn median(x: &[f64]) -> f64 {
    quantile_sorted(&sorted(x), 0.5)
}

pub(crate) const HIST_BINS: usize = 10;

/// Relative frequencies over `HIST_BINS` equal-width bins spanning
/// `[min, max]`; the bin of `x` is `floor(BINS * (x - min) / (max - min))`,
/// with `max` folded into the last bin. A constant series puts all mass in
/// bin 0.
pub(crate) fn histogram(x: &[f64], min: f64, max: f64) -> [f64; HIST_BINS] {
    let mut h = [0.0; HIST_BINS];
    let range = max - min;
    for &v in x {
        let b = if range > 0.0 {
            ((HIST_BINS as f64 * (v - min) / range).floor() as usize).min(HIST_BINS - 1)
        } else {
            0
        };
        h[b] += 1.0;
    }
    let n = x.len() as f64;
    h.iter_mut().for_each(|v| *v /= n);
    h
}

/// Shannon entropy in nats of a probability vector, `0 ln 0 = 0`.
pub(crate) fn shannon(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

/// Least-squares slope of `y` against `x`; 0 when `x` has no spread.
pub(crate) fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

pub(crate) fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

pub(crate) fn is_constant(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] == w[1])
}
