//! Spectral-domain features.
//!
//! The series is mean-centred and transformed with a length-`L` DFT. Bins
//! `k = 1..=L/2` (DC excluded) at frequencies `f_k = k fs / L` form the
//! spectrum used below, with magnitude `M_k = |X_k|`, power `P_k = M_k^2 / L`,
//! total power `T = Σ P_k` and normalised power `p_k = P_k / T`.
//!
//! If the series is constant, or `T <= 1e-20 Σ x^2`, the signal has zero
//! power and every spectral feature is 0.
//!
//! | feature | definition |
//! |---------|------------|
//! | `fft_mean_coefficient` | `mean(M_k)` |
//! | `fundamental_frequency` | `f_k` at the first maximum of `M_k` |
//! | `human_range_energy` | `Σ_{0.6 <= f_k <= 2.5 Hz} P_k / T` (always 0 below 5 Hz sampling) |
//! | `lpcc_0..11` | LPC cepstrum `c_1..c_12` of an order-12 autocorrelation-method LPC fit |
//! | `mfcc_0..11` | orthonormal DCT-II coefficients 0..11 of log mel energies from 20 triangular filters over `[0, fs/2]` |
//! | `max_power_spectrum` | `max P_k` |
//! | `max_frequency` | first `f_k` where cumulative `p` reaches 0.95 |
//! | `median_frequency` | first `f_k` where cumulative `p` reaches 0.5 |
//! | `power_bandwidth` | span between first and last `f_k` with `P_k >= max P / 2` |
//! | `spectral_centroid` | `c = Σ f_k p_k` |
//! | `spectral_decrease` | `Σ_{k>=2} (M_k - M_1) / (k - 1) / Σ_{k>=2} M_k` |
//! | `spectral_distance` | `Σ_i (line_i - C_i)`, `C` the cumulative magnitude and `line` the straight ramp from 0 to `C_last` |
//! | `spectral_entropy` | `-Σ p_k ln p_k / ln K`, `K` the number of bins |
//! | `spectral_kurtosis` | `Σ (f_k - c)^4 p_k / σ^4` |
//! | `spectral_positive_turning_points` | local minima of `M_k` (slope turns positive) |
//! | `spectral_roll_off`, `spectral_roll_on` | first `f_k` where cumulative `p` reaches 0.85 / 0.05 |
//! | `spectral_skewness` | `Σ (f_k - c)^3 p_k / σ^3` |
//! | `spectral_slope` | least-squares slope of `M_k` on `f_k` |
//! | `spectral_spread` | `σ = sqrt(Σ (f_k - c)^2 p_k)` |
//! | `spectral_variation` | `1 - Σ M_k M_{k+1} / sqrt(Σ M_k^2 Σ M_{k+1}^2)` over adjacent bins |
//! | `wavelet_abs_mean_0..4` | mean `|d|` of Haar detail coefficients at levels 1..5 |
//! | `wavelet_energy_0..4` | `Σ d^2` per level |
//! | `wavelet_std_0..4`, `wavelet_variance_0..4` | population std / variance of `d` per level |
//! | `wavelet_entropy` | Shannon entropy (nats) of the per-level energy shares |
//!
//! Skewness and kurtosis are 0 when the spread is below a millionth of a
//! bin width. Haar levels drop an odd trailing sample; a level with no
//! coefficients contributes zeros.

use std::cell::RefCell;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::stats::{is_constant, ls_slope, mean, shannon};
use super::{expand_names, NamedValues};
use crate::{Error, Result};

pub const HUMAN_BAND_HZ: (f64, f64) = (0.6, 2.5);
pub const LPC_ORDER: usize = 12;
pub const MEL_FILTERS: usize = 20;
pub const MFCC_COEFFS: usize = 12;
pub const WAVELET_LEVELS: usize = 5;
pub(crate) const ZERO_POWER_REL: f64 = 1e-20;
pub(crate) const MEL_FLOOR_REL: f64 = 1e-10;
pub(crate) const SPREAD_FLOOR_BINS: f64 = 1e-6;
pub(crate) const CUMULATIVE_LEVELS: [f64; 4] = [0.95, 0.5, 0.85, 0.05];

pub(crate) const BASE: &[(&str, usize)] = &[
    ("fft_mean_coefficient", 1),
    ("fundamental_frequency", 1),
    ("human_range_energy", 1),
    ("lpcc", LPC_ORDER),
    ("mfcc", MFCC_COEFFS),
    ("max_power_spectrum", 1),
    ("max_frequency", 1),
    ("median_frequency", 1),
    ("power_bandwidth", 1),
    ("spectral_centroid", 1),
    ("spectral_decrease", 1),
    ("spectral_distance", 1),
    ("spectral_entropy", 1),
    ("spectral_kurtosis", 1),
    ("spectral_positive_turning_points", 1),
    ("spectral_roll_off", 1),
    ("spectral_roll_on", 1),
    ("spectral_skewness", 1),
    ("spectral_slope", 1),
    ("spectral_spread", 1),
    ("spectral_variation", 1),
    ("wavelet_abs_mean", WAVELET_LEVELS),
    ("wavelet_energy", WAVELET_LEVELS),
    ("wavelet_std", WAVELET_LEVELS),
    ("wavelet_entropy", 1),
    ("wavelet_variance", WAVELET_LEVELS),
];

static NAMES: std::sync::LazyLock<Vec<String>> = std::sync::LazyLock::new(|| expand_names(BASE));

pub fn names() -> &'static [String] {
    &NAMES
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Full complex DFT of `x`.
pub fn dft(x: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    if buf.is_empty() {
        return buf;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(&mut buf);
    buf
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// LPC coefficients `a_1..a_p` by Levinson-Durbin on the autocorrelation
/// sequence `r_0..r_p`, for the predictor `x_t ≈ Σ a_j x_{t-j}`.
pub(crate) fn levinson(r: &[f64], order: usize) -> Vec<f64> {
    let mut a = vec![0.0; order + 1];
    let mut err = r[0];
    if err <= 0.0 {
        return vec![0.0; order];
    }
    for i in 1..=order {
        let mut acc = r[i];
        for j in 1..i {
            acc -= a[j] * r[i - j];
        }
        let k = acc / err;
        let prev = a.clone();
        a[i] = k;
        for j in 1..i {
            a[j] = prev[j] - k * prev[i - j];
        }
        err *= 1.0 - k * k;
        if err <= 0.0 {
            break;
        }
    }
    a[1..].to_vec()
}

/// Cepstrum `c_1..c_p` of the all-pole model with coefficients `a`.
pub(crate) fn lpc_cepstrum(a: &[f64]) -> Vec<f64> {
    let p = a.len();
    let mut c = vec![0.0; p + 1];
    for m in 1..=p {
        let mut v = a[m - 1];
        for k in 1..m {
            v += (k as f64 / m as f64) * c[k] * a[m - k - 1];
        }
        c[m] = v;
    }
    c[1..].to_vec()
}

pub(crate) fn haar_details(x: &[f64], levels: usize) -> Vec<Vec<f64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut approx = x.to_vec();
    let mut out = Vec::with_capacity(levels);
    for _ in 0..levels {
        let half = approx.len() / 2;
        let mut next = Vec::with_capacity(half);
        let mut detail = Vec::with_capacity(half);
        for i in 0..half {
            let (a, b) = (approx[2 * i], approx[2 * i + 1]);
            next.push((a + b) * s);
            detail.push((a - b) * s);
        }
        out.push(detail);
        approx = next;
    }
    out
}

fn first_reaching(cum: &[f64], level: f64) -> usize {
    cum.iter().position(|&c| c >= level).unwrap_or(cum.len() - 1)
}

/// Spectral features of `x` (length at least 8) sampled at `fs` Hz, in
/// [`names`] order.
pub fn extract_spectral(x: &[f64], fs: f64) -> Result<NamedValues> {
    let n = x.len();
    if n < 8 {
        return Err(Error::SeriesTooShort {
            required: 8,
            actual: n,
        });
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::invalid(format!("sample rate {fs} must be positive")));
    }
    let zeros = || Ok(NamedValues::new(&NAMES, vec![0.0; NAMES.len()]));
    if is_constant(x) {
        return zeros();
    }
    let mu = mean(x);
    let c: Vec<f64> = x.iter().map(|v| v - mu).collect();
    let spec = dft(&c);
    let nf = n as f64;
    let kmax = n / 2;
    let freqs: Vec<f64> = (1..=kmax).map(|k| k as f64 * fs / nf).collect();
    let mags: Vec<f64> = (1..=kmax).map(|k| spec[k].norm()).collect();
    let power: Vec<f64> = mags.iter().map(|m| m * m / nf).collect();
    let total: f64 = power.iter().sum();
    let raw_energy: f64 = x.iter().map(|v| v * v).sum();
    if total <= ZERO_POWER_REL * raw_energy {
        return zeros();
    }
    let p: Vec<f64> = power.iter().map(|v| v / total).collect();
    let kbins = mags.len();

    let mut out = Vec::with_capacity(NAMES.len());
    out.push(mean(&mags));
    let peak = mags
        .iter()
        .enumerate()
        .fold(0, |best, (i, &m)| if m > mags[best] { i } else { best });
    out.push(freqs[peak]);
    out.push(
        freqs
            .iter()
            .zip(&power)
            .filter(|(f, _)| (HUMAN_BAND_HZ.0..=HUMAN_BAND_HZ.1).contains(*f))
            .map(|(_, v)| v)
            .sum::<f64>()
            / total,
    );

    let r: Vec<f64> = (0..=LPC_ORDER)
        .map(|lag| if lag < n { (0..n - lag).map(|t| c[t] * c[t + lag]).sum() } else { 0.0 })
        .collect();
    out.extend(lpc_cepstrum(&levinson(&r, LPC_ORDER)));

    out.extend(mfcc(&spec, fs));

    let max_power = power.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    out.push(max_power);
    let mut cum = Vec::with_capacity(kbins);
    let mut run = 0.0;
    for v in &p {
        run += v;
        cum.push(run);
    }
    let roll: Vec<f64> = CUMULATIVE_LEVELS.iter().map(|&q| freqs[first_reaching(&cum, q)]).collect();
    out.push(roll[0]);
    out.push(roll[1]);
    let half = max_power / 2.0;
    let first = power.iter().position(|&v| v >= half).unwrap();
    let last = power.iter().rposition(|&v| v >= half).unwrap();
    out.push(freqs[last] - freqs[first]);

    let centroid: f64 = freqs.iter().zip(&p).map(|(f, w)| f * w).sum();
    let moment = |k: i32| -> f64 { freqs.iter().zip(&p).map(|(f, w)| (f - centroid).powi(k) * w).sum() };
    let spread = moment(2).sqrt();
    let (skew, kurt) = if spread > SPREAD_FLOOR_BINS * fs / nf {
        (moment(3) / spread.powi(3), moment(4) / spread.powi(4))
    } else {
        (0.0, 0.0)
    };
    out.push(centroid);
    let decrease = {
        let den: f64 = mags[1..].iter().sum();
        if den > 0.0 {
            mags[1..]
                .iter()
                .enumerate()
                .map(|(i, m)| (m - mags[0]) / (i + 1) as f64)
                .sum::<f64>()
                / den
        } else {
            0.0
        }
    };
    out.push(decrease);
    let distance = if kbins > 1 {
        let mut cm = 0.0;
        let cmag: Vec<f64> = mags
            .iter()
            .map(|m| {
                cm += m;
                cm
            })
            .collect();
        let last = cmag[kbins - 1];
        cmag.iter()
            .enumerate()
            .map(|(i, v)| last * i as f64 / (kbins - 1) as f64 - v)
            .sum()
    } else {
        0.0
    };
    out.push(distance);
    out.push(if kbins > 1 { shannon(&p) / (kbins as f64).ln() } else { 0.0 });
    out.push(kurt);
    out.push(mags.windows(3).filter(|w| w[0] > w[1] && w[1] < w[2]).count() as f64);
    out.push(roll[2]);
    out.push(roll[3]);
    out.push(skew);
    out.push(ls_slope(&freqs, &mags));
    out.push(spread);
    let variation = {
        let (mut num, mut a2, mut b2) = (0.0, 0.0, 0.0);
        for w in mags.windows(2) {
            num += w[0] * w[1];
            a2 += w[0] * w[0];
            b2 += w[1] * w[1];
        }
        let den = (a2 * b2).sqrt();
        if den > 0.0 {
            1.0 - num / den
        } else {
            0.0
        }
    };
    out.push(variation);

    let details = haar_details(&c, WAVELET_LEVELS);
    let energies: Vec<f64> = details.iter().map(|d| d.iter().map(|v| v * v).sum()).collect();
    let per_level = |f: &dyn Fn(&[f64]) -> f64| -> Vec<f64> {
        details.iter().map(|d| if d.is_empty() { 0.0 } else { f(d) }).collect()
    };
    let pop_var = |d: &[f64]| {
        let m = mean(d);
        d.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / d.len() as f64
    };
    out.extend(per_level(&|d| d.iter().map(|v| v.abs()).sum::<f64>() / d.len() as f64));
    out.extend(energies.iter().copied());
    out.extend(per_level(&|d| pop_var(d).sqrt()));
    let e_total: f64 = energies.iter().sum();
    out.push(if e_total > 0.0 {
        shannon(&energies.iter().map(|e| e / e_total).collect::<Vec<_>>())
    } else {
        0.0
    });
    out.extend(per_level(&pop_var));

    debug_assert_eq!(out.len(), NAMES.len());
    Ok(NamedValues::new(&NAMES, out))
}

/// Mel-frequency cepstral coefficients from the one-sided power spectrum of
/// `spec` (the DFT of the centred series).
fn mfcc(spec: &[Complex<f64>], fs: f64) -> Vec<f64> {
    let n = spec.len();
    let nf = n as f64;
    let mel_max = hz_to_mel(fs / 2.0);
    let edges: Vec<f64> = (0..MEL_FILTERS + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (MEL_FILTERS + 1) as f64))
        .collect();
    let mut energies = vec![0.0; MEL_FILTERS];
    for k in 0..=n / 2 {
        let f = k as f64 * fs / nf;
        let pk = spec[k].norm_sqr() / nf;
        for (m, e) in energies.iter_mut().enumerate() {
            let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            let w = if f >= lo && f <= mid {
                (f - lo) / (mid - lo)
            } else if f > mid && f <= hi {
                (hi - f) / (hi - mid)
            } else {
                0.0
            };
            *e += w * pk;
        }
    }
    let emax = energies.iter().cloned().fold(0.0, f64::max);
    if emax <= 0.0 {
        return vec![0.0; MFCC_COEFFS];
    }
    let floor = MEL_FLOOR_REL * emax;
    let logs: Vec<f64> = energies.iter().map(|e| e.max(floor).ln()).collect();
    let mf = MEL_FILTERS as f64;
    (0..MFCC_COEFFS)
        .map(|j| {
            let scale = if j == 0 { (1.0 / mf).sqrt() } else { (2.0 / mf).sqrt() };
            scale
                * logs
                    .iter()
                    .enumerate()
                    .map(|(m, l)| l * (std::f64::consts::PI * j as f64 * (m as f64 + 0.5) / mf).cos())
                    .sum::<f64>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 1.0 / 60.0;

    #[test]
    fn constant_signal_is_zero_power() {
        let f = extract_spectral(&[72.0; 64], FS).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0));
        assert_eq!(f.get("spectral_entropy"), Some(0.0));
    }

    #[test]
    fn pure_sine_peak() {
        let n = 1440;
        let cycles = 24.0;
        let x: Vec<f64> = (0..n)
            .map(|t| 70.0 + 5.0 * (2.0 * std::f64::consts::PI * cycles * t as f64 / n as f64).sin())
            .collect();
        let f = extract_spectral(&x, FS).unwrap();
        let f0 = cycles * FS / n as f64;
        let bin = FS / n as f64;
        assert!((f.get("fundamental_frequency").unwrap() - f0).abs() <= bin);
        assert!((f.get("spectral_centroid").unwrap() - f0).abs() <= 0.05 * f0);
        assert_eq!(f.get("human_range_energy"), Some(0.0));
    }

    #[test]
    fn levinson_recovers_ar1() {
        // r_k = 0.5^k is the autocorrelation of an AR(1) with coefficient 0.5.
        let r: Vec<f64> = (0..=4).map(|k| 0.5f64.powi(k)).collect();
        let a = levinson(&r, 4);
        assert!((a[0] - 0.5).abs() < 1e-12);
        assert!(a[1..].iter().all(|v| v.abs() < 1e-12));
        let c = lpc_cepstrum(&a);
        // log(1/(1 - 0.5 z^-1)) = Σ 0.5^m / m z^-m
        for (m, v) in c.iter().enumerate() {
            let m = (m + 1) as i32;
            assert!((v - 0.5f64.powi(m) / m as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_levels() {
        let d = haar_details(&[1.0, 3.0, 2.0, 2.0, 5.0], 3);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(d[0].len(), 2);
        assert!((d[0][0] - (-2.0 * s)).abs() < 1e-15);
        assert_eq!(d[0][1], 0.0);
        assert_eq!(d[1].len(), 1);
        assert!(d[2].is_empty());
    }

    #[test]
    fn base_feature_count() {
        assert_eq!(BASE.len(), 26);
        assert_eq!(names().len(), 64);
        assert!(extract_spectral(&[1.0; 7], FS).is_err());
        assert!(extract_spectral(&[1.0; 8], 0.0).is_err());
    }
}
