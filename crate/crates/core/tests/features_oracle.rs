mod common;

use common::{close, fixtures, naive_dft, Lcg, TOL};
use fairpain::features::spectral::dft;
use fairpain::features::{extract_spectral, extract_statistical, extract_temporal, Domain};

fn compare(domain: &str, label: &str, names: &[String], got: &[f64], want: &[f64]) -> Vec<String> {
    assert_eq!(got.len(), want.len(), "{domain} width");
    names
        .iter()
        .zip(got.iter().zip(want))
        .filter(|(_, (g, w))| !close(**g, **w, TOL))
        .map(|(n, (g, w))| format!("{label} {domain}.{n}: got {g}, oracle {w}"))
        .collect()
}

#[test]
fn every_feature_matches_its_oracle() {
    let mut bad = Vec::new();
    for (label, x, fs) in fixtures() {
        let s = extract_statistical(&x).unwrap();
        bad.extend(compare("statistical", label, s.names, &s.values, &common::statistical(&x)));
        let t = extract_temporal(&x).unwrap();
        bad.extend(compare("temporal", label, t.names, &t.values, &common::temporal(&x)));
        let p = extract_spectral(&x, fs).unwrap();
        bad.extend(compare("spectral", label, p.names, &p.values, &common::spectral(&x, fs)));
    }
    assert!(bad.is_empty(), "{} mismatches:\n{}", bad.len(), bad.join("\n"));
}

#[test]
fn fixture_set_covers_every_domain() {
    let widths: usize = Domain::ALL.iter().map(|d| d.feature_names().len()).sum();
    assert_eq!(widths, 36 + 18 + 64);
    assert_eq!(fixtures().len(), 10);
}

#[test]
fn fft_agrees_with_naive_dft() {
    let mut r = Lcg(11);
    for n in [8, 9, 60, 127, 1440] {
        let x: Vec<f64> = (0..n).map(|_| r.normal()).collect();
        let fast = dft(&x);
        for (a, b) in fast.iter().zip(naive_dft(&x)) {
            assert!((a.re - b.0).abs() < 1e-9 && (a.im - b.1).abs() < 1e-9);
        }
    }
}

#[test]
fn parseval_holds() {
    for (label, x, _) in fixtures() {
        let time: f64 = x.iter().map(|v| v * v).sum();
        let freq: f64 = dft(&x).iter().map(|c| c.norm_sqr()).sum::<f64>() / x.len() as f64;
        assert!((time - freq).abs() <= 1e-6 * time.max(f64::MIN_POSITIVE), "{label}");
    }
}

#[test]
fn sine_fundamental_within_one_bin() {
    let fs = 1.0 / 60.0;
    for (n, cycles) in [(1440usize, 24.0), (1440, 7.3), (500, 40.5), (257, 3.0)] {
        let x: Vec<f64> = (0..n)
            .map(|t| 80.0 + 4.0 * (2.0 * std::f64::consts::PI * cycles * t as f64 / n as f64 + 0.4).sin())
            .collect();
        let f = extract_spectral(&x, fs).unwrap();
        let bin = fs / n as f64;
        let got = f.get("fundamental_frequency").unwrap();
        assert!((got - cycles * bin).abs() <= bin, "n={n} cycles={cycles}: {got}");
    }
}

#[test]
fn white_noise_median_frequency_near_middle() {
    let mut r = Lcg(5);
    let x: Vec<f64> = (0..4096).map(|_| r.normal()).collect();
    let f = extract_spectral(&x, 1.0).unwrap();
    // flat spectrum over (0, 0.5]: half the power sits below 0.25
    let m = f.get("median_frequency").unwrap();
    assert!((m - 0.25).abs() < 0.03, "{m}");
    assert!(f.get("spectral_entropy").unwrap() > 0.9);
}

#[test]
fn human_band_energy_needs_fast_sampling() {
    let x: Vec<f64> = (0..600).map(|t| (2.0 * std::f64::consts::PI * 1.5 * t as f64 / 10.0).sin()).collect();
    let fast = extract_spectral(&x, 10.0).unwrap();
    assert!(fast.get("human_range_energy").unwrap() > 0.99);
    let slow = extract_spectral(&x, 1.0 / 60.0).unwrap();
    assert_eq!(slow.get("human_range_energy"), Some(0.0));
}
