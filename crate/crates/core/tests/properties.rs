use fairpain::baselines::{train_decision_tree, train_logistic, train_naive_bayes, LogisticConfig, TreeConfig};
use fairpain::fairness::{aod, dataset_bias, disparate_impact, eod, spd, GroupedOutcomes};
use fairpain::features::{extract_spectral, extract_statistical, extract_temporal};
use fairpain::mitigation::{dir_repair, reweigh, roc_adjust, RocConfig};
use fairpain::Matrix;
use proptest::collection::vec;
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// `(prediction, label, group, weight)` rows with both groups present.
fn outcomes() -> impl Strategy<Value = Vec<(u8, u8, u8, f64)>> {
    vec((0u8..2, 0u8..2, 0u8..2, 0.1f64..5.0), 4..40).prop_map(|mut rows| {
        rows[0].2 = 0;
        rows[1].2 = 1;
        rows
    })
}

fn unzip(rows: &[(u8, u8, u8, f64)]) -> (Vec<u8>, Vec<u8>, Vec<u8>, Vec<f64>) {
    let mut out = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &(p, l, g, w) in rows {
        out.0.push(p);
        out.1.push(l);
        out.2.push(g);
        out.3.push(w);
    }
    out
}

fn weighted_rate(rows: &[(u8, u8, u8, f64)], g: u8, label: Option<u8>) -> Option<f64> {
    let sel: Vec<_> = rows.iter().filter(|r| r.2 == g && label.is_none_or(|l| r.1 == l)).collect();
    let den: f64 = sel.iter().map(|r| r.3).sum();
    (den > 0.0).then(|| sel.iter().filter(|r| r.0 == 1).map(|r| r.3).sum::<f64>() / den)
}

fn series() -> impl Strategy<Value = Vec<f64>> {
    vec(-50.0f64..50.0, 16..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn weighted_metrics_match_oracle(rows in outcomes()) {
        let (p, l, g, w) = unzip(&rows);
        let v = GroupedOutcomes::new(&p, Some(&l), &g, Some(&w)).unwrap();
        let (u, pr) = (weighted_rate(&rows, 0, None).unwrap(), weighted_rate(&rows, 1, None).unwrap());
        prop_assert!(close(spd(&v).unwrap(), u - pr, 1e-12));
        if pr > 0.0 {
            prop_assert!(close(disparate_impact(&v).unwrap(), u / pr, 1e-12));
        }
        let tpr = (weighted_rate(&rows, 0, Some(1)), weighted_rate(&rows, 1, Some(1)));
        let fpr = (weighted_rate(&rows, 0, Some(0)), weighted_rate(&rows, 1, Some(0)));
        match tpr {
            (Some(a), Some(b)) => prop_assert!(close(eod(&v).unwrap(), a - b, 1e-12)),
            _ => prop_assert!(eod(&v).is_err()),
        }
        if let ((Some(ta), Some(tb)), (Some(fa), Some(fb))) = (tpr, fpr) {
            prop_assert!(close(aod(&v).unwrap(), ((fa - fb) + (ta - tb)) / 2.0, 1e-12));
        }
    }

    #[test]
    fn metrics_ignore_uniform_weight_scale(rows in outcomes(), c in 0.01f64..100.0) {
        let (p, l, g, w) = unzip(&rows);
        let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
        let a = GroupedOutcomes::new(&p, Some(&l), &g, Some(&w)).unwrap();
        let b = GroupedOutcomes::new(&p, Some(&l), &g, Some(&scaled)).unwrap();
        prop_assert!((spd(&a).unwrap() - spd(&b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn swapping_groups_negates_spd(rows in outcomes()) {
        let (p, _, g, _) = unzip(&rows);
        let flipped: Vec<u8> = g.iter().map(|v| 1 - v).collect();
        let a = spd(&GroupedOutcomes::new(&p, None, &g, None).unwrap()).unwrap();
        let b = spd(&GroupedOutcomes::new(&p, None, &flipped, None).unwrap()).unwrap();
        prop_assert!((a + b).abs() < 1e-15);
    }

    #[test]
    fn reweighing_zeroes_spd_and_keeps_mass(rows in vec((0u8..2, 0u8..2), 4..200)) {
        let mut rows = rows;
        rows[0] = (0, 0);
        rows[1] = (0, 1);
        rows[2] = (1, 0);
        rows[3] = (1, 1);
        let labels: Vec<u8> = rows.iter().map(|r| r.0).collect();
        let group: Vec<u8> = rows.iter().map(|r| r.1).collect();
        let (_, w) = reweigh(&labels, &group).unwrap();
        let (s, di) = dataset_bias(&labels, &group, Some(&w)).unwrap();
        prop_assert!(s.abs() < 1e-12);
        prop_assert!((di - 1.0).abs() < 1e-12);
        prop_assert!((w.iter().sum::<f64>() - labels.len() as f64).abs() < 1e-9);
    }

    #[test]
    fn dir_keeps_within_group_order(rows in vec((-10.0f64..10.0, 0u8..2), 6..80), level in 0.0f64..=1.0) {
        let x: Vec<f64> = rows.iter().map(|r| (r.0 * 4.0).round() / 4.0).collect();
        let g: Vec<u8> = rows.iter().map(|r| r.1).collect();
        let m = Matrix::from_vec(x.len(), 1, x.clone()).unwrap();
        let (out, _) = dir_repair(&m, &g, level).unwrap();
        let r = out.column(0);
        for i in 0..x.len() {
            for j in 0..x.len() {
                if g[i] != g[j] {
                    continue;
                }
                if x[i] < x[j] {
                    prop_assert!(r[i] <= r[j], "{} {} -> {} {}", x[i], x[j], r[i], r[j]);
                }
                if x[i] == x[j] {
                    prop_assert_eq!(r[i], r[j]);
                }
            }
        }
    }

    #[test]
    fn dir_level_interpolates_to_full_repair(rows in vec((-10.0f64..10.0, 0u8..2), 6..60), level in 0.0f64..=1.0) {
        let x: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let g: Vec<u8> = rows.iter().map(|r| r.1).collect();
        let m = Matrix::from_vec(x.len(), 1, x.clone()).unwrap();
        let full = dir_repair(&m, &g, 1.0).unwrap().0.column(0);
        let part = dir_repair(&m, &g, level).unwrap().0.column(0);
        let lower = dir_repair(&m, &g, level / 2.0).unwrap().0.column(0);
        for i in 0..x.len() {
            prop_assert!(close(part[i], (1.0 - level) * x[i] + level * full[i], 1e-12));
            // moving toward the target never overshoots
            prop_assert!((part[i] - full[i]).abs() <= (lower[i] - full[i]).abs() + 1e-12);
        }
    }

    #[test]
    fn roc_margin_is_monotone(rows in vec((0.0f64..1.0, 0u8..2), 1..80), m1 in 0.0f64..0.2, m2 in 0.0f64..0.2) {
        let (lo, hi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
        let scores: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let g: Vec<u8> = rows.iter().map(|r| r.1).collect();
        let plain = roc_adjust(&scores, &g, RocConfig { threshold: 0.5, margin: 0.0 }).unwrap();
        let a = roc_adjust(&scores, &g, RocConfig { threshold: 0.5, margin: lo }).unwrap();
        let b = roc_adjust(&scores, &g, RocConfig { threshold: 0.5, margin: hi }).unwrap();
        for i in 0..scores.len() {
            if a[i] != plain[i] {
                prop_assert_eq!(b[i], a[i]);
            }
            // unprivileged only gain, privileged only lose
            if g[i] == 0 {
                prop_assert!(b[i] >= a[i] && a[i] >= plain[i]);
            } else {
                prop_assert!(b[i] <= a[i] && a[i] <= plain[i]);
            }
        }
    }

    #[test]
    fn shift_leaves_shape_features_unchanged(x in series(), c in -100.0f64..100.0) {
        prop_assume!(x.windows(2).any(|w| w[0] != w[1]));
        let y: Vec<f64> = x.iter().map(|v| v + c).collect();
        let pairs = [
            (extract_statistical(&x).unwrap(), extract_statistical(&y).unwrap(), &["variance", "iqr"][..]),
            (
                extract_temporal(&x).unwrap(),
                extract_temporal(&y).unwrap(),
                &[
                    "mean_diff",
                    "median_diff",
                    "mean_abs_diff",
                    "median_abs_diff",
                    "sum_abs_diff",
                    "signal_distance",
                    "positive_turning_points",
                    "negative_turning_points",
                ][..],
            ),
            (
                extract_spectral(&x, 1.0).unwrap(),
                extract_spectral(&y, 1.0).unwrap(),
                &[
                    "spectral_centroid",
                    "spectral_spread",
                    "spectral_entropy",
                    "spectral_skewness",
                    "spectral_kurtosis",
                    "median_frequency",
                    "spectral_roll_off",
                    "max_power_spectrum",
                    "fft_mean_coefficient",
                ][..],
            ),
        ];
        for (a, b, names) in &pairs {
            for &name in *names {
                prop_assert!(close(b.get(name).unwrap(), a.get(name).unwrap(), 1e-9), "{}", name);
            }
        }
    }

    #[test]
    fn scale_multiplies_location_and_spread(x in series(), k in 0.1f64..10.0) {
        let y: Vec<f64> = x.iter().map(|v| k * v).collect();
        let (sa, sb) = (extract_statistical(&x).unwrap(), extract_statistical(&y).unwrap());
        for name in ["mean", "std", "median", "iqr"] {
            prop_assert!(close(sb.get(name).unwrap(), k * sa.get(name).unwrap(), 1e-9), "{}", name);
        }
        for name in ["skewness", "kurtosis"] {
            prop_assert!(close(sb.get(name).unwrap(), sa.get(name).unwrap(), 1e-9), "{}", name);
        }
        let (ta, tb) = (extract_temporal(&x).unwrap(), extract_temporal(&y).unwrap());
        for name in ["peak_to_peak", "slope", "mean_diff"] {
            prop_assert!(close(tb.get(name).unwrap(), k * ta.get(name).unwrap(), 1e-9), "{}", name);
        }
        let (pa, pb) = (extract_spectral(&x, 1.0).unwrap(), extract_spectral(&y, 1.0).unwrap());
        prop_assert!(close(pb.get("spectral_centroid").unwrap(), pa.get("spectral_centroid").unwrap(), 1e-9));
    }
}

fn toy(n: usize, seed: u64) -> (Matrix, Vec<u8>, Vec<f64>) {
    let mut s = seed;
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut weights = Vec::new();
    for _ in 0..n {
        let row = [next(), next(), next()];
        labels.push(u8::from(row[0] + 0.5 * row[1] + 0.3 * next() > 0.9));
        weights.push(0.2 + next());
        data.extend(row);
    }
    (Matrix::from_vec(n, 3, data).unwrap(), labels, weights)
}

#[test]
fn baselines_ignore_power_of_two_weight_scale() {
    let (m, y, w) = toy(120, 9);
    for c in [0.125, 8.0] {
        let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
        let cfg = LogisticConfig::default();
        assert_eq!(
            train_logistic(&m, &y, Some(&w), cfg).unwrap(),
            train_logistic(&m, &y, Some(&scaled), cfg).unwrap()
        );
        assert_eq!(train_naive_bayes(&m, &y, Some(&w)).unwrap(), train_naive_bayes(&m, &y, Some(&scaled)).unwrap());
        let t = TreeConfig::default();
        assert_eq!(
            train_decision_tree(&m, &y, Some(&w), t).unwrap(),
            train_decision_tree(&m, &y, Some(&scaled), t).unwrap()
        );
    }
}

#[test]
fn baselines_predictions_ignore_any_weight_scale() {
    let (m, y, w) = toy(150, 4);
    let scaled: Vec<f64> = w.iter().map(|v| v * 3.7).collect();
    let cfg = LogisticConfig::default();
    let a = train_logistic(&m, &y, Some(&w), cfg).unwrap().predict(&m).unwrap();
    let b = train_logistic(&m, &y, Some(&scaled), cfg).unwrap().predict(&m).unwrap();
    assert_eq!(a, b);
    let a = train_decision_tree(&m, &y, Some(&w), TreeConfig::default()).unwrap().predict(&m).unwrap();
    let b = train_decision_tree(&m, &y, Some(&scaled), TreeConfig::default()).unwrap().predict(&m).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unit_weights_equal_no_weights() {
    let (m, y, _) = toy(80, 2);
    let ones = vec![1.0; 80];
    let cfg = LogisticConfig::default();
    assert_eq!(train_logistic(&m, &y, None, cfg).unwrap(), train_logistic(&m, &y, Some(&ones), cfg).unwrap());
    assert_eq!(train_naive_bayes(&m, &y, None).unwrap(), train_naive_bayes(&m, &y, Some(&ones)).unwrap());
}

#[test]
fn baselines_learn_the_toy_rule() {
    let (m, y, _) = toy(300, 17);
    let acc = |p: Vec<u8>| p.iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64;
    assert!(acc(train_logistic(&m, &y, None, LogisticConfig::default()).unwrap().predict(&m).unwrap()) > 0.85);
    assert!(acc(train_decision_tree(&m, &y, None, TreeConfig::default()).unwrap().predict(&m).unwrap()) > 0.85);
    assert!(acc(train_naive_bayes(&m, &y, None).unwrap().predict(&m).unwrap()) > 0.6);
}
