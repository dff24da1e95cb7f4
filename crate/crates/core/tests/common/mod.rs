//! Direct-definition oracles shared by the integration tests. Nothing here
//! calls into the library's numeric helpers.

#![allow(dead_code)]

use std::f64::consts::PI;

pub const TOL: f64 = 1e-9;

/// `|a - b| <= tol * max(1, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Small deterministic generator so fixtures do not depend on the crate's RNG.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(1e-300);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}

/// Ten fixture signals `(label, series, sample rate)`.
pub fn fixtures() -> Vec<(&'static str, Vec<f64>, f64)> {
    let minute = 1.0 / 60.0;
    let mut r = Lcg(0xF1_7E57);
    let mut out = Vec::new();
    let n = 1440;
    out.push((
        "noisy_sine_hr",
        (0..n)
            .map(|t| 70.0 + 8.0 * (2.0 * PI * 3.0 * t as f64 / n as f64).sin() + 2.0 * r.normal())
            .collect(),
        minute,
    ));
    out.push(("white_noise", (0..512).map(|_| r.normal()).collect(), 1.0));
    let mut walk = 0.0;
    out.push((
        "random_walk",
        (0..300)
            .map(|_| {
                walk += r.normal();
                walk
            })
            .collect(),
        minute,
    ));
    out.push((
        "step_counts",
        (0..720)
            .map(|t| if (t / 37) % 3 == 0 { (r.uniform() * 120.0).floor() } else { 0.0 })
            .collect(),
        minute,
    ));
    out.push((
        "two_tones_10hz",
        (0..400)
            .map(|t| {
                let s = t as f64 / 10.0;
                (2.0 * PI * 1.2 * s).sin() + 0.5 * (2.0 * PI * 3.7 * s).cos() + 0.1 * r.normal()
            })
            .collect(),
        10.0,
    ));
    out.push(("ramp_plus_noise", (0..97).map(|t| 0.3 * t as f64 + r.normal()).collect(), 1.0));
    out.push(("constant", vec![61.0; 64], minute));
    out.push((
        "ar2",
        {
            let mut x = vec![0.0, 0.0];
            for t in 2..600 {
                let v = 1.2 * x[t - 1] - 0.5 * x[t - 2] + r.normal();
                x.push(v);
            }
            x
        },
        2.0,
    ));
    out.push((
        "sparse_spikes",
        (0..255).map(|t| if t % 29 == 3 { 5.0 + r.uniform() } else { 0.1 * r.uniform() }).collect(),
        minute,
    ));
    out.push((
        "mixed_sign_short",
        (0..33).map(|t| (t as f64 * 0.7).sin() * 3.0 + r.normal() - 0.2).collect(),
        1.0,
    ));
    out
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s
}

fn quantile(x: &[f64], p: f64) -> f64 {
    let s = sorted(x);
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= s.len() {
        return s[lo];
    }
    s[lo] * (1.0 - (h - lo as f64)) + s[lo + 1] * (h - lo as f64)
}

fn hist(x: &[f64]) -> Vec<f64> {
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut h = vec![0.0; 10];
    for &v in x {
        let mut b = 0;
        if hi > lo {
            // bin b covers [lo + b w, lo + (b + 1) w)
            while b < 9 && 10.0 * (v - lo) / (hi - lo) >= (b + 1) as f64 {
                b += 1;
            }
        }
        h[b] += 1.0 / x.len() as f64;
    }
    h
}

fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum()
}

/// Statistical features in the library's column order.
pub fn statistical(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mu = mean(x);
    let count_le = |t: f64| x.iter().filter(|&&v| v <= t).count() as f64;
    let mut out = Vec::new();
    for j in 0..10 {
        out.push(count_le(lo + (j as f64 + 0.5) / 10.0 * (hi - lo)) / n);
    }
    let pct: Vec<f64> = [0.2, 0.8]
        .iter()
        .map(|&p| *sorted(x).iter().find(|&&v| count_le(v) / n >= p - 1e-12).unwrap())
        .collect();
    out.extend(&pct);
    for &v in &pct {
        out.push(count_le(v));
    }
    out.extend(hist(x));
    out.push(quantile(x, 0.75) - quantile(x, 0.25));
    let m = |k: i32| x.iter().map(|v| (v - mu).powi(k)).sum::<f64>() / n;
    let constant = hi == lo;
    out.push(if constant { 0.0 } else { m(4) / (m(2) * m(2)) - 3.0 });
    out.push(hi);
    out.push(mu);
    out.push(x.iter().map(|v| (v - mu).abs()).sum::<f64>() / n);
    let med = quantile(x, 0.5);
    out.push(med);
    out.push(quantile(&x.iter().map(|v| (v - med).abs()).collect::<Vec<_>>(), 0.5));
    out.push(lo);
    out.push((x.iter().map(|v| v * v).sum::<f64>() / n).sqrt());
    out.push(if constant { 0.0 } else { m(3) / m(2).powf(1.5) });
    let var = x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1.0);
    out.push(var.sqrt());
    out.push(var);
    out
}

fn slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let (st, sy) = (t.iter().sum::<f64>(), y.iter().sum::<f64>());
    let stt: f64 = t.iter().map(|v| v * v).sum();
    let sty: f64 = t.iter().zip(y).map(|(a, b)| a * b).sum();
    let den = n * stt - st * st;
    if den.abs() < 1e-300 {
        0.0
    } else {
        (n * sty - st * sy) / den
    }
}

fn sgn(v: f64) -> i32 {
    (v > 0.0) as i32 - (v < 0.0) as i32
}

/// Temporal features in the library's column order.
pub fn temporal(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mu = mean(x);
    let d: Vec<f64> = (0..n - 1).map(|t| x[t + 1] - x[t]).collect();
    let ad: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let energy: f64 = x.iter().map(|v| v * v).sum();
    let var: f64 = x.iter().map(|v| (v - mu) * (v - mu)).sum();
    let constant = x.iter().all(|&v| v == x[0]);
    let turn = |neg: bool| {
        (1..n - 1)
            .filter(|&t| if neg { x[t - 1] < x[t] && x[t] > x[t + 1] } else { x[t - 1] > x[t] && x[t] < x[t + 1] })
            .count() as f64
    };
    let peaks = (0..n)
        .filter(|&i| i >= 10 && i + 10 < n && (1..=10).all(|k| x[i] > x[i - k] && x[i] > x[i + k]))
        .count() as f64;
    let t: Vec<f64> = (0..n).map(|i| i as f64).collect();
    vec![
        energy,
        (0..n - 1).map(|i| 0.5 * (x[i] + x[i + 1])).sum(),
        if constant { 0.0 } else { (0..n - 1).map(|i| (x[i] - mu) * (x[i + 1] - mu)).sum::<f64>() / var },
        if energy > 0.0 { (0..n).map(|i| i as f64 * x[i] * x[i]).sum::<f64>() / energy } else { 0.0 },
        entropy(&hist(x)),
        mean(&ad),
        mean(&d),
        quantile(&ad, 0.5),
        quantile(&d, 0.5),
        turn(true),
        x.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - x.iter().cloned().fold(f64::INFINITY, f64::min),
        turn(false),
        d.iter().map(|v| (1.0 + v * v).sqrt()).sum(),
        slope(&t, x),
        ad.iter().sum(),
        energy / (n - 1) as f64,
        (0..n - 1).filter(|&i| sgn(x[i]) != sgn(x[i + 1])).count() as f64,
        peaks,
    ]
}

/// `O(n^2)` DFT returning `(re, im)`.
pub fn naive_dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                // reduce the phase index first to keep the angle small
                let a = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            (re, im)
        })
        .collect()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap()).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Cepstrum of `1 / (1 - Σ a_j z^j)` as the power series of
/// `-ln(1 - u) = Σ u^k / k`, truncated at degree `a.len()`.
pub fn cepstrum_series(a: &[f64]) -> Vec<f64> {
    let p = a.len();
    let mut u = vec![0.0; p + 1];
    u[1..].copy_from_slice(a);
    let mut power = u.clone();
    let mut c = vec![0.0; p + 1];
    for k in 1..=p {
        for m in 0..=p {
            c[m] += power[m] / k as f64;
        }
        let mut next = vec![0.0; p + 1];
        for i in 0..=p {
            for j in 0..=p - i {
                next[i + j] += power[i] * u[j];
            }
        }
        power = next;
    }
    c[1..].to_vec()
}

fn mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn inv_mel(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

fn cumulative_first(p: &[f64], f: &[f64], level: f64) -> f64 {
    let mut run = 0.0;
    for (i, v) in p.iter().enumerate() {
        run += v;
        if run >= level {
            return f[i];
        }
    }
    f[f.len() - 1]
}

/// Spectral features in the library's column order.
pub fn spectral(x: &[f64], fs: f64) -> Vec<f64> {
    let n = x.len();
    let nf = n as f64;
    if x.iter().all(|&v| v == x[0]) {
        return vec![0.0; 64];
    }
    let mu = mean(x);
    let c: Vec<f64> = x.iter().map(|v| v - mu).collect();
    let spec = naive_dft(&c);
    let kmax = n / 2;
    let f: Vec<f64> = (1..=kmax).map(|k| k as f64 * fs / nf).collect();
    let mag: Vec<f64> = (1..=kmax).map(|k| spec[k].0.hypot(spec[k].1)).collect();
    let pw: Vec<f64> = mag.iter().map(|m| m * m / nf).collect();
    let total: f64 = pw.iter().sum();
    if total <= 1e-20 * x.iter().map(|v| v * v).sum::<f64>() {
        return vec![0.0; 64];
    }
    let p: Vec<f64> = pw.iter().map(|v| v / total).collect();
    let kb = mag.len();
    let mut out = vec![mean(&mag)];
    let mut best = 0;
    for i in 1..kb {
        if mag[i] > mag[best] {
            best = i;
        }
    }
    out.push(f[best]);
    out.push((0..kb).filter(|&i| f[i] >= 0.6 && f[i] <= 2.5).map(|i| pw[i]).sum::<f64>() / total);

    // LPC by the normal equations of the autocorrelation method
    let r: Vec<f64> = (0..=12).map(|l| if l < n { (0..n - l).map(|t| c[t] * c[t + l]).sum() } else { 0.0 }).collect();
    let toeplitz: Vec<Vec<f64>> = (0..12usize).map(|i| (0..12usize).map(|j| r[i.abs_diff(j)]).collect()).collect();
    let lpc = solve(toeplitz, r[1..].to_vec());
    out.extend(cepstrum_series(&lpc));

    // mel bank over bins 0..=n/2 of the centred series
    let top = mel(fs / 2.0);
    let edges: Vec<f64> = (0..22).map(|i| inv_mel(top * i as f64 / 21.0)).collect();
    let mut e = vec![0.0; 20];
    for k in 0..=kmax {
        let fk = k as f64 * fs / nf;
        let pk = (spec[k].0 * spec[k].0 + spec[k].1 * spec[k].1) / nf;
        for m in 0..20 {
            let (a, b, cc) = (edges[m], edges[m + 1], edges[m + 2]);
            let w = if fk >= a && fk <= b {
                (fk - a) / (b - a)
            } else if fk > b && fk <= cc {
                (cc - fk) / (cc - b)
            } else {
                0.0
            };
            e[m] += w * pk;
        }
    }
    let emax = e.iter().cloned().fold(0.0, f64::max);
    let logs: Vec<f64> = e.iter().map(|v| v.max(1e-10 * emax).ln()).collect();
    for j in 0..12 {
        let norm = if j == 0 { (1.0f64 / 20.0).sqrt() } else { (2.0f64 / 20.0).sqrt() };
        out.push(norm * (0..20).map(|m| logs[m] * (PI * j as f64 * (2 * m + 1) as f64 / 40.0).cos()).sum::<f64>());
    }

    let pmax = pw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    out.push(pmax);
    out.push(cumulative_first(&p, &f, 0.95));
    out.push(cumulative_first(&p, &f, 0.5));
    let above: Vec<usize> = (0..kb).filter(|&i| pw[i] >= pmax / 2.0).collect();
    out.push(f[*above.last().unwrap()] - f[above[0]]);
    let cen: f64 = (0..kb).map(|i| f[i] * p[i]).sum();
    let mom = |k: i32| (0..kb).map(|i| (f[i] - cen).powi(k) * p[i]).sum::<f64>();
    let sd = mom(2).sqrt();
    out.push(cen);
    let dec_den: f64 = mag[1..].iter().sum();
    out.push(if dec_den > 0.0 {
        (1..kb).map(|k| (mag[k] - mag[0]) / k as f64).sum::<f64>() / dec_den
    } else {
        0.0
    });
    let cm: Vec<f64> = (0..kb).map(|i| mag[..=i].iter().sum()).collect();
    out.push(if kb > 1 {
        (0..kb).map(|i| cm[kb - 1] * i as f64 / (kb - 1) as f64 - cm[i]).sum()
    } else {
        0.0
    });
    out.push(if kb > 1 { entropy(&p) / (kb as f64).ln() } else { 0.0 });
    let tiny = sd <= 1e-6 * fs / nf;
    out.push(if tiny { 0.0 } else { mom(4) / sd.powi(4) });
    out.push((1..kb.saturating_sub(1)).filter(|&i| mag[i - 1] > mag[i] && mag[i] < mag[i + 1]).count() as f64);
    out.push(cumulative_first(&p, &f, 0.85));
    out.push(cumulative_first(&p, &f, 0.05));
    out.push(if tiny { 0.0 } else { mom(3) / sd.powi(3) });
    out.push(slope(&f, &mag));
    out.push(sd);
    let num: f64 = (0..kb - 1).map(|i| mag[i] * mag[i + 1]).sum();
    let a2: f64 = (0..kb - 1).map(|i| mag[i] * mag[i]).sum();
    let b2: f64 = (1..kb).map(|i| mag[i] * mag[i]).sum();
    out.push(if a2 * b2 > 0.0 { 1.0 - num / (a2 * b2).sqrt() } else { 0.0 });

    // Haar detail at level L: block differences scaled by 2^(-L/2)
    let details: Vec<Vec<f64>> = (1..=5)
        .map(|lvl| {
            let block = 1usize << lvl;
            let half = block / 2;
            (0..n / block)
                .map(|i| {
                    let s = i * block;
                    let a: f64 = c[s..s + half].iter().sum();
                    let b: f64 = c[s + half..s + block].iter().sum();
                    (a - b) / 2f64.powf(lvl as f64 / 2.0)
                })
                .collect()
        })
        .collect();
    let pv = |d: &[f64]| {
        let m = mean(d);
        d.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / d.len() as f64
    };
    let lvl = |g: &dyn Fn(&[f64]) -> f64| details.iter().map(|d| if d.is_empty() { 0.0 } else { g(d) }).collect::<Vec<_>>();
    out.extend(lvl(&|d| d.iter().map(|v| v.abs()).sum::<f64>() / d.len() as f64));
    let en: Vec<f64> = details.iter().map(|d| d.iter().map(|v| v * v).sum()).collect();
    out.extend(&en);
    out.extend(lvl(&|d| pv(d).sqrt()));
    let et: f64 = en.iter().sum();
    out.push(if et > 0.0 { entropy(&en.iter().map(|v| v / et).collect::<Vec<_>>()) } else { 0.0 });
    out.extend(lvl(&pv));
    out
}
