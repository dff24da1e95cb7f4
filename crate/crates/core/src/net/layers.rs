//! Per-instance layer kernels. Activations are laid out `[channel][time]`.

/// Valid cross-correlation: `out[o][t] = b[o] + Σ_c Σ_j w[o][c][j] x[c][t + j]`.
pub fn conv1d(x: &[f64], cin: usize, w: &[f64], b: &[f64], k: usize, out: &mut [f64]) {
    let len = x.len() / cin;
    let olen = len + 1 - k;
    let cout = b.len();
    debug_assert_eq!(out.len(), cout * olen);
    for o in 0..cout {
        let row = &mut out[o * olen..(o + 1) * olen];
        row.fill(b[o]);
        for c in 0..cin {
            let xi = &x[c * len..(c + 1) * len];
            for j in 0..k {
                let wv = w[(o * cin + c) * k + j];
                for (r, xv) in row.iter_mut().zip(&xi[j..j + olen]) {
                    *r += wv * xv;
                }
            }
        }
    }
}

/// Gradient of [`conv1d`] with respect to its input, accumulated into `dx`.
pub fn conv1d_input_grad(dout: &[f64], cin: usize, w: &[f64], k: usize, cout: usize, dx: &mut [f64]) {
    let olen = dout.len() / cout;
    let len = olen + k - 1;
    debug_assert_eq!(dx.len(), cin * len);
    for o in 0..cout {
        let d = &dout[o * olen..(o + 1) * olen];
        for c in 0..cin {
            let xi = &mut dx[c * len..(c + 1) * len];
            for j in 0..k {
                let wv = w[(o * cin + c) * k + j];
                for (g, dv) in xi[j..j + olen].iter_mut().zip(d) {
                    *g += wv * dv;
                }
            }
        }
    }
}

/// Max pooling with window `p` and stride `p`; a trailing partial window is
/// dropped. Records the winning input index (first maximum on ties).
pub fn maxpool(x: &[f64], channels: usize, p: usize, out: &mut [f64], idx: &mut [u32]) {
    let len = x.len() / channels;
    let olen = len / p;
    for c in 0..channels {
        for t in 0..olen {
            let base = c * len + t * p;
            let mut best = base;
            for i in base + 1..base + p {
                if x[i] > x[best] {
                    best = i;
                }
            }
            out[c * olen + t] = x[best];
            idx[c * olen + t] = best as u32;
        }
    }
}

pub fn relu_inplace(x: &mut [f64]) {
    x.iter_mut().for_each(|v| {
        if *v < 0.0 {
            *v = 0.0
        }
    });
}

/// `out[j] = b[j] + Σ_i w[j][i] x[i]`.
pub fn dense(x: &[f64], w: &[f64], b: &[f64], out: &mut [f64]) {
    let n = x.len();
    for (j, o) in out.iter_mut().enumerate() {
        let row = &w[j * n..(j + 1) * n];
        *o = b[j] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `dx[i] += Σ_j w[j][i] dout[j]`.
pub fn dense_input_grad(dout: &[f64], w: &[f64], dx: &mut [f64]) {
    let n = dx.len();
    for (j, &g) in dout.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        for (d, wv) in dx.iter_mut().zip(&w[j * n..(j + 1) * n]) {
            *d += g * wv;
        }
    }
}

/// Two-class softmax, stable for large logits.
pub fn softmax2(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let e0 = (z[0] - m).exp();
    let e1 = (z[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}
