//! Dense kernels for the small network: 3×3 same-padded convolution, 2×2
//! max pooling, fully connected layers. Feature maps are channel-major
//! `c × s × s` slices.

/// `out[oc] = b[oc] + Σ_ic w[oc, ic] ⋆ input[ic]`, zero padding.
pub(crate) fn conv3x3_forward(input: &[f64], in_c: usize, s: usize, w: &[f64], b: &[f64], out_c: usize) -> Vec<f64> {
    let plane = s * s;
    let mut out = vec![0.0; out_c * plane];
    for oc in 0..out_c {
        let o = &mut out[oc * plane..(oc + 1) * plane];
        o.fill(b[oc]);
        for ic in 0..in_c {
            let inp = &input[ic * plane..(ic + 1) * plane];
            for ky in 0..3 {
                for kx in 0..3 {
                    let wv = w[((oc * in_c + ic) * 3 + ky) * 3 + kx];
                    let (dy, dx) = (ky as isize - 1, kx as isize - 1);
                    let x0 = (-dx).max(0) as usize;
                    let x1 = (s as isize - dx).min(s as isize) as usize;
                    for y in 0..s {
                        let sy = y as isize + dy;
                        if sy < 0 || sy >= s as isize {
                            continue;
                        }
                        let sy = sy as usize;
                        let orow = &mut o[y * s + x0..y * s + x1];
                        let start = (sy * s + x0) as isize + dx;
                        let irow = &inp[start as usize..start as usize + (x1 - x0)];
                        for (a, v) in orow.iter_mut().zip(irow) {
                            *a += wv * v;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Accumulates weight and bias gradients; returns the input gradient when
/// `need_input` is set.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv3x3_backward(
    input: &[f64],
    in_c: usize,
    s: usize,
    w: &[f64],
    dout: &[f64],
    out_c: usize,
    dw: &mut [f64],
    db: &mut [f64],
    need_input: bool,
) -> Option<Vec<f64>> {
    let plane = s * s;
    let mut din = need_input.then(|| vec![0.0; in_c * plane]);
    for oc in 0..out_c {
        let d = &dout[oc * plane..(oc + 1) * plane];
        db[oc] += d.iter().sum::<f64>();
        for ic in 0..in_c {
            let inp = &input[ic * plane..(ic + 1) * plane];
            for ky in 0..3 {
                for kx in 0..3 {
                    let widx = ((oc * in_c + ic) * 3 + ky) * 3 + kx;
                    let wv = w[widx];
                    let (dy, dx) = (ky as isize - 1, kx as isize - 1);
                    let x0 = (-dx).max(0) as usize;
                    let x1 = (s as isize - dx).min(s as isize) as usize;
                    let mut acc = 0.0;
                    for y in 0..s {
                        let sy = y as isize + dy;
                        if sy < 0 || sy >= s as isize {
                            continue;
                        }
                        let sy = sy as usize;
                        let drow = &d[y * s + x0..y * s + x1];
                        let start = ((sy * s + x0) as isize + dx) as usize;
                        let irow = &inp[start..start + (x1 - x0)];
                        acc += drow.iter().zip(irow).map(|(a, b)| a * b).sum::<f64>();
                        if let Some(din) = din.as_mut() {
                            let dst = &mut din[ic * plane + start..ic * plane + start + (x1 - x0)];
                            for (t, g) in dst.iter_mut().zip(drow) {
                                *t += wv * g;
                            }
                        }
                    }
                    dw[widx] += acc;
                }
            }
        }
    }
    din
}

pub(crate) fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// 2×2 max pool; also returns the flat index of each winner (first on ties).
pub(crate) fn maxpool2_forward(input: &[f64], c: usize, s: usize) -> (Vec<f64>, Vec<usize>) {
    let h = s / 2;
    let mut out = Vec::with_capacity(c * h * h);
    let mut idx = Vec::with_capacity(c * h * h);
    for ch in 0..c {
        let base = ch * s * s;
        for y in 0..h {
            for x in 0..h {
                let mut best = base + 2 * y * s + 2 * x;
                for (oy, ox) in [(0, 1), (1, 0), (1, 1)] {
                    let i = base + (2 * y + oy) * s + 2 * x + ox;
                    if input[i] > input[best] {
                        best = i;
                    }
                }
                out.push(input[best]);
                idx.push(best);
            }
        }
    }
    (out, idx)
}

pub(crate) fn maxpool2_backward(dout: &[f64], idx: &[usize], input_len: usize) -> Vec<f64> {
    let mut din = vec![0.0; input_len];
    for (g, &i) in dout.iter().zip(idx) {
        din[i] += g;
    }
    din
}

pub(crate) fn fc_forward(input: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    let n_in = input.len();
    b.iter()
        .enumerate()
        .map(|(j, bj)| bj + w[j * n_in..(j + 1) * n_in].iter().zip(input).map(|(a, x)| a * x).sum::<f64>())
        .collect()
}

pub(crate) fn fc_backward(input: &[f64], w: &[f64], dout: &[f64], dw: &mut [f64], db: &mut [f64], need_input: bool) -> Option<Vec<f64>> {
    let n_in = input.len();
    let mut din = need_input.then(|| vec![0.0; n_in]);
    for (j, &g) in dout.iter().enumerate() {
        db[j] += g;
        let row = &mut dw[j * n_in..(j + 1) * n_in];
        for (d, x) in row.iter_mut().zip(input) {
            *d += g * x;
        }
        if let Some(din) = din.as_mut() {
            for (d, wv) in din.iter_mut().zip(&w[j * n_in..(j + 1) * n_in]) {
                *d += g * wv;
            }
        }
    }
    din
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
