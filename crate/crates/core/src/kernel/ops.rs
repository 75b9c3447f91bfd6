//! Raw operator kernels over flat `f32` slices.
//!
//! Layouts are channel-last: a 2D activation is `[H][W][C]`, a 3D one is
//! `[H][W][D][C]`, conv filters are `[kh][kw][C][F]` / `[kh][kw][kd][C][F]`.
//! Convolutions use zero same-padding and stride 1.
//!
//! Scene tensors here are mostly exact zeros away from the target, so every
//! conv pass skips positions whose channel vector is all zero; skipped terms
//! contribute exactly 0.0 to the accumulators, leaving results bit-identical
//! to the dense loops.

#[inline]
fn axpy(a: f32, xs: &[f32], ys: &mut [f32]) {
    for (y, x) in ys.iter_mut().zip(xs) {
        *y += a * x;
    }
}

/// Per-position flag: does any of the `c` channels hold a nonzero value?
fn nonzero_positions(x: &[f32], c: usize) -> Vec<bool> {
    x.chunks_exact(c)
        .map(|row| row.iter().any(|&v| v != 0.0))
        .collect()
}

/// `[.., C, F]` -> `[.., F, C]` for the backward-input passes.
fn transpose_filter_blocks(wt: &[f32], blocks: usize, c: usize, f: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; wt.len()];
    for b in 0..blocks {
        let src = &wt[b * c * f..][..c * f];
        let dst = &mut out[b * c * f..][..c * f];
        for ci in 0..c {
            for fi in 0..f {
                dst[fi * c + ci] = src[ci * f + fi];
            }
        }
    }
    out
}

pub fn conv2d_forward(
    x: &[f32],
    (h, w, c): (usize, usize, usize),
    wt: &[f32],
    (kh, kw, f): (usize, usize, usize),
    out: &mut [f32],
) {
    out.fill(0.0);
    let (ph, pw) = (kh as isize / 2, kw as isize / 2);
    let nz = nonzero_positions(x, c);
    for oh in 0..h as isize {
        for ow in 0..w as isize {
            let out_vec = &mut out[((oh as usize * w) + ow as usize) * f..][..f];
            for dh in 0..kh as isize {
                let ih = oh + dh - ph;
                if ih < 0 || ih >= h as isize {
                    continue;
                }
                for dw in 0..kw as isize {
                    let iw = ow + dw - pw;
                    if iw < 0 || iw >= w as isize {
                        continue;
                    }
                    let pos = ih as usize * w + iw as usize;
                    if !nz[pos] {
                        continue;
                    }
                    let in_vec = &x[pos * c..][..c];
                    let w_block = &wt[(dh * kw as isize + dw) as usize * c * f..][..c * f];
                    for (ci, &xv) in in_vec.iter().enumerate() {
                        if xv != 0.0 {
                            axpy(xv, &w_block[ci * f..][..f], out_vec);
                        }
                    }
                }
            }
        }
    }
}

pub fn conv2d_backward(
    x: &[f32],
    (h, w, c): (usize, usize, usize),
    wt: &[f32],
    (kh, kw, f): (usize, usize, usize),
    gout: &[f32],
    gin: &mut [f32],
    gwt: &mut [f32],
) {
    let (ph, pw) = (kh as isize / 2, kw as isize / 2);
    let nz_x = nonzero_positions(x, c);
    let nz_g = nonzero_positions(gout, f);
    let wt_t = transpose_filter_blocks(wt, kh * kw, c, f);
    for oh in 0..h as isize {
        for ow in 0..w as isize {
            let opos = oh as usize * w + ow as usize;
            if !nz_g[opos] {
                continue;
            }
            let g_vec = &gout[opos * f..][..f];
            for dh in 0..kh as isize {
                let ih = oh + dh - ph;
                if ih < 0 || ih >= h as isize {
                    continue;
                }
                for dw in 0..kw as isize {
                    let iw = ow + dw - pw;
                    if iw < 0 || iw >= w as isize {
                        continue;
                    }
                    let pos = ih as usize * w + iw as usize;
                    let block = (dh * kw as isize + dw) as usize;
                    // Gradient to the input, via transposed filters.
                    let gin_vec = &mut gin[pos * c..][..c];
                    let wt_block = &wt_t[block * c * f..][..c * f];
                    for (fi, &gv) in g_vec.iter().enumerate() {
                        if gv != 0.0 {
                            axpy(gv, &wt_block[fi * c..][..c], gin_vec);
                        }
                    }
                    // Gradient to the weights.
                    if !nz_x[pos] {
                        continue;
                    }
                    let in_vec = &x[pos * c..][..c];
                    let gw_block = &mut gwt[block * c * f..][..c * f];
                    for (ci, &xv) in in_vec.iter().enumerate() {
                        if xv != 0.0 {
                            axpy(xv, g_vec, &mut gw_block[ci * f..][..f]);
                        }
                    }
                }
            }
        }
    }
}

pub fn conv3d_forward(
    x: &[f32],
    (h, w, d, c): (usize, usize, usize, usize),
    wt: &[f32],
    (k, f): (usize, usize),
    out: &mut [f32],
) {
    out.fill(0.0);
    let p = k as isize / 2;
    let nz = nonzero_positions(x, c);
    for oh in 0..h as isize {
        for ow in 0..w as isize {
            for od in 0..d as isize {
                let opos = (oh as usize * w + ow as usize) * d + od as usize;
                let out_vec = &mut out[opos * f..][..f];
                for dh in 0..k as isize {
                    let ih = oh + dh - p;
                    if ih < 0 || ih >= h as isize {
                        continue;
                    }
                    for dw in 0..k as isize {
                        let iw = ow + dw - p;
                        if iw < 0 || iw >= w as isize {
                            continue;
                        }
                        for dd in 0..k as isize {
                            let id = od + dd - p;
                            if id < 0 || id >= d as isize {
                                continue;
                            }
                            let pos = (ih as usize * w + iw as usize) * d + id as usize;
                            if !nz[pos] {
                                continue;
                            }
                            let in_vec = &x[pos * c..][..c];
                            let block = ((dh * k as isize + dw) * k as isize + dd) as usize;
                            let w_block = &wt[block * c * f..][..c * f];
                            for (ci, &xv) in in_vec.iter().enumerate() {
                                if xv != 0.0 {
                                    axpy(xv, &w_block[ci * f..][..f], out_vec);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

pub fn conv3d_backward(
    x: &[f32],
    (h, w, d, c): (usize, usize, usize, usize),
    wt: &[f32],
    (k, f): (usize, usize),
    gout: &[f32],
    gin: &mut [f32],
    gwt: &mut [f32],
) {
    let p = k as isize / 2;
    let nz_x = nonzero_positions(x, c);
    let nz_g = nonzero_positions(gout, f);
    let wt_t = transpose_filter_blocks(wt, k * k * k, c, f);
    for oh in 0..h as isize {
        for ow in 0..w as isize {
            for od in 0..d as isize {
                let opos = (oh as usize * w + ow as usize) * d + od as usize;
                if !nz_g[opos] {
                    continue;
                }
                let g_vec = &gout[opos * f..][..f];
                for dh in 0..k as isize {
                    let ih = oh + dh - p;
                    if ih < 0 || ih >= h as isize {
                        continue;
                    }
                    for dw in 0..k as isize {
                        let iw = ow + dw - p;
                        if iw < 0 || iw >= w as isize {
                            continue;
                        }
                        for dd in 0..k as isize {
                            let id = od + dd - p;
                            if id < 0 || id >= d as isize {
                                continue;
                            }
                            let pos = (ih as usize * w + iw as usize) * d + id as usize;
                            let block = ((dh * k as isize + dw) * k as isize + dd) as usize;
                            let gin_vec = &mut gin[pos * c..][..c];
                            let wt_block = &wt_t[block * c * f..][..c * f];
                            for (fi, &gv) in g_vec.iter().enumerate() {
                                if gv != 0.0 {
                                    axpy(gv, &wt_block[fi * c..][..c], gin_vec);
                                }
                            }
                            if !nz_x[pos] {
                                continue;
                            }
                            let in_vec = &x[pos * c..][..c];
                            let gw_block = &mut gwt[block * c * f..][..c * f];
                            for (ci, &xv) in in_vec.iter().enumerate() {
                                if xv != 0.0 {
                                    axpy(xv, g_vec, &mut gw_block[ci * f..][..f]);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// 2D max pooling, window = stride = `size`, floor semantics (trailing rows
/// and columns that do not fill a window are dropped). `argmax` records the
/// winning input position per output element, first occurrence on ties.
pub fn maxpool2d_forward(
    x: &[f32],
    (h, w, c): (usize, usize, usize),
    size: usize,
    out: &mut [f32],
    argmax: &mut [u32],
) {
    let (oh, ow) = (h / size, w / size);
    for r in 0..oh {
        for col in 0..ow {
            let obase = (r * ow + col) * c;
            for ch in 0..c {
                let mut best = f32::NEG_INFINITY;
                let mut best_pos = 0u32;
                for dr in 0..size {
                    for dc in 0..size {
                        let pos = (r * size + dr) * w + (col * size + dc);
                        let v = x[pos * c + ch];
                        if v > best {
                            best = v;
                            best_pos = pos as u32;
                        }
                    }
                }
                out[obase + ch] = best;
                argmax[obase + ch] = best_pos;
            }
        }
    }
}

pub fn maxpool2d_backward(gout: &[f32], c: usize, argmax: &[u32], gin: &mut [f32]) {
    for (o, &pos) in argmax.iter().enumerate() {
        let ch = o % c;
        gin[pos as usize * c + ch] += gout[o];
    }
}

/// Sentinel for "a zero-pad element won the max" in the axial pool.
pub const POOL_PAD: u32 = u32::MAX;

/// Depth-axis max pooling with window = stride = `size` and ceil semantics:
/// the final short window is padded with zeros, and the pad participates in
/// the max (so an all-negative short window outputs 0 and routes no
/// gradient).
pub fn maxpool_axial_forward(
    x: &[f32],
    (h, w, d, c): (usize, usize, usize, usize),
    size: usize,
    out: &mut [f32],
    argmax: &mut [u32],
) {
    let od = d.div_ceil(size);
    for row in 0..h {
        for col in 0..w {
            for dz in 0..od {
                let obase = ((row * w + col) * od + dz) * c;
                let d0 = dz * size;
                let d1 = (d0 + size).min(d);
                let padded = d1 - d0 < size;
                for ch in 0..c {
                    let mut best = f32::NEG_INFINITY;
                    let mut best_pos = POOL_PAD;
                    for id in d0..d1 {
                        let pos = (row * w + col) * d + id;
                        let v = x[pos * c + ch];
                        if v > best {
                            best = v;
                            best_pos = pos as u32;
                        }
                    }
                    if padded && 0.0 > best {
                        best = 0.0;
                        best_pos = POOL_PAD;
                    }
                    out[obase + ch] = best;
                    argmax[obase + ch] = best_pos;
                }
            }
        }
    }
}

pub fn maxpool_axial_backward(gout: &[f32], c: usize, argmax: &[u32], gin: &mut [f32]) {
    for (o, &pos) in argmax.iter().enumerate() {
        if pos == POOL_PAD {
            continue;
        }
        let ch = o % c;
        gin[pos as usize * c + ch] += gout[o];
    }
}

pub fn dense_forward(x: &[f32], wt: &[f32], b: &[f32], out: &mut [f32]) {
    let m = b.len();
    out.copy_from_slice(b);
    for (i, &xv) in x.iter().enumerate() {
        if xv != 0.0 {
            axpy(xv, &wt[i * m..][..m], out);
        }
    }
}

pub fn dense_backward(
    x: &[f32],
    wt: &[f32],
    gout: &[f32],
    gin: &mut [f32],
    gwt: &mut [f32],
    gb: &mut [f32],
) {
    let m = gout.len();
    for (i, gi) in gin.iter_mut().enumerate() {
        let row = &wt[i * m..][..m];
        let mut acc = 0.0f32;
        for (g, w) in gout.iter().zip(row) {
            acc += g * w;
        }
        *gi += acc;
    }
    for (i, &xv) in x.iter().enumerate() {
        if xv != 0.0 {
            axpy(xv, gout, &mut gwt[i * m..][..m]);
        }
    }
    axpy(1.0, gout, gb);
}

pub fn relu_forward(x: &[f32], out: &mut [f32]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o = if v > 0.0 { v } else { 0.0 };
    }
}

/// ReLU gradient from the stored output.
pub fn relu_backward(out: &[f32], gout: &[f32], gin: &mut [f32]) {
    for ((gi, &o), &g) in gin.iter_mut().zip(out).zip(gout) {
        if o > 0.0 {
            *gi += g;
        }
    }
}

pub fn sigmoid_forward(x: &[f32], out: &mut [f32]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o = 1.0 / (1.0 + (-v).exp());
    }
}

pub fn sigmoid_backward(out: &[f32], gout: &[f32], gin: &mut [f32]) {
    for ((gi, &o), &g) in gin.iter_mut().zip(out).zip(gout) {
        *gi += g * o * (1.0 - o);
    }
}

/// Nearest-neighbour upsample to an explicit target size; source index is
/// `floor(dst * src_len / dst_len)`, which also handles non-integer ratios.
pub fn upsample_forward(
    x: &[f32],
    (sh, sw, c): (usize, usize, usize),
    (th, tw): (usize, usize),
    out: &mut [f32],
) {
    for r in 0..th {
        let sr = r * sh / th;
        for col in 0..tw {
            let sc = col * sw / tw;
            let src = &x[(sr * sw + sc) * c..][..c];
            out[(r * tw + col) * c..][..c].copy_from_slice(src);
        }
    }
}

pub fn upsample_backward(
    gout: &[f32],
    (sh, sw, c): (usize, usize, usize),
    (th, tw): (usize, usize),
    gin: &mut [f32],
) {
    for r in 0..th {
        let sr = r * sh / th;
        for col in 0..tw {
            let sc = col * sw / tw;
            let g = &gout[(r * tw + col) * c..][..c];
            axpy(1.0, g, &mut gin[(sr * sw + sc) * c..][..c]);
        }
    }
}

/// Channel-axis concatenation of `[H][W][Ca]` and `[H][W][Cb]`.
pub fn concat_forward(a: &[f32], b: &[f32], ca: usize, cb: usize, out: &mut [f32]) {
    let positions = a.len() / ca;
    let co = ca + cb;
    for p in 0..positions {
        out[p * co..][..ca].copy_from_slice(&a[p * ca..][..ca]);
        out[p * co + ca..][..cb].copy_from_slice(&b[p * cb..][..cb]);
    }
}

pub fn concat_backward(gout: &[f32], ca: usize, cb: usize, ga: &mut [f32], gb: &mut [f32]) {
    let co = ca + cb;
    let positions = gout.len() / co;
    for p in 0..positions {
        axpy(1.0, &gout[p * co..][..ca], &mut ga[p * ca..][..ca]);
        axpy(1.0, &gout[p * co + ca..][..cb], &mut gb[p * cb..][..cb]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Textbook direct cross-correlation, no skipping, for parity checks.
    fn conv2d_reference(
        x: &[f32],
        (h, w, c): (usize, usize, usize),
        wt: &[f32],
        (kh, kw, f): (usize, usize, usize),
    ) -> Vec<f32> {
        let (ph, pw) = (kh as isize / 2, kw as isize / 2);
        let mut out = vec![0.0; h * w * f];
        for oh in 0..h as isize {
            for ow in 0..w as isize {
                for fi in 0..f {
                    let mut acc = 0.0f32;
                    for dh in 0..kh as isize {
                        for dw in 0..kw as isize {
                            let (ih, iw) = (oh + dh - ph, ow + dw - pw);
                            if ih < 0 || ih >= h as isize || iw < 0 || iw >= w as isize {
                                continue;
                            }
                            for ci in 0..c {
                                let xv = x[(ih as usize * w + iw as usize) * c + ci];
                                let wv = wt[(((dh * kw as isize + dw) as usize * c) + ci) * f
                                    + fi];
                                acc += xv * wv;
                            }
                        }
                    }
                    out[(oh as usize * w + ow as usize) * f + fi] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn conv2d_identity_filter_passes_input_through() {
        let x: Vec<f32> = (0..5 * 4).map(|i| i as f32 * 0.5 - 3.0).collect();
        let wt = vec![1.0f32]; // 1x1x1x1 identity
        let mut out = vec![0.0; x.len()];
        conv2d_forward(&x, (5, 4, 1), &wt, (1, 1, 1), &mut out);
        assert_eq!(out, x);
    }

    #[test]
    fn conv2d_ones_filter_spreads_a_plateau() {
        // One-hot input under an all-ones 3x3 filter: a 3x3 plateau of ones.
        let (h, w) = (6, 7);
        let mut x = vec![0.0f32; h * w];
        x[3 * w + 4] = 1.0;
        let wt = vec![1.0f32; 9];
        let mut out = vec![0.0; h * w];
        conv2d_forward(&x, (h, w, 1), &wt, (3, 3, 1), &mut out);
        for r in 0..h {
            for c in 0..w {
                let expect = if (2..=4).contains(&r) && (3..=5).contains(&c) {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(out[r * w + c], expect, "at ({r},{c})");
            }
        }
    }

    #[test]
    fn conv2d_matches_dense_reference_on_sparse_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (h, w, c, f) = (9, 11, 3, 5);
        let mut x = vec![0.0f32; h * w * c];
        for v in x.iter_mut() {
            // Mostly zeros, exercising the skip paths.
            if rng.random_bool(0.2) {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        let wt: Vec<f32> = (0..3 * 3 * c * f)
            .map(|_| rng.random_range(-0.5..0.5))
            .collect();
        let mut out = vec![0.0; h * w * f];
        conv2d_forward(&x, (h, w, c), &wt, (3, 3, f), &mut out);
        let reference = conv2d_reference(&x, (h, w, c), &wt, (3, 3, f));
        for (a, b) in out.iter().zip(&reference) {
            assert!((a - b).abs() <= 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn conv3d_reduces_to_conv2d_on_unit_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (h, w, c, f) = (6, 5, 2, 3);
        let x: Vec<f32> = (0..h * w * c).map(|_| rng.random_range(-1.0..1.0)).collect();
        // 3D filter with only the central depth slice nonzero equals a 2D conv.
        let w2: Vec<f32> = (0..9 * c * f).map(|_| rng.random_range(-0.5..0.5)).collect();
        let mut w3 = vec![0.0f32; 27 * c * f];
        for dh in 0..3 {
            for dw in 0..3 {
                for rest in 0..c * f {
                    w3[((dh * 3 + dw) * 3 + 1) * c * f + rest] = w2[(dh * 3 + dw) * c * f + rest];
                }
            }
        }
        let mut out2 = vec![0.0; h * w * f];
        conv2d_forward(&x, (h, w, c), &w2, (3, 3, f), &mut out2);
        let mut out3 = vec![0.0; h * w * f];
        conv3d_forward(&x, (h, w, 1, c), &w3, (3, f), &mut out3);
        for (a, b) in out3.iter().zip(&out2) {
            assert!((a - b).abs() <= 1e-5);
        }
    }

    #[test]
    fn maxpool2d_shapes_and_constant_input() {
        let x = vec![2.5f32; 80 * 240];
        let mut out = vec![0.0; 20 * 60];
        let mut arg = vec![0u32; 20 * 60];
        maxpool2d_forward(&x, (80, 240, 1), 4, &mut out, &mut arg);
        assert!(out.iter().all(|&v| v == 2.5));
        // Constant input: first window element wins.
        assert_eq!(arg[0], 0);
        assert_eq!(arg[1], 4);
    }

    #[test]
    fn axial_pool_ceil_semantics() {
        // Depth 15 pools to 4, then 4 pools to 1, by direct enumeration.
        assert_eq!(15usize.div_ceil(4), 4);
        assert_eq!(4usize.div_ceil(4), 1);
        let d = 15;
        let x: Vec<f32> = (0..d).map(|i| -(i as f32) - 1.0).collect();
        let mut out = vec![0.0; 4];
        let mut arg = vec![0u32; 4];
        maxpool_axial_forward(&x, (1, 1, d, 1), 4, &mut out, &mut arg);
        // Windows of negatives: max is the first element of each window,
        // except the short window where the zero pad wins.
        assert_eq!(out, vec![-1.0, -5.0, -9.0, 0.0]);
        assert_eq!(arg[3], POOL_PAD);
        let mut gin = vec![0.0f32; d];
        maxpool_axial_backward(&[1.0, 1.0, 1.0, 1.0], 1, &arg, &mut gin);
        assert_eq!(gin[0], 1.0);
        assert_eq!(gin[4], 1.0);
        assert_eq!(gin[8], 1.0);
        // No gradient through the pad.
        assert_eq!(gin[12..15], [0.0, 0.0, 0.0]);
    }

    #[test]
    fn dense_identity() {
        let n = 4;
        let mut wt = vec![0.0f32; n * n];
        for i in 0..n {
            wt[i * n + i] = 1.0;
        }
        let x = vec![1.0, -2.0, 3.0, 0.5];
        let mut out = vec![0.0; n];
        dense_forward(&x, &wt, &vec![0.0; n], &mut out);
        assert_eq!(out, x);
    }

    #[test]
    fn activations() {
        let mut out = vec![0.0f32; 3];
        relu_forward(&[-1.0, 0.0, 2.0], &mut out);
        assert_eq!(out, vec![0.0, 0.0, 2.0]);
        sigmoid_forward(&[0.0], &mut out[..1]);
        assert_eq!(out[0], 0.5);
    }

    #[test]
    fn upsample_handles_non_integer_ratios() {
        // 1 -> 5 and 3 -> 15 both appear in the decoder.
        let x = vec![1.0f32, 2.0, 3.0];
        let mut out = vec![0.0f32; 15];
        upsample_forward(&x, (1, 3, 1), (1, 15), &mut out);
        for (i, &v) in out.iter().enumerate() {
            assert_eq!(v, x[i * 3 / 15]);
        }
        let mut gin = vec![0.0f32; 3];
        upsample_backward(&vec![1.0; 15], (1, 3, 1), (1, 15), &mut gin);
        assert_eq!(gin, vec![5.0, 5.0, 5.0]);
    }

    #[test]
    fn concat_round_trip() {
        let a = vec![1.0f32, 2.0, 3.0, 4.0]; // 2 positions x 2 channels
        let b = vec![9.0f32, 8.0]; // 2 positions x 1 channel
        let mut out = vec![0.0f32; 6];
        concat_forward(&a, &b, 2, 1, &mut out);
        assert_eq!(out, vec![1.0, 2.0, 9.0, 3.0, 4.0, 8.0]);
        let mut ga = vec![0.0f32; 4];
        let mut gb = vec![0.0f32; 2];
        concat_backward(&out, 2, 1, &mut ga, &mut gb);
        assert_eq!(ga, a);
        assert_eq!(gb, b);
    }
}
