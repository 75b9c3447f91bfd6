//! Loss kernels: binary cross-entropy, masked categorical cross-entropy, and
//! the squared cyclic angle loss.

use crate::pose::{cyclic_loss, cyclic_loss_grad, CyclicLossMode};
use crate::{Error, Result};

/// Probability clamp for the cross-entropy losses.
pub const PROB_EPS: f32 = 1e-7;

fn clamp_prob(p: f32) -> f32 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Mean binary cross-entropy between predictions in (0,1) and 0/1 targets.
pub fn bce_forward(pred: &[f32], target: &[f32]) -> f32 {
    let mut acc = 0.0f64;
    for (&p, &y) in pred.iter().zip(target) {
        let p = clamp_prob(p) as f64;
        let y = y as f64;
        acc -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    (acc / pred.len() as f64) as f32
}

/// Accumulate `gscale * dL/dpred`. The clamp is honored exactly: predictions
/// outside the clamped band receive zero gradient, matching the loss surface.
pub fn bce_backward(pred: &[f32], target: &[f32], gscale: f32, gin: &mut [f32]) {
    let n = pred.len() as f32;
    for ((gi, &p), &y) in gin.iter_mut().zip(pred).zip(target) {
        if p <= PROB_EPS || p >= 1.0 - PROB_EPS {
            continue;
        }
        *gi += gscale * (p - y) / (p * (1.0 - p)) / n;
    }
}

/// Masked categorical cross-entropy over channel-last logits.
///
/// `classes` holds the per-position target channel as a float index and
/// `mask` selects which positions contribute; the loss is the mean negative
/// log softmax probability over masked-in positions.
pub fn cce_forward(
    logits: &[f32],
    channels: usize,
    classes: &[f32],
    mask: &[f32],
) -> Result<f32> {
    let positions = classes.len();
    let mut acc = 0.0f64;
    let mut m = 0usize;
    for pos in 0..positions {
        if mask[pos] == 0.0 {
            continue;
        }
        let cls = classes[pos];
        if cls < 0.0 || cls >= channels as f32 || cls.fract() != 0.0 {
            return Err(Error::config(format!(
                "class label {cls} out of range for {channels} channels"
            )));
        }
        let row = &logits[pos * channels..][..channels];
        let max = row.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        let logsum: f64 = row.iter().map(|&v| ((v - max) as f64).exp()).sum::<f64>().ln()
            + max as f64;
        acc += logsum - row[cls as usize] as f64;
        m += 1;
    }
    if m == 0 {
        return Err(Error::config("categorical loss over an empty mask"));
    }
    Ok((acc / m as f64) as f32)
}

pub fn cce_backward(
    logits: &[f32],
    channels: usize,
    classes: &[f32],
    mask: &[f32],
    gscale: f32,
    gin: &mut [f32],
) {
    let m = mask.iter().filter(|&&v| v != 0.0).count().max(1) as f32;
    for pos in 0..classes.len() {
        if mask[pos] == 0.0 {
            continue;
        }
        let row = &logits[pos * channels..][..channels];
        let max = row.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        let denom: f32 = row.iter().map(|&v| (v - max).exp()).sum();
        let grow = &mut gin[pos * channels..][..channels];
        for (ch, (g, &v)) in grow.iter_mut().zip(row).enumerate() {
            let softmax = (v - max).exp() / denom;
            let onehot = if ch == classes[pos] as usize { 1.0 } else { 0.0 };
            *g += gscale * (softmax - onehot) / m;
        }
    }
}

/// Squared cyclic angle loss on scalar degrees.
pub fn cyclic_forward(mode: CyclicLossMode, pred: f32, label: f32) -> f32 {
    cyclic_loss(mode, label as f64, pred as f64) as f32
}

pub fn cyclic_backward(mode: CyclicLossMode, pred: f32, label: f32) -> f32 {
    cyclic_loss_grad(mode, label as f64, pred as f64) as f32
}
