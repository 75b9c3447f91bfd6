//! SPAD sensor emulation: Poisson shot noise on the intensity image and
//! 4x-downsampled time-of-flight depth histograms.
//!
//! The histogram window is anchored per frame at the closest target return
//! minus half a bin, which makes the bin contents invariant to the absolute
//! target range. `window_start` is carried for bookkeeping but is not a
//! network input.

use crate::render::{RenderedFrame, COLS, PIXELS, ROWS};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

pub const HIST_ROWS: usize = 20;
pub const HIST_COLS: usize = 60;
pub const HIST_BINS: usize = 15;
pub const HIST_CELLS: usize = HIST_ROWS * HIST_COLS * HIST_BINS;
/// Intensity-to-histogram downsampling factor per axis.
pub const BLOCK: usize = 4;

/// Default range bin width: half the light travel per 500 ps timing bin,
/// c * 500e-12 / 2 with c = 2.998e8 m/s, as quoted to three figures.
pub const DEFAULT_BIN_WIDTH_M: f64 = 0.0749;

/// One simulated sensor capture.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    /// Photon counts, 80x240 row-major.
    pub intensity_counts: Vec<u32>,
    /// Depth histogram, 20x60x15 row-major with the bin axis fastest.
    pub depth_hist: Vec<u16>,
    /// Range of the first histogram bin's leading edge, meters.
    pub window_start: f32,
}

impl SensorFrame {
    pub fn hist_at(&self, row: usize, col: usize, bin: usize) -> u16 {
        self.depth_hist[(row * HIST_COLS + col) * HIST_BINS + bin]
    }
}

/// Draw an independent Poisson count per pixel with the pixel's expected
/// intensity as the rate. Zero intensity always yields zero counts.
pub fn poisson_noise<R: Rng>(intensity: &[f32], rng: &mut R) -> crate::Result<Vec<u32>> {
    let mut out = Vec::with_capacity(intensity.len());
    for &lambda in intensity {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(crate::Error::config(format!(
                "negative or non-finite intensity {lambda}"
            )));
        }
        if lambda == 0.0 {
            out.push(0);
            continue;
        }
        let poisson = Poisson::new(lambda as f64)
            .map_err(|e| crate::Error::config(format!("poisson rate {lambda}: {e}")))?;
        out.push(poisson.sample(rng) as u32);
    }
    Ok(out)
}

/// Bin valid depths of each 4x4 pixel block into a 15-bin histogram anchored
/// at the frame's minimum valid depth minus half a bin.
///
/// Each contributing pixel adds exactly one count; depths past the window end
/// and invalid pixels contribute nothing.
pub fn depth_to_histogram(
    depth: &[f32],
    valid: &[bool],
    bin_width_m: f64,
    n_bins: usize,
) -> crate::Result<(Vec<u16>, f32)> {
    assert_eq!(depth.len(), PIXELS);
    assert_eq!(valid.len(), PIXELS);
    if !(bin_width_m > 0.0) {
        return Err(crate::Error::config(format!(
            "bin width must be positive, got {bin_width_m}"
        )));
    }
    let mut min_depth = f64::INFINITY;
    for (d, &v) in depth.iter().zip(valid) {
        if v {
            min_depth = min_depth.min(*d as f64);
        }
    }
    if !min_depth.is_finite() {
        return Err(crate::Error::EmptyTarget(
            "no valid depth pixels in frame".into(),
        ));
    }
    let window_start = min_depth - bin_width_m / 2.0;
    let mut hist = vec![0u16; HIST_ROWS * HIST_COLS * n_bins];
    for row in 0..ROWS {
        for col in 0..COLS {
            let i = row * COLS + col;
            if !valid[i] {
                continue;
            }
            let bin = ((depth[i] as f64 - window_start) / bin_width_m).floor();
            if bin >= 0.0 && (bin as usize) < n_bins {
                let cell = ((row / BLOCK) * HIST_COLS + col / BLOCK) * n_bins + bin as usize;
                hist[cell] += 1;
            }
        }
    }
    Ok((hist, window_start as f32))
}

/// Convert an ideal render into a sensor capture: Poisson-noise the intensity,
/// then histogram the depth.
pub fn sensorize<R: Rng>(frame: &RenderedFrame, rng: &mut R) -> crate::Result<SensorFrame> {
    let intensity_counts = poisson_noise(&frame.intensity, rng)?;
    let (depth_hist, window_start) =
        depth_to_histogram(&frame.depth, &frame.valid, DEFAULT_BIN_WIDTH_M, HIST_BINS)?;
    Ok(SensorFrame {
        intensity_counts,
        depth_hist,
        window_start,
    })
}
