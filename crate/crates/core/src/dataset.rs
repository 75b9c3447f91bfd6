//! Sample generation, train/test splitting, ablation variants, and the
//! bit-exact on-disk dataset format.
//!
//! # File format (all little-endian)
//!
//! Header: magic `DPC1`, `u32` version (1), `u32` sample count, `u8` regime
//! id, `u64` generator seed. Then per sample:
//!
//! ```text
//! u8            drone id (0 = ModelA, 1 = ModelB)
//! f32 x 3       yaw, pitch, roll in degrees
//! f32           histogram window start in meters
//! f32 x 19200   intensity counts, 80x240 row-major
//! u16 x 18000   depth histogram, 20x60x15 row-major, bin fastest
//! u8  x 19200   segmentation map, 80x240 row-major
//! ```
//!
//! Records have a fixed size, so samples are randomly addressable.
//!
//! # Seed derivation
//!
//! Sample `i` of a run with master seed `m` uses the 64-bit stream seed
//! `split_mix(m + (i + 1) * 0x9E3779B97F4A7C15)` where `split_mix` is the
//! SplitMix64 finalizer; generation is therefore order-independent and
//! parallelizable without changing output bytes. Within a sample the draws
//! are ordered: pose (yaw, pitch, roll), placement (distance, horizontal,
//! vertical), light direction, Poisson intensity noise.

use crate::models::{build_model, Archetype, ComponentClass};
use crate::pose::{sample_pose, Pose, RegimePreset};
use crate::render::{place_drone, render, LightModel, PlacementConfig, PIXELS};
use crate::sensor::{sensorize, SensorFrame, HIST_CELLS};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"DPC1";
pub const VERSION: u32 = 1;
pub const HEADER_BYTES: u64 = 21;
pub const RECORD_BYTES: u64 = 1 + 4 * 4 + 4 * PIXELS as u64 + 2 * HIST_CELLS as u64 + PIXELS as u64;

const GOLDEN: u64 = 0x9E3779B97F4A7C15;
const GENERATE_RETRIES: u64 = 20;
/// Samples rendered per parallel batch while streaming to disk.
const WRITE_CHUNK: usize = 128;

/// SplitMix64 finalizer.
pub fn split_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Stream seed for sample `index` under `master_seed`.
pub fn sample_seed(master_seed: u64, index: u64) -> u64 {
    split_mix(master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

fn retry_seed(seed: u64, attempt: u64) -> u64 {
    split_mix(seed ^ attempt)
}

/// One training/evaluation record.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub sensor: SensorFrame,
    pub drone: Archetype,
    pub pose: Pose,
    pub segmap: Vec<ComponentClass>,
}

/// Dataset file metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetHeader {
    pub count: u32,
    pub regime: RegimePreset,
    pub seed: u64,
}

/// Input-channel ablation variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AblationMode {
    #[default]
    Both,
    /// Histogram zeroed; intensity untouched.
    IntensityOnly,
    /// Intensity zeroed; histogram untouched.
    HistogramOnly,
}

impl AblationMode {
    pub const ALL: [AblationMode; 3] = [
        AblationMode::Both,
        AblationMode::IntensityOnly,
        AblationMode::HistogramOnly,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AblationMode::Both => "both",
            AblationMode::IntensityOnly => "intensity",
            AblationMode::HistogramOnly => "histogram",
        }
    }
}

impl std::str::FromStr for AblationMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<AblationMode> {
        match s {
            "both" => Ok(AblationMode::Both),
            "intensity" | "intensity-only" => Ok(AblationMode::IntensityOnly),
            "histogram" | "histogram-only" => Ok(AblationMode::HistogramOnly),
            other => Err(crate::Error::config(format!("unknown ablation `{other}`"))),
        }
    }
}

/// Replace the removed input channel with zeros; shapes are unchanged.
pub fn ablate(sample: &LabeledSample, mode: AblationMode) -> LabeledSample {
    let mut out = sample.clone();
    match mode {
        AblationMode::Both => {}
        AblationMode::IntensityOnly => out.sensor.depth_hist.fill(0),
        AblationMode::HistogramOnly => out.sensor.intensity_counts.fill(0),
    }
    out
}

/// Render one sample from its stream seed. Empty-target frames retry with a
/// derived seed up to a fixed limit.
fn generate_sample(
    mesh: &crate::models::DroneMesh,
    regime: RegimePreset,
    seed: u64,
) -> crate::Result<LabeledSample> {
    let intervals = regime.regime();
    let placement = PlacementConfig::default();
    let mut last_err = None;
    for attempt in 0..GENERATE_RETRIES {
        let s = if attempt == 0 {
            seed
        } else {
            retry_seed(seed, attempt)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let sampled = sample_pose(&intervals, &mut rng);
        // Quantize to the storage precision so written poses read back equal.
        let pose = Pose {
            yaw_deg: sampled.yaw_deg as f32 as f64,
            pitch_deg: sampled.pitch_deg as f32 as f64,
            roll_deg: sampled.roll_deg as f32 as f64,
        };
        let (world, camera) = match place_drone(mesh, &pose, &mut rng, &placement) {
            Ok(v) => v,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let light = LightModel::sample_upper_hemisphere(&mut rng);
        let frame = render(&world, &camera, &light)?;
        match sensorize(&frame, &mut rng) {
            Ok(sensor) => {
                return Ok(LabeledSample {
                    sensor,
                    drone: mesh.archetype,
                    pose,
                    segmap: frame.segmap,
                });
            }
            Err(e @ crate::Error::EmptyTarget(_)) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        }
    }
    Err(crate::Error::RetryExhausted(format!(
        "sample seed {seed}: {}",
        last_err.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// Generate `count` samples in memory, parallel across indices.
pub fn generate_samples(
    archetype: Archetype,
    regime: RegimePreset,
    count: usize,
    master_seed: u64,
) -> crate::Result<Vec<LabeledSample>> {
    let mesh = build_model(archetype);
    (0..count)
        .into_par_iter()
        .map(|i| generate_sample(&mesh, regime, sample_seed(master_seed, i as u64)))
        .collect()
}

/// Generate a dataset file, streaming to disk in fixed-size parallel batches.
/// Output bytes depend only on the arguments, never on worker count.
pub fn generate_dataset(
    archetype: Archetype,
    regime: RegimePreset,
    count: usize,
    master_seed: u64,
    path: &Path,
) -> crate::Result<()> {
    if count == 0 {
        return Err(crate::Error::config("sample count must be positive"));
    }
    let mesh = build_model(archetype);
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_header(
        &mut w,
        &DatasetHeader {
            count: count as u32,
            regime,
            seed: master_seed,
        },
    )?;
    let mut start = 0usize;
    while start < count {
        let end = (start + WRITE_CHUNK).min(count);
        let chunk: crate::Result<Vec<LabeledSample>> = (start..end)
            .into_par_iter()
            .map(|i| generate_sample(&mesh, regime, sample_seed(master_seed, i as u64)))
            .collect();
        for sample in chunk? {
            write_sample(&mut w, &sample)?;
        }
        start = end;
    }
    w.flush()?;
    Ok(())
}

fn write_header<W: Write>(w: &mut W, header: &DatasetHeader) -> crate::Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(header.count)?;
    w.write_u8(header.regime.id())?;
    w.write_u64::<LittleEndian>(header.seed)?;
    Ok(())
}

fn write_sample<W: Write>(w: &mut W, s: &LabeledSample) -> crate::Result<()> {
    w.write_u8(s.drone.id())?;
    w.write_f32::<LittleEndian>(s.pose.yaw_deg as f32)?;
    w.write_f32::<LittleEndian>(s.pose.pitch_deg as f32)?;
    w.write_f32::<LittleEndian>(s.pose.roll_deg as f32)?;
    w.write_f32::<LittleEndian>(s.sensor.window_start)?;
    let mut buf = Vec::with_capacity(RECORD_BYTES as usize);
    for &c in &s.sensor.intensity_counts {
        buf.extend_from_slice(&(c as f32).to_le_bytes());
    }
    for &h in &s.sensor.depth_hist {
        buf.extend_from_slice(&h.to_le_bytes());
    }
    for &c in &s.segmap {
        buf.push(c as u8);
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_sample<R: Read>(r: &mut R) -> crate::Result<LabeledSample> {
    let drone = Archetype::from_id(r.read_u8()?)?;
    let yaw = r.read_f32::<LittleEndian>()?;
    let pitch = r.read_f32::<LittleEndian>()?;
    let roll = r.read_f32::<LittleEndian>()?;
    let window_start = r.read_f32::<LittleEndian>()?;
    let pose = Pose {
        yaw_deg: yaw as f64,
        pitch_deg: pitch as f64,
        roll_deg: roll as f64,
    };
    let mut intensity = vec![0u32; PIXELS];
    for v in intensity.iter_mut() {
        let f = r.read_f32::<LittleEndian>()?;
        if !(0.0..=u32::MAX as f32).contains(&f) {
            return Err(crate::Error::Format(format!("bad intensity count {f}")));
        }
        *v = f as u32;
    }
    let mut hist = vec![0u16; HIST_CELLS];
    for v in hist.iter_mut() {
        *v = r.read_u16::<LittleEndian>()?;
    }
    let mut segmap = Vec::with_capacity(PIXELS);
    let mut bytes = vec![0u8; PIXELS];
    r.read_exact(&mut bytes)?;
    for b in bytes {
        segmap.push(ComponentClass::from_u8(b)?);
    }
    Ok(LabeledSample {
        sensor: SensorFrame {
            intensity_counts: intensity,
            depth_hist: hist,
            window_start,
        },
        drone,
        pose,
        segmap,
    })
}

fn read_header<R: Read>(r: &mut R) -> crate::Result<DatasetHeader> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(crate::Error::Format(format!(
            "bad dataset magic {magic:?}"
        )));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(crate::Error::Format(format!(
            "unsupported dataset version {version}"
        )));
    }
    let count = r.read_u32::<LittleEndian>()?;
    let regime = RegimePreset::from_id(r.read_u8()?)?;
    let seed = r.read_u64::<LittleEndian>()?;
    Ok(DatasetHeader {
        count,
        regime,
        seed,
    })
}

/// Load a whole dataset into memory.
pub fn read_dataset(path: &Path) -> crate::Result<(DatasetHeader, Vec<LabeledSample>)> {
    let mut r = BufReader::new(File::open(path)?);
    let header = read_header(&mut r)?;
    let mut samples = Vec::with_capacity(header.count as usize);
    for _ in 0..header.count {
        samples.push(read_sample(&mut r)?);
    }
    Ok((header, samples))
}

/// Write samples with the given header metadata.
pub fn write_dataset(
    path: &Path,
    header: &DatasetHeader,
    samples: &[LabeledSample],
) -> crate::Result<()> {
    if samples.len() != header.count as usize {
        return Err(crate::Error::config("header count != sample count"));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, header)?;
    for s in samples {
        write_sample(&mut w, s)?;
    }
    w.flush()?;
    Ok(())
}

/// Random-access dataset reader over the fixed-size records.
pub struct DatasetReader {
    file: BufReader<File>,
    pub header: DatasetHeader,
}

impl DatasetReader {
    pub fn open(path: &Path) -> crate::Result<DatasetReader> {
        let mut file = BufReader::new(File::open(path)?);
        let header = read_header(&mut file)?;
        Ok(DatasetReader { file, header })
    }

    pub fn read_at(&mut self, index: u32) -> crate::Result<LabeledSample> {
        if index >= self.header.count {
            return Err(crate::Error::Format(format!(
                "sample index {index} out of range ({} samples)",
                self.header.count
            )));
        }
        self.file
            .seek(SeekFrom::Start(HEADER_BYTES + index as u64 * RECORD_BYTES))?;
        read_sample(&mut self.file)
    }
}

/// Deterministic shuffle-split of `n` indices; returns (train, test).
///
/// The test side receives `round(n * test_fraction)` indices; the two sides
/// are disjoint and exhaustive.
pub fn split_indices(
    n: usize,
    test_fraction: f64,
    seed: u64,
) -> crate::Result<(Vec<usize>, Vec<usize>)> {
    if n == 0 {
        return Err(crate::Error::config("cannot split an empty dataset"));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(crate::Error::config(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Fisher-Yates, fixed traversal order.
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let n_test = (n as f64 * test_fraction).round() as usize;
    let test: Vec<usize> = order[..n_test].to_vec();
    let train: Vec<usize> = order[n_test..].to_vec();
    Ok((train, test))
}

/// Partition owned samples into (train, test) without cloning.
pub fn split(
    samples: Vec<LabeledSample>,
    test_fraction: f64,
    seed: u64,
) -> crate::Result<(Vec<LabeledSample>, Vec<LabeledSample>)> {
    let (train_idx, test_idx) = split_indices(samples.len(), test_fraction, seed)?;
    let mut is_test = vec![false; samples.len()];
    for &i in &test_idx {
        is_test[i] = true;
    }
    let mut train = Vec::with_capacity(train_idx.len());
    let mut test = Vec::with_capacity(test_idx.len());
    for (s, t) in samples.into_iter().zip(is_test) {
        if t {
            test.push(s);
        } else {
            train.push(s);
        }
    }
    Ok((train, test))
}
