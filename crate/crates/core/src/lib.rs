//! Synthetic SPAD drone imagery pipeline and characterisation networks.
//!
//! The crate covers the full loop from procedural scene generation to trained
//! model evaluation:
//!
//! * [`pose`] — angle conventions, pose sampling, rotations, cyclic losses.
//! * [`models`] — procedural triangle-mesh drone models with component labels.
//! * [`render`] — pinhole raycaster producing intensity, depth and segmentation.
//! * [`sensor`] — SPAD emulation: Poisson-noised intensity and depth histograms.
//! * [`dataset`] — sample generation, splits, ablation, and the binary format.
//! * [`kernel`] — tensors, reverse-mode autodiff operators, Adam.
//! * [`networks`] — the feature encoder plus identification, orientation and
//!   segmentation heads, and ensemble inference.
//! * [`train`] — training loops, evaluation metrics, experiment matrix.

pub mod dataset;
pub mod error;
pub mod kernel;
pub mod models;
pub mod networks;
pub mod pose;
pub mod render;
pub mod sensor;
pub mod train;

pub use error::{Error, Result};
