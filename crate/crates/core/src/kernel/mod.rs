//! Minimal differentiable-operator set with reverse-mode gradients.
//!
//! The design is a static graph: topology and shapes are fixed at
//! construction, buffers are preallocated, and forward/backward passes run
//! allocation-free over flat `f32` storage. Everything is validated against
//! central finite differences by [`gradcheck`].

pub mod adam;
pub mod gradcheck;
pub mod graph;
pub mod loss;
pub mod ops;
pub mod tensor;
pub mod weights;

pub use adam::Adam;
pub use graph::{Graph, Init, NodeId};
pub use tensor::{Shape, Tensor};
pub use weights::{export_params, import_params, Weights};
