//! Functional spiking-CNN engine.
//!
//! Discrete-time inference over sparse spike tensors with integer state:
//! 16-bit membranes, 8-bit weights, shift-based leak. Layers run one at a
//! time over the whole timestep range; tiling splits a layer into
//! kernel-memory-sized pieces without changing its output. There is no
//! randomness anywhere in inference.

mod format;
mod layer;
mod network;
mod neuron;
mod spikes;
mod tiling;

use std::path::PathBuf;

use thiserror::Error;

pub use format::{load_network, save_network};
pub use layer::{run_layer, Layer, LayerKind, LayerWeights, SnnLayerConfig};
pub use network::{run_network, NetworkOutput, SnnNetwork};
pub use neuron::{step_neuron, NeuronState, ThresholdAdapt};
pub use spikes::{spike_tensor_from_events, spike_tensor_from_frames, SpikeCoord, SpikeTensor, TensorShape};
pub use tiling::{plan_tiles, run_layer_tiled, SpatialWindow, Tile, TilePlan};

#[derive(Debug, Error)]
pub enum SnnError {
    #[error("invalid layer config: {0}")]
    Config(String),
    #[error("input shape {got:?} does not match the expected {expected:?}")]
    GeometryMismatch { expected: TensorShape, got: TensorShape },
    #[error("spike coordinate {coord:?} outside tensor shape {shape:?}")]
    CoordOutOfRange { coord: SpikeCoord, shape: TensorShape },
    #[error("timestep {step} outside tensor with {steps} steps")]
    StepOutOfRange { step: usize, steps: usize },
    #[error("kernel memory budget {budget} below the minimal tile footprint {minimal}")]
    InfeasibleBudget { budget: usize, minimal: usize },
    #[error("invalid tile plan: {0}")]
    InvalidPlan(String),
    #[error("weight blob {path}: expected {expected} entries, got {got}")]
    WeightLength { path: String, expected: usize, got: usize },
    #[error("network file {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}
