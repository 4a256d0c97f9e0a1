//! Kernel-memory tiling.
//!
//! A tile plan partitions a layer's output volume into pieces whose weight
//! footprint fits the engine's kernel memory. Tiling is purely a resource
//! schedule: output neurons are independent, so running tiles one after the
//! other produces spike-for-spike the output of the untiled layer.

use std::ops::Range;

use super::layer::{run_region, Layer, SnnLayerConfig};
use super::spikes::{SpikeTensor, TensorShape};
use super::SnnError;

/// Half-open output-coordinate window of a tile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpatialWindow {
    pub y: Range<usize>,
    pub x: Range<usize>,
}

impl SpatialWindow {
    pub fn full(shape: TensorShape) -> Self {
        SpatialWindow { y: 0..shape.height, x: 0..shape.width }
    }
}

/// One schedulable piece: a channel range over a spatial window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tile {
    pub channels: Range<usize>,
    pub window: SpatialWindow,
}

impl Tile {
    /// Weight entries this tile needs resident: kernels are shared across
    /// the spatial window, so only the channel range counts.
    pub fn weight_footprint(&self, cfg: &SnnLayerConfig) -> usize {
        self.channels.len() * cfg.weights_per_channel()
    }
}

/// An ordered, exact partition of a layer's output volume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilePlan {
    pub tiles: Vec<Tile>,
    pub kernel_memory_budget: usize,
}

/// Splits a layer's output channels into tiles that fit the kernel memory
/// budget (weight-entry count), full spatial window each, in channel-major
/// order. Fails if even a single channel's kernels exceed the budget.
pub fn plan_tiles(
    cfg: &SnnLayerConfig,
    input_shape: TensorShape,
    kernel_memory_budget: usize,
) -> Result<TilePlan, SnnError> {
    cfg.validate()?;
    let out_shape = cfg.output_shape(input_shape)?;
    let per_channel = cfg.weights_per_channel();
    if kernel_memory_budget < per_channel {
        return Err(SnnError::InfeasibleBudget {
            budget: kernel_memory_budget,
            minimal: per_channel,
        });
    }
    let group = (kernel_memory_budget / per_channel).max(1);
    let mut tiles = Vec::new();
    let mut start = 0;
    while start < cfg.out_channels {
        let end = (start + group).min(cfg.out_channels);
        tiles.push(Tile { channels: start..end, window: SpatialWindow::full(out_shape) });
        start = end;
    }
    Ok(TilePlan { tiles, kernel_memory_budget })
}

/// Checks that a plan is an exact partition of the output volume and that
/// every tile fits the budget.
fn validate_plan(plan: &TilePlan, cfg: &SnnLayerConfig, out_shape: TensorShape) -> Result<(), SnnError> {
    let mut covered = vec![0u8; out_shape.len()];
    for (i, tile) in plan.tiles.iter().enumerate() {
        if tile.channels.end > out_shape.channels
            || tile.window.y.end > out_shape.height
            || tile.window.x.end > out_shape.width
        {
            return Err(SnnError::InvalidPlan(format!(
                "tile {i} exceeds the output volume {out_shape:?}"
            )));
        }
        if tile.weight_footprint(cfg) > plan.kernel_memory_budget {
            return Err(SnnError::InvalidPlan(format!(
                "tile {i} needs {} weight entries, budget is {}",
                tile.weight_footprint(cfg),
                plan.kernel_memory_budget
            )));
        }
        for c in tile.channels.clone() {
            for y in tile.window.y.clone() {
                for x in tile.window.x.clone() {
                    let idx = (c * out_shape.height + y) * out_shape.width + x;
                    covered[idx] += 1;
                    if covered[idx] > 1 {
                        return Err(SnnError::InvalidPlan(format!(
                            "output neuron ({c}, {y}, {x}) covered more than once"
                        )));
                    }
                }
            }
        }
    }
    if covered.contains(&0) {
        return Err(SnnError::InvalidPlan("plan leaves output neurons uncovered".into()));
    }
    Ok(())
}

/// Runs a layer tile by tile in plan order. The output is identical to
/// `run_layer` on the same input.
pub fn run_layer_tiled(
    layer: &Layer,
    input: &SpikeTensor,
    steps: usize,
    plan: &TilePlan,
) -> Result<SpikeTensor, SnnError> {
    let out_shape = layer.cfg.output_shape(input.shape())?;
    validate_plan(plan, &layer.cfg, out_shape)?;
    let mut out = SpikeTensor::new(out_shape, steps);
    for tile in &plan.tiles {
        run_region(layer, input, steps, tile.channels.clone(), &tile.window, &mut out);
    }
    Ok(out)
}
