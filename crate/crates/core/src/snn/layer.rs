//! Layer configuration, weights and the propagation loop.

use serde::{Deserialize, Serialize};

use super::neuron::{step_neuron, NeuronState, ThresholdAdapt};
use super::spikes::{SpikeCoord, SpikeTensor, TensorShape};
use super::tiling::SpatialWindow;
use super::SnnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv,
    FullyConnected,
}

/// Per-layer hyperparameters of the engine: topology plus the neuron
/// dynamics knobs (reset base potential, firing threshold, threshold
/// adaptation rate, refractory gap, per-step leak shift).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnnLayerConfig {
    pub kind: LayerKind,
    pub in_channels: usize,
    pub out_channels: usize,
    /// Kernel (height, width); fully-connected layers use (1, 1).
    pub kernel: (usize, usize),
    pub stride: usize,
    pub base_potential: i16,
    pub threshold: i16,
    pub threshold_adapt: ThresholdAdapt,
    /// Minimum timestep gap between two spikes of the same neuron.
    pub refractory_steps: u32,
    /// Arithmetic right shift applied to the membrane each timestep.
    pub timestep_shift: u32,
}

impl SnnLayerConfig {
    pub fn validate(&self) -> Result<(), SnnError> {
        if self.threshold <= self.base_potential {
            return Err(SnnError::Config(format!(
                "threshold {} must exceed base potential {}",
                self.threshold, self.base_potential
            )));
        }
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(SnnError::Config("channel counts must be positive".into()));
        }
        match self.kind {
            LayerKind::Conv => {
                if self.kernel.0 == 0 || self.kernel.1 == 0 {
                    return Err(SnnError::Config("kernel dimensions must be positive".into()));
                }
                if self.stride == 0 {
                    return Err(SnnError::Config("stride must be positive".into()));
                }
            }
            LayerKind::FullyConnected => {
                if self.kernel != (1, 1) || self.stride != 1 {
                    return Err(SnnError::Config(
                        "fully-connected layers use kernel (1, 1) and stride 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Output volume produced from `input`, checking that the input chains.
    pub fn output_shape(&self, input: TensorShape) -> Result<TensorShape, SnnError> {
        match self.kind {
            LayerKind::Conv => {
                let (kh, kw) = self.kernel;
                if input.channels != self.in_channels || input.height < kh || input.width < kw {
                    return Err(SnnError::GeometryMismatch {
                        expected: TensorShape::new(self.in_channels, kh, kw),
                        got: input,
                    });
                }
                Ok(TensorShape::new(
                    self.out_channels,
                    (input.height - kh) / self.stride + 1,
                    (input.width - kw) / self.stride + 1,
                ))
            }
            LayerKind::FullyConnected => {
                if input.len() != self.in_channels {
                    return Err(SnnError::GeometryMismatch {
                        expected: TensorShape::new(self.in_channels, 1, 1),
                        got: input,
                    });
                }
                Ok(TensorShape::new(self.out_channels, 1, 1))
            }
        }
    }

    /// Weight entries for one output channel's kernels.
    pub fn weights_per_channel(&self) -> usize {
        self.in_channels * self.kernel.0 * self.kernel.1
    }

    /// Total weight entries of the layer.
    pub fn weight_count(&self) -> usize {
        self.out_channels * self.weights_per_channel()
    }
}

/// Signed 8-bit weights, flat in (out_channel, in_channel, ky, kx) order.
/// Fully-connected layers store (out, in) with a 1x1 kernel; the flattened
/// input index plays the in_channel role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerWeights {
    data: Vec<i8>,
}

impl LayerWeights {
    pub fn new(data: Vec<i8>) -> Self {
        LayerWeights { data }
    }

    pub fn data(&self) -> &[i8] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// A configured layer with its weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub cfg: SnnLayerConfig,
    weights: LayerWeights,
}

impl Layer {
    pub fn new(cfg: SnnLayerConfig, weights: LayerWeights) -> Result<Self, SnnError> {
        cfg.validate()?;
        if weights.len() != cfg.weight_count() {
            return Err(SnnError::Config(format!(
                "layer needs {} weights, got {}",
                cfg.weight_count(),
                weights.len()
            )));
        }
        Ok(Layer { cfg, weights })
    }

    pub fn weights(&self) -> &LayerWeights {
        &self.weights
    }

    #[inline]
    fn weight(&self, out_ch: usize, in_flat: usize, ky: usize, kx: usize) -> i8 {
        let (kh, kw) = self.cfg.kernel;
        self.weights.data[((out_ch * self.cfg.in_channels + in_flat) * kh + ky) * kw + kx]
    }
}

/// Runs the neurons of one output region (channel range x spatial window)
/// over `steps` timesteps, merging spikes into `out`. Neuron state layout and
/// stepping order are channel-major within the region, so any partition of
/// the output volume produces identical results.
pub(crate) fn run_region(
    layer: &Layer,
    input: &SpikeTensor,
    steps: usize,
    channels: std::ops::Range<usize>,
    window: &SpatialWindow,
    out: &mut SpikeTensor,
) {
    let cfg = &layer.cfg;
    let ch_count = channels.len();
    let wh = window.y.len();
    let ww = window.x.len();
    let region_len = ch_count * wh * ww;
    if region_len == 0 {
        return;
    }

    let mut states = vec![NeuronState::resting(cfg); region_len];
    let mut drive = vec![0i32; region_len];
    let in_shape = input.shape();

    let region_index = |oc: usize, oy: usize, ox: usize| -> usize {
        ((oc - channels.start) * wh + (oy - window.y.start)) * ww + (ox - window.x.start)
    };

    for t in 0..steps {
        drive.fill(0);

        match cfg.kind {
            LayerKind::Conv => {
                let (kh, kw) = cfg.kernel;
                for spike in input.step(t) {
                    let (ic, iy, ix) = (spike.channel as usize, spike.y as usize, spike.x as usize);
                    for ky in 0..kh {
                        if iy < ky || (iy - ky) % cfg.stride != 0 {
                            continue;
                        }
                        let oy = (iy - ky) / cfg.stride;
                        if !window.y.contains(&oy) {
                            continue;
                        }
                        for kx in 0..kw {
                            if ix < kx || (ix - kx) % cfg.stride != 0 {
                                continue;
                            }
                            let ox = (ix - kx) / cfg.stride;
                            if !window.x.contains(&ox) {
                                continue;
                            }
                            for oc in channels.clone() {
                                drive[region_index(oc, oy, ox)] +=
                                    layer.weight(oc, ic, ky, kx) as i32;
                            }
                        }
                    }
                }
            }
            LayerKind::FullyConnected => {
                for spike in input.step(t) {
                    let in_flat = in_shape.index(spike);
                    for oc in channels.clone() {
                        drive[region_index(oc, 0, 0)] += layer.weight(oc, in_flat, 0, 0) as i32;
                    }
                }
            }
        }

        for oc in channels.clone() {
            for oy in window.y.clone() {
                for ox in window.x.clone() {
                    let idx = region_index(oc, oy, ox);
                    let weighted = drive[idx].clamp(i16::MIN as i32, i16::MAX as i32) as i16;
                    if step_neuron(&mut states[idx], cfg, weighted) {
                        out.insert_unchecked(
                            t,
                            SpikeCoord::new(oc as u16, oy as u16, ox as u16),
                        );
                    }
                }
            }
        }
    }
}

/// Runs a layer over an input spike stream for `steps` timesteps.
///
/// Each output neuron integrates the weights of the input spikes in its
/// receptive field; spikes are emitted into the same timestep they were
/// driven by. Input steps beyond the tensor read as empty.
pub fn run_layer(layer: &Layer, input: &SpikeTensor, steps: usize) -> Result<SpikeTensor, SnnError> {
    let out_shape = layer.cfg.output_shape(input.shape())?;
    let mut out = SpikeTensor::new(out_shape, steps);
    run_region(
        layer,
        input,
        steps,
        0..out_shape.channels,
        &SpatialWindow::full(out_shape),
        &mut out,
    );
    Ok(out)
}
