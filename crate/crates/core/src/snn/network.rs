//! Multi-layer networks.

use super::layer::{run_layer, Layer, LayerKind, LayerWeights, SnnLayerConfig};
use super::neuron::ThresholdAdapt;
use super::spikes::{SpikeTensor, TensorShape};
use super::SnnError;
use crate::rng::SplitMix64;

/// An ordered stack of layers with a declared input volume. Construction
/// checks that every layer's geometry chains onto the previous one.
#[derive(Debug, Clone, PartialEq)]
pub struct SnnNetwork {
    input_shape: TensorShape,
    layers: Vec<Layer>,
    shapes: Vec<TensorShape>,
}

/// Everything a forward pass produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkOutput {
    /// Spike count per output neuron of the last layer, over all timesteps.
    pub class_counts: Vec<u64>,
    /// Per-layer, per-timestep spike counts.
    pub per_layer_step_counts: Vec<Vec<u64>>,
}

impl SnnNetwork {
    pub fn new(input_shape: TensorShape, layers: Vec<Layer>) -> Result<Self, SnnError> {
        let mut shapes = vec![input_shape];
        let mut cur = input_shape;
        for layer in &layers {
            cur = layer.cfg.output_shape(cur)?;
            shapes.push(cur);
        }
        Ok(SnnNetwork { input_shape, layers, shapes })
    }

    pub fn input_shape(&self) -> TensorShape {
        self.input_shape
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Activation shapes, input first, one entry per layer output after it.
    pub fn shapes(&self) -> &[TensorShape] {
        &self.shapes
    }

    pub fn output_shape(&self) -> TensorShape {
        *self.shapes.last().expect("shapes always holds the input")
    }

    /// Runs the layers in order, each consuming the previous layer's full
    /// spike stream.
    pub fn run(&self, input: &SpikeTensor, steps: usize) -> Result<NetworkOutput, SnnError> {
        if input.shape() != self.input_shape {
            return Err(SnnError::GeometryMismatch {
                expected: self.input_shape,
                got: input.shape(),
            });
        }
        let mut per_layer_step_counts = Vec::with_capacity(self.layers.len());
        let mut current = input.clone();
        for layer in &self.layers {
            let next = run_layer(layer, &current, steps)?;
            per_layer_step_counts
                .push((0..steps).map(|t| next.count_at(t) as u64).collect());
            current = next;
        }
        Ok(NetworkOutput { class_counts: current.counts_per_site(), per_layer_step_counts })
    }

    /// The reference topology: two strided conv layers followed by two
    /// fully-connected layers, ending in four output classes. Weights are
    /// filled deterministically from `weight_seed`.
    pub fn reference(weight_seed: u64) -> SnnNetwork {
        let conv = |in_ch, out_ch, threshold| SnnLayerConfig {
            kind: LayerKind::Conv,
            in_channels: in_ch,
            out_channels: out_ch,
            kernel: (3, 3),
            stride: 2,
            base_potential: 0,
            threshold,
            threshold_adapt: ThresholdAdapt { increment: 4, decay: 1 },
            refractory_steps: 1,
            timestep_shift: 1,
        };
        let fc = |in_ch, out_ch, threshold| SnnLayerConfig {
            kind: LayerKind::FullyConnected,
            in_channels: in_ch,
            out_channels: out_ch,
            kernel: (1, 1),
            stride: 1,
            base_potential: 0,
            threshold,
            threshold_adapt: ThresholdAdapt::NONE,
            refractory_steps: 0,
            timestep_shift: 1,
        };
        let input = TensorShape::sensor_input(); // (2, 104, 132)
        let conv1 = conv(2, 8, 48);
        let conv2 = conv(8, 16, 48);
        // conv2 output is (16, 25, 32) -> 12800 inputs to the first FC layer.
        let fc1 = fc(16 * 25 * 32, 64, 40);
        let fc2 = fc(64, 4, 24);

        // Conv weights lean positive so activity survives the strided
        // front-end; the wide fully-connected sums use a zero-mean fill to
        // stay out of saturation.
        let mut rng = SplitMix64::new(weight_seed);
        let layers = [(conv1, false), (conv2, false), (fc1, true), (fc2, true)]
            .into_iter()
            .map(|(cfg, zero_mean)| {
                let weights = if zero_mean {
                    LayerWeights::new(
                        (0..cfg.weight_count())
                            .map(|_| (rng.next_below(128) as i64 - 64) as i8)
                            .collect(),
                    )
                } else {
                    seeded_weights(&mut rng, cfg.weight_count())
                };
                Layer::new(cfg, weights).expect("reference config is valid")
            })
            .collect();
        SnnNetwork::new(input, layers).expect("reference shapes chain")
    }
}

/// Deterministic weight fill, biased slightly positive so activity survives
/// a few layers: values in [-32, 63].
pub fn seeded_weights(rng: &mut SplitMix64, count: usize) -> LayerWeights {
    LayerWeights::new((0..count).map(|_| (rng.next_below(96) as i64 - 32) as i8).collect())
}

/// Spike count per output neuron of the final layer.
pub fn run_network(net: &SnnNetwork, input: &SpikeTensor, steps: usize) -> Result<Vec<u64>, SnnError> {
    Ok(net.run(input, steps)?.class_counts)
}
