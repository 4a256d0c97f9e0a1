//! Property tests for the spiking engine.

use evpipe_core::rng::SplitMix64;
use evpipe_core::snn::{
    plan_tiles, run_layer, run_layer_tiled, step_neuron, Layer, LayerKind, LayerWeights,
    NeuronState, SnnLayerConfig, SpatialWindow, SpikeCoord, SpikeTensor, TensorShape,
    ThresholdAdapt, Tile, TilePlan,
};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct LayerCase {
    layer: Layer,
    input: SpikeTensor,
    steps: usize,
}

/// Builds a random small layer (spatial extent <= 16, channels <= 16) with a
/// seeded weight fill and a random sparse input stream.
#[allow(clippy::too_many_arguments)]
fn build_case(
    seed: u64,
    fully_connected: bool,
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    stride: usize,
    height: usize,
    width: usize,
    steps: usize,
) -> LayerCase {
    let mut rng = SplitMix64::new(seed);
    let height = height.max(kernel);
    let width = width.max(kernel);
    let in_shape = TensorShape::new(in_ch, height, width);
    let cfg = SnnLayerConfig {
        kind: if fully_connected { LayerKind::FullyConnected } else { LayerKind::Conv },
        in_channels: if fully_connected { in_shape.len() } else { in_ch },
        out_channels: out_ch,
        kernel: if fully_connected { (1, 1) } else { (kernel, kernel) },
        stride: if fully_connected { 1 } else { stride },
        base_potential: 0,
        threshold: 10 + rng.next_below(60) as i16,
        threshold_adapt: ThresholdAdapt {
            increment: rng.next_below(8) as i16,
            decay: rng.next_below(4) as i16,
        },
        refractory_steps: rng.next_below(3) as u32,
        timestep_shift: rng.next_below(3) as u32,
    };
    let weights: Vec<i8> =
        (0..cfg.weight_count()).map(|_| (rng.next_below(128) as i64 - 64) as i8).collect();
    let layer = Layer::new(cfg, LayerWeights::new(weights)).unwrap();

    let mut input = SpikeTensor::new(in_shape, steps);
    for t in 0..steps {
        for _ in 0..rng.next_below(30) {
            let c = rng.next_below(in_shape.channels as u64) as u16;
            let y = rng.next_below(in_shape.height as u64) as u16;
            let x = rng.next_below(in_shape.width as u64) as u16;
            input.insert(t, SpikeCoord::new(c, y, x)).unwrap();
        }
    }
    LayerCase { layer, input, steps }
}

/// A random valid partition: channel chunks, each optionally split once
/// along y.
fn random_plan(case: &LayerCase, seed: u64) -> TilePlan {
    let mut rng = SplitMix64::new(seed);
    let out = case.layer.cfg.output_shape(case.input.shape()).unwrap();
    let mut tiles = Vec::new();
    let mut start = 0;
    while start < out.channels {
        let len = 1 + rng.next_below(out.channels as u64) as usize;
        let end = (start + len).min(out.channels);
        let split_y = out.height > 1 && rng.next_below(2) == 1;
        if split_y {
            let mid = 1 + rng.next_below(out.height as u64 - 1) as usize;
            tiles.push(Tile {
                channels: start..end,
                window: SpatialWindow { y: 0..mid, x: 0..out.width },
            });
            tiles.push(Tile {
                channels: start..end,
                window: SpatialWindow { y: mid..out.height, x: 0..out.width },
            });
        } else {
            tiles.push(Tile { channels: start..end, window: SpatialWindow::full(out) });
        }
        start = end;
    }
    TilePlan {
        tiles,
        kernel_memory_budget: case.layer.cfg.weight_count(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tiled_execution_matches_untiled(
        seed in any::<u64>(),
        fully_connected in any::<bool>(),
        in_ch in 1usize..=3,
        out_ch in 1usize..=16,
        kernel in 1usize..=3,
        stride in 1usize..=2,
        height in 1usize..=16,
        width in 1usize..=16,
        steps in 1usize..=6,
    ) {
        let case = build_case(seed, fully_connected, in_ch, out_ch, kernel, stride, height, width, steps);
        let untiled = run_layer(&case.layer, &case.input, case.steps).unwrap();

        let plan = random_plan(&case, seed ^ 0xABCD);
        let tiled = run_layer_tiled(&case.layer, &case.input, case.steps, &plan).unwrap();
        prop_assert_eq!(&tiled, &untiled);

        // And the planner's own output agrees too.
        let budget = case.layer.cfg.weights_per_channel()
            * (1 + (seed % case.layer.cfg.out_channels as u64) as usize);
        let planned = plan_tiles(&case.layer.cfg, case.input.shape(), budget).unwrap();
        let tiled = run_layer_tiled(&case.layer, &case.input, case.steps, &planned).unwrap();
        prop_assert_eq!(&tiled, &untiled);
    }

    #[test]
    fn no_neuron_spikes_inside_its_refractory_gap(
        seed in any::<u64>(),
        in_ch in 1usize..=2,
        out_ch in 1usize..=8,
        kernel in 1usize..=3,
        height in 2usize..=12,
        width in 2usize..=12,
    ) {
        let case = build_case(seed, false, in_ch, out_ch, kernel, 1, height, width, 10);
        let out = run_layer(&case.layer, &case.input, case.steps).unwrap();
        let gap = case.layer.cfg.refractory_steps as usize;
        let mut last_spike: std::collections::HashMap<SpikeCoord, usize> = Default::default();
        for t in 0..out.num_steps() {
            for coord in out.step(t) {
                if let Some(prev) = last_spike.insert(*coord, t) {
                    prop_assert!(
                        t - prev > gap,
                        "neuron {:?} fired at {} and {} with refractory {}",
                        coord, prev, t, gap
                    );
                }
            }
        }
    }

    #[test]
    fn membrane_rests_at_base_right_after_a_spike(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let cfg = SnnLayerConfig {
            kind: LayerKind::FullyConnected,
            in_channels: 1,
            out_channels: 1,
            kernel: (1, 1),
            stride: 1,
            base_potential: (rng.next_below(10) as i16) - 5,
            threshold: 10 + rng.next_below(40) as i16,
            threshold_adapt: ThresholdAdapt {
                increment: rng.next_below(6) as i16,
                decay: rng.next_below(3) as i16,
            },
            refractory_steps: rng.next_below(3) as u32,
            timestep_shift: rng.next_below(3) as u32,
        };
        let mut state = NeuronState::resting(&cfg);
        for _ in 0..200 {
            let input = (rng.next_below(120) as i64 - 30) as i16;
            let spiked = step_neuron(&mut state, &cfg, input);
            if spiked {
                prop_assert_eq!(state.membrane, cfg.base_potential);
            }
            // The effective threshold never decays below the configured one.
            prop_assert!(state.eff_threshold >= cfg.threshold);
        }
    }

    #[test]
    fn extra_input_never_reduces_spike_counts_without_leak_or_adaptation(
        seed in any::<u64>(),
        in_ch in 1usize..=2,
        out_ch in 1usize..=6,
        kernel in 1usize..=3,
        height in 2usize..=10,
        width in 2usize..=10,
        steps in 1usize..=6,
    ) {
        // Monotone-drive case: zero leak, zero adaptation, zero refractory
        // gap, non-negative weights.
        let mut case = build_case(seed, false, in_ch, out_ch, kernel, 1, height, width, steps);
        let cfg = SnnLayerConfig {
            threshold_adapt: ThresholdAdapt::NONE,
            refractory_steps: 0,
            timestep_shift: 0,
            base_potential: 0,
            ..case.layer.cfg.clone()
        };
        let weights: Vec<i8> = case
            .layer
            .weights()
            .data()
            .iter()
            .map(|w| w.unsigned_abs() as i8)
            .collect();
        case.layer = Layer::new(cfg, LayerWeights::new(weights)).unwrap();

        let base_counts = run_layer(&case.layer, &case.input, case.steps)
            .unwrap()
            .counts_per_site();

        // Add a handful of extra input spikes.
        let mut rng = SplitMix64::new(seed ^ 0x5EED);
        let mut richer = case.input.clone();
        let shape = richer.shape();
        for _ in 0..10 {
            let t = rng.next_below(case.steps as u64) as usize;
            let c = rng.next_below(shape.channels as u64) as u16;
            let y = rng.next_below(shape.height as u64) as u16;
            let x = rng.next_below(shape.width as u64) as u16;
            richer.insert(t, SpikeCoord::new(c, y, x)).unwrap();
        }
        let richer_counts =
            run_layer(&case.layer, &richer, case.steps).unwrap().counts_per_site();
        for (site, (a, b)) in base_counts.iter().zip(&richer_counts).enumerate() {
            prop_assert!(b >= a, "site {site}: {b} < {a} after adding input");
        }
    }
}
