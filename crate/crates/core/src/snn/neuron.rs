//! Integrate-and-fire neuron dynamics.

use super::layer::SnnLayerConfig;

/// Firing-threshold adaptation: `increment` is added to the effective
/// threshold on every spike, `decay` is removed once per step until the
/// configured threshold is reached again. Zero increment disables adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdAdapt {
    pub increment: i16,
    pub decay: i16,
}

impl ThresholdAdapt {
    pub const NONE: ThresholdAdapt = ThresholdAdapt { increment: 0, decay: 0 };
}

/// Mutable state of one neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeuronState {
    pub membrane: i16,
    pub eff_threshold: i16,
    pub refractory_remaining: u32,
}

impl NeuronState {
    /// Resting state for a layer: membrane at the base potential, effective
    /// threshold at the configured threshold, not refractory.
    pub fn resting(cfg: &SnnLayerConfig) -> Self {
        NeuronState {
            membrane: cfg.base_potential,
            eff_threshold: cfg.threshold,
            refractory_remaining: 0,
        }
    }
}

/// Advances one neuron by one timestep and reports whether it fired.
///
/// Order within the step: the effective threshold first decays one quantum
/// toward the configured threshold (never below it). A refractory neuron then
/// just counts the step down, discarding its input. Otherwise the membrane
/// leaks by the configured right shift, integrates the weighted input, and on
/// reaching the effective threshold the neuron fires: membrane back to the
/// base potential, refractory count reloaded, threshold bumped by the
/// adaptation increment.
pub fn step_neuron(state: &mut NeuronState, cfg: &SnnLayerConfig, weighted_input: i16) -> bool {
    state.eff_threshold = cfg
        .threshold
        .max(state.eff_threshold.saturating_sub(cfg.threshold_adapt.decay));

    if state.refractory_remaining > 0 {
        state.refractory_remaining -= 1;
        return false;
    }

    let leaked = state.membrane >> cfg.timestep_shift.min(15);
    state.membrane = leaked.saturating_add(weighted_input);
    if state.membrane >= state.eff_threshold {
        state.membrane = cfg.base_potential;
        state.refractory_remaining = cfg.refractory_steps;
        state.eff_threshold = state.eff_threshold.saturating_add(cfg.threshold_adapt.increment);
        return true;
    }
    false
}
