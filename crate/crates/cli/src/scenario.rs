//! Scenario files.
//!
//! A scenario is a TOML description of one reproducible simulation run:
//! stimulus, sensor thresholds, readout clock, network and budget overrides.
//! Keys carry their units in the name (`sample_rate_hz`, `window_ms`). Every
//! referenced file is resolved relative to the scenario file and loaded up
//! front, so missing inputs fail at load time with the offending path.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use evpipe_core::budget::PipelineBudget;
use evpipe_core::dvs::DvsConfig;
use evpipe_core::saer::ClockConfig;
use evpipe_core::snn::{load_network, SnnNetwork};
use evpipe_core::stimulus::{load_pgm_dir, MovingBar, MovingDisk, Stimulus};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    seed: u64,
    samples: u64,
    stimulus: StimulusSection,
    #[serde(default)]
    dvs: DvsSection,
    #[serde(default)]
    clock: ClockSection,
    network: NetworkSection,
    #[serde(default)]
    budget: BudgetSection,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum StimulusSection {
    MovingBar {
        bar_width_px: usize,
        velocity_px_per_sample: f64,
        background_lum: f64,
        bar_lum: f64,
        #[serde(default)]
        jitter_log_sigma: f64,
    },
    MovingDisk {
        radius_px: f64,
        start_x: f64,
        start_y: f64,
        velocity_x_px_per_sample: f64,
        velocity_y_px_per_sample: f64,
        background_lum: f64,
        disk_lum: f64,
        #[serde(default)]
        jitter_log_sigma: f64,
    },
    PgmDir {
        path: PathBuf,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DvsSection {
    theta_on: f64,
    theta_off: f64,
    sample_rate_hz: f64,
    suppression_enabled: bool,
    flicker_window: usize,
    epsilon_lum: f64,
}

impl Default for DvsSection {
    fn default() -> Self {
        let d = DvsConfig::default();
        DvsSection {
            theta_on: d.theta_on,
            theta_off: d.theta_off,
            sample_rate_hz: d.sample_rate_hz,
            suppression_enabled: d.suppression_enabled,
            flicker_window: d.flicker_window,
            epsilon_lum: d.epsilon_lum,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ClockSection {
    system_clock_hz: f64,
    cycles_per_word: u32,
}

impl Default for ClockSection {
    fn default() -> Self {
        let c = ClockConfig::default();
        ClockSection { system_clock_hz: c.system_clock_hz, cycles_per_word: c.cycles_per_word }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkSection {
    #[serde(default)]
    path: Option<PathBuf>,
    #[serde(default)]
    preset: Option<String>,
    #[serde(default)]
    weight_seed: Option<u64>,
    #[serde(default = "default_frames_per_timestep")]
    frames_per_timestep: usize,
}

fn default_frames_per_timestep() -> usize {
    1
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BudgetSection {
    window_ms: Option<f64>,
    frames_per_window: Option<u64>,
    avg_compute_power_mw: Option<f64>,
    sensing_power_mw: Option<f64>,
    preprocessing_latency_ms: Option<f64>,
    preprocessing_power_mw: Option<f64>,
    inference_latency_ms: Option<f64>,
    inference_power_mw: Option<f64>,
    pwm_power_mw: Option<f64>,
}

/// A fully resolved scenario, ready to run.
#[derive(Debug)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub samples: u64,
    pub stimulus: Stimulus,
    pub dvs: DvsConfig,
    pub clock: ClockConfig,
    pub network: SnnNetwork,
    pub frames_per_timestep: usize,
    pub budget: PipelineBudget,
}

/// Loads and validates a scenario file. `seed_override` replaces the
/// scenario seed (and with it any stochastic stimulus).
pub fn load_scenario(path: &Path, seed_override: Option<u64>) -> Result<Scenario> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario {}", path.display()))?;
    let file: ScenarioFile = toml::from_str(&text)
        .with_context(|| format!("invalid scenario {}", path.display()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let luminance = |name: &str, v: f64| -> Result<f64> {
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            bail!("field stimulus.{name} must be finite and non-negative, got {v}")
        }
    };
    let finite = |name: &str, v: f64| -> Result<f64> {
        if v.is_finite() {
            Ok(v)
        } else {
            bail!("field stimulus.{name} must be finite, got {v}")
        }
    };
    let sigma = |v: f64| -> Result<f64> {
        if v.is_finite() && (0.0..=10.0).contains(&v) {
            Ok(v)
        } else {
            bail!("field stimulus.jitter_log_sigma must lie in [0, 10], got {v}")
        }
    };

    let stimulus = match file.stimulus {
        StimulusSection::MovingBar {
            bar_width_px,
            velocity_px_per_sample,
            background_lum,
            bar_lum,
            jitter_log_sigma,
        } => Stimulus::MovingBar(MovingBar {
            bar_width_px,
            velocity_px_per_sample: finite("velocity_px_per_sample", velocity_px_per_sample)?,
            background_lum: luminance("background_lum", background_lum)?,
            bar_lum: luminance("bar_lum", bar_lum)?,
            jitter_log_sigma: sigma(jitter_log_sigma)?,
        }),
        StimulusSection::MovingDisk {
            radius_px,
            start_x,
            start_y,
            velocity_x_px_per_sample,
            velocity_y_px_per_sample,
            background_lum,
            disk_lum,
            jitter_log_sigma,
        } => Stimulus::MovingDisk(MovingDisk {
            radius_px: luminance("radius_px", radius_px)?,
            start_x: finite("start_x", start_x)?,
            start_y: finite("start_y", start_y)?,
            velocity_x_px_per_sample: finite(
                "velocity_x_px_per_sample",
                velocity_x_px_per_sample,
            )?,
            velocity_y_px_per_sample: finite(
                "velocity_y_px_per_sample",
                velocity_y_px_per_sample,
            )?,
            background_lum: luminance("background_lum", background_lum)?,
            disk_lum: luminance("disk_lum", disk_lum)?,
            jitter_log_sigma: sigma(jitter_log_sigma)?,
        }),
        StimulusSection::PgmDir { path: dir } => {
            let resolved = base.join(dir);
            Stimulus::Frames(
                load_pgm_dir(&resolved)
                    .with_context(|| format!("stimulus directory {}", resolved.display()))?,
            )
        }
    };

    let dvs = DvsConfig {
        theta_on: file.dvs.theta_on,
        theta_off: file.dvs.theta_off,
        sample_rate_hz: file.dvs.sample_rate_hz,
        suppression_enabled: file.dvs.suppression_enabled,
        flicker_window: file.dvs.flicker_window,
        epsilon_lum: file.dvs.epsilon_lum,
    };
    dvs.validate().context("field dvs")?;

    let clock = ClockConfig {
        system_clock_hz: file.clock.system_clock_hz,
        cycles_per_word: file.clock.cycles_per_word,
    };
    clock.validate().map_err(anyhow::Error::msg).context("field clock")?;

    let network = match (&file.network.path, &file.network.preset) {
        (Some(rel), None) => {
            let resolved = base.join(rel);
            load_network(&resolved)
                .with_context(|| format!("network description {}", resolved.display()))?
        }
        (None, Some(preset)) => match preset.as_str() {
            "reference" => {
                let weight_seed = file
                    .network
                    .weight_seed
                    .context("field network.weight_seed is required with a preset")?;
                SnnNetwork::reference(weight_seed)
            }
            other => bail!("field network.preset: unknown preset {other:?}"),
        },
        (Some(_), Some(_)) => bail!("field network: set either path or preset, not both"),
        (None, None) => bail!("field network: one of path or preset is required"),
    };
    if file.network.frames_per_timestep == 0 {
        bail!("field network.frames_per_timestep must be positive");
    }

    let non_negative = |name: &str, v: Option<f64>| -> Result<Option<f64>> {
        match v {
            Some(v) if !(v.is_finite() && v >= 0.0) => {
                bail!("field budget.{name} must be finite and non-negative, got {v}")
            }
            other => Ok(other),
        }
    };
    let mut budget = PipelineBudget::default();
    let b = &file.budget;
    if let Some(v) = non_negative("window_ms", b.window_ms)? {
        budget.window_ms = v;
        budget.stages[0].latency_ms = v;
    }
    if let Some(v) = b.frames_per_window {
        budget.frames_per_window = v;
    }
    if let Some(v) = non_negative("avg_compute_power_mw", b.avg_compute_power_mw)? {
        budget.avg_compute_power_mw = v;
    }
    if let Some(v) = non_negative("sensing_power_mw", b.sensing_power_mw)? {
        budget.stages[0].power_mw = v;
    }
    if let Some(v) = non_negative("preprocessing_latency_ms", b.preprocessing_latency_ms)? {
        budget.stages[1].latency_ms = v;
    }
    if let Some(v) = non_negative("preprocessing_power_mw", b.preprocessing_power_mw)? {
        budget.stages[1].power_mw = v;
    }
    if let Some(v) = non_negative("inference_latency_ms", b.inference_latency_ms)? {
        budget.stages[2].latency_ms = v;
    }
    if let Some(v) = non_negative("inference_power_mw", b.inference_power_mw)? {
        budget.stages[2].power_mw = v;
    }
    if let Some(v) = non_negative("pwm_power_mw", b.pwm_power_mw)? {
        budget.stages[3].power_mw = v;
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());

    Ok(Scenario {
        name,
        seed: seed_override.unwrap_or(file.seed),
        samples: file.samples,
        stimulus,
        dvs,
        clock,
        network,
        frames_per_timestep: file.network.frames_per_timestep,
        budget,
    })
}
