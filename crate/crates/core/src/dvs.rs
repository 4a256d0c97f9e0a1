//! Log-threshold event generation.
//!
//! Each pixel memorizes the log of the brightness seen when it last emitted
//! an event and compares every new sample against that stored value. When the
//! difference crosses the ON (increase) or OFF (decrease) threshold the pixel
//! emits one event bit and the memory absorbs all full threshold crossings,
//! so a large change collapses to a single bit per sample while the memory
//! stays aligned to the threshold grid.

use thiserror::Error;

use crate::event::{EventFrame, Polarity};
use crate::geometry::{HEIGHT, PIXELS, WIDTH};

#[derive(Debug, Error, PartialEq)]
pub enum DvsError {
    #[error("invalid sensor config: {0}")]
    Config(String),
    #[error("event rate must be non-negative, got {0}")]
    NegativeRate(f64),
    #[error("brightness frame must hold {expected} values, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("brightness value at index {index} must be finite and non-negative")]
    InvalidLuminance { index: usize },
}

/// Threshold and readout-filter configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DvsConfig {
    /// Log-units of brightness increase per ON event.
    pub theta_on: f64,
    /// Log-units of brightness decrease per OFF event.
    pub theta_off: f64,
    /// Frame sample request rate.
    pub sample_rate_hz: f64,
    /// Enables the pre-readout noise and flicker filters.
    pub suppression_enabled: bool,
    /// History depth, in frames, of the flicker filter.
    pub flicker_window: usize,
    /// Brightness floor applied before taking the log.
    pub epsilon_lum: f64,
}

impl Default for DvsConfig {
    fn default() -> Self {
        DvsConfig {
            theta_on: 0.2,
            theta_off: 0.2,
            sample_rate_hz: 7200.0,
            suppression_enabled: false,
            flicker_window: 2,
            epsilon_lum: 1e-3,
        }
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl DvsConfig {
    pub fn validate(&self) -> Result<(), DvsError> {
        if !positive(self.theta_on) || !positive(self.theta_off) {
            return Err(DvsError::Config("thresholds must be positive".into()));
        }
        if !positive(self.sample_rate_hz) {
            return Err(DvsError::Config("sample_rate_hz must be positive".into()));
        }
        if !positive(self.epsilon_lum) {
            return Err(DvsError::Config("epsilon_lum must be positive".into()));
        }
        Ok(())
    }
}

/// One full-array brightness sample, row-major, values >= 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BrightnessFrame {
    values: Vec<f64>,
}

impl BrightnessFrame {
    pub fn new(values: Vec<f64>) -> Result<Self, DvsError> {
        if values.len() != PIXELS {
            return Err(DvsError::WrongLength { expected: PIXELS, got: values.len() });
        }
        for (index, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(DvsError::InvalidLuminance { index });
            }
        }
        Ok(BrightnessFrame { values })
    }

    pub fn constant(lum: f64) -> Result<Self, DvsError> {
        Self::new(vec![lum; PIXELS])
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * WIDTH + x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Scales every value by `c`, useful for log-invariance checks.
    pub fn scaled(&self, c: f64) -> Result<Self, DvsError> {
        Self::new(self.values.iter().map(|v| v * c).collect())
    }
}

/// Per-pixel sensor state: the memorized log-brightness array.
///
/// Owned by one simulation context; `sample` mutates it in place.
pub struct DvsSensor {
    cfg: DvsConfig,
    memorized_log: Vec<f64>,
}

impl DvsSensor {
    /// New sensor with every pixel memorizing the brightness floor.
    pub fn new(cfg: DvsConfig) -> Result<Self, DvsError> {
        cfg.validate()?;
        let floor = cfg.epsilon_lum.ln();
        Ok(DvsSensor { cfg, memorized_log: vec![floor; PIXELS] })
    }

    /// Re-seeds the pixel memories from a brightness frame without emitting
    /// events. Running this on the first stimulus sample avoids a spurious
    /// whole-array burst at power-on.
    pub fn initialize(&mut self, brightness: &BrightnessFrame) {
        for (mem, b) in self.memorized_log.iter_mut().zip(brightness.values()) {
            *mem = b.max(self.cfg.epsilon_lum).ln();
        }
    }

    pub fn config(&self) -> &DvsConfig {
        &self.cfg
    }

    /// Test probe: the memorized log-brightness of one pixel.
    pub fn memorized_log(&self, x: usize, y: usize) -> f64 {
        self.memorized_log[y * WIDTH + x]
    }

    /// Compares one brightness sample against the pixel memories and returns
    /// the resulting event frame.
    ///
    /// Per pixel, with d the log-brightness change since the memorized value:
    /// d >= theta_on sets the ON bit and the memory absorbs
    /// `theta_on * floor(d / theta_on)`; d <= -theta_off mirrors that for OFF.
    /// At most one polarity bit per pixel per sample.
    pub fn sample(&mut self, brightness: &BrightnessFrame, sample_index: u64) -> EventFrame {
        let mut frame = EventFrame::empty(sample_index);
        let theta_on = self.cfg.theta_on;
        let theta_off = self.cfg.theta_off;
        for (idx, (mem, b)) in
            self.memorized_log.iter_mut().zip(brightness.values()).enumerate()
        {
            let cur = b.max(self.cfg.epsilon_lum).ln();
            let d = cur - *mem;
            let x = (idx % WIDTH) as u16;
            let y = (idx / WIDTH) as u16;
            if d >= theta_on {
                frame.set(x, y, Polarity::On).expect("in range, single polarity");
                *mem += theta_on * (d / theta_on).floor();
            } else if d <= -theta_off {
                frame.set(x, y, Polarity::Off).expect("in range, single polarity");
                *mem -= theta_off * (-d / theta_off).floor();
            }
        }
        frame
    }
}

/// Signed count of full threshold crossings between two log-brightness
/// values: the events a per-crossing sensor would have emitted.
pub fn pending_event_crossings(old_log: f64, new_log: f64, theta_on: f64, theta_off: f64) -> i64 {
    debug_assert!(theta_on > 0.0 && theta_off > 0.0);
    if new_log >= old_log {
        ((new_log - old_log) / theta_on).floor() as i64
    } else {
        -(((old_log - new_log) / theta_off).floor() as i64)
    }
}

/// Pre-readout noise and flicker suppression.
///
/// Clears (a) events whose eight neighbors are all inactive in this frame and
/// (b) events at pixels whose polarity strictly alternated across every frame
/// of the history window into the current frame. `history` is ordered oldest
/// first; the flicker rule only fires once the window is full. Never adds
/// events and never touches the pixel memories.
pub fn suppress(frame: &EventFrame, history: &[EventFrame], cfg: &DvsConfig) -> EventFrame {
    if !cfg.suppression_enabled {
        return frame.clone();
    }
    let window = if cfg.flicker_window > 0 && history.len() >= cfg.flicker_window {
        Some(&history[history.len() - cfg.flicker_window..])
    } else {
        None
    };
    let mut out = frame.clone();
    for (x, y, polarity) in frame.iter_events() {
        let isolated = active_neighbors(frame, x, y) == 0;
        let flicker = window.is_some_and(|w| alternates_through(w, frame, x, y, polarity));
        if isolated || flicker {
            out.clear(x, y);
        }
    }
    out
}

fn active_neighbors(frame: &EventFrame, x: u16, y: u16) -> usize {
    let mut n = 0;
    for dy in -1i32..=1 {
        for dx in -1i32..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let nx = x as i32 + dx;
            let ny = y as i32 + dy;
            if nx < 0 || ny < 0 || nx >= WIDTH as i32 || ny >= HEIGHT as i32 {
                continue;
            }
            if frame.polarity_at(nx as u16, ny as u16).is_some() {
                n += 1;
            }
        }
    }
    n
}

fn alternates_through(
    window: &[EventFrame],
    current: &EventFrame,
    x: u16,
    y: u16,
    current_polarity: Polarity,
) -> bool {
    debug_assert!(current.polarity_at(x, y) == Some(current_polarity));
    let mut expected = current_polarity;
    // Walk backwards from the current frame: each earlier frame must hold the
    // flipped polarity of its successor.
    for f in window.iter().rev() {
        expected = expected.flip();
        if f.polarity_at(x, y) != Some(expected) {
            return false;
        }
    }
    true
}

/// Sensor power: a constant analog floor plus a digital term linear in the
/// event rate and capped by the digital budget.
#[derive(Debug, Clone, PartialEq)]
pub struct DvsPowerModel {
    pub analog_mw: f64,
    pub digital_mw_max: f64,
    pub digital_mw_per_meps: f64,
}

/// Event rate of back-to-back full frames at the default sample rate,
/// in millions of events per second: 13728 * 7200 / 1e6.
pub const SATURATION_RATE_MEPS: f64 = (PIXELS as f64) * 7200.0 / 1e6;

impl Default for DvsPowerModel {
    fn default() -> Self {
        // The linear coefficient is anchored so the digital cap is reached
        // exactly at the saturation rate.
        DvsPowerModel {
            analog_mw: 0.36,
            digital_mw_max: 0.06,
            digital_mw_per_meps: 0.06 / SATURATION_RATE_MEPS,
        }
    }
}

impl DvsPowerModel {
    /// Camera power at a given event rate.
    pub fn sensor_power_mw(&self, event_rate_meps: f64) -> Result<f64, DvsError> {
        if event_rate_meps < 0.0 {
            return Err(DvsError::NegativeRate(event_rate_meps));
        }
        Ok(self.analog_mw
            + self.digital_mw_max.min(self.digital_mw_per_meps * event_rate_meps))
    }

    /// Camera power with the digital path saturated.
    pub fn saturated_power_mw(&self) -> f64 {
        self.analog_mw + self.digital_mw_max
    }
}
