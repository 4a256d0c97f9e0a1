//! Sparse spike tensors.

use std::collections::BTreeSet;

use super::SnnError;
use crate::event::{Event, EventFrame, Polarity};
use crate::geometry::{HEIGHT, WIDTH};

/// (channels, height, width) extent of one layer's activation volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl TensorShape {
    pub fn new(channels: usize, height: usize, width: usize) -> Self {
        TensorShape { channels, height, width }
    }

    /// Number of neurons in the volume.
    pub fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, c: &SpikeCoord) -> bool {
        (c.channel as usize) < self.channels
            && (c.y as usize) < self.height
            && (c.x as usize) < self.width
    }

    /// Flat channel-major index of a coordinate.
    pub fn index(&self, c: &SpikeCoord) -> usize {
        (c.channel as usize * self.height + c.y as usize) * self.width + c.x as usize
    }

    /// The event-frame input volume: two polarity channels over the array.
    pub fn sensor_input() -> Self {
        TensorShape::new(2, HEIGHT, WIDTH)
    }
}

/// One spike site. Ordering is channel-major, matching flat indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpikeCoord {
    pub channel: u16,
    pub y: u16,
    pub x: u16,
}

impl SpikeCoord {
    pub fn new(channel: u16, y: u16, x: u16) -> Self {
        SpikeCoord { channel, y, x }
    }
}

/// Timestep-indexed sets of spike coordinates. Within a timestep each
/// coordinate appears at most once and iteration order is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeTensor {
    shape: TensorShape,
    steps: Vec<BTreeSet<SpikeCoord>>,
}

impl SpikeTensor {
    pub fn new(shape: TensorShape, num_steps: usize) -> Self {
        SpikeTensor { shape, steps: vec![BTreeSet::new(); num_steps] }
    }

    pub fn shape(&self) -> TensorShape {
        self.shape
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn insert(&mut self, step: usize, coord: SpikeCoord) -> Result<(), SnnError> {
        if step >= self.steps.len() {
            return Err(SnnError::StepOutOfRange { step, steps: self.steps.len() });
        }
        if !self.shape.contains(&coord) {
            return Err(SnnError::CoordOutOfRange { coord, shape: self.shape });
        }
        self.steps[step].insert(coord);
        Ok(())
    }

    pub(crate) fn insert_unchecked(&mut self, step: usize, coord: SpikeCoord) {
        debug_assert!(step < self.steps.len() && self.shape.contains(&coord));
        self.steps[step].insert(coord);
    }

    /// Spikes of one timestep in coordinate order. Steps past the end of the
    /// tensor read as empty.
    pub fn step(&self, t: usize) -> impl Iterator<Item = &SpikeCoord> + '_ {
        self.steps.get(t).into_iter().flatten()
    }

    pub fn count_at(&self, t: usize) -> usize {
        self.steps.get(t).map_or(0, |s| s.len())
    }

    pub fn total_spikes(&self) -> usize {
        self.steps.iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_spikes() == 0
    }

    /// Spike count per flat coordinate, summed over all timesteps.
    pub fn counts_per_site(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.shape.len()];
        for set in &self.steps {
            for coord in set {
                counts[self.shape.index(coord)] += 1;
            }
        }
        counts
    }
}

/// Bins a sequence of event frames into the two-channel input tensor:
/// channel 0 carries ON events, channel 1 OFF events. `frames_per_step`
/// frames collapse into one timestep (a pixel active in any of them spikes).
pub fn spike_tensor_from_frames(frames: &[EventFrame], frames_per_step: usize) -> SpikeTensor {
    assert!(frames_per_step > 0, "frames_per_step must be positive");
    let steps = frames.len().div_ceil(frames_per_step);
    let mut tensor = SpikeTensor::new(TensorShape::sensor_input(), steps);
    for (i, frame) in frames.iter().enumerate() {
        let t = i / frames_per_step;
        for (x, y, polarity) in frame.iter_events() {
            let channel = match polarity {
                Polarity::On => 0,
                Polarity::Off => 1,
            };
            tensor.insert_unchecked(t, SpikeCoord::new(channel, y, x));
        }
    }
    tensor
}

/// Bins a raw event list into the input tensor, `bin_us` microseconds per
/// timestep.
pub fn spike_tensor_from_events(events: &[Event], bin_us: u64) -> Result<SpikeTensor, SnnError> {
    if bin_us == 0 {
        return Err(SnnError::Config("bin_us must be positive".into()));
    }
    let steps = events
        .iter()
        .map(|e| (e.t_us / bin_us) as usize + 1)
        .max()
        .unwrap_or(0);
    let mut tensor = SpikeTensor::new(TensorShape::sensor_input(), steps);
    for e in events {
        let t = (e.t_us / bin_us) as usize;
        let channel = match e.polarity {
            Polarity::On => 0,
            Polarity::Off => 1,
        };
        tensor.insert_unchecked(t, SpikeCoord::new(channel, e.y, e.x));
    }
    Ok(tensor)
}
