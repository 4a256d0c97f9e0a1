//! Synchronous address-event readout.
//!
//! A frame streams out as 3432 two-byte words, one per 2x2 pixel quad in
//! row-major scan order: an address byte carrying the quad column (the row is
//! implicit in scan position) and an event byte packing the four pixels'
//! ON/OFF bits. The stream length is fixed regardless of how many events the
//! frame holds, which is what makes the readout time a pure function of the
//! clock. The module also carries the per-event USB transfer model used to
//! compare interface throughput.

use std::str::FromStr;

use thiserror::Error;

use crate::event::{EventFrame, Polarity};
use crate::geometry::{PIXELS, QUADS, QUAD_COLS, QUAD_ROWS};

/// Serialized size of one frame: two bytes per quad.
pub const STREAM_BYTES: usize = QUADS * 2;

/// Per-event cost of a 32-bit event on USB 2.0 (480 Mbit/s).
pub const USB_EVENT_TIME_US: f64 = 0.067;

/// Host-side power while fetching over the on-chip SAER interface.
pub const SAER_HOST_POWER_MW: f64 = 10.656;

/// Reference throughput of an external FPGA bridge to the same sensor.
pub const FPGA_BRIDGE_EFPS: f64 = 874.0;
/// Measured power of that FPGA bridge.
pub const FPGA_BRIDGE_POWER_MW: f64 = 17.6;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SaerError {
    #[error("malformed stream: expected {QUADS} words, got {got}")]
    WrongLength { got: usize },
    #[error("malformed stream: odd byte count {len}")]
    OddByteCount { len: usize },
    #[error("malformed stream: word {index} carries address {got}, expected {expected}")]
    AddressMismatch { index: usize, got: u8, expected: u8 },
    #[error("malformed stream: word {index} sets both polarities for pixel {pixel} of its quad")]
    ConflictingPolarity { index: usize, pixel: usize },
}

/// One readout word: quad-column address plus the quad's event byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SaerWord {
    pub addr: u8,
    pub events: u8,
}

/// A full frame readout: exactly 3432 words in scan order, addresses
/// cycling 0..66.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaerStream {
    words: Vec<SaerWord>,
}

impl SaerStream {
    /// Streams a frame out in scan order. Always 3432 words.
    pub fn encode(frame: &EventFrame) -> SaerStream {
        let mut words = Vec::with_capacity(QUADS);
        for qy in 0..QUAD_ROWS {
            for qx in 0..QUAD_COLS {
                words.push(SaerWord { addr: qx as u8, events: frame.quad_byte(qx, qy) });
            }
        }
        SaerStream { words }
    }

    /// Validates word count and the address cycle.
    pub fn from_words(words: Vec<SaerWord>) -> Result<SaerStream, SaerError> {
        if words.len() != QUADS {
            return Err(SaerError::WrongLength { got: words.len() });
        }
        for (index, w) in words.iter().enumerate() {
            let expected = (index % QUAD_COLS) as u8;
            if w.addr != expected {
                return Err(SaerError::AddressMismatch { index, got: w.addr, expected });
            }
        }
        Ok(SaerStream { words })
    }

    /// Parses the fixture byte form: address byte then event byte per word,
    /// no framing header.
    pub fn from_bytes(bytes: &[u8]) -> Result<SaerStream, SaerError> {
        if !bytes.len().is_multiple_of(2) {
            return Err(SaerError::OddByteCount { len: bytes.len() });
        }
        let words = bytes
            .chunks_exact(2)
            .map(|c| SaerWord { addr: c[0], events: c[1] })
            .collect();
        Self::from_words(words)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(STREAM_BYTES);
        for w in &self.words {
            out.push(w.addr);
            out.push(w.events);
        }
        out
    }

    pub fn words(&self) -> &[SaerWord] {
        &self.words
    }

    /// Reconstructs the event frame. The inverse of `encode`; rejects words
    /// that set both polarities for one pixel.
    pub fn decode(&self) -> Result<EventFrame, SaerError> {
        let mut frame = EventFrame::empty(0);
        for (index, w) in self.words.iter().enumerate() {
            if w.events == 0 {
                continue;
            }
            let qx = index % QUAD_COLS;
            let qy = index / QUAD_COLS;
            for slot in 0..4usize {
                let on = w.events >> (7 - 2 * slot) & 1 != 0;
                let off = w.events >> (6 - 2 * slot) & 1 != 0;
                if on && off {
                    return Err(SaerError::ConflictingPolarity { index, pixel: slot });
                }
                let x = (2 * qx + slot % 2) as u16;
                let y = (2 * qy + slot / 2) as u16;
                // Each pixel belongs to exactly one word, so after the
                // both-bits check above these sets cannot conflict.
                if on {
                    frame.set(x, y, Polarity::On).expect("pixel owned by this word");
                }
                if off {
                    frame.set(x, y, Polarity::Off).expect("pixel owned by this word");
                }
            }
        }
        Ok(frame)
    }
}

/// Convenience: parse the byte form and decode it in one step.
pub fn decode_bytes(bytes: &[u8]) -> Result<EventFrame, SaerError> {
    SaerStream::from_bytes(bytes)?.decode()
}

/// Readout clocking.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockConfig {
    pub system_clock_hz: f64,
    pub cycles_per_word: u32,
}

impl Default for ClockConfig {
    fn default() -> Self {
        ClockConfig { system_clock_hz: 50e6, cycles_per_word: 1 }
    }
}

impl ClockConfig {
    pub fn validate(&self) -> Result<(), String> {
        let rate_ok = self.system_clock_hz.is_finite() && self.system_clock_hz > 0.0;
        if !rate_ok || self.cycles_per_word == 0 {
            return Err("clock rate and cycles_per_word must be positive".into());
        }
        Ok(())
    }
}

/// Time to stream one full frame over SAER, independent of event count.
pub fn saer_frame_time_us(clk: &ClockConfig) -> f64 {
    (QUADS as u64 * clk.cycles_per_word as u64) as f64 * 1e6 / clk.system_clock_hz
}

/// Time to move `n_events` 32-bit events over USB 2.0.
/// Meaningful for n_events up to one full frame (13728).
pub fn usb_frame_time_us(n_events: usize) -> f64 {
    debug_assert!(n_events <= PIXELS);
    n_events as f64 * USB_EVENT_TIME_US
}

/// The data-fetching interfaces compared by the benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub enum ReadoutInterface {
    /// Direct on-chip SAER port; throughput equals the sample request rate.
    SaerSoc { sample_rate_hz: f64 },
    /// External low-power FPGA bridge, a fixed reference point.
    SaerFpga,
    /// USB 2.0 streaming of 32-bit events.
    Usb,
}

/// Host power figure for an interface row: a measured value or the
/// watt-class sentinel for platforms drawing orders of magnitude more.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterfacePower {
    Milliwatts(f64),
    WattClass,
}

impl ReadoutInterface {
    /// Event-frames per second, assuming fully populated frames.
    pub fn throughput_efps(&self) -> f64 {
        match self {
            ReadoutInterface::SaerSoc { sample_rate_hz } => *sample_rate_hz,
            ReadoutInterface::SaerFpga => FPGA_BRIDGE_EFPS,
            ReadoutInterface::Usb => 1e6 / usb_frame_time_us(PIXELS),
        }
    }

    pub fn power(&self) -> InterfacePower {
        match self {
            ReadoutInterface::SaerSoc { .. } => InterfacePower::Milliwatts(SAER_HOST_POWER_MW),
            ReadoutInterface::SaerFpga => InterfacePower::Milliwatts(FPGA_BRIDGE_POWER_MW),
            ReadoutInterface::Usb => InterfacePower::WattClass,
        }
    }
}

impl FromStr for ReadoutInterface {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "saer_soc" => Ok(ReadoutInterface::SaerSoc { sample_rate_hz: 7200.0 }),
            "saer_fpga" => Ok(ReadoutInterface::SaerFpga),
            "usb" => Ok(ReadoutInterface::Usb),
            other => Err(format!("unknown interface tag {other:?}")),
        }
    }
}
