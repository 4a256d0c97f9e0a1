//! Deterministic models of an event-camera vision pipeline.
//!
//! The crate covers the full path from light to motor command for a
//! DVS132S-class sensor attached to a low-power SoC:
//!
//! - [`event`] — events, ON/OFF event frames and the quad-pixel packing
//! - [`dvs`] — log-threshold event generation, readout filtering, sensor power
//! - [`stimulus`] — synthetic brightness sources and PGM ingestion
//! - [`saer`] — the synchronous address-event readout codec and its timing,
//!   plus the USB transfer model used for interface comparisons
//! - [`snn`] — a functional spiking-CNN engine with tiled execution
//! - [`budget`] — per-stage latency/power/energy composition of the closed loop
//!
//! Everything is pure value data and seeded arithmetic: the same inputs
//! always produce bit-identical outputs.

pub mod budget;
pub mod dvs;
pub mod event;
pub mod geometry;
pub mod rng;
pub mod saer;
pub mod snn;
pub mod stimulus;

pub use event::{Event, EventFrame, Polarity};
pub use geometry::SensorGeometry;
