//! Scenario-driven front end for the event pipeline simulator.
//!
//! Wires the stimulus, sensor, readout codec, spiking engine and budget
//! models into reproducible end-to-end runs, and formats the benchmark
//! tables the binary prints.

pub mod pipeline;
pub mod render;
pub mod scenario;
pub mod tables;
