//! End-to-end scenario execution and trace output.
//!
//! One run walks the whole pipeline: stimulus frames through the sensor
//! model, readout filtering, SAER encoding, timestep binning and network
//! inference, then attaches the budget table. The trace lands in an output
//! directory as CSV / JSON-lines / raw stream files whose bytes are a pure
//! function of the scenario; wall-clock metadata goes to a separate file so
//! the payload stays reproducible.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

use evpipe_core::budget::PipelineBudget;
use evpipe_core::dvs::{suppress, DvsSensor};
use evpipe_core::event::EventFrame;
use evpipe_core::geometry::{HEIGHT, WIDTH};
use evpipe_core::saer::{SaerStream, STREAM_BYTES};
use evpipe_core::snn::spike_tensor_from_frames;

use crate::scenario::Scenario;

/// Everything one run produces.
#[derive(Debug)]
pub struct RunTrace {
    pub scenario_name: String,
    pub seed: u64,
    pub samples: u64,
    pub timesteps: usize,
    pub frame_event_counts: Vec<usize>,
    pub frame_digests: Vec<u64>,
    pub frame_streams: Vec<Vec<u8>>,
    pub per_layer_step_counts: Vec<Vec<u64>>,
    pub class_counts: Vec<u64>,
    pub budget: PipelineBudget,
    pub wall_ms: f64,
}

/// 64-bit FNV-1a, the stable per-frame stream digest.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xCBF2_9CE4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

/// Runs a scenario through every pipeline stage.
pub fn run_scenario(sc: &Scenario) -> Result<RunTrace> {
    let started = Instant::now();
    let mut sensor = DvsSensor::new(sc.dvs.clone()).context("sensor stage")?;
    sensor.initialize(&sc.stimulus.frame(0, sc.seed));

    let mut history: Vec<EventFrame> = Vec::new();
    let mut frames = Vec::with_capacity(sc.samples as usize);
    let mut frame_event_counts = Vec::with_capacity(sc.samples as usize);
    let mut frame_digests = Vec::with_capacity(sc.samples as usize);
    let mut frame_streams = Vec::with_capacity(sc.samples as usize);

    for i in 0..sc.samples {
        let brightness = sc.stimulus.frame(i, sc.seed);
        let raw = sensor.sample(&brightness, i);
        // The filters see the raw readout history, so flicker detection can
        // observe the alternation the filter itself removes.
        let filtered = suppress(&raw, &history, &sc.dvs);
        history.push(raw);
        if history.len() > sc.dvs.flicker_window {
            history.remove(0);
        }

        let bytes = SaerStream::encode(&filtered).to_bytes();
        debug_assert_eq!(bytes.len(), STREAM_BYTES);
        frame_event_counts.push(filtered.event_count());
        frame_digests.push(fnv1a64(&bytes));
        frame_streams.push(bytes);
        frames.push(filtered);
    }

    let tensor = spike_tensor_from_frames(&frames, sc.frames_per_timestep);
    let timesteps = tensor.num_steps();
    let output = sc
        .network
        .run(&tensor, timesteps)
        .context("inference stage")?;

    Ok(RunTrace {
        scenario_name: sc.name.clone(),
        seed: sc.seed,
        samples: sc.samples,
        timesteps,
        frame_event_counts,
        frame_digests,
        frame_streams,
        per_layer_step_counts: output.per_layer_step_counts,
        class_counts: output.class_counts,
        budget: sc.budget.clone(),
        wall_ms: started.elapsed().as_secs_f64() * 1000.0,
    })
}

#[derive(Serialize)]
struct TraceSummary<'a> {
    scenario: &'a str,
    seed: u64,
    samples: u64,
    timesteps: usize,
    sensor_width: usize,
    sensor_height: usize,
    total_events: usize,
    per_layer_spikes: Vec<u64>,
    class_counts: &'a [u64],
}

/// Writes the trace files into `out_dir`:
///
/// - `trace.json` run summary (one JSON line)
/// - `frames.csv` per-frame event counts and stream digests
/// - `frames.bin` the raw SAER streams, 6864 bytes per frame
/// - `spikes.csv` per-layer per-timestep spike counts
/// - `classes.csv` final per-class spike counts
/// - `budget.csv` the stage/total budget table
/// - `run_meta.json` wall-clock metadata, excluded from reproducibility
pub fn write_trace(trace: &RunTrace, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let write = |name: &str, bytes: &[u8]| -> Result<()> {
        let path = out_dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))
    };

    let summary = TraceSummary {
        scenario: &trace.scenario_name,
        seed: trace.seed,
        samples: trace.samples,
        timesteps: trace.timesteps,
        sensor_width: WIDTH,
        sensor_height: HEIGHT,
        total_events: trace.frame_event_counts.iter().sum(),
        per_layer_spikes: trace
            .per_layer_step_counts
            .iter()
            .map(|steps| steps.iter().sum())
            .collect(),
        class_counts: &trace.class_counts,
    };
    let mut json = serde_json::to_string(&summary).expect("summary serializes");
    json.push('\n');
    write("trace.json", json.as_bytes())?;

    let mut frames_csv = String::from("sample_index,event_count,saer_digest\n");
    for (i, (count, digest)) in
        trace.frame_event_counts.iter().zip(&trace.frame_digests).enumerate()
    {
        frames_csv.push_str(&format!("{i},{count},{digest:016x}\n"));
    }
    write("frames.csv", frames_csv.as_bytes())?;

    let mut bin = Vec::with_capacity(trace.frame_streams.len() * STREAM_BYTES);
    for stream in &trace.frame_streams {
        bin.extend_from_slice(stream);
    }
    write("frames.bin", &bin)?;

    let mut spikes_csv = String::from("layer,timestep,spike_count\n");
    for (layer, steps) in trace.per_layer_step_counts.iter().enumerate() {
        for (t, count) in steps.iter().enumerate() {
            spikes_csv.push_str(&format!("{layer},{t},{count}\n"));
        }
    }
    write("spikes.csv", spikes_csv.as_bytes())?;

    let mut classes_csv = String::from("class,spike_count\n");
    for (class, count) in trace.class_counts.iter().enumerate() {
        classes_csv.push_str(&format!("{class},{count}\n"));
    }
    write("classes.csv", classes_csv.as_bytes())?;

    write("budget.csv", trace.budget.to_csv().as_bytes())?;

    write("run_meta.json", format!("{{\"wall_ms\":{:.3}}}\n", trace.wall_ms).as_bytes())?;
    Ok(())
}
