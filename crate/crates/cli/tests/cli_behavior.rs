//! Command-level behavior: scenario diagnostics, rendering and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use evpipe_cli::pipeline::{fnv1a64, run_scenario};
use evpipe_cli::scenario::load_scenario;

fn evpipe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_evpipe"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("evpipe-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const ZERO_CONTRAST: &str = r#"
seed = 1
samples = 6

[stimulus]
kind = "moving_bar"
bar_width_px = 8
velocity_px_per_sample = 1.0
background_lum = 0.4
bar_lum = 0.4

[network]
preset = "reference"
weight_seed = 3
"#;

#[test]
fn zero_contrast_stimulus_generates_no_events() {
    let dir = temp_dir("zerocontrast");
    let path = write_scenario(&dir, "flat.toml", ZERO_CONTRAST);
    let sc = load_scenario(&path, None).unwrap();
    let trace = run_scenario(&sc).unwrap();
    assert!(trace.frame_event_counts.iter().all(|&c| c == 0));
    assert!(trace.class_counts.iter().all(|&c| c == 0));
    // All-empty frames share one digest.
    let d0 = trace.frame_digests[0];
    assert!(trace.frame_digests.iter().all(|&d| d == d0));
    assert_eq!(d0, fnv1a64(&trace.frame_streams[0]));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn seed_override_changes_jittered_traces() {
    let dir = temp_dir("seedover");
    let body = r#"
seed = 1
samples = 4

[stimulus]
kind = "moving_bar"
bar_width_px = 8
velocity_px_per_sample = 1.0
background_lum = 0.2
bar_lum = 0.8
jitter_log_sigma = 0.05

[network]
preset = "reference"
weight_seed = 3
"#;
    let path = write_scenario(&dir, "jitter.toml", body);
    let a = run_scenario(&load_scenario(&path, None).unwrap()).unwrap();
    let b = run_scenario(&load_scenario(&path, Some(2)).unwrap()).unwrap();
    let c = run_scenario(&load_scenario(&path, Some(2)).unwrap()).unwrap();
    assert_ne!(a.frame_digests, b.frame_digests, "override should move the stimulus");
    assert_eq!(b.frame_digests, c.frame_digests, "same override, same trace");
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn missing_scenario_field_is_diagnosed_by_name() {
    let dir = temp_dir("missingfield");
    // No stimulus table at all.
    let path = write_scenario(
        &dir,
        "broken.toml",
        "seed = 1\nsamples = 2\n\n[network]\npreset = \"reference\"\nweight_seed = 1\n",
    );
    let err = format!("{:#}", load_scenario(&path, None).unwrap_err());
    assert!(err.contains("stimulus"), "diagnostic should name the field, got: {err}");

    // Unknown key inside a known table.
    let path = write_scenario(
        &dir,
        "unknown.toml",
        "seed = 1\nsamples = 2\n\n[stimulus]\nkind = \"moving_bar\"\nbar_width_px = 4\nvelocity_px_per_sample = 1.0\nbackground_lum = 0.1\nbar_lum = 0.9\nwrong_key = 3\n\n[network]\npreset = \"reference\"\nweight_seed = 1\n",
    );
    let err = format!("{:#}", load_scenario(&path, None).unwrap_err());
    assert!(err.contains("wrong_key"), "diagnostic should name the key, got: {err}");
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn out_of_range_stimulus_and_budget_values_are_rejected_at_load() {
    let dir = temp_dir("badvalues");
    let negative_lum = ZERO_CONTRAST.replace("bar_lum = 0.4", "bar_lum = -0.4");
    let path = write_scenario(&dir, "neg.toml", &negative_lum);
    let err = format!("{:#}", load_scenario(&path, None).unwrap_err());
    assert!(err.contains("bar_lum"), "got: {err}");

    let bad_budget = format!("{ZERO_CONTRAST}\n[budget]\ninference_power_mw = -1.0\n");
    let path = write_scenario(&dir, "negbudget.toml", &bad_budget);
    let err = format!("{:#}", load_scenario(&path, None).unwrap_err());
    assert!(err.contains("inference_power_mw"), "got: {err}");
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn missing_weight_file_error_names_the_path() {
    let dir = temp_dir("missingweights");
    fs::write(
        dir.join("network.toml"),
        r#"
[input]
channels = 2
height = 104
width = 132

[[layers]]
kind = "conv"
in_channels = 2
out_channels = 4
kernel = [3, 3]
stride = 2
base_potential = 0
threshold = 40
timestep_shift = 1
weights = "conv1.wts"
"#,
    )
    .unwrap();
    let body = r#"
seed = 1
samples = 2

[stimulus]
kind = "moving_bar"
bar_width_px = 4
velocity_px_per_sample = 1.0
background_lum = 0.1
bar_lum = 0.9

[network]
path = "network.toml"
"#;
    let path = write_scenario(&dir, "scenario.toml", body);
    let err = format!("{:#}", load_scenario(&path, None).unwrap_err());
    assert!(err.contains("conv1.wts"), "error should name the blob path, got: {err}");
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn pgm_directory_stimulus_drives_the_pipeline() {
    use evpipe_core::stimulus::{write_pgm, MovingBar, Stimulus};
    let dir = temp_dir("pgmstim");
    let frames_dir = dir.join("frames");
    fs::create_dir_all(&frames_dir).unwrap();
    let bar = Stimulus::MovingBar(MovingBar {
        bar_width_px: 12,
        velocity_px_per_sample: 6.0,
        background_lum: 0.1,
        bar_lum: 0.9,
        jitter_log_sigma: 0.0,
    });
    for i in 0..4u64 {
        write_pgm(&frames_dir.join(format!("frame_{i:03}.pgm")), &bar.frame(i, 0)).unwrap();
    }
    let body = r#"
seed = 1
samples = 4

[stimulus]
kind = "pgm_dir"
path = "frames"

[network]
preset = "reference"
weight_seed = 3
"#;
    let path = write_scenario(&dir, "pgm.toml", body);
    let trace = run_scenario(&load_scenario(&path, None).unwrap()).unwrap();
    // The first sample seeds the pixel memories; the moving bar then fires.
    assert_eq!(trace.frame_event_counts[0], 0);
    assert!(trace.frame_event_counts[1..].iter().any(|&c| c > 0));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn file_based_network_loads_and_runs() {
    use evpipe_core::snn::{save_network, SnnNetwork};
    let dir = temp_dir("netpath");
    let net_dir = dir.join("net");
    save_network(&net_dir, &SnnNetwork::reference(3)).unwrap();
    let body = r#"
seed = 1
samples = 3

[stimulus]
kind = "moving_bar"
bar_width_px = 8
velocity_px_per_sample = 2.0
background_lum = 0.2
bar_lum = 0.8

[network]
path = "net/network.toml"
"#;
    let path = write_scenario(&dir, "filenet.toml", body);
    let from_file = run_scenario(&load_scenario(&path, None).unwrap()).unwrap();
    // Same weights through the preset give the same trace.
    let preset_body = body.replace("path = \"net/network.toml\"", "preset = \"reference\"\nweight_seed = 3");
    let preset_path = write_scenario(&dir, "presetnet.toml", &preset_body);
    let from_preset = run_scenario(&load_scenario(&preset_path, None).unwrap()).unwrap();
    assert_eq!(from_file.class_counts, from_preset.class_counts);
    assert_eq!(from_file.frame_digests, from_preset.frame_digests);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn budget_overrides_flow_into_the_trace_table() {
    let dir = temp_dir("budgetover");
    let body = format!(
        "{ZERO_CONTRAST}\n[budget]\npreprocessing_latency_ms = 65.5\npwm_power_mw = 0.0\n"
    );
    let path = write_scenario(&dir, "override.toml", &body);
    let sc = load_scenario(&path, None).unwrap();
    assert!((sc.budget.closed_loop_latency_ms() - 97.5).abs() < 1e-3);
    assert!((sc.budget.closed_loop_power_mw() - 46.676).abs() < 1e-9);
    let trace = run_scenario(&sc).unwrap();
    let csv = trace.budget.to_csv();
    assert!(csv.contains("preprocessing_cluster,65.500,34.000"), "got: {csv}");
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unknown_table_id_is_a_usage_error() {
    let out = evpipe().args(["table", "nonsense"]).output().unwrap();
    assert!(!out.status.success());
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn render_out_of_range_index_fails_with_one_line() {
    let dir = temp_dir("renderoob");
    let scenario = write_scenario(&dir, "flat.toml", ZERO_CONTRAST);
    let trace_dir = dir.join("trace");
    let status = evpipe()
        .arg("run")
        .arg(&scenario)
        .arg("--out")
        .arg(&trace_dir)
        .status()
        .unwrap();
    assert!(status.success());

    let out = evpipe()
        .arg("render")
        .arg(&trace_dir)
        .arg("800")
        .arg("--out")
        .arg(&trace_dir)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.lines().count(), 1, "single-line error, got: {stderr}");
    assert!(stderr.starts_with("error: "), "got: {stderr}");
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn rendered_frame_has_the_sensor_dimensions() {
    let dir = temp_dir("renderppm");
    let scenario = write_scenario(&dir, "flat.toml", ZERO_CONTRAST);
    let trace_dir = dir.join("trace");
    assert!(evpipe()
        .arg("run")
        .arg(&scenario)
        .arg("--out")
        .arg(&trace_dir)
        .status()
        .unwrap()
        .success());
    assert!(evpipe()
        .arg("render")
        .arg(&trace_dir)
        .arg("0")
        .arg("--out")
        .arg(&trace_dir)
        .status()
        .unwrap()
        .success());
    let ppm = fs::read(trace_dir.join("frame_0.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n132 104\n255\n"));
    // Zero-contrast run: every pixel renders white.
    assert!(ppm[15..].iter().all(|&b| b == 255));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn run_reports_trace_summary_on_stdout() {
    let dir = temp_dir("runstdout");
    let scenario = write_scenario(&dir, "flat.toml", ZERO_CONTRAST);
    let out = evpipe()
        .arg("run")
        .arg(&scenario)
        .arg("--out")
        .arg(dir.join("trace"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("6 frames"), "got: {stdout}");
    fs::remove_dir_all(&dir).unwrap();
}
