use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use evpipe_cli::pipeline::{run_scenario, write_trace};
use evpipe_cli::render::render_from_trace;
use evpipe_cli::scenario::load_scenario;
use evpipe_cli::tables::{closed_loop_table_csv, interface_table_csv};
use evpipe_core::budget::PipelineBudget;
use evpipe_core::saer::ClockConfig;

/// Event-camera pipeline simulator: sensor, readout, spiking inference and
/// the closed-loop latency/power budget.
#[derive(Parser)]
#[command(name = "evpipe", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario end to end and write its trace files
    Run {
        /// Scenario file (TOML)
        scenario: PathBuf,
        /// Output directory for the trace files
        #[arg(long, default_value = "trace_out")]
        out: PathBuf,
        /// Override the scenario seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print a benchmark table as CSV on standard output
    Table {
        /// Which table to print
        #[arg(value_enum)]
        id: TableId,
    },
    /// Render one stored event frame from a trace as a PPM image
    Render {
        /// Trace directory written by `run`
        trace: PathBuf,
        /// Frame index within the trace
        index: usize,
        /// Output directory for the image
        #[arg(long, default_value = "trace_out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TableId {
    #[value(name = "interface")]
    Interface,
    #[value(name = "closed_loop")]
    ClosedLoop,
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run { scenario, out, seed } => {
            let sc = load_scenario(&scenario, seed)?;
            let trace = run_scenario(&sc)?;
            write_trace(&trace, &out)?;
            println!(
                "wrote trace of {} frames / {} timesteps to {}",
                trace.samples,
                trace.timesteps,
                out.display()
            );
        }
        Cmd::Table { id } => {
            let csv = match id {
                TableId::Interface => interface_table_csv(),
                TableId::ClosedLoop => {
                    closed_loop_table_csv(&PipelineBudget::default(), &ClockConfig::default())
                }
            };
            print!("{csv}");
        }
        Cmd::Render { trace, index, out } => {
            let ppm = render_from_trace(&trace, index)?;
            std::fs::create_dir_all(&out)
                .with_context(|| format!("cannot create output directory {}", out.display()))?;
            let path = out.join(format!("frame_{index}.ppm"));
            std::fs::write(&path, ppm)
                .with_context(|| format!("cannot write {}", path.display()))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // One machine-parsable line on stderr.
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
