use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use colorbeat::config::{self, ScenarioConfig};
use colorbeat::fit::{cmd_fit, FitOptions};
use colorbeat::mub::cmd_mub;
use colorbeat::simulate::cmd_simulate;
use colorbeat::sweep::{cmd_sweep, SweepKind};
use colorbeat::{CliError, EXIT_VALIDATION};

/// Simulate and analyze two-color photon-pair interference scans.
#[derive(Debug, Parser)]
#[command(name = "colorbeat", version, about)]
struct Cli {
    /// Print a built-in scenario as JSON and exit (use as a --config
    /// starting point).
    #[arg(long, value_name = "NAME", global = true)]
    print_preset: Option<String>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a delay scan, spectra, and ground truth for one scenario.
    Simulate {
        /// Scenario JSON file.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Built-in scenario name.
        #[arg(long)]
        preset: Option<String>,
        /// Output directory for trace.csv, spectrum.csv, truth.json.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's counting-noise seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit a delay-scan CSV and reconstruct the two-color state.
    Fit {
        /// Input scan (CSV written by `simulate`, or hand-made).
        #[arg(long)]
        trace: PathBuf,
        /// Report JSON output path.
        #[arg(long)]
        out: PathBuf,
        /// Basis coincidences as N12,N21; omitted means an assumed 50/50
        /// split.
        #[arg(long, value_parser = parse_counts, value_name = "N12,N21")]
        counts: Option<(u64, u64)>,
        /// Phase of the target state the fidelity is quoted against.
        #[arg(long, default_value_t = 180.0)]
        target_phase_deg: f64,
        /// Bootstrap resample count for the error bars.
        #[arg(long, default_value_t = 500)]
        resamples: usize,
        /// Bootstrap RNG seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate and fit a series of scenarios varying one setting.
    Sweep {
        /// Which setting to vary.
        #[arg(value_enum)]
        kind: SweepKind,
        /// Scenario JSON file.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Built-in scenario name (default: fig3a for detuning, fig4 for
        /// phase).
        #[arg(long)]
        preset: Option<String>,
        /// Output directory for point_NN/ and summary.csv.
        #[arg(long)]
        out: PathBuf,
        /// Base noise seed; point k uses seed + k.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the 6×6 overlap table of the three measurement bases.
    Mub {
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_counts(s: &str) -> Result<(u64, u64), String> {
    let (n12, n21) = s
        .split_once(',')
        .ok_or_else(|| String::from("expected two comma-separated counts, e.g. 10882,9068"))?;
    let parse = |field: &str, name: &str| {
        field
            .trim()
            .parse::<u64>()
            .map_err(|e| format!("{name} count `{}`: {e}", field.trim()))
    };
    Ok((parse(n12, "N12")?, parse(n21, "N21")?))
}

fn load_config(
    config: Option<&Path>,
    preset: Option<&str>,
    fallback: Option<&str>,
) -> Result<ScenarioConfig, CliError> {
    if let Some(path) = config {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        return serde_json::from_str(&text).map_err(|e| CliError::JsonParse {
            path: path.to_path_buf(),
            source: e,
        });
    }
    match preset.or(fallback) {
        Some(name) => config::preset(name),
        None => Err(CliError::Config(String::from(
            "either --config or --preset is required",
        ))),
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { config, preset, out, seed } => {
            let mut scenario = load_config(config.as_deref(), preset.as_deref(), None)?;
            if let Some(seed) = seed {
                scenario.measurement.seed = seed;
            }
            let outcome = cmd_simulate(&scenario, &out)?;
            println!(
                "simulate: wrote {}, {}, {}",
                outcome.trace_path.display(),
                outcome.spectrum_path.display(),
                outcome.truth_path.display()
            );
        }
        Command::Fit { trace, out, counts, target_phase_deg, resamples, seed } => {
            let options = FitOptions { counts, target_phase_deg, resamples, seed };
            let summary = cmd_fit(&trace, &out, &options)?;
            println!("{}", summary.metrics_line());
            println!("fit: wrote {}", summary.report_path.display());
        }
        Command::Sweep { kind, config, preset, out, seed } => {
            let fallback = match kind {
                SweepKind::Detuning => "fig3a",
                SweepKind::Phase => "fig4",
            };
            let scenario =
                load_config(config.as_deref(), preset.as_deref(), Some(fallback))?;
            let summary = cmd_sweep(kind, &scenario, &out, seed)?;
            println!(
                "sweep: {} points, wrote {}",
                summary.rows.len(),
                summary.summary_path.display()
            );
        }
        Command::Mub { out } => {
            let summary = cmd_mub(&out)?;
            println!("mub: wrote {}", summary.table_path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(name) = cli.print_preset {
        return match config::preset(&name) {
            Ok(scenario) => {
                let text =
                    serde_json::to_string_pretty(&scenario).expect("preset serializes");
                println!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        };
    }

    let Some(command) = cli.command else {
        eprintln!("error: a subcommand or --print-preset is required (see --help)");
        return ExitCode::from(EXIT_VALIDATION as u8);
    };

    match run(command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
