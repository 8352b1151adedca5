mod commands;
mod config;
mod error;
mod manifest;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Context;
use config::{LoadedConfig, SensitivityConfig};
use error::CliError;
use manifest::Run;

#[derive(Debug, Parser)]
#[command(name = "levsim", version, about = "Levitated-sphere damping, detection and ring-down toolkit")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: `out_dir` from the config, else ./levsim-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps and grids.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Cross-check detection sweeps against the axisymmetric field solution.
    #[arg(long, global = true)]
    oracle: bool,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    svg: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decay time against temperature, per channel and combined.
    DampingCurve,
    /// Receiver inductance, resonance and signal along a sphere path.
    DetectionSweep,
    /// Synthesize or analyze ring-down blocks.
    Ringdown {
        #[command(subcommand)]
        action: RingdownAction,
    },
    /// Fit the 3He fraction to measured decay times.
    FitHe3 {
        /// CSV with T_K,tau_s[,sigma_tau_s] rows (overrides fit.data_csv).
        data: Option<PathBuf>,
    },
    /// Force sensitivity figures from a decay time.
    Sensitivity {
        #[arg(long)]
        temperature_k: Option<f64>,
        #[arg(long)]
        tau_s: Option<f64>,
        #[arg(long)]
        velocity_m_per_s: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
enum RingdownAction {
    /// Write synthetic blocks and a truth record.
    Simulate,
    /// Block amplitudes and the exponential decay fit.
    Analyze {
        /// Block file, CSV or binary frames (overrides ringdown.input).
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::DampingCurve => "damping-curve",
            Command::DetectionSweep => "detection-sweep",
            Command::Ringdown { action: RingdownAction::Simulate } => "ringdown simulate",
            Command::Ringdown { action: RingdownAction::Analyze { .. } } => "ringdown analyze",
            Command::FitHe3 { .. } => "fit-he3",
            Command::Sensitivity { .. } => "sensitivity",
        }
    }
}

fn dispatch(cli: &Cli, loaded: &LoadedConfig, run: &mut Run) -> Result<(), CliError> {
    let ctx = Context {
        config: loaded,
        oracle: cli.oracle,
        svg: cli.svg,
    };
    if let Some(p) = &loaded.source {
        run.record_input(p)?;
    }
    match &cli.command {
        Command::DampingCurve => commands::damping::run(run, &ctx),
        Command::DetectionSweep => commands::detection::run(run, &ctx),
        Command::Ringdown { action: RingdownAction::Simulate } => commands::ringdown::simulate(run, &ctx),
        Command::Ringdown { action: RingdownAction::Analyze { input } } => {
            commands::ringdown::analyze(run, &ctx, input.as_deref())
        }
        Command::FitHe3 { data } => commands::fit::run(run, &ctx, data.as_deref()),
        Command::Sensitivity {
            temperature_k,
            tau_s,
            velocity_m_per_s,
        } => {
            let flags = SensitivityConfig {
                temperature_k: *temperature_k,
                tau_s: *tau_s,
                velocity_m_per_s: *velocity_m_per_s,
            };
            commands::sensitivity::run(run, &ctx, &flags)
        }
    }
}

fn setup_threads(threads: Option<usize>) -> Result<(), CliError> {
    match threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}"))),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.name();

    let loaded = LoadedConfig::load(cli.config.as_deref());
    let out_dir = cli
        .out
        .clone()
        .or_else(|| {
            let l = loaded.as_ref().ok()?;
            l.config.out_dir.as_ref().map(|p| l.resolve(p))
        })
        .unwrap_or_else(|| PathBuf::from("levsim-out"));

    let (outcome, run) = match loaded {
        Ok(mut loaded) => {
            if let Some(seed) = cli.seed {
                loaded.config.seed = seed;
            }
            let mut hashed = loaded.config.clone();
            hashed.out_dir = None;
            let config_json = serde_json::to_value(&hashed).expect("config serialises");
            let mut run = Run::new(
                command,
                &out_dir,
                &config_json,
                loaded.source.as_deref(),
                loaded.config.seed,
                cli.threads,
                cli.oracle,
            );
            let outcome = setup_threads(cli.threads).and_then(|_| dispatch(&cli, &loaded, &mut run));
            (outcome, run)
        }
        Err(e) => {
            let run = Run::new(
                command,
                &out_dir,
                &serde_json::Value::Null,
                cli.config.as_deref(),
                cli.seed.unwrap_or(0),
                cli.threads,
                cli.oracle,
            );
            (Err(e), run)
        }
    };

    match run.finish(&outcome) {
        Ok(path) => println!("manifest: {}", path.display()),
        Err(e) => eprintln!("levsim: cannot write manifest: {e}"),
    }
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("levsim {command}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
