use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mimo_retro::harness::config::{ExperimentConfig, ExperimentId};
use mimo_retro::harness::output::{from_csv, gnuplot_data, vega_lite, write_outputs};
use mimo_retro::harness::{measure_dof, run_experiment, RateCurve};
use mimo_retro::{Error, Result};

const WORKERS_ENV: &str = "MIMO_RETRO_WORKERS";

#[derive(Parser)]
#[command(name = "mimo-retro", version, about = "MU-MIMO outdated-CSIT link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write `<experiment>.csv` plus a JSON sidecar.
    Run {
        #[arg(long, conflicts_with = "experiment", required_unless_present = "experiment")]
        config: Option<PathBuf>,
        /// fig3_mat_vs_lzfb, fig2_sched_parity, fig4_sched_modes or custom.
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the sample count per point.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Worker threads; `MIMO_RETRO_WORKERS` takes precedence when set.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Empirical DoF of a curve between two grid SNRs.
    Dof {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        /// Restrict to one scheme; every curve is reported otherwise.
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Parse and validate a config file.
    ValidateConfig { path: PathBuf },
    /// Convert a result CSV into plot data on stdout.
    PlotData {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, value_enum, default_value_t = PlotFormat::Gnuplot)]
        format: PlotFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotFormat {
    Gnuplot,
    Vega,
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_path(path).map_err(|e| match e {
        Error::Io(io) => Error::Config {
            field: path.display().to_string(),
            message: io.to_string(),
        },
        other => other,
    })
}

fn worker_count(flag: usize) -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| Error::Config {
            field: WORKERS_ENV.into(),
            message: format!("`{v}` is not a positive integer"),
        }),
        Err(_) if flag == 0 => Err(Error::Config {
            field: "--workers".into(),
            message: "must be at least 1".into(),
        }),
        Err(_) => Ok(flag),
    }
}

fn load_curves(path: &Path) -> Result<Vec<RateCurve>> {
    from_csv(&std::fs::read_to_string(path)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            experiment,
            seed,
            samples,
            out,
            workers,
        } => {
            let mut cfg = match (config, experiment) {
                (Some(path), _) => load_config(&path)?,
                (None, Some(id)) => ExperimentConfig::preset(ExperimentId::parse(&id)?),
                (None, None) => unreachable!("clap requires one of them"),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = samples {
                cfg.samples = n;
            }
            let curves = run_experiment(&cfg, worker_count(workers)?)?;
            let (csv, json) = write_outputs(&cfg, &curves, &out)?;
            println!("{}", csv.display());
            println!("{}", json.display());
        }
        Command::Dof {
            curve,
            lo,
            hi,
            scheme,
            rho,
        } => {
            let curves = load_curves(&curve)?;
            let selected: Vec<&RateCurve> = curves
                .iter()
                .filter(|c| scheme.as_deref().is_none_or(|s| s == c.scheme))
                .filter(|c| rho.is_none_or(|r| (r - c.rho).abs() < 1e-12))
                .collect();
            if selected.is_empty() {
                return Err(Error::Lookup("no curve matches the filters".into()));
            }
            for c in selected {
                println!("{},{},{}", c.scheme, c.rho, measure_dof(c, lo, hi)?);
            }
        }
        Command::ValidateConfig { path } => {
            let cfg = load_config(&path)?;
            println!("ok {} {}", cfg.experiment.as_str(), cfg.fingerprint());
        }
        Command::PlotData { curve, format } => {
            let curves = load_curves(&curve)?;
            match format {
                PlotFormat::Gnuplot => print!("{}", gnuplot_data(&curves)),
                PlotFormat::Vega => print!("{}", vega_lite(&curves)),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config { .. } | Error::Validation(_) => 2,
                Error::Numeric(_) | Error::Singular(_) => 3,
                _ => 1,
            })
        }
    }
}
