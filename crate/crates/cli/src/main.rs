//! Experiment CLI.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure.

use clap::{Args, Parser, Subcommand};
use resigma::runner::{
    plot_series_file, run_experiment, write_artifacts, write_reference_csv, ExperimentConfig, Mode,
};
use resigma::{ActivationKind, Error, OdeSystem};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "resigma",
    about = "Solve ODE initial-value problems with shallow ramp/sigmoid networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ProblemArgs {
    /// Problem id: harmonic, slingshot, or lorenz.
    #[arg(long)]
    problem: String,
    /// Problem parameter overrides, repeatable: --override omega=2.0
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ProblemArgs {
    fn override_map(&self) -> Result<BTreeMap<String, f64>, Error> {
        let mut map = BTreeMap::new();
        for item in &self.overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::config(format!("override '{item}' is not KEY=VALUE")))?;
            let value: f64 = v
                .parse()
                .map_err(|e| Error::config(format!("override '{item}': {e}")))?;
            map.insert(k.to_string(), value);
        }
        Ok(map)
    }

    fn problem(&self) -> Result<OdeSystem, Error> {
        OdeSystem::from_id(&self.problem, &self.override_map()?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the reference solution and write it as CSV.
    Reference {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Number of grid rows (row k at k*X/count).
        #[arg(long, default_value_t = 20_000)]
        count: usize,
        #[arg(long, default_value_t = 1e-12)]
        rel_tol: f64,
        #[arg(long, default_value_t = 1e-12)]
        abs_tol: f64,
        /// Output CSV path.
        #[arg(long, default_value = "reference.csv")]
        out: PathBuf,
    },
    /// Data-driven initialization; writes report.json, series.csv, figure.svg.
    Init {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_parser = parse_activation)]
        activation: ActivationKind,
        #[arg(long, default_value_t = 20_000)]
        neurons: usize,
        #[arg(long, default_value_t = 1e-12)]
        rel_tol: f64,
        #[arg(long, default_value_t = 1e-12)]
        abs_tol: f64,
        /// Output directory.
        #[arg(long, default_value = "out/init")]
        out: PathBuf,
    },
    /// Neuron-by-neuron training; writes report.json, series.csv, figure.svg.
    Train {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_parser = parse_activation)]
        activation: ActivationKind,
        /// Neurons per window.
        #[arg(long, default_value_t = 10_000)]
        neurons: usize,
        #[arg(long, default_value_t = 20)]
        windows: usize,
        #[arg(long, default_value_t = 3)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-12)]
        rel_tol: f64,
        #[arg(long, default_value_t = 1e-12)]
        abs_tol: f64,
        /// Output directory.
        #[arg(long, default_value = "out/train")]
        out: PathBuf,
    },
    /// Run an experiment described by a TOML config file.
    Report {
        /// Config path (sections: experiment, reference, overrides, output).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the neuron count.
        #[arg(long)]
        neurons: Option<usize>,
        /// Override the window count.
        #[arg(long)]
        windows: Option<usize>,
        /// Override the epoch count.
        #[arg(long)]
        epochs: Option<usize>,
        /// Override the activation.
        #[arg(long, value_parser = parse_activation)]
        activation: Option<ActivationKind>,
    },
    /// Render a series.csv produced by init/train/report into an SVG figure.
    Plot {
        #[arg(long)]
        series: PathBuf,
        #[arg(long, default_value = "figure.svg")]
        out: PathBuf,
    },
}

fn parse_activation(s: &str) -> Result<ActivationKind, String> {
    s.parse()
}

fn describe(report: &resigma::ErrorReport) {
    println!(
        "{} {} {} | neurons {} | errors {:?} | {:.3}s",
        report.config.experiment.problem,
        report.config.experiment.mode,
        report.config.experiment.activation,
        report.config.experiment.neurons,
        report.relative_l2_errors,
        report.wall_clock_seconds
    );
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Reference {
            problem,
            count,
            rel_tol,
            abs_tol,
            out,
        } => {
            let sys = problem.problem()?;
            write_reference_csv(&sys, count, rel_tol, abs_tol, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Init {
            problem,
            activation,
            neurons,
            rel_tol,
            abs_tol,
            out,
        } => {
            let mut cfg =
                ExperimentConfig::new(&problem.problem, activation, Mode::Pidd, neurons);
            cfg.overrides = problem.override_map()?;
            cfg.reference.rel_tol = rel_tol;
            cfg.reference.abs_tol = abs_tol;
            cfg.output.dir = Some(out.clone());
            let artifacts = run_experiment(&cfg)?;
            write_artifacts(&out, &artifacts)?;
            describe(&artifacts.report);
            Ok(())
        }
        Command::Train {
            problem,
            activation,
            neurons,
            windows,
            epochs,
            rel_tol,
            abs_tol,
            out,
        } => {
            let mut cfg = ExperimentConfig::new(&problem.problem, activation, Mode::Nbn, neurons);
            cfg.experiment.windows = windows;
            cfg.experiment.epochs = epochs;
            cfg.overrides = problem.override_map()?;
            cfg.reference.rel_tol = rel_tol;
            cfg.reference.abs_tol = abs_tol;
            cfg.output.dir = Some(out.clone());
            let artifacts = run_experiment(&cfg)?;
            write_artifacts(&out, &artifacts)?;
            describe(&artifacts.report);
            Ok(())
        }
        Command::Report {
            config,
            out,
            neurons,
            windows,
            epochs,
            activation,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(n) = neurons {
                cfg.experiment.neurons = n;
            }
            if let Some(w) = windows {
                cfg.experiment.windows = w;
            }
            if let Some(e) = epochs {
                cfg.experiment.epochs = e;
            }
            if let Some(a) = activation {
                cfg.experiment.activation = a;
            }
            if let Some(dir) = out {
                cfg.output.dir = Some(dir);
            }
            let dir = cfg.output.dir.clone().ok_or_else(|| {
                Error::config("no output directory: set [output] dir or pass --out")
            })?;
            let artifacts = run_experiment(&cfg)?;
            write_artifacts(&dir, &artifacts)?;
            describe(&artifacts.report);
            Ok(())
        }
        Command::Plot { series, out } => {
            plot_series_file(&series, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
