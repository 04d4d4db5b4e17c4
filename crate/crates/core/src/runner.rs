//! Experiment orchestration: configuration files, the init/train pipelines,
//! report persistence, and figure emission.
//!
//! A run is fully determined by its [`ExperimentConfig`]; there is no
//! hidden state and no randomness, so identical configs produce
//! byte-identical reports (wall-clock aside) and CSVs.

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::metrics::relative_l2;
use crate::nbn::{nbn_train, WindowPlan};
use crate::net::{FastEvaluator, StructuredGrid};
use crate::pidd::{pidd_init, InitRecipe};
use crate::plot::{emit_plot, SeriesPair};
use crate::problems::OdeSystem;
use crate::solver::{integrate_on, GridSolution, TimeGrid};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
/// Plot series are thinned to at most this many rows.
const SERIES_MAX_ROWS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Pidd,
    Nbn,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Pidd => write!(f, "pidd"),
            Mode::Nbn => write!(f, "nbn"),
        }
    }
}

/// Everything a run needs. Serialized as TOML with `[experiment]`,
/// `[reference]`, `[overrides]`, and `[output]` sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub reference: ReferenceSection,
    /// Problem parameter overrides (`omega`, `amplitude`, `horizon`, ...).
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSection {
    pub problem: String,
    pub activation: ActivationKind,
    pub mode: Mode,
    pub neurons: usize,
    /// Time windows (training mode only).
    #[serde(default = "default_windows")]
    pub windows: usize,
    /// Sweep epochs per window (training mode only).
    #[serde(default = "default_epochs")]
    pub epochs: usize,
}

fn default_windows() -> usize {
    20
}

fn default_epochs() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        ReferenceSection {
            rel_tol: 1e-12,
            abs_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(problem: &str, activation: ActivationKind, mode: Mode, neurons: usize) -> Self {
        ExperimentConfig {
            experiment: ExperimentSection {
                problem: problem.to_string(),
                activation,
                mode,
                neurons,
                windows: default_windows(),
                epochs: default_epochs(),
            },
            reference: ReferenceSection::default(),
            overrides: BTreeMap::new(),
            output: OutputSection::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.neurons == 0 {
            return Err(Error::config("neurons must be >= 1"));
        }
        if e.mode == Mode::Nbn && (e.windows == 0 || e.epochs == 0 || e.neurons < 2) {
            return Err(Error::config(
                "training mode needs windows >= 1, epochs >= 1, neurons >= 2",
            ));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config(format!("serialize: {e}")))
    }

    pub fn problem(&self) -> Result<OdeSystem> {
        OdeSystem::from_id(&self.experiment.problem, &self.overrides)
    }
}

/// Reference-solver footprint echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMeta {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub grid_points: usize,
    pub rhs_evaluations: u64,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
}

/// Outcome of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: ExperimentConfig,
    /// Relative L2 error per solution component.
    pub relative_l2_errors: Vec<f64>,
    pub eval_points: usize,
    /// Seconds spent in initialization (init mode) or training (train
    /// mode); reference integration and metric evaluation are excluded.
    pub wall_clock_seconds: f64,
    pub reference: ReferenceMeta,
}

impl ErrorReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Report plus the plot-ready series it was computed from.
#[derive(Debug)]
pub struct ExperimentArtifacts {
    pub report: ErrorReport,
    pub series: Vec<SeriesPair>,
}

fn reference_meta(sol: &GridSolution) -> ReferenceMeta {
    ReferenceMeta {
        rel_tol: sol.rel_tol,
        abs_tol: sol.abs_tol,
        grid_points: sol.grid.count,
        rhs_evaluations: sol.rhs_evaluations,
        accepted_steps: sol.accepted_steps,
        rejected_steps: sol.rejected_steps,
    }
}

fn component_names(problem: &OdeSystem) -> Vec<String> {
    match problem.id() {
        "slingshot" => vec!["h".into(), "x".into(), "y".into(), "z".into()],
        "lorenz" => vec!["x".into(), "y".into(), "z".into()],
        _ => (0..problem.dimension()).map(|l| format!("u{l}")).collect(),
    }
}

fn thin_indices(len: usize) -> Vec<usize> {
    if len <= SERIES_MAX_ROWS {
        return (0..len).collect();
    }
    let stride = len.div_ceil(SERIES_MAX_ROWS);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if *idx.last().unwrap() != len - 1 {
        idx.push(len - 1);
    }
    idx
}

fn build_series(
    problem: &OdeSystem,
    times: &[f64],
    reference: &[Vec<f64>],
    prediction: &[Vec<f64>],
) -> Vec<SeriesPair> {
    let names = component_names(problem);
    let idx = thin_indices(times.len());
    (0..problem.dimension())
        .map(|l| SeriesPair {
            name: names[l].clone(),
            t: idx.iter().map(|&i| times[i]).collect(),
            reference: idx.iter().map(|&i| reference[l][i]).collect(),
            prediction: idx.iter().map(|&i| prediction[l][i]).collect(),
        })
        .collect()
}

/// Closed-form initialization from reference data, then per-component
/// relative errors on the collocation grid.
pub fn run_pidd_experiment(config: &ExperimentConfig) -> Result<ExperimentArtifacts> {
    config.validate()?;
    if config.experiment.mode != Mode::Pidd {
        return Err(Error::config("run_pidd_experiment needs mode = \"pidd\""));
    }
    let problem = config.problem().map_err(|e| Error::stage("problem", e))?;
    let n = config.experiment.neurons;
    let data = crate::solver::integrate_to_grid(
        &problem,
        n,
        config.reference.rel_tol,
        config.reference.abs_tol,
    )
    .map_err(|e| Error::stage("reference", e))?;

    let recipe = InitRecipe::for_activation(config.experiment.activation, n);
    let started = Instant::now();
    let nets = (0..problem.dimension())
        .map(|l| pidd_init(l, &data, &problem, &recipe))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::stage("init", e))?;
    let wall_clock_seconds = started.elapsed().as_secs_f64();

    let grid = StructuredGrid::new(config.experiment.activation, data.grid.step, n);
    let times: Vec<f64> = (0..n).map(|k| data.grid.time(k)).collect();
    let mut reference = Vec::with_capacity(problem.dimension());
    let mut prediction = Vec::with_capacity(problem.dimension());
    let mut errors = Vec::with_capacity(problem.dimension());
    for (l, net) in nets.iter().enumerate() {
        let fast = FastEvaluator::new(net, &grid).map_err(|e| Error::stage("eval", e))?;
        let pred: Vec<f64> = times.iter().map(|&t| fast.eval(net, t)).collect();
        let refr = data.component(l);
        errors.push(relative_l2(&pred, &refr).map_err(|e| Error::stage("metrics", e))?);
        reference.push(refr);
        prediction.push(pred);
    }

    let series = build_series(&problem, &times, &reference, &prediction);
    Ok(ExperimentArtifacts {
        report: ErrorReport {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            relative_l2_errors: errors,
            eval_points: times.len(),
            wall_clock_seconds,
            reference: reference_meta(&data),
        },
        series,
    })
}

/// Window-chained training, then relative errors against a fresh reference
/// solution on the union of all window grids.
pub fn run_nbn_experiment(config: &ExperimentConfig) -> Result<ExperimentArtifacts> {
    config.validate()?;
    if config.experiment.mode != Mode::Nbn {
        return Err(Error::config("run_nbn_experiment needs mode = \"nbn\""));
    }
    let problem = config.problem().map_err(|e| Error::stage("problem", e))?;
    let plan = WindowPlan {
        window_count: config.experiment.windows,
        neurons_per_window: config.experiment.neurons,
        epochs: config.experiment.epochs,
    };

    let started = Instant::now();
    let outcome = nbn_train(&problem, &plan, config.experiment.activation)
        .map_err(|e| Error::stage("train", e))?;
    let wall_clock_seconds = started.elapsed().as_secs_f64();

    // union of the window grids: uniform with the windows' own spacing,
    // horizon endpoint included
    let segments = plan.window_count * (plan.neurons_per_window - 1);
    let grid = TimeGrid {
        origin: 0.0,
        step: problem.horizon() / segments as f64,
        count: segments + 1,
    };
    let data = integrate_on(
        &problem,
        grid,
        config.reference.rel_tol,
        config.reference.abs_tol,
    )
    .map_err(|e| Error::stage("reference", e))?;

    let times: Vec<f64> = (0..grid.count).map(|k| grid.time(k)).collect();
    let mut reference = Vec::with_capacity(problem.dimension());
    let mut prediction = Vec::with_capacity(problem.dimension());
    let mut errors = Vec::with_capacity(problem.dimension());
    for l in 0..problem.dimension() {
        let pred: Vec<f64> = times
            .iter()
            .map(|&t| outcome.model.eval_component(l, t))
            .collect();
        let refr = data.component(l);
        errors.push(relative_l2(&pred, &refr).map_err(|e| Error::stage("metrics", e))?);
        reference.push(refr);
        prediction.push(pred);
    }

    let series = build_series(&problem, &times, &reference, &prediction);
    Ok(ExperimentArtifacts {
        report: ErrorReport {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            relative_l2_errors: errors,
            eval_points: times.len(),
            wall_clock_seconds,
            reference: reference_meta(&data),
        },
        series,
    })
}

/// Runs whichever mode the config names.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentArtifacts> {
    match config.experiment.mode {
        Mode::Pidd => run_pidd_experiment(config),
        Mode::Nbn => run_nbn_experiment(config),
    }
}

/// Write-temp-then-rename so partial files never land under the final name.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Serializes the thinned series as
/// `t,ref_<c0>,...,pred_<c0>,...,abs_<c0>,...` rows.
pub fn series_to_csv(series: &[SeriesPair]) -> String {
    let mut out = String::new();
    out.push('t');
    for p in series {
        out.push_str(&format!(",ref_{}", p.name));
    }
    for p in series {
        out.push_str(&format!(",pred_{}", p.name));
    }
    for p in series {
        out.push_str(&format!(",abs_{}", p.name));
    }
    out.push('\n');
    let rows = series[0].t.len();
    for i in 0..rows {
        out.push_str(&format!("{:.16e}", series[0].t[i]));
        for p in series {
            out.push_str(&format!(",{:.16e}", p.reference[i]));
        }
        for p in series {
            out.push_str(&format!(",{:.16e}", p.prediction[i]));
        }
        for p in series {
            out.push_str(&format!(",{:.16e}", (p.prediction[i] - p.reference[i]).abs()));
        }
        out.push('\n');
    }
    out
}

/// Parses a `series_to_csv` document back into series pairs.
pub fn series_from_csv(text: &str) -> Result<Vec<SeriesPair>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::config("empty series file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[0] != "t" || (cols.len() - 1) % 3 != 0 {
        return Err(Error::config(format!("unrecognized series header '{header}'")));
    }
    let n = (cols.len() - 1) / 3;
    let names: Vec<String> = cols[1..1 + n]
        .iter()
        .map(|c| {
            c.strip_prefix("ref_")
                .map(str::to_string)
                .ok_or_else(|| Error::config(format!("unexpected column '{c}'")))
        })
        .collect::<Result<_>>()?;
    let mut t = Vec::new();
    let mut refs = vec![Vec::new(); n];
    let mut preds = vec![Vec::new(); n];
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::config(format!("row {} has {} fields, expected {}", row + 2, fields.len(), cols.len())));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::config(format!("row {}: bad number '{s}': {e}", row + 2)))
        };
        t.push(parse(fields[0])?);
        for l in 0..n {
            refs[l].push(parse(fields[1 + l])?);
            preds[l].push(parse(fields[1 + n + l])?);
        }
    }
    Ok((0..n)
        .map(|l| SeriesPair {
            name: names[l].clone(),
            t: t.clone(),
            reference: std::mem::take(&mut refs[l]),
            prediction: std::mem::take(&mut preds[l]),
        })
        .collect())
}

/// Persists report.json, series.csv, and figure.svg under `dir`.
pub fn write_artifacts(dir: &Path, artifacts: &ExperimentArtifacts) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_atomic(
        &dir.join("report.json"),
        artifacts.report.to_json()?.as_bytes(),
    )?;
    write_atomic(
        &dir.join("series.csv"),
        series_to_csv(&artifacts.series).as_bytes(),
    )?;
    let svg = emit_plot(&artifacts.series).map_err(|e| Error::stage("plot", e))?;
    write_atomic(&dir.join("figure.svg"), svg.as_bytes())?;
    Ok(())
}

/// Full reference solution export for the `reference` subcommand.
pub fn write_reference_csv(problem: &OdeSystem, count: usize, rel: f64, abs: f64, path: &Path) -> Result<()> {
    let sol = crate::solver::integrate_to_grid(problem, count, rel, abs)
        .map_err(|e| Error::stage("reference", e))?;
    let mut buf = Vec::new();
    sol.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    write_atomic(path, &buf)
}

/// Renders a series CSV (as written by the runner) into an SVG file.
pub fn plot_series_file(series_path: &Path, out_path: &Path) -> Result<()> {
    let text = fs::read_to_string(series_path).map_err(|e| Error::io(series_path, e))?;
    let series = series_from_csv(&text)?;
    let svg = emit_plot(&series)?;
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    write_atomic(out_path, svg.as_bytes())
}

// stamp a trailing newline convention for text artifacts
impl ErrorReport {
    pub fn to_json_line_terminated(&self) -> Result<String> {
        let mut s = self.to_json()?;
        s.push('\n');
        Ok(s)
    }
}
