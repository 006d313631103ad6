//! Scenario runner behind the `simulate` binary: run configuration, the
//! seven figure presets, CSV traces and timescale reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::closed_form::{default_step, inversion_double_sum, inversion_poisson_closed, InversionTrace};
use crate::error::Error;
use crate::fock::{
    coherent_populations, default_cutoff, number_populations, thermal_populations, ModeDistribution, ModeTruncation,
    TruncationSpec, DEFAULT_TAIL_TOL,
};
use crate::hamiltonian::{
    build_carrier_rwa_interaction, build_full_hamiltonian, SystemParams, DEFAULT_OPTICAL_FREQ, DEFAULT_TRAP_FREQ,
};
use crate::numeric::uniform_grid;
use crate::oracle::{diagonalize, oracle_initial_state, HamiltonianSource};
use crate::timescales::{
    default_window, detect_collapse, detect_revivals, dominant_rabi_period, envelope_max_in, RevivalPeak,
    TimescaleReport,
};

/// Oracle cutoffs used unless the config overrides them.
pub const ORACLE_N_VIB: usize = 15;
pub const ORACLE_N_FIELD: usize = 40;
pub const ORACLE_TAIL_TOL: f64 = 1e-2;

/// Revival orders listed in reports.
pub const REPORT_ORDERS: u32 = 3;

/// Refuse grids larger than this many samples.
pub const MAX_SAMPLES: usize = 5_000_000;

pub const PRESETS: [&str; 7] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7"];

pub const SUITE_REPORT: &str = "suite_report.txt";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Engine {
    DoubleSum,
    PoissonClosed,
    OracleRwa,
    OracleFull,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::DoubleSum => "double_sum",
            Engine::PoissonClosed => "poisson_closed",
            Engine::OracleRwa => "oracle_rwa",
            Engine::OracleFull => "oracle_full",
        }
    }

    fn is_oracle(self) -> bool {
        matches!(self, Engine::OracleRwa | Engine::OracleFull)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Number,
    Coherent,
    Thermal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoKeyword {
    Auto,
}

/// Either a fixed spacing or `"auto"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GtStep {
    Fixed(f64),
    Auto(AutoKeyword),
}

impl Default for GtStep {
    fn default() -> Self {
        GtStep::Auto(AutoKeyword::Auto)
    }
}

fn default_name() -> String {
    "run".into()
}

fn default_engine() -> Engine {
    Engine::DoubleSum
}

fn default_nu() -> f64 {
    DEFAULT_TRAP_FREQ
}

fn default_omega() -> f64 {
    DEFAULT_OPTICAL_FREQ
}

/// Flat run configuration, read from a TOML file or a preset. Frequencies are
/// in units of `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub field_kind: StateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_level: Option<usize>,
    pub vib_kind: StateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vib_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vib_level: Option<usize>,
    pub eta: f64,
    pub gt_max: f64,
    #[serde(default)]
    pub gt_step: GtStep,
    #[serde(default = "default_engine")]
    pub engine: Engine,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_field: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_vib: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_tol: Option<f64>,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_omega")]
    pub omega0: f64,
    /// Trace file name inside the output directory; `<name>.csv` if unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<String>,
    /// Report file name inside the output directory; `<name>_report.txt` if
    /// unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_file: Option<String>,
}

impl RunConfig {
    pub fn coherent(name: &str, nbar: f64, mbar: f64, eta: f64, gt_max: f64) -> Self {
        Self {
            name: name.into(),
            field_kind: StateKind::Coherent,
            field_mean: Some(nbar),
            field_level: None,
            vib_kind: StateKind::Coherent,
            vib_mean: Some(mbar),
            vib_level: None,
            eta,
            gt_max,
            gt_step: GtStep::default(),
            engine: Engine::DoubleSum,
            n_field: None,
            n_vib: None,
            tail_tol: None,
            nu: DEFAULT_TRAP_FREQ,
            omega: DEFAULT_OPTICAL_FREQ,
            omega0: DEFAULT_OPTICAL_FREQ,
            trace_file: None,
            report_file: None,
        }
    }

    /// Built-in parameter sets `fig1` … `fig7`.
    pub fn preset(name: &str) -> Result<Self, CliError> {
        let (nbar, mbar, eta, gt_max) = match name {
            "fig1" => (0.0, 4.0, 0.05, 1600.0),
            "fig2" => (25.0, 4.0, 0.02, 60.0),
            "fig3" => (25.0, 4.0, 0.04, 60.0),
            "fig4" => (25.0, 4.0, 0.02, 2000.0),
            "fig5" => (25.0, 4.0, 0.04, 2000.0),
            "fig6" => (1.69, 10.24, 0.2, 80.0),
            "fig7" => (16.0, 16.0, 0.05, 60.0),
            _ => {
                return Err(CliError::Config {
                    path: "preset".into(),
                    message: format!("unknown preset `{name}`, expected one of {}", PRESETS.join(", ")),
                })
            }
        };
        Ok(Self::coherent(name, nbar, mbar, eta, gt_max))
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.into_inner().message().trim().to_string();
            CliError::Config { path, message }
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn trace_file_name(&self) -> String {
        self.trace_file.clone().unwrap_or_else(|| format!("{}.csv", self.name))
    }

    pub fn report_file_name(&self) -> String {
        self.report_file.clone().unwrap_or_else(|| format!("{}_report.txt", self.name))
    }

    /// Nominal mean of the field state.
    pub fn nbar(&self) -> Result<f64, CliError> {
        mode_mean("field", self.field_kind, self.field_mean, self.field_level)
    }

    /// Nominal mean of the vibrational state.
    pub fn mbar(&self) -> Result<f64, CliError> {
        mode_mean("vib", self.vib_kind, self.vib_mean, self.vib_level)
    }

    /// Checks everything that does not need a computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |path: &str, message: String| Err(CliError::Config { path: path.into(), message });
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad("name", format!("`{}` is not a plain file stem", self.name));
        }
        for (path, file) in [("trace_file", &self.trace_file), ("report_file", &self.report_file)] {
            if let Some(f) = file {
                if f.is_empty() || f.contains(['/', '\\']) {
                    return bad(path, format!("`{f}` is not a plain file name"));
                }
            }
        }
        if self.trace_file_name() == self.report_file_name() {
            return bad("report_file", "trace and report would share a file".into());
        }
        if !(self.gt_max.is_finite() && self.gt_max > 0.0) {
            return bad("gt_max", format!("{} must be > 0", self.gt_max));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return bad("eta", format!("{} must be finite and >= 0", self.eta));
        }
        if let GtStep::Fixed(s) = self.gt_step {
            if !(s.is_finite() && s > 0.0) {
                return bad("gt_step", format!("{s} must be > 0 or \"auto\""));
            }
        }
        if let Some(t) = self.tail_tol {
            if !(t > 0.0 && t < 1.0) {
                return bad("tail_tol", format!("{t} is not in (0, 1)"));
            }
        }
        for (path, v) in [("nu", self.nu), ("omega", self.omega), ("omega0", self.omega0)] {
            if !v.is_finite() {
                return bad(path, format!("{v} is not finite"));
            }
        }
        self.nbar()?;
        self.mbar()?;
        if self.engine == Engine::PoissonClosed && self.vib_kind != StateKind::Coherent {
            return bad("engine", "poisson_closed needs vib_kind = \"coherent\"".into());
        }
        Ok(())
    }
}

fn mode_mean(prefix: &str, kind: StateKind, mean: Option<f64>, level: Option<usize>) -> Result<f64, CliError> {
    let err = |key: &str, message: &str| CliError::Config { path: format!("{prefix}_{key}"), message: message.into() };
    match kind {
        StateKind::Number => {
            if mean.is_some() {
                return Err(err("mean", "not used by a number state; set the level instead"));
            }
            level.map(|l| l as f64).ok_or_else(|| err("level", "required for a number state"))
        }
        StateKind::Coherent | StateKind::Thermal => {
            if level.is_some() {
                return Err(err("level", "only used by a number state"));
            }
            let m = mean.ok_or_else(|| err("mean", "required for coherent and thermal states"))?;
            if m.is_finite() && m >= 0.0 {
                Ok(m)
            } else {
                Err(err("mean", "must be finite and >= 0"))
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Model(#[from] Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 2 for validation failures, 3 for numerical-integrity failures, 1 for
    /// filesystem errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Model(Error::NumericalIntegrity(_) | Error::NotHermitian { .. }) => 3,
            CliError::Model(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationSummary {
    pub n_field: usize,
    /// `None` when the vibrational sum is done analytically.
    pub n_vib: Option<usize>,
    pub field_tail_mass: f64,
    pub vib_tail_mass: f64,
    pub retained_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub window: f64,
    pub revivals: Vec<RevivalPeak>,
    pub collapse: Option<f64>,
    /// Why detection was skipped, if it was.
    pub skipped: Option<String>,
}

/// A computed scenario, not yet written anywhere.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: RunConfig,
    pub trace: InversionTrace,
    pub predictions: TimescaleReport,
    pub detection: Detection,
    pub truncation: TruncationSummary,
    pub gt_step: f64,
    pub wall_time_s: f64,
}

impl Scenario {
    /// Largest envelope value within ±10% of `gt`, if that range is covered.
    pub fn envelope_near(&self, gt: f64) -> Option<f64> {
        if gt <= 0.0 || gt * 0.9 > self.config.gt_max {
            return None;
        }
        envelope_max_in(&self.trace, self.detection.window, 0.9 * gt, 1.1 * gt).ok()
    }
}

fn mode_distribution(
    kind: StateKind,
    mean: f64,
    cutoff: Option<usize>,
    tail_tol: f64,
) -> Result<ModeDistribution, CliError> {
    Ok(match kind {
        StateKind::Number => {
            let level = mean as usize;
            number_populations(level, cutoff.unwrap_or(level))?
        }
        StateKind::Coherent => {
            coherent_populations(mean, ModeTruncation::new(cutoff.unwrap_or(default_cutoff(mean)), tail_tol)?)?
        }
        StateKind::Thermal => {
            let n = cutoff.unwrap_or_else(|| thermal_cutoff(mean, tail_tol));
            thermal_populations(mean, ModeTruncation::new(n, tail_tol)?)?
        }
    })
}

/// Smallest cutoff whose geometric tail `(n̄/(1+n̄))^{N+1}` is within `tol`.
fn thermal_cutoff(mean: f64, tol: f64) -> usize {
    if mean == 0.0 {
        return 0;
    }
    let ratio = mean / (1.0 + mean);
    (tol.ln() / ratio.ln()).ceil().max(1.0) as usize
}

fn build_grid(config: &RunConfig, n_vib: usize, n_field: usize) -> Result<(Vec<f64>, f64), CliError> {
    let step = match config.gt_step {
        GtStep::Fixed(s) => s,
        GtStep::Auto(_) => default_step(config.eta, n_vib, n_field),
    };
    let samples = (config.gt_max / step).floor() as usize + 1;
    if samples > MAX_SAMPLES {
        return Err(CliError::Config {
            path: "gt_step".into(),
            message: format!("{samples} samples exceed the limit of {MAX_SAMPLES}"),
        });
    }
    Ok((uniform_grid(config.gt_max, step), step))
}

/// Runs one scenario in memory. Nothing is written.
pub fn simulate(config: &RunConfig) -> Result<Scenario, CliError> {
    config.validate()?;
    let start = Instant::now();
    let nbar = config.nbar()?;
    let mbar = config.mbar()?;
    // also refuses parameters where η²(1+2m̄)/2 ≥ 1
    let predictions = TimescaleReport::predict(nbar, mbar, config.eta, REPORT_ORDERS)?;

    let oracle = config.engine.is_oracle();
    let tail_tol = config.tail_tol.unwrap_or(if oracle { ORACLE_TAIL_TOL } else { DEFAULT_TAIL_TOL });
    let (n_field, n_vib) = if oracle {
        (config.n_field.or(Some(ORACLE_N_FIELD)), config.n_vib.or(Some(ORACLE_N_VIB)))
    } else {
        (config.n_field, config.n_vib)
    };
    let field = mode_distribution(config.field_kind, nbar, n_field, tail_tol)?;
    let vib = mode_distribution(config.vib_kind, mbar, n_vib, tail_tol)?;
    let (grid, gt_step) = build_grid(config, vib.cutoff(), field.cutoff())?;

    let trace = match config.engine {
        Engine::DoubleSum => inversion_double_sum(&field, &vib, config.eta, &grid)?,
        Engine::PoissonClosed => inversion_poisson_closed(&field, mbar, config.eta, &grid)?,
        Engine::OracleRwa | Engine::OracleFull => {
            let rho0 = oracle_initial_state(&field, &vib)?;
            let dims = rho0.dims();
            let spec = TruncationSpec::new(dims.n_field, dims.n_vib, tail_tol)?;
            let params = SystemParams::new(1.0, config.eta, config.nu, config.omega, config.omega0)?;
            let (h, source) = if config.engine == Engine::OracleRwa {
                (build_carrier_rwa_interaction(&params, &spec)?, HamiltonianSource::RwaH)
            } else {
                (build_full_hamiltonian(&params, &spec)?, HamiltonianSource::FullH)
            };
            diagonalize(&h, source)?.prepare(&rho0)?.inversion_trace(&grid)?
        }
    };
    trace.check_bounds()?;

    let truncation = TruncationSummary {
        n_field: field.cutoff(),
        n_vib: (config.engine != Engine::PoissonClosed).then(|| vib.cutoff()),
        field_tail_mass: field.tail_mass(),
        vib_tail_mass: if config.engine == Engine::PoissonClosed { 0.0 } else { vib.tail_mass() },
        retained_mass: trace.retained_mass,
    };

    let window = default_window(nbar, mbar, config.eta)?;
    let detection = match detect_revivals(&trace, window) {
        Ok(revivals) => Detection {
            window,
            revivals,
            collapse: detect_collapse(&trace, dominant_rabi_period(nbar, mbar, config.eta)?).unwrap_or(None),
            skipped: None,
        },
        Err(e @ Error::Resolution { .. }) => {
            Detection { window, revivals: Vec::new(), collapse: None, skipped: Some(e.to_string()) }
        }
        Err(e) => return Err(e.into()),
    };
    let predictions = predictions.with_detected(detection.revivals.clone());

    Ok(Scenario {
        config: config.clone(),
        trace,
        predictions,
        detection,
        truncation,
        gt_step,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Fixed 12-significant-digit scientific notation.
pub fn format_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// `gt,W` CSV with LF line endings.
pub fn trace_csv(trace: &InversionTrace) -> String {
    let mut out = String::with_capacity(40 * trace.len() + 5);
    out.push_str("gt,W\n");
    for (t, w) in trace.times.iter().zip(&trace.values) {
        // normalize -0 so reruns cannot differ by sign of zero
        let w = if *w == 0.0 { 0.0 } else { *w };
        let _ = writeln!(out, "{},{}", format_sig12(*t), format_sig12(w));
    }
    out
}

#[derive(Serialize)]
struct ReportJson<'a> {
    config: &'a RunConfig,
    engine: Engine,
    provenance: crate::closed_form::Provenance,
    samples: usize,
    gt_step: f64,
    predictions: &'a TimescaleReport,
    detection: &'a Detection,
    truncation: &'a TruncationSummary,
    wall_time_s: f64,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "unbounded".into(), |x| format!("{x:.6}"))
}

fn list(v: &[f64]) -> String {
    if v.is_empty() {
        "unbounded".into()
    } else {
        v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ")
    }
}

/// Key-value report followed by a JSON section.
pub fn scenario_report(s: &Scenario) -> String {
    let mut r = String::new();
    let p = &s.predictions;
    let _ = writeln!(r, "# scenario {}", s.config.name);
    let _ = writeln!(r, "engine = {}", s.config.engine.name());
    let _ = writeln!(r, "samples = {}", s.trace.len());
    let _ = writeln!(r, "gt_step = {}", s.gt_step);
    let _ = writeln!(r, "wall_time_s = {:.3}", s.wall_time_s);
    let _ = writeln!(
        r,
        "note = gt window set by the run config; presets pick windows that bracket the predicted timescales"
    );
    let _ = writeln!(r, "\n[config]");
    r.push_str(&s.config.to_toml());
    let _ = writeln!(r, "\n[predictions]");
    let _ = writeln!(r, "field_revival_gt = {}", list(&p.field_revivals));
    let _ = writeln!(r, "vib_revival_gt = {}", list(&p.vib_revivals));
    let _ = writeln!(r, "field_collapse_gt = {:.6}", p.field_collapse);
    let _ = writeln!(r, "vib_collapse_gt = {}", opt(p.vib_collapse));
    let _ = writeln!(r, "\n[detected]");
    let _ = writeln!(r, "envelope_window_gt = {:.6}", s.detection.window);
    if let Some(why) = &s.detection.skipped {
        let _ = writeln!(r, "skipped = {why}");
    }
    let _ = writeln!(r, "collapse_gt = {}", s.detection.collapse.map_or("none".into(), |x| format!("{x:.6}")));
    let _ = writeln!(r, "revivals = {}", s.detection.revivals.len());
    for peak in &s.detection.revivals {
        let _ = writeln!(
            r,
            "revival = gt {:.4}, envelope {:.6}, prominence {:.6}",
            peak.gt_center, peak.peak, peak.prominence
        );
    }
    let _ = writeln!(r, "\n[truncation]");
    let _ = writeln!(r, "n_field = {}", s.truncation.n_field);
    let _ = writeln!(r, "n_vib = {}", s.truncation.n_vib.map_or("analytic".into(), |n| n.to_string()));
    let _ = writeln!(r, "field_tail_mass = {:e}", s.truncation.field_tail_mass);
    let _ = writeln!(r, "vib_tail_mass = {:e}", s.truncation.vib_tail_mass);
    let _ = writeln!(r, "retained_mass = {}", s.truncation.retained_mass);
    let json = ReportJson {
        config: &s.config,
        engine: s.config.engine,
        provenance: s.trace.provenance,
        samples: s.trace.len(),
        gt_step: s.gt_step,
        predictions: &s.predictions,
        detection: &s.detection,
        truncation: &s.truncation,
        wall_time_s: s.wall_time_s,
    };
    let _ = writeln!(r, "\n[json]");
    r.push_str(&serde_json::to_string_pretty(&json).expect("report serializes"));
    r.push('\n');
    r
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf, CliError> {
    fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.into(), source })
}

/// Writes the trace CSV and report of a computed scenario.
pub fn write_scenario(s: &Scenario, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(out_dir)?;
    Ok(vec![
        write_file(out_dir.join(s.config.trace_file_name()), &trace_csv(&s.trace))?,
        write_file(out_dir.join(s.config.report_file_name()), &scenario_report(s))?,
    ])
}

/// Simulates and writes. On any error nothing is written.
pub fn run_scenario(config: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let s = simulate(config)?;
    write_scenario(&s, out_dir)
}

/// Runs every preset and returns the scenarios in preset order.
pub fn simulate_suite() -> Result<Vec<Scenario>, CliError> {
    PRESETS.iter().map(|p| simulate(&RunConfig::preset(p)?)).collect()
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.3}"))
}

/// Nearest detected revival to `gt`, if `gt` lies inside the trace.
fn detected_near(s: &Scenario, gt: Option<f64>) -> Option<f64> {
    let gt = gt.filter(|t| *t > 0.0 && *t <= s.config.gt_max)?;
    s.predictions.nearest_detected(gt).map(|p| p.gt_center)
}

/// Predicted vs detected timescales for all presets.
pub fn suite_report(scenarios: &[Scenario]) -> String {
    let mut r = String::new();
    let _ = writeln!(r, "# figure suite");
    let _ = writeln!(r, "presets = {}", scenarios.len());
    let _ = writeln!(r, "wall_time_s = {:.3}", scenarios.iter().map(|s| s.wall_time_s).sum::<f64>());
    let _ = writeln!(r, "\n[table]");
    let _ = writeln!(
        r,
        "{:<6} {:>6} {:>6} {:>6} {:>7} | {:>9} {:>9} {:>9} | {:>9} {:>9} | {:>8} {:>8} {:>8} | {:>8}",
        "preset",
        "eta",
        "nbar",
        "mbar",
        "gt_max",
        "t_r^f",
        "det",
        "env",
        "t_r^v",
        "det",
        "t_c^f",
        "t_c^v",
        "det_c",
        "tail"
    );
    let mut rows = Vec::new();
    for s in scenarios {
        let p = &s.predictions;
        let trf = p.field_revivals.first().copied();
        let trv = p.vib_revivals.first().copied();
        let row = SuiteRow {
            preset: s.config.name.clone(),
            eta: s.config.eta,
            nbar: s.config.nbar().unwrap_or(f64::NAN),
            mbar: s.config.mbar().unwrap_or(f64::NAN),
            gt_max: s.config.gt_max,
            field_revival: trf,
            field_revival_detected: detected_near(s, trf),
            field_revival_envelope: trf.and_then(|t| s.envelope_near(t)),
            vib_revival: trv,
            vib_revival_detected: detected_near(s, trv),
            field_collapse: p.field_collapse,
            vib_collapse: p.vib_collapse,
            collapse_detected: s.detection.collapse,
            tail_mass: 1.0 - s.truncation.retained_mass,
        };
        let _ = writeln!(
            r,
            "{:<6} {:>6} {:>6} {:>6} {:>7} | {:>9} {:>9} {:>9} | {:>9} {:>9} | {:>8} {:>8} {:>8} | {:>8.1e}",
            row.preset,
            row.eta,
            row.nbar,
            row.mbar,
            row.gt_max,
            cell(row.field_revival),
            cell(row.field_revival_detected),
            cell(row.field_revival_envelope),
            cell(row.vib_revival),
            cell(row.vib_revival_detected),
            cell(Some(row.field_collapse)),
            cell(row.vib_collapse),
            cell(row.collapse_detected),
            row.tail_mass,
        );
        rows.push(row);
    }
    let _ = writeln!(r, "\ncolumns: det = nearest detected envelope peak, env = envelope maximum within 10% of t_r^f");

    let _ = writeln!(r, "\n[checks]");
    let find = |name: &str| rows.iter().find(|row| row.preset == name);
    if let Some(f2) = find("fig2").and_then(|r| r.field_revival_envelope) {
        for name in ["fig3", "fig7"] {
            if let Some(e) = find(name).and_then(|r| r.field_revival_envelope) {
                let _ = writeln!(r, "{name}_over_fig2_revival_envelope = {:.4}", e / f2);
            }
        }
    }
    if let Some(f7) = find("fig7") {
        if let (Some(tcv), Some(trf)) = (f7.vib_collapse, f7.field_revival) {
            let ord = if tcv < trf { "<" } else { ">=" };
            let _ = writeln!(r, "fig7_ordering = t_c^v {tcv:.3} {ord} t_r^f {trf:.3}");
        }
    }

    let _ = writeln!(r, "\n[json]");
    r.push_str(&serde_json::to_string_pretty(&rows).expect("suite rows serialize"));
    r.push('\n');
    r
}

#[derive(Clone, Debug, Serialize)]
struct SuiteRow {
    preset: String,
    eta: f64,
    nbar: f64,
    mbar: f64,
    gt_max: f64,
    field_revival: Option<f64>,
    field_revival_detected: Option<f64>,
    field_revival_envelope: Option<f64>,
    vib_revival: Option<f64>,
    vib_revival_detected: Option<f64>,
    field_collapse: f64,
    vib_collapse: Option<f64>,
    collapse_detected: Option<f64>,
    tail_mass: f64,
}

/// All seven presets: one CSV each plus [`SUITE_REPORT`]. Files are written
/// only after every preset has run.
pub fn run_figure_suite(out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let scenarios = simulate_suite()?;
    ensure_dir(out_dir)?;
    let mut files = scenarios
        .iter()
        .map(|s| write_file(out_dir.join(s.config.trace_file_name()), &trace_csv(&s.trace)))
        .collect::<Result<Vec<_>, _>>()?;
    files.push(write_file(out_dir.join(SUITE_REPORT), &suite_report(&scenarios))?);
    Ok(files)
}

/// Command line of the `simulate` binary.
#[derive(Debug, Parser)]
#[command(name = "simulate", version, about = "Ion-cavity carrier dynamics: inversion traces and timescale reports")]
#[command(group(ArgGroup::new("source").required(true).args(["preset", "config", "suite"])))]
pub struct Args {
    /// Built-in parameter set, fig1 … fig7.
    #[arg(long)]
    pub preset: Option<String>,
    /// Flat TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run all seven presets and write a consolidated report.
    #[arg(long, conflicts_with_all = ["eta", "nbar", "mbar", "gt_max", "engine"])]
    pub suite: bool,
    #[arg(long)]
    pub eta: Option<f64>,
    /// Mean field quanta (coherent or thermal field).
    #[arg(long)]
    pub nbar: Option<f64>,
    /// Mean vibrational quanta (coherent or thermal motion).
    #[arg(long)]
    pub mbar: Option<f64>,
    #[arg(long)]
    pub gt_max: Option<f64>,
    #[arg(long, value_enum)]
    pub engine: Option<Engine>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

impl Args {
    /// Resolves the config source and applies the overrides.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut config = match (&self.preset, &self.config) {
            (Some(p), None) => RunConfig::preset(p)?,
            (None, Some(path)) => RunConfig::from_file(path)?,
            _ => {
                return Err(CliError::Config {
                    path: "preset".into(),
                    message: "give exactly one of --preset or --config".into(),
                })
            }
        };
        if let Some(v) = self.eta {
            config.eta = v;
        }
        if let Some(v) = self.nbar {
            config.field_mean = Some(v);
        }
        if let Some(v) = self.mbar {
            config.vib_mean = Some(v);
        }
        if let Some(v) = self.gt_max {
            config.gt_max = v;
        }
        if let Some(v) = self.engine {
            config.engine = v;
        }
        Ok(config)
    }
}

/// Executes a parsed command line and returns the written files.
pub fn run(args: &Args) -> Result<Vec<PathBuf>, CliError> {
    if args.suite {
        run_figure_suite(&args.out)
    } else {
        run_scenario(&args.resolve()?, &args.out)
    }
}
