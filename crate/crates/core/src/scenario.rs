//! Scenario files and the exporters behind the command-line tool.
//!
//! A scenario is a TOML document naming a path, an error map, a controller,
//! initial poses and stop rules, plus optional sections for the field grid,
//! basin sweep and controller comparison. Outputs are CSV (time series,
//! grids) and TOML (reports). Every run is deterministic and results are
//! written in input order by a single thread.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    classify_critical_point, critical_error_threshold, find_critical_points, heading_band, viability_length,
    AnalysisConfig, AnalysisError, Classification,
};
use crate::field::{check_derivatives, make_path, ErrorMap, Path, PathSpec};
use crate::geometry::{heading, Region, Vec2};
use crate::gvf::{field_rate, guiding_field, GvfParams};
use crate::sim::{ControllerConfig, Pose, SimConfig, SimError, Simulator, StopPolicy, TerminationKind, Trajectory};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config serialization error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid config field `{field}`{}: {reason}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Invalid { field: String, line: Option<usize>, reason: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A labelled initial pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartPose {
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
}

impl StartPose {
    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldGridConfig {
    pub region: Region,
    /// Cells per side.
    pub resolution: usize,
}

impl Default for FieldGridConfig {
    fn default() -> Self {
        Self { region: Region::workspace(), resolution: 40 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasinConfig {
    /// Starts are the cell centres of an `nx x ny` grid over this box.
    pub region: Region,
    pub nx: usize,
    pub ny: usize,
    /// Evenly spaced initial headings `2 pi k / headings`.
    pub headings: usize,
    pub t_max: f64,
}

impl Default for BasinConfig {
    fn default() -> Self {
        Self { region: Region::workspace(), nx: 40, ny: 40, headings: 4, t_max: 600.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub start: StartPose,
    pub controllers: Vec<ControllerConfig>,
    pub t_max: f64,
    /// Distance below which a run counts as settled.
    #[serde(default = "CompareConfig::default_settle_distance")]
    pub settle_distance: f64,
    /// Trailing window for the steady-state mean distance.
    #[serde(default = "CompareConfig::default_steady_window")]
    pub steady_window: f64,
}

impl CompareConfig {
    fn default_settle_distance() -> f64 {
        5.0
    }

    fn default_steady_window() -> f64 {
        20.0
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub path: PathSpec,
    #[serde(default)]
    pub error_map: ErrorMap,
    pub controller: ControllerConfig,
    pub dt: f64,
    pub t_max: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub stop: StopPolicy,
    #[serde(default)]
    pub initial_poses: Vec<StartPose>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldGridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basin: Option<BasinConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
}

/// Line of the first `key = ...` or `[key]` / `[[key]]` header in `source`.
fn locate(source: &str, key: &str) -> Option<usize> {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    source.lines().position(|l| {
        let t = l.trim_start();
        let assign = t.strip_prefix(leaf).map(|r| r.trim_start().starts_with('=')).unwrap_or(false);
        let header = t.starts_with('[') && t.trim_matches(|c| c == '[' || c == ']').trim() == key;
        assign || header
    })
    .map(|i| i + 1)
}

impl Scenario {
    pub fn from_toml(source: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = toml::from_str(source)?;
        scenario.validate().map_err(|err| match err {
            ScenarioError::Invalid { field, reason, .. } => {
                let line = locate(source, &field);
                ScenarioError::Invalid { field, line, reason }
            }
            other => other,
        })?;
        Ok(scenario)
    }

    pub fn load(file: &FsPath) -> Result<Self, ScenarioError> {
        let text = fs::read_to_string(file).map_err(|source| ScenarioError::Read { path: file.into(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, ScenarioError> {
        Ok(toml::to_string(self)?)
    }

    fn invalid(field: &str, reason: impl ToString) -> ScenarioError {
        ScenarioError::Invalid { field: field.to_string(), line: None, reason: reason.to_string() }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig { dt: self.dt, t_max: self.t_max, stop: self.stop }
    }

    pub fn build_path(&self) -> Result<Path, ScenarioError> {
        make_path(self.path.clone()).map_err(|e| Self::invalid("path", e))
    }

    /// GVF gains for analysis output; baselines fall back to the defaults.
    pub fn gvf_params(&self) -> GvfParams {
        match self.controller {
            ControllerConfig::Gvf(p) => p,
            _ => GvfParams::reference(),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let path = self.build_path()?;
        self.error_map.validate().map_err(|e| Self::invalid("error_map", e))?;
        self.controller.validate().map_err(|e| Self::invalid("controller", e))?;
        self.sim_config().validate().map_err(|e| match e {
            SimError::InvalidSetting { name, .. } => {
                let field = if matches!(name, "dt" | "t_max") { name.to_string() } else { format!("stop.{name}") };
                Self::invalid(&field, e)
            }
            other => Self::invalid("stop", other),
        })?;
        if self.initial_poses.is_empty() {
            return Err(Self::invalid("initial_poses", "at least one initial pose is required"));
        }
        for p in &self.initial_poses {
            if ![p.x, p.y, p.alpha].iter().all(|v| v.is_finite()) {
                return Err(Self::invalid("initial_poses", format!("pose `{}` has a non-finite value", p.label)));
            }
        }
        let mut labels: Vec<&str> = self.initial_poses.iter().map(|p| p.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Self::invalid("initial_poses", "pose labels must be unique"));
        }
        if self.analysis.grid_n < 16 || !self.analysis.region.is_valid() || self.analysis.raster_cells < 2 {
            return Err(Self::invalid("analysis", "need grid_n >= 16, raster_cells >= 2 and a valid region"));
        }
        if let Some(f) = &self.field {
            if f.resolution < 2 || !f.region.is_valid() {
                return Err(Self::invalid("field", "resolution must be >= 2 over a valid region"));
            }
        }
        if let Some(b) = &self.basin {
            if b.nx == 0 || b.ny == 0 || b.headings == 0 || !b.region.is_valid() || !(b.t_max > 0.0 && b.t_max.is_finite()) {
                return Err(Self::invalid("basin", "need nx, ny, headings >= 1, t_max > 0 and a valid region"));
            }
        }
        if let Some(c) = &self.compare {
            if c.controllers.is_empty() {
                return Err(Self::invalid("compare", "at least one controller is required"));
            }
            for ctl in &c.controllers {
                ctl.validate().map_err(|e| Self::invalid("compare", e))?;
            }
            if !(c.t_max > 0.0 && c.t_max.is_finite() && c.settle_distance > 0.0 && c.steady_window > 0.0) {
                return Err(Self::invalid("compare", "t_max, settle_distance and steady_window must be > 0"));
            }
            if path.parametric().is_none() && c.controllers.iter().any(|c| !matches!(c, ControllerConfig::Gvf(_))) {
                return Err(Self::invalid("compare", "LOS and NGL need a path with a parametric form"));
            }
        }
        Ok(())
    }
}

/// Per-run summary record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub termination: TerminationKind,
    pub t_final: f64,
    pub final_abs_e: f64,
    pub final_distance: f64,
    pub max_abs_e_after_touch: f64,
    pub max_overshoot: f64,
}

/// Index of the first sample where the tracking error reaches zero or
/// changes sign relative to the start.
pub fn first_path_touch(errors: &[f64]) -> Option<usize> {
    let e0 = *errors.first()?;
    errors.iter().position(|&e| e == 0.0 || (e > 0.0) != (e0 > 0.0))
}

/// Largest value after the first path touch; 0 if the path is never
/// crossed.
fn max_after_touch(errors: &[f64], values: impl Iterator<Item = f64>) -> f64 {
    match first_path_touch(errors) {
        Some(k) => values.skip(k).fold(0.0, f64::max),
        None => 0.0,
    }
}

pub fn summarize(label: &str, traj: &Trajectory) -> RunSummary {
    let errors: Vec<f64> = traj.samples.iter().map(|s| s.control.e).collect();
    let last = traj.last();
    RunSummary {
        label: label.to_string(),
        termination: traj.termination.kind,
        t_final: traj.termination.t_final,
        final_abs_e: last.control.e.abs(),
        final_distance: last.distance,
        max_abs_e_after_touch: max_after_touch(&errors, errors.iter().map(|e| e.abs())),
        max_overshoot: max_after_touch(&errors, traj.samples.iter().map(|s| s.distance)),
    }
}

fn ensure_dir(dir: &FsPath) -> Result<(), ScenarioError> {
    fs::create_dir_all(dir).map_err(|source| ScenarioError::Write { path: dir.into(), source })
}

fn write_text(file: &FsPath, text: &str) -> Result<(), ScenarioError> {
    fs::write(file, text).map_err(|source| ScenarioError::Write { path: file.into(), source })
}

/// Trajectory CSV columns: `t, x, y, alpha, e, delta, omega_d, omega, dist_path`.
pub fn write_trajectory_csv(file: &FsPath, traj: &Trajectory) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_path(file)?;
    w.write_record(["t", "x", "y", "alpha", "e", "delta", "omega_d", "omega", "dist_path"])?;
    for s in &traj.samples {
        let c = &s.control;
        w.write_record(
            [s.t, s.pose.x, s.pose.y, s.pose.alpha, c.e, c.delta, c.omega_d, c.omega, s.distance].map(|v| v.to_string()),
        )?;
    }
    w.flush().map_err(|source| ScenarioError::Write { path: file.into(), source })?;
    Ok(())
}

fn write_summary_csv(file: &FsPath, rows: &[RunSummary]) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_path(file)?;
    w.write_record(["label", "termination", "t_final", "final_abs_e", "final_distance", "max_abs_e_after_touch", "max_overshoot"])?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            r.termination.as_str().to_string(),
            r.t_final.to_string(),
            r.final_abs_e.to_string(),
            r.final_distance.to_string(),
            r.max_abs_e_after_touch.to_string(),
            r.max_overshoot.to_string(),
        ])?;
    }
    w.flush().map_err(|source| ScenarioError::Write { path: file.into(), source })?;
    Ok(())
}

/// Simulates every initial pose of the scenario.
pub fn simulate_scenario(scenario: &Scenario) -> Result<Vec<(String, Trajectory)>, ScenarioError> {
    let path = scenario.build_path()?;
    let sim = Simulator::new(&path, scenario.error_map, scenario.controller, scenario.sim_config())?;
    Ok(scenario
        .initial_poses
        .par_iter()
        .map(|p| (p.label.clone(), sim.run(&p.pose())))
        .collect())
}

/// Writes `<name>_<label>.csv` per initial pose and `<name>_summary.csv`.
pub fn run_scenario(scenario: &Scenario, out_dir: &FsPath) -> Result<Vec<RunSummary>, ScenarioError> {
    let runs = simulate_scenario(scenario)?;
    ensure_dir(out_dir)?;
    let mut summaries = Vec::with_capacity(runs.len());
    for (label, traj) in &runs {
        write_trajectory_csv(&out_dir.join(format!("{}_{}.csv", scenario.name, label)), traj)?;
        summaries.push(summarize(label, traj));
    }
    write_summary_csv(&out_dir.join(format!("{}_summary.csv", scenario.name)), &summaries)?;
    Ok(summaries)
}

/// One cell of the exported field grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRow {
    pub x: f64,
    pub y: f64,
    /// Desired direction; NaN in degenerate cells.
    pub m_x: f64,
    pub m_y: f64,
    pub e: f64,
    pub regular: bool,
}

/// Field on the cell centres of a `resolution x resolution` grid. A cell is
/// flagged degenerate when it contains a critical point or the field is
/// degenerate at its centre.
pub fn export_field_grid(
    path: &Path,
    errmap: &ErrorMap,
    params: &GvfParams,
    region: &Region,
    resolution: usize,
    critical: &[Vec2],
) -> Vec<FieldRow> {
    let n = resolution.max(2);
    let (hx, hy) = (0.5 * region.width() / n as f64, 0.5 * region.height() / n as f64);
    region
        .cell_centers(n, n)
        .into_iter()
        .map(|c| {
            let s = guiding_field(path, errmap, params, &c);
            let contains_critical = critical.iter().any(|p| (p.x - c.x).abs() <= hx && (p.y - c.y).abs() <= hy);
            let (m_x, m_y, regular) = match s.m_d {
                Some(m) if !contains_critical => (m.x, m.y, true),
                _ => (f64::NAN, f64::NAN, false),
            };
            FieldRow { x: c.x, y: c.y, m_x, m_y, e: s.e, regular }
        })
        .collect()
}

/// Number of 4-connected groups of degenerate cells in a row-major grid.
pub fn degenerate_neighborhoods(rows: &[FieldRow], resolution: usize) -> usize {
    let n = resolution;
    let mut seen = vec![false; rows.len()];
    let mut groups = 0;
    for start in 0..rows.len() {
        if rows[start].regular || seen[start] {
            continue;
        }
        groups += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(k) = stack.pop() {
            let (i, j) = (k % n, k / n);
            let mut push = |ii: usize, jj: usize| {
                let kk = jj * n + ii;
                if !rows[kk].regular && !seen[kk] {
                    seen[kk] = true;
                    stack.push(kk);
                }
            };
            if i > 0 {
                push(i - 1, j);
            }
            if i + 1 < n {
                push(i + 1, j);
            }
            if j > 0 {
                push(i, j - 1);
            }
            if j + 1 < n {
                push(i, j + 1);
            }
        }
    }
    groups
}

fn critical_locations(scenario: &Scenario, path: &Path) -> Result<Vec<Vec2>, ScenarioError> {
    let a = &scenario.analysis;
    Ok(find_critical_points(path, &a.region, a.grid_n)?.into_iter().map(|r| r.location).collect())
}

pub fn write_field_csv(file: &FsPath, rows: &[FieldRow]) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_path(file)?;
    w.write_record(["x", "y", "m_d_x", "m_d_y", "e", "regular"])?;
    for r in rows {
        w.write_record([r.x, r.y, r.m_x, r.m_y, r.e].map(|v| v.to_string()).into_iter().chain([(r.regular as u8).to_string()]))?;
    }
    w.flush().map_err(|source| ScenarioError::Write { path: file.into(), source })?;
    Ok(())
}

/// Writes `<name>_field.csv`; returns the rows and the resolution used.
pub fn run_field(scenario: &Scenario, out_dir: &FsPath) -> Result<(Vec<FieldRow>, usize), ScenarioError> {
    let path = scenario.build_path()?;
    let cfg = scenario.field.unwrap_or_default();
    let critical = critical_locations(scenario, &path)?;
    let rows = export_field_grid(&path, &scenario.error_map, &scenario.gvf_params(), &cfg.region, cfg.resolution, &critical);
    ensure_dir(out_dir)?;
    write_field_csv(&out_dir.join(format!("{}_field.csv", scenario.name)), &rows)?;
    Ok((rows, cfg.resolution))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalEntry {
    pub x: f64,
    pub y: f64,
    pub singular: bool,
    pub e: f64,
    pub hessian_eigs: [f64; 2],
    pub classification: Option<Classification>,
    pub trace_j: f64,
    pub det_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalReport {
    pub path: String,
    /// `min |e|` over the critical points; omitted when there are none.
    pub e_c: Option<f64>,
    /// `atan(k_n e_c)`.
    pub heading_band: f64,
    /// Worst-case path length to enter the invariant set.
    pub viability_length_worst: f64,
    pub critical_points: Vec<CriticalEntry>,
}

pub fn critical_report(scenario: &Scenario) -> Result<CriticalReport, ScenarioError> {
    let path = scenario.build_path()?;
    let a = &scenario.analysis;
    let params = scenario.gvf_params();
    let roots = find_critical_points(&path, &a.region, a.grid_n)?;
    let mut entries = Vec::new();
    for r in &roots {
        let s = path.eval(&r.location);
        let e = scenario.error_map.psi(s.phi);
        let classified = (!r.singular)
            .then(|| classify_critical_point(&path, &scenario.error_map, params.k_n, &r.location))
            .transpose()?;
        let eigs = crate::geometry::sym_eigenvalues(&s.hess);
        let j = crate::analysis::linearization(&s.hess, e, params.k_n);
        entries.push(CriticalEntry {
            x: r.location.x,
            y: r.location.y,
            singular: r.singular,
            e,
            hessian_eigs: eigs,
            classification: classified.map(|c| c.classification),
            trace_j: j.trace(),
            det_j: j.determinant(),
        });
    }
    let locations: Vec<Vec2> = roots.iter().map(|r| r.location).collect();
    let e_c = critical_error_threshold(&path, &scenario.error_map, &locations);
    Ok(CriticalReport {
        path: scenario.path.kind_name().to_string(),
        e_c: e_c.is_finite().then_some(e_c),
        heading_band: heading_band(params.k_n, e_c),
        viability_length_worst: viability_length(&params, e_c, std::f64::consts::PI),
        critical_points: entries,
    })
}

pub fn run_critical(scenario: &Scenario, out_dir: &FsPath) -> Result<(CriticalReport, String), ScenarioError> {
    let report = critical_report(scenario)?;
    let text = toml::to_string(&report)?;
    ensure_dir(out_dir)?;
    write_text(&out_dir.join(format!("{}_critical.toml", scenario.name)), &text)?;
    Ok((report, text))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinCell {
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
    pub kind: TerminationKind,
    pub t_final: f64,
    /// The start's grid cell contains a critical point, or the start lies
    /// inside its stop ball.
    pub starts_critical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinSummary {
    pub runs: usize,
    pub converged: usize,
    pub critical: usize,
    pub timeout: usize,
    pub left_domain: usize,
    pub other: usize,
    /// Critical outcomes over all runs.
    pub critical_fraction: f64,
    /// Critical outcomes over runs whose cell holds no critical point.
    pub critical_fraction_excluding_critical_cells: f64,
}

pub fn basin_sweep(
    path: &Path,
    errmap: &ErrorMap,
    controller: &ControllerConfig,
    stop: &StopPolicy,
    dt: f64,
    cfg: &BasinConfig,
) -> Result<(Vec<BasinCell>, BasinSummary), ScenarioError> {
    let sim = Simulator::new(path, *errmap, *controller, SimConfig { dt, t_max: cfg.t_max, stop: *stop })?;
    let mut starts = Vec::with_capacity(cfg.nx * cfg.ny * cfg.headings);
    for c in cfg.region.cell_centers(cfg.nx, cfg.ny) {
        for k in 0..cfg.headings {
            starts.push(Pose::new(c.x, c.y, std::f64::consts::TAU * k as f64 / cfg.headings as f64));
        }
    }
    let (hx, hy) = (0.5 * cfg.region.width() / cfg.nx as f64, 0.5 * cfg.region.height() / cfg.ny as f64);
    let cells: Vec<BasinCell> = starts
        .par_iter()
        .map(|p| {
            let out = sim.run_outcome(p);
            let starts_critical = sim.critical_points().iter().any(|c| {
                (c - p.position()).norm() < stop.tol_c || ((c.x - p.x).abs() <= hx && (c.y - p.y).abs() <= hy)
            });
            BasinCell { x: p.x, y: p.y, alpha: p.alpha, kind: out.termination.kind, t_final: out.termination.t_final, starts_critical }
        })
        .collect();
    let count = |k: TerminationKind| cells.iter().filter(|c| c.kind == k).count();
    let critical = count(TerminationKind::ReachedCriticalSet);
    let outside: Vec<&BasinCell> = cells.iter().filter(|c| !c.starts_critical).collect();
    let critical_outside = outside.iter().filter(|c| c.kind == TerminationKind::ReachedCriticalSet).count();
    let converged = count(TerminationKind::ConvergedToPath);
    let timeout = count(TerminationKind::Timeout);
    let left_domain = count(TerminationKind::LeftDomain);
    let summary = BasinSummary {
        runs: cells.len(),
        converged,
        critical,
        timeout,
        left_domain,
        other: cells.len() - converged - critical - timeout - left_domain,
        critical_fraction: critical as f64 / cells.len() as f64,
        critical_fraction_excluding_critical_cells: if outside.is_empty() {
            0.0
        } else {
            critical_outside as f64 / outside.len() as f64
        },
    };
    Ok((cells, summary))
}

/// Writes `<name>_basin.csv` and `<name>_basin_summary.toml`.
pub fn run_basin(scenario: &Scenario, out_dir: &FsPath) -> Result<BasinSummary, ScenarioError> {
    let path = scenario.build_path()?;
    let cfg = scenario.basin.unwrap_or_default();
    let (cells, summary) = basin_sweep(&path, &scenario.error_map, &scenario.controller, &scenario.stop, scenario.dt, &cfg)?;
    ensure_dir(out_dir)?;
    let file = out_dir.join(format!("{}_basin.csv", scenario.name));
    let mut w = csv::Writer::from_path(&file)?;
    w.write_record(["x", "y", "alpha", "termination", "t_final"])?;
    for c in &cells {
        w.write_record([c.x.to_string(), c.y.to_string(), c.alpha.to_string(), c.kind.as_str().to_string(), c.t_final.to_string()])?;
    }
    w.flush().map_err(|source| ScenarioError::Write { path: file.clone(), source })?;
    write_text(&out_dir.join(format!("{}_basin_summary.toml", scenario.name)), &toml::to_string(&summary)?)?;
    Ok(summary)
}

/// Transient and steady-state figures of one distance series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub controller: String,
    pub termination: TerminationKind,
    pub t_final: f64,
    /// Largest distance after the path is first crossed; 0 if never crossed.
    pub max_overshoot: f64,
    /// Earliest time after which the distance stays below the settle
    /// threshold; absent if it never settles.
    pub settling_time: Option<f64>,
    /// Mean distance over the trailing window.
    pub steady_state_mean: f64,
}

/// Earliest `t` after which every sample of `d` stays below `threshold`.
pub fn settling_time(series: &[(f64, f64)], threshold: f64) -> Option<f64> {
    let last_above = series.iter().rposition(|(_, d)| !(*d < threshold));
    match last_above {
        None => series.first().map(|(t, _)| *t),
        Some(k) if k + 1 < series.len() => Some(series[k + 1].0),
        Some(_) => None,
    }
}

/// Mean of `d` over samples with `t >= t_end - window`.
pub fn trailing_mean(series: &[(f64, f64)], window: f64) -> f64 {
    let Some(&(t_end, _)) = series.last() else { return f64::NAN };
    let tail: Vec<f64> = series.iter().filter(|(t, _)| *t >= t_end - window - 1e-9).map(|(_, d)| *d).collect();
    tail.iter().sum::<f64>() / tail.len() as f64
}

pub fn compare_row(name: &str, traj: &Trajectory, cfg: &CompareConfig) -> CompareRow {
    let errors: Vec<f64> = traj.samples.iter().map(|s| s.control.e).collect();
    let series: Vec<(f64, f64)> = traj.samples.iter().map(|s| (s.t, s.distance)).collect();
    CompareRow {
        controller: name.to_string(),
        termination: traj.termination.kind,
        t_final: traj.termination.t_final,
        max_overshoot: max_after_touch(&errors, series.iter().map(|(_, d)| *d)),
        settling_time: settling_time(&series, cfg.settle_distance),
        steady_state_mean: trailing_mean(&series, cfg.steady_window),
    }
}

/// Runs every configured controller from the same start to `t_max`.
pub fn compare_controllers(
    path: &Path,
    errmap: &ErrorMap,
    stop: &StopPolicy,
    dt: f64,
    cfg: &CompareConfig,
) -> Result<Vec<(CompareRow, Trajectory)>, ScenarioError> {
    let stop = StopPolicy { stop_on_convergence: false, ..*stop };
    let sims = cfg
        .controllers
        .iter()
        .map(|c| Simulator::new(path, *errmap, *c, SimConfig { dt, t_max: cfg.t_max, stop }))
        .collect::<Result<Vec<_>, _>>()?;
    let pose = cfg.start.pose();
    Ok(sims
        .par_iter()
        .zip(cfg.controllers.par_iter())
        .map(|(sim, ctl)| {
            let traj = sim.run(&pose);
            (compare_row(ctl.name(), &traj, cfg), traj)
        })
        .collect())
}

/// Writes `<name>_compare_<i>_<controller>.csv` distance series and
/// `<name>_compare.csv`.
pub fn run_compare(scenario: &Scenario, out_dir: &FsPath) -> Result<Vec<CompareRow>, ScenarioError> {
    let path = scenario.build_path()?;
    let cfg = scenario
        .compare
        .as_ref()
        .ok_or_else(|| Scenario::invalid("compare", "scenario has no [compare] section"))?;
    let results = compare_controllers(&path, &scenario.error_map, &scenario.stop, scenario.dt, cfg)?;
    ensure_dir(out_dir)?;
    let mut rows = Vec::new();
    for (i, (row, traj)) in results.into_iter().enumerate() {
        let file = out_dir.join(format!("{}_compare_{}_{}.csv", scenario.name, i, row.controller));
        let mut w = csv::Writer::from_path(&file)?;
        w.write_record(["t", "dist_path"])?;
        for s in &traj.samples {
            w.write_record([s.t.to_string(), s.distance.to_string()])?;
        }
        w.flush().map_err(|source| ScenarioError::Write { path: file.clone(), source })?;
        rows.push(row);
    }
    let file = out_dir.join(format!("{}_compare.csv", scenario.name));
    let mut w = csv::Writer::from_path(&file)?;
    w.write_record(["controller", "termination", "t_final", "max_overshoot", "settling_time", "steady_state_mean"])?;
    for r in &rows {
        w.write_record([
            r.controller.clone(),
            r.termination.as_str().to_string(),
            r.t_final.to_string(),
            r.max_overshoot.to_string(),
            r.settling_time.map(|t| t.to_string()).unwrap_or_default(),
            r.steady_state_mean.to_string(),
        ])?;
    }
    w.flush().map_err(|source| ScenarioError::Write { path: file, source })?;
    Ok(rows)
}

/// Outcome of one built-in numerical check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn builtin_paths() -> Vec<Path> {
    [
        PathSpec::reference_ellipse(),
        PathSpec::reference_cassini(),
        PathSpec::Circle { x0: 600.0, y0: 350.0, radius: 200.0 },
        PathSpec::Line { a: 0.3, b: -0.8, c: 120.0 },
    ]
    .into_iter()
    .map(|s| make_path(s).expect("built-in path"))
    .collect()
}

fn random_point(rng: &mut impl Rng, region: &Region) -> Vec2 {
    Vec2::new(rng.random_range(region.x_min..region.x_max), rng.random_range(region.y_min..region.y_max))
}

/// Derivative at 0 of an angle signal: five-point central differences over
/// halving steps, keeping the estimate where successive steps agree best.
fn angle_rate(angle: &impl Fn(f64) -> Option<f64>) -> Option<f64> {
    let a0 = angle(0.0)?;
    let d = |t: f64| angle(t).map(|a| crate::geometry::wrap_angle(a - a0));
    let estimates = (0..24)
        .map(|k| {
            let h = 1e-2 * 0.5f64.powi(k);
            Some((d(-2.0 * h)? - 8.0 * d(-h)? + 8.0 * d(h)? - d(2.0 * h)?) / (12.0 * h))
        })
        .collect::<Option<Vec<f64>>>()?;
    estimates.windows(2).min_by(|a, b| (a[0] - a[1]).abs().total_cmp(&(b[0] - b[1]).abs())).map(|w| w[1])
}

/// Derivative, field-identity and rotation-rate checks on the built-in
/// paths with fixed seeds.
pub fn self_check() -> Vec<CheckResult> {
    let region = Region::padded_workspace();
    let params = GvfParams::reference();
    let errmap = ErrorMap::Identity;
    let mut out = Vec::new();
    for path in builtin_paths() {
        let kind = path.spec().kind_name();
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);

        let worst = (0..1000).map(|_| check_derivatives(&path, &random_point(&mut rng, &region), 1e-4)).fold(0.0, f64::max);
        out.push(CheckResult {
            name: format!("{kind}: gradient/Hessian vs central differences"),
            passed: worst < 1e-4,
            detail: format!("max relative error {worst:.3e}"),
        });

        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let p = random_point(&mut rng, &region);
            let s = guiding_field(&path, &errmap, &params, &p);
            let Some(m) = s.m_d else { continue };
            let n2 = s.n.norm_squared();
            let ke = params.k_n * s.e;
            let r1 = (s.v.dot(&s.n) + ke * n2).abs() / (1.0 + ke.abs() * n2);
            let r2 = (s.v.norm_squared() - (1.0 + ke * ke) * n2).abs() / ((1.0 + ke * ke) * n2);
            let r3 = (m.norm() - 1.0).abs();
            worst = worst.max(r1).max(r2).max(r3);
        }
        out.push(CheckResult {
            name: format!("{kind}: field identities"),
            passed: worst < 1e-10,
            detail: format!("max relative residual {worst:.3e}"),
        });

        let mut worst = 0.0f64;
        for _ in 0..200 {
            let p = random_point(&mut rng, &region);
            let alpha = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let Ok(rate) = field_rate(&path, &errmap, &params, &p, alpha) else { continue };
            let velocity = heading(alpha) * params.u_r;
            let bearing = |t: f64| guiding_field(&path, &errmap, &params, &(p + velocity * t)).m_d.map(|m| m.y.atan2(m.x));
            let Some(fd) = angle_rate(&bearing) else { continue };
            worst = worst.max((rate.omega_d - fd).abs());
        }
        out.push(CheckResult {
            name: format!("{kind}: rotation rate vs finite difference"),
            passed: worst < 1e-5,
            detail: format!("max abs difference {worst:.3e}"),
        });
    }
    out
}

/// Human-readable table for summaries.
pub fn format_summaries(rows: &[RunSummary]) -> String {
    let mut s = String::new();
    for r in rows {
        let _ = writeln!(
            s,
            "{:<12} {:<22} t={:>8.3} |e|={:.3e} d={:.3e} overshoot={:.3}",
            r.label,
            r.termination.as_str(),
            r.t_final,
            r.final_abs_e,
            r.final_distance,
            r.max_overshoot
        );
    }
    s
}
