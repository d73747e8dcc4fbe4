//! Closed-loop unicycle simulation and integral curves of the guiding field.
//!
//! Every run ends in a [`TerminationEvent`]; reaching the critical set or
//! leaving the workspace are outcomes, not errors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{find_critical_points, AnalysisConfig};
use crate::controller::{gvf_control, BaselineConfig, ControlSample, Direction, GuidanceError, LosParams, NglParams, PathGuide};
use crate::field::{DistanceConfig, DistanceOracle, ErrorMap, FieldError, Path};
use crate::geometry::{heading, wrap_angle, Region, Vec2};
use crate::gvf::{guiding_field, GvfError, GvfParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation setting `{name}` = {value}")]
    InvalidSetting { name: &'static str, value: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Gvf(#[from] GvfError),
    #[error(transparent)]
    Guidance(#[from] GuidanceError),
}

/// Robot state; `alpha` is kept in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, alpha: f64) -> Self {
        Self { x, y, alpha: wrap_angle(alpha) }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// One RK4 step of `x' = u_r cos a, y' = u_r sin a, a' = omega` with
/// `omega` held over the step.
pub fn step_unicycle(pose: &Pose, u_r: f64, omega: f64, dt: f64) -> Pose {
    if dt == 0.0 {
        return *pose;
    }
    let a = pose.alpha;
    let m1 = heading(a);
    let m2 = heading(a + 0.5 * dt * omega);
    let m4 = heading(a + dt * omega);
    // k2 and k3 coincide because the heading rate does not depend on position
    let dp = (m1 + m2 * 4.0 + m4) * (u_r * dt / 6.0);
    Pose::new(pose.x + dp.x, pose.y + dp.y, a + dt * omega)
}

/// Convergence and stop predicates shared by closed-loop runs and traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopPolicy {
    pub tol_e: f64,
    pub tol_d: f64,
    /// Time the convergence predicate has to hold.
    pub dwell: f64,
    /// Radius of the ball around each critical point that counts as reached.
    pub tol_c: f64,
    /// Leaving this box ends the run.
    pub region: Region,
    /// When false, runs continue to `t_max` even after converging.
    pub stop_on_convergence: bool,
}

impl Default for StopPolicy {
    fn default() -> Self {
        Self {
            tol_e: 1e-2,
            tol_d: 2.0,
            dwell: 5.0,
            tol_c: 1.0,
            region: Region::padded_workspace(),
            stop_on_convergence: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_max: f64,
    #[serde(default)]
    pub stop: StopPolicy,
}

impl SimConfig {
    pub fn new(dt: f64, t_max: f64) -> Self {
        Self { dt, t_max, stop: StopPolicy::default() }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, value) in [
            ("dt", self.dt),
            ("t_max", self.t_max),
            ("tol_e", self.stop.tol_e),
            ("tol_d", self.stop.tol_d),
            ("tol_c", self.stop.tol_c),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(SimError::InvalidSetting { name, value });
            }
        }
        if !(self.stop.dwell.is_finite() && self.stop.dwell >= 0.0) {
            return Err(SimError::InvalidSetting { name: "dwell", value: self.stop.dwell });
        }
        if !self.stop.region.is_valid() {
            return Err(SimError::InvalidSetting { name: "region", value: f64::NAN });
        }
        Ok(())
    }
}

/// Which steering law closes the loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerConfig {
    Gvf(GvfParams),
    Los {
        lookahead: f64,
        k_los: f64,
        #[serde(default)]
        direction: Direction,
        u_r: f64,
    },
    Ngl {
        radius: f64,
        k_r: f64,
        #[serde(default)]
        direction: Direction,
        u_r: f64,
    },
}

impl ControllerConfig {
    pub fn u_r(&self) -> f64 {
        match *self {
            ControllerConfig::Gvf(p) => p.u_r,
            ControllerConfig::Los { u_r, .. } | ControllerConfig::Ngl { u_r, .. } => u_r,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ControllerConfig::Gvf(_) => "gvf",
            ControllerConfig::Los { .. } => "los",
            ControllerConfig::Ngl { .. } => "ngl",
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        match *self {
            ControllerConfig::Gvf(p) => p.validate()?,
            ControllerConfig::Los { lookahead, k_los, direction, u_r } => {
                LosParams { lookahead, k_los, direction }.validate()?;
                positive_speed(u_r)?;
            }
            ControllerConfig::Ngl { radius, k_r, direction, u_r } => {
                NglParams { radius, k_r, direction }.validate()?;
                positive_speed(u_r)?;
            }
        }
        Ok(())
    }
}

fn positive_speed(u_r: f64) -> Result<(), SimError> {
    if u_r.is_finite() && u_r > 0.0 {
        Ok(())
    } else {
        Err(SimError::InvalidSetting { name: "u_r", value: u_r })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationKind {
    ConvergedToPath,
    ReachedCriticalSet,
    Timeout,
    LeftDomain,
    GuidanceInfeasible,
}

impl TerminationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationKind::ConvergedToPath => "converged_to_path",
            TerminationKind::ReachedCriticalSet => "reached_critical_set",
            TerminationKind::Timeout => "timeout",
            TerminationKind::LeftDomain => "left_domain",
            TerminationKind::GuidanceInfeasible => "guidance_infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminationEvent {
    pub kind: TerminationKind,
    pub t_final: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub pose: Pose,
    pub control: ControlSample,
    /// Distance to the path; NaN where a lightweight run skipped it.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub samples: Vec<TrajectorySample>,
    pub termination: TerminationEvent,
}

impl Trajectory {
    pub fn positions(&self) -> Vec<(f64, Vec2)> {
        self.samples.iter().map(|s| (s.t, s.pose.position())).collect()
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has at least one sample")
    }
}

/// Result of a run that did not keep the time series.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub termination: TerminationEvent,
    pub last: TrajectorySample,
}

/// A path, error map and controller prepared for repeated runs: critical
/// points, the distance oracle and the baseline geometry are built once.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    path: &'a Path,
    errmap: ErrorMap,
    controller: ControllerConfig,
    cfg: SimConfig,
    critical: Vec<Vec2>,
    oracle: DistanceOracle,
    guide: Option<PathGuide>,
}

enum StepControl {
    Ok(ControlSample),
    Infeasible(ControlSample, String),
}

impl<'a> Simulator<'a> {
    pub fn new(path: &'a Path, errmap: ErrorMap, controller: ControllerConfig, cfg: SimConfig) -> Result<Self, SimError> {
        errmap.validate()?;
        controller.validate()?;
        cfg.validate()?;
        let analysis = AnalysisConfig { region: cfg.stop.region, ..AnalysisConfig::default() };
        let critical = find_critical_points(path, &analysis.region, analysis.grid_n)
            .map(|roots| roots.into_iter().map(|r| r.location).collect())
            .unwrap_or_default();
        let oracle = DistanceOracle::new(path, &DistanceConfig { region: cfg.stop.region, ..DistanceConfig::default() })?;
        let guide = match controller {
            ControllerConfig::Gvf(_) => None,
            _ => Some(PathGuide::new(path, BaselineConfig::default())?),
        };
        Ok(Self { path, errmap, controller, cfg, critical, oracle, guide })
    }

    pub fn critical_points(&self) -> &[Vec2] {
        &self.critical
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn distance(&self, p: &Vec2) -> f64 {
        self.oracle.distance(p)
    }

    fn near_critical(&self, p: &Vec2) -> Option<Vec2> {
        self.critical.iter().copied().find(|c| (c - p).norm() < self.cfg.stop.tol_c)
    }

    fn control(&self, pose: &Pose) -> StepControl {
        let e = self.errmap.psi(self.path.phi(&pose.position()));
        let from_cmd = |omega: f64, delta: f64, ff: f64| ControlSample { omega, delta, omega_d: ff, e, regular: true };
        let failed = |err: GuidanceError| {
            StepControl::Infeasible(
                ControlSample { omega: 0.0, delta: f64::NAN, omega_d: f64::NAN, e, regular: false },
                err.to_string(),
            )
        };
        match self.controller {
            ControllerConfig::Gvf(params) => StepControl::Ok(gvf_control(self.path, &self.errmap, &params, pose)),
            ControllerConfig::Los { lookahead, k_los, direction, u_r } => {
                let guide = self.guide.as_ref().expect("baseline guide");
                match guide.los(&LosParams { lookahead, k_los, direction }, pose, u_r) {
                    Ok(c) => StepControl::Ok(from_cmd(c.omega, c.delta, c.feedforward)),
                    Err(err) => failed(err),
                }
            }
            ControllerConfig::Ngl { radius, k_r, direction, .. } => {
                let guide = self.guide.as_ref().expect("baseline guide");
                match guide.ngl(&NglParams { radius, k_r, direction }, pose) {
                    Ok(c) => StepControl::Ok(from_cmd(c.omega, c.delta, c.feedforward)),
                    Err(err) => failed(err),
                }
            }
        }
    }

    fn run_inner(&self, pose0: &Pose, record: bool, mut sink: impl FnMut(TrajectorySample)) -> TerminationEvent {
        let dt = self.cfg.dt;
        let stop = &self.cfg.stop;
        let steps = (self.cfg.t_max / dt).round() as u64;
        let dwell_steps = (stop.dwell / dt - 1e-9).ceil() as u64;
        let u_r = self.controller.u_r();
        let is_gvf = matches!(self.controller, ControllerConfig::Gvf(_));

        let mut pose = Pose::new(pose0.x, pose0.y, pose0.alpha);
        let mut last_omega: Option<f64> = None;
        let mut converged_since: Option<u64> = None;
        let mut hint: Option<f64> = None;
        let event = |kind, t: f64, detail: String| TerminationEvent { kind, t_final: t, detail };

        for k in 0..=steps {
            let t = k as f64 * dt;
            let p = pose.position();
            let (control, infeasible) = match self.control(&pose) {
                StepControl::Ok(c) => (c, None),
                StepControl::Infeasible(c, msg) => (c, Some(msg)),
            };
            let needs_distance = record || control.e.abs() < stop.tol_e;
            let distance = if record {
                self.oracle.distance(&p)
            } else if needs_distance {
                self.oracle.distance_tracked(&p, &mut hint)
            } else {
                hint = None;
                f64::NAN
            };
            sink(TrajectorySample { t, pose, control, distance });

            if is_gvf {
                if let Some(c) = self.near_critical(&p) {
                    return event(
                        TerminationKind::ReachedCriticalSet,
                        t,
                        format!("within {} of critical point ({}, {})", stop.tol_c, c.x, c.y),
                    );
                }
                if !control.regular {
                    return event(TerminationKind::ReachedCriticalSet, t, format!("degenerate field at ({}, {})", p.x, p.y));
                }
            }
            if !stop.region.contains(&p) {
                return event(TerminationKind::LeftDomain, t, format!("left region at ({}, {})", p.x, p.y));
            }
            if let Some(msg) = infeasible {
                return event(TerminationKind::GuidanceInfeasible, t, msg);
            }
            let holds = control.e.abs() < stop.tol_e && distance < stop.tol_d;
            if holds {
                let since = *converged_since.get_or_insert(k);
                if stop.stop_on_convergence && k - since >= dwell_steps {
                    return event(
                        TerminationKind::ConvergedToPath,
                        t,
                        format!("|e| < {} and distance < {} for {} s", stop.tol_e, stop.tol_d, stop.dwell),
                    );
                }
            } else {
                converged_since = None;
            }
            if k == steps {
                if let Some(since) = converged_since {
                    if k - since >= dwell_steps {
                        return event(TerminationKind::ConvergedToPath, t, "converged; ran to t_max".into());
                    }
                }
                return event(TerminationKind::Timeout, t, format!("t_max = {} reached", self.cfg.t_max));
            }

            let omega = if control.regular {
                last_omega = Some(control.omega);
                control.omega
            } else {
                last_omega.unwrap_or(0.0)
            };
            pose = step_unicycle(&pose, u_r, omega, dt);
        }
        unreachable!("loop returns at k == steps")
    }

    /// Full time series.
    pub fn run(&self, pose0: &Pose) -> Trajectory {
        let mut samples = Vec::with_capacity((self.cfg.t_max / self.cfg.dt) as usize + 1);
        let termination = self.run_inner(pose0, true, |s| samples.push(s));
        Trajectory { dt: self.cfg.dt, samples, termination }
    }

    /// Termination only; distances are computed only where the convergence
    /// predicate needs them.
    pub fn run_outcome(&self, pose0: &Pose) -> RunOutcome {
        let mut last = None;
        let termination = self.run_inner(pose0, false, |s| last = Some(s));
        RunOutcome { termination, last: last.expect("at least one step") }
    }
}

/// Integrates the closed loop from `pose0` and records every step.
pub fn simulate(
    path: &Path,
    errmap: &ErrorMap,
    controller: &ControllerConfig,
    pose0: &Pose,
    cfg: &SimConfig,
) -> Result<Trajectory, SimError> {
    Ok(Simulator::new(path, *errmap, *controller, *cfg)?.run(pose0))
}

/// Which field an integral curve follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    /// `xi' = v(xi)`.
    Raw,
    /// `r' = u_r m_d(r)`.
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveLabel {
    Path,
    Critical,
    Escaped,
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralCurve {
    pub points: Vec<(f64, Vec2)>,
    pub label: CurveLabel,
}

/// Integral-curve tracer with precomputed critical points and distance oracle.
#[derive(Debug, Clone)]
pub struct Tracer<'a> {
    path: &'a Path,
    errmap: ErrorMap,
    params: GvfParams,
    stop: StopPolicy,
    critical: Vec<Vec2>,
    oracle: DistanceOracle,
}

impl<'a> Tracer<'a> {
    pub fn new(path: &'a Path, errmap: ErrorMap, params: GvfParams, stop: StopPolicy) -> Result<Self, SimError> {
        errmap.validate()?;
        params.validate()?;
        let critical = find_critical_points(path, &stop.region, AnalysisConfig::default().grid_n)
            .map(|roots| roots.into_iter().map(|r| r.location).collect())
            .unwrap_or_default();
        let oracle = DistanceOracle::new(path, &DistanceConfig { region: stop.region, ..DistanceConfig::default() })?;
        Ok(Self { path, errmap, params, stop, critical, oracle })
    }

    fn rhs(&self, mode: TraceMode, p: &Vec2) -> Option<Vec2> {
        let s = guiding_field(self.path, &self.errmap, &self.params, p);
        match mode {
            TraceMode::Raw => s.m_d.map(|_| s.v),
            TraceMode::Normalized => s.m_d.map(|m| m * self.params.u_r),
        }
    }

    fn is_critical(&self, p: &Vec2) -> bool {
        self.critical.iter().any(|c| (c - p).norm() < self.stop.tol_c)
            || guiding_field(self.path, &self.errmap, &self.params, p).m_d.is_none()
    }

    pub fn trace(&self, start: &Vec2, mode: TraceMode, dt: f64, t_max: f64) -> IntegralCurve {
        let steps = (t_max / dt).round() as u64;
        let dwell_steps = (self.stop.dwell / dt - 1e-9).ceil() as u64;
        let mut points = vec![(0.0, *start)];
        let mut p = *start;
        let mut converged_since: Option<u64> = None;
        let mut hint = None;
        for k in 0..=steps {
            let t = k as f64 * dt;
            if self.is_critical(&p) {
                return IntegralCurve { points, label: CurveLabel::Critical };
            }
            if !self.stop.region.contains(&p) {
                return IntegralCurve { points, label: CurveLabel::Escaped };
            }
            let e = self.errmap.psi(self.path.phi(&p));
            if e.abs() < self.stop.tol_e && self.oracle.distance_tracked(&p, &mut hint) < self.stop.tol_d {
                let since = *converged_since.get_or_insert(k);
                if k - since >= dwell_steps {
                    return IntegralCurve { points, label: CurveLabel::Path };
                }
            } else {
                converged_since = None;
                hint = None;
            }
            if k == steps {
                break;
            }
            let stages = (|| {
                let k1 = self.rhs(mode, &p)?;
                let k2 = self.rhs(mode, &(p + k1 * (0.5 * dt)))?;
                let k3 = self.rhs(mode, &(p + k2 * (0.5 * dt)))?;
                let k4 = self.rhs(mode, &(p + k3 * dt))?;
                Some((k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
            })();
            match stages {
                Some(dp) => p += dp,
                None => return IntegralCurve { points, label: CurveLabel::Critical },
            }
            points.push((t + dt, p));
        }
        IntegralCurve { points, label: CurveLabel::Timeout }
    }
}

/// RK4 integral curve of the raw or normalized field from `start`.
#[allow(clippy::too_many_arguments)]
pub fn trace_integral_curve(
    path: &Path,
    errmap: &ErrorMap,
    params: &GvfParams,
    start: &Vec2,
    mode: TraceMode,
    dt: f64,
    t_max: f64,
    stop: &StopPolicy,
) -> Result<IntegralCurve, SimError> {
    for (name, value) in [("dt", dt), ("t_max", t_max)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(SimError::InvalidSetting { name, value });
        }
    }
    Ok(Tracer::new(path, *errmap, *params, *stop)?.trace(start, mode, dt, t_max))
}

/// `V = e^2 / 2` along a sequence of timed positions.
pub fn lyapunov_series(path: &Path, errmap: &ErrorMap, points: &[(f64, Vec2)]) -> Vec<(f64, f64)> {
    points
        .iter()
        .map(|(t, p)| {
            let e = errmap.psi(path.phi(p));
            (*t, 0.5 * e * e)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_path, PathSpec};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn straight_step() {
        let p = step_unicycle(&Pose::new(0.0, 0.0, 0.0), 1.0, 0.0, 1.0);
        assert_eq!(p, Pose::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn zero_dt_is_identity() {
        let p0 = Pose::new(3.0, -2.0, 1.1);
        assert_eq!(step_unicycle(&p0, 50.0, 0.7, 0.0), p0);
    }

    #[test]
    fn constant_turn_half_circle() {
        let mut p = Pose::new(0.0, 0.0, 0.0);
        let h = PI / 100.0;
        for _ in 0..100 {
            p = step_unicycle(&p, 1.0, 1.0, h);
        }
        assert!(p.x.abs() < 1e-6 && (p.y - 2.0).abs() < 1e-6, "{p:?}");
        assert!((p.alpha.abs() - PI).abs() < 1e-9);
    }

    #[test]
    fn rk4_order_on_arc() {
        let end_error = |n: usize| {
            let h = 2.0 / n as f64;
            let mut p = Pose::new(0.0, 0.0, 0.0);
            for _ in 0..n {
                p = step_unicycle(&p, 1.0, 1.0, h);
            }
            ((p.x - 2f64.sin()).powi(2) + (p.y - (1.0 - 2f64.cos())).powi(2)).sqrt()
        };
        let (e1, e2) = (end_error(10), end_error(20));
        assert!(e1 / e2 >= 8.0, "ratio {}", e1 / e2);
        assert!((e1 / e2).log2() >= 3.9);
    }

    #[test]
    fn center_start_reaches_critical_set() {
        let path = make_path(PathSpec::reference_ellipse()).unwrap();
        let traj = simulate(&path, &ErrorMap::Identity, &ControllerConfig::Gvf(GvfParams::reference()),
            &Pose::new(600.0, 350.0, 0.0), &SimConfig::new(0.005, 10.0)).unwrap();
        assert_eq!(traj.termination.kind, TerminationKind::ReachedCriticalSet);
        assert_eq!(traj.termination.t_final, 0.0);
    }

    #[test]
    fn on_path_start_stays_on_path() {
        let path = make_path(PathSpec::reference_ellipse()).unwrap();
        let mut cfg = SimConfig::new(0.005, 40.0);
        cfg.stop.stop_on_convergence = false;
        // perimeter of the 400 x 200 ellipse is about 1933 Px, so 40 s at 50 Px/s covers it
        let traj = simulate(&path, &ErrorMap::Identity, &ControllerConfig::Gvf(GvfParams::reference()),
            &Pose::new(1000.0, 350.0, -FRAC_PI_2), &cfg).unwrap();
        assert_eq!(traj.termination.kind, TerminationKind::ConvergedToPath);
        let max_d = traj.samples.iter().map(|s| s.distance).fold(0.0, f64::max);
        assert!(max_d < 0.05, "{max_d}");
        let v = lyapunov_series(&path, &ErrorMap::Identity, &traj.positions());
        let max_v = v.iter().map(|(_, v)| *v).fold(0.0, f64::max);
        assert!(max_v < 1e-8, "{max_v}");
    }

    #[test]
    fn antipodal_start_is_handled() {
        let path = make_path(PathSpec::reference_ellipse()).unwrap();
        // field points down at the rightmost point; heading straight up gives delta = pi
        let traj = simulate(&path, &ErrorMap::Identity, &ControllerConfig::Gvf(GvfParams::reference()),
            &Pose::new(1000.0, 350.0, FRAC_PI_2), &SimConfig::new(0.005, 60.0)).unwrap();
        assert_eq!(traj.samples[0].control.delta, PI);
        assert!(traj.samples[1].control.delta < PI);
        assert_eq!(traj.termination.kind, TerminationKind::ConvergedToPath);
    }

    #[test]
    fn ellipse_first_initial_condition_converges() {
        let path = make_path(PathSpec::reference_ellipse()).unwrap();
        let traj = simulate(&path, &ErrorMap::Identity, &ControllerConfig::Gvf(GvfParams::reference()),
            &Pose::new(472.0, 311.0, 0.0768), &SimConfig::new(0.005, 120.0)).unwrap();
        assert_eq!(traj.termination.kind, TerminationKind::ConvergedToPath, "{:?}", traj.termination);
        assert!(traj.last().control.e.abs() < 0.01);
    }

    #[test]
    fn traces_follow_dichotomy() {
        let stop = StopPolicy::default();
        let params = GvfParams::reference();
        let ellipse = make_path(PathSpec::reference_ellipse()).unwrap();
        let c = trace_integral_curve(&ellipse, &ErrorMap::Identity, &params, &Vec2::new(650.0, 350.0),
            TraceMode::Normalized, 0.01, 600.0, &stop).unwrap();
        assert_eq!(c.label, CurveLabel::Path);
        let c = trace_integral_curve(&ellipse, &ErrorMap::Identity, &params, &Vec2::new(600.0, 350.0),
            TraceMode::Normalized, 0.01, 600.0, &stop).unwrap();
        assert_eq!(c.label, CurveLabel::Critical);
        assert_eq!(c.points.len(), 1);
        let cassini = make_path(PathSpec::reference_cassini()).unwrap();
        let c = trace_integral_curve(&cassini, &ErrorMap::Identity, &params, &Vec2::new(600.0, 351.0),
            TraceMode::Normalized, 0.01, 600.0, &stop).unwrap();
        assert_eq!(c.label, CurveLabel::Path);
    }

    #[test]
    fn rejects_bad_config() {
        let path = make_path(PathSpec::reference_ellipse()).unwrap();
        let ctl = ControllerConfig::Gvf(GvfParams::reference());
        assert!(simulate(&path, &ErrorMap::Identity, &ctl, &Pose::new(0.0, 0.0, 0.0), &SimConfig::new(0.0, 1.0)).is_err());
        assert!(simulate(&path, &ErrorMap::Identity, &ctl, &Pose::new(0.0, 0.0, 0.0), &SimConfig::new(0.01, -1.0)).is_err());
    }
}
