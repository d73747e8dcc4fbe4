//! Steering laws: the GVF controller and the LOS / NGL baselines.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{CurveIndex, ErrorMap, NearestPoint, ParametricCurve, Path};
use crate::geometry::{wrap_angle, Vec2};
use crate::gvf::{field_rate, heading_error_unchecked, GvfParams};
use crate::sim::Pose;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GuidanceError {
    #[error("path has no parametric form; baseline guidance needs one")]
    NoParametricForm,
    #[error("projection onto the path is not unique: two nearest points at distance {distance}")]
    AmbiguousProjection { distance: f64 },
    #[error("circle of radius {radius} around the robot does not reach the path (distance {distance})")]
    Infeasible { radius: f64, distance: f64 },
    #[error("invalid guidance parameter `{name}` = {value}: must be finite and > 0")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// Per-step controller output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSample {
    /// Commanded turn rate.
    pub omega: f64,
    /// Heading error against the controller's desired direction.
    pub delta: f64,
    /// Feedforward turn rate (`omega_d` for GVF, `c(P) u_r` for LOS, 0 for NGL).
    pub omega_d: f64,
    pub e: f64,
    pub regular: bool,
}

/// `omega_d - k_delta * delta`.
pub fn steering_law(omega_d: f64, delta: f64, k_delta: f64) -> f64 {
    omega_d - k_delta * delta
}

/// GVF steering `omega = omega_d - k_delta delta`.
///
/// At degenerate points `regular` is false, `delta` and `omega_d` are NaN
/// and `omega` is 0; the simulator decides what to hold.
pub fn gvf_control(path: &Path, errmap: &ErrorMap, params: &GvfParams, pose: &Pose) -> ControlSample {
    let p = pose.position();
    match field_rate(path, errmap, params, &p, pose.alpha) {
        Ok(rate) => {
            let delta = heading_error_unchecked(&rate.m_d, pose.alpha);
            ControlSample {
                omega: steering_law(rate.omega_d, delta, params.k_delta),
                delta,
                omega_d: rate.omega_d,
                e: rate.sample.e,
                regular: true,
            }
        }
        Err(_) => {
            let e = errmap.psi(path.phi(&p));
            ControlSample { omega: 0.0, delta: f64::NAN, omega_d: f64::NAN, e, regular: false }
        }
    }
}

/// Traversal direction relative to the parametric form (which follows the
/// GVF circulation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Forward,
    Reverse,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Reverse => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosParams {
    /// Lookahead distance along the tangent at the projection.
    pub lookahead: f64,
    pub k_los: f64,
    #[serde(default)]
    pub direction: Direction,
}

impl LosParams {
    /// `k_LOS = 2`, `Delta = 70`.
    pub fn reference() -> Self {
        Self { lookahead: 70.0, k_los: 2.0, direction: Direction::Forward }
    }

    pub fn validate(&self) -> Result<(), GuidanceError> {
        check_positive("lookahead", self.lookahead)?;
        check_positive("k_los", self.k_los)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NglParams {
    pub radius: f64,
    pub k_r: f64,
    #[serde(default)]
    pub direction: Direction,
}

impl NglParams {
    /// `k_R = 2`, `R = 40`.
    pub fn reference() -> Self {
        Self { radius: 40.0, k_r: 2.0, direction: Direction::Forward }
    }

    pub fn validate(&self) -> Result<(), GuidanceError> {
        check_positive("radius", self.radius)?;
        check_positive("k_r", self.k_r)
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), GuidanceError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(GuidanceError::InvalidParameter { name, value })
    }
}

/// Nearest point on the path with local geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub s: f64,
    pub point: Vec2,
    pub distance: f64,
    /// Signed curvature in the parametric orientation.
    pub curvature: f64,
    /// Unit tangent in the parametric orientation.
    pub tangent: Vec2,
}

/// Seeds, refinement and scan settings for the baselines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub projection_seeds: usize,
    pub projection_tol: f64,
    /// Two minima closer than this in distance make the projection ambiguous.
    pub ambiguity_tol: f64,
    pub intersection_samples: usize,
    pub intersection_tol: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            projection_seeds: 1024,
            projection_tol: 1e-8,
            ambiguity_tol: 1e-6,
            intersection_samples: 4096,
            intersection_tol: 1e-14,
        }
    }
}

/// Projection and intersection machinery over one parametric curve; build
/// once per path and reuse across steps.
#[derive(Debug, Clone)]
pub struct PathGuide {
    index: CurveIndex,
    scan: Vec<(f64, Vec2)>,
    cfg: BaselineConfig,
}

impl PathGuide {
    pub fn new(path: &Path, cfg: BaselineConfig) -> Result<Self, GuidanceError> {
        let curve = path.parametric().ok_or(GuidanceError::NoParametricForm)?;
        // refine well below the requested parameter tolerance; the bracket
        // search is cheap
        let index = CurveIndex::new(curve, cfg.projection_seeds, cfg.projection_tol * 1e-4);
        let scan = curve.sample(cfg.intersection_samples);
        Ok(Self { index, scan, cfg })
    }

    pub fn curve(&self) -> &ParametricCurve {
        self.index.curve()
    }

    pub fn project(&self, point: &Vec2) -> Result<Projection, GuidanceError> {
        let minima = self.index.local_minima(point);
        let best: NearestPoint = minima[0];
        let scale = 1.0 + best.point.norm();
        if let Some(other) = minima[1..]
            .iter()
            .find(|m| (m.point - best.point).norm() > 1e-6 * scale)
        {
            if other.distance - best.distance < self.cfg.ambiguity_tol {
                return Err(GuidanceError::AmbiguousProjection { distance: best.distance });
            }
        }
        let curve = self.curve();
        Ok(Projection {
            s: best.s,
            point: best.point,
            distance: best.distance,
            curvature: curve.curvature(best.s),
            tangent: curve.unit_tangent(best.s),
        })
    }

    /// Parameters where the circle of `radius` around `center` meets the path.
    pub fn circle_intersections(&self, center: &Vec2, radius: f64) -> Vec<f64> {
        let curve = self.curve();
        let g = |s: f64| (curve.point(s) - center).norm() - radius;
        let n = self.scan.len();
        let closed = curve.is_closed();
        let values: Vec<f64> = self.scan.iter().map(|(_, p)| (p - center).norm() - radius).collect();
        let mut roots = Vec::new();
        let pairs = if closed { n } else { n - 1 };
        for i in 0..pairs {
            let j = (i + 1) % n;
            let (a, b) = (self.scan[i].0, if j == 0 { 1.0 } else { self.scan[j].0 });
            let (fa, fb) = (values[i], values[j]);
            if fa == 0.0 {
                roots.push(a);
                continue;
            }
            if (fa < 0.0) == (fb < 0.0) || fb == 0.0 {
                continue;
            }
            roots.push(curve.normalize_param(bisect(&g, a, b, fa, self.cfg.intersection_tol)));
        }
        if !closed && values[n - 1] == 0.0 {
            roots.push(1.0);
        }
        roots
    }

    /// First parameter after `from` in `direction` where the path leaves
    /// the circle of `radius` around `center`; `from` must lie inside it.
    ///
    /// Marches in arc-length steps of `radius / 8` and bisects the first
    /// sign change, which is the forward-nearest of all intersections.
    pub fn first_exit(&self, center: &Vec2, radius: f64, from: f64, direction: Direction) -> Option<f64> {
        let curve = self.curve();
        let g = |s: f64| (curve.point(s) - center).norm() - radius;
        let sign = direction.sign();
        let closed = curve.is_closed();
        let mut a = from;
        let mut fa = g(a);
        let mut travelled = 0.0;
        while travelled < 1.0 {
            let speed = curve.jet(a).d1.norm();
            let ds = (radius / 8.0 / speed).min(1.0 / 64.0);
            let b = a + sign * ds;
            if !closed && !(0.0..=1.0).contains(&b) {
                return None;
            }
            let fb = g(b);
            if fb >= 0.0 {
                let (lo, hi, flo) = if sign > 0.0 { (a, b, fa) } else { (b, a, fb) };
                let root = bisect(&g, lo, hi, flo, 0.0);
                return Some(if closed { curve.normalize_param(root) } else { root });
            }
            a = b;
            fa = fb;
            travelled += ds;
        }
        None
    }

    /// Parameter offset from `from` to `to` in the traversal direction,
    /// wrapped into `[0, 1)` for closed curves.
    pub fn forward_offset(&self, from: f64, to: f64, direction: Direction) -> f64 {
        let raw = (to - from) * direction.sign();
        if self.curve().is_closed() { raw.rem_euclid(1.0) } else { raw }
    }

    /// The LOS turn-rate command and its target bearing.
    pub fn los(&self, params: &LosParams, pose: &Pose, u_r: f64) -> Result<BaselineCommand, GuidanceError> {
        let p = pose.position();
        let proj = self.project(&p)?;
        let sign = params.direction.sign();
        let target = proj.point + proj.tangent * (sign * params.lookahead);
        let d = target - p;
        let bearing = d.y.atan2(d.x);
        let feedforward = sign * proj.curvature * u_r;
        let delta = wrap_angle(pose.alpha - bearing);
        Ok(BaselineCommand { omega: feedforward - params.k_los * delta, delta, feedforward, target })
    }

    /// The NGL turn-rate command and its target bearing.
    pub fn ngl(&self, params: &NglParams, pose: &Pose) -> Result<BaselineCommand, GuidanceError> {
        let p = pose.position();
        let proj = self.project(&p)?;
        let infeasible = GuidanceError::Infeasible { radius: params.radius, distance: proj.distance };
        if proj.distance >= params.radius {
            return Err(infeasible);
        }
        let ahead = self.first_exit(&p, params.radius, proj.s, params.direction).ok_or(infeasible)?;
        let target = self.curve().point(ahead);
        let d = target - p;
        let bearing = d.y.atan2(d.x);
        let delta = wrap_angle(pose.alpha - bearing);
        Ok(BaselineCommand { omega: -params.k_r * delta, delta, feedforward: 0.0, target })
    }
}

/// Root of `g` in `[a, b]` given a sign change, halving until the bracket is
/// below `tol` or stops shrinking in floating point.
fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= tol || m <= a || m >= b {
            break;
        }
        let fm = g(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Output of a baseline law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineCommand {
    pub omega: f64,
    /// `wrap(alpha - target bearing)`.
    pub delta: f64,
    pub feedforward: f64,
    pub target: Vec2,
}

/// Nearest point on a built-in path, with its curvature and tangent.
pub fn project_to_path(path: &Path, point: &Vec2) -> Result<Projection, GuidanceError> {
    PathGuide::new(path, BaselineConfig::default())?.project(point)
}

/// `omega = c(P) u_r - k_LOS wrap(alpha - alpha_LOS)`, with `c(P)` signed
/// for the chosen traversal direction.
pub fn los_control(path: &Path, params: &LosParams, pose: &Pose, u_r: f64) -> Result<f64, GuidanceError> {
    params.validate()?;
    Ok(PathGuide::new(path, BaselineConfig::default())?.los(params, pose, u_r)?.omega)
}

/// `omega = -k_R wrap(alpha - alpha_R)` toward the circle-path intersection
/// lying ahead of the projection.
pub fn ngl_control(path: &Path, params: &NglParams, pose: &Pose) -> Result<f64, GuidanceError> {
    params.validate()?;
    Ok(PathGuide::new(path, BaselineConfig::default())?.ngl(params, pose)?.omega)
}
