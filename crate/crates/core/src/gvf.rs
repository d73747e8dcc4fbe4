//! The guiding vector field, its rotation rate along the robot's motion and
//! the heading error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{ErrorMap, Path};
use crate::geometry::{apply_e, heading, Mat2, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GvfError {
    #[error("guiding field is degenerate at ({x}, {y}): |grad phi| = {norm:e}")]
    Degenerate { x: f64, y: f64, norm: f64 },
    #[error("desired direction is not a unit vector (|m_d| = {0})")]
    NonUnitDirection(f64),
    #[error("invalid gain `{name}` = {value}: must be finite and > 0")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// Gains and speed of the GVF controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GvfParams {
    /// Weight of the normal component in `v = tau - k_n e n`.
    pub k_n: f64,
    /// Heading-error gain in `omega = omega_d - k_delta delta`.
    pub k_delta: f64,
    /// Forward speed (Px/s).
    pub u_r: f64,
    /// `|n|` at or below this counts as a critical point.
    #[serde(default = "GvfParams::default_degeneracy_eps")]
    pub degeneracy_eps: f64,
}

impl GvfParams {
    pub const DEFAULT_DEGENERACY_EPS: f64 = 1e-9;

    fn default_degeneracy_eps() -> f64 {
        Self::DEFAULT_DEGENERACY_EPS
    }

    pub fn new(k_n: f64, k_delta: f64, u_r: f64) -> Self {
        Self { k_n, k_delta, u_r, degeneracy_eps: Self::DEFAULT_DEGENERACY_EPS }
    }

    /// `u_r = 50`, `k_n = 3`, `k_delta = 2`, as in the robot experiments.
    pub fn reference() -> Self {
        Self::new(3.0, 2.0, 50.0)
    }

    pub fn validate(&self) -> Result<(), GvfError> {
        for (name, value) in [
            ("k_n", self.k_n),
            ("k_delta", self.k_delta),
            ("u_r", self.u_r),
            ("degeneracy_eps", self.degeneracy_eps),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(GvfError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }
}

/// Every field quantity at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GvfSample {
    pub phi: f64,
    pub e: f64,
    pub psi_prime: f64,
    /// `n = grad phi`.
    pub n: Vec2,
    /// `tau = E n`.
    pub tau: Vec2,
    /// `v = tau - k_n e n`.
    pub v: Vec2,
    pub hess: Mat2,
    /// `v / |v|`, `None` at degenerate points.
    pub m_d: Option<Vec2>,
}

impl GvfSample {
    pub fn is_regular(&self) -> bool {
        self.m_d.is_some()
    }
}

/// Evaluates the guiding field at `point`.
pub fn guiding_field(path: &Path, errmap: &ErrorMap, params: &GvfParams, point: &Vec2) -> GvfSample {
    let s = path.eval(point);
    let (e, psi_prime) = errmap.eval(s.phi);
    let n = s.grad;
    let tau = apply_e(&n);
    let v = tau - n * (params.k_n * e);
    let m_d = if n.norm() > params.degeneracy_eps { Some(v / v.norm()) } else { None };
    GvfSample { phi: s.phi, e, psi_prime, n, tau, v, hess: s.hess, m_d }
}

/// Field sample plus its time derivative along a unicycle moving with
/// heading `alpha` at speed `u_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldRate {
    pub sample: GvfSample,
    pub m_d: Vec2,
    pub e_dot: f64,
    pub v_dot: Vec2,
    pub m_d_dot: Vec2,
    pub omega_d: f64,
}

/// Full chain `e_dot -> v_dot -> m_d_dot -> omega_d` with the analytic Hessian.
pub fn field_rate(
    path: &Path,
    errmap: &ErrorMap,
    params: &GvfParams,
    point: &Vec2,
    alpha: f64,
) -> Result<FieldRate, GvfError> {
    let sample = guiding_field(path, errmap, params, point);
    let m_d = sample
        .m_d
        .ok_or(GvfError::Degenerate { x: point.x, y: point.y, norm: sample.n.norm() })?;
    let m = heading(alpha);
    let k_n = params.k_n;
    let e_dot = params.u_r * sample.psi_prime * sample.n.dot(&m);
    let hm = sample.hess * m;
    let v_dot = (apply_e(&hm) - hm * (k_n * sample.e)) * params.u_r - sample.n * (k_n * e_dot);
    let vn = sample.v.norm();
    let m_d_dot = v_dot / vn - sample.v * (sample.v.dot(&v_dot) / (vn * vn * vn));
    let omega_d = -m_d_dot.dot(&apply_e(&m_d));
    Ok(FieldRate { sample, m_d, e_dot, v_dot, m_d_dot, omega_d })
}

/// Rotation rate `omega_d` of the guiding field seen from a robot at `pose`.
pub fn rotation_rate(
    path: &Path,
    errmap: &ErrorMap,
    params: &GvfParams,
    position: &Vec2,
    alpha: f64,
) -> Result<f64, GvfError> {
    field_rate(path, errmap, params, position, alpha).map(|r| r.omega_d)
}

/// Directed angle `delta` in `(-pi, pi]` with
/// `m(alpha) = cos(delta) m_d - sin(delta) E m_d`.
pub fn heading_error(m_d: &Vec2, alpha: f64) -> Result<f64, GvfError> {
    let norm = m_d.norm();
    if !((norm - 1.0).abs() <= 1e-9) {
        return Err(GvfError::NonUnitDirection(norm));
    }
    Ok(heading_error_unchecked(m_d, alpha))
}

pub(crate) fn heading_error_unchecked(m_d: &Vec2, alpha: f64) -> f64 {
    let m = heading(alpha);
    let delta = (-m.dot(&apply_e(m_d))).atan2(m.dot(m_d));
    if delta <= -std::f64::consts::PI { std::f64::consts::PI } else { delta }
}

/// Heading `alpha` whose heading error against `m_d` equals `delta`.
pub fn heading_with_error(m_d: &Vec2, delta: f64) -> f64 {
    let (s, c) = delta.sin_cos();
    let m = m_d * c - apply_e(m_d) * s;
    m.y.atan2(m.x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_path, PathSpec};
    use crate::geometry::Region;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn ellipse() -> Path {
        make_path(PathSpec::reference_ellipse()).unwrap()
    }

    fn unit_circle() -> Path {
        make_path(PathSpec::Circle { x0: 0.0, y0: 0.0, radius: 1.0 }).unwrap()
    }

    #[test]
    fn ellipse_rightmost_point() {
        let s = guiding_field(&ellipse(), &ErrorMap::Identity, &GvfParams::reference(), &Vec2::new(1000.0, 350.0));
        assert!((s.n - Vec2::new(0.008, 0.0)).norm() < 1e-15);
        assert!((s.tau - Vec2::new(0.0, -0.008)).norm() < 1e-15);
        assert!(s.e.abs() < 1e-12);
        assert!((s.v - Vec2::new(0.0, -0.008)).norm() < 1e-12);
        assert!((s.m_d.unwrap() - Vec2::new(0.0, -1.0)).norm() < 1e-9);
    }

    #[test]
    fn unit_circle_outside_point() {
        let params = GvfParams::new(1.0, 1.0, 1.0);
        let s = guiding_field(&unit_circle(), &ErrorMap::Identity, &params, &Vec2::new(2.0, 0.0));
        assert_eq!(s.e, 3.0);
        assert_eq!(s.n, Vec2::new(4.0, 0.0));
        assert_eq!(s.tau, Vec2::new(0.0, -4.0));
        assert_eq!(s.v, Vec2::new(-12.0, -4.0));
        assert!((s.v.norm() - 4.0 * 10f64.sqrt()).abs() < 1e-12);
        assert!((s.v.norm_squared() - (1.0 + 9.0) * 16.0).abs() < 1e-12);
    }

    #[test]
    fn ellipse_center_is_degenerate() {
        let s = guiding_field(&ellipse(), &ErrorMap::Identity, &GvfParams::reference(), &Vec2::new(600.0, 350.0));
        assert!(!s.is_regular());
        assert!(matches!(
            rotation_rate(&ellipse(), &ErrorMap::Identity, &GvfParams::reference(), &Vec2::new(600.0, 350.0), 0.0),
            Err(GvfError::Degenerate { .. })
        ));
    }

    #[test]
    fn line_rotation_rate_is_zero() {
        let path = make_path(PathSpec::Line { a: 0.0, b: 1.0, c: 0.0 }).unwrap();
        for u_r in [1.0, 50.0] {
            let params = GvfParams::new(3.0, 2.0, u_r);
            let w = rotation_rate(&path, &ErrorMap::Identity, &params, &Vec2::new(5.0, 0.0), 0.0).unwrap();
            assert_eq!(w, 0.0);
        }
    }

    #[test]
    fn unit_circle_rotation_rate_is_clockwise_unit() {
        let params = GvfParams::new(1.0, 1.0, 1.0);
        let w = rotation_rate(&unit_circle(), &ErrorMap::Identity, &params, &Vec2::new(1.0, 0.0), -FRAC_PI_2).unwrap();
        assert!((w + 1.0).abs() < 1e-12, "{w}");
    }

    fn bearing(path: &Path, params: &GvfParams, p: &Vec2) -> f64 {
        let m = guiding_field(path, &ErrorMap::Identity, params, p).m_d.unwrap();
        m.y.atan2(m.x)
    }

    #[test]
    fn rotation_rate_matches_finite_difference_of_bearing() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let params = GvfParams::reference();
        let region = Region::workspace();
        for path in [ellipse(), make_path(PathSpec::reference_cassini()).unwrap()] {
            let mut checked = 0;
            while checked < 200 {
                let p = Vec2::new(rng.random_range(region.x_min..region.x_max), rng.random_range(region.y_min..region.y_max));
                let alpha = rng.random_range(-PI..PI);
                let Ok(w) = rotation_rate(&path, &ErrorMap::Identity, &params, &p, alpha) else { continue };
                let h = 1e-6;
                let step = heading(alpha) * (params.u_r * h);
                let fd = crate::geometry::wrap_angle(bearing(&path, &params, &(p + step)) - bearing(&path, &params, &(p - step))) / (2.0 * h);
                assert!((w - fd).abs() < 1e-5 * (1.0 + w.abs()), "{p} {alpha}: {w} vs {fd}");
                checked += 1;
            }
        }
    }

    #[test]
    fn heading_error_examples() {
        let down = Vec2::new(0.0, -1.0);
        assert!(heading_error(&down, -FRAC_PI_2).unwrap().abs() < 1e-15);
        assert!((heading_error(&down, 0.0).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(heading_error(&Vec2::new(1.0, 0.0), PI).unwrap(), PI);
        assert_eq!(heading_error(&Vec2::new(-1.0, 0.0), 0.0).unwrap(), PI);
        assert!(heading_error(&Vec2::new(2.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn heading_error_round_trip() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for _ in 0..10_000 {
            let theta: f64 = rng.random_range(-PI..PI);
            let m_d = Vec2::new(theta.cos(), theta.sin());
            let alpha = rng.random_range(-4.0..4.0);
            let delta = heading_error(&m_d, alpha).unwrap();
            assert!(delta > -PI && delta <= PI);
            let (s, c) = delta.sin_cos();
            let m = m_d * c - apply_e(&m_d) * s;
            assert!((m - heading(alpha)).norm() < 1e-12);
        }
    }

    #[test]
    fn field_identities_at_random_points() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        let region = Region::padded_workspace();
        let params = GvfParams::reference();
        for path in [ellipse(), make_path(PathSpec::reference_cassini()).unwrap()] {
            for map in [ErrorMap::Identity, ErrorMap::ArctanPower { p: 2.0 }] {
                for _ in 0..2000 {
                    let p = Vec2::new(rng.random_range(region.x_min..region.x_max), rng.random_range(region.y_min..region.y_max));
                    let s = guiding_field(&path, &map, &params, &p);
                    let n2 = s.n.norm_squared();
                    assert!(s.tau.dot(&s.n).abs() <= 1e-15 * n2);
                    assert!((s.v.dot(&s.n) + params.k_n * s.e * n2).abs() <= 1e-10 * (params.k_n * s.e.abs() * n2).max(n2));
                    assert!((s.v.dot(&s.tau) - n2).abs() <= 1e-10 * n2);
                    let expect = (1.0 + params.k_n.powi(2) * s.e * s.e) * n2;
                    assert!((s.v.norm_squared() - expect).abs() <= 1e-12 * expect);
                    if let Some(m) = s.m_d {
                        assert!((m.norm() - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn on_path_field_is_tangent() {
        let params = GvfParams::reference();
        for spec in [PathSpec::reference_ellipse(), PathSpec::reference_cassini()] {
            let path = make_path(spec).unwrap();
            let c = path.parametric().unwrap();
            for i in 0..256 {
                let j = c.jet(i as f64 / 256.0);
                let s = guiding_field(&path, &ErrorMap::Identity, &params, &j.point);
                let t = j.d1.normalize();
                assert!((s.m_d.unwrap() - t).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn rejects_bad_gains() {
        assert!(GvfParams::new(0.0, 2.0, 50.0).validate().is_err());
        assert!(GvfParams::new(3.0, -1.0, 50.0).validate().is_err());
        assert!(GvfParams::reference().validate().is_ok());
    }
}
