//! Implicit paths `phi(x, y) = 0`, their derivatives, and the tracking error.

mod distance;
mod error_map;
mod parametric;
mod path;

use thiserror::Error;

pub use distance::{distance_to_path, DistanceConfig, DistanceOracle};
pub use error_map::ErrorMap;
pub use parametric::{CurveIndex, CurveJet, NearestPoint, ParametricCurve};
pub use path::{eval_path, make_path, FieldSample, Path, PathSpec, PolyTerm};

use crate::geometry::{Region, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("invalid path parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("zero contour not found inside {region:?}")]
    ContourNotFound { region: Region },
}

/// `(e, psi'(phi))` for a raw path value.
pub fn eval_error(errmap: &ErrorMap, phi: f64) -> (f64, f64) {
    errmap.eval(phi)
}

/// Largest `|analytic - central difference| / (1 + |analytic|)` over the
/// gradient and Hessian components at `point`.
///
/// The step along both axes is `h * (1 + |point|)`. The gradient is
/// checked against first differences of `phi` and the Hessian against
/// second differences of `phi`, so the analytic derivatives are never used
/// to build the reference.
pub fn check_derivatives(path: &Path, point: &Vec2, h: f64) -> f64 {
    let s = path.eval(point);
    let hx = h * (1.0 + point.norm());
    let hy = hx;
    let f = |dx: f64, dy: f64| path.phi(&Vec2::new(point.x + dx, point.y + dy));
    let f0 = f(0.0, 0.0);
    let gx = (f(hx, 0.0) - f(-hx, 0.0)) / (2.0 * hx);
    let gy = (f(0.0, hy) - f(0.0, -hy)) / (2.0 * hy);
    let hxx = (f(hx, 0.0) - 2.0 * f0 + f(-hx, 0.0)) / (hx * hx);
    let hyy = (f(0.0, hy) - 2.0 * f0 + f(0.0, -hy)) / (hy * hy);
    let hxy = (f(hx, hy) - f(hx, -hy) - f(-hx, hy) + f(-hx, -hy)) / (4.0 * hx * hy);
    let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs());
    [
        rel(s.grad.x, gx),
        rel(s.grad.y, gy),
        rel(s.hess[(0, 0)], hxx),
        rel(s.hess[(1, 1)], hyy),
        rel(s.hess[(0, 1)], hxy),
        rel(s.hess[(1, 0)], hxy),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn derivative_check_examples() {
        let ellipse = make_path(PathSpec::reference_ellipse()).unwrap();
        assert!(check_derivatives(&ellipse, &Vec2::new(472.0, 311.0), 1e-4) < 1e-5);
        let cassini = make_path(PathSpec::reference_cassini()).unwrap();
        assert!(check_derivatives(&cassini, &Vec2::new(106.0, 202.0), 1e-3) < 1e-4);
        let line = make_path(PathSpec::Line { a: 0.0, b: 1.0, c: 0.0 }).unwrap();
        for h in [1e-6, 1e-3, 0.5] {
            assert!(check_derivatives(&line, &Vec2::new(12.0, -7.0), h) < 1e-9);
        }
    }

    #[test]
    fn derivative_check_random_points() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let region = Region::padded_workspace();
        for spec in [
            PathSpec::reference_ellipse(),
            PathSpec::reference_cassini(),
            PathSpec::Circle { x0: 0.0, y0: 0.0, radius: 1.0 },
            PathSpec::Line { a: 0.2, b: 0.9, c: -3.0 },
        ] {
            let path = make_path(spec).unwrap();
            for _ in 0..1000 {
                let p = Vec2::new(
                    rng.random_range(region.x_min..region.x_max),
                    rng.random_range(region.y_min..region.y_max),
                );
                let err = check_derivatives(&path, &p, 1e-4);
                assert!(err < 1e-4, "{} at {p}: {err}", path.spec().kind_name());
            }
        }
    }

    #[test]
    fn assumption_one_spot_check() {
        // |e| stays away from zero on points at least kappa from the path
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let region = Region::workspace();
        let maps = [ErrorMap::Identity, ErrorMap::ArctanPower { p: 1.0 }];
        for spec in [PathSpec::reference_ellipse(), PathSpec::reference_cassini()] {
            let path = make_path(spec).unwrap();
            let oracle = DistanceOracle::new(&path, &DistanceConfig::default()).unwrap();
            for kappa in [10.0, 50.0, 200.0] {
                for map in maps {
                    let mut min_e = f64::INFINITY;
                    for _ in 0..10_000 {
                        let p = Vec2::new(
                            rng.random_range(region.x_min..region.x_max),
                            rng.random_range(region.y_min..region.y_max),
                        );
                        if oracle.distance(&p) >= kappa {
                            min_e = min_e.min(map.psi(path.phi(&p)).abs());
                        }
                    }
                    assert!(min_e > 0.0 && min_e.is_finite(), "kappa {kappa}: {min_e}");
                }
            }
        }
    }
}
