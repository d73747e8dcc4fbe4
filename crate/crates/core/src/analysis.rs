//! Critical points of the field, the invariant set around the path and
//! viability bounds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{ErrorMap, Path};
use crate::geometry::{rot_e, sym_eigenvalues, Mat2, Region, Vec2};
use crate::gvf::{guiding_field, heading_error_unchecked, GvfParams};
use crate::sim::Pose;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("seed grid must be at least 16 per side, got {0}")]
    GridTooCoarse(usize),
    #[error("({x}, {y}) is not a critical point: |grad phi| = {grad_norm:e}")]
    NotCritical { x: f64, y: f64, grad_norm: f64 },
    #[error("|e(pose0)| = {e} is not below e_c = {e_c}")]
    OutsideErrorBand { e: f64, e_c: f64 },
    #[error("initial pose ({x}, {y}) is at a critical point")]
    DegenerateStart { x: f64, y: f64 },
    #[error("invalid region {0:?}")]
    InvalidRegion(Region),
}

/// Search settings for [`find_critical_points`] and raster resolution for
/// numeric viability distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub region: Region,
    pub grid_n: usize,
    pub raster_cells: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { region: Region::padded_workspace(), grid_n: 64, raster_cells: 400 }
    }
}

pub const MERGE_RADIUS: f64 = 1e-6;
const NEWTON_MAX_ITER: usize = 100;

/// A converged Newton root of `grad phi = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalRoot {
    pub location: Vec2,
    /// The Hessian is numerically singular there, so the root cannot be
    /// classified.
    pub singular: bool,
}

/// Condition-number test: the smaller Hessian eigenvalue is below `1e-4`
/// of the larger in magnitude.
fn hessian_is_singular(h: &Mat2) -> bool {
    let [a, b] = sym_eigenvalues(h);
    let (lo, hi) = (a.abs().min(b.abs()), a.abs().max(b.abs()));
    hi == 0.0 || lo <= 1e-4 * hi
}

fn newton_root(path: &Path, seed: Vec2, region: &Region) -> Option<CriticalRoot> {
    let mut x = seed;
    for _ in 0..NEWTON_MAX_ITER {
        let s = path.eval(&x);
        if s.grad.norm() < 1e-12 {
            return Some(CriticalRoot { location: x, singular: hessian_is_singular(&s.hess) });
        }
        let step = s.hess.lu().solve(&s.grad)?;
        if !step.iter().all(|v| v.is_finite()) {
            return None;
        }
        x -= step;
        if !x.iter().all(|v| v.is_finite()) || !region.scaled(1.5).contains(&x) {
            return None;
        }
        if step.norm() <= 1e-13 * (1.0 + x.norm()) {
            // stalled at roundoff: accept only if the gradient is small
            // relative to what the Hessian can resolve at this magnitude
            let s = path.eval(&x);
            let resolvable = s.hess.abs().max() * 1e-12 * (1.0 + x.norm());
            return (s.grad.norm() <= resolvable.max(1e-12))
                .then(|| CriticalRoot { location: x, singular: hessian_is_singular(&s.hess) });
        }
    }
    None
}

/// Critical points of `phi` inside `region` by Newton iteration from a
/// `grid_n x grid_n` seed grid, merged within [`MERGE_RADIUS`] and sorted
/// by `(x, y)`.
pub fn find_critical_points(path: &Path, region: &Region, grid_n: usize) -> Result<Vec<CriticalRoot>, AnalysisError> {
    if grid_n < 16 {
        return Err(AnalysisError::GridTooCoarse(grid_n));
    }
    if !region.is_valid() {
        return Err(AnalysisError::InvalidRegion(*region));
    }
    let mut roots: Vec<CriticalRoot> = Vec::new();
    for seed in region.nodes(grid_n, grid_n) {
        let Some(root) = newton_root(path, seed, region) else { continue };
        if !region.contains(&root.location) {
            continue;
        }
        if roots.iter().all(|r| (r.location - root.location).norm() > MERGE_RADIUS) {
            roots.push(root);
        }
    }
    roots.sort_by(|a, b| {
        a.location.x.total_cmp(&b.location.x).then(a.location.y.total_cmp(&b.location.y))
    });
    Ok(roots)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// `e H` negative definite: both linearization eigenvalues unstable.
    Repulsive,
    /// `e H` indefinite: only a zero-measure set of curves reaches it.
    SaddleZeroMeasure,
    /// Anything else; the point may attract trajectories.
    PotentialTrap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub location: Vec2,
    pub e_value: f64,
    /// Ascending eigenvalues of the Hessian of `phi`.
    pub hessian_eigs: [f64; 2],
    /// Ascending eigenvalues of `e H`.
    pub scaled_hessian_eigs: [f64; 2],
    pub classification: Classification,
    /// Trace and determinant of the linearization `J = (E - k_n e I) H`.
    pub trace_j: f64,
    pub det_j: f64,
}

impl CriticalPoint {
    /// `Repulsive => tr J > 0 and det J > 0`, `SaddleZeroMeasure => det J < 0`.
    pub fn sign_relations_hold(&self) -> bool {
        match self.classification {
            Classification::Repulsive => self.trace_j > 0.0 && self.det_j > 0.0,
            Classification::SaddleZeroMeasure => self.det_j < 0.0,
            Classification::PotentialTrap => true,
        }
    }
}

/// Linearization of `xi' = v(xi)` at a critical point.
pub fn linearization(hess: &Mat2, e: f64, k_n: f64) -> Mat2 {
    (rot_e() - Mat2::identity() * (k_n * e)) * hess
}

pub fn classify_critical_point(
    path: &Path,
    errmap: &ErrorMap,
    k_n: f64,
    location: &Vec2,
) -> Result<CriticalPoint, AnalysisError> {
    let s = path.eval(location);
    let grad_norm = s.grad.norm();
    if !(grad_norm < 1e-9) {
        return Err(AnalysisError::NotCritical { x: location.x, y: location.y, grad_norm });
    }
    let e = errmap.psi(s.phi);
    let hessian_eigs = sym_eigenvalues(&s.hess);
    let scaled_hessian_eigs = sym_eigenvalues(&(s.hess * e));
    let negatives = scaled_hessian_eigs.iter().filter(|l| **l < 0.0).count();
    let classification = match negatives {
        2 => Classification::Repulsive,
        1 => Classification::SaddleZeroMeasure,
        _ => Classification::PotentialTrap,
    };
    let j = linearization(&s.hess, e, k_n);
    Ok(CriticalPoint {
        location: *location,
        e_value: e,
        hessian_eigs,
        scaled_hessian_eigs,
        classification,
        trace_j: j.trace(),
        det_j: j.determinant(),
    })
}

/// `min |e|` over the critical points; `+inf` when there are none.
pub fn critical_error_threshold(path: &Path, errmap: &ErrorMap, critical: &[Vec2]) -> f64 {
    critical.iter().map(|c| errmap.psi(path.phi(c)).abs()).fold(f64::INFINITY, f64::min)
}

/// Half-width of the heading band of the invariant set.
pub fn heading_band(k_n: f64, e_c: f64) -> f64 {
    (k_n * e_c).atan()
}

/// Membership in `{regular, |delta| < atan(k_n e_c), |e| < e_c}`.
pub fn in_invariant_set(path: &Path, errmap: &ErrorMap, params: &GvfParams, e_c: f64, pose: &Pose) -> bool {
    let s = guiding_field(path, errmap, params, &pose.position());
    let Some(m_d) = s.m_d else { return false };
    let delta = heading_error_unchecked(&m_d, pose.alpha);
    delta.abs() < heading_band(params.k_n, e_c) && s.e.abs() < e_c
}

/// Bound on `|e(t)|` for trajectories starting in the invariant set.
pub fn error_bound(e0: f64, delta0: f64, k_n: f64) -> f64 {
    e0.abs().max(delta0.tan().abs() / k_n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViabilityReport {
    /// Lower bound on the distance from the start to `{|e| >= e_c}`.
    pub d0_lower_bound: f64,
    /// Path length needed to bring `|delta|` from its initial value into the
    /// heading band; 0 if already inside.
    pub rhs_1: f64,
    /// The same for the worst initial heading error `pi`.
    pub rhs_2: f64,
    pub guaranteed: bool,
}

/// `(u_r / k_delta) ln(delta / atan(k_n e_c))`, clamped at 0.
pub fn viability_length(params: &GvfParams, e_c: f64, delta: f64) -> f64 {
    let len = params.u_r / params.k_delta * (delta.abs() / heading_band(params.k_n, e_c)).ln();
    if len > 0.0 { len } else { 0.0 }
}

/// `sup psi'(phi) |grad phi|` over the nodes of a `cells x cells` raster.
pub fn error_lipschitz_estimate(path: &Path, errmap: &ErrorMap, region: &Region, cells: usize) -> f64 {
    region
        .nodes(cells + 1, cells + 1)
        .iter()
        .map(|p| {
            let s = path.eval(p);
            errmap.eval(s.phi).1 * s.grad.norm()
        })
        .fold(0.0, f64::max)
}

/// Lower bound on the distance from `p` to `{|e| >= e_c}` inside `region`
/// using a node raster plus the critical points themselves. One cell
/// diagonal is subtracted so the bound holds between nodes.
pub fn distance_to_error_band(
    path: &Path,
    errmap: &ErrorMap,
    e_c: f64,
    p: &Vec2,
    critical: &[Vec2],
    region: &Region,
    cells: usize,
) -> f64 {
    let diag = (region.width().powi(2) + region.height().powi(2)).sqrt() / cells as f64;
    let raster = region
        .nodes(cells + 1, cells + 1)
        .into_iter()
        .filter(|q| errmap.psi(path.phi(q)).abs() >= e_c)
        .map(|q| (q - p).norm() - diag)
        .fold(f64::INFINITY, f64::min);
    let crit = critical
        .iter()
        .filter(|c| errmap.psi(path.phi(c)).abs() >= e_c)
        .map(|c| (c - p).norm())
        .fold(f64::INFINITY, f64::min);
    raster.min(crit).max(0.0)
}

/// Whether the start reaches the invariant set before `|e|` can reach `e_c`.
///
/// With `lipschitz_c` the distance bound is `(e_c - |e0|) / c`; otherwise it
/// comes from [`distance_to_error_band`] with the default raster.
pub fn viability_check(
    path: &Path,
    errmap: &ErrorMap,
    params: &GvfParams,
    e_c: f64,
    pose0: &Pose,
    lipschitz_c: Option<f64>,
) -> Result<ViabilityReport, AnalysisError> {
    let s = guiding_field(path, errmap, params, &pose0.position());
    let m_d = s.m_d.ok_or(AnalysisError::DegenerateStart { x: pose0.x, y: pose0.y })?;
    if !(s.e.abs() < e_c) {
        return Err(AnalysisError::OutsideErrorBand { e: s.e, e_c });
    }
    let d0_lower_bound = match lipschitz_c {
        Some(c) => (e_c - s.e.abs()) / c,
        None => {
            let cfg = AnalysisConfig::default();
            let critical: Vec<Vec2> = find_critical_points(path, &cfg.region, cfg.grid_n)?
                .into_iter()
                .map(|r| r.location)
                .collect();
            distance_to_error_band(path, errmap, e_c, &pose0.position(), &critical, &cfg.region, cfg.raster_cells)
        }
    };
    let delta0 = heading_error_unchecked(&m_d, pose0.alpha);
    let rhs_1 = viability_length(params, e_c, delta0);
    let rhs_2 = viability_length(params, e_c, std::f64::consts::PI);
    Ok(ViabilityReport { d0_lower_bound, rhs_1, rhs_2, guaranteed: d0_lower_bound > rhs_1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_path, PathSpec};
    use crate::gvf::heading_with_error;

    fn locations(path: &Path) -> Vec<Vec2> {
        let cfg = AnalysisConfig::default();
        find_critical_points(path, &cfg.region, cfg.grid_n).unwrap().into_iter().map(|r| r.location).collect()
    }

    #[test]
    fn ellipse_has_single_repulsive_center() {
        let path = make_path(PathSpec::reference_ellipse()).unwrap();
        let roots = locations(&path);
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - Vec2::new(600.0, 350.0)).norm() < 1e-6);
        let cp = classify_critical_point(&path, &ErrorMap::Identity, 3.0, &roots[0]).unwrap();
        assert!((cp.e_value + 1.6).abs() < 1e-12);
        assert_eq!(cp.classification, Classification::Repulsive);
        assert!(cp.sign_relations_hold());
        assert!((critical_error_threshold(&path, &ErrorMap::Identity, &roots) - 1.6).abs() < 1e-12);
    }

    #[test]
    fn cassini_roots_and_classes() {
        let path = make_path(PathSpec::reference_cassini()).unwrap();
        let roots = locations(&path);
        let expected = [(300.0, 350.0), (600.0, 350.0), (900.0, 350.0)];
        assert_eq!(roots.len(), 3, "{roots:?}");
        for (r, (x, y)) in roots.iter().zip(expected) {
            assert!((r - Vec2::new(x, y)).norm() < 1e-6);
            assert!(path.eval(r).grad.norm() < 1e-12);
        }
        let classes: Vec<_> = roots
            .iter()
            .map(|r| classify_critical_point(&path, &ErrorMap::Identity, 3.0, r).unwrap())
            .collect();
        assert_eq!(classes[0].classification, Classification::Repulsive);
        assert_eq!(classes[1].classification, Classification::SaddleZeroMeasure);
        assert_eq!(classes[2].classification, Classification::Repulsive);
        assert!(classes.iter().all(|c| c.sign_relations_hold()));
        let e_c = critical_error_threshold(&path, &ErrorMap::Identity, &roots);
        // k_s (p^4 - q^4) with p = 330, q = 300
        let oracle = 1e-10 * (330f64.powi(4) - 300f64.powi(4));
        assert!((e_c - oracle).abs() < 1e-12, "{e_c} vs {oracle}");
    }

    #[test]
    fn linearization_identities() {
        let path = make_path(PathSpec::reference_cassini()).unwrap();
        for loc in [Vec2::new(300.0, 350.0), Vec2::new(600.0, 350.0)] {
            let s = path.eval(&loc);
            let e = s.phi;
            for k_n in [0.5, 3.0, 10.0] {
                let j = linearization(&s.hess, e, k_n);
                let tr = -k_n * e * s.hess.trace();
                let det = (1.0 + k_n * k_n * e * e) * s.hess.determinant();
                assert!((j.trace() - tr).abs() <= 1e-12 * (1.0 + tr.abs()));
                assert!((j.determinant() - det).abs() <= 1e-12 * (1.0 + det.abs()));
            }
        }
    }

    #[test]
    fn line_has_no_critical_points() {
        let path = make_path(PathSpec::Line { a: 0.0, b: 1.0, c: 0.0 }).unwrap();
        let roots = locations(&path);
        assert!(roots.is_empty());
        assert_eq!(critical_error_threshold(&path, &ErrorMap::Identity, &roots), f64::INFINITY);
    }

    #[test]
    fn degenerate_root_is_reported_singular() {
        use crate::field::PolyTerm;
        // phi = x^3 + y^2 - 1 has a critical point with singular Hessian at the origin
        let terms = vec![
            PolyTerm { x_pow: 3, y_pow: 0, coeff: 1.0 },
            PolyTerm { x_pow: 0, y_pow: 2, coeff: 1.0 },
            PolyTerm { x_pow: 0, y_pow: 0, coeff: -1.0 },
        ];
        let path = make_path(PathSpec::CustomPolynomial { terms }).unwrap();
        let roots = find_critical_points(&path, &Region::new(-2.0, 2.0, -2.0, 2.0), 16).unwrap();
        // Newton converges only linearly here, so several seeds may stop a
        // little over the merge radius apart
        assert!(!roots.is_empty());
        for r in &roots {
            assert!(r.singular, "{r:?}");
            assert!(r.location.norm() < 1e-5);
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        let path = make_path(PathSpec::reference_ellipse()).unwrap();
        assert_eq!(find_critical_points(&path, &Region::workspace(), 8), Err(AnalysisError::GridTooCoarse(8)));
    }

    #[test]
    fn classify_rejects_regular_point() {
        let path = make_path(PathSpec::reference_ellipse()).unwrap();
        assert!(classify_critical_point(&path, &ErrorMap::Identity, 3.0, &Vec2::new(700.0, 350.0)).is_err());
    }

    #[test]
    fn invariant_set_examples() {
        let path = make_path(PathSpec::reference_ellipse()).unwrap();
        let params = GvfParams::reference();
        let e_c = 1.6;
        // on the path, aligned with the field (clockwise: downward at the right end)
        assert!(in_invariant_set(&path, &ErrorMap::Identity, &params, e_c, &Pose::new(1000.0, 350.0, -std::f64::consts::FRAC_PI_2)));
        // e = 1.0: (x - 600)^2 = (1.0 / 1e-5) + 400^2
        let x = 600.0 + (1e5f64 + 160000.0).sqrt();
        let p = Vec2::new(x, 350.0);
        let m_d = guiding_field(&path, &ErrorMap::Identity, &params, &p).m_d.unwrap();
        assert!((path.phi(&p) - 1.0).abs() < 1e-9);
        let pose = Pose::new(p.x, p.y, heading_with_error(&m_d, 1.3));
        assert!(in_invariant_set(&path, &ErrorMap::Identity, &params, e_c, &pose));
        let pose = Pose::new(p.x, p.y, heading_with_error(&m_d, 1.4));
        assert!(!in_invariant_set(&path, &ErrorMap::Identity, &params, e_c, &pose));
        // |e| = e_c exactly, strictly outside
        let x = 600.0 + (1.6e5f64 + 160000.0).sqrt();
        let on_band = Pose::new(x, 350.0, -std::f64::consts::FRAC_PI_2);
        assert!((path.phi(&on_band.position()) - 1.6).abs() < 1e-12);
        let e = ErrorMap::Identity.psi(path.phi(&on_band.position()));
        assert!(!in_invariant_set(&path, &ErrorMap::Identity, &params, e.abs(), &on_band));
        // critical point is never in the set
        assert!(!in_invariant_set(&path, &ErrorMap::Identity, &params, e_c, &Pose::new(600.0, 350.0, 0.0)));
    }

    #[test]
    fn heading_band_grows_with_gain() {
        let mut prev = 0.0;
        for i in 1..200 {
            let band = heading_band(i as f64 * 0.05, 0.3759);
            assert!(band > prev);
            prev = band;
        }
    }

    #[test]
    fn viability_rhs_formula() {
        let params = GvfParams::reference();
        let rhs2 = viability_length(&params, 1.6, std::f64::consts::PI);
        let oracle = 25.0 * (std::f64::consts::PI / 4.8f64.atan()).ln();
        assert!((rhs2 - oracle).abs() < 1e-12);
        assert!((rhs2 - 20.832).abs() < 1e-3, "{rhs2}");
    }

    #[test]
    fn viability_aligned_start() {
        let path = make_path(PathSpec::reference_ellipse()).unwrap();
        let params = GvfParams::reference();
        let p = Vec2::new(900.0, 350.0);
        let m_d = guiding_field(&path, &ErrorMap::Identity, &params, &p).m_d.unwrap();
        let pose = Pose::new(p.x, p.y, heading_with_error(&m_d, 0.0));
        let r = viability_check(&path, &ErrorMap::Identity, &params, 1.6, &pose, None).unwrap();
        assert_eq!(r.rhs_1, 0.0);
        assert!(r.d0_lower_bound > 0.0);
        assert!(r.guaranteed);
        // rough oracle: the band reaches the center, 300 Px away
        assert!(r.d0_lower_bound <= 300.0);
    }

    #[test]
    fn viability_with_lipschitz_constant() {
        // arctan map on a circle: |grad e| <= sup psi' * |n| on the raster
        let path = make_path(PathSpec::Circle { x0: 600.0, y0: 350.0, radius: 200.0 }).unwrap();
        let errmap = ErrorMap::ArctanPower { p: 1.0 };
        let params = GvfParams::reference();
        let region = Region::padded_workspace();
        let c = error_lipschitz_estimate(&path, &errmap, &region, 200);
        let roots: Vec<Vec2> = find_critical_points(&path, &region, 64).unwrap().into_iter().map(|r| r.location).collect();
        let e_c = critical_error_threshold(&path, &errmap, &roots);
        let start = Pose::new(700.0, 350.0, 0.0);
        let e0 = errmap.psi(path.phi(&start.position())).abs();
        let r = viability_check(&path, &errmap, &params, e_c, &start, Some(c)).unwrap();
        assert!((r.d0_lower_bound - (e_c - e0) / c).abs() < 1e-12);
        // the Lipschitz bound is conservative against the raster distance
        let numeric = viability_check(&path, &errmap, &params, e_c, &start, None).unwrap();
        assert!(r.d0_lower_bound <= numeric.d0_lower_bound + 1e-9);
    }

    #[test]
    fn viability_rejects_outside_band() {
        let path = make_path(PathSpec::reference_ellipse()).unwrap();
        let far = Pose::new(1800.0, 350.0, 0.0);
        assert!(matches!(
            viability_check(&path, &ErrorMap::Identity, &GvfParams::reference(), 1.6, &far, None),
            Err(AnalysisError::OutsideErrorBand { .. })
        ));
    }
}
