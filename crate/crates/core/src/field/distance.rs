//! Euclidean distance from a point to the zero set of `phi`.

use super::parametric::{CurveIndex, NearestPoint};
use super::{FieldError, Path};
use crate::geometry::{Region, Vec2};

/// Resolution knobs for [`DistanceOracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceConfig {
    /// Boundary samples for parametric curves.
    pub samples: usize,
    /// Parameter tolerance of the local refinement.
    pub refine_tol: f64,
    /// Raster box for paths without a parametric form.
    pub region: Region,
    /// Raster cells per side for paths without a parametric form.
    pub raster_cells: usize,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        Self { samples: 4096, refine_tol: 1e-12, region: Region::padded_workspace(), raster_cells: 1024 }
    }
}

/// Zero contour of a polynomial path as line segments between refined
/// edge crossings of a raster.
#[derive(Debug, Clone)]
struct Contour {
    segments: Vec<(Vec2, Vec2)>,
}

fn bisect_zero(path: &Path, mut a: Vec2, mut b: Vec2) -> Vec2 {
    let mut fa = path.phi(&a);
    for _ in 0..60 {
        let m = (a + b) * 0.5;
        let fm = path.phi(&m);
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
    (a + b) * 0.5
}

fn point_segment_distance(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

impl Contour {
    fn build(path: &Path, region: &Region, cells: usize) -> Result<Self, FieldError> {
        let n = cells.max(2);
        let dx = region.width() / n as f64;
        let dy = region.height() / n as f64;
        let node = |i: usize, j: usize| Vec2::new(region.x_min + i as f64 * dx, region.y_min + j as f64 * dy);
        let mut values = vec![0.0; (n + 1) * (n + 1)];
        for j in 0..=n {
            for i in 0..=n {
                values[j * (n + 1) + i] = path.phi(&node(i, j));
            }
        }
        let val = |i: usize, j: usize| values[j * (n + 1) + i];
        let mut segments = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
                let mut crossings = Vec::with_capacity(4);
                for k in 0..4 {
                    let (a, b) = (corners[k], corners[(k + 1) % 4]);
                    let (fa, fb) = (val(a.0, a.1), val(b.0, b.1));
                    if fa == 0.0 {
                        crossings.push(node(a.0, a.1));
                    } else if (fa < 0.0) != (fb < 0.0) && fb != 0.0 {
                        crossings.push(bisect_zero(path, node(a.0, a.1), node(b.0, b.1)));
                    }
                }
                match crossings.len() {
                    0 => {}
                    1 => segments.push((crossings[0], crossings[0])),
                    2 => segments.push((crossings[0], crossings[1])),
                    _ => {
                        // saddle cell: pair up consecutive crossings
                        for pair in crossings.chunks(2) {
                            let b = *pair.get(1).unwrap_or(&pair[0]);
                            segments.push((pair[0], b));
                        }
                    }
                }
            }
        }
        if segments.is_empty() {
            return Err(FieldError::ContourNotFound { region: *region });
        }
        Ok(Self { segments })
    }

    fn distance(&self, p: &Vec2) -> f64 {
        self.segments.iter().map(|(a, b)| point_segment_distance(p, a, b)).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
enum Backend {
    Curve(CurveIndex),
    Contour(Contour),
}

/// Reusable distance-to-path evaluator.
///
/// Built-in paths use their parametric form: a scan over `samples` boundary
/// points followed by a safeguarded Newton refinement, exact to roundoff.
/// Custom polynomials use a rasterized zero contour whose accuracy is the
/// chord error of the raster cells.
#[derive(Debug, Clone)]
pub struct DistanceOracle {
    backend: Backend,
}

impl DistanceOracle {
    pub fn new(path: &Path, cfg: &DistanceConfig) -> Result<Self, FieldError> {
        let backend = match path.parametric() {
            Some(curve) => Backend::Curve(CurveIndex::new(curve, cfg.samples, cfg.refine_tol)),
            None => Backend::Contour(Contour::build(path, &cfg.region, cfg.raster_cells)?),
        };
        Ok(Self { backend })
    }

    pub fn distance(&self, p: &Vec2) -> f64 {
        match &self.backend {
            Backend::Curve(idx) => idx.nearest(p).distance,
            Backend::Contour(c) => c.distance(p),
        }
    }

    /// Distance with a warm start. `hint` carries the parameter of the last
    /// nearest point; pass `None` to force a global scan. Only valid when
    /// successive queries move by much less than the curvature radius.
    pub fn distance_tracked(&self, p: &Vec2, hint: &mut Option<f64>) -> f64 {
        match &self.backend {
            Backend::Curve(idx) => {
                let np: NearestPoint = match *hint {
                    Some(s) => idx.nearest_from(p, s),
                    None => idx.nearest(p),
                };
                *hint = Some(np.s);
                np.distance
            }
            Backend::Contour(c) => c.distance(p),
        }
    }
}

/// Euclidean distance from `point` to the path with default resolution.
pub fn distance_to_path(path: &Path, point: &Vec2) -> Result<f64, FieldError> {
    Ok(DistanceOracle::new(path, &DistanceConfig::default())?.distance(point))
}
