//! Parametric forms of the built-in paths and nearest-point search on them.

use std::f64::consts::PI;

use crate::geometry::Vec2;

/// Parametric form `s in [0, 1) -> point`, oriented along `E grad phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParametricCurve {
    Line { origin: Vec2, dir: Vec2, half_length: f64 },
    Ellipse { center: Vec2, semi_x: f64, semi_y: f64 },
    /// Single-loop Cassini oval with foci `center +- (focus, 0)` and product constant `b^2`.
    Cassini { center: Vec2, focus: f64, b: f64 },
}

/// Point and first two parameter derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveJet {
    pub point: Vec2,
    pub d1: Vec2,
    pub d2: Vec2,
}

impl ParametricCurve {
    /// Lines are sampled over `[-L, L]` around the foot of the origin.
    pub const LINE_HALF_LENGTH: f64 = 1.0e5;

    pub fn is_closed(&self) -> bool {
        !matches!(self, ParametricCurve::Line { .. })
    }

    pub fn point(&self, s: f64) -> Vec2 {
        self.jet(s).point
    }

    pub fn jet(&self, s: f64) -> CurveJet {
        match *self {
            ParametricCurve::Line { origin, dir, half_length } => {
                let t = half_length * (2.0 * s - 1.0);
                CurveJet { point: origin + dir * t, d1: dir * (2.0 * half_length), d2: Vec2::zeros() }
            }
            ParametricCurve::Ellipse { center, semi_x, semi_y } => {
                let w = 2.0 * PI;
                let (sn, cs) = (w * s).sin_cos();
                CurveJet {
                    point: center + Vec2::new(semi_x * cs, -semi_y * sn),
                    d1: Vec2::new(-semi_x * sn, -semi_y * cs) * w,
                    d2: Vec2::new(-semi_x * cs, semi_y * sn) * (w * w),
                }
            }
            ParametricCurve::Cassini { center, focus, b } => {
                let w = 2.0 * PI;
                let theta = w * s;
                let a2 = focus * focus;
                let a4 = a2 * a2;
                let b4 = b.powi(4);
                let (s2, c2) = (2.0 * theta).sin_cos();
                let s4 = (4.0 * theta).sin();
                let c4 = (4.0 * theta).cos();
                // r^2 = g = a^2 cos 2t + sqrt(D), D = b^4 - a^4 sin^2 2t
                let d = b4 - a4 * s2 * s2;
                let sd = d.sqrt();
                let dd = -2.0 * a4 * s4;
                let ddd = -8.0 * a4 * c4;
                let g = a2 * c2 + sd;
                let g1 = -2.0 * a2 * s2 + dd / (2.0 * sd);
                let g2 = -4.0 * a2 * c2 + ddd / (2.0 * sd) - dd * dd / (4.0 * d * sd);
                let r = g.sqrt();
                let r1 = g1 / (2.0 * r);
                let r2 = g2 / (2.0 * r) - g1 * g1 / (4.0 * r * r * r);
                let (sn, cs) = theta.sin_cos();
                let u = Vec2::new(cs, -sn);
                let u1 = Vec2::new(-sn, -cs);
                let p1 = u * r1 + u1 * r;
                let p2 = u * r2 + u1 * (2.0 * r1) - u * r;
                CurveJet { point: center + u * r, d1: p1 * w, d2: p2 * (w * w) }
            }
        }
    }

    /// Signed curvature in the parametric orientation (negative for clockwise turns).
    pub fn curvature(&self, s: f64) -> f64 {
        let j = self.jet(s);
        let speed = j.d1.norm();
        (j.d1.x * j.d2.y - j.d1.y * j.d2.x) / (speed * speed * speed)
    }

    pub fn unit_tangent(&self, s: f64) -> Vec2 {
        self.jet(s).d1.normalize()
    }

    /// Maps a parameter into the curve's domain (wraps closed curves).
    pub fn normalize_param(&self, s: f64) -> f64 {
        if self.is_closed() {
            let w = s.rem_euclid(1.0);
            if w >= 1.0 { 0.0 } else { w }
        } else {
            s.clamp(0.0, 1.0)
        }
    }

    /// Uniform samples `(s_i, point_i)`; closed curves exclude `s = 1`.
    pub fn sample(&self, n: usize) -> Vec<(f64, Vec2)> {
        let denom = if self.is_closed() { n as f64 } else { (n - 1) as f64 };
        (0..n)
            .map(|i| {
                let s = i as f64 / denom;
                (s, self.point(s))
            })
            .collect()
    }

    /// Local minimum of `|point(s) - target|` in the bracket `[lo, hi]`
    /// (unwrapped; may extend past `[0, 1)` for closed curves).
    pub fn refine_nearest(&self, target: &Vec2, lo: f64, hi: f64, tol: f64) -> f64 {
        // g(s) = (r - p) . r', the derivative of |r - p|^2 / 2
        let g = |s: f64| {
            let j = self.jet(s);
            let d = j.point - target;
            (d.dot(&j.d1), j.d1.dot(&j.d1) + d.dot(&j.d2))
        };
        let (glo, _) = g(lo);
        let (ghi, _) = g(hi);
        if glo <= 0.0 && ghi >= 0.0 {
            // safeguarded Newton on g
            let (mut a, mut b) = (lo, hi);
            let mut s = 0.5 * (a + b);
            for _ in 0..200 {
                let (gs, dgs) = g(s);
                if gs == 0.0 {
                    return s;
                }
                if gs < 0.0 {
                    a = s;
                } else {
                    b = s;
                }
                let newton = if dgs > 0.0 { s - gs / dgs } else { f64::NAN };
                let next = if newton.is_finite() && newton > a && newton < b { newton } else { 0.5 * (a + b) };
                if (next - s).abs() <= tol || (b - a) <= tol {
                    return next;
                }
                s = next;
            }
            s
        } else {
            self.golden_section(target, lo, hi, tol)
        }
    }

    fn golden_section(&self, target: &Vec2, lo: f64, hi: f64, tol: f64) -> f64 {
        let f = |s: f64| (self.point(s) - target).norm_squared();
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        while (b - a) > tol {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = f(d);
            }
        }
        let mut best = 0.5 * (a + b);
        for cand in [lo, hi] {
            if f(cand) < f(best) {
                best = cand;
            }
        }
        best
    }
}

/// A nearest point on a parametric curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestPoint {
    pub s: f64,
    pub point: Vec2,
    pub distance: f64,
}

/// Precomputed samples of a parametric curve for repeated nearest-point
/// queries (global seed scan followed by local refinement).
#[derive(Debug, Clone)]
pub struct CurveIndex {
    curve: ParametricCurve,
    samples: Vec<(f64, Vec2)>,
    tol: f64,
}

impl CurveIndex {
    pub fn new(curve: ParametricCurve, samples: usize, tol: f64) -> Self {
        let samples = curve.sample(samples.max(8));
        Self { curve, samples, tol }
    }

    pub fn curve(&self) -> &ParametricCurve {
        &self.curve
    }

    fn bracket(&self, i: usize) -> (f64, f64) {
        let n = self.samples.len();
        let s = self.samples[i].0;
        let h = if self.curve.is_closed() { 1.0 / n as f64 } else { 1.0 / (n - 1) as f64 };
        if self.curve.is_closed() {
            (s - h, s + h)
        } else {
            ((s - h).max(0.0), (s + h).min(1.0))
        }
    }

    fn refine_at(&self, target: &Vec2, i: usize) -> NearestPoint {
        let (lo, hi) = self.bracket(i);
        let s = self.curve.refine_nearest(target, lo, hi, self.tol);
        let s = self.curve.normalize_param(s);
        let point = self.curve.point(s);
        NearestPoint { s, point, distance: (point - target).norm() }
    }

    fn sample_distances(&self, target: &Vec2) -> Vec<f64> {
        self.samples.iter().map(|(_, p)| (p - target).norm_squared()).collect()
    }

    /// Global nearest point: best seed, then local refinement.
    pub fn nearest(&self, target: &Vec2) -> NearestPoint {
        let d2 = self.sample_distances(target);
        let (best, _) = d2
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &d)| if d < acc.1 { (i, d) } else { acc });
        let refined = self.refine_at(target, best);
        let (s0, p0) = self.samples[best];
        let d0 = (p0 - target).norm();
        if d0 < refined.distance {
            NearestPoint { s: s0, point: p0, distance: d0 }
        } else {
            refined
        }
    }

    /// Local nearest point starting from a previous parameter `hint`.
    pub fn nearest_from(&self, target: &Vec2, hint: f64) -> NearestPoint {
        let n = self.samples.len() as f64;
        let h = 2.0 / n;
        let (lo, hi) = if self.curve.is_closed() {
            (hint - h, hint + h)
        } else {
            ((hint - h).max(0.0), (hint + h).min(1.0))
        };
        let s = self.curve.normalize_param(self.curve.refine_nearest(target, lo, hi, self.tol));
        let point = self.curve.point(s);
        NearestPoint { s, point, distance: (point - target).norm() }
    }

    /// All refined local minima of the distance, sorted by distance.
    pub fn local_minima(&self, target: &Vec2) -> Vec<NearestPoint> {
        let d2 = self.sample_distances(target);
        let n = d2.len();
        let closed = self.curve.is_closed();
        let mut out: Vec<NearestPoint> = Vec::new();
        for i in 0..n {
            let prev = if i == 0 {
                if closed { Some(d2[n - 1]) } else { None }
            } else {
                Some(d2[i - 1])
            };
            let next = if i + 1 == n {
                if closed { Some(d2[0]) } else { None }
            } else {
                Some(d2[i + 1])
            };
            let is_min = prev.is_none_or(|p| d2[i] <= p) && next.is_none_or(|q| d2[i] <= q);
            if !is_min {
                continue;
            }
            let cand = self.refine_at(target, i);
            let dup = out.iter().any(|o| (o.point - cand.point).norm() <= 1e-9 * (1.0 + cand.point.norm()));
            if !dup {
                out.push(cand);
            }
        }
        out.sort_by(|a, b| a.distance.total_cmp(&b.distance));
        out
    }
}
