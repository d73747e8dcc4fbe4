use serde::{Deserialize, Serialize};

use super::parametric::ParametricCurve;
use super::FieldError;
use crate::geometry::{Mat2, Vec2};

/// Serializable description of an implicit path `phi(x, y) = 0`.
///
/// Built-in families keep `phi` exactly as written below; `k_s` is a pure
/// scale factor on `phi`.
///
/// - `Line`: `a x + b y + c`
/// - `Circle`: `(x - x0)^2 + (y - y0)^2 - radius^2`
/// - `Ellipse`: `k_s ((x - x0)^2 / p^2 + (y - y0)^2 / q^2 - r^2)`, semiaxes `p r` and `q r`
/// - `Cassini`: `k_s ((dx^2 + dy^2)^2 - 2 q^2 (dx^2 - dy^2) - p^4 + q^4)`, foci `(x0 +- q, y0)`
/// - `CustomPolynomial`: `sum c_ij x^i y^j` in workspace coordinates
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathSpec {
    Line { a: f64, b: f64, c: f64 },
    Circle { x0: f64, y0: f64, radius: f64 },
    Ellipse { x0: f64, y0: f64, r: f64, p: f64, q: f64, k_s: f64 },
    Cassini { x0: f64, y0: f64, p: f64, q: f64, k_s: f64 },
    CustomPolynomial { terms: Vec<PolyTerm> },
}

/// One monomial `coeff * x^x_pow * y^y_pow`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub x_pow: u32,
    pub y_pow: u32,
    pub coeff: f64,
}

impl PathSpec {
    /// The elliptic path of the ellipse experiment.
    pub fn reference_ellipse() -> Self {
        PathSpec::Ellipse { x0: 600.0, y0: 350.0, r: 400.0, p: 1.0, q: 0.5, k_s: 1e-5 }
    }

    /// The Cassini oval of the second experiment.
    pub fn reference_cassini() -> Self {
        PathSpec::Cassini { x0: 600.0, y0: 350.0, p: 330.0, q: 300.0, k_s: 1e-10 }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            PathSpec::Line { .. } => "line",
            PathSpec::Circle { .. } => "circle",
            PathSpec::Ellipse { .. } => "ellipse",
            PathSpec::Cassini { .. } => "cassini",
            PathSpec::CustomPolynomial { .. } => "custom_polynomial",
        }
    }
}

/// `phi`, its gradient `n` and its Hessian `H` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub phi: f64,
    pub grad: Vec2,
    pub hess: Mat2,
}

#[derive(Debug, Clone, PartialEq)]
struct Poly {
    value: Vec<PolyTerm>,
    dx: Vec<PolyTerm>,
    dy: Vec<PolyTerm>,
    dxx: Vec<PolyTerm>,
    dxy: Vec<PolyTerm>,
    dyy: Vec<PolyTerm>,
}

fn diff_x(terms: &[PolyTerm]) -> Vec<PolyTerm> {
    terms
        .iter()
        .filter(|t| t.x_pow > 0)
        .map(|t| PolyTerm { x_pow: t.x_pow - 1, y_pow: t.y_pow, coeff: t.coeff * t.x_pow as f64 })
        .collect()
}

fn diff_y(terms: &[PolyTerm]) -> Vec<PolyTerm> {
    terms
        .iter()
        .filter(|t| t.y_pow > 0)
        .map(|t| PolyTerm { x_pow: t.x_pow, y_pow: t.y_pow - 1, coeff: t.coeff * t.y_pow as f64 })
        .collect()
}

fn eval_terms(terms: &[PolyTerm], x: f64, y: f64) -> f64 {
    terms.iter().map(|t| t.coeff * x.powi(t.x_pow as i32) * y.powi(t.y_pow as i32)).sum()
}

impl Poly {
    fn new(terms: &[PolyTerm]) -> Self {
        let value: Vec<PolyTerm> = terms.iter().copied().filter(|t| t.coeff != 0.0).collect();
        let dx = diff_x(&value);
        let dy = diff_y(&value);
        Poly { dxx: diff_x(&dx), dxy: diff_y(&dx), dyy: diff_y(&dy), value, dx, dy }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Line { a: f64, b: f64, c: f64 },
    Conic { center: Vec2, ax: f64, ay: f64, r: f64, k_s: f64 },
    Cassini { center: Vec2, p: f64, q: f64, k_s: f64 },
    Poly(Poly),
}

/// A validated implicit path with closed-form derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    spec: PathSpec,
    repr: Repr,
}

fn positive(name: &'static str, v: f64) -> Result<f64, FieldError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(FieldError::InvalidParameter { name, reason: format!("must be finite and > 0, got {v}") })
    }
}

fn finite(name: &'static str, v: f64) -> Result<f64, FieldError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(FieldError::InvalidParameter { name, reason: format!("must be finite, got {v}") })
    }
}

/// Validates `spec` and builds the derivative tables.
pub fn make_path(spec: PathSpec) -> Result<Path, FieldError> {
    let repr = match &spec {
        &PathSpec::Line { a, b, c } => {
            finite("a", a)?;
            finite("b", b)?;
            finite("c", c)?;
            if a == 0.0 && b == 0.0 {
                return Err(FieldError::InvalidParameter {
                    name: "a",
                    reason: "line needs a nonzero normal (a, b)".into(),
                });
            }
            Repr::Line { a, b, c }
        }
        &PathSpec::Circle { x0, y0, radius } => Repr::Conic {
            center: Vec2::new(finite("x0", x0)?, finite("y0", y0)?),
            ax: 1.0,
            ay: 1.0,
            r: positive("radius", radius)?,
            k_s: 1.0,
        },
        &PathSpec::Ellipse { x0, y0, r, p, q, k_s } => Repr::Conic {
            center: Vec2::new(finite("x0", x0)?, finite("y0", y0)?),
            ax: positive("p", p)?,
            ay: positive("q", q)?,
            r: positive("r", r)?,
            k_s: positive("k_s", k_s)?,
        },
        &PathSpec::Cassini { x0, y0, p, q, k_s } => {
            let p = positive("p", p)?;
            let q = positive("q", q)?;
            if p <= q {
                return Err(FieldError::InvalidParameter {
                    name: "p",
                    reason: format!(
                        "single-loop Cassini oval needs p > q (p = q puts a critical point on the path, p < q splits it in two), got p = {p}, q = {q}"
                    ),
                });
            }
            Repr::Cassini {
                center: Vec2::new(finite("x0", x0)?, finite("y0", y0)?),
                p,
                q,
                k_s: positive("k_s", k_s)?,
            }
        }
        PathSpec::CustomPolynomial { terms } => {
            for t in terms {
                finite("coeff", t.coeff)?;
            }
            let poly = Poly::new(terms);
            if poly.dx.is_empty() && poly.dy.is_empty() {
                return Err(FieldError::InvalidParameter {
                    name: "terms",
                    reason: "polynomial must depend on x or y".into(),
                });
            }
            Repr::Poly(poly)
        }
    };
    Ok(Path { spec, repr })
}

impl Path {
    pub fn spec(&self) -> &PathSpec {
        &self.spec
    }

    pub fn phi(&self, p: &Vec2) -> f64 {
        match &self.repr {
            Repr::Line { a, b, c } => a * p.x + b * p.y + c,
            Repr::Conic { center, ax, ay, r, k_s } => {
                let d = p - center;
                k_s * (d.x * d.x / (ax * ax) + d.y * d.y / (ay * ay) - r * r)
            }
            Repr::Cassini { center, p: pp, q, k_s } => {
                let d = p - center;
                let (x2, y2) = (d.x * d.x, d.y * d.y);
                let rho = x2 + y2;
                let q2 = q * q;
                k_s * (rho * rho - 2.0 * q2 * (x2 - y2) - pp.powi(4) + q2 * q2)
            }
            Repr::Poly(poly) => eval_terms(&poly.value, p.x, p.y),
        }
    }

    /// `phi`, gradient and Hessian, all closed form.
    pub fn eval(&self, p: &Vec2) -> FieldSample {
        let phi = self.phi(p);
        match &self.repr {
            &Repr::Line { a, b, .. } => FieldSample { phi, grad: Vec2::new(a, b), hess: Mat2::zeros() },
            &Repr::Conic { center, ax, ay, k_s, .. } => {
                let d = p - center;
                let hx = 2.0 * k_s / (ax * ax);
                let hy = 2.0 * k_s / (ay * ay);
                FieldSample {
                    phi,
                    grad: Vec2::new(hx * d.x, hy * d.y),
                    hess: Mat2::new(hx, 0.0, 0.0, hy),
                }
            }
            &Repr::Cassini { center, q, k_s, .. } => {
                let d = p - center;
                let (x2, y2) = (d.x * d.x, d.y * d.y);
                let rho = x2 + y2;
                let q2 = q * q;
                let k4 = 4.0 * k_s;
                let hxy = 8.0 * k_s * d.x * d.y;
                FieldSample {
                    phi,
                    grad: Vec2::new(k4 * d.x * (rho - q2), k4 * d.y * (rho + q2)),
                    hess: Mat2::new(
                        k4 * (3.0 * x2 + y2 - q2),
                        hxy,
                        hxy,
                        k4 * (x2 + 3.0 * y2 + q2),
                    ),
                }
            }
            Repr::Poly(poly) => {
                let (x, y) = (p.x, p.y);
                let hxy = eval_terms(&poly.dxy, x, y);
                FieldSample {
                    phi,
                    grad: Vec2::new(eval_terms(&poly.dx, x, y), eval_terms(&poly.dy, x, y)),
                    hess: Mat2::new(eval_terms(&poly.dxx, x, y), hxy, hxy, eval_terms(&poly.dyy, x, y)),
                }
            }
        }
    }

    /// Parametric form oriented along the level-set tangent `E grad phi`, so
    /// increasing the parameter follows the circulation of the guiding field.
    /// `None` for custom polynomials.
    pub fn parametric(&self) -> Option<ParametricCurve> {
        match self.repr {
            Repr::Line { a, b, c } => {
                let nn = a * a + b * b;
                let origin = Vec2::new(-c * a / nn, -c * b / nn);
                let dir = Vec2::new(b, -a) / nn.sqrt();
                Some(ParametricCurve::Line { origin, dir, half_length: ParametricCurve::LINE_HALF_LENGTH })
            }
            Repr::Conic { center, ax, ay, r, .. } => {
                Some(ParametricCurve::Ellipse { center, semi_x: ax * r, semi_y: ay * r })
            }
            Repr::Cassini { center, p, q, .. } => Some(ParametricCurve::Cassini { center, focus: q, b: p }),
            Repr::Poly(_) => None,
        }
    }
}

/// Closed-form `phi`, gradient and Hessian at `point`.
pub fn eval_path(path: &Path, point: &Vec2) -> FieldSample {
    path.eval(point)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_on_path_and_center() {
        let path = make_path(PathSpec::reference_ellipse()).unwrap();
        let s = path.eval(&Vec2::new(1000.0, 350.0));
        assert!(s.phi.abs() < 1e-12);
        let c = path.eval(&Vec2::new(600.0, 350.0));
        assert!((c.phi + 1.6).abs() < 1e-12);
        assert_eq!(c.grad, Vec2::zeros());
    }

    #[test]
    fn cassini_focus_values() {
        let path = make_path(PathSpec::reference_cassini()).unwrap();
        let s = path.eval(&Vec2::new(900.0, 350.0));
        assert_eq!(s.grad, Vec2::zeros());
        assert!((s.phi + 1.185921).abs() < 1e-9, "{}", s.phi);
    }

    #[test]
    fn line_has_constant_derivatives() {
        let path = make_path(PathSpec::Line { a: 0.0, b: 1.0, c: 0.0 }).unwrap();
        for p in [Vec2::new(3.0, 5.0), Vec2::new(-100.0, 7.5)] {
            let s = path.eval(&p);
            assert_eq!(s.grad, Vec2::new(0.0, 1.0));
            assert_eq!(s.hess, Mat2::zeros());
            assert_eq!(s.phi, p.y);
        }
    }

    #[test]
    fn polynomial_matches_circle() {
        // x^2 + y^2 - 1
        let poly = make_path(PathSpec::CustomPolynomial {
            terms: vec![
                PolyTerm { x_pow: 2, y_pow: 0, coeff: 1.0 },
                PolyTerm { x_pow: 0, y_pow: 2, coeff: 1.0 },
                PolyTerm { x_pow: 0, y_pow: 0, coeff: -1.0 },
            ],
        })
        .unwrap();
        let circle = make_path(PathSpec::Circle { x0: 0.0, y0: 0.0, radius: 1.0 }).unwrap();
        for p in [Vec2::new(0.3, -2.0), Vec2::new(1.5, 0.25)] {
            let a = poly.eval(&p);
            let b = circle.eval(&p);
            assert!((a.phi - b.phi).abs() < 1e-14);
            assert!((a.grad - b.grad).norm() < 1e-14);
            assert!((a.hess - b.hess).norm() < 1e-14);
        }
        assert!(poly.parametric().is_none());
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(make_path(PathSpec::Ellipse { x0: 0.0, y0: 0.0, r: 1.0, p: 0.0, q: 1.0, k_s: 1.0 }).is_err());
        assert!(make_path(PathSpec::Ellipse { x0: 0.0, y0: 0.0, r: 1.0, p: 1.0, q: 1.0, k_s: -1.0 }).is_err());
        assert!(make_path(PathSpec::Circle { x0: 0.0, y0: 0.0, radius: -2.0 }).is_err());
        assert!(make_path(PathSpec::Line { a: 0.0, b: 0.0, c: 1.0 }).is_err());
        assert!(make_path(PathSpec::Cassini { x0: 0.0, y0: 0.0, p: 300.0, q: 300.0, k_s: 1.0 }).is_err());
        assert!(make_path(PathSpec::CustomPolynomial {
            terms: vec![PolyTerm { x_pow: 0, y_pow: 0, coeff: 2.0 }]
        })
        .is_err());
    }

    #[test]
    fn hessian_is_symmetric() {
        let path = make_path(PathSpec::reference_cassini()).unwrap();
        let h = path.eval(&Vec2::new(106.0, 202.0)).hess;
        assert_eq!(h[(0, 1)], h[(1, 0)]);
    }
}
