use serde::{Deserialize, Serialize};

use super::FieldError;

/// Strictly increasing reparametrization `psi` with `psi(0) = 0` turning the
/// path function value into the tracking error `e = psi(phi)`.
///
/// The power families use the odd extension `|s|^p sgn(s)`, which keeps them
/// strictly increasing for every real `p >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorMap {
    #[default]
    Identity,
    /// `psi(s) = arctan(|s|^p sgn s)`.
    ArctanPower { p: f64 },
    /// `psi(s) = |s|^p sgn s / (1 + |s|^p)`.
    RationalSignPower { p: f64 },
}

impl ErrorMap {
    pub fn validate(&self) -> Result<(), FieldError> {
        match *self {
            ErrorMap::Identity => Ok(()),
            ErrorMap::ArctanPower { p } | ErrorMap::RationalSignPower { p } => {
                if p.is_finite() && p >= 1.0 {
                    Ok(())
                } else {
                    Err(FieldError::InvalidParameter {
                        name: "p",
                        reason: format!("error-map exponent must be finite and >= 1, got {p}"),
                    })
                }
            }
        }
    }

    /// Returns `(psi(s), psi'(s))`.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        match *self {
            ErrorMap::Identity => (s, 1.0),
            ErrorMap::ArctanPower { p } => {
                let a = s.abs();
                let ap = a.powf(p);
                let e = (ap.copysign(s)).atan();
                // p * |s|^(p-1) / (1 + |s|^(2p)); 0^0 = 1 covers p = 1 at s = 0
                let slope = p * a.powf(p - 1.0) / (1.0 + ap * ap);
                (if s == 0.0 { 0.0 } else { e }, slope)
            }
            ErrorMap::RationalSignPower { p } => {
                let a = s.abs();
                let ap = a.powf(p);
                let e = if s == 0.0 { 0.0 } else { (ap / (1.0 + ap)).copysign(s) };
                let slope = p * a.powf(p - 1.0) / ((1.0 + ap) * (1.0 + ap));
                (e, slope)
            }
        }
    }

    pub fn psi(&self, s: f64) -> f64 {
        self.eval(s).0
    }

    /// Closed form of `sup_u psi'(psi^{-1}(u)) = sup_s psi'(s)`.
    pub fn sup_slope(&self) -> f64 {
        match *self {
            ErrorMap::Identity => 1.0,
            ErrorMap::ArctanPower { p } => {
                // attained at |s|^(2p) = (p-1)/(p+1)
                let r: f64 = (p - 1.0) / (p + 1.0);
                0.5 * (p + 1.0) * r.powf((p - 1.0) / (2.0 * p))
            }
            ErrorMap::RationalSignPower { p } => {
                // attained at |s|^p = (p-1)/(p+1)
                let r: f64 = (p - 1.0) / (p + 1.0);
                (p + 1.0) * (p + 1.0) / (4.0 * p) * r.powf((p - 1.0) / p)
            }
        }
    }
}
