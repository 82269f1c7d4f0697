//! Bounded, strictly positive, globally Lipschitz fitness functions together
//! with certified constants.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the default certification box for the Rastrigin wrapper.
pub const RASTRIGIN_BOX: f64 = 5.0;
const RASTRIGIN_GRID_POINTS: usize = 2_000_001;

/// Fitness family together with its parameters, as written in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FitnessConfig {
    /// `f_lo + (f_hi - f_lo) exp(-|x - center|^2 / (2 s^2))`.
    GaussianBump {
        f_lo: f64,
        f_hi: f64,
        s: f64,
        /// Scalar (broadcast to every coordinate) or one entry per coordinate.
        #[serde(default)]
        center: Vec<f64>,
    },
    /// `f_lo + (1 - f_lo) / (1 + rastrigin(x))`.
    ReciprocalRastrigin {
        f_lo: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    Constant { c: f64 },
}

fn default_amplitude() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitnessKind {
    GaussianBump { s: f64, center: Vec<f64> },
    ReciprocalRastrigin { amplitude: f64 },
    Constant,
}

/// Certified bounds `f_lo <= F <= f_hi` and `|F(x) - F(y)| <= lip |x - y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifiedConstants {
    pub f_lo: f64,
    pub f_hi: f64,
    pub lip: f64,
    /// Half-width of the box `[-b, b]` used for a numerical Lipschitz bound,
    /// when the bound is numerical.
    pub certification_box: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitnessSpec {
    kind: FitnessKind,
    dim: usize,
    constants: CertifiedConstants,
}

impl FitnessSpec {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(param("c", format!("must be positive and finite, got {c}")));
        }
        Ok(Self {
            kind: FitnessKind::Constant,
            dim: 0,
            constants: CertifiedConstants {
                f_lo: c,
                f_hi: c,
                lip: 0.0,
                certification_box: None,
            },
        })
    }

    /// The center fixes the dimension; a one-element center is broadcast by
    /// [`FitnessSpec::from_config`].
    pub fn gaussian_bump(f_lo: f64, f_hi: f64, s: f64, center: Vec<f64>) -> Result<Self> {
        if !(f_lo > 0.0) || !f_lo.is_finite() {
            return Err(param("f_lo", format!("must be positive, got {f_lo}")));
        }
        if !(f_hi >= f_lo) || !f_hi.is_finite() {
            return Err(param("f_hi", format!("must be >= f_lo, got {f_hi}")));
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(param("s", format!("must be positive, got {s}")));
        }
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(param("center", "must be a nonempty finite vector".into()));
        }
        // max_r (f_hi - f_lo) r e^{-r^2/(2s^2)} / s^2 is attained at r = s.
        let lip = (f_hi - f_lo) / (s * std::f64::consts::E.sqrt());
        Ok(Self {
            dim: center.len(),
            kind: FitnessKind::GaussianBump { s, center },
            constants: CertifiedConstants {
                f_lo,
                f_hi,
                lip,
                certification_box: None,
            },
        })
    }

    pub fn reciprocal_rastrigin(f_lo: f64, amplitude: f64, dim: usize) -> Result<Self> {
        if !(f_lo > 0.0 && f_lo < 1.0) {
            return Err(param("f_lo", format!("must lie in (0, 1), got {f_lo}")));
        }
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(param("amplitude", format!("must be >= 0, got {amplitude}")));
        }
        if dim == 0 {
            return Err(param("dim", "must be >= 1".into()));
        }
        let rho = rastrigin_ratio_bound(amplitude, RASTRIGIN_BOX);
        Ok(Self {
            kind: FitnessKind::ReciprocalRastrigin { amplitude },
            dim,
            constants: CertifiedConstants {
                f_lo,
                f_hi: 1.0,
                lip: (1.0 - f_lo) * (dim as f64).sqrt() * rho,
                certification_box: Some(RASTRIGIN_BOX),
            },
        })
    }

    /// Builds a spec for dimension `dim`; constants are always recomputed.
    pub fn from_config(cfg: &FitnessConfig, dim: usize) -> Result<Self> {
        match cfg {
            FitnessConfig::GaussianBump { f_lo, f_hi, s, center } => {
                let center = match center.len() {
                    0 => vec![0.0; dim],
                    1 => vec![center[0]; dim],
                    n if n == dim => center.clone(),
                    n => {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            found: n,
                        })
                    }
                };
                Self::gaussian_bump(*f_lo, *f_hi, *s, center)
            }
            FitnessConfig::ReciprocalRastrigin { f_lo, amplitude } => {
                Self::reciprocal_rastrigin(*f_lo, *amplitude, dim)
            }
            FitnessConfig::Constant { c } => Self::constant(*c),
        }
    }

    pub fn kind(&self) -> &FitnessKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FitnessKind::GaussianBump { .. } => "gaussian_bump",
            FitnessKind::ReciprocalRastrigin { .. } => "reciprocal_rastrigin",
            FitnessKind::Constant => "constant",
        }
    }

    /// Dimension the spec was built for, or `None` for dimension-free kinds.
    pub fn dim(&self) -> Option<usize> {
        (self.dim > 0).then_some(self.dim)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let CertifiedConstants { f_lo, f_hi, .. } = self.constants;
        match &self.kind {
            FitnessKind::Constant => f_lo,
            FitnessKind::GaussianBump { s, center } => {
                debug_assert_eq!(x.len(), center.len());
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                f_lo + (f_hi - f_lo) * (-r2 / (2.0 * s * s)).exp()
            }
            FitnessKind::ReciprocalRastrigin { amplitude } => {
                let r: f64 = x.iter().map(|&t| rastrigin_term(t, *amplitude)).sum();
                f_lo + (1.0 - f_lo) / (1.0 + r)
            }
        }
    }

    pub fn certified_constants(&self) -> CertifiedConstants {
        self.constants
    }

    pub fn f_lo(&self) -> f64 {
        self.constants.f_lo
    }

    pub fn f_hi(&self) -> f64 {
        self.constants.f_hi
    }

    pub fn lip(&self) -> f64 {
        self.constants.lip
    }

    /// `f_hi / f_lo`.
    pub fn kappa(&self) -> f64 {
        self.constants.f_hi / self.constants.f_lo
    }

    pub fn c_f(&self) -> f64 {
        c_f_constant(self.constants.f_lo, self.constants.f_hi, self.constants.lip)
    }
}

fn param(name: &'static str, reason: String) -> Error {
    Error::InvalidParameter { name, reason }
}

/// Selection-stability constant `(1/f_lo)(1 + f_hi/f_lo)(lip + 2 f_hi)`.
pub fn c_f_constant(f_lo: f64, f_hi: f64, lip: f64) -> f64 {
    (1.0 / f_lo) * (1.0 + f_hi / f_lo) * (lip + 2.0 * f_hi)
}

/// One coordinate of the Rastrigin function, `t^2 + A (1 - cos 2 pi t) >= 0`.
fn rastrigin_term(t: f64, a: f64) -> f64 {
    t * t + a * (1.0 - (2.0 * PI * t).cos())
}

fn rastrigin_term_slope(t: f64, a: f64) -> f64 {
    2.0 * t + 2.0 * PI * a * (2.0 * PI * t).sin()
}

/// Upper bound on `sup_t |h'(t)| / (1 + h(t))^2` for the one-dimensional
/// Rastrigin term `h`.
///
/// Inside `[-b, b]` the ratio is evaluated on a dense grid and inflated by the
/// largest observed increment between neighbours. Outside the box
/// `h(t) >= t^2` and `|h'(t)| <= 2|t| + 2 pi A`, which gives a decreasing
/// analytic tail bound evaluated at `b`.
fn rastrigin_ratio_bound(a: f64, b: f64) -> f64 {
    let ratio = |t: f64| rastrigin_term_slope(t, a).abs() / (1.0 + rastrigin_term(t, a)).powi(2);
    let n = RASTRIGIN_GRID_POINTS;
    let step = 2.0 * b / (n - 1) as f64;
    let mut best = 0.0f64;
    let mut max_jump = 0.0f64;
    let mut prev = ratio(-b);
    for k in 0..n {
        let r = ratio(-b + k as f64 * step);
        best = best.max(r);
        max_jump = max_jump.max((r - prev).abs());
        prev = r;
    }
    let tail = (2.0 * b + 2.0 * PI * a) / (1.0 + b * b).powi(2);
    (best + max_jump).max(tail)
}
