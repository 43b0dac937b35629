//! Isotropic correlation families, all parameterized by a scale `θ` so that
//! `ρ(h)` depends on `h / θ` only.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Exponential,
    Gaussian,
    Spherical,
    Cubic,
    Matern,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Exponential,
        Family::Gaussian,
        Family::Spherical,
        Family::Cubic,
        Family::Matern,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Exponential => "exponential",
            Family::Gaussian => "gaussian",
            Family::Spherical => "spherical",
            Family::Cubic => "cubic",
            Family::Matern => "matern",
        }
    }

    /// Spherical and cubic correlations vanish identically beyond `θ`.
    pub fn has_compact_support(self) -> bool {
        matches!(self, Family::Spherical | Family::Cubic)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exponential" => Ok(Family::Exponential),
            "gaussian" => Ok(Family::Gaussian),
            "spherical" => Ok(Family::Spherical),
            "cubic" => Ok(Family::Cubic),
            "matern" | "matérn" => Ok(Family::Matern),
            other => Err(domain("correlation family", format!("unknown family {other:?}"))),
        }
    }
}

/// Serialized form of a [`CorrelationModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationSpec {
    pub family: Family,
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

/// A validated isotropic correlation function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CorrelationSpec", into = "CorrelationSpec")]
pub struct CorrelationModel {
    family: Family,
    theta: f64,
    kappa: f64,
    // 1 / (Γ(κ) 2^{κ-1}), Matérn only.
    matern_norm: f64,
}

// Below this fraction of θ the Matérn correlation is returned as exactly 1.
const MATERN_ORIGIN: f64 = 1e-12;

impl CorrelationModel {
    /// Builds a model; `kappa` is required for Matérn and ignored otherwise.
    pub fn new(family: Family, theta: f64, kappa: Option<f64>) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(domain("correlation model", format!("theta must be positive, got {theta}")));
        }
        let (kappa, matern_norm) = match family {
            Family::Matern => {
                let kappa = kappa.ok_or_else(|| domain("correlation model", "matern requires kappa"))?;
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return Err(domain("correlation model", format!("kappa must be positive, got {kappa}")));
                }
                let norm = 1.0 / (special::gamma(kappa)? * 2f64.powf(kappa - 1.0));
                (kappa, norm)
            }
            _ => (0.0, 0.0),
        };
        Ok(Self {
            family,
            theta,
            kappa,
            matern_norm,
        })
    }

    pub fn exponential(theta: f64) -> Result<Self> {
        Self::new(Family::Exponential, theta, None)
    }

    pub fn gaussian(theta: f64) -> Result<Self> {
        Self::new(Family::Gaussian, theta, None)
    }

    pub fn spherical(theta: f64) -> Result<Self> {
        Self::new(Family::Spherical, theta, None)
    }

    pub fn cubic(theta: f64) -> Result<Self> {
        Self::new(Family::Cubic, theta, None)
    }

    pub fn matern(theta: f64, kappa: f64) -> Result<Self> {
        Self::new(Family::Matern, theta, Some(kappa))
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Matérn smoothness; `None` for the other families.
    pub fn kappa(&self) -> Option<f64> {
        (self.family == Family::Matern).then_some(self.kappa)
    }

    /// Same family and smoothness with a different scale.
    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        Self::new(self.family, theta, self.kappa())
    }

    /// Distance beyond which `ρ ≡ 0`, for compactly supported families.
    pub fn support_radius(&self) -> Option<f64> {
        self.family.has_compact_support().then_some(self.theta)
    }

    /// `ρ(h)`.
    pub fn eval(&self, h: f64) -> Result<f64> {
        if !(h >= 0.0) {
            return Err(domain("correlation eval", format!("distance must be non-negative, got {h}")));
        }
        Ok(self.eval_raw(h))
    }

    /// `ρ(h)` for `h >= 0` without the argument check.
    pub(crate) fn eval_raw(&self, h: f64) -> f64 {
        let t = h / self.theta;
        match self.family {
            Family::Exponential => (-t).exp(),
            Family::Gaussian => (-t * t).exp(),
            Family::Spherical => {
                if t < 1.0 {
                    1.0 - 1.5 * t + 0.5 * t * t * t
                } else {
                    0.0
                }
            }
            Family::Cubic => {
                if t < 1.0 {
                    let t2 = t * t;
                    let t3 = t2 * t;
                    let t5 = t3 * t2;
                    1.0 - 7.0 * t2 + 8.75 * t3 - 3.5 * t5 + 0.75 * t5 * t2
                } else {
                    0.0
                }
            }
            Family::Matern => {
                if t < MATERN_ORIGIN {
                    1.0
                } else if t > 700.0 {
                    0.0
                } else {
                    let k = special::bessel_k_raw(self.kappa, t).unwrap_or(0.0);
                    (self.matern_norm * t.powf(self.kappa) * k).clamp(0.0, 1.0)
                }
            }
        }
    }
}

impl TryFrom<CorrelationSpec> for CorrelationModel {
    type Error = Error;

    fn try_from(spec: CorrelationSpec) -> Result<Self> {
        Self::new(spec.family, spec.theta, spec.kappa)
    }
}

impl From<CorrelationModel> for CorrelationSpec {
    fn from(m: CorrelationModel) -> Self {
        Self {
            family: m.family,
            theta: m.theta,
            kappa: m.kappa(),
        }
    }
}

impl fmt::Display for CorrelationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kappa() {
            Some(k) => write!(f, "{}(theta={}, kappa={})", self.family, self.theta, k),
            None => write!(f, "{}(theta={})", self.family, self.theta),
        }
    }
}
