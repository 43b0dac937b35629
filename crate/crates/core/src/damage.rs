//! Pointwise moments of the excess damage `(X(s) - u)⁺` of a standard
//! isotropic Gaussian field: its mean and the damage covariance `G(h, u)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationModel;
use crate::error::{domain, ensure_finite, Result};
use crate::special::{bvn_upper_raw, cdf_raw, phi_raw, quantile, sf_raw};

/// Threshold on the standardized scale, optionally remembering the
/// probability it was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardThreshold {
    u: f64,
    p: Option<f64>,
}

impl StandardThreshold {
    pub fn new(u: f64) -> Result<Self> {
        Ok(Self {
            u: ensure_finite("threshold", u)?,
            p: None,
        })
    }

    /// `u = Φ⁻¹(p)`.
    pub fn from_probability(p: f64) -> Result<Self> {
        Ok(Self {
            u: quantile(p)?,
            p: Some(p),
        })
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn probability(&self) -> Option<f64> {
        self.p
    }
}

/// `E[(X - u)⁺] = φ(u) - u Φ̄(u)` for standard normal `X`.
pub fn r0_standard(u: StandardThreshold) -> f64 {
    DamageKernel::new(u).r0()
}

/// Damage covariance `G(h, u) = Cov((X(s) - u)⁺, (X(s + h) - u)⁺)`.
pub fn damage_cov(h: f64, u: StandardThreshold, model: &CorrelationModel) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(domain("damage_cov", format!("distance must be non-negative, got {h}")));
    }
    Ok(DamageKernel::new(u).cov(model.eval_raw(h)))
}

/// Damage covariance as a function of the correlation `ρ ∈ [-1, 1]`.
pub fn damage_cov_rho(rho: f64, u: StandardThreshold) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(domain("damage_cov_rho", format!("correlation must lie in [-1, 1], got {rho}")));
    }
    Ok(DamageKernel::new(u).cov(rho))
}

// Within this distance of ±1 the correlation is treated as degenerate.
const DEGENERATE_RHO: f64 = 1e-12;

/// Threshold-dependent constants of `G`, cached for repeated evaluation
/// inside quadrature loops.
#[derive(Debug, Clone, Copy)]
pub struct DamageKernel {
    u: f64,
    phi_u: f64,
    sf_u: f64,
    r0: f64,
}

impl DamageKernel {
    pub fn new(threshold: StandardThreshold) -> Self {
        let u = threshold.u();
        let phi_u = phi_raw(u);
        let sf_u = sf_raw(u);
        Self {
            u,
            phi_u,
            sf_u,
            r0: phi_u - u * sf_u,
        }
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    /// Mean excess `E[(X - u)⁺]`.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// `Var((X - u)⁺)`, the value of `G` at `ρ = 1`.
    pub fn variance(&self) -> f64 {
        let u = self.u;
        (1.0 + u * u) * self.sf_u - u * self.phi_u - self.r0 * self.r0
    }

    /// `G` at correlation `rho`; `rho` must lie in `[-1, 1]`.
    pub fn cov(&self, rho: f64) -> f64 {
        let u = self.u;
        if rho == 0.0 {
            return 0.0;
        }
        if 1.0 - rho < DEGENERATE_RHO {
            return self.variance();
        }
        if 1.0 + rho < DEGENERATE_RHO {
            let orthant = (self.sf_u - cdf_raw(u)).max(0.0);
            let cross = if u < 0.0 { 2.0 * u * self.phi_u } else { 0.0 };
            return (u * u - 1.0) * orthant - cross - self.r0 * self.r0;
        }
        let orthant = bvn_upper_raw(u, u, rho);
        // (1-ρ)/sqrt(1-ρ²) written without the 0/0 at ρ → 1.
        let shifted = u * ((1.0 - rho) / (1.0 + rho)).sqrt();
        let root = ((1.0 - rho) * (1.0 + rho)).sqrt();
        let phi_sq = (-u * u / (1.0 + rho)).exp() / (2.0 * PI);
        (rho + u * u) * orthant - 2.0 * u * self.phi_u * sf_raw(shifted) + root * phi_sq - self.r0 * self.r0
    }
}
