//! PM₁₀ case study: log-concentration field over a 10 km square with a
//! Matérn (κ = 1, θ = 100 km) correlation, against the 50 µg/m³ legal level.

use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationModel;
use crate::error::Result;
use crate::geometry::Region;
use crate::quadrature::QuadratureConfig;
use crate::risk::{risk_general, Marginal};
use crate::simulation::{m1_estimate, sample_fields, MCConfig};

pub const MU: f64 = 3.69;
pub const SIGMA2: f64 = 1.2762;
pub const THETA_KM: f64 = 100.0;
pub const KAPPA: f64 = 1.0;
pub const SIDE_KM: f64 = 10.0;
/// Legal daily limit in µg/m³; the threshold is its logarithm.
pub const LEGAL_LEVEL: f64 = 50.0;

/// Values published for this configuration.
pub const PUBLISHED_U0: f64 = 0.1965;
pub const PUBLISHED_R0: f64 = 0.3483621;
pub const PUBLISHED_R1: f64 = 0.4119461;

#[derive(Debug, Clone, Copy)]
pub struct PiemonteSetup {
    pub region: Region,
    pub model: CorrelationModel,
    pub marginal: Marginal,
    pub u_raw: f64,
}

pub fn setup() -> PiemonteSetup {
    PiemonteSetup {
        region: Region::square(SIDE_KM).expect("valid region"),
        model: CorrelationModel::matern(THETA_KM, KAPPA).expect("valid model"),
        marginal: Marginal::new(MU, SIGMA2).expect("valid marginal"),
        u_raw: LEGAL_LEVEL.ln(),
    }
}

/// Monte Carlo settings used for the cross-check.
pub fn default_mc(seed: u64) -> MCConfig {
    MCConfig {
        n_points: 225,
        m_reps: 2000,
        seed,
        ..MCConfig::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiemonteReport {
    pub u0: f64,
    pub r0: f64,
    pub r1_quad: f64,
    pub r1_quad_error: f64,
    pub r1_mc: f64,
    pub r1_mc_stderr: f64,
    /// `σ² G(0, u₀)`, an upper bound for `R1` under non-negative correlation.
    pub r1_upper_bound: f64,
    pub published_u0: f64,
    pub published_r0: f64,
    pub published_r1: f64,
}

impl PiemonteReport {
    /// `|r1_quad - r1_mc|` in units of the Monte Carlo standard error.
    pub fn mc_z_score(&self) -> f64 {
        (self.r1_quad - self.r1_mc).abs() / self.r1_mc_stderr
    }
}

/// Quadrature value of the risk measure; no simulation.
pub fn quadrature(quad: &QuadratureConfig) -> Result<crate::risk::RiskResult> {
    let s = setup();
    risk_general(&s.region, &s.model, &s.marginal, s.u_raw, quad)
}

pub fn report(mc: &MCConfig, quad: &QuadratureConfig) -> Result<PiemonteReport> {
    let s = setup();
    let q = risk_general(&s.region, &s.model, &s.marginal, s.u_raw, quad)?;
    let u0 = s.marginal.standardize(s.u_raw)?;
    let (grid, _, samples) = sample_fields(&s.region, &s.model, mc)?;
    let est = m1_estimate(&samples, &grid, &s.region, u0)?;
    let sigma2 = s.marginal.sigma2();
    Ok(PiemonteReport {
        u0: q.u0,
        r0: q.r0,
        r1_quad: q.r1,
        r1_quad_error: q.abs_error,
        r1_mc: sigma2 * est.r1,
        r1_mc_stderr: sigma2 * est.r1_stderr,
        r1_upper_bound: sigma2 * crate::damage::DamageKernel::new(u0).variance(),
        published_u0: PUBLISHED_U0,
        published_r0: PUBLISHED_R0,
        published_r1: PUBLISHED_R1,
    })
}
