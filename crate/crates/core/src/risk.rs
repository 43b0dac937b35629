//! The two-component risk measure `(R0, R1)`: the mean and the variance of
//! the area-normalized excess loss over a region.
//!
//! For disks and squares `R1` reduces to a one-dimensional integral of the
//! damage covariance against the pair-distance density. Unions and other
//! shapes go through field simulation.

use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationModel;
use crate::damage::{DamageKernel, StandardThreshold};
use crate::error::{domain, ensure_finite, Result};
use crate::geometry::{density_raw, Region};
use crate::quadrature::{integrate, QuadratureConfig};
use crate::simulation::{jackknife_se, loo_variances, mean_var, region_grid, FieldSampler, MCConfig};

/// Mean and variance of a Gaussian process with non-standard marginals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarginalSpec", into = "MarginalSpec")]
pub struct Marginal {
    mu: f64,
    sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalSpec {
    pub mu: f64,
    pub sigma2: f64,
}

impl Marginal {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        ensure_finite("marginal mean", mu)?;
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(domain("marginal", format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(Self { mu, sigma2 })
    }

    pub fn standard() -> Self {
        Self { mu: 0.0, sigma2: 1.0 }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// `(u - μ) / σ`.
    pub fn standardize(&self, u: f64) -> Result<StandardThreshold> {
        StandardThreshold::new((u - self.mu) / self.sigma())
    }
}

impl TryFrom<MarginalSpec> for Marginal {
    type Error = crate::Error;

    fn try_from(s: MarginalSpec) -> Result<Self> {
        Self::new(s.mu, s.sigma2)
    }
}

impl From<Marginal> for MarginalSpec {
    fn from(m: Marginal) -> Self {
        Self {
            mu: m.mu,
            sigma2: m.sigma2,
        }
    }
}

/// `(R0, R1)` together with the standardized threshold and the quadrature
/// error estimate of `R1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskResult {
    /// Expected normalized loss.
    pub r0: f64,
    /// Variance of the normalized loss.
    pub r1: f64,
    pub u0: f64,
    pub abs_error: f64,
}

// Density kinks plus a geometric ladder θ, 2θ, ..., 64θ so that a
// correlation scale far below the region size is never stepped over.
fn breakpoints(region_support: f64, mut points: Vec<f64>, model_scale: f64) -> Vec<f64> {
    points.extend((0..7).map(|k| model_scale * f64::from(1u32 << k)));
    points.retain(|&p| p > 0.0 && p < region_support);
    points
}

/// `R` for a standard field: `R1 = ∫ G(h, u) f(h) dh` over the support of
/// the region's pair-distance density.
pub fn risk_standard(
    region: &Region,
    model: &CorrelationModel,
    u: StandardThreshold,
    quad: &QuadratureConfig,
) -> Result<RiskResult> {
    let kernel = DamageKernel::new(u);
    let support = region.max_distance();
    let cuts = breakpoints(support, region.density_breakpoints(), model.theta());
    let integral = integrate(
        |h| {
            let f = density_raw(region, h);
            if f == 0.0 {
                0.0
            } else {
                f * kernel.cov(model.eval_raw(h))
            }
        },
        0.0,
        support,
        &cuts,
        quad,
    )?;
    Ok(RiskResult {
        r0: kernel.r0(),
        r1: integral.value,
        u0: u.u(),
        abs_error: integral.abs_error,
    })
}

/// `R` for the homothetic region `λA`, computed as
/// `R1 = ∫ f_A(h) G(λh, u) dh` over the support of `A` itself.
pub fn risk_scaled(
    lambda: f64,
    region: &Region,
    model: &CorrelationModel,
    u: StandardThreshold,
    quad: &QuadratureConfig,
) -> Result<RiskResult> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(domain("risk_scaled", format!("lambda must be positive, got {lambda}")));
    }
    if region.lambda() != 1.0 {
        return Err(domain(
            "risk_scaled",
            format!("region must be unscaled, got lambda = {}", region.lambda()),
        ));
    }
    let kernel = DamageKernel::new(u);
    let support = region.max_distance();
    let cuts = breakpoints(support, region.density_breakpoints(), model.theta() / lambda);
    let integral = integrate(
        |h| {
            let f = density_raw(region, h);
            if f == 0.0 {
                0.0
            } else {
                f * kernel.cov(model.eval_raw(lambda * h))
            }
        },
        0.0,
        support,
        &cuts,
        quad,
    )?;
    Ok(RiskResult {
        r0: kernel.r0(),
        r1: integral.value,
        u0: u.u(),
        abs_error: integral.abs_error,
    })
}

/// `R` for a field with mean `μ` and variance `σ²` and a threshold in data
/// units: `(σ R0(u₀), σ² R1(u₀))` with `u₀ = (u - μ)/σ`.
pub fn risk_general(
    region: &Region,
    model: &CorrelationModel,
    marginal: &Marginal,
    u_raw: f64,
    quad: &QuadratureConfig,
) -> Result<RiskResult> {
    ensure_finite("risk_general threshold", u_raw)?;
    let u0 = marginal.standardize(u_raw)?;
    let std = risk_standard(region, model, u0, quad)?;
    Ok(RiskResult {
        r0: marginal.sigma() * std.r0,
        r1: marginal.sigma2() * std.r1,
        u0: std.u0,
        abs_error: marginal.sigma2() * std.abs_error,
    })
}

/// Monte Carlo comparison of `R1` on two disjoint regions and their union.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub r1_union: f64,
    pub r1_a: f64,
    pub r1_b: f64,
    pub se_union: f64,
    pub se_a: f64,
    pub se_b: f64,
    /// Jackknife standard error of `R1(A) + R1(B) - R1(A∪B)`.
    pub se_margin: f64,
    /// `R1(A∪B) <= R1(A) + R1(B) + 3·se_margin`.
    pub subadditive: bool,
    /// `R1(A∪B) <= min(R1(A), R1(B))`, reported only.
    pub super_subadditive: bool,
}

/// Estimates `R1` on `A`, `B` and `A∪B` from the same simulated fields.
///
/// Each region gets its own `mc.n_points` grid; the union loss is the
/// area-weighted mean of the two region losses.
pub fn check_subadditivity(
    region_a: &Region,
    region_b: &Region,
    model: &CorrelationModel,
    u: StandardThreshold,
    mc: &MCConfig,
) -> Result<SubadditivityReport> {
    mc.validate()?;
    if !region_a.is_disjoint_from(region_b) {
        return Err(domain("check_subadditivity", "regions overlap"));
    }
    let grid_a = region_grid(region_a, mc, 0)?;
    let grid_b = region_grid(region_b, mc, 1)?;
    let union = grid_a.concat(&grid_b);
    let sampler = FieldSampler::new(&union, model, mc)?;
    let samples = sampler.samples(mc.m_reps);

    let na = grid_a.n();
    let (area_a, area_b) = (region_a.area(), region_b.area());
    let wa = area_a / (area_a + area_b);
    let u = u.u();
    let excess_mean = |xs: &[f64]| xs.iter().map(|&x| (x - u).max(0.0)).sum::<f64>() / xs.len() as f64;

    let mut loss_a = Vec::with_capacity(samples.len());
    let mut loss_b = Vec::with_capacity(samples.len());
    let mut loss_u = Vec::with_capacity(samples.len());
    for s in &samples {
        let la = excess_mean(&s.values[..na]);
        let lb = excess_mean(&s.values[na..]);
        loss_a.push(la);
        loss_b.push(lb);
        loss_u.push(wa * la + (1.0 - wa) * lb);
    }

    let r1_a = mean_var(&loss_a).1;
    let r1_b = mean_var(&loss_b).1;
    let r1_union = mean_var(&loss_u).1;
    let (loo_a, loo_b, loo_u) = (loo_variances(&loss_a), loo_variances(&loss_b), loo_variances(&loss_u));
    let margin: Vec<f64> = (0..loo_a.len()).map(|i| loo_a[i] + loo_b[i] - loo_u[i]).collect();
    let se_margin = jackknife_se(&margin);

    Ok(SubadditivityReport {
        r1_union,
        r1_a,
        r1_b,
        se_union: jackknife_se(&loo_u),
        se_a: jackknife_se(&loo_a),
        se_b: jackknife_se(&loo_b),
        se_margin,
        subadditive: r1_union <= r1_a + r1_b + 3.0 * se_margin,
        super_subadditive: r1_union <= r1_a.min(r1_b),
    })
}
