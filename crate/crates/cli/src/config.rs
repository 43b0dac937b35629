//! JSON experiment configurations: one top-level record per command.

use std::path::Path;

use serde::Deserialize;
use spatial_risk::special::quantile;
use spatial_risk::{
    CorrelationModel, Family, MCConfig, Marginal, QuadratureConfig, Region, StandardThreshold, StudyConfig,
};

use crate::error::{config_err, CliError};

/// Threshold given either directly or as a marginal probability.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "ThresholdSpec")]
pub enum Threshold {
    /// `u` in data units.
    Level(f64),
    /// `u = μ + σ Φ⁻¹(p)`.
    Probability(f64),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdSpec {
    u: Option<f64>,
    p: Option<f64>,
}

impl TryFrom<ThresholdSpec> for Threshold {
    type Error = String;

    fn try_from(s: ThresholdSpec) -> Result<Self, String> {
        match (s.u, s.p) {
            (Some(u), None) if u.is_finite() => Ok(Threshold::Level(u)),
            (Some(u), None) => Err(format!("u must be finite, got {u}")),
            (None, Some(p)) if p > 0.0 && p < 1.0 => Ok(Threshold::Probability(p)),
            (None, Some(p)) => Err(format!("p must lie strictly between 0 and 1, got {p}")),
            _ => Err("give exactly one of `u` or `p`".into()),
        }
    }
}

impl Threshold {
    /// Threshold in data units for the given marginal.
    pub fn level(&self, marginal: &Marginal) -> Result<f64, CliError> {
        match *self {
            Threshold::Level(u) => Ok(u),
            Threshold::Probability(p) => Ok(marginal.mu() + marginal.sigma() * quantile(p)?),
        }
    }

    /// Threshold on the standard scale for the given marginal.
    pub fn standard(&self, marginal: &Marginal) -> Result<StandardThreshold, CliError> {
        match *self {
            Threshold::Probability(p) => Ok(StandardThreshold::from_probability(p)?),
            Threshold::Level(u) => Ok(marginal.standardize(u)?),
        }
    }
}

fn standard_marginal() -> Marginal {
    Marginal::standard()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskConfig {
    pub region: Region,
    pub correlation: CorrelationModel,
    #[serde(default = "standard_marginal")]
    pub marginal: Marginal,
    pub threshold: Threshold,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    H,
    Theta,
    P,
    Lambda,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::H => "h",
            Axis::Theta => "theta",
            Axis::P => "p",
            Axis::Lambda => "lambda",
        }
    }
}

/// Swept quantity: the damage covariance `G` or the variance `R1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    DamageCov,
    Risk,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::DamageCov => "damage_cov",
            Quantity::Risk => "r1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    List(Vec<f64>),
    Range { from: f64, to: f64, count: usize },
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Sweep::List(ref v) => v.clone(),
            Sweep::Range { from, to, count } => match count {
                0 => Vec::new(),
                1 => vec![from],
                _ => (0..count)
                    .map(|i| from + (to - from) * i as f64 / (count - 1) as f64)
                    .collect(),
            },
        }
    }
}

/// Values held fixed while another parameter is swept.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fixed {
    pub h: f64,
    pub theta: f64,
    pub p: f64,
    pub lambda: f64,
}

impl Default for Fixed {
    fn default() -> Self {
        Self {
            h: 0.3,
            theta: 0.5,
            p: 0.75,
            lambda: 1.0,
        }
    }
}

fn all_families() -> Vec<Family> {
    Family::ALL.to_vec()
}

fn one() -> f64 {
    1.0
}

fn unit_square() -> Region {
    Region::square(1.0).expect("unit square")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub axis: Axis,
    /// Defaults to `risk` for the `lambda` axis and `damage_cov` otherwise.
    pub quantity: Option<Quantity>,
    pub values: Sweep,
    #[serde(default = "all_families")]
    pub families: Vec<Family>,
    /// Matérn smoothness.
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default)]
    pub fixed: Fixed,
    #[serde(default = "unit_square")]
    pub region: Region,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

impl CurveConfig {
    pub fn quantity(&self) -> Quantity {
        self.quantity.unwrap_or(match self.axis {
            Axis::Lambda => Quantity::Risk,
            _ => Quantity::DamageCov,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub region: Region,
    pub correlation: CorrelationModel,
    #[serde(default = "standard_marginal")]
    pub marginal: Marginal,
    pub threshold: Threshold,
    #[serde(default)]
    pub mc: MCConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubadditivityConfig {
    pub region_a: Region,
    pub region_b: Region,
    pub correlation: CorrelationModel,
    /// On the standard scale.
    pub threshold: Threshold,
    #[serde(default)]
    pub mc: MCConfig,
}

/// Monte Carlo experiments.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum McConfig {
    /// One M1 estimate next to the quadrature value.
    Estimate(EstimateConfig),
    /// Repeated M1 runs against quadrature, per family and threshold.
    Study(StudyConfig),
    Subadditivity(SubadditivityConfig),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub seed: u64,
    pub quadrature: QuadratureConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PiemonteConfig {
    pub mc: MCConfig,
    pub quadrature: QuadratureConfig,
}

impl Default for PiemonteConfig {
    fn default() -> Self {
        Self {
            mc: spatial_risk::piemonte::default_mc(0),
            quadrature: QuadratureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentConfig {
    Risk(RiskConfig),
    Curve(CurveConfig),
    Mc(McConfig),
    Validate(ValidateConfig),
    Piemonte(PiemonteConfig),
}

impl ExperimentConfig {
    pub fn command(&self) -> &'static str {
        match self {
            ExperimentConfig::Risk(_) => "risk",
            ExperimentConfig::Curve(_) => "curve",
            ExperimentConfig::Mc(_) => "mc",
            ExperimentConfig::Validate(_) => "validate",
            ExperimentConfig::Piemonte(_) => "piemonte",
        }
    }

    /// Checks the values serde cannot: tolerances, replicate counts, sweeps.
    pub fn validate(&self) -> Result<(), CliError> {
        match self {
            ExperimentConfig::Risk(c) => c.quadrature.validate().map_err(config_err),
            ExperimentConfig::Curve(c) => {
                c.quadrature.validate().map_err(config_err)?;
                if c.values.values().is_empty() {
                    return Err(CliError::Config("curve.values: the sweep is empty".into()));
                }
                if c.quantity() == Quantity::DamageCov && c.axis == Axis::Lambda {
                    return Err(CliError::Config(
                        "curve.axis: `lambda` sweeps need quantity `risk`".into(),
                    ));
                }
                if c.quantity() == Quantity::Risk && c.axis == Axis::H {
                    return Err(CliError::Config("curve.axis: `h` sweeps need quantity `damage_cov`".into()));
                }
                Ok(())
            }
            ExperimentConfig::Mc(McConfig::Estimate(c)) => {
                c.quadrature.validate().map_err(config_err)?;
                c.mc.validate().map_err(config_err)
            }
            ExperimentConfig::Mc(McConfig::Study(c)) => {
                c.quad.validate().map_err(config_err)?;
                c.mc.validate().map_err(config_err)
            }
            ExperimentConfig::Mc(McConfig::Subadditivity(c)) => c.mc.validate().map_err(config_err),
            ExperimentConfig::Validate(c) => c.quadrature.validate().map_err(config_err),
            ExperimentConfig::Piemonte(c) => {
                c.quadrature.validate().map_err(config_err)?;
                c.mc.validate().map_err(config_err)
            }
        }
    }
}

/// Parses a configuration; errors name the offending key and position.
pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("at `{path}`: {}", e.into_inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
