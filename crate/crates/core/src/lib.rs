//! Spatial risk measures for the excess damage `(X - u)⁺` of isotropic
//! Gaussian random fields over disks and squares.
//!
//! The risk of a region `A` is the pair `(R0, R1)`: the mean and the
//! variance of the area-averaged excess. `R0` has a closed form; `R1`
//! reduces to a one-dimensional integral of the damage covariance against
//! the pair-distance density of the region. [`simulation`] provides the
//! Monte Carlo estimator used to cross-check every closed form.

pub mod correlation;
pub mod damage;
mod error;
pub mod geometry;
pub mod piemonte;
pub mod quadrature;
pub mod risk;
pub mod simulation;
pub mod special;

pub use correlation::{CorrelationModel, CorrelationSpec, Family};
pub use damage::{damage_cov, damage_cov_rho, r0_standard, DamageKernel, StandardThreshold};
pub use error::{Error, Result};
pub use geometry::{pair_distance_density, sample_pair_distance, Region, RegionSpec, Shape};
pub use quadrature::{integrate, Integral, QuadratureConfig};
pub use risk::{
    check_subadditivity, risk_general, risk_scaled, risk_standard, Marginal, RiskResult, SubadditivityReport,
};
pub use simulation::{
    build_grid, m1_estimate, relative_error_study, sample_fields, FieldSample, FieldSampler, Grid, GridMode,
    M1Estimate, MCConfig, StudyConfig, StudyRow,
};
pub use special::OrthantProbInput;
