//! Cross-module oracle suite behind `spatial-risk validate`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use spatial_risk::special::{bessel_k, bvn_upper, trunc_m10, trunc_m11};
use spatial_risk::{
    check_subadditivity, integrate, m1_estimate, pair_distance_density, risk_scaled, risk_standard, sample_fields,
    CorrelationModel, Family, MCConfig, OrthantProbInput, QuadratureConfig, Region, StandardThreshold,
};

use crate::config::ValidateConfig;
use crate::table::{Kind, Table};
use crate::{CliError, Output};

pub const COLUMNS: [(&str, Kind); 5] = [
    ("check", Kind::Text),
    ("measured", Kind::Float),
    ("expected", Kind::Float),
    ("tolerance", Kind::Float),
    ("pass", Kind::Text),
];

/// `|measured - expected| <= tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
}

impl Check {
    fn new(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            expected,
            tolerance,
        }
    }

    pub fn pass(&self) -> bool {
        (self.measured - self.expected).abs() <= self.tolerance
    }
}

fn density_checks(quad: &QuadratureConfig, out: &mut Vec<Check>) -> Result<(), CliError> {
    let cfg = QuadratureConfig { tol: quad.tol.min(1e-12), ..*quad };
    for r in [0.5, 1.0, 3.0] {
        for region in [Region::disk(r)?, Region::square(r)?] {
            let total = integrate(
                |h| pair_distance_density(&region, h).unwrap_or(f64::NAN),
                0.0,
                region.max_distance(),
                &region.density_breakpoints(),
                &cfg,
            )?;
            out.push(Check::new(
                format!("density_normalization_{}_{r}", region.shape()),
                total.value,
                1.0,
                1e-10,
            ));
        }
    }
    Ok(())
}

fn orthant_integral(u: f64, v: f64, w: f64, g: impl Fn(f64, f64) -> f64) -> Result<f64, CliError> {
    let s = (1.0 - w * w).sqrt();
    let density = |x: f64, y: f64| (-(x * x - 2.0 * w * x * y + y * y) / (2.0 * s * s)).exp() / (2.0 * PI * s);
    let inner = QuadratureConfig::with_tol(1e-14);
    let outer = QuadratureConfig::with_tol(1e-12);
    let value = integrate(
        |x| {
            let c = w * x;
            integrate(|y| g(x, y) * density(x, y), v, v.max(c) + 12.0 * s, &[c, c + s, c - s], &inner)
                .map_or(f64::NAN, |r| r.value)
        },
        u,
        u.max(0.0) + 12.0,
        &[0.0, 1.0, -1.0],
        &outer,
    )?
    .value;
    if value.is_nan() {
        return Err(spatial_risk::Error::Convergence("orthant oracle").into());
    }
    Ok(value)
}

fn orthant_check(seed: u64, out: &mut Vec<Check>) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (u, v, w) = (
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-0.99..0.99),
        );
        let pairs = [
            (bvn_upper(OrthantProbInput::new(u, v, w))?, orthant_integral(u, v, w, |_, _| 1.0)?),
            (trunc_m10(u, v, w)?, orthant_integral(u, v, w, |x, _| x)?),
            (trunc_m11(u, v, w)?, orthant_integral(u, v, w, |x, y| x * y)?),
        ];
        for (a, b) in pairs {
            worst = worst.max((a - b).abs());
        }
    }
    out.push(Check::new("orthant_moments_vs_2d_quadrature", worst, 0.0, 1e-8));
    Ok(())
}

fn special_checks(out: &mut Vec<Check>) -> Result<(), CliError> {
    out.push(Check::new("bessel_k1_at_1", bessel_k(1.0, 1.0)?, 0.601_907_230_197_234_6, 1e-9));
    let mut worst: f64 = 0.0;
    for theta in [0.1, 0.5, 3.0] {
        let m = CorrelationModel::matern(theta, 0.5)?;
        let e = CorrelationModel::exponential(theta)?;
        for i in 0..100 {
            let h = i as f64 * 0.05 * theta;
            worst = worst.max((m.eval(h)? - e.eval(h)?).abs());
        }
    }
    out.push(Check::new("matern_half_vs_exponential", worst, 0.0, 1e-10));
    Ok(())
}

fn m1_checks(seed: u64, quad: &QuadratureConfig, out: &mut Vec<Check>) -> Result<(), CliError> {
    let square = Region::square(1.0)?;
    let u = StandardThreshold::from_probability(0.75)?;
    for (k, family) in Family::ALL.into_iter().enumerate() {
        let model = CorrelationModel::new(family, 0.5, Some(1.0))?;
        let q = risk_standard(&square, &model, u, quad)?;
        let mc = MCConfig {
            seed,
            ..MCConfig::default()
        }
        .for_run(k as u64);
        let (grid, _, samples) = sample_fields(&square, &model, &mc)?;
        let est = m1_estimate(&samples, &grid, &square, u)?;
        out.push(Check::new(
            format!("m1_vs_quadrature_{}", family.name()),
            (est.r1 - q.r1) / est.r1_stderr,
            0.0,
            3.0,
        ));
        out.push(Check::new(
            format!("m1_expected_loss_{}", family.name()),
            (est.r0 - q.r0) / est.r0_stderr,
            0.0,
            3.0,
        ));
    }
    Ok(())
}

fn axiom_checks(seed: u64, quad: &QuadratureConfig, out: &mut Vec<Check>) -> Result<(), CliError> {
    let u = StandardThreshold::from_probability(0.75)?;
    let exp = CorrelationModel::exponential(0.5)?;
    let a = Region::square(1.0)?;
    let mc = MCConfig {
        n_points: 100,
        m_reps: 2000,
        seed,
        ..MCConfig::default()
    };
    for (name, shift) in [("adjacent", 1.0), ("distant", 20.0)] {
        let rep = check_subadditivity(&a, &a.translated([shift, 0.0]), &exp, u, &mc)?;
        let excess = (rep.r1_union - rep.r1_a - rep.r1_b).max(0.0) / rep.se_margin;
        out.push(Check::new(format!("subadditivity_{name}"), excess, 0.0, 3.0));
    }
    let here = risk_standard(&a, &exp, u, quad)?.r1;
    let there = risk_standard(&a.translated([7.0, -3.0]), &exp, u, quad)?.r1;
    out.push(Check::new("translation_invariance", there - here, 0.0, 0.0));

    for family in [Family::Exponential, Family::Gaussian, Family::Matern] {
        let model = CorrelationModel::new(family, 0.5, Some(1.0))?;
        let mut rise: f64 = 0.0;
        let mut prev = f64::INFINITY;
        for side in [0.5, 1.0, 2.0, 4.0] {
            let r = risk_standard(&Region::square(side)?, &model, u, quad)?.r1;
            rise = rise.max(r - prev);
            prev = r;
        }
        out.push(Check::new(format!("anti_monotonicity_{}", family.name()), rise.max(0.0), 0.0, 1e-12));
    }
    for family in Family::ALL {
        let model = CorrelationModel::new(family, 0.5, Some(1.0))?;
        let mut rise: f64 = 0.0;
        let mut prev = f64::INFINITY;
        for i in 0..20 {
            let lambda = 0.1 * 100f64.powf(i as f64 / 19.0);
            let r = risk_scaled(lambda, &a, &model, u, quad)?.r1;
            rise = rise.max(r - prev);
            prev = r;
        }
        out.push(Check::new(format!("lambda_monotonicity_{}", family.name()), rise.max(0.0), 0.0, 1e-12));
    }
    Ok(())
}

/// Runs every check. With `corrupt` set all tolerances become negative,
/// which must make the suite fail.
pub fn checks(cfg: &ValidateConfig, corrupt: bool) -> Result<Vec<Check>, CliError> {
    let quad = cfg.quadrature;
    let mut out = Vec::new();
    density_checks(&quad, &mut out)?;
    orthant_check(cfg.seed, &mut out)?;
    special_checks(&mut out)?;
    m1_checks(cfg.seed, &quad, &mut out)?;
    axiom_checks(cfg.seed, &quad, &mut out)?;
    if corrupt {
        for c in &mut out {
            c.tolerance = -1.0;
        }
    }
    Ok(out)
}

pub fn report_table(checks: &[Check]) -> Table {
    let mut t = Table::new(&COLUMNS);
    for c in checks {
        t.push(vec![
            c.name.as_str().into(),
            c.measured.into(),
            c.expected.into(),
            c.tolerance.into(),
            c.pass().into(),
        ]);
    }
    t
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn run(cfg: &ValidateConfig, corrupt: bool) -> Result<Output, CliError> {
    let checks = checks(cfg, corrupt)?;
    let table = report_table(&checks);
    let csv = table.to_csv()?;
    let mut report = String::new();
    for c in &checks {
        writeln!(
            report,
            "{} {:<36} measured {:>13.6e} expected {:>13.6e} tol {:.1e}",
            if c.pass() { "ok  " } else { "FAIL" },
            c.name,
            c.measured,
            c.expected,
            c.tolerance
        )
        .unwrap();
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass()).map(|c| c.name.as_str()).collect();
    writeln!(report, "{} of {} checks passed", checks.len() - failed.len(), checks.len()).unwrap();
    writeln!(report, "report sha256 {}", sha256_hex(csv.as_bytes())).unwrap();
    Ok(Output {
        report,
        table: Some(table),
        table_to_stdout: false,
        failure: (!failed.is_empty()).then(|| failed.join(", ")),
    })
}
