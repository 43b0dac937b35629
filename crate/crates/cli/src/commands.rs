//! The five subcommands.

use std::fmt::Write as _;

use spatial_risk::simulation::summarize_study;
use spatial_risk::{
    check_subadditivity, damage_cov, m1_estimate, piemonte, relative_error_study, risk_general, risk_scaled,
    sample_fields, CorrelationModel, Family, QuadratureConfig, StandardThreshold,
};

use crate::config::{
    Axis, CurveConfig, EstimateConfig, ExperimentConfig, McConfig, PiemonteConfig, Quantity, RiskConfig,
    SubadditivityConfig, ValidateConfig,
};
use crate::table::{format_float, Kind, Table};
use crate::{validate, Cli, CliError, Command, Output};

pub const RISK_COLUMNS: [(&str, Kind); 4] = [
    ("r0", Kind::Float),
    ("r1", Kind::Float),
    ("u0", Kind::Float),
    ("abs_error", Kind::Float),
];

pub const CURVE_COLUMNS: [(&str, Kind); 5] = [
    ("family", Kind::Text),
    ("quantity", Kind::Text),
    ("axis", Kind::Text),
    ("x", Kind::Float),
    ("value", Kind::Float),
];

pub const ESTIMATE_COLUMNS: [(&str, Kind); 9] = [
    ("r0_mc", Kind::Float),
    ("r0_stderr", Kind::Float),
    ("r1_mc", Kind::Float),
    ("r1_stderr", Kind::Float),
    ("m", Kind::Int),
    ("n_points", Kind::Int),
    ("r0_quad", Kind::Float),
    ("r1_quad", Kind::Float),
    ("z", Kind::Float),
];

pub const STUDY_COLUMNS: [(&str, Kind); 6] = [
    ("family", Kind::Text),
    ("p", Kind::Float),
    ("run_index", Kind::Int),
    ("r1_mc", Kind::Float),
    ("r1_quad", Kind::Float),
    ("rel_error", Kind::Float),
];

pub const SUBADDITIVITY_COLUMNS: [(&str, Kind); 9] = [
    ("r1_union", Kind::Float),
    ("r1_a", Kind::Float),
    ("r1_b", Kind::Float),
    ("se_union", Kind::Float),
    ("se_a", Kind::Float),
    ("se_b", Kind::Float),
    ("se_margin", Kind::Float),
    ("subadditive", Kind::Text),
    ("super_subadditive", Kind::Text),
];

pub const PIEMONTE_COLUMNS: [(&str, Kind); 4] = [
    ("quantity", Kind::Text),
    ("computed", Kind::Float),
    ("stderr", Kind::Float),
    ("published", Kind::Float),
];

fn required<'a>(cli: &Cli, config: &'a Option<ExperimentConfig>) -> Result<&'a ExperimentConfig, CliError> {
    config
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("`{}` needs --config <path>", cli.command.name())))
}

fn quad_with(cli: &Cli, quad: &QuadratureConfig) -> QuadratureConfig {
    match cli.tolerance {
        Some(tol) => QuadratureConfig { tol, ..*quad },
        None => *quad,
    }
}

pub fn dispatch(cli: &Cli, config: Option<ExperimentConfig>) -> Result<Output, CliError> {
    match cli.command {
        Command::Risk => match required(cli, &config)? {
            ExperimentConfig::Risk(c) => risk(cli, c),
            _ => unreachable!("record kind checked by the caller"),
        },
        Command::Curve => match required(cli, &config)? {
            ExperimentConfig::Curve(c) => curve(cli, c),
            _ => unreachable!("record kind checked by the caller"),
        },
        Command::Mc => match required(cli, &config)? {
            ExperimentConfig::Mc(McConfig::Estimate(c)) => estimate(cli, c),
            ExperimentConfig::Mc(McConfig::Study(c)) => study(cli, c),
            ExperimentConfig::Mc(McConfig::Subadditivity(c)) => subadditivity(cli, c),
            _ => unreachable!("record kind checked by the caller"),
        },
        Command::Validate { corrupt_tolerance } => {
            let mut c = match config {
                Some(ExperimentConfig::Validate(c)) => c,
                _ => ValidateConfig::default(),
            };
            if let Some(seed) = cli.seed {
                c.seed = seed;
            }
            c.quadrature = quad_with(cli, &c.quadrature);
            validate::run(&c, corrupt_tolerance)
        }
        Command::Piemonte => {
            let c = match config {
                Some(ExperimentConfig::Piemonte(c)) => c,
                _ => PiemonteConfig::default(),
            };
            piemonte_report(cli, &c)
        }
    }
}

pub fn risk(cli: &Cli, c: &RiskConfig) -> Result<Output, CliError> {
    let quad = quad_with(cli, &c.quadrature);
    let u = c.threshold.level(&c.marginal)?;
    let r = risk_general(&c.region, &c.correlation, &c.marginal, u, &quad)?;
    let mut report = String::new();
    writeln!(report, "r0        {}", format_float(r.r0)).unwrap();
    writeln!(report, "r1        {}", format_float(r.r1)).unwrap();
    writeln!(report, "u0        {}", format_float(r.u0)).unwrap();
    writeln!(report, "abs_error {}", format_float(r.abs_error)).unwrap();
    let mut table = Table::new(&RISK_COLUMNS);
    table.push(vec![r.r0.into(), r.r1.into(), r.u0.into(), r.abs_error.into()]);
    Ok(Output {
        report,
        table: Some(table),
        table_to_stdout: false,
        failure: None,
    })
}

fn curve_value(c: &CurveConfig, quad: &QuadratureConfig, family: Family, x: f64) -> Result<f64, CliError> {
    let f = c.fixed;
    let (h, theta, p, lambda) = match c.axis {
        Axis::H => (x, f.theta, f.p, f.lambda),
        Axis::Theta => (f.h, x, f.p, f.lambda),
        Axis::P => (f.h, f.theta, x, f.lambda),
        Axis::Lambda => (f.h, f.theta, f.p, x),
    };
    let model = CorrelationModel::new(family, theta, Some(c.kappa))?;
    let u = StandardThreshold::from_probability(p)?;
    Ok(match c.quantity() {
        Quantity::DamageCov => damage_cov(h, u, &model)?,
        Quantity::Risk => risk_scaled(lambda, &c.region, &model, u, quad)?.r1,
    })
}

/// Sweeps for the damage covariance and `R1` plots; a `lambda` sweep of
/// `R1` must come out non-increasing for every family.
pub fn curve(cli: &Cli, c: &CurveConfig) -> Result<Output, CliError> {
    let quad = quad_with(cli, &c.quadrature);
    let xs = c.values.values();
    let mut table = Table::new(&CURVE_COLUMNS);
    let mut report = String::new();
    let quantity = c.quantity();
    for &family in &c.families {
        let values = xs
            .iter()
            .map(|&x| curve_value(c, &quad, family, x))
            .collect::<Result<Vec<_>, _>>()?;
        if quantity == Quantity::Risk && c.axis == Axis::Lambda {
            let mut order: Vec<usize> = (0..xs.len()).collect();
            order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
            if let Some(w) = order.windows(2).find(|w| values[w[1]] > values[w[0]] + 1e-12) {
                return Err(CliError::Validation(format!(
                    "{}: r1 increases from lambda = {} to {}",
                    family.name(),
                    xs[w[0]],
                    xs[w[1]]
                )));
            }
        }
        for (&x, &v) in xs.iter().zip(&values) {
            table.push(vec![
                family.name().into(),
                quantity.name().into(),
                c.axis.name().into(),
                x.into(),
                v.into(),
            ]);
        }
        writeln!(report, "# {}: {} points", family.name(), xs.len()).unwrap();
    }
    Ok(Output {
        report: if cli.out.is_some() { report } else { String::new() },
        table: Some(table),
        table_to_stdout: true,
        failure: None,
    })
}

pub fn estimate(cli: &Cli, c: &EstimateConfig) -> Result<Output, CliError> {
    let mut mc = c.mc;
    if let Some(seed) = cli.seed {
        mc.seed = seed;
    }
    let quad = quad_with(cli, &c.quadrature);
    let u_raw = c.threshold.level(&c.marginal)?;
    let u = c.threshold.standard(&c.marginal)?;
    let q = risk_general(&c.region, &c.correlation, &c.marginal, u_raw, &quad)?;
    let (grid, _, samples) = sample_fields(&c.region, &c.correlation, &mc)?;
    let est = m1_estimate(&samples, &grid, &c.region, u)?;
    let (s, s2) = (c.marginal.sigma(), c.marginal.sigma2());
    let (r0, r0_se, r1, r1_se) = (s * est.r0, s * est.r0_stderr, s2 * est.r1, s2 * est.r1_stderr);
    let z = (r1 - q.r1) / r1_se;
    let mut report = String::new();
    writeln!(report, "r0  mc {} ± {}  quadrature {}", format_float(r0), format_float(r0_se), format_float(q.r0)).unwrap();
    writeln!(report, "r1  mc {} ± {}  quadrature {}", format_float(r1), format_float(r1_se), format_float(q.r1)).unwrap();
    writeln!(report, "z   {}", format_float(z)).unwrap();
    let mut table = Table::new(&ESTIMATE_COLUMNS);
    table.push(vec![
        r0.into(),
        r0_se.into(),
        r1.into(),
        r1_se.into(),
        est.m.into(),
        grid.n().into(),
        q.r0.into(),
        q.r1.into(),
        z.into(),
    ]);
    Ok(Output {
        report,
        table: Some(table),
        table_to_stdout: false,
        failure: None,
    })
}

pub fn study(cli: &Cli, c: &spatial_risk::StudyConfig) -> Result<Output, CliError> {
    let mut c = c.clone();
    if let Some(seed) = cli.seed {
        c.mc.seed = seed;
    }
    c.quad = quad_with(cli, &c.quad);
    let rows = relative_error_study(&c)?;
    let mut table = Table::new(&STUDY_COLUMNS);
    for r in &rows {
        table.push(vec![
            r.family.name().into(),
            r.p.into(),
            r.run_index.into(),
            r.r1_mc.into(),
            r.r1_quad.into(),
            r.rel_error.into(),
        ]);
    }
    let mut report = String::new();
    writeln!(report, "family       p     r1_quad                  median_rel  iqr_rel     in_central_99").unwrap();
    for s in summarize_study(&rows) {
        writeln!(
            report,
            "{:<12} {:<5} {} {:+.6}  {:.6}    {}",
            s.family.name(),
            s.p,
            format_float(s.r1_quad),
            s.median,
            s.iqr,
            s.quad_inside_central_99()
        )
        .unwrap();
    }
    Ok(Output {
        report,
        table: Some(table),
        table_to_stdout: false,
        failure: None,
    })
}

pub fn subadditivity(cli: &Cli, c: &SubadditivityConfig) -> Result<Output, CliError> {
    let mut mc = c.mc;
    if let Some(seed) = cli.seed {
        mc.seed = seed;
    }
    let u = c.threshold.standard(&spatial_risk::Marginal::standard())?;
    let rep = check_subadditivity(&c.region_a, &c.region_b, &c.correlation, u, &mc)?;
    let mut report = String::new();
    writeln!(report, "r1(A∪B) {} ± {}", format_float(rep.r1_union), format_float(rep.se_union)).unwrap();
    writeln!(report, "r1(A)   {} ± {}", format_float(rep.r1_a), format_float(rep.se_a)).unwrap();
    writeln!(report, "r1(B)   {} ± {}", format_float(rep.r1_b), format_float(rep.se_b)).unwrap();
    writeln!(report, "sub-additive within 3 se: {}", rep.subadditive).unwrap();
    writeln!(report, "r1(A∪B) <= min(r1(A), r1(B)): {}", rep.super_subadditive).unwrap();
    let mut table = Table::new(&SUBADDITIVITY_COLUMNS);
    table.push(vec![
        rep.r1_union.into(),
        rep.r1_a.into(),
        rep.r1_b.into(),
        rep.se_union.into(),
        rep.se_a.into(),
        rep.se_b.into(),
        rep.se_margin.into(),
        rep.subadditive.into(),
        rep.super_subadditive.into(),
    ]);
    Ok(Output {
        report,
        table: Some(table),
        table_to_stdout: false,
        failure: None,
    })
}

pub fn piemonte_report(cli: &Cli, c: &PiemonteConfig) -> Result<Output, CliError> {
    let mut mc = c.mc;
    if let Some(seed) = cli.seed {
        mc.seed = seed;
    }
    let quad = quad_with(cli, &c.quadrature);
    let r = piemonte::report(&mc, &quad)?;
    let half = 1.959_963_984_540_054 * r.r1_mc_stderr;
    let mut report = String::new();
    writeln!(report, "quantity          computed                  published").unwrap();
    writeln!(report, "u0                {}   {}", format_float(r.u0), r.published_u0).unwrap();
    writeln!(report, "r0                {}   {}", format_float(r.r0), r.published_r0).unwrap();
    writeln!(report, "r1 (quadrature)   {}   {}", format_float(r.r1_quad), r.published_r1).unwrap();
    writeln!(
        report,
        "r1 (monte carlo)  {}   95% CI [{}, {}]",
        format_float(r.r1_mc),
        format_float(r.r1_mc - half),
        format_float(r.r1_mc + half)
    )
    .unwrap();
    writeln!(report, "quadrature vs monte carlo: |z| = {:.3}", r.mc_z_score()).unwrap();
    writeln!(report, "upper bound sigma^2 G(0, u0) = {}", format_float(r.r1_upper_bound)).unwrap();
    let mut table = Table::new(&PIEMONTE_COLUMNS);
    table.push(vec!["u0".into(), r.u0.into(), None.into(), r.published_u0.into()]);
    table.push(vec!["r0".into(), r.r0.into(), None.into(), r.published_r0.into()]);
    table.push(vec!["r1_quadrature".into(), r.r1_quad.into(), r.r1_quad_error.into(), r.published_r1.into()]);
    table.push(vec!["r1_monte_carlo".into(), r.r1_mc.into(), r.r1_mc_stderr.into(), None.into()]);
    table.push(vec!["r1_upper_bound".into(), r.r1_upper_bound.into(), None.into(), None.into()]);
    Ok(Output {
        report,
        table: Some(table),
        table_to_stdout: false,
        failure: None,
    })
}
