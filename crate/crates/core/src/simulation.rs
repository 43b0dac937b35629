//! Exact Gaussian random field simulation on point grids and the plain
//! Monte Carlo (M1) estimator of the risk measure.
//!
//! Every replicate draws from its own counter-derived ChaCha substream, so
//! results do not depend on how work is spread over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{CorrelationModel, Family};
use crate::damage::StandardThreshold;
use crate::error::{domain, Error, Result};
use crate::geometry::{Region, Shape};
use crate::quadrature::QuadratureConfig;
use crate::risk::risk_standard;

/// Default cap on grid size; the covariance factorization is cubic in it.
pub const MAX_GRID_POINTS: usize = 10_000;

/// Jitter used for the single automatic retry of a failed factorization.
pub const RETRY_JITTER: f64 = 1e-10;

const STREAM_GRID: u64 = 0x6772_6964;
const STREAM_FIELD: u64 = 0x6669_656c;
const STREAM_RUN: u64 = 0x7275_6e73;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent random stream number `index` within `purpose` for a seed.
pub fn substream(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(purpose)));
    rng.set_stream(index);
    rng
}

/// Seed for the `run`-th independent repetition of an experiment.
pub fn run_seed(seed: u64, run: u64) -> u64 {
    splitmix64(splitmix64(seed ^ STREAM_RUN).wrapping_add(run))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridMode {
    /// Centres of equal-area cells.
    Regular,
    /// One uniform point in each equal-area cell.
    StratifiedJittered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MCConfig {
    pub n_points: usize,
    pub m_reps: usize,
    pub seed: u64,
    /// Added to the covariance diagonal before factorization.
    pub jitter: f64,
    pub grid_mode: GridMode,
    pub max_points: usize,
}

impl Default for MCConfig {
    fn default() -> Self {
        Self {
            n_points: 225,
            m_reps: 1000,
            seed: 0,
            jitter: 0.0,
            grid_mode: GridMode::StratifiedJittered,
            max_points: MAX_GRID_POINTS,
        }
    }
}

impl MCConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_reps < 2 {
            return Err(domain("mc config", format!("m_reps must be at least 2, got {}", self.m_reps)));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(domain("mc config", format!("jitter must be non-negative, got {}", self.jitter)));
        }
        if self.n_points > self.max_points {
            return Err(Error::Resource(format!(
                "{} grid points exceed the limit of {}",
                self.n_points, self.max_points
            )));
        }
        Ok(())
    }

    /// Same configuration reseeded for an independent repetition.
    pub fn for_run(&self, run: u64) -> Self {
        Self {
            seed: run_seed(self.seed, run),
            ..*self
        }
    }
}

/// Simulation sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<[f64; 2]>,
}

impl Grid {
    pub fn from_points(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(domain("grid", "a grid needs at least one point"));
        }
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(domain("grid", "coordinates must be finite"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Concatenation of two grids, `self` first.
    pub fn concat(&self, other: &Grid) -> Grid {
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        Grid { points }
    }

    /// Mean distance over distinct pairs.
    pub fn mean_pair_distance(&self) -> f64 {
        let n = self.n();
        let mut total = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let (p, q) = (self.points[i], self.points[j]);
                total += (p[0] - q[0]).hypot(p[1] - q[1]);
            }
        }
        total / (n * (n - 1) / 2) as f64
    }
}

/// `n` points, one per cell of an equal-area partition of the region.
///
/// The unit square is cut into `⌊√n⌋` horizontal bands holding `n` cells in
/// total; a band with `c` cells has height `c / n` and cells of width `1 / c`,
/// so every cell has area `1 / n`. Squares use the unit square scaled to
/// their side, disks its image under the area-preserving map
/// `(a, b) ↦ R√a (cos 2πb, sin 2πb)`.
pub fn build_grid<R: rand::Rng + ?Sized>(region: &Region, n: usize, mode: GridMode, rng: &mut R) -> Result<Grid> {
    build_grid_limited(region, n, mode, rng, MAX_GRID_POINTS)
}

pub(crate) fn build_grid_limited<R: rand::Rng + ?Sized>(
    region: &Region,
    n: usize,
    mode: GridMode,
    rng: &mut R,
    max_points: usize,
) -> Result<Grid> {
    if n < 2 {
        return Err(domain("build_grid", format!("need at least 2 points, got {n}")));
    }
    if n > max_points {
        return Err(Error::Resource(format!("{n} grid points exceed the limit of {max_points}")));
    }
    let bands = (n as f64).sqrt().floor() as usize;
    let base = n / bands;
    let extra = n % bands;
    let s = region.scaled_size();
    let [ox, oy] = region.offset();
    let mut points = Vec::with_capacity(n);
    let mut y0 = 0.0;
    for band in 0..bands {
        let cells = base + usize::from(band < extra);
        let height = cells as f64 / n as f64;
        for cell in 0..cells {
            let (ja, jb) = match mode {
                GridMode::Regular => (0.5, 0.5),
                GridMode::StratifiedJittered => (rng.random::<f64>(), rng.random::<f64>()),
            };
            let a = (cell as f64 + ja) / cells as f64;
            let b = y0 + jb * height;
            let p = match region.shape() {
                Shape::Square => [ox + s * a, oy + s * b],
                Shape::Disk => {
                    let r = s * a.sqrt();
                    let angle = 2.0 * std::f64::consts::PI * b;
                    [ox + r * angle.cos(), oy + r * angle.sin()]
                }
            };
            points.push(p);
        }
        y0 += height;
    }
    Ok(Grid { points })
}

/// One field realization at the grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub values: Vec<f64>,
}

/// Draws exact realizations of a standard isotropic Gaussian field on a
/// grid through the Cholesky factor of its correlation matrix.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    n: usize,
    // Row-major packed lower triangle.
    factor: Vec<f64>,
    seed: u64,
    jitter: f64,
}

impl FieldSampler {
    pub fn new(grid: &Grid, model: &CorrelationModel, cfg: &MCConfig) -> Result<Self> {
        if !(cfg.jitter >= 0.0 && cfg.jitter.is_finite()) {
            return Err(domain("mc config", format!("jitter must be non-negative, got {}", cfg.jitter)));
        }
        let n = grid.n();
        if n > cfg.max_points {
            return Err(Error::Resource(format!(
                "{n} grid points exceed the limit of {}",
                cfg.max_points
            )));
        }
        let pts = grid.points();
        let corr = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0
            } else {
                let (p, q) = (pts[i], pts[j]);
                model.eval_raw((p[0] - q[0]).hypot(p[1] - q[1]))
            }
        });
        let mut jitter = cfg.jitter;
        let chol = match cholesky(&corr, jitter) {
            Some(l) => l,
            None if jitter < RETRY_JITTER => {
                jitter = RETRY_JITTER;
                cholesky(&corr, jitter).ok_or(Error::Factorization { jitter })?
            }
            None => return Err(Error::Factorization { jitter }),
        };
        let mut factor = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for k in 0..=i {
                factor.push(chol[(i, k)]);
            }
        }
        Ok(Self {
            n,
            factor,
            seed: cfg.seed,
            jitter,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Diagonal regularization actually used.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Replicate `index`; the same index always yields the same field.
    pub fn sample(&self, index: u64) -> FieldSample {
        let mut rng = substream(self.seed, STREAM_FIELD, index);
        let z: Vec<f64> = (0..self.n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut values = Vec::with_capacity(self.n);
        let mut row = 0;
        for i in 0..self.n {
            let len = i + 1;
            values.push(dot(&self.factor[row..row + len], &z[..len]));
            row += len;
        }
        FieldSample { values }
    }

    /// Replicates `0..m`, generated in parallel and returned in index order.
    pub fn samples(&self, m: usize) -> Vec<FieldSample> {
        (0..m as u64).into_par_iter().map(|j| self.sample(j)).collect()
    }
}

fn cholesky(corr: &nalgebra::DMatrix<f64>, jitter: f64) -> Option<nalgebra::DMatrix<f64>> {
    let mut m = corr.clone();
    if jitter > 0.0 {
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
    }
    nalgebra::Cholesky::new(m).map(|c| c.unpack())
}

// Fixed-order four-way accumulation.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Builds the grid and sampler for one Monte Carlo experiment, using the
/// grid substream of `cfg.seed`.
pub fn sample_fields(
    region: &Region,
    model: &CorrelationModel,
    cfg: &MCConfig,
) -> Result<(Grid, FieldSampler, Vec<FieldSample>)> {
    cfg.validate()?;
    let mut rng = substream(cfg.seed, STREAM_GRID, 0);
    let grid = build_grid_limited(region, cfg.n_points, cfg.grid_mode, &mut rng, cfg.max_points)?;
    let sampler = FieldSampler::new(&grid, model, cfg)?;
    let samples = sampler.samples(cfg.m_reps);
    Ok((grid, sampler, samples))
}

/// Grid for region number `index` of a multi-region experiment.
pub fn region_grid(region: &Region, cfg: &MCConfig, index: u64) -> Result<Grid> {
    let mut rng = substream(cfg.seed, STREAM_GRID, index);
    build_grid_limited(region, cfg.n_points, cfg.grid_mode, &mut rng, cfg.max_points)
}

/// Monte Carlo estimate of the risk measure and its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct M1Estimate {
    pub r0: f64,
    pub r1: f64,
    /// Standard error of `r0` (sample standard deviation over `√m`).
    pub r0_stderr: f64,
    /// Jackknife standard error of `r1`.
    pub r1_stderr: f64,
    pub m: usize,
}

impl M1Estimate {
    /// Estimate from the per-replicate normalized losses `L_j`.
    pub fn from_losses(losses: &[f64]) -> Result<Self> {
        let m = losses.len();
        if m < 2 {
            return Err(domain("m1_estimate", format!("need at least 2 replicates, got {m}")));
        }
        let (mean, var) = mean_var(losses);
        let loo = loo_variances(losses);
        Ok(Self {
            r0: mean,
            r1: var,
            r0_stderr: (var / m as f64).sqrt(),
            r1_stderr: jackknife_se(&loo),
            m,
        })
    }
}

/// Equal-weight spatial average of `(X(s_i) - u)⁺` for each replicate.
pub fn normalized_losses(samples: &[FieldSample], u: StandardThreshold) -> Vec<f64> {
    let u = u.u();
    samples
        .iter()
        .map(|s| {
            let total: f64 = s.values.iter().map(|&x| (x - u).max(0.0)).sum();
            total / s.values.len() as f64
        })
        .collect()
}

/// M1 estimator: mean and unbiased variance over replicates of the grid
/// average of the excess damage.
pub fn m1_estimate(samples: &[FieldSample], grid: &Grid, region: &Region, u: StandardThreshold) -> Result<M1Estimate> {
    if samples.len() < 2 {
        return Err(domain("m1_estimate", format!("need at least 2 replicates, got {}", samples.len())));
    }
    if let Some(bad) = samples.iter().find(|s| s.values.len() != grid.n()) {
        return Err(domain(
            "m1_estimate",
            format!("sample has {} values for a grid of {} points", bad.values.len(), grid.n()),
        ));
    }
    // Cell-centred points of a region can sit on its boundary up to rounding.
    let slack = 1e-9 * region.scaled_size();
    let outside = grid.points().iter().any(|p| {
        !region.contains(*p)
            && !region.contains([p[0] - slack, p[1] - slack])
            && !region.contains([p[0] + slack, p[1] + slack])
    });
    if outside {
        return Err(domain("m1_estimate", "grid has points outside the region"));
    }
    M1Estimate::from_losses(&normalized_losses(samples, u))
}

/// Mean and unbiased variance, accumulated in index order.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (m - 1.0))
}

/// Leave-one-out unbiased variances.
pub fn loo_variances(xs: &[f64]) -> Vec<f64> {
    let m = xs.len();
    if m < 3 {
        return vec![f64::NAN; m];
    }
    let mf = m as f64;
    let (mean, var) = mean_var(xs);
    let ss = var * (mf - 1.0);
    xs.iter()
        .map(|x| (ss - mf / (mf - 1.0) * (x - mean) * (x - mean)) / (mf - 2.0))
        .collect()
}

/// Jackknife standard error from leave-one-out replicates of a statistic.
pub fn jackknife_se(loo: &[f64]) -> f64 {
    let m = loo.len() as f64;
    let mean = loo.iter().sum::<f64>() / m;
    let ss: f64 = loo.iter().map(|x| (x - mean) * (x - mean)).sum();
    ((m - 1.0) / m * ss).sqrt()
}

/// Parameters of the Monte Carlo versus quadrature comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub region: Region,
    pub families: Vec<Family>,
    pub theta: f64,
    /// Matérn smoothness.
    pub kappa: f64,
    pub probabilities: Vec<f64>,
    pub runs: usize,
    pub mc: MCConfig,
    pub quad: QuadratureConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            region: Region::square(1.0).expect("unit square"),
            families: Family::ALL.to_vec(),
            theta: 0.5,
            kappa: 1.0,
            probabilities: vec![0.75, 0.85, 0.95],
            runs: 100,
            mc: MCConfig::default(),
            quad: QuadratureConfig::default(),
        }
    }
}

/// One M1 run compared with the quadrature value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub family: Family,
    pub p: f64,
    pub run_index: usize,
    pub r1_mc: f64,
    pub r1_quad: f64,
    pub rel_error: f64,
}

/// For each family, repeats the M1 computation `runs` times with
/// independent seeds and grids, and reports the relative error of `R1`
/// against quadrature at each threshold probability. The thresholds of one
/// run share its field samples.
pub fn relative_error_study(cfg: &StudyConfig) -> Result<Vec<StudyRow>> {
    cfg.mc.validate()?;
    if cfg.runs == 0 {
        return Err(domain("study", "runs must be at least 1"));
    }
    let thresholds = cfg
        .probabilities
        .iter()
        .map(|&p| StandardThreshold::from_probability(p))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (fi, &family) in cfg.families.iter().enumerate() {
        let model = CorrelationModel::new(family, cfg.theta, Some(cfg.kappa))?;
        let quad_values = thresholds
            .iter()
            .map(|&u| risk_standard(&cfg.region, &model, u, &cfg.quad).map(|r| r.r1))
            .collect::<Result<Vec<_>>>()?;
        let family_cfg = cfg.mc.for_run(fi as u64);
        let per_run = (0..cfg.runs)
            .into_par_iter()
            .map(|run| {
                let run_cfg = family_cfg.for_run(run as u64);
                let (_, _, samples) = sample_fields(&cfg.region, &model, &run_cfg)?;
                thresholds
                    .iter()
                    .map(|&u| M1Estimate::from_losses(&normalized_losses(&samples, u)).map(|e| e.r1))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (pi, &p) in cfg.probabilities.iter().enumerate() {
            let r1_quad = quad_values[pi];
            for (run, values) in per_run.iter().enumerate() {
                let r1_mc = values[pi];
                rows.push(StudyRow {
                    family,
                    p,
                    run_index: run,
                    r1_mc,
                    r1_quad,
                    rel_error: (r1_mc - r1_quad) / r1_quad,
                });
            }
        }
    }
    Ok(rows)
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Distribution summary of the relative errors in one study cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub family: Family,
    pub p: f64,
    pub runs: usize,
    pub r1_quad: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub median_abs: f64,
    /// Central 99% range of the M1 values.
    pub mc_lo: f64,
    pub mc_hi: f64,
}

impl StudySummary {
    pub fn quad_inside_central_99(&self) -> bool {
        self.mc_lo <= self.r1_quad && self.r1_quad <= self.mc_hi
    }
}

/// Summaries per `(family, p)` in first-appearance order.
pub fn summarize_study(rows: &[StudyRow]) -> Vec<StudySummary> {
    let mut keys: Vec<(Family, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|&(f, p)| f == r.family && p == r.p) {
            keys.push((r.family, r.p));
        }
    }
    keys.into_iter()
        .map(|(family, p)| {
            let cell: Vec<&StudyRow> = rows.iter().filter(|r| r.family == family && r.p == p).collect();
            let sorted = |f: &dyn Fn(&StudyRow) -> f64| {
                let mut v: Vec<f64> = cell.iter().map(|r| f(r)).collect();
                v.sort_by(f64::total_cmp);
                v
            };
            let rel = sorted(&|r| r.rel_error);
            let abs = sorted(&|r| r.rel_error.abs());
            let mc = sorted(&|r| r.r1_mc);
            let q1 = empirical_quantile(&rel, 0.25);
            let q3 = empirical_quantile(&rel, 0.75);
            StudySummary {
                family,
                p,
                runs: cell.len(),
                r1_quad: cell[0].r1_quad,
                median: empirical_quantile(&rel, 0.5),
                q1,
                q3,
                iqr: q3 - q1,
                median_abs: empirical_quantile(&abs, 0.5),
                mc_lo: empirical_quantile(&mc, 0.005),
                mc_hi: empirical_quantile(&mc, 0.995),
            }
        })
        .collect()
}
