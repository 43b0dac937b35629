//! Scalar special functions: the standard normal density, survival function
//! and quantile, the upper-orthant bivariate normal probability, the first
//! truncated bivariate normal moments, and the modified Bessel function of
//! the second kind.
//!
//! Every public function validates its arguments and returns [`Result`].
//! The `*_raw` kernels skip validation and are used on hot paths once the
//! caller has established the preconditions.
#![allow(clippy::excessive_precision)]

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{domain, ensure_finite, Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_94;
const TWO_PI: f64 = 2.0 * PI;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

#[inline]
pub(crate) fn phi_raw(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub(crate) fn sf_raw(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

#[inline]
pub(crate) fn cdf_raw(x: f64) -> f64 {
    sf_raw(-x)
}

/// Standard normal density.
pub fn phi(x: f64) -> Result<f64> {
    ensure_finite("phi", x).map(phi_raw)
}

/// Standard normal survival function `1 - Φ(x)`, evaluated through `erfc` so
/// the upper tail keeps full relative precision.
pub fn sf(x: f64) -> Result<f64> {
    ensure_finite("sf", x).map(sf_raw)
}

/// Standard normal distribution function.
pub fn cdf(x: f64) -> Result<f64> {
    ensure_finite("cdf", x).map(cdf_raw)
}

/// Standard normal quantile function.
pub fn quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("quantile", format!("probability must lie in (0, 1), got {p}")));
    }
    Ok(quantile_raw(p))
}

pub(crate) fn quantile_raw(p: f64) -> f64 {
    if p > 0.5 {
        // 1 - p is exact for p in [0.5, 1].
        -lower_quantile(1.0 - p)
    } else {
        lower_quantile(p)
    }
}

// Quantile for p <= 1/2, polished with Halley steps on the lower-tail
// residual so the result is accurate to the last few ulps.
fn lower_quantile(p: f64) -> f64 {
    let std = Normal::standard();
    let mut x = std.inverse_cdf(p);
    if !x.is_finite() {
        return x;
    }
    for _ in 0..2 {
        let density = phi_raw(x);
        if density == 0.0 {
            break;
        }
        let t = (sf_raw(-x) - p) / density;
        x -= t / (1.0 + 0.5 * x * t);
    }
    x
}

/// Thresholds and correlation of an upper-orthant probability query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthantProbInput {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl OrthantProbInput {
    pub fn new(u: f64, v: f64, w: f64) -> Self {
        Self { u, v, w }
    }
}

/// `P(X₁ > u, X₂ > v)` for a standard bivariate normal pair with correlation
/// `w`. The degenerate correlations `w = ±1` return their limits.
pub fn bvn_upper(input: OrthantProbInput) -> Result<f64> {
    let OrthantProbInput { u, v, w } = input;
    ensure_finite("bvn_upper", u)?;
    ensure_finite("bvn_upper", v)?;
    if !(-1.0..=1.0).contains(&w) {
        return Err(domain("bvn_upper", format!("correlation must lie in [-1, 1], got {w}")));
    }
    Ok(bvn_upper_raw(u, v, w))
}

/// `E[X₁ 1{X₁ > u, X₂ > v}]`, i.e. `ℓ(u, v, w)·m₁₀`.
pub fn trunc_m10(u: f64, v: f64, w: f64) -> Result<f64> {
    check_moment_args("trunc_m10", u, v, w)?;
    Ok(trunc_m10_raw(u, v, w))
}

/// `E[X₁X₂ 1{X₁ > u, X₂ > v}]`, i.e. `ℓ(u, v, w)·m₁₁`.
pub fn trunc_m11(u: f64, v: f64, w: f64) -> Result<f64> {
    check_moment_args("trunc_m11", u, v, w)?;
    Ok(trunc_m11_raw(u, v, w))
}

fn check_moment_args(what: &'static str, u: f64, v: f64, w: f64) -> Result<()> {
    ensure_finite(what, u)?;
    ensure_finite(what, v)?;
    if !(w > -1.0 && w < 1.0) {
        return Err(domain(what, format!("correlation must lie in (-1, 1), got {w}")));
    }
    Ok(())
}

pub(crate) fn trunc_m10_raw(u: f64, v: f64, w: f64) -> f64 {
    let s = ((1.0 - w) * (1.0 + w)).sqrt();
    phi_raw(u) * sf_raw((v - w * u) / s) + w * phi_raw(v) * sf_raw((u - w * v) / s)
}

pub(crate) fn trunc_m11_raw(u: f64, v: f64, w: f64) -> f64 {
    let s2 = (1.0 - w) * (1.0 + w);
    let s = s2.sqrt();
    let q = (u * u - 2.0 * w * u * v + v * v) / s2;
    w * bvn_upper_raw(u, v, w)
        + w * u * phi_raw(u) * sf_raw((v - w * u) / s)
        + w * v * phi_raw(v) * sf_raw((u - w * v) / s)
        + s / TWO_PI * (-0.5 * q).exp()
}

// Gauss-Legendre (weight, node) pairs on [-1, 1], negative half only.
const GL6: [(f64, f64); 3] = [
    (0.1713244923791705e+00, -0.9324695142031522e+00),
    (0.3607615730481384e+00, -0.6612093864662647e+00),
    (0.4679139345726904e+00, -0.2386191860831970e+00),
];

const GL12: [(f64, f64); 6] = [
    (0.4717533638651177e-01, -0.9815606342467191e+00),
    (0.1069393259953183e+00, -0.9041172563704750e+00),
    (0.1600783285433464e+00, -0.7699026741943050e+00),
    (0.2031674267230659e+00, -0.5873179542866171e+00),
    (0.2334925365383547e+00, -0.3678314989981802e+00),
    (0.2491470458134029e+00, -0.1252334085114692e+00),
];

const GL20: [(f64, f64); 10] = [
    (0.1761400713915212e-01, -0.9931285991850949e+00),
    (0.4060142980038694e-01, -0.9639719272779138e+00),
    (0.6267204833410906e-01, -0.9122344282513259e+00),
    (0.8327674157670475e-01, -0.8391169718222188e+00),
    (0.1019301198172404e+00, -0.7463319064601508e+00),
    (0.1181945319615184e+00, -0.6360536807265150e+00),
    (0.1316886384491766e+00, -0.5108670019508271e+00),
    (0.1420961093183821e+00, -0.3737060887154196e+00),
    (0.1491729864726037e+00, -0.2277858511416451e+00),
    (0.1527533871307259e+00, -0.7652652113349733e-01),
];

/// Upper-orthant probability without argument checks.
///
/// Drezner-Wesolowsky integration over the correlation path with the
/// Genz refinements for `|w|` close to one.
pub(crate) fn bvn_upper_raw(u: f64, v: f64, w: f64) -> f64 {
    if w >= 1.0 {
        return sf_raw(u.max(v));
    }
    if w <= -1.0 {
        return (sf_raw(u) - cdf_raw(v)).max(0.0);
    }
    let rule: &[(f64, f64)] = if w.abs() < 0.3 {
        &GL6
    } else if w.abs() < 0.75 {
        &GL12
    } else {
        &GL20
    };

    let h = u;
    let mut k = v;
    let mut hk = h * k;
    let mut bvn = 0.0;

    if w.abs() < 0.925 {
        let hs = 0.5 * (h * h + k * k);
        let asr = w.asin();
        for &(weight, node) in rule {
            for sign in [1.0, -1.0] {
                let sn = (0.5 * asr * (sign * node + 1.0)).sin();
                bvn += weight * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        bvn = bvn * asr / (2.0 * TWO_PI) + sf_raw(h) * sf_raw(k);
        return bvn.clamp(0.0, 1.0);
    }

    if w < 0.0 {
        k = -k;
        hk = -hk;
    }
    let as_ = (1.0 - w) * (1.0 + w);
    let mut a = as_.sqrt();
    let bs = (h - k) * (h - k);
    let c = (4.0 - hk) / 8.0;
    let d = (12.0 - hk) / 16.0;
    bvn = a
        * (-0.5 * (bs / as_ + hk)).exp()
        * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
    if hk > -160.0 {
        let b = bs.sqrt();
        bvn -= (-0.5 * hk).exp()
            * TWO_PI.sqrt()
            * cdf_raw(-b / a)
            * b
            * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a *= 0.5;
    for &(weight, node) in rule {
        let xs = (a * (node + 1.0)).powi(2);
        let rs = (1.0 - xs).sqrt();
        bvn += a
            * weight
            * ((-bs / (2.0 * xs) - hk / (1.0 + rs)).exp() / rs
                - (-0.5 * (bs / xs + hk)).exp() * (1.0 + c * xs * (1.0 + d * xs)));
        let xs = as_ * (1.0 - node).powi(2) / 4.0;
        let rs = (1.0 - xs).sqrt();
        bvn += a
            * weight
            * (-0.5 * (bs / xs + hk)).exp()
            * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs - (1.0 + c * xs * (1.0 + d * xs)));
    }
    bvn = -bvn / TWO_PI;

    if w > 0.0 {
        bvn += sf_raw(h.max(k));
    } else {
        bvn = -bvn;
        if k > h {
            bvn += if h < 0.0 {
                cdf_raw(k) - cdf_raw(h)
            } else {
                sf_raw(h) - sf_raw(k)
            };
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// Gamma function.
pub fn gamma(x: f64) -> Result<f64> {
    ensure_finite("gamma", x)?;
    if x <= 0.0 && x == x.floor() {
        return Err(domain("gamma", format!("pole at {x}")));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// Modified Bessel function of the second kind `K_κ(x)` for real order
/// `κ > 0` and `x > 0`.
pub fn bessel_k(kappa: f64, x: f64) -> Result<f64> {
    ensure_finite("bessel_k", kappa)?;
    ensure_finite("bessel_k", x)?;
    if kappa <= 0.0 {
        return Err(domain("bessel_k", format!("order must be positive, got {kappa}")));
    }
    if x <= 0.0 {
        return Err(domain("bessel_k", format!("argument must be positive, got {x}")));
    }
    bessel_k_raw(kappa, x)
}

const BESSEL_MAX_ITER: usize = 10_000;

/// `K_ν(x)` for `ν >= 0`, `x > 0`: Temme's series for `x <= 2`, Steed's
/// continued fraction above, then forward recurrence in the order.
pub(crate) fn bessel_k_raw(nu: f64, x: f64) -> Result<f64> {
    let steps = (nu + 0.5).floor();
    let mu = nu - steps;
    let (mut k_mu, mut k_mu1) = if x <= 2.0 {
        temme_series(mu, x)?
    } else {
        steed_cf2(mu, x)?
    };
    let two_over_x = 2.0 / x;
    for i in 1..=(steps as u64) {
        let next = (mu + i as f64) * two_over_x * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
    }
    Ok(k_mu)
}

// Power series of 1/Γ(z) about 0 (Abramowitz & Stegun 6.1.34).
const RECIP_GAMMA: [f64; 26] = [
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
    -0.0000012504934821,
    0.0000011330272320,
    -0.0000002056338417,
    0.0000000061160950,
    0.0000000050020075,
    -0.0000000011812746,
    0.0000000001043427,
    0.0000000000077823,
    -0.0000000000036968,
    0.0000000000005100,
    -0.0000000000000206,
    -0.0000000000000054,
    0.0000000000000014,
    0.0000000000000001,
];

/// Returns `(γ₁, γ₂, 1/Γ(1+μ), 1/Γ(1-μ))` for `|μ| <= 1/2`, where
/// `γ₁ = (1/Γ(1-μ) - 1/Γ(1+μ)) / 2μ` and `γ₂ = (1/Γ(1-μ) + 1/Γ(1+μ)) / 2`.
/// The odd and even parts of the series are summed separately, so `γ₁` has
/// no cancellation as `μ → 0`.
pub(crate) fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let mu2 = mu * mu;
    // 1/Γ(1+μ) = Σ_{k>=1} c_k μ^{k-1}
    let mut even = 0.0; // Σ c_{2j+1} μ^{2j}
    let mut odd = 0.0; //  Σ c_{2j} μ^{2j-2}
    for j in (0..RECIP_GAMMA.len() / 2).rev() {
        even = even * mu2 + RECIP_GAMMA[2 * j];
        odd = odd * mu2 + RECIP_GAMMA[2 * j + 1];
    }
    let recip_plus = even + mu * odd;
    let recip_minus = even - mu * odd;
    (-odd, even, recip_plus, recip_minus)
}

fn temme_series(mu: f64, x: f64) -> Result<(f64, f64)> {
    let half_x = 0.5 * x;
    let pimu = PI * mu;
    let fact = if pimu.abs() < f64::EPSILON {
        1.0
    } else {
        pimu / pimu.sin()
    };
    let d = -half_x.ln();
    let e = mu * d;
    let fact2 = if e.abs() < f64::EPSILON { 1.0 } else { e.sinh() / e };
    let (gam1, gam2, recip_plus, recip_minus) = temme_gammas(mu);
    debug_assert!((gam1 + EULER_GAMMA).abs() < 0.1);

    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / recip_plus;
    let mut q = 0.5 / (ee * recip_minus);
    let mut c = 1.0;
    let dd = half_x * half_x;
    let mut sum1 = p;
    let mu2 = mu * mu;
    for i in 1..BESSEL_MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * f64::EPSILON {
            return Ok((sum, sum1 * 2.0 / x));
        }
    }
    Err(Error::Convergence("bessel_k series"))
}

fn steed_cf2(mu: f64, x: f64) -> Result<(f64, f64)> {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu * mu;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..BESSEL_MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            let h = a1 * h;
            let k_mu = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
            let k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
            return Ok((k_mu, k_mu1));
        }
    }
    Err(Error::Convergence("bessel_k continued fraction"))
}
