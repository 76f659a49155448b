//! Gaussian special functions and the sesquinormal distribution.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{DichotomyError, Result};
use crate::optimize::{golden_min, grid_golden_min};

const SQRT_PI: f64 = 1.772_453_850_905_516;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// erf for |x| < 2 via the non-alternating series 2x/√π e^{−x²} Σ (2x²)^n / (2n+1)!!.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    2.0 * x / SQRT_PI * (-x2).exp() * sum
}

/// e^{x²} erfc(x) for x ≥ 2 by the Laplace continued fraction (modified Lentz).
fn erfcx_cf(x: f64) -> f64 {
    // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..5000 {
        let a = k as f64 * 0.5;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / (SQRT_PI * f)
}

/// Scaled complementary error function e^{x²} erfc(x) for x ≥ 0.
pub fn erfcx(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 2.0 {
        (x * x).exp() * (1.0 - erf_series(x))
    } else {
        erfcx_cf(x)
    }
}

pub fn erf(x: f64) -> f64 {
    if x.abs() < 2.0 {
        erf_series(x)
    } else {
        x.signum() * (1.0 - erfc(x.abs()))
    }
}

pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        2.0 - erfc(-x)
    } else if x < 2.0 {
        1.0 - erf_series(x)
    } else if x > 27.3 {
        0.0
    } else {
        erfcx_cf(x) * (-x * x).exp()
    }
}

pub fn gaussian_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Φ(x).
pub fn gaussian_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// 1 − Φ(x), accurate in the upper tail.
pub fn gaussian_sf(x: f64) -> f64 {
    gaussian_cdf(-x)
}

/// ln Φ(x), finite down to x ≈ −1e150.
pub fn log_gaussian_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if x > 0.0 {
        (-gaussian_sf(x)).ln_1p()
    } else if x > -2.0 * SQRT_2 {
        gaussian_cdf(x).ln()
    } else {
        let z = -x * FRAC_1_SQRT_2;
        (0.5 * erfcx(z)).ln() - z * z
    }
}

/// Φ⁻¹(p) for p ∈ (0, 1).
pub fn gaussian_icdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DichotomyError::Domain(format!("gaussian_icdf needs p in (0,1), got {p}")));
    }
    if p > 0.5 {
        Ok(-lower_icdf(1.0 - p))
    } else {
        Ok(lower_icdf(p))
    }
}

/// −Φ⁻¹(q) = Φ⁻¹(1 − q) without forming 1 − q.
pub fn gaussian_isf(q: f64) -> Result<f64> {
    gaussian_icdf(q).map(|z| -z)
}

/// Φ⁻¹ from ln p, usable below the smallest positive double.
pub fn gaussian_icdf_log(log_p: f64) -> Result<f64> {
    if !(log_p < 0.0) {
        return Err(DichotomyError::Domain(format!("log probability must be negative, got {log_p}")));
    }
    if log_p > -std::f64::consts::LN_2 {
        return Ok(-lower_icdf(-log_p.exp_m1()));
    }
    Ok(newton_log(start_from_log(log_p), log_p))
}

// starting value from Abramowitz & Stegun 26.2.23 (|error| < 4.5e-4), then Newton on ln Φ
fn start_from_log(log_p: f64) -> f64 {
    let t = (-2.0 * log_p).sqrt();
    let num = 2.515_517 + t * (0.802_853 + t * 0.010_328);
    let den = 1.0 + t * (1.432_788 + t * (0.189_269 + t * 0.001_308));
    -(t - num / den)
}

fn lower_icdf(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let lp = p.ln();
    newton_log(start_from_log(lp), lp)
}

fn newton_log(mut x: f64, log_p: f64) -> f64 {
    for _ in 0..50 {
        let lc = log_gaussian_cdf(x);
        // d/dx ln Φ = φ/Φ
        let ratio = (-0.5 * x * x - LN_SQRT_2PI - lc).exp();
        let step = (lc - log_p) / ratio;
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1e-300) {
            break;
        }
    }
    x
}

pub fn logit(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DichotomyError::Domain(format!("logit needs p in (0,1), got {p}")));
    }
    Ok((p / (1.0 - p)).ln())
}

/// 1/(1 + e^{−x}); ±∞ map to 1 and 0.
pub fn logit_inv(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln of logit_inv(x) = −ln(1 + e^{−x}).
pub fn log_logit_inv(x: f64) -> f64 {
    if x > 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Variance-ratio parameter ν of the sesquinormal family; +∞ is allowed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SesquinormalParams {
    pub nu: f64,
}

impl SesquinormalParams {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_nan() || nu < 0.0 {
            return Err(DichotomyError::Domain(format!("nu must be >= 0, got {nu}")));
        }
        Ok(SesquinormalParams { nu })
    }
}

const NU_ONE_BAND: f64 = 1e-12;

/// Φ(a) − Φ(b) for a ≥ b, through upper tails when both are positive.
fn normal_interval(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        (gaussian_sf(b) - gaussian_sf(a)).max(0.0)
    } else {
        (gaussian_cdf(a) - gaussian_cdf(b)).max(0.0)
    }
}

/// Interval endpoints (a, b) with S_ν(μ) = Φ(a) − Φ(b), for 0 < ν < 1.
fn sesqui_endpoints(nu: f64, mu: f64) -> (f64, f64) {
    let ln_nu = if (nu - 1.0).abs() < 0.5 { (nu - 1.0).ln_1p() } else { nu.ln() };
    let sn = nu.sqrt();
    let r = (mu * mu + (nu - 1.0) * ln_nu).max(0.0).sqrt();
    if mu >= 0.0 {
        let a = (mu * mu + nu * ln_nu) / (mu + sn * r);
        let b = (ln_nu - mu * mu) / (sn * mu + r);
        (a, b)
    } else {
        let a = (mu - sn * r) / (1.0 - nu);
        let b = (sn * mu - r) / (1.0 - nu);
        (a, b)
    }
}

/// S_ν(μ).
pub fn sesquinormal_cdf(p: SesquinormalParams, mu: f64) -> f64 {
    let nu = p.nu;
    if nu.is_nan() || mu.is_nan() {
        return f64::NAN;
    }
    if nu == f64::INFINITY {
        // S_∞(μ) = lim S_0(μ/√ν)
        return 0.5;
    }
    if nu == 0.0 {
        return gaussian_cdf(mu);
    }
    if (nu - 1.0).abs() <= NU_ONE_BAND {
        return if mu > 0.0 { 1.0 - 2.0 * gaussian_cdf(-0.5 * mu) } else { 0.0 };
    }
    if nu > 1.0 {
        return sesquinormal_cdf(SesquinormalParams { nu: 1.0 / nu }, mu / nu.sqrt());
    }
    let (a, b) = sesqui_endpoints(nu, mu);
    normal_interval(a, b)
}

/// ln S_ν(μ), usable where S_ν(μ) underflows.
pub fn log_sesquinormal_cdf(p: SesquinormalParams, mu: f64) -> f64 {
    let nu = p.nu;
    if nu == 0.0 {
        return log_gaussian_cdf(mu);
    }
    if nu == f64::INFINITY {
        return -std::f64::consts::LN_2;
    }
    if (nu - 1.0).abs() <= NU_ONE_BAND {
        return if mu > 0.0 { (-2.0 * gaussian_cdf(-0.5 * mu)).ln_1p() } else { f64::NEG_INFINITY };
    }
    if nu > 1.0 {
        return log_sesquinormal_cdf(SesquinormalParams { nu: 1.0 / nu }, mu / nu.sqrt());
    }
    let (a, b) = sesqui_endpoints(nu, mu);
    if b > 0.0 {
        return normal_interval(a, b).ln();
    }
    let la = log_gaussian_cdf(a);
    let lb = log_gaussian_cdf(b);
    la + (-(lb - la).exp()).ln_1p()
}

/// 1 − S_ν(μ), accurate in the upper tail.
pub fn sesquinormal_sf(p: SesquinormalParams, mu: f64) -> f64 {
    let nu = p.nu;
    if nu == 0.0 {
        return gaussian_sf(mu);
    }
    if nu == f64::INFINITY {
        return 0.5;
    }
    if (nu - 1.0).abs() <= NU_ONE_BAND {
        return if mu > 0.0 { 2.0 * gaussian_cdf(-0.5 * mu) } else { 1.0 };
    }
    if nu > 1.0 {
        return sesquinormal_sf(SesquinormalParams { nu: 1.0 / nu }, mu / nu.sqrt());
    }
    let (a, b) = sesqui_endpoints(nu, mu);
    // 1 − Φ(a) + Φ(b)
    gaussian_sf(a) + gaussian_cdf(b)
}

/// S_ν^{-1}(ε) = min over x ∈ (ε, 1) of √ν Φ⁻¹(x) − Φ⁻¹(x − ε).
pub fn sesquinormal_icdf(p: SesquinormalParams, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(DichotomyError::Domain(format!("eps must lie in (0,1), got {eps}")));
    }
    let nu = p.nu;
    if nu == 0.0 {
        return gaussian_icdf(eps);
    }
    if !nu.is_finite() {
        return Err(DichotomyError::Domain("inverse cdf undefined for nu = infinity".into()));
    }
    Ok(icdf_search(nu, eps, 64).1)
}

/// Same as `sesquinormal_icdf` but also returns the optimal x.
pub fn sesquinormal_icdf_argmin(p: SesquinormalParams, eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps < 1.0) || !(p.nu > 0.0 && p.nu.is_finite()) {
        return Err(DichotomyError::Domain(format!("need 0 < nu < inf and eps in (0,1), got {} {eps}", p.nu)));
    }
    let (u, v) = icdf_search(p.nu, eps, 64);
    Ok((eps + (1.0 - eps) * logit_inv(u), v))
}

/// Objective of the icdf minimization in the variable u with x = ε + (1−ε)·logistic(u).
pub fn sesquinormal_icdf_objective(nu: f64, eps: f64, u: f64) -> f64 {
    let w = 1.0 - eps;
    let upper = w * logit_inv(-u); // 1 − x
    let lower = w * logit_inv(u); // x − ε
    let z_x = if upper < 0.5 {
        -lower_icdf(upper)
    } else {
        lower_icdf(1.0 - upper)
    };
    let z_lower = if lower <= 0.5 {
        lower_icdf(lower)
    } else {
        -lower_icdf(eps + w * logit_inv(-u))
    };
    nu.sqrt() * z_x - z_lower
}

fn icdf_search(nu: f64, eps: f64, grid: usize) -> (f64, f64) {
    let f = |u: f64| sesquinormal_icdf_objective(nu, eps, u);
    // the optimum sits near 1 − x ~ ε for small ε, so widen the upper end
    let hi = 60.0 + 2.0 * (1.0 / eps).ln();
    let (u, v) = grid_golden_min(f, -60.0, hi, grid, 1e-13);
    // the grid spacing is ~1.9; polish in a narrow window around the estimate
    let mut g = |x: f64| sesquinormal_icdf_objective(nu, eps, x);
    let (u2, v2) = golden_min(&mut g, u - 0.5, u + 0.5, 1e-14);
    if v2 < v {
        (u2, v2)
    } else {
        (u, v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailSide {
    Low,
    High,
}

/// Leading-order tail: ln S_ν(−μ) ≈ −½(μ/(1−√ν))² or ln(1 − S_ν(μ)) ≈ −½(μ/(1+√ν))².
pub fn sesquinormal_tail_expansion(p: SesquinormalParams, mu: f64, side: TailSide) -> f64 {
    let sn = p.nu.sqrt();
    match side {
        TailSide::Low => -0.5 * (mu / (1.0 - sn)).powi(2),
        TailSide::High => -0.5 * (mu / (1.0 + sn)).powi(2),
    }
}

/// Leading-order inverse tail |1 − √ν| √(2 ln 1/ε) (sign of S^{-1} is negative for small ε).
pub fn sesquinormal_icdf_tail(p: SesquinormalParams, eps: f64, side: TailSide) -> f64 {
    let sn = p.nu.sqrt();
    match side {
        TailSide::Low => -(1.0 - sn).abs() * (2.0 * (1.0 / eps).ln()).sqrt(),
        TailSide::High => (1.0 + sn) * (2.0 * (1.0 / eps).ln()).sqrt(),
    }
}

/// Density of N(μ, ν) at x.
pub fn normal_pdf(x: f64, mu: f64, nu: f64) -> f64 {
    (-(x - mu).powi(2) / (2.0 * nu)).exp() / (2.0 * PI * nu).sqrt()
}

/// Cdf of N(μ, ν) at x.
pub fn normal_cdf(x: f64, mu: f64, nu: f64) -> f64 {
    if nu == 0.0 {
        return if x >= mu { 1.0 } else { 0.0 };
    }
    gaussian_cdf((x - mu) / nu.sqrt())
}
