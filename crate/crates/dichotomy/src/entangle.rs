//! Pure-state LOCC transformation rates, from Schmidt coefficients.
//!
//! A Schmidt vector p behaves like the dichotomy (p, uniform) with D_α = log d − H_α(p), so the
//! dichotomy formulas apply with entropies in place of divergences.

use serde::{Deserialize, Serialize};

use crate::divergence::{classical_entropies, renyi_entropy, RenyiOrder};
use crate::error::{DichotomyError, Result};
use crate::optimize::{bisect, golden_min, grid_golden_min};
use crate::rates::{curve_below, BoundKind, Moments, RateResult, Regime, VertexCurve};

/// Schmidt coefficients, sorted descending, zeros removed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SchmidtVector {
    probs: Vec<f64>,
}

impl SchmidtVector {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(DichotomyError::Domain("Schmidt coefficients must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(DichotomyError::BadTrace(total));
        }
        probs.retain(|&p| p > 0.0);
        probs.sort_by(|a, b| b.total_cmp(a));
        Ok(SchmidtVector { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Schmidt rank.
    pub fn local_dim(&self) -> usize {
        self.probs.len()
    }

    pub fn entropy(&self) -> f64 {
        classical_entropies(&self.probs).h
    }

    pub fn variance(&self) -> f64 {
        classical_entropies(&self.probs).v
    }

    pub fn renyi(&self, alpha: RenyiOrder) -> f64 {
        renyi_entropy(&self.probs, alpha)
    }

    fn uniform(&self) -> Vec<f64> {
        vec![1.0 / self.local_dim() as f64; self.local_dim()]
    }

    fn moments_with(&self, other: &SchmidtVector) -> Moments {
        Moments { d1: self.entropy(), v1: self.variance(), d2: other.entropy(), v2: other.variance() }
    }

    /// Γ_μ of (p, uniform): inf/sup over orders of ∓(log d − H_t) − (t/(1−t))μ, by branch.
    fn gamma(&self, mu: f64) -> f64 {
        let ln_d = (self.local_dim() as f64).ln();
        let d = |o: RenyiOrder| ln_d - self.renyi(o);
        if self.local_dim() == 1 {
            return -mu.max(0.0);
        }
        let threshold = -self.probs.last().unwrap().ln();
        if mu > threshold {
            return -mu - d(RenyiOrder::PosInf);
        }
        if mu < -threshold {
            return -mu + d(RenyiOrder::NegInf);
        }
        let (pts, tol) = (33, 1e-12);
        if mu > 0.0 {
            let f = |u: f64| {
                if u <= 0.0 {
                    -d(RenyiOrder::PosInf) - mu
                } else if u >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    -d(RenyiOrder::Finite(1.0 / u)) - mu / (1.0 - u)
                }
            };
            crate::optimize::grid_golden_max(f, 0.0, 1.0, pts, tol).1
        } else if mu > -d_reverse(&self.probs) {
            let f = |t: f64| if t >= 1.0 { f64::INFINITY } else { -d(RenyiOrder::Finite(t)) - t / (1.0 - t) * mu };
            grid_golden_min(f, 0.0, 1.0, pts, tol).1
        } else {
            let f = |u: f64| {
                if u >= 1.0 {
                    d(RenyiOrder::NegInf) - mu
                } else {
                    d(RenyiOrder::Finite(-u / (1.0 - u))) - u * mu
                }
            };
            crate::optimize::grid_golden_max(f, 0.0, 1.0, pts, tol).1
        }
    }

    /// log d + min(0, Γ_μ): per-copy log of the optimal count of Schmidt terms at log-odds μ.
    fn log_count_rate(&self, mu: f64) -> f64 {
        (self.local_dim() as f64).ln() + self.gamma(mu).min(0.0)
    }
}

/// D(u‖p) = −log d − mean log p.
fn d_reverse(p: &[f64]) -> f64 {
    let d = p.len() as f64;
    -d.ln() - p.iter().map(|x| x.ln()).sum::<f64>() / d
}

impl TryFrom<Vec<f64>> for SchmidtVector {
    type Error = DichotomyError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SchmidtVector::new(v)
    }
}

impl From<SchmidtVector> for Vec<f64> {
    fn from(s: SchmidtVector) -> Self {
        s.probs
    }
}

/// LOCC rate ψ1^{⊗n} → ψ2^{⊗Rn} in the given error regime.
pub fn locc_rate(p1: &SchmidtVector, p2: &SchmidtVector, regime: Regime) -> Result<RateResult> {
    regime.validate()?;
    let m = p1.moments_with(p2);
    if m.d2 == 0.0 {
        let mut r = RateResult::from_parts(regime, f64::INFINITY, BoundKind::TwoSidedTight);
        r.diagnostics.push("target is a product state".into());
        return Ok(r);
    }
    let mut r = RateResult::from_parts(regime, m.first_order(), BoundKind::TwoSidedTight);
    match regime {
        Regime::FirstOrder { .. } => {}
        Regime::Small { eps } => r.second_order = Some(m.small_second_order(eps)?),
        Regime::ModerateLow { lambda, .. } => r.second_order = Some(m.moderate_second_order(lambda, false)),
        Regime::ModerateHigh { lambda, .. } => r.second_order = Some(m.moderate_second_order(lambda, true)),
        Regime::LargeHigh { lambda } => r.value = large_high(p1, p2, lambda),
        Regime::LargeLow { lambda } => r.value = large_low(p1, p2, lambda)?,
        Regime::ZeroError => {
            let (alpha, v) = zero_error(p1, p2);
            r.value = v;
            r.diagnostics.push(format!("attained at alpha = {}", alpha.value()));
        }
        Regime::ExtremeHigh => {
            r.value = f64::INFINITY;
            r.diagnostics.push("error 1 - exp(-omega(n)): rate unbounded".into());
        }
    }
    Ok(r)
}

/// Incoherent-operation rates between coherence resources reuse the LOCC formulas with the
/// diagonal of the state in the incoherent basis in place of the Schmidt coefficients.
pub fn coherence_rate(p1: &SchmidtVector, p2: &SchmidtVector, regime: Regime) -> Result<RateResult> {
    locc_rate(p1, p2, regime)
}

/// inf over t1 ∈ [0,1), t2 > 1 of [H_{t1}(p1) + (t1/(1−t1) + t2/(t2−1))λ] / H_{t2}(p2).
fn large_high(p1: &SchmidtVector, p2: &SchmidtVector, lambda: f64) -> f64 {
    // the two orders separate: the numerator's t1-part and the t2-part only couple through the ratio
    let num = |t1: f64, extra: f64| p1.renyi(RenyiOrder::Finite(t1)) + (t1 / (1.0 - t1)) * lambda + extra;
    let over_t2 = |t1: f64| {
        let f = |u: f64| {
            // t2 = 1/u
            if u >= 1.0 {
                return f64::INFINITY;
            }
            let (den, w) = if u <= 0.0 {
                (p2.renyi(RenyiOrder::PosInf), 1.0)
            } else {
                (p2.renyi(RenyiOrder::Finite(1.0 / u)), 1.0 / (1.0 - u))
            };
            if !(den > 0.0) {
                return f64::INFINITY;
            }
            num(t1, w * lambda) / den
        };
        grid_golden_min(f, 0.0, 1.0, 33, 1e-12).1
    };
    grid_golden_min(|t1| if t1 >= 1.0 { f64::INFINITY } else { over_t2(t1) }, 0.0, 1.0, 33, 1e-12).1
}

/// Root R of R·G2(μ/R) = G1(μ), with G(μ) = log d + min(0, Γ_μ); the left side increases in R.
fn r_entangle(p1: &SchmidtVector, p2: &SchmidtVector, mu: f64) -> f64 {
    let g1 = p1.log_count_rate(mu);
    let h = |ln_r: f64| {
        let r = ln_r.exp();
        r * p2.log_count_rate(mu / r) - g1
    };
    bisect(h, -30.0, 30.0, 1e-13).map_or(f64::NAN, f64::exp)
}

fn large_low(p1: &SchmidtVector, p2: &SchmidtVector, lambda: f64) -> Result<f64> {
    let f = |mu: f64| r_entangle(p1, p2, mu);
    let (_, v) = grid_golden_min(f, -lambda, lambda, 129, 1e-10);
    if v.is_nan() {
        return Err(DichotomyError::Undefined("entanglement r-function has no root".into()));
    }
    Ok(v)
}

/// min over α ∈ [0, ∞] of H_α(p1)/H_α(p2), with its minimizer.
fn zero_error(p1: &SchmidtVector, p2: &SchmidtVector) -> (RenyiOrder, f64) {
    // α = u/(1−u) maps [0,1] onto [0,∞]
    let order = |u: f64| if u >= 1.0 { RenyiOrder::PosInf } else { RenyiOrder::Finite(u / (1.0 - u)) };
    let ratio = |u: f64| {
        let o = order(u);
        let (a, b) = (p1.renyi(o), p2.renyi(o));
        if b > 0.0 {
            a / b
        } else if a > 0.0 {
            f64::INFINITY
        } else {
            f64::NAN
        }
    };
    let n = 257;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&u| ratio(u)).collect();
    let best = (0..n).filter(|&i| !vals[i].is_nan()).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap_or(0);
    let (lo, hi) = (grid[best.saturating_sub(1)], grid[(best + 1).min(n - 1)]);
    let mut g = |u: f64| {
        let v = ratio(u);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let (u, v) = golden_min(&mut g, lo, hi, 1e-12);
    let (u, v) = if v < vals[best] { (u, v) } else { (grid[best], vals[best]) };
    let stein = ratio(0.5);
    if (stein - v).abs() <= 1e-12 * v.abs().max(1.0) {
        return (RenyiOrder::Finite(1.0), stein);
    }
    (order(u), v)
}

/// Exact finite-n LOCC test ψ1^{⊗n} →ε ψ2^{⊗m}: d2^m β_x(p2^m‖u) ≤ d1^n β_{x−ε}(p1^n‖u) for x ∈ (ε, 1).
pub fn locc_feasible_finite(p1: &SchmidtVector, p2: &SchmidtVector, n: usize, m: usize, eps: f64) -> Result<bool> {
    if !(0.0..1.0).contains(&eps) {
        return Err(DichotomyError::Domain(format!("eps must lie in [0,1), got {eps}")));
    }
    if m == 0 {
        return Ok(true);
    }
    if n == 0 {
        return Ok(eps > 0.0 && 1.0 - eps <= p2.probs[0].powi(m as i32) || p2.local_dim() == 1);
    }
    let (u1, u2) = (p1.uniform(), p2.uniform());
    let c1 = VertexCurve::new(&p1.probs, &u1, n)?;
    let c2 = VertexCurve::new(&p2.probs, &u2, m)?;
    let shift1 = n as f64 * (p1.local_dim() as f64).ln();
    let shift2 = m as f64 * (p2.local_dim() as f64).ln();
    Ok(curve_below(&c2, shift2, &c1, shift1, eps, f64::NEG_INFINITY))
}

/// Success probability (1 + δ)/2 of locally telling two states apart at trace distance δ.
pub fn local_distinguishability(delta: f64) -> f64 {
    (1.0 + delta) / 2.0
}
