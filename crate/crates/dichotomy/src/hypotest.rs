//! Neyman–Pearson testing: exact classical β, bracketed quantum β, log odds and the
//! asymptotic log-odds trade-off Γ_λ.

use serde::{Deserialize, Serialize};

use crate::divergence::{minimal_renyi, PinchedEstimate, Profile, RenyiOrder};
use crate::error::{DichotomyError, Result};
use crate::matrixcore::{eigh, pinch_state, tensor_power_joint, Dichotomy, DensityOperator, TypeClassSpectrum};
use crate::optimize::{grid_golden_max, grid_golden_min};
use crate::statfun::{log_logit_inv, logit_inv};

/// Which pinched variant of the test is meant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pinching {
    #[default]
    None,
    Left,
    Right,
}

/// Certified bounds on β_x. `t` is the Neyman–Pearson threshold of the last test used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaBracket {
    pub lower: f64,
    pub upper: f64,
    pub t: f64,
    pub converged: bool,
}

impl BetaBracket {
    fn exact(v: f64, t: f64) -> Self {
        BetaBracket { lower: v, upper: v, t, converged: true }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, v: f64, slack: f64) -> bool {
        v >= self.lower - slack && v <= self.upper + slack
    }
}

/// β and 1 − β, both in the log domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogBeta {
    pub log_beta: f64,
    pub log_complement: f64,
}

impl LogBeta {
    pub fn beta(&self) -> f64 {
        self.log_beta.exp()
    }

    /// L[β] = ln β − ln(1 − β).
    pub fn logit(&self) -> f64 {
        if self.log_beta == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else if self.log_complement == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            self.log_beta - self.log_complement
        }
    }
}

fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn logsum(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(f64::NEG_INFINITY, logaddexp)
}

/// ln(e^a − e^b) for a ≥ b.
fn logsubexp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp()).ln_1p()
}

/// Neyman–Pearson on weighted outcomes (ln p-mass, ln q-mass).
///
/// The accepted region is filled in decreasing likelihood ratio, starting from whichever
/// end keeps the partial sums small, so both β and 1 − β keep full relative accuracy.
fn np_outcomes(outcomes: &[(f64, f64)], log_x: f64, log_one_minus_x: f64) -> LogBeta {
    let mut order: Vec<usize> = (0..outcomes.len()).collect();
    let ratio = |k: usize| {
        let (lp, lq) = outcomes[k];
        if lp == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else if lq == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            lp - lq
        }
    };
    order.sort_by(|&a, &b| ratio(b).total_cmp(&ratio(a)));
    let accept_from_top = log_one_minus_x <= 0.5f64.ln();
    // walk from the end that is filled first; `target` is the p-mass of that side
    let (walk, target): (Vec<usize>, f64) =
        if accept_from_top { (order.clone(), log_one_minus_x) } else { (order.iter().rev().cloned().collect(), log_x) };
    let mut acc = f64::NEG_INFINITY;
    let mut split = walk.len();
    let mut frac_log = (f64::NEG_INFINITY, 0.0); // (ln f, ln(1 − f)) of the boundary outcome on the walked side
    if target > f64::NEG_INFINITY {
        for (i, &k) in walk.iter().enumerate() {
            let lp = outcomes[k].0;
            if lp == f64::NEG_INFINITY {
                continue;
            }
            let next = logaddexp(acc, lp);
            if next >= target {
                let lf = logsubexp(target, acc) - lp;
                let lg = logsubexp(next, target) - lp;
                split = i;
                frac_log = (lf.min(0.0), lg.min(0.0));
                break;
            }
            acc = next;
        }
    } else {
        // nothing of positive p-mass is taken on the walked side
        split = walk.iter().position(|&k| outcomes[k].0 > f64::NEG_INFINITY).unwrap_or(walk.len());
    }
    let mut near = Vec::new();
    let mut far = Vec::new();
    for (i, &k) in walk.iter().enumerate() {
        let lq = outcomes[k].1;
        if i < split {
            near.push(lq);
        } else if i == split && target > f64::NEG_INFINITY {
            near.push(frac_log.0 + lq);
            far.push(frac_log.1 + lq);
        } else {
            far.push(lq);
        }
    }
    let (near, far) = (logsum(near), logsum(far));
    if accept_from_top {
        LogBeta { log_beta: near, log_complement: far }
    } else {
        LogBeta { log_beta: far, log_complement: near }
    }
}

fn check_x(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(DichotomyError::Domain(format!("type-I error must lie in [0,1], got {x}")));
    }
    Ok(())
}

fn check_pair(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(DichotomyError::DimensionMismatch(p.len(), q.len()));
    }
    if let Some(&bad) = q.iter().find(|&&v| v <= 0.0) {
        return Err(DichotomyError::Precondition(format!("alternative needs full support, found {bad}")));
    }
    Ok(())
}

fn vector_outcomes(p: &[f64], q: &[f64]) -> Vec<(f64, f64)> {
    p.iter().zip(q).map(|(&a, &b)| (if a > 0.0 { a.ln() } else { f64::NEG_INFINITY }, b.ln())).collect()
}

/// Exact minimal type-II error of classical distributions at type-I error x.
pub fn classical_beta(p: &[f64], q: &[f64], x: f64) -> Result<f64> {
    check_x(x)?;
    check_pair(p, q)?;
    Ok(classical_beta_log(p, q, x.ln(), (-x).ln_1p()).beta())
}

/// [`classical_beta`] with the type-I error given as (ln x, ln(1 − x)).
pub fn classical_beta_log(p: &[f64], q: &[f64], log_x: f64, log_one_minus_x: f64) -> LogBeta {
    np_outcomes(&vector_outcomes(p, q), log_x, log_one_minus_x)
}

/// Exact β on joint type classes (classes carry ln masses under p and q).
pub fn type_class_beta(spec: &TypeClassSpectrum, log_x: f64, log_one_minus_x: f64) -> LogBeta {
    let outcomes: Vec<(f64, f64)> = spec.classes.iter().map(|c| (c.log_mass(0), c.log_mass(1))).collect();
    np_outcomes(&outcomes, log_x, log_one_minus_x)
}

/// Type-I error and type-II error of the projective test {ρ − tσ > 0} (or ≥ 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestPoint {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn np_test(d: &Dichotomy, t: f64, inclusive: bool) -> Result<TestPoint> {
    let m = d.rho().matrix().sub(&d.sigma().matrix().scale(t));
    let e = eigh(&m)?;
    let scale = 1e-13 * (1.0 + t);
    let n = d.dim();
    let (mut acc_rho, mut acc_sigma) = (0.0, 0.0);
    for k in 0..n {
        let keep = if inclusive { e.values[k] >= -scale } else { e.values[k] > scale };
        if !keep {
            continue;
        }
        let v = e.vectors.column(k);
        let quad = |a: &DensityOperator| {
            let am = a.matrix();
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += (v[i].conj() * am.get(i, j) * v[j]).re;
                }
            }
            s
        };
        acc_rho += quad(d.rho());
        acc_sigma += quad(d.sigma());
    }
    Ok(TestPoint { t, alpha: (1.0 - acc_rho).clamp(0.0, 1.0), beta: acc_sigma.clamp(0.0, 1.0) })
}

/// Generalized eigenvalues of (ρ, σ): the spectrum of σ^{-1/2} ρ σ^{-1/2}.
pub fn generalized_eigenvalues(d: &Dichotomy) -> Result<Vec<f64>> {
    let s = d.sigma().power(-0.5);
    Ok(eigh(&d.rho().matrix().conjugate_by(s.as_cmat()))?.values)
}

const MAX_REFINE: usize = 400;

/// Certified bracket on β_x for a general pair; exact for commuting pairs.
pub fn quantum_beta(d: &Dichotomy, x: f64, tol: f64) -> Result<BetaBracket> {
    check_x(x)?;
    if let Some((p, q)) = d.joint_distributions() {
        return Ok(BetaBracket::exact(classical_beta(&p, &q, x)?, f64::NAN));
    }
    if x >= 1.0 {
        return Ok(BetaBracket::exact(0.0, f64::INFINITY));
    }
    let support = np_test(d, 0.0, false)?;
    let mut pts = vec![support, TestPoint { t: f64::INFINITY, alpha: 1.0, beta: 0.0 }];
    for g in generalized_eigenvalues(d)? {
        if g > 0.0 {
            pts.push(np_test(d, g, false)?);
            pts.push(np_test(d, g, true)?);
        }
    }
    if x <= 0.0 {
        return Ok(BetaBracket::exact(support.beta, 0.0));
    }
    let mut last = BetaBracket { lower: 0.0, upper: 1.0, t: f64::NAN, converged: false };
    for _ in 0..MAX_REFINE {
        let (lo, hi) = straddle(&pts, x);
        let upper = if hi.alpha - lo.alpha <= 0.0 {
            lo.beta.min(hi.beta)
        } else {
            lo.beta + (hi.beta - lo.beta) * (x - lo.alpha) / (hi.alpha - lo.alpha)
        };
        let lower = pts
            .iter()
            .filter(|p| p.t > 0.0 && p.t.is_finite())
            .map(|p| p.beta + (p.alpha - x) / p.t)
            .fold(0.0f64, f64::max)
            .min(upper);
        last = BetaBracket { lower, upper, t: lo.t, converged: upper - lower <= tol };
        if last.converged {
            return Ok(last);
        }
        let t = match (lo.t, hi.t) {
            (a, b) if a <= 0.0 && b.is_finite() => 0.5 * b,
            (a, b) if !b.is_finite() => 2.0 * a.max(1e-300),
            (a, b) => (a * b).sqrt(),
        };
        if t == lo.t || t == hi.t {
            break;
        }
        pts.push(np_test(d, t, false)?);
    }
    Ok(last)
}

/// Closest achieved tests with α ≤ x and α ≥ x.
fn straddle(pts: &[TestPoint], x: f64) -> (TestPoint, TestPoint) {
    let mut lo = pts[0];
    let mut hi = pts[1];
    for &p in pts {
        if p.alpha <= x && (p.alpha > lo.alpha || (p.alpha == lo.alpha && p.beta < lo.beta)) {
            lo = p;
        }
        if p.alpha >= x && (p.alpha < hi.alpha || (p.alpha == hi.alpha && p.beta < hi.beta)) {
            hi = p;
        }
    }
    (lo, hi)
}

/// The pair whose plain test is the requested pinched test.
pub fn pinched_pair(d: &Dichotomy, side: Pinching) -> Result<Dichotomy> {
    match side {
        Pinching::None => Ok(d.clone()),
        Pinching::Left => Dichotomy::new(pinch_state(d.rho(), d.sigma())?, d.sigma().clone()),
        Pinching::Right => Dichotomy::new(d.rho().clone(), pinch_state(d.sigma(), d.rho())?),
    }
}

/// Pinched β; the pinched pair commutes so the value is exact.
pub fn pinched_beta(d: &Dichotomy, x: f64, side: Pinching, tol: f64) -> Result<BetaBracket> {
    quantum_beta(&pinched_pair(d, side)?, x, tol)
}

/// γ_x = L[β_{L⁻¹[x]}] as (lower, upper).
pub fn gamma_logodds(d: &Dichotomy, x_logodds: f64, side: Pinching, tol: f64) -> Result<(f64, f64)> {
    if x_logodds.is_nan() {
        return Err(DichotomyError::Domain("log odds must not be NaN".into()));
    }
    let pair = pinched_pair(d, side)?;
    if let Some((p, q)) = pair.joint_distributions() {
        let g = classical_beta_log(&p, &q, log_logit_inv(x_logodds), log_logit_inv(-x_logodds)).logit();
        return Ok((g, g));
    }
    let b = quantum_beta(&pair, logit_inv(x_logodds), tol)?;
    let l = |v: f64| {
        if v <= 0.0 {
            f64::NEG_INFINITY
        } else if v >= 1.0 {
            f64::INFINITY
        } else {
            (v / (1.0 - v)).ln()
        }
    };
    Ok((l(b.lower), l(b.upper)))
}

/// Closed-form β near the two ends of the trade-off.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleShot {
    pub x: f64,
    /// β_{1−x} = x·exp(−D_{+∞}).
    pub beta_one_minus_x: f64,
    /// β_x = 1 − x·exp(−D_{−∞}); absent when the first state is singular.
    pub beta_x: Option<f64>,
}

/// Single-shot values of β for x ≤ λ_min of the (pinched) first state.
pub fn extreme_singleshot_beta(d: &Dichotomy, x: f64, side: Pinching) -> Result<SingleShot> {
    check_x(x)?;
    let pair = pinched_pair(d, side)?;
    let lmin = pair.rho().lambda_min();
    if x > lmin * (1.0 + 1e-12) {
        return Err(DichotomyError::Precondition(format!("x = {x} exceeds lambda_min = {lmin}")));
    }
    let top = minimal_renyi(&pair, RenyiOrder::PosInf)?;
    let beta_x = if lmin > 0.0 { Some(1.0 - x * (-minimal_renyi(&pair, RenyiOrder::NegInf)?).exp()) } else { None };
    Ok(SingleShot { x, beta_one_minus_x: x * (-top).exp(), beta_x })
}

/// Grid settings for the Γ optimizations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaGrid {
    pub points: usize,
    pub tol: f64,
}

impl Default for GammaGrid {
    fn default() -> Self {
        GammaGrid { points: 33, tol: 1e-10 }
    }
}

/// Edge of a λ-branch within which the closed edge value is returned.
pub const BRANCH_EDGE: f64 = 1e-9;

fn pinched_value(e: Result<PinchedEstimate>) -> f64 {
    e.map(|p| p.value).unwrap_or(f64::NAN)
}

/// Divergence family entering Γ: the plain one (Petz in the middle branch), the minimal one
/// throughout, or a pinched one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaKind {
    #[default]
    Standard,
    Minimal,
    Left,
    Right,
}

impl From<Pinching> for GammaKind {
    fn from(p: Pinching) -> Self {
        match p {
            Pinching::None => GammaKind::Standard,
            Pinching::Left => GammaKind::Left,
            Pinching::Right => GammaKind::Right,
        }
    }
}

fn family<P: Profile + ?Sized>(p: &P, t: RenyiOrder, kind: GammaKind, middle: bool) -> f64 {
    match kind {
        GammaKind::Standard if middle => match t {
            RenyiOrder::Finite(a) => p.petz(a).unwrap_or(f64::NAN),
            _ => f64::NAN,
        },
        GammaKind::Standard | GammaKind::Minimal => p.minimal(t).unwrap_or(f64::NAN),
        GammaKind::Left => pinched_value(p.left(t)),
        GammaKind::Right => pinched_value(p.right(t)),
    }
}

/// λ-location of Γ = 0: −D(σ‖ρ), or −D⋆(σ‖ρ) for the left-pinched variant.
pub fn gamma_zero_crossing<P: Profile + ?Sized>(p: &P, kind: impl Into<GammaKind>) -> Result<f64> {
    Ok(match kind.into() {
        GammaKind::Left => -p.rev_dstar()?,
        _ => -p.rev_d(),
    })
}

/// Γ_λ: asymptotic type-II log odds per copy at type-I log odds per copy λ.
pub fn gamma_asymptotic<P: Profile + ?Sized>(p: &P, lambda: f64, kind: impl Into<GammaKind>) -> Result<f64> {
    gamma_asymptotic_with(p, lambda, kind, GammaGrid::default())
}

pub fn gamma_asymptotic_with<P: Profile + ?Sized>(
    p: &P,
    lambda: f64,
    kind: impl Into<GammaKind>,
    grid: GammaGrid,
) -> Result<f64> {
    let side = kind.into();
    if lambda.is_nan() {
        return Err(DichotomyError::Domain("lambda must not be NaN".into()));
    }
    if lambda.is_infinite() {
        return Ok(-lambda);
    }
    let threshold = -p.log_lambda_min();
    if lambda > threshold {
        return Ok(-lambda - family(p, RenyiOrder::PosInf, side, false));
    }
    if lambda < -threshold {
        // β → 1 with 1 − β = x·e^{−n D_{−∞}}, so L[β]/n → −λ + D_{−∞}
        return Ok(-lambda + family(p, RenyiOrder::NegInf, side, false));
    }
    let zero = gamma_zero_crossing(p, side)?;
    if lambda.abs() <= BRANCH_EDGE {
        return match side {
            GammaKind::Right => Ok(-p.dstar()?),
            _ => Ok(-p.d()),
        };
    }
    if (lambda - zero).abs() <= BRANCH_EDGE {
        return Ok(0.0);
    }
    let (pts, tol) = (grid.points, grid.tol);
    let value = if lambda > 0.0 {
        // sup over t > 1, t = 1/u
        let f = |u: f64| {
            if u <= 0.0 {
                -family(p, RenyiOrder::PosInf, side, false) - lambda
            } else if u >= 1.0 {
                f64::NEG_INFINITY
            } else {
                -family(p, RenyiOrder::Finite(1.0 / u), side, false) - lambda / (1.0 - u)
            }
        };
        grid_golden_max(f, 0.0, 1.0, pts, tol).1
    } else if lambda > zero {
        // inf over 0 < t < 1
        let f = |t: f64| {
            if t >= 1.0 {
                f64::INFINITY
            } else {
                -family(p, RenyiOrder::Finite(t), side, true) - t / (1.0 - t) * lambda
            }
        };
        grid_golden_min(f, 0.0, 1.0, pts, tol).1
    } else {
        // sup over t < 0, t = −u/(1−u) so t/(1−t) = −u
        let f = |u: f64| {
            if u >= 1.0 {
                family(p, RenyiOrder::NegInf, side, false) - lambda
            } else {
                family(p, RenyiOrder::Finite(-u / (1.0 - u)), side, false) - u * lambda
            }
        };
        grid_golden_max(f, 0.0, 1.0, pts, tol).1
    };
    if value.is_nan() {
        return Err(DichotomyError::Undefined(format!("no finite branch value at lambda = {lambda}")));
    }
    Ok(value)
}

/// (1/n)·γ_{n x} for commuting data, exact on type classes.
pub fn finite_n_gamma(p: &[f64], q: &[f64], n: usize, x_per_copy: f64) -> Result<f64> {
    check_pair(p, q)?;
    let spec = tensor_power_joint(&[p, q], n)?;
    let big = n as f64 * x_per_copy;
    Ok(type_class_beta(&spec, log_logit_inv(big), log_logit_inv(-big)).logit() / n as f64)
}

/// One stored point of a trade-off curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub beta_lower: f64,
    pub beta_upper: f64,
    pub t: f64,
}

/// The β_x curve, exact (classical vertices) or bracketed (quantum samples).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub points: Vec<CurvePoint>,
    pub exact: bool,
}

impl TradeoffCurve {
    /// All vertices of the classical curve, x ascending.
    pub fn classical(p: &[f64], q: &[f64]) -> Result<Self> {
        check_pair(p, q)?;
        let mut order: Vec<usize> = (0..p.len()).collect();
        let r = |k: usize| if p[k] > 0.0 { p[k] / q[k] } else { 0.0 };
        order.sort_by(|&a, &b| r(b).total_cmp(&r(a)));
        let mut pts = vec![CurvePoint { x: 1.0, beta_lower: 0.0, beta_upper: 0.0, t: f64::INFINITY }];
        let (mut ap, mut aq) = (0.0, 0.0);
        for &k in &order {
            ap += p[k];
            aq += q[k];
            let x = (1.0 - ap).max(0.0);
            let b = aq.min(1.0);
            pts.push(CurvePoint { x, beta_lower: b, beta_upper: b, t: r(k) });
        }
        pts.reverse();
        pts.dedup_by(|a, b| a.x == b.x && a.beta_lower == b.beta_lower);
        Ok(TradeoffCurve { points: pts, exact: true })
    }

    /// Brackets sampled at the given type-I errors.
    pub fn sampled(d: &Dichotomy, xs: &[f64], tol: f64) -> Result<Self> {
        if let Some((p, q)) = d.joint_distributions() {
            let mut c = Self::classical(&p, &q)?;
            c.points = xs
                .iter()
                .map(|&x| {
                    let b = c.upper_at(x);
                    CurvePoint { x, beta_lower: b, beta_upper: b, t: f64::NAN }
                })
                .collect();
            return Ok(c);
        }
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let points = sorted
            .iter()
            .map(|&x| {
                quantum_beta(d, x, tol).map(|b| CurvePoint { x, beta_lower: b.lower, beta_upper: b.upper, t: b.t })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TradeoffCurve { points, exact: false })
    }

    fn interpolate(&self, x: f64, pick: impl Fn(&CurvePoint) -> f64) -> f64 {
        let pts = &self.points;
        if pts.is_empty() {
            return f64::NAN;
        }
        if x <= pts[0].x {
            return pick(&pts[0]);
        }
        for w in pts.windows(2) {
            if x <= w[1].x {
                let h = w[1].x - w[0].x;
                if h <= 0.0 {
                    return pick(&w[1]);
                }
                return pick(&w[0]) + (pick(&w[1]) - pick(&w[0])) * (x - w[0].x) / h;
            }
        }
        pick(pts.last().unwrap())
    }

    /// Chord interpolation of the upper envelope.
    pub fn upper_at(&self, x: f64) -> f64 {
        self.interpolate(x, |p| p.beta_upper)
    }

    /// Interpolated lower envelope (a valid bound only at stored x for sampled curves).
    pub fn lower_at(&self, x: f64) -> f64 {
        self.interpolate(x, |p| p.beta_lower)
    }

    pub fn csv_rows(&self) -> Vec<[f64; 4]> {
        self.points.iter().map(|p| [p.x, p.beta_lower, p.beta_upper, p.t]).collect()
    }
}
