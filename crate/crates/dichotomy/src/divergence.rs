//! Relative entropies, Rényi divergences (Petz, minimal, pinched), D⋆ and classical entropies.

use serde::{Deserialize, Serialize};

use crate::error::{DichotomyError, Result};
use crate::matrixcore::{eigh, CMat, ComplexHermitian, Dichotomy, DensityOperator, C64};

/// Orders with |α − 1| below this are evaluated at the α → 1 limit.
pub const ALPHA_ONE_BAND: f64 = 1e-6;
/// Dimension budget for tensor-power pinching.
pub const PINCH_DIM_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RenyiOrder {
    NegInf,
    Finite(f64),
    PosInf,
}

impl From<f64> for RenyiOrder {
    fn from(a: f64) -> Self {
        if a == f64::INFINITY {
            RenyiOrder::PosInf
        } else if a == f64::NEG_INFINITY {
            RenyiOrder::NegInf
        } else {
            RenyiOrder::Finite(a)
        }
    }
}

impl RenyiOrder {
    pub fn value(self) -> f64 {
        match self {
            RenyiOrder::NegInf => f64::NEG_INFINITY,
            RenyiOrder::Finite(a) => a,
            RenyiOrder::PosInf => f64::INFINITY,
        }
    }

    fn near_one(self) -> bool {
        matches!(self, RenyiOrder::Finite(a) if (a - 1.0).abs() < ALPHA_ONE_BAND)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PinchSide {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinchedEstimate {
    pub value: f64,
    pub n_used: usize,
    pub monotone_history: Vec<f64>,
    pub is_closed_form: bool,
    pub trend: Trend,
}

/// Additivity pattern of n·f_n over the recorded history.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    /// Closed form, no history.
    Exact,
    /// f_n approaches its limit from below; the reported value is a lower estimate.
    Superadditive,
    /// f_n approaches its limit from above; the reported value is an upper estimate.
    Subadditive,
    Neither,
}

fn logsumexp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.into_iter().filter(|x| *x > f64::NEG_INFINITY).collect();
    if v.is_empty() {
        return f64::NEG_INFINITY;
    }
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Spectra and overlaps |⟨u_i|v_j⟩|² of the pair.
struct Spectral {
    r: Vec<f64>,
    s: Vec<f64>,
    overlap: Vec<Vec<f64>>,
}

fn spectral(d: &Dichotomy) -> Spectral {
    let er = d.rho().eigen();
    let es = d.sigma().eigen();
    Spectral { r: er.values.clone(), s: es.values.clone(), overlap: er.overlaps(es) }
}

/// D(ρ‖σ) = Tr ρ(log ρ − log σ).
pub fn relative_entropy(d: &Dichotomy) -> f64 {
    let sp = spectral(d);
    let mut acc = 0.0;
    for (i, &ri) in sp.r.iter().enumerate() {
        if ri <= 0.0 {
            continue;
        }
        for (j, &sj) in sp.s.iter().enumerate() {
            acc += ri * sp.overlap[i][j] * (ri.ln() - sj.ln());
        }
    }
    acc.max(0.0)
}

/// V(ρ‖σ) = Tr ρ(log ρ − log σ)² − D².
pub fn relative_entropy_variance(d: &Dichotomy) -> f64 {
    let sp = spectral(d);
    let dv = relative_entropy(d);
    let mut acc = 0.0;
    for (i, &ri) in sp.r.iter().enumerate() {
        if ri <= 0.0 {
            continue;
        }
        for (j, &sj) in sp.s.iter().enumerate() {
            let l = ri.ln() - sj.ln() - dv;
            acc += ri * sp.overlap[i][j] * l * l;
        }
    }
    acc.max(0.0)
}

/// Petz divergence log Tr(ρ^α σ^{1−α})/(α − 1) for finite α.
pub fn petz_renyi(d: &Dichotomy, alpha: RenyiOrder) -> Result<f64> {
    let a = match alpha {
        RenyiOrder::Finite(a) => a,
        _ => return Err(DichotomyError::Domain("Petz divergence needs a finite order".into())),
    };
    if alpha.near_one() {
        return Ok(relative_entropy(d));
    }
    let sp = spectral(d);
    let terms = sp.r.iter().enumerate().flat_map(|(i, &ri)| {
        let overlap = &sp.overlap[i];
        sp.s.iter().enumerate().map(move |(j, &sj)| {
            if ri <= 0.0 || overlap[j] <= 0.0 {
                f64::NEG_INFINITY
            } else {
                a * ri.ln() + (1.0 - a) * sj.ln() + overlap[j].ln()
            }
        })
    });
    Ok(logsumexp(terms) / (a - 1.0))
}

/// log Tr((√A B^p √A)^q) for q > 0, with B^p scaled to avoid overflow.
fn sandwich_logtrace(a: &DensityOperator, b: &DensityOperator, p: f64, q: f64) -> Result<f64> {
    let eb = b.eigen();
    let positive: Vec<f64> = eb.values.iter().cloned().filter(|&v| v > 0.0).collect();
    if p < 0.0 && positive.len() < eb.values.len() {
        return Err(DichotomyError::Precondition("negative power of a singular operator".into()));
    }
    let scale = if p >= 0.0 { positive[0] } else { *positive.last().unwrap() };
    let bp = eb.map(|v| if v > 0.0 { (v / scale).powf(p) } else { 0.0 });
    // restrict to the support of A: diag(√a) W† B^p W diag(√a)
    let ea = a.eigen();
    let supp: Vec<usize> = (0..ea.dim()).filter(|&k| ea.values[k] > 0.0).collect();
    let k = supp.len();
    let n = ea.dim();
    let mut m = CMat::zeros(k);
    for (x, &i) in supp.iter().enumerate() {
        for (y, &j) in supp.iter().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for r in 0..n {
                let ur = ea.vectors.get(r, i).conj();
                if ur.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..n {
                    s += ur * bp.get(r, c) * ea.vectors.get(c, j);
                }
            }
            m.set(x, y, s * (ea.values[i] * ea.values[j]).sqrt());
        }
    }
    let mu = eigh(&ComplexHermitian::new(m))?;
    let top = mu.values[0];
    let lt = logsumexp(mu.values.iter().map(|&v| if v > 1e-15 * top { q * v.ln() } else { f64::NEG_INFINITY }));
    Ok(lt + q * p * scale.ln())
}

fn max_generalized_eigenvalue(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    // λ_max(B^{-1/2} A B^{-1/2})
    let binv = b.power(-0.5);
    let m = a.matrix().conjugate_by(binv.as_cmat());
    Ok(eigh(&m)?.values[0])
}

/// A expressed in B's eigenbasis over the columns `idx`, as a dense Hermitian block.
fn block_in_basis(a: &DensityOperator, b: &DensityOperator, idx: &[usize]) -> Vec<Vec<C64>> {
    let vb = &b.eigen().vectors;
    let am = a.matrix().as_cmat();
    let n = a.dim();
    let cols: Vec<Vec<C64>> = idx
        .iter()
        .map(|&j| (0..n).map(|r| (0..n).map(|c| am.get(r, c) * vb.get(c, j)).sum()).collect())
        .collect();
    idx.iter()
        .map(|&i| cols.iter().map(|col| (0..n).map(|r| vb.get(r, i).conj() * col[r]).sum()).collect())
        .collect()
}

fn to_hermitian(s: &[Vec<C64>]) -> Result<ComplexHermitian> {
    let k = s.len();
    CMat::from_vec(k, s.iter().flatten().cloned().collect()).map(ComplexHermitian::new)
}

/// Splits a positive definite S at `t` into (S_TT, S_DD − S_DT S_TT⁻¹ S_TD).
fn schur_split(s: &[Vec<C64>], t: usize) -> Result<(Vec<Vec<C64>>, Vec<Vec<C64>>)> {
    let k = s.len();
    let top: Vec<Vec<C64>> = s[..t].iter().map(|r| r[..t].to_vec()).collect();
    let inv = eigh(&to_hermitian(&top)?)?.map(|v| if v > 0.0 { 1.0 / v } else { 0.0 });
    let inv = inv.as_cmat();
    // X = S_TT⁻¹ S_TD
    let x: Vec<Vec<C64>> =
        (0..t).map(|i| (t..k).map(|j| (0..t).map(|m| inv.get(i, m) * s[m][j]).sum()).collect()).collect();
    let rest = (t..k)
        .map(|i| (t..k).map(|j| s[i][j] - (0..t).map(|m| s[i][m] * x[m][j - t]).sum::<C64>()).collect())
        .collect();
    Ok((top, rest))
}

/// Log-eigenvalues of W S W with W = diag(e^{w}), w sorted descending and S positive definite.
/// Blocks separated by more than e^{-600} in scale are decoupled through Schur complements,
/// so eigenvalues far below the largest are kept to full relative accuracy.
fn graded_log_eigs(s: Vec<Vec<C64>>, w: &[f64], out: &mut Vec<f64>) -> Result<()> {
    if w.is_empty() {
        return Ok(());
    }
    let top = w[0];
    let t = w.iter().take_while(|&&x| top - x <= 300.0).count();
    let (head, rest) = if t < w.len() { schur_split(&s, t)? } else { (s, vec![]) };
    let scaled: Vec<Vec<C64>> = head
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().enumerate().map(|(j, &v)| v * (w[i] + w[j] - 2.0 * top).exp()).collect())
        .collect();
    for v in eigh(&to_hermitian(&scaled)?)?.values {
        out.push(if v > 0.0 { v.ln() + 2.0 * top } else { f64::NEG_INFINITY });
    }
    graded_log_eigs(rest, &w[t..], out)
}

/// log Tr((B^{p/2} A B^{p/2})^q) for full-rank A, accurate for large |p|.
fn graded_logtrace(a: &DensityOperator, b: &DensityOperator, p: f64, q: f64) -> Result<f64> {
    let eb = b.eigen();
    if p < 0.0 && eb.values.iter().any(|&v| v <= 0.0) {
        return Err(DichotomyError::Precondition("negative power of a singular operator".into()));
    }
    let mut idx: Vec<usize> = (0..eb.dim()).filter(|&k| eb.values[k] > 0.0).collect();
    let weight = |k: usize| 0.5 * p * eb.values[k].ln();
    idx.sort_by(|&x, &y| weight(y).total_cmp(&weight(x)));
    let w: Vec<f64> = idx.iter().map(|&k| weight(k)).collect();
    let mut logs = Vec::with_capacity(idx.len());
    graded_log_eigs(block_in_basis(a, b, &idx), &w, &mut logs)?;
    Ok(logsumexp(logs.into_iter().map(|l| q * l)))
}

/// Minimal (sandwiched) Rényi divergence with its ±∞ limits.
pub fn minimal_renyi(d: &Dichotomy, alpha: RenyiOrder) -> Result<f64> {
    match alpha {
        RenyiOrder::PosInf => Ok(max_generalized_eigenvalue(d.rho(), d.sigma())?.ln()),
        // negative orders diverge to −∞ when ρ misses part of the support of σ
        RenyiOrder::NegInf if d.rho().lambda_min() <= 0.0 => Ok(f64::NEG_INFINITY),
        RenyiOrder::Finite(a) if a < 0.0 && d.rho().lambda_min() <= 0.0 => Ok(f64::NEG_INFINITY),
        RenyiOrder::NegInf => Ok(-max_generalized_eigenvalue(d.sigma(), d.rho())?.ln()),
        RenyiOrder::Finite(_) if alpha.near_one() => Ok(relative_entropy(d)),
        RenyiOrder::Finite(a) if a >= 0.5 => {
            Ok(sandwich_logtrace(d.rho(), d.sigma(), (1.0 - a) / a, a)? / (a - 1.0))
        }
        RenyiOrder::Finite(a) => reverse_sandwiched(d, a),
    }
}

/// Sandwiched form at any α > 0 (coincides with the minimal divergence for α ≥ ½).
fn sandwiched(d: &Dichotomy, a: f64) -> Result<f64> {
    if (a - 1.0).abs() < ALPHA_ONE_BAND {
        return Ok(relative_entropy(d));
    }
    // σ^{(1−α)/α} spans many scales for small α; grade it when ρ allows
    if a < 0.5 && d.rho().lambda_min() > 0.0 {
        return Ok(graded_logtrace(d.rho(), d.sigma(), (1.0 - a) / a, a)? / (a - 1.0));
    }
    Ok(sandwich_logtrace(d.rho(), d.sigma(), (1.0 - a) / a, a)? / (a - 1.0))
}

/// Reverse-sandwiched form for α < 1.
fn reverse_sandwiched(d: &Dichotomy, a: f64) -> Result<f64> {
    Ok(graded_logtrace(d.sigma(), d.rho(), a / (1.0 - a), 1.0 - a)? / (a - 1.0))
}

/// Classical D_α of probability vectors (q full support), including ±∞.
pub fn classical_renyi(p: &[f64], q: &[f64], alpha: RenyiOrder) -> f64 {
    match alpha {
        RenyiOrder::PosInf => p
            .iter()
            .zip(q)
            .filter(|(&pi, _)| pi > 0.0)
            .map(|(pi, qi)| (pi / qi).ln())
            .fold(f64::NEG_INFINITY, f64::max),
        RenyiOrder::NegInf => {
            p.iter().zip(q).map(|(pi, qi)| ln_or_neg_inf(*pi) - qi.ln()).fold(f64::INFINITY, f64::min)
        }
        RenyiOrder::Finite(a) if (a - 1.0).abs() < ALPHA_ONE_BAND => {
            p.iter().zip(q).filter(|(&pi, _)| pi > 0.0).map(|(pi, qi)| pi * (pi / qi).ln()).sum::<f64>().max(0.0)
        }
        RenyiOrder::Finite(a) if a < 0.0 && p.iter().any(|&pi| pi <= 0.0) => f64::NEG_INFINITY,
        RenyiOrder::Finite(a) => {
            let l = logsumexp(
                p.iter()
                    .zip(q)
                    .map(|(&pi, &qi)| if pi > 0.0 { a * pi.ln() + (1.0 - a) * qi.ln() } else { f64::NEG_INFINITY }),
            );
            l / (a - 1.0)
        }
    }
}

/// Left- or right-pinched Rényi divergence.
pub fn pinched_renyi(d: &Dichotomy, alpha: RenyiOrder, side: PinchSide, n_max: usize) -> Result<PinchedEstimate> {
    let closed = |value: f64| PinchedEstimate {
        value,
        n_used: 0,
        monotone_history: vec![],
        is_closed_form: true,
        trend: Trend::Exact,
    };
    if let Some((p, q)) = d.joint_distributions() {
        return Ok(closed(classical_renyi(&p, &q, alpha)));
    }
    match (side, alpha) {
        (PinchSide::Left, RenyiOrder::PosInf) => return Ok(closed(minimal_renyi(d, alpha)?)),
        (PinchSide::Right, RenyiOrder::NegInf) => return Ok(closed(minimal_renyi(d, alpha)?)),
        (PinchSide::Left, RenyiOrder::Finite(a)) if a > 0.0 => return Ok(closed(sandwiched(d, a)?)),
        (PinchSide::Left, RenyiOrder::Finite(a)) if a == 0.0 && d.rho().lambda_min() > 0.0 => return Ok(closed(0.0)),
        (PinchSide::Right, RenyiOrder::Finite(a)) if a < 1.0 - ALPHA_ONE_BAND => {
            return Ok(closed(reverse_sandwiched(d, a)?))
        }
        (PinchSide::Right, RenyiOrder::Finite(a)) if a <= 1.0 + ALPHA_ONE_BAND => return Ok(closed(dstar(d)?)),
        _ => {}
    }
    finite_n_pinched_order(d, alpha, side, n_max)
}

/// f_n(α) for n = 1..n_max from explicit tensor-power pinching.
pub fn finite_n_pinched(d: &Dichotomy, a: f64, side: PinchSide, n_max: usize) -> Result<PinchedEstimate> {
    finite_n_pinched_order(d, RenyiOrder::Finite(a), side, n_max)
}

/// As [`finite_n_pinched`], also accepting the ±∞ orders.
pub fn finite_n_pinched_order(
    d: &Dichotomy,
    order: RenyiOrder,
    side: PinchSide,
    n_max: usize,
) -> Result<PinchedEstimate> {
    let a = match order {
        RenyiOrder::Finite(a) => a,
        RenyiOrder::PosInf => f64::INFINITY,
        RenyiOrder::NegInf => f64::NEG_INFINITY,
    };
    if order.near_one() {
        return Err(DichotomyError::Domain("finite-n estimate at order 1 is not supported".into()));
    }
    let dim = d.dim();
    let total = (dim as f64).powi(n_max as i32);
    if n_max == 0 || total > PINCH_DIM_LIMIT as f64 {
        return Err(DichotomyError::TooLarge(format!(
            "d^n = {total} exceeds {PINCH_DIM_LIMIT}; use a smaller n_max"
        )));
    }
    if side == PinchSide::Left && a < 0.0 && d.rho().lambda_min() <= 0.0 {
        return Err(DichotomyError::Precondition("negative order needs a full-rank first state".into()));
    }
    // blocks come from the state whose eigenspaces pinch; the other is expressed in its basis
    let (basis, other) = match side {
        PinchSide::Left => (d.sigma(), d.rho()),
        PinchSide::Right => (d.rho(), d.sigma()),
    };
    let (block_exp, inner_exp) = match side {
        PinchSide::Left => (1.0 - a, a),
        PinchSide::Right => (a, 1.0 - a),
    };
    let e = basis.eigen();
    let u = &e.vectors;
    let rot = other.matrix().conjugate_by(&u.adjoint());
    let log_b: Vec<f64> = e.values.iter().map(|&v| ln_or_neg_inf(v)).collect();
    let mut history = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let size = dim.pow(n as u32);
        let digits = |mut idx: usize| {
            let mut ds = vec![0usize; n];
            for k in (0..n).rev() {
                ds[k] = idx % dim;
                idx /= dim;
            }
            ds
        };
        let mut keyed: Vec<(f64, usize)> = (0..size).map(|i| (digits(i).iter().map(|&k| log_b[k]).sum(), i)).collect();
        keyed.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut blocks: Vec<(f64, Vec<usize>)> = Vec::new();
        for (lv, i) in keyed {
            match blocks.last_mut() {
                // relative eigenvalue gap 1e-9 is an absolute gap in the log
                Some((l0, idx)) if *l0 == lv || (*l0 - lv).abs() <= 1e-9 => idx.push(i),
                _ => blocks.push((lv, vec![i])),
            }
        }
        let mut terms = Vec::with_capacity(blocks.len());
        let mut extreme = match order {
            RenyiOrder::PosInf => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        };
        for (lv, idx) in &blocks {
            if !a.is_finite() {
                if *lv == f64::NEG_INFINITY {
                    // only the right side can see a zero eigenvalue of ρ here
                    if order == RenyiOrder::NegInf {
                        extreme = f64::NEG_INFINITY;
                    }
                    continue;
                }
            } else if *lv == f64::NEG_INFINITY {
                // zero eigenvalue of the pinching state
                if block_exp > 0.0 {
                    continue;
                }
                return Err(DichotomyError::Precondition("pinching state is singular for this order".into()));
            }
            let k = idx.len();
            let dig: Vec<Vec<usize>> = idx.iter().map(|&i| digits(i)).collect();
            let mut m = CMat::zeros(k);
            for x in 0..k {
                for y in x..k {
                    let mut v = C64::new(1.0, 0.0);
                    for t in 0..n {
                        v *= rot.get(dig[x][t], dig[y][t]);
                    }
                    m.set(x, y, v);
                    m.set(y, x, v.conj());
                }
            }
            let ev = eigh(&ComplexHermitian::new(m))?;
            let top = ev.values[0].max(0.0);
            if !a.is_finite() {
                let low = *ev.values.last().unwrap();
                let low = if low > 1e-14 * top { low.ln() } else { f64::NEG_INFINITY };
                let hi = top.ln();
                extreme = match (order, side) {
                    (RenyiOrder::PosInf, PinchSide::Left) => extreme.max(hi - lv),
                    (RenyiOrder::PosInf, PinchSide::Right) => extreme.max(lv - low),
                    (_, PinchSide::Left) => extreme.min(low - lv),
                    (_, PinchSide::Right) => extreme.min(lv - hi),
                };
                continue;
            }
            let inner = logsumexp(ev.values.iter().map(|&v| {
                if v > 1e-14 * top {
                    inner_exp * v.ln()
                } else if inner_exp < 0.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            }));
            terms.push(block_exp * lv + inner);
        }
        let val = if a.is_finite() { logsumexp(terms) / (a - 1.0) / n as f64 } else { extreme / n as f64 };
        history.push(val);
    }
    let trend = if is_superadditive(&history, 1e-9) {
        Trend::Superadditive
    } else if is_subadditive(&history, 1e-9) {
        Trend::Subadditive
    } else {
        Trend::Neither
    };
    Ok(PinchedEstimate {
        value: *history.last().unwrap(),
        n_used: n_max,
        monotone_history: history,
        is_closed_form: false,
        trend,
    })
}

/// (n+m) f_{n+m} ≥ n f_n + m f_m for all recorded pairs.
pub fn is_superadditive(f: &[f64], tol: f64) -> bool {
    let len = f.len();
    for n in 1..=len {
        for m in 1..=len {
            if n + m > len {
                continue;
            }
            let lhs = (n + m) as f64 * f[n + m - 1];
            let rhs = n as f64 * f[n - 1] + m as f64 * f[m - 1];
            if lhs < rhs - tol * (1.0 + rhs.abs()) {
                return false;
            }
        }
    }
    true
}

/// (n+m) f_{n+m} ≤ n f_n + m f_m for all recorded pairs.
pub fn is_subadditive(f: &[f64], tol: f64) -> bool {
    let neg: Vec<f64> = f.iter().map(|x| -x).collect();
    is_superadditive(&neg, tol)
}

/// D⋆: α → 1 limit of the right-pinched divergence.
///
/// As α → 1 the operator ρ^{α/(1−α)} becomes infinitely graded, and the spectrum of the
/// reverse sandwich collapses onto the pivots of σ written in ρ's eigenbasis (ordered by
/// decreasing eigenvalue of ρ). The limit is the classical relative entropy between the
/// spectrum of ρ and those pivots; a degenerate eigenvalue of ρ contributes through the
/// determinant of its Schur block, which makes the result basis independent.
pub fn dstar(d: &Dichotomy) -> Result<f64> {
    if d.is_commuting() {
        return Ok(relative_entropy(d));
    }
    let er = d.rho().eigen();
    let mut idx: Vec<usize> = (0..er.dim()).filter(|&k| er.values[k] > 0.0).collect();
    idx.sort_by(|&x, &y| er.values[y].total_cmp(&er.values[x]));
    let mut s = block_in_basis(d.sigma(), d.rho(), &idx);
    let mut acc = 0.0;
    let mut start = 0;
    while start < idx.len() {
        let lead = er.values[idx[start]];
        let len = idx[start..]
            .iter()
            .take_while(|&&k| (er.values[k] - lead).abs() <= 1e-9 * lead.max(1e-300))
            .count();
        let (head, rest) = if start + len < idx.len() { schur_split(&s, len)? } else { (s.clone(), vec![]) };
        let log_det: f64 = eigh(&to_hermitian(&head)?)?.values.iter().map(|v| v.ln()).sum();
        acc += lead * (len as f64 * lead.ln() - log_det);
        s = rest;
        start += len;
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalEntropies {
    pub h: f64,
    pub v: f64,
    probs: Vec<f64>,
}

impl ClassicalEntropies {
    /// Rényi entropy H_α for extended-real α.
    pub fn h_alpha(&self, alpha: RenyiOrder) -> f64 {
        renyi_entropy(&self.probs, alpha)
    }
}

pub fn classical_entropies(p: &[f64]) -> ClassicalEntropies {
    let h: f64 = -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>();
    let v = p.iter().filter(|&&x| x > 0.0).map(|x| x * (-x.ln() - h).powi(2)).sum::<f64>();
    ClassicalEntropies { h: h.max(0.0), v, probs: p.to_vec() }
}

pub fn renyi_entropy(p: &[f64], alpha: RenyiOrder) -> f64 {
    let supp = p.iter().cloned().filter(|&x| x > 0.0);
    match alpha {
        RenyiOrder::PosInf => -supp.fold(0.0, f64::max).ln(),
        RenyiOrder::NegInf => -supp.fold(1.0, f64::min).ln(),
        RenyiOrder::Finite(a) if a == 0.0 => (supp.count() as f64).ln(),
        RenyiOrder::Finite(a) if (a - 1.0).abs() < ALPHA_ONE_BAND => classical_entropies(p).h,
        RenyiOrder::Finite(a) => logsumexp(supp.map(|x| a * x.ln())) / (1.0 - a),
    }
}

/// Divergence data of an input resource: a single dichotomy or a weighted composite of several.
pub trait Profile: Sync {
    fn d(&self) -> f64;
    fn v(&self) -> f64;
    fn petz(&self, alpha: f64) -> Result<f64>;
    fn minimal(&self, alpha: RenyiOrder) -> Result<f64>;
    fn left(&self, alpha: RenyiOrder) -> Result<PinchedEstimate>;
    fn right(&self, alpha: RenyiOrder) -> Result<PinchedEstimate>;
    fn dstar(&self) -> Result<f64>;
    /// D(σ‖ρ); +∞ if ρ is singular.
    fn rev_d(&self) -> f64;
    /// D⋆(σ‖ρ); +∞ if ρ is singular.
    fn rev_dstar(&self) -> Result<f64>;
    /// Per-copy ln λ_min(ρ).
    fn log_lambda_min(&self) -> f64;
    fn commuting(&self) -> bool;
}

/// Default copy budget for finite-n pinched estimates inside optimizations.
pub fn default_n_max(dim: usize) -> usize {
    let mut n = 1;
    while n < 8 && (dim as f64).powi(n as i32 + 1) <= 256.0 {
        n += 1;
    }
    n
}

impl Profile for Dichotomy {
    fn d(&self) -> f64 {
        relative_entropy(self)
    }
    fn v(&self) -> f64 {
        relative_entropy_variance(self)
    }
    fn petz(&self, alpha: f64) -> Result<f64> {
        petz_renyi(self, RenyiOrder::Finite(alpha))
    }
    fn minimal(&self, alpha: RenyiOrder) -> Result<f64> {
        minimal_renyi(self, alpha)
    }
    fn left(&self, alpha: RenyiOrder) -> Result<PinchedEstimate> {
        pinched_renyi(self, alpha, PinchSide::Left, default_n_max(self.dim()))
    }
    fn right(&self, alpha: RenyiOrder) -> Result<PinchedEstimate> {
        pinched_renyi(self, alpha, PinchSide::Right, default_n_max(self.dim()))
    }
    fn dstar(&self) -> Result<f64> {
        dstar(self)
    }
    fn rev_d(&self) -> f64 {
        match self.swapped() {
            Ok(s) => relative_entropy(&s),
            Err(_) => f64::INFINITY,
        }
    }
    fn rev_dstar(&self) -> Result<f64> {
        match self.swapped() {
            Ok(s) => dstar(&s),
            Err(_) => Ok(f64::INFINITY),
        }
    }
    fn log_lambda_min(&self) -> f64 {
        ln_or_neg_inf(self.rho().lambda_min())
    }
    fn commuting(&self) -> bool {
        self.is_commuting()
    }
}

/// Composite ρ_1^{⊗w_1 n} ⊗ ρ_2^{⊗w_2 n} ⊗ … against σ_1^{⊗w_1 n} ⊗ …; every per-copy
/// divergence is the weighted sum of the parts.
#[derive(Clone, Debug)]
pub struct Mixture {
    pub parts: Vec<(f64, Dichotomy)>,
}

impl Mixture {
    pub fn new(parts: Vec<(f64, Dichotomy)>) -> Result<Self> {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        if parts.is_empty() || parts.iter().any(|p| p.0 < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(DichotomyError::Domain("mixture weights must be non-negative and sum to 1".into()));
        }
        Ok(Mixture { parts })
    }

    fn sum(&self, f: impl Fn(&Dichotomy) -> f64) -> f64 {
        self.parts.iter().filter(|p| p.0 > 0.0).map(|(w, d)| w * f(d)).sum()
    }

    fn try_sum(&self, f: impl Fn(&Dichotomy) -> Result<f64>) -> Result<f64> {
        let mut acc = 0.0;
        for (w, d) in self.parts.iter().filter(|p| p.0 > 0.0) {
            acc += w * f(d)?;
        }
        Ok(acc)
    }

    fn pinched_sum(&self, f: impl Fn(&Dichotomy) -> Result<PinchedEstimate>) -> Result<PinchedEstimate> {
        let mut value = 0.0;
        let mut closed = true;
        let mut trend = Trend::Exact;
        let mut n_used = 0;
        for (w, d) in self.parts.iter().filter(|p| p.0 > 0.0) {
            let e = f(d)?;
            value += w * e.value;
            closed &= e.is_closed_form;
            trend = match (trend, e.trend) {
                (Trend::Exact, t) | (t, Trend::Exact) => t,
                (a, b) if a == b => a,
                _ => Trend::Neither,
            };
            n_used = n_used.max(e.n_used);
        }
        Ok(PinchedEstimate { value, n_used, monotone_history: vec![], is_closed_form: closed, trend })
    }
}

impl Profile for Mixture {
    fn d(&self) -> f64 {
        self.sum(relative_entropy)
    }
    fn v(&self) -> f64 {
        self.sum(relative_entropy_variance)
    }
    fn petz(&self, alpha: f64) -> Result<f64> {
        self.try_sum(|d| petz_renyi(d, RenyiOrder::Finite(alpha)))
    }
    fn minimal(&self, alpha: RenyiOrder) -> Result<f64> {
        self.try_sum(|d| minimal_renyi(d, alpha))
    }
    fn left(&self, alpha: RenyiOrder) -> Result<PinchedEstimate> {
        self.pinched_sum(|d| d.left(alpha))
    }
    fn right(&self, alpha: RenyiOrder) -> Result<PinchedEstimate> {
        self.pinched_sum(|d| d.right(alpha))
    }
    fn dstar(&self) -> Result<f64> {
        self.try_sum(dstar)
    }
    fn rev_d(&self) -> f64 {
        self.sum(|d| d.rev_d())
    }
    fn rev_dstar(&self) -> Result<f64> {
        self.try_sum(|d| d.rev_dstar())
    }
    fn log_lambda_min(&self) -> f64 {
        self.sum(|d| d.log_lambda_min())
    }
    fn commuting(&self) -> bool {
        self.parts.iter().all(|(_, d)| d.is_commuting())
    }
}
