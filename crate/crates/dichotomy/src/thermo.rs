//! Thermodynamic front-end: Gibbs dichotomies, protocol bounds, work-assisted rates and resonance scans.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::{classical_entropies, relative_entropy, relative_entropy_variance, Mixture, Profile};
use crate::error::{DichotomyError, Result};
use crate::matrixcore::{gibbs_state, trace_distance, ComplexHermitian, DensityOperator, Dichotomy};
use crate::optimize::{bisect, golden_min};
use crate::rates::{
    first_order_rate, large_deviation_rate, zero_error_upper, BoundKind, Moments, RateQuery, RateResult, Regime,
    Resource,
};
use crate::statfun::{gaussian_icdf, sesquinormal_cdf, SesquinormalParams};

/// Hamiltonians of the input and output systems at a common inverse temperature.
#[derive(Clone, Debug)]
pub struct ThermalSetting {
    pub hamiltonian_in: ComplexHermitian,
    pub hamiltonian_out: ComplexHermitian,
    pub beta: f64,
    pub gibbs_in: DensityOperator,
    pub gibbs_out: DensityOperator,
}

impl ThermalSetting {
    pub fn new(hamiltonian_in: ComplexHermitian, hamiltonian_out: ComplexHermitian, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(DichotomyError::Domain(format!("inverse temperature must be positive, got {beta}")));
        }
        let gibbs_in = gibbs_state(&hamiltonian_in, beta)?;
        let gibbs_out = gibbs_state(&hamiltonian_out, beta)?;
        Ok(ThermalSetting { hamiltonian_in, hamiltonian_out, beta, gibbs_in, gibbs_out })
    }

    /// Same system on both sides.
    pub fn single(hamiltonian: ComplexHermitian, beta: f64) -> Result<Self> {
        Self::new(hamiltonian.clone(), hamiltonian, beta)
    }

    /// Setting whose Gibbs state is the given diagonal, with β = 1.
    pub fn from_gibbs_diag(g: &[f64]) -> Result<Self> {
        if g.iter().any(|&x| !(x > 0.0)) {
            return Err(DichotomyError::NotFullRank(g.iter().cloned().fold(f64::INFINITY, f64::min)));
        }
        let h: Vec<Vec<f64>> = (0..g.len())
            .map(|i| (0..g.len()).map(|j| if i == j { -g[i].ln() } else { 0.0 }).collect())
            .collect();
        Self::single(ComplexHermitian::from_rows(&h, None)?, 1.0)
    }
}

/// Battery work w = w1·n + w2·√n, positive when extracted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    pub w1: f64,
    pub w2: f64,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(DichotomyError::Domain(format!("eps must lie in (0,1), got {eps}")))
    }
}

fn second_order_term(v: f64, n: usize, eps: f64) -> Result<f64> {
    if v == 0.0 {
        return Ok(0.0);
    }
    Ok((v / n as f64).sqrt() * gaussian_icdf(eps)?)
}

/// ε-deterministic work per copy: (D(ρ‖γ) + √(V/n) Φ^{-1}(ε))/β.
pub fn work_extraction_bound(rho: &DensityOperator, s: &ThermalSetting, eps: f64, n: usize) -> Result<f64> {
    check_eps(eps)?;
    let d = Dichotomy::new(rho.clone(), s.gibbs_in.clone())?;
    Ok((relative_entropy(&d) + second_order_term(relative_entropy_variance(&d), n, eps)?) / s.beta)
}

/// Work per copy to erase n copies with a trivial Hamiltonian: (S(ρ) − √(V(ρ)/n) Φ^{-1}(ε))/β.
pub fn erasure_cost(rho: &DensityOperator, beta: f64, eps: f64, n: usize) -> Result<f64> {
    check_eps(eps)?;
    let e = classical_entropies(rho.eigenvalues());
    Ok((e.h - second_order_term(e.v, n, eps)?) / beta)
}

/// Free encoding capacity, log M per copy: D(ρ‖γ) + √(V/n) Φ^{-1}(ε).
pub fn encoding_capacity(rho: &DensityOperator, s: &ThermalSetting, eps: f64, n: usize) -> Result<f64> {
    check_eps(eps)?;
    let d = Dichotomy::new(rho.clone(), s.gibbs_in.clone())?;
    Ok(relative_entropy(&d) + second_order_term(relative_entropy_variance(&d), n, eps)?)
}

fn check_gibbs(r: &Resource, gibbs: &DensityOperator, which: &str) -> Result<()> {
    if let Resource::Single(d) = r {
        if d.dim() != gibbs.dim() || trace_distance(d.sigma(), gibbs)? > 1e-8 {
            return Err(DichotomyError::Precondition(format!("{which} second state is not the Gibbs state")));
        }
    }
    Ok(())
}

/// Small-deviation rate with a battery: first order (D1 − βw1)/D2, second order
/// (√V1 S^{-1}_{1/ξ'}(ε) − βw2)/D2 with ξ' = (V1/(D1 − βw1))/(V2/D2).
pub fn work_assisted_rate(q: &RateQuery, s: &ThermalSetting, b: BatterySpec) -> Result<RateResult> {
    let Regime::Small { eps } = q.regime else {
        return Err(DichotomyError::Domain("work-assisted rate needs a Small regime".into()));
    };
    check_gibbs(&q.input, &s.gibbs_in, "input")?;
    check_gibbs(&q.target, &s.gibbs_out, "target")?;
    let m = q.moments();
    let beta = s.beta;
    if m.d2 == 0.0 {
        let mut r = RateResult::from_parts(q.regime, f64::INFINITY, BoundKind::TwoSidedTight);
        r.diagnostics.push(format!(
            "target is thermal: any rate works while beta*w/n <= {} + sqrt({}/n)*Phi^-1({eps})",
            m.d1, m.v1
        ));
        return Ok(r);
    }
    let d1w = m.d1 - beta * b.w1;
    if !(d1w > 0.0) {
        return Err(DichotomyError::Precondition(format!(
            "extracted work per copy exceeds the free energy: D1 - beta*w1 = {d1w}"
        )));
    }
    let shifted = Moments { d1: d1w, ..m };
    let mut r = RateResult::from_parts(q.regime, d1w / m.d2, BoundKind::TwoSidedTight);
    let second = shifted.small_second_order(eps)?;
    r.second_order = Some(if b.w2 == 0.0 { second } else { second - beta * b.w2 / m.d2 });
    if !q.commuting_target() {
        r.bound_kind = BoundKind::UpperOnly;
    }
    r.to_achievable = q.commuting_target();
    Ok(r)
}

/// Largest work per copy drawable while producing a thermal target: (D1 + √(V1/n) Φ^{-1}(ε))/β.
pub fn free_target_work_bound(q: &RateQuery, s: &ThermalSetting, eps: f64, n: usize) -> Result<f64> {
    check_eps(eps)?;
    let m = q.moments();
    Ok((m.d1 + second_order_term(m.v1, n, eps)?) / s.beta)
}

/// w1 at which the battery makes the fluctuation ratios equal: (D1 − (V1/V2) D2)/β.
pub fn resonant_work(m: &Moments, beta: f64) -> Result<f64> {
    if !(m.v2 > 0.0) {
        return Err(DichotomyError::Undefined("resonant work needs V2 > 0".into()));
    }
    Ok((m.d1 - m.v1 / m.v2 * m.d2) / beta)
}

/// Heuristic error S_ν(μ) of producing Rn copies, with μ = (RnD2 − nD1)/√(nV1), ν = RV2/V1.
pub fn phenomenological_error(q: &RateQuery, n: usize, r: f64) -> Result<f64> {
    let m = q.moments();
    if !(m.v1 > 0.0) {
        return Err(DichotomyError::Precondition(
            "V1 = 0: the input distribution is a step function and the model degenerates".into(),
        ));
    }
    let nf = n as f64;
    let mu = (r * nf * m.d2 - nf * m.d1) / (nf * m.v1).sqrt();
    let nu = r * m.v2 / m.v1;
    Ok(sesquinormal_cdf(SesquinormalParams::new(nu)?, mu))
}

/// Qubit with diagonal (p, 1−p) and off-diagonal x√(p(1−p)).
pub fn coherent_qubit_family(p: f64, x: f64) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&x) {
        return Err(DichotomyError::Domain(format!("p and x must lie in [0,1], got {p}, {x}")));
    }
    let c = x * (p * (1.0 - p)).sqrt();
    DensityOperator::new(ComplexHermitian::from_rows(&[vec![p, c], vec![c, 1.0 - p]], None)?)
}

/// ε = S_{1/ξ}(0): error needed to run at the first-order rate.
pub fn threshold_error(xi: f64) -> Result<f64> {
    if xi.is_nan() {
        return Ok(0.0);
    }
    let nu = if xi == 0.0 { f64::INFINITY } else { 1.0 / xi };
    Ok(sesquinormal_cdf(SesquinormalParams::new(nu)?, 0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceRow {
    pub x: f64,
    pub xi: f64,
    pub eps_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceScan {
    pub rows: Vec<ResonanceRow>,
    /// Coherence values with ξ = 1.
    pub roots: Vec<f64>,
}

fn coherent_xi(p: f64, x: f64, gamma: &DensityOperator, target: &Dichotomy) -> Result<f64> {
    let d = Dichotomy::new(coherent_qubit_family(p, x)?, gamma.clone())?;
    Moments { d1: relative_entropy(&d), v1: relative_entropy_variance(&d), d2: relative_entropy(target), v2: relative_entropy_variance(target) }.xi()
}

/// ξ and the threshold error along the coherent family ρ(p, x) → diag(target) with a common Gibbs state.
pub fn coherent_resonance_scan(p: f64, target_diag: &[f64], gamma: &DensityOperator, xs: &[f64]) -> Result<ResonanceScan> {
    if gamma.lambda_min() <= 0.0 {
        return Err(DichotomyError::NotFullRank(gamma.lambda_min()));
    }
    let target = Dichotomy::new(DensityOperator::from_diag(target_diag)?, gamma.clone())?;
    let rows: Vec<ResonanceRow> = xs
        .par_iter()
        .map(|&x| {
            let xi = coherent_xi(p, x, gamma, &target)?;
            Ok(ResonanceRow { x, xi, eps_threshold: threshold_error(xi)? })
        })
        .collect::<Result<_>>()?;
    let mut roots = vec![];
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if (a.xi - 1.0) * (b.xi - 1.0) <= 0.0 && a.xi != b.xi {
            let f = |x: f64| coherent_xi(p, x, gamma, &target).map_or(f64::NAN, |v| v - 1.0);
            if let Some(r) = bisect(f, a.x, b.x, 1e-15) {
                if roots.last().map_or(true, |&l: &f64| (r - l).abs() > 1e-12) {
                    roots.push(r);
                }
            }
        }
    }
    Ok(ResonanceScan { rows, roots })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceVerdict {
    pub weak: bool,
    pub strong: bool,
    pub xi: f64,
    pub argmin_alpha: f64,
}

/// Weak resonance: equal fluctuation ratios. Strong resonance: the zero-error minimizer sits at α = 1.
pub fn strong_resonance_check(d1: &dyn Profile, d2: &dyn Profile, tol_xi: f64, tol_alpha: f64, alpha_grid: usize) -> Result<ResonanceVerdict> {
    let m = Moments { d1: d1.d(), v1: d1.v(), d2: d2.d(), v2: d2.v() };
    let xi = m.xi()?;
    let (arg, _) = zero_error_upper(d1, d2, alpha_grid, 1e-10);
    let argmin_alpha = arg.value();
    Ok(ResonanceVerdict {
        weak: (xi - 1.0).abs() <= tol_xi || xi.is_nan(),
        strong: (argmin_alpha - 1.0).abs() <= tol_alpha,
        xi,
        argmin_alpha,
    })
}

/// The three-outcome states of the mixture example, against the uniform state.
pub mod appendix_states {
    pub const RHO1: [f64; 3] = [0.4309, 0.4300, 0.1391];
    pub const RHO1_ALT: [f64; 3] = [0.5499, 0.2300, 0.2201];
    pub const RHO2: [f64; 3] = [0.5121, 0.3300, 0.1579];
    pub const SIGMA: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Mixture of the two inputs → the single target.
    Forward,
    /// The single state → the mixture.
    Reverse,
}

impl std::str::FromStr for Direction {
    type Err = DichotomyError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Direction::Forward),
            "reverse" => Ok(Direction::Reverse),
            _ => Err(DichotomyError::Domain(format!("direction must be forward or reverse, got {s}"))),
        }
    }
}

/// Composite λ·(ρ1, σ) + (1−λ)·(ρ1', σ).
pub fn appendix_mixture(lambda: f64) -> Result<Mixture> {
    use appendix_states::*;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(DichotomyError::Domain(format!("mixture fraction must lie in [0,1], got {lambda}")));
    }
    Mixture::new(vec![
        (lambda, Dichotomy::classical(&RHO1, &SIGMA)?),
        (1.0 - lambda, Dichotomy::classical(&RHO1_ALT, &SIGMA)?),
    ])
}

/// (input, target) of the mixture example at fraction λ.
pub fn appendix_pair(lambda: f64, direction: Direction) -> Result<(Resource, Resource)> {
    use appendix_states::*;
    let mix = Resource::Composite(appendix_mixture(lambda)?);
    let single = Resource::Single(Dichotomy::classical(&RHO2, &SIGMA)?);
    Ok(match direction {
        Direction::Forward => (mix, single),
        Direction::Reverse => (single, mix),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureRow {
    pub lambda: f64,
    pub first_order: f64,
    pub zero_error: f64,
    pub weak: bool,
    pub strong: bool,
    /// Large-deviation (low error) upper rates at the requested exponents.
    pub large: Vec<f64>,
}

fn row_for(lambda: f64, direction: Direction, exponents: &[f64], q_tol: &crate::config::Tolerances) -> Result<MixtureRow> {
    let (a, b) = appendix_pair(lambda, direction)?;
    let mk = |regime| -> Result<RateQuery> {
        let (a, b) = appendix_pair(lambda, direction)?;
        RateQuery::new(a, b, regime)?.with_tolerances(q_tol.clone())
    };
    let c = first_order_rate(&mk(Regime::FirstOrder { eps: 0.5 })?)?.value;
    let z = zero_error_upper(a.profile(), b.profile(), q_tol.alpha_grid, q_tol.optimizer).1;
    let v = strong_resonance_check(a.profile(), b.profile(), q_tol.tol_xi, q_tol.tol_alpha, q_tol.alpha_grid)?;
    let large = exponents
        .iter()
        .map(|&l| large_deviation_rate(&mk(Regime::LargeLow { lambda: l })?).map(|r| r.value))
        .collect::<Result<_>>()?;
    Ok(MixtureRow { lambda, first_order: c, zero_error: z, weak: v.weak, strong: v.strong, large })
}

/// First-order rate C, zero-error rate Z, resonance verdicts and large-deviation rates along the mixture.
pub fn mixture_resonance_scan(
    direction: Direction,
    lambdas: &[f64],
    exponents: &[f64],
    tol: &crate::config::Tolerances,
) -> Result<Vec<MixtureRow>> {
    lambdas.par_iter().map(|&l| row_for(l, direction, exponents, tol)).collect()
}

/// Mixture fractions with ξ = 1 (weak resonance), located by bisection on a scan of `points`.
pub fn mixture_weak_roots(direction: Direction, points: usize) -> Result<Vec<f64>> {
    let xi = |l: f64| -> f64 {
        appendix_pair(l, direction)
            .and_then(|(a, b)| {
                let (a, b) = (a.profile(), b.profile());
                Moments { d1: a.d(), v1: a.v(), d2: b.d(), v2: b.v() }.xi()
            })
            .map_or(f64::NAN, |v| v - 1.0)
    };
    let grid: Vec<f64> = (0..=points).map(|i| i as f64 / points as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&l| xi(l)).collect();
    let mut roots = vec![];
    for i in 0..points {
        if vals[i] * vals[i + 1] <= 0.0 && vals[i] != vals[i + 1] {
            if let Some(r) = bisect(xi, grid[i], grid[i + 1], 1e-14) {
                roots.push(r);
            }
        }
    }
    Ok(roots)
}

/// Mixture fraction minimizing C − Z (≥ 0), with the gap there.
pub fn mixture_closest_approach(direction: Direction, points: usize, tol: &crate::config::Tolerances) -> Result<(f64, f64)> {
    let gap = |l: f64| -> f64 {
        appendix_pair(l, direction)
            .and_then(|(a, b)| {
                let (pa, pb) = (a.profile(), b.profile());
                let c = pa.d() / pb.d();
                Ok(c - zero_error_upper(pa, pb, tol.alpha_grid, tol.optimizer).1)
            })
            .unwrap_or(f64::INFINITY)
    };
    let grid: Vec<f64> = (0..=points).map(|i| i as f64 / points as f64).collect();
    let vals: Vec<f64> = grid.par_iter().map(|&l| gap(l)).collect();
    let best = (0..vals.len()).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(points)];
    let mut g = gap;
    let (l, v) = golden_min(&mut g, lo, hi, 1e-9);
    Ok(if v < vals[best] { (l, v) } else { (grid[best], vals[best]) })
}

/// Gibbs state of a two-level battery with gap w: ground population 1/(1 + e^{−βw}).
pub fn battery_gibbs(beta: f64, w: f64) -> Result<DensityOperator> {
    let ground = 1.0 / (1.0 + (-beta * w).exp());
    DensityOperator::from_diag(&[ground, 1.0 - ground])
}
