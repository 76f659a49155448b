//! Brute-force oracles for the analytic modules. Each one takes a numerically naive route that
//! shares no formula with the code it checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::{relative_entropy, relative_entropy_variance};
use crate::entangle::{locc_feasible_finite, SchmidtVector};
use crate::error::{DichotomyError, Result};
use crate::hypotest::{classical_beta, quantum_beta, type_class_beta};
use crate::matrixcore::{tensor_power_joint, DensityOperator, Dichotomy};
use crate::statfun::{gaussian_cdf, gaussian_icdf, normal_cdf, normal_pdf, sesquinormal_cdf, SesquinormalParams};

/// Fixed seed for the random perturbations and random instances.
pub const ORACLE_SEED: u64 = 0x5eed_0f_0ac1e;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub analytic: f64,
    pub oracle: f64,
    pub abs_diff: f64,
    pub tolerance: f64,
    pub grid: String,
}

impl OracleReport {
    pub fn new(quantity: impl Into<String>, analytic: f64, oracle: f64, tolerance: f64, grid: impl Into<String>) -> Self {
        OracleReport {
            quantity: quantity.into(),
            analytic,
            oracle,
            abs_diff: (analytic - oracle).abs(),
            tolerance,
            grid: grid.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.abs_diff <= self.tolerance
    }
}

fn sesqui_window(nu: f64, mu: f64) -> (f64, f64) {
    let spread = 8.0 * nu.max(1.0).sqrt();
    (mu.min(0.0) - spread, mu.max(0.0) + spread)
}

/// ½ Σ |ΔA − ΔΦ_{μ,ν}| over the grid: the objective for a candidate sampled at the nodes.
fn discrete_objective(a: &[f64], target: &[f64]) -> f64 {
    0.5 * a.windows(2).zip(target.windows(2)).map(|(x, y)| ((x[1] - x[0]) - (y[1] - y[0])).abs()).sum::<f64>()
}

/// S_ν(μ) as ½∫|A′ − φ_{μ,ν}| for the candidate A = max(Φ, Φ_{μ,ν}), checked for local
/// optimality against 64 random admissible bumps.
pub fn sesquinormal_oracle(nu: f64, mu: f64, grid_points: usize) -> Result<f64> {
    if grid_points < 1000 {
        return Err(DichotomyError::Domain(format!("need at least 1000 grid points, got {grid_points}")));
    }
    if !(nu >= 0.0 && nu.is_finite()) || !mu.is_finite() {
        return Err(DichotomyError::Domain(format!("need finite nu >= 0 and mu, got {nu}, {mu}")));
    }
    let (lo, hi) = sesqui_window(nu, mu);
    let h = (hi - lo) / (grid_points - 1) as f64;
    let xs: Vec<f64> = (0..grid_points).map(|i| lo + h * i as f64).collect();
    let std = |x: f64| normal_pdf(x, 0.0, 1.0);
    if nu == 0.0 {
        // the target is a point mass at μ: half the standard mass left of μ plus half the shortfall of the jump
        let left: Vec<f64> = xs.iter().take_while(|&&x| x < mu).map(|&x| std(x)).collect();
        let mass = trapezoid(&left, h) + partial_cell(&xs, mu, std);
        return Ok(mass);
    }
    let integrand: Vec<f64> = xs
        .iter()
        .map(|&x| if gaussian_cdf(x) >= normal_cdf(x, mu, nu) { (std(x) - normal_pdf(x, mu, nu)).abs() } else { 0.0 })
        .collect();
    let value = 0.5 * trapezoid(&integrand, h);
    check_local_optimality(&xs, nu, mu)?;
    Ok(value)
}

fn trapezoid(f: &[f64], h: f64) -> f64 {
    if f.len() < 2 {
        return 0.0;
    }
    h * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[f.len() - 1]))
}

/// Trapezoid piece from the last node below `edge` up to `edge`.
fn partial_cell(xs: &[f64], edge: f64, f: impl Fn(f64) -> f64) -> f64 {
    match xs.iter().rposition(|&x| x < edge) {
        Some(i) => 0.5 * (edge - xs[i]) * (f(xs[i]) + f(edge)),
        None => 0.0,
    }
}

fn check_local_optimality(xs: &[f64], nu: f64, mu: f64) -> Result<()> {
    const BUMPS: usize = 64;
    let phi: Vec<f64> = xs.iter().map(|&x| gaussian_cdf(x)).collect();
    let target: Vec<f64> = xs.iter().map(|&x| normal_cdf(x, mu, nu)).collect();
    let cand: Vec<f64> = phi.iter().zip(&target).map(|(a, b)| a.max(*b)).collect();
    let base = discrete_objective(&cand, &target);
    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let tol = 1e-9;
    for k in 0..BUMPS {
        let centre = rng.gen_range(lo..hi);
        let width = rng.gen_range(0.05..2.0) * nu.max(1.0).sqrt();
        let up = rng.gen_bool(0.5);
        let bump: Vec<f64> = xs.iter().map(|&x| (-((x - centre) / width).powi(2)).exp()).collect();
        // largest step keeping A ≥ Φ, A ≤ 1 and A non-decreasing
        let mut c = 0.05f64;
        for i in 0..xs.len() {
            if bump[i] > 1e-300 {
                c = c.min(if up { (1.0 - cand[i]) / bump[i] } else { (cand[i] - phi[i]) / bump[i] });
            }
            if i + 1 < xs.len() {
                let db = if up { bump[i + 1] - bump[i] } else { bump[i] - bump[i + 1] };
                if db < 0.0 {
                    c = c.min((cand[i + 1] - cand[i]) / -db);
                }
            }
        }
        if !(c > 1e-12) {
            continue;
        }
        let sign = if up { 1.0 } else { -1.0 };
        let moved: Vec<f64> = cand.iter().zip(&bump).map(|(a, b)| a + sign * 0.5 * c * b).collect();
        let v = discrete_objective(&moved, &target);
        if v < base - tol {
            return Err(DichotomyError::OracleInconsistency(format!(
                "bump {k} at {centre:.3} lowers the objective from {base} to {v} (nu {nu}, mu {mu})"
            )));
        }
    }
    Ok(())
}

/// Best β over tests s·P + r·(1 − P) with P a pure-state projector on a (θ, φ) grid of about
/// `grid` points, then refined locally. An achievable value, so an upper bound on β_x.
pub fn qubit_beta_oracle(d: &Dichotomy, x: f64, grid: usize) -> Result<f64> {
    if d.dim() != 2 {
        return Err(DichotomyError::Domain(format!("qubit oracle needs dimension 2, got {}", d.dim())));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(DichotomyError::Domain(format!("x must lie in [0,1], got {x}")));
    }
    let need = 1.0 - x;
    if need <= 0.0 {
        return Ok(0.0);
    }
    let (r, s) = (d.rho().matrix(), d.sigma().matrix());
    let expect = |m: &crate::matrixcore::ComplexHermitian, th: f64, ph: f64| {
        let (c, sn) = ((th / 2.0).cos(), (th / 2.0).sin());
        let off = m.get(0, 1) * num_complex::Complex64::from_polar(1.0, ph);
        c * c * m.get(0, 0).re + sn * sn * m.get(1, 1).re + 2.0 * c * sn * off.re
    };
    let value = |th: f64, ph: f64| {
        let (a, b) = (expect(r, th, ph).clamp(0.0, 1.0), expect(s, th, ph).clamp(0.0, 1.0));
        cheapest_fill(&[(a, b), (1.0 - a, 1.0 - b)], need)
    };
    let side = (grid as f64).sqrt().ceil().max(2.0) as usize;
    let (dt, dp) = (std::f64::consts::PI / (side - 1) as f64, 2.0 * std::f64::consts::PI / side as f64);
    let cells: Vec<(f64, f64, f64)> = (0..side)
        .into_par_iter()
        .flat_map_iter(|i| (0..side).map(move |j| (i, j)))
        .map(|(i, j)| {
            let (th, ph) = (i as f64 * dt, j as f64 * dp);
            (value(th, ph), th, ph)
        })
        .collect();
    let &(mut best, mut th, mut ph) = cells.iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    // coordinate descent in shrinking windows
    let (mut wt, mut wp) = (dt, dp);
    for _ in 0..60 {
        for (step, is_theta) in [(wt, true), (wp, false)] {
            let mut f = |t: f64| if is_theta { value(t, ph) } else { value(th, t) };
            let centre = if is_theta { th } else { ph };
            let (arg, v) = crate::optimize::golden_min(&mut f, centre - step, centre + step, 1e-14);
            if v < best {
                best = v;
                if is_theta {
                    th = arg;
                } else {
                    ph = arg;
                }
            }
        }
        wt *= 0.7;
        wp *= 0.7;
    }
    Ok(best)
}

/// Minimum σ-cost of collecting ρ-mass `need` from (ρ-mass, σ-mass) pieces, fractions allowed.
fn cheapest_fill(pieces: &[(f64, f64)], need: f64) -> f64 {
    let mut order: Vec<&(f64, f64)> = pieces.iter().filter(|p| p.0 > 0.0).collect();
    order.sort_by(|x, y| (x.1 / x.0).total_cmp(&(y.1 / y.0)));
    let (mut left, mut cost) = (need, 0.0);
    for &&(a, b) in &order {
        if left <= 0.0 {
            break;
        }
        let take = (left / a).min(1.0);
        cost += take * b;
        left -= take * a;
    }
    if left > 1e-15 {
        f64::INFINITY
    } else {
        cost
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteinRow {
    pub n: usize,
    /// −(1/n) ln β_ε.
    pub exponent: f64,
    /// exponent − D.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteinStudy {
    pub rows: Vec<SteinRow>,
    pub relative_entropy: f64,
    /// Fitted coefficient of 1/√n.
    pub fitted: f64,
    /// √V Φ^{-1}(ε).
    pub predicted: f64,
}

/// Exact −(1/n) ln β_ε on type classes for each n, and the 1/√n coefficient of the residual fitted
/// with the basis {1/√n, ln n / n, 1/n}.
pub fn stein_convergence_study(p: &[f64], q: &[f64], eps: f64, n_list: &[usize]) -> Result<SteinStudy> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(DichotomyError::Domain(format!("eps must lie in (0,1), got {eps}")));
    }
    let d = Dichotomy::classical(p, q)?;
    let (dd, vv) = (relative_entropy(&d), relative_entropy_variance(&d));
    let rows: Vec<SteinRow> = n_list
        .par_iter()
        .map(|&n| {
            let spec = tensor_power_joint(&[p, q], n)?;
            let lb = type_class_beta(&spec, eps.ln(), (-eps).ln_1p());
            let exponent = -lb.log_beta / n as f64;
            Ok(SteinRow { n, exponent, residual: exponent - dd })
        })
        .collect::<Result<_>>()?;
    let basis = |n: f64| [n.powf(-0.5), n.ln() / n, 1.0 / n];
    let fitted = if rows.len() >= 3 {
        let mut ata = [[0.0; 3]; 3];
        let mut atb = [0.0; 3];
        for r in &rows {
            let b = basis(r.n as f64);
            for i in 0..3 {
                atb[i] += b[i] * r.residual;
                for j in 0..3 {
                    ata[i][j] += b[i] * b[j];
                }
            }
        }
        solve3(ata, atb).map_or(f64::NAN, |c| c[0])
    } else {
        f64::NAN
    };
    let predicted = if vv == 0.0 { 0.0 } else { vv.sqrt() * gaussian_icdf(eps)? };
    Ok(SteinStudy { rows, relative_entropy: dd, fitted, predicted })
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Whether `a` majorizes `b` (b ≺ a): sorted partial sums of a dominate those of b.
pub fn majorization_check(a: &[f64], b: &[f64]) -> bool {
    let sorted = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|x, y| y.total_cmp(x));
        s
    };
    let (sa, sb) = (sorted(a), sorted(b));
    let len = sa.len().max(sb.len());
    let (mut ca, mut cb) = (0.0, 0.0);
    for i in 0..len {
        ca += sa.get(i).copied().unwrap_or(0.0);
        cb += sb.get(i).copied().unwrap_or(0.0);
        if ca < cb - 1e-12 {
            return false;
        }
    }
    true
}

/// Explicit p^{⊗n} as a flat vector.
pub fn tensor_power_vector(p: &[f64], n: usize) -> Vec<f64> {
    (0..n).fold(vec![1.0], |acc, _| acc.iter().flat_map(|a| p.iter().map(move |b| a * b)).collect())
}

/// Named oracle suites run by the test suite and the `verify` command. `seed` drives the random instances.
pub fn verify_suite(name: &str, seed: u64) -> Result<Vec<OracleReport>> {
    match name {
        "sesquinormal" => sesquinormal_suite(),
        "qubit" => qubit_suite(),
        "stein" => stein_suite(),
        "majorization" => majorization_suite(50, seed),
        "all" => {
            let mut out = sesquinormal_suite()?;
            out.extend(qubit_suite()?);
            out.extend(stein_suite()?);
            out.extend(majorization_suite(50, seed)?);
            Ok(out)
        }
        _ => Err(DichotomyError::Domain(format!(
            "unknown suite {name}; expected sesquinormal, qubit, stein, majorization or all"
        ))),
    }
}

pub const SESQUI_GRID: usize = 20_001;

fn sesquinormal_suite() -> Result<Vec<OracleReport>> {
    let cases: Vec<(f64, f64)> =
        [0.25, 0.5, 2.0, 4.0].iter().flat_map(|&nu| [-3.0, -1.0, 0.0, 1.0, 3.0].map(|mu| (nu, mu))).collect();
    cases
        .par_iter()
        .map(|&(nu, mu)| {
            let o = sesquinormal_oracle(nu, mu, SESQUI_GRID)?;
            let a = sesquinormal_cdf(SesquinormalParams::new(nu)?, mu);
            Ok(OracleReport::new(format!("S_{nu}({mu})"), a, o, 1e-3, format!("trapezoid {SESQUI_GRID}")))
        })
        .collect()
}

/// The coherent qubit with populations (0.85, 0.15) and coherence 0.5 against diag(0.95, 0.05).
pub fn reference_qubit_pair() -> Result<Dichotomy> {
    let (p, x): (f64, f64) = (0.85, 0.5);
    let c = x * (p * (1.0 - p)).sqrt();
    let rho = DensityOperator::new(crate::matrixcore::ComplexHermitian::from_rows(
        &[vec![p, c], vec![c, 1.0 - p]],
        None,
    )?)?;
    Dichotomy::new(rho, DensityOperator::from_diag(&[0.95, 0.05])?)
}

pub const QUBIT_GRID: usize = 10_000;

fn qubit_suite() -> Result<Vec<OracleReport>> {
    let mut out = vec![];
    let (p, q) = ([0.8, 0.2], [0.3, 0.7]);
    let d = Dichotomy::classical(&p, &q)?;
    for x in [0.1, 0.5, 0.9] {
        let o = qubit_beta_oracle(&d, x, QUBIT_GRID)?;
        out.push(OracleReport::new(format!("commuting beta_{x}"), classical_beta(&p, &q, x)?, o, 1e-4, "projector grid 10^4"));
    }
    let d = reference_qubit_pair()?;
    for x in [0.1, 0.5, 0.9] {
        let o = qubit_beta_oracle(&d, x, QUBIT_GRID)?;
        let b = quantum_beta(&d, x, 1e-9)?;
        out.push(OracleReport::new(format!("coherent beta_{x}"), b.midpoint(), o, 1e-6, "projector grid 10^4 + refinement"));
    }
    Ok(out)
}

fn stein_suite() -> Result<Vec<OracleReport>> {
    let ns: Vec<usize> = (1..=20).map(|k| 100 * k).collect();
    let s = stein_convergence_study(&[0.75, 0.25], &[0.5, 0.5], 0.1, &ns)?;
    let tol = 0.1 * s.predicted.abs();
    Ok(vec![OracleReport::new("second-order coefficient", s.predicted, s.fitted, tol, "n = 100..2000")])
}

fn random_simplex(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..d).map(|_| -rng.gen_range(1e-9f64..1.0).ln()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// Random Schmidt pairs and copy counts: exact finite-n LOCC test against direct majorization.
pub fn majorization_suite(count: usize, seed: u64) -> Result<Vec<OracleReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let (d1, d2) = (rng.gen_range(2..=3), rng.gen_range(2..=3));
        let (n, m) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let (a, b) = (random_simplex(&mut rng, d1), random_simplex(&mut rng, d2));
        let fast = locc_feasible_finite(&SchmidtVector::new(a.clone())?, &SchmidtVector::new(b.clone())?, n, m, 0.0)?;
        let slow = majorization_check(&tensor_power_vector(&b, m), &tensor_power_vector(&a, n));
        let flag = |v: bool| if v { 1.0 } else { 0.0 };
        out.push(OracleReport::new(format!("instance {k}: n={n} m={m}"), flag(fast), flag(slow), 0.0, "explicit tensor powers"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_recomputes_difference() {
        let r = OracleReport::new("x", 1.0, 1.25, 0.3, "");
        assert_eq!(r.abs_diff, 0.25);
        assert!(r.passed());
    }

    #[test]
    fn sesquinormal_oracle_reference_points() {
        let at0 = sesquinormal_oracle(0.0, 1.0, 20_001).unwrap();
        assert!((at0 - gaussian_cdf(1.0)).abs() < 1e-4);
        assert!(sesquinormal_oracle(1.0, 0.0, 20_001).unwrap().abs() < 1e-6);
        let v = sesquinormal_oracle(0.5, 0.7, 20_001).unwrap();
        assert!((v - sesquinormal_cdf(SesquinormalParams::new(0.5).unwrap(), 0.7)).abs() < 1e-3);
        assert!(sesquinormal_oracle(0.5, 0.7, 10).is_err());
    }

    #[test]
    fn sesquinormal_oracle_grid_halving_is_stable() {
        let a = sesquinormal_oracle(2.0, -1.0, 20_001).unwrap();
        let b = sesquinormal_oracle(2.0, -1.0, 10_001).unwrap();
        assert!((a - b).abs() < 1e-4);
    }

    #[test]
    fn qubit_oracle_cases() {
        let (p, q) = ([0.8, 0.2], [0.3, 0.7]);
        let d = Dichotomy::classical(&p, &q).unwrap();
        assert!((qubit_beta_oracle(&d, 0.3, 10_000).unwrap() - classical_beta(&p, &q, 0.3).unwrap()).abs() < 1e-4);
        assert_eq!(qubit_beta_oracle(&d, 1.0, 100).unwrap(), 0.0);
        let d = reference_qubit_pair().unwrap();
        let o = qubit_beta_oracle(&d, 0.2, 10_000).unwrap();
        let b = quantum_beta(&d, 0.2, 1e-9).unwrap();
        assert!(o >= b.lower - 1e-12 && o <= b.upper + 1e-9, "{o} {b:?}");
    }

    #[test]
    fn stein_study_cases() {
        let s = stein_convergence_study(&[0.5, 0.5], &[0.5, 0.5], 0.2, &[10, 20, 40]).unwrap();
        for r in &s.rows {
            assert!((r.exponent + (0.8f64).ln() / r.n as f64).abs() < 1e-12);
        }
        let s = stein_convergence_study(&[0.75, 0.25], &[0.5, 0.5], 0.5, &[200, 400, 800, 1600]).unwrap();
        assert_eq!(s.predicted, 0.0);
        assert!(s.fitted.abs() < 0.05, "{}", s.fitted);
    }

    #[test]
    fn majorization_cases() {
        let x = [0.6, 0.3, 0.1];
        assert!(majorization_check(&x, &x));
        assert!(majorization_check(&x, &[1.0 / 3.0; 3]));
        assert!(majorization_check(&[0.6, 0.4], &[0.5, 0.5]));
        assert!(!majorization_check(&[0.5, 0.5], &[0.6, 0.4]));
        let t = tensor_power_vector(&[0.6, 0.4], 2);
        for (a, b) in t.iter().zip([0.36, 0.24, 0.24, 0.16]) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
