//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `EXPECTED_FAILURES` fail for documented reasons; the process exits non-zero
//! only when the outcome of some criterion differs from that list.

use std::time::Instant;

use dichotomy::divergence::{classical_renyi, relative_entropy, relative_entropy_variance, Profile, RenyiOrder};
use dichotomy::entangle::{locc_rate, SchmidtVector};
use dichotomy::hypotest::{classical_beta, extreme_singleshot_beta, gamma_asymptotic, quantum_beta, GammaKind, Pinching};
use dichotomy::matrixcore::{eigh, CMat, ComplexHermitian, DensityOperator, Dichotomy, C64};
use dichotomy::optimize::bisect;
use dichotomy::oracle::{majorization_suite, qubit_beta_oracle, sesquinormal_oracle, stein_convergence_study, ORACLE_SEED, QUBIT_GRID, SESQUI_GRID};
use dichotomy::rates::{
    finite_n_feasible, finite_n_feasible_two_sided, first_order_rate, large_deviation_rate, small_deviation_rate,
    two_sided_rate, zero_error_upper, Moments, RateQuery, Regime,
};
use dichotomy::statfun::{erf, gaussian_cdf, log_sesquinormal_cdf, sesquinormal_cdf, sesquinormal_icdf, SesquinormalParams};
use dichotomy::thermo::{
    battery_gibbs, coherent_qubit_family, coherent_resonance_scan, mixture_closest_approach, mixture_resonance_scan,
    mixture_weak_roots, resonant_work, strong_resonance_check, work_assisted_rate, appendix_pair,
    BatterySpec, Direction, ThermalSetting,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that fail for reasons recorded in the README.
const EXPECTED_FAILURES: &[usize] = &[4, 11];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Check = fn() -> Outcome;

fn main() {
    let checks: [(usize, &str, f64, Check); 13] = [
        (1, "sesquinormal closed form vs oracle", 30.0, c1_sesquinormal),
        (2, "quantum vs classical beta", 60.0, c2_beta),
        (3, "single-shot extreme formulas", 60.0, c3_singleshot),
        (4, "Gamma edge cases", f64::INFINITY, c4_gamma_edges),
        (5, "Stein and second-order convergence", 120.0, c5_stein),
        (6, "finite-n rate bracketing", f64::INFINITY, c6_bracketing),
        (7, "battery factorization", f64::INFINITY, c7_battery),
        (8, "work-assisted resonance", f64::INFINITY, c8_work),
        (9, "coherent resonance scan", f64::INFINITY, c9_coherent),
        (10, "mixture weak/strong resonance", 120.0, c10_mixture),
        (11, "cross-regime consistency", f64::INFINITY, c11_cross_regime),
        (12, "two-sided thresholds", f64::INFINITY, c12_two_sided),
        (13, "entanglement consistency", f64::INFINITY, c13_entanglement),
    ];
    let mut surprises = vec![];
    let mut passed = 0;
    for (id, name, budget, f) in checks {
        let start = Instant::now();
        let mut o = f();
        let secs = start.elapsed().as_secs_f64();
        if secs > budget {
            o.pass = false;
            o.detail.push_str(&format!("; over the {budget} s budget"));
        }
        passed += o.pass as usize;
        println!("{} {id:>2} {name} [{secs:.1} s]: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if o.pass == EXPECTED_FAILURES.contains(&id) {
            surprises.push(id);
        }
    }
    println!("{passed}/13 criteria pass; expected failures: {EXPECTED_FAILURES:?}");
    if !surprises.is_empty() {
        println!("outcome differs from the expected list for: {surprises:?}");
        std::process::exit(1);
    }
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(ORACLE_SEED)
}

fn simplex(r: &mut ChaCha8Rng, d: usize, floor: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..d).map(|_| r.gen_range(floor..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn random_matrix(r: &mut ChaCha8Rng, d: usize) -> CMat {
    let data = (0..d * d).map(|_| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
    CMat::from_vec(d, data).unwrap()
}

fn random_unitary(r: &mut ChaCha8Rng, d: usize) -> CMat {
    let g = random_matrix(r, d);
    eigh(&ComplexHermitian::new(g.add(&g.adjoint()))).unwrap().vectors
}

/// G G† / Tr, resampled until λ_min ≥ floor.
fn random_state(r: &mut ChaCha8Rng, d: usize, floor: f64) -> DensityOperator {
    loop {
        let g = random_matrix(r, d);
        let h = ComplexHermitian::new(g.mul(&g.adjoint()));
        let rho = DensityOperator::new(h.scale(1.0 / h.trace())).unwrap();
        if rho.lambda_min() >= floor {
            return rho;
        }
    }
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).ln()).sum()
}

fn c1_sesquinormal() -> Outcome {
    let nus = [0.25, 0.5, 2.0, 4.0];
    let mut worst_oracle = 0.0f64;
    for &nu in &nus {
        for mu in [-3.0, -1.0, 0.0, 1.0, 3.0] {
            let a = sesquinormal_cdf(SesquinormalParams::new(nu).unwrap(), mu);
            let o = sesquinormal_oracle(nu, mu, SESQUI_GRID).unwrap();
            worst_oracle = worst_oracle.max((a - o).abs());
        }
    }
    let (mut worst_dual, mut worst_trip) = (0.0f64, 0.0f64);
    for &nu in &nus {
        let (p, inv) = (SesquinormalParams::new(nu).unwrap(), SesquinormalParams::new(1.0 / nu).unwrap());
        for eps in [0.01, 0.1, 0.2, 0.5, 0.8, 0.99] {
            let u = sesquinormal_icdf(p, eps).unwrap();
            worst_dual = worst_dual.max((u - nu.sqrt() * sesquinormal_icdf(inv, eps).unwrap()).abs());
            worst_trip = worst_trip.max((sesquinormal_cdf(p, u) - eps).abs());
        }
    }
    let (s0, s1) = (SesquinormalParams::new(0.0).unwrap(), SesquinormalParams::new(1.0).unwrap());
    let mut worst_limit = 0.0f64;
    for mu in [-4.0, -1.5, -0.3, 0.0, 0.3, 1.5, 4.0] {
        worst_limit = worst_limit.max((sesquinormal_cdf(s0, mu) - gaussian_cdf(mu)).abs());
        // half-normal: 2Φ(μ/2) − 1 = erf(μ/(2√2)) for μ ≥ 0
        let half = if mu > 0.0 { erf(mu / (2.0 * std::f64::consts::SQRT_2)) } else { 0.0 };
        worst_limit = worst_limit.max((sesquinormal_cdf(s1, mu) - half).abs());
    }
    outcome(
        worst_oracle <= 1e-3 && worst_dual <= 1e-10 && worst_trip <= 1e-8 && worst_limit <= 1e-12,
        format!("oracle {worst_oracle:.2e} (<=1e-3), duality {worst_dual:.2e} (<=1e-10), round trip {worst_trip:.2e} (<=1e-8), limits {worst_limit:.2e} (<=1e-12)"),
    )
}

fn c2_beta() -> Outcome {
    let mut r = rng();
    let mut worst = 0.0f64;
    for k in 0..20 {
        let d = 2 + k % 3;
        let (p, q) = (simplex(&mut r, d, 0.01), simplex(&mut r, d, 0.01));
        let u = random_unitary(&mut r, d);
        let rho = DensityOperator::new(ComplexHermitian::diag(&p).conjugate_by(&u)).unwrap();
        let sigma = DensityOperator::new(ComplexHermitian::diag(&q).conjugate_by(&u)).unwrap();
        let pair = Dichotomy::new(rho, sigma).unwrap();
        for x in [0.05, 0.3, 0.6, 0.9] {
            let b = quantum_beta(&pair, x, 1e-12).unwrap();
            let c = classical_beta(&p, &q, x).unwrap();
            worst = worst.max((b.lower - c).abs()).max((b.upper - c).abs());
        }
    }
    let gamma = DensityOperator::from_diag(&[0.95, 0.05]).unwrap();
    let pair = Dichotomy::new(coherent_qubit_family(0.85, 0.5).unwrap(), gamma).unwrap();
    let (mut widest, mut contained) = (0.0f64, true);
    for x in [0.1, 0.5, 0.9] {
        let b = quantum_beta(&pair, x, 1e-6).unwrap();
        widest = widest.max(b.width());
        let o = qubit_beta_oracle(&pair, x, QUBIT_GRID).unwrap();
        // the oracle is an achievable projector, so it may sit a rounding error above the bracket
        contained &= b.contains(o, 1e-9);
    }
    outcome(
        worst <= 1e-10 && widest <= 1e-6 && contained,
        format!("commuting collapse {worst:.2e} (<=1e-10), coherent bracket width {widest:.2e} (<=1e-6), oracle inside: {contained}"),
    )
}

fn c3_singleshot() -> Outcome {
    let mut r = rng();
    // a collapsed bracket has width 0; both routes are only certified to the eigensolver tolerance
    let floor = 1e-12;
    let (mut worst_abs, mut fails) = (0.0f64, 0);
    for k in 0..10 {
        let d = 2 + k % 2;
        let pair = Dichotomy::new(random_state(&mut r, d, 0.02), random_state(&mut r, d, 0.02)).unwrap();
        let x = 0.5 * pair.rho().lambda_min();
        let s = extreme_singleshot_beta(&pair, x, Pinching::None).unwrap();
        let cases = [(x, s.beta_x.unwrap()), (1.0 - x, s.beta_one_minus_x)];
        for (at, closed) in cases {
            let b = quantum_beta(&pair, at, 1e-12).unwrap();
            let off = (closed - b.midpoint()).abs();
            if off > b.width().max(floor) {
                fails += 1;
            }
            worst_abs = worst_abs.max(off - b.width());
        }
    }
    outcome(fails == 0, format!("{fails}/20 closed forms outside max(bracket width, {floor:e}); worst excess over the width {worst_abs:.2e}"))
}

fn c4_gamma_edges() -> Outcome {
    let mut r = rng();
    let (mut worst_zero, mut worst_cross, mut worst_pos, mut worst_neg_derived, mut worst_neg_literal) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..10 {
        let d = 2 + k % 3;
        let (p, q) = (simplex(&mut r, d, 0.02), simplex(&mut r, d, 0.02));
        let pair = Dichotomy::classical(&p, &q).unwrap();
        let (fwd, rev) = (kl(&p, &q), kl(&q, &p));
        // off the exact branch points too, so the optimization itself is exercised
        for dl in [0.0, 1e-9, -1e-9] {
            worst_zero = worst_zero.max((gamma_asymptotic(&pair, dl, GammaKind::Standard).unwrap() + fwd).abs());
            worst_cross = worst_cross.max(gamma_asymptotic(&pair, -rev + dl, GammaKind::Standard).unwrap().abs());
        }
        let thr = -p.iter().cloned().fold(f64::INFINITY, f64::min).ln();
        let d_pos = p.iter().zip(&q).map(|(a, b)| (a / b).ln()).fold(f64::NEG_INFINITY, f64::max);
        let d_neg = p.iter().zip(&q).map(|(a, b)| (a / b).ln()).fold(f64::INFINITY, f64::min);
        for lam in [1.01 * thr, 2.0 * thr, 5.0 * thr] {
            let up = gamma_asymptotic(&pair, lam, GammaKind::Standard).unwrap();
            worst_pos = worst_pos.max((up - (-lam - d_pos)).abs());
            let down = gamma_asymptotic(&pair, -lam, GammaKind::Standard).unwrap();
            worst_neg_literal = worst_neg_literal.max((down - (lam - d_neg)).abs());
            // 1 − β_x = x e^{−D_{−∞}} on n copies gives +λ + D_{−∞}
            worst_neg_derived = worst_neg_derived.max((down - (lam + d_neg)).abs());
        }
    }
    let pass = worst_zero <= 1e-6 && worst_cross <= 1e-6 && worst_pos <= 1e-9 && worst_neg_literal <= 1e-9;
    outcome(
        pass,
        format!(
            "Gamma_0+D {worst_zero:.2e}, Gamma at zero crossing {worst_cross:.2e} (<=1e-6); +lambda branch {worst_pos:.2e}; \
             -lambda branch vs lambda - D_-inf {worst_neg_literal:.2e} (<=1e-9), vs lambda + D_-inf {worst_neg_derived:.2e}"
        ),
    )
}

fn c5_stein() -> Outcome {
    let ns: Vec<usize> = (1..=20).map(|k| 100 * k).collect();
    let s = stein_convergence_study(&[0.75, 0.25], &[0.5, 0.5], 0.1, &ns).unwrap();
    let res: Vec<f64> = s.rows.iter().map(|r| r.residual.abs()).collect();
    // lattice effects make single steps noisy; compare successive blocks of five
    let blocks: Vec<f64> = res.chunks(5).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let decreasing = blocks.windows(2).all(|w| w[1] < w[0]) && res.last() < res.first();
    let rel = (s.fitted - s.predicted).abs() / s.predicted.abs();
    outcome(
        decreasing && rel <= 0.1,
        format!(
            "|residual| {:.4} at n=100 to {:.4} at n=2000 (block means decreasing: {decreasing}); slope {:.4} vs {:.4} ({:.1}%, <=10%)",
            res[0],
            res[res.len() - 1],
            s.fitted,
            s.predicted,
            100.0 * rel
        ),
    )
}

/// Largest R with a feasible finite-n conversion, by bisection.
fn max_feasible(f: impl Fn(f64) -> bool, hi: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, hi);
    while hi - lo > 1e-5 {
        let mid = 0.5 * (lo + hi);
        if f(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn c6_bracketing() -> Outcome {
    let cases: [([f64; 2], [f64; 2], [f64; 2], [f64; 2]); 3] = [
        ([0.8, 0.2], [0.3, 0.7], [0.7, 0.3], [0.4, 0.6]),
        ([0.9, 0.1], [0.5, 0.5], [0.6, 0.4], [0.2, 0.8]),
        ([0.6, 0.4], [0.2, 0.8], [0.85, 0.15], [0.5, 0.5]),
    ];
    let (n, eps) = (400usize, 0.25);
    let mut all = true;
    let mut notes = vec![];
    for (p1, q1, p2, q2) in cases {
        let q = RateQuery::new(Dichotomy::classical(&p1, &q1).unwrap(), Dichotomy::classical(&p2, &q2).unwrap(), Regime::Small { eps })
            .unwrap();
        let pred = small_deviation_rate(&q).unwrap();
        let second = pred.second_order.unwrap();
        let predicted = pred.at_scale(1.0 / (n as f64).sqrt());
        let band = 0.5 * second.abs() / (n as f64).sqrt();
        let found = max_feasible(|r| finite_n_feasible(&p1, &q1, &p2, &q2, n, r, eps).unwrap(), 4.0 * pred.value);
        let ok = (found - predicted).abs() <= band;
        all &= ok;
        notes.push(format!("{found:.4} vs {predicted:.4}±{band:.4}"));
    }
    outcome(all, format!("bisected vs predicted: {}", notes.join("; ")))
}

fn c7_battery() -> Outcome {
    let mut r = rng();
    let mut worst = 0.0f64;
    for k in 0..10 {
        let d = 2 + k % 2;
        let rho = random_state(&mut r, d, 0.0);
        let gamma = random_state(&mut r, d, 0.02);
        let (w, beta) = (r.gen_range(0.05..2.0), r.gen_range(0.2..3.0));
        let gw = battery_gibbs(beta, w).unwrap();
        let ground = DensityOperator::from_diag(&[1.0, 0.0]).unwrap();
        let joint = Dichotomy::new(rho.kron(&ground).unwrap(), gamma.kron(&gw).unwrap()).unwrap();
        let plain = Dichotomy::new(rho, gamma).unwrap();
        let lw = gw.matrix().diagonal()[0];
        for x in [0.05, 0.3, 0.7] {
            let a = quantum_beta(&joint, x, 1e-12).unwrap();
            let b = quantum_beta(&plain, x, 1e-12).unwrap();
            worst = worst.max((a.upper - lw * b.upper).abs()).max((a.lower - lw * b.lower).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max |beta(joint) − lambda_W beta| {worst:.2e} (<=1e-10)"))
}

fn c8_work() -> Outcome {
    let setting = ThermalSetting::from_gibbs_diag(&[0.95, 0.05]).unwrap();
    let gamma = setting.gibbs_in.clone();
    let a = Dichotomy::new(coherent_qubit_family(0.85, 0.5).unwrap(), gamma.clone()).unwrap();
    let b = Dichotomy::new(DensityOperator::from_diag(&[0.75, 0.25]).unwrap(), gamma).unwrap();
    let q = RateQuery::new(a.clone(), b.clone(), Regime::Small { eps: 0.1 }).unwrap();
    let (d1, v1, d2, v2) = (relative_entropy(&a), relative_entropy_variance(&a), relative_entropy(&b), relative_entropy_variance(&b));
    let w1 = resonant_work(&q.moments(), setting.beta).unwrap();
    let shifted = d1 - setting.beta * w1;
    let xi = (v1 / shifted) / (v2 / d2);
    let rate = work_assisted_rate(&q, &setting, BatterySpec { w1, w2: 0.0 }).unwrap();
    let (dxi, drate) = ((xi - 1.0).abs(), (rate.value - v1 / v2).abs());
    outcome(dxi <= 1e-9 && drate <= 1e-9, format!("w1 = {w1:.6}; |xi' − 1| {dxi:.2e}, |rate − V1/V2| {drate:.2e} (<=1e-9)"))
}

fn c9_coherent() -> Outcome {
    let gamma = DensityOperator::from_diag(&[0.95, 0.05]).unwrap();
    let xs: Vec<f64> = (1..400).map(|i| i as f64 / 400.0).collect();
    let scan = coherent_resonance_scan(0.85, &[0.75, 0.25], &gamma, &xs).unwrap();
    let at_roots: Vec<f64> = scan
        .roots
        .iter()
        .map(|&x| coherent_resonance_scan(0.85, &[0.75, 0.25], &gamma, &[x]).unwrap().rows[0].eps_threshold)
        .collect();
    let away = scan.rows.iter().filter(|row| scan.roots.iter().all(|z| (row.x - z).abs() > 0.01));
    let min_away = away.map(|row| row.eps_threshold).fold(f64::INFINITY, f64::min);
    let pass = scan.roots.len() == 2 && at_roots.iter().all(|&e| e <= 1e-9) && min_away > 0.0;
    outcome(pass, format!("roots {:?}, threshold there {:?}, min threshold 0.01 away {min_away:.3e}", scan.roots, at_roots))
}

fn c10_mixture() -> Outcome {
    let tol = dichotomy::config::Tolerances::default();
    let weak = mixture_weak_roots(Direction::Forward, 200).unwrap();
    let forward_case = weak.iter().find_map(|&l| {
        let (a, b) = appendix_pair(l, Direction::Forward).unwrap();
        let v = strong_resonance_check(a.profile(), b.profile(), tol.tol_xi, tol.tol_alpha, tol.alpha_grid).unwrap();
        (v.weak && !v.strong).then_some((l, v.argmin_alpha))
    });
    let (closest, gap) = mixture_closest_approach(Direction::Reverse, 200, &tol).unwrap();
    let (ra, rb) = appendix_pair(closest, Direction::Reverse).unwrap();
    let rv = strong_resonance_check(ra.profile(), rb.profile(), tol.tol_xi, tol.tol_alpha, tol.alpha_grid).unwrap();
    let mut below = true;
    let mut jumps = vec![];
    for dir in [Direction::Forward, Direction::Reverse] {
        let mut per_grid = vec![];
        for pts in [100usize, 200] {
            let lambdas: Vec<f64> = (0..=pts).map(|i| i as f64 / pts as f64).collect();
            let rows = mixture_resonance_scan(dir, &lambdas, &[], &tol).unwrap();
            below &= rows.iter().all(|r| r.zero_error <= r.first_order + 1e-12);
            let jump = |f: fn(&dichotomy::thermo::MixtureRow) -> f64| {
                rows.windows(2).map(|w| (f(&w[1]) - f(&w[0])).abs()).fold(0.0, f64::max)
            };
            per_grid.push((jump(|r| r.zero_error), jump(|r| r.first_order)));
        }
        // a continuous curve roughly halves its largest step when the grid is halved
        jumps.push((per_grid[1].0 / per_grid[0].0, per_grid[1].1 / per_grid[0].1));
    }
    let continuous = jumps.iter().all(|&(z, c)| z < 0.75 && c < 0.75);
    let pass = forward_case.is_some() && gap <= 1e-3 && below && continuous;
    outcome(
        pass,
        format!(
            "forward weak-not-strong at {forward_case:?} (fraction, argmin alpha); reverse min C−Z {gap:.2e} at {closest:.5} \
             (<=1e-3; argmin alpha there {:.3}, strong flag {}); Z<=C: {below}; step ratios on grid halving {jumps:.2?}",
            rv.argmin_alpha, rv.strong
        ),
    )
}

fn c11_cross_regime() -> Outcome {
    let a = Dichotomy::classical(&[0.7, 0.3], &[0.4, 0.6]).unwrap();
    let b = Dichotomy::classical(&[0.6, 0.4], &[0.3, 0.7]).unwrap();
    let first = first_order_rate(&RateQuery::new(a.clone(), b.clone(), Regime::FirstOrder { eps: 0.5 }).unwrap()).unwrap().value;
    let high = large_deviation_rate(&RateQuery::new(a.clone(), b.clone(), Regime::LargeHigh { lambda: 1e-4 }).unwrap()).unwrap().value;
    let d_high = (high - first).abs();
    // leading small-λ behaviour expected from the moderate-high coefficient: C + (1 + ξ^{-1/2})√(2λV1)/D2
    let m = Moments { d1: a.d(), v1: a.v(), d2: b.d(), v2: b.v() };
    let sqrt_law = first + m.moderate_second_order(1e-4, true);

    let lambda = 10.0 * a.log_lambda_min().abs().max(b.log_lambda_min().abs());
    let low = large_deviation_rate(&RateQuery::new(a.clone(), b.clone(), Regime::LargeLow { lambda }).unwrap()).unwrap().value;
    let (_, z) = zero_error_upper(&a, &b, 65, 1e-10);
    let d_low = (low - z).abs() / z;

    // ε = e^{−λ n^a} at λ = 1, a = ½, n = 10⁶ underflows; the exact inverse is found in log scale
    let (lam, n) = (1.0, 1e6f64);
    let nu = SesquinormalParams::new(1.0 / m.xi().unwrap()).unwrap();
    let mu = bisect(|u| log_sesquinormal_cdf(nu, u) + lam * n.sqrt(), -500.0, 0.0, 1e-12).unwrap();
    let small = m.v1.sqrt() * mu / m.d2 / n.sqrt();
    let moderate = m.moderate_second_order(lam, false) * n.powf(-0.25);
    let d_tail = ((small - moderate) / moderate).abs();

    outcome(
        d_high <= 1e-3 && d_low <= 0.02 && d_tail <= 0.05,
        format!(
            "large-high at 1e-4 {high:.5} vs first order {first:.5}: {d_high:.2e} (<=1e-3; sqrt-law value {sqrt_law:.5}); large-low at {lambda:.2} {low:.5} vs zero-error {z:.5}: \
             {:.2}% (<=2%); small tail vs moderate {:.2}% (<=5%)",
            100.0 * d_low,
            100.0 * d_tail
        ),
    )
}

fn c12_two_sided() -> Outcome {
    let (p1, q1, p2, q2) = ([0.8, 0.2], [0.3, 0.7], [0.7, 0.3], [0.4, 0.6]);
    let a = Dichotomy::classical(&p1, &q1).unwrap();
    let b = Dichotomy::classical(&p2, &q2).unwrap();
    let eps = 0.2;
    let q = RateQuery::new(a, b, Regime::Small { eps }).unwrap();
    let d1 = kl(&p1, &q1);
    let one_sided = small_deviation_rate(&q).unwrap();
    let above = two_sided_rate(&q, 1.01 * d1).unwrap();
    let below = two_sided_rate(&q, 0.99 * d1).unwrap();
    let flips = above.value == one_sided.value && above.second_order == one_sided.second_order && below.is_unbounded();

    let n = 200usize;
    let (lo, hi) = (0.5 * d1, 2.0 * d1);
    let big = 10.0 * one_sided.value;
    let feasible = |ls: f64, r: f64| finite_n_feasible_two_sided(&p1, &q1, &p2, &q2, n, r, eps, (-ls * n as f64).exp()).unwrap();
    let breakdown = feasible(lo, big);
    let bounded = !feasible(hi, big);
    let found = max_feasible(|r| feasible(hi, r), big);
    let predicted = one_sided.at_scale(1.0 / (n as f64).sqrt());
    let close = (found - predicted).abs() <= 0.1 * predicted;
    outcome(
        flips && breakdown && bounded && close,
        format!(
            "D1 = {d1:.4}; above threshold {} / below {}; n=200: R={big:.2} feasible at lambda_sigma=D1/2: {breakdown}, \
             at 2·D1: {}; max feasible at 2·D1 {found:.4} vs one-sided prediction {predicted:.4}",
            above.value, below.value, !bounded
        ),
    )
}

fn c13_entanglement() -> Outcome {
    let mut r = rng();
    let mut worst = 0.0f64;
    for k in 0..20 {
        let (d1, d2) = (2 + k % 3, 2 + (k / 3) % 3);
        let (p1, p2) = (simplex(&mut r, d1, 0.01), simplex(&mut r, d2, 0.01));
        let eps = [0.1, 0.3, 0.7][k % 3];
        let l = locc_rate(&SchmidtVector::new(p1.clone()).unwrap(), &SchmidtVector::new(p2.clone()).unwrap(), Regime::Small { eps }).unwrap();
        // (p, uniform) dichotomies: D = ln d − H and V = Var(ln p); cancel the ln d
        let u = |d: usize| vec![1.0 / d as f64; d];
        let (a, b) = (Dichotomy::classical(&p1, &u(d1)).unwrap(), Dichotomy::classical(&p2, &u(d2)).unwrap());
        let m = Moments {
            d1: (d1 as f64).ln() - relative_entropy(&a),
            v1: relative_entropy_variance(&a),
            d2: (d2 as f64).ln() - relative_entropy(&b),
            v2: relative_entropy_variance(&b),
        };
        worst = worst.max((l.value - m.first_order()).abs());
        worst = worst.max((l.second_order.unwrap() - m.small_second_order(eps).unwrap()).abs());
        // Rényi entropies through the generic divergence: H_α = ln d − D_α(p‖u)
        let h = (d1 as f64).ln() - classical_renyi(&p1, &u(d1), RenyiOrder::Finite(2.0));
        worst = worst.max((h - (-(p1.iter().map(|x| x * x).sum::<f64>()).ln())).abs());
    }
    let reports = majorization_suite(50, ORACLE_SEED).unwrap();
    let agree = reports.iter().filter(|r| r.passed()).count();
    outcome(
        worst <= 1e-10 && agree == 50,
        format!("max rate difference vs uniform-sigma dichotomies {worst:.2e} (<=1e-10); finite-n LOCC vs majorization {agree}/50"),
    )
}
