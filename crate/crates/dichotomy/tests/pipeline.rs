use dichotomy::entangle::{locc_rate, SchmidtVector};
use dichotomy::matrixcore::{DensityOperator, Dichotomy, MatrixJson};
use dichotomy::rates::{rate, RateQuery, RateResult, Regime, Resource};
use dichotomy::thermo::{appendix_pair, coherent_qubit_family, Direction};

fn coherent_pair() -> (Dichotomy, Dichotomy) {
    let gamma = DensityOperator::from_diag(&[0.95, 0.05]).unwrap();
    let a = Dichotomy::new(coherent_qubit_family(0.85, 0.5).unwrap(), gamma.clone()).unwrap();
    let b = Dichotomy::new(DensityOperator::from_diag(&[0.75, 0.25]).unwrap(), gamma).unwrap();
    (a, b)
}

fn value(input: impl Into<Resource>, target: impl Into<Resource>, regime: Regime) -> RateResult {
    rate(&RateQuery::new(input, target, regime).unwrap()).unwrap()
}

#[test]
fn matrices_survive_json() {
    let rho = coherent_qubit_family(0.85, 0.7).unwrap();
    let text = serde_json::to_string(&MatrixJson::from_hermitian(rho.matrix())).unwrap();
    let back: MatrixJson = serde_json::from_str(&text).unwrap();
    let h = back.to_hermitian().unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((h.get(i, j) - rho.matrix().get(i, j)).norm() <= 1e-15);
        }
    }
}

#[test]
fn unbounded_results_survive_json() {
    let (a, _) = coherent_pair();
    let r = value(a.clone(), a, Regime::ExtremeHigh);
    assert!(r.is_unbounded());
    let text = serde_json::to_string(&r).unwrap();
    assert!(text.contains("\"inf\""));
    let back: RateResult = serde_json::from_str(&text).unwrap();
    assert_eq!(back.value, f64::INFINITY);
}

#[test]
fn regimes_are_ordered_for_a_commuting_target() {
    let (a, b) = coherent_pair();
    let zero = value(a.clone(), b.clone(), Regime::ZeroError).value;
    let low = value(a.clone(), b.clone(), Regime::LargeLow { lambda: 0.05 }).value;
    let first = value(a.clone(), b.clone(), Regime::FirstOrder { eps: 0.3 }).value;
    let high = value(a.clone(), b.clone(), Regime::LargeHigh { lambda: 0.05 }).value;
    assert!(zero <= low + 1e-9 && low <= first + 1e-9 && first <= high + 1e-9, "{zero} {low} {first} {high}");
    let mlo = value(a.clone(), b.clone(), Regime::ModerateLow { lambda: 1.0, a: 0.5 });
    let mhi = value(a, b, Regime::ModerateHigh { lambda: 1.0, a: 0.5 });
    assert_eq!(mlo.value, first);
    assert!(mlo.second_order.unwrap() <= 0.0 && mhi.second_order.unwrap() > 0.0);
}

#[test]
fn small_deviation_second_order_grows_with_error() {
    let (a, b) = coherent_pair();
    let s: Vec<f64> = [0.05, 0.3, 0.7, 0.95]
        .iter()
        .map(|&eps| value(a.clone(), b.clone(), Regime::Small { eps }).second_order.unwrap())
        .collect();
    assert!(s.windows(2).all(|w| w[0] < w[1]), "{s:?}");
}

#[test]
fn mixture_endpoints_match_single_pairs() {
    let (a, b) = appendix_pair(1.0, Direction::Forward).unwrap();
    let mixed = value(a, b, Regime::FirstOrder { eps: 0.5 }).value;
    let single = |p: &[f64]| Dichotomy::classical(p, &[1.0 / 3.0; 3]).unwrap();
    use dichotomy::thermo::appendix_states::{RHO1, RHO2};
    let direct = value(single(&RHO1), single(&RHO2), Regime::FirstOrder { eps: 0.5 }).value;
    assert!((mixed - direct).abs() < 1e-14);
}

#[test]
fn maximally_entangled_input_converts_at_schmidt_rank_ratio() {
    let bell = SchmidtVector::new(vec![0.5, 0.5]).unwrap();
    let target = SchmidtVector::new(vec![0.75, 0.25]).unwrap();
    let z = locc_rate(&bell, &target, Regime::ZeroError).unwrap();
    assert!((z.value - 1.0).abs() < 1e-9);
    let c = locc_rate(&bell, &target, Regime::FirstOrder { eps: 0.2 }).unwrap();
    let h2 = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
    assert!((c.value - 2f64.ln() / h2).abs() < 1e-12);
}
