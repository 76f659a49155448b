use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dichotomy"));
    c.env_remove("DICHOTOMY_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn identical_pairs_convert_one_to_one() {
    let a = scratch("pair_a.json", r#"{"p": [0.7, 0.3], "q": [0.4, 0.6]}"#);
    let a = a.to_str().unwrap();
    let o = run(&["rate", "--input", a, "--target", a, "--regime", "first", "--eps", "0.3"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["value"].as_f64().unwrap(), 1.0);
}

#[test]
fn quantum_json_input_is_accepted() {
    let body = r#"{"rho": {"dim": 2, "re": [[0.85, 0.1], [0.1, 0.15]]},
                   "sigma": {"dim": 2, "re": [[0.95, 0.0], [0.0, 0.05]]}}"#;
    let a = scratch("pair_q.json", body);
    let a = a.to_str().unwrap();
    let o = run(&["rate", "--input", a, "--target", a, "--regime", "small", "--eps", "0.2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!((json(&o)["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn coherent_preset_small_rate() {
    let o = run(&["rate", "--preset", "fig2", "--x", "1.0", "--regime", "small", "--eps", "0.05", "--n", "100"]);
    assert!(o.status.success());
    let v = json(&o);
    // pure input: D(ψ‖γ) = −⟨ψ| ln γ |ψ⟩
    let d1 = -(0.85 * 0.95f64.ln() + 0.15 * 0.05f64.ln());
    let d2 = 0.75 * (0.75f64 / 0.95).ln() + 0.25 * (0.25f64 / 0.05).ln();
    assert!((v["value"].as_f64().unwrap() - d1 / d2).abs() < 1e-10);
    let second = v["second_order"].as_f64().unwrap();
    let at_n = v["rate_at_copies"].as_f64().unwrap();
    assert!((at_n - (d1 / d2 + second / 10.0)).abs() < 1e-12);
}

#[test]
fn mixture_preset_zero_error_below_first_order() {
    let z = run(&["rate", "--preset", "appendixG", "--mix", "0.5", "--direction", "reverse", "--regime", "zero"]);
    let c = run(&["rate", "--preset", "appendixG", "--mix", "0.5", "--direction", "reverse", "--regime", "first", "--eps", "0.5"]);
    assert!(z.status.success() && c.status.success());
    let (z, c) = (json(&z)["value"].as_f64().unwrap(), json(&c)["value"].as_f64().unwrap());
    assert!(z > 0.0 && z <= c + 1e-9, "{z} {c}");
}

#[test]
fn exit_codes() {
    let bad = scratch("bad.json", r#"{"p": [0.7, 0.3]"#);
    let bad = bad.to_str().unwrap();
    assert_eq!(run(&["rate", "--input", bad, "--target", bad, "--regime", "zero"]).status.code(), Some(2));
    assert_eq!(run(&["rate", "--preset", "fig2", "--regime", "small", "--eps", "0.1"]).status.code(), Some(2));
    assert_eq!(run(&["rate", "--preset", "fig2", "--x", "0.5", "--regime", "small", "--eps", "1.5"]).status.code(), Some(2));
    assert_eq!(run(&["rate", "--regime", "nope"]).status.code(), Some(2));
    let a = scratch("pair_b.json", r#"{"p": [0.7, 0.3], "q": [0.4, 0.6]}"#);
    let a = a.to_str().unwrap();
    let two_sided = run(&["rate", "--input", a, "--target", a, "--regime", "zero", "--lambda-sigma", "0"]);
    assert_eq!(two_sided.status.code(), Some(3));
    let greedy = run(&["rate", "--preset", "fig2", "--x", "0.5", "--regime", "small", "--eps", "0.1", "--work", "5,0"]);
    assert_eq!(greedy.status.code(), Some(3));
}

#[test]
fn free_work_leaves_rate_unchanged() {
    let base = ["rate", "--preset", "fig2", "--x", "0.5", "--regime", "small", "--eps", "0.1"];
    let plain = json(&run(&base));
    let mut with = base.to_vec();
    with.extend(["--work", "0,0", "--beta", "1"]);
    let with = json(&run(&with));
    assert_eq!(plain["value"], with["value"]);
    assert_eq!(plain["second_order"], with["second_order"]);
}

#[test]
fn equal_states_give_straight_curve() {
    let a = scratch("flat.json", r#"{"p": [0.6, 0.4], "q": [0.6, 0.4]}"#);
    let o = run(&["curve", "--input", a.to_str().unwrap(), "--points", "11"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config sha256="));
    let rows: Vec<Vec<f64>> = lines
        .filter(|l| !l.starts_with('#') && !l.starts_with('x'))
        .map(|l| l.split(',').take(3).map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    for r in rows {
        assert!((r[1] - (1.0 - r[0])).abs() < 1e-12 && r[1] == r[2]);
    }
}

#[test]
fn gamma_sweep_crosses_quadrants() {
    let o = run(&["curve", "--preset", "fig2", "--x", "0.5", "--kind", "gamma", "--points", "41"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<(f64, f64)> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("lambda"))
        .map(|l| {
            let mut it = l.split(',').map(|c| c.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    // Γ decreases in λ and changes sign on the negative axis
    assert!(rows.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9));
    assert!(rows.first().unwrap().1 > 0.0 && rows.last().unwrap().1 < 0.0);
    assert!(rows.iter().any(|&(l, g)| l < 0.0 && g < 0.0));
}

#[test]
fn coherent_scan_reports_two_roots_deterministically() {
    let args = ["scan", "--preset", "fig2b", "--points", "200"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let roots = text.lines().find_map(|l| l.strip_prefix("# resonance_roots=")).unwrap();
    let roots: Vec<f64> = roots.split(';').map(|r| r.parse().unwrap()).collect();
    assert_eq!(roots.len(), 2);
    assert!(roots.iter().all(|&r| r > 0.0 && r < 1.0));
    assert!(text.lines().any(|l| l == "x,xi,eps_threshold"));
}

#[test]
fn mixture_scan_reports_weak_fraction() {
    let o = bin().args(["--threads", "2", "scan", "--preset", "fig6", "--direction", "forward", "--points", "8"]).output().unwrap();
    assert!(o.status.success());
    let text = stdout(&o);
    let weak: f64 = text.lines().find_map(|l| l.strip_prefix("# weak_resonance_fraction=")).unwrap().parse().unwrap();
    assert!((weak - 0.5535).abs() < 1e-3, "{weak}");
    let rows: Vec<Vec<String>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("mix"))
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 9);
    for r in rows {
        let (c, z): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!(z <= c + 1e-9);
    }
}

#[test]
fn verify_sesquinormal_passes() {
    let o = run(&["verify", "--suite", "sesquinormal"]);
    assert_eq!(o.status.code(), Some(0));
    let reports = json(&o);
    assert_eq!(reports.as_array().unwrap().len(), 20);
}

#[test]
fn config_from_environment_changes_hash() {
    let cfg = scratch("cfg.json", r#"{"seed": 11, "format": "csv"}"#);
    let with_env = bin().env("DICHOTOMY_CONFIG", &cfg).args(["verify", "--suite", "majorization"]).output().unwrap();
    assert!(with_env.status.success());
    let env_text = stdout(&with_env);
    let plain = run(&["verify", "--suite", "majorization", "--format", "csv"]);
    let first = |t: &str| t.lines().next().unwrap().to_string();
    assert!(env_text.starts_with("# config sha256="));
    assert_ne!(first(&env_text), first(&stdout(&plain)));
    let bad = scratch("cfg_bad.json", r#"{"tolerances": {"optimizer": 0.0}}"#);
    assert_eq!(bin().env("DICHOTOMY_CONFIG", &bad).args(["verify"]).output().unwrap().status.code(), Some(2));
}
