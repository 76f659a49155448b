//! Command-line front end: rates, trade-off curves, resonance scans and oracle checks.

mod config;
mod error;
mod states;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dichotomy::hypotest::{gamma_asymptotic_with, GammaGrid, GammaKind, TradeoffCurve};
use dichotomy::matrixcore::DensityOperator;
use dichotomy::oracle::verify_suite;
use dichotomy::rates::{rate, two_sided_rate, RateQuery, RateResult, Regime, Resource};
use dichotomy::thermo::{
    coherent_resonance_scan, mixture_closest_approach, mixture_resonance_scan, mixture_weak_roots, work_assisted_rate,
    BatterySpec, Direction, ThermalSetting,
};
use serde::Serialize;

use config::{Format, RunConfig};
use error::CliError;
use states::{preset_pair, read_dichotomy, RatePreset, FIG2_GIBBS, FIG2_POPULATION, FIG2_TARGET};

#[derive(Parser)]
#[command(name = "dichotomy", version, about = "Asymptotic transformation rates between quantum dichotomies")]
struct Cli {
    /// RunConfig JSON; defaults to $DICHOTOMY_CONFIG, then built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured output format.
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Worker threads for scans (results are merged in input order).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal rate of (input)^n → (target)^{Rn} in one error regime.
    Rate(RateArgs),
    /// β trade-off curve or the asymptotic log-odds curve Γ of the input pair.
    Curve(CurveArgs),
    /// Resonance scans along the built-in state families.
    Scan(ScanArgs),
    /// Runs an oracle suite; exit 4 on any tolerance breach.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct StateArgs {
    #[arg(long, conflicts_with = "preset")]
    input: Option<PathBuf>,
    #[arg(long, conflicts_with = "preset")]
    target: Option<PathBuf>,
    #[arg(long)]
    preset: Option<RatePreset>,
    /// Coherence of the fig2 input state, in [0,1].
    #[arg(long)]
    x: Option<f64>,
    /// Mixture fraction of the appendixG family, in [0,1].
    #[arg(long)]
    mix: Option<f64>,
    #[arg(long, default_value = "forward")]
    direction: Direction,
}

impl StateArgs {
    fn pair(&self) -> Result<(Resource, Resource), CliError> {
        if let Some(p) = self.preset {
            return preset_pair(p, self.x, self.mix, self.direction);
        }
        let input = self.input.as_ref().ok_or_else(|| CliError::Input("need --input or --preset".into()))?;
        let target = self.target.as_ref().ok_or_else(|| CliError::Input("need --target or --preset".into()))?;
        Ok((read_dichotomy(input)?.into(), read_dichotomy(target)?.into()))
    }

    fn input_only(&self) -> Result<Resource, CliError> {
        if let Some(p) = self.preset {
            return Ok(preset_pair(p, self.x, self.mix, self.direction)?.0);
        }
        let input = self.input.as_ref().ok_or_else(|| CliError::Input("need --input or --preset".into()))?;
        Ok(read_dichotomy(input)?.into())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegimeName {
    First,
    Small,
    ModerateLo,
    ModerateHi,
    LargeLo,
    LargeHi,
    Zero,
    Extreme,
}

#[derive(Args)]
struct RateArgs {
    #[command(flatten)]
    states: StateArgs,
    #[arg(long)]
    regime: RegimeName,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Exponent of the moderate regime, in (0,1).
    #[arg(long)]
    a: Option<f64>,
    /// Also report the rate at this number of copies (small and moderate regimes).
    #[arg(long)]
    n: Option<usize>,
    /// Battery work w1,w2 per copy and per √n (small regime; σ's taken as Gibbs states).
    #[arg(long, value_delimiter = ',')]
    work: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Exponent of an additional error e^{−λσ n} allowed on σ.
    #[arg(long)]
    lambda_sigma: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CurveKind {
    Beta,
    Gamma,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    states: StateArgs,
    #[arg(long, default_value = "beta")]
    kind: CurveKind,
    #[arg(long, default_value_t = 101)]
    points: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScanPreset {
    /// Threshold error along the coherent qubit family.
    Fig2b,
    /// First-order, zero-error and large-deviation rates along the mixture family.
    Fig6,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    preset: ScanPreset,
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, default_value = "forward")]
    direction: Direction,
    /// Large-deviation exponents for fig6.
    #[arg(long, value_delimiter = ',', default_value = "0.02,0.1,0.5")]
    exponents: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Sesquinormal,
    Qubit,
    Stein,
    Majorization,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: Suite,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    }
    let out = match &cli.command {
        Command::Rate(a) => cmd_rate(a, &cfg)?,
        Command::Curve(a) => cmd_curve(a, &cfg)?,
        Command::Scan(a) => cmd_scan(a, &cfg)?,
        Command::Verify(a) => {
            let (text, failures) = cmd_verify(a, &cfg)?;
            emit(&text)?;
            if failures > 0 {
                return Err(CliError::Tolerance(format!("{failures} oracle comparison(s) outside tolerance")));
            }
            return Ok(ExitCode::SUCCESS);
        }
    };
    emit(&out)?;
    Ok(ExitCode::SUCCESS)
}

fn emit(text: &str) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(text.as_bytes())?;
    stdout.flush()?;
    Ok(())
}

fn need(v: Option<f64>, flag: &str, regime: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Input(format!("regime {regime} needs --{flag}")))
}

fn regime_of(a: &RateArgs) -> Result<Regime, CliError> {
    Ok(match a.regime {
        RegimeName::First => Regime::FirstOrder { eps: need(a.eps, "eps", "first")? },
        RegimeName::Small => Regime::Small { eps: need(a.eps, "eps", "small")? },
        RegimeName::ModerateLo => {
            Regime::ModerateLow { lambda: need(a.lambda, "lambda", "moderate-lo")?, a: need(a.a, "a", "moderate-lo")? }
        }
        RegimeName::ModerateHi => {
            Regime::ModerateHigh { lambda: need(a.lambda, "lambda", "moderate-hi")?, a: need(a.a, "a", "moderate-hi")? }
        }
        RegimeName::LargeLo => Regime::LargeLow { lambda: need(a.lambda, "lambda", "large-lo")? },
        RegimeName::LargeHi => Regime::LargeHigh { lambda: need(a.lambda, "lambda", "large-hi")? },
        RegimeName::Zero => Regime::ZeroError,
        RegimeName::Extreme => Regime::ExtremeHigh,
    })
}

/// Hamiltonian −ln(σ)/β, whose Gibbs state at β is σ.
fn hamiltonian_of(sigma: &DensityOperator, beta: f64) -> Result<dichotomy::matrixcore::ComplexHermitian, CliError> {
    if sigma.lambda_min() <= 0.0 {
        return Err(CliError::Input("work-assisted rates need full-rank second states".into()));
    }
    Ok(sigma.eigen().map(|v| -v.ln() / beta))
}

fn thermal_setting(q: &RateQuery, beta: f64) -> Result<ThermalSetting, CliError> {
    let (Resource::Single(a), Resource::Single(b)) = (&q.input, &q.target) else {
        return Err(CliError::Input("work-assisted rates need single dichotomies".into()));
    };
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(CliError::Input(format!("--beta must be positive, got {beta}")));
    }
    Ok(ThermalSetting::new(hamiltonian_of(a.sigma(), beta)?, hamiltonian_of(b.sigma(), beta)?, beta)?)
}

#[derive(Serialize)]
struct RateReport {
    #[serde(flatten)]
    result: RateResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    copies: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    #[serde(serialize_with = "finite_or_text")]
    rate_at_copies: Option<f64>,
    config_sha256: String,
}

fn finite_or_text<S: serde::Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => dichotomy::config::extended_f64::serialize(x, s),
        None => s.serialize_none(),
    }
}

fn cmd_rate(a: &RateArgs, cfg: &RunConfig) -> Result<String, CliError> {
    let regime = regime_of(a)?;
    let (input, target) = a.states.pair()?;
    let q = RateQuery::new(input, target, regime)?.with_tolerances(cfg.tolerances.clone())?;
    let result = match (&a.work, a.lambda_sigma) {
        (Some(_), Some(_)) => return Err(CliError::Input("--work and --lambda-sigma cannot be combined".into())),
        (Some(w), None) => {
            if w.len() != 2 {
                return Err(CliError::Input(format!("--work takes w1,w2; got {} value(s)", w.len())));
            }
            let s = thermal_setting(&q, a.beta)?;
            work_assisted_rate(&q, &s, BatterySpec { w1: w[0], w2: w[1] })?
        }
        (None, Some(ls)) => two_sided_rate(&q, ls)?,
        (None, None) => rate(&q)?,
    };
    let rate_at_copies = a.n.and_then(|n| {
        let n = n as f64;
        match regime {
            Regime::Small { .. } => Some(result.at_scale(1.0 / n.sqrt())),
            Regime::ModerateLow { a, .. } | Regime::ModerateHigh { a, .. } => Some(result.at_scale(n.powf((a - 1.0) / 2.0))),
            _ => None,
        }
    });
    let report = RateReport { result, copies: a.n, rate_at_copies, config_sha256: cfg.sha256() };
    match cfg.format {
        Format::Json => Ok(serde_json::to_string_pretty(&report).map_err(|e| CliError::Output(e.to_string()))? + "\n"),
        Format::Csv => {
            let r = &report.result;
            let cell = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
            let kind = serde_json::to_value(r.bound_kind).map_err(|e| CliError::Output(e.to_string()))?;
            let row = vec![
                serde_json::to_value(r.regime).map_err(|e| CliError::Output(e.to_string()))?["regime"]
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
                r.value.to_string(),
                cell(r.second_order),
                kind["kind"].as_str().unwrap_or_default().to_string(),
                cell(r.thermal_lower),
                cell(report.rate_at_copies),
            ];
            write_csv(
                cfg,
                &[],
                &["regime", "value", "second_order", "bound_kind", "thermal_lower", "rate_at_copies"],
                vec![row],
            )
        }
    }
}

/// `# config sha256=…` line, extra `# key=value` metadata lines, header, rows.
fn write_csv(cfg: &RunConfig, meta: &[(String, String)], header: &[&str], rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut out = format!("# config sha256={}\n", cfg.sha256());
    for (k, v) in meta {
        out.push_str(&format!("# {k}={v}\n"));
    }
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))?);
    Ok(out)
}

fn num(v: f64) -> String {
    v.to_string()
}

fn cmd_curve(a: &CurveArgs, cfg: &RunConfig) -> Result<String, CliError> {
    if a.points < 2 {
        return Err(CliError::Input("--points must be at least 2".into()));
    }
    let input = a.states.input_only()?;
    let last = (a.points - 1) as f64;
    match a.kind {
        CurveKind::Beta => {
            let Resource::Single(d) = &input else {
                return Err(CliError::Input("β curves need a single dichotomy".into()));
            };
            let xs: Vec<f64> = (0..a.points).map(|i| i as f64 / last).collect();
            let curve = TradeoffCurve::sampled(d, &xs, cfg.tolerances.bracket)?;
            let rows = curve.csv_rows().iter().map(|r| r.iter().map(|&v| num(v)).collect()).collect();
            let meta = [("exact".to_string(), curve.exact.to_string())];
            write_csv(cfg, &meta, &["x", "beta_lower", "beta_upper", "threshold"], rows)
        }
        CurveKind::Gamma => {
            let p = input.profile();
            let hi = -p.log_lambda_min();
            let hi = if hi.is_finite() { 2.0 * hi } else { 4.0 * p.d() };
            let lo = if p.rev_d().is_finite() { -2.0 * p.rev_d() } else { -hi };
            let grid = GammaGrid { points: cfg.tolerances.gamma_grid, tol: cfg.tolerances.optimizer };
            let lambdas: Vec<f64> = (0..a.points).map(|i| lo + (hi - lo) * i as f64 / last).collect();
            let base = cfg.log_base;
            let rows = lambdas
                .iter()
                .map(|&l| {
                    let g = gamma_asymptotic_with(p, l, GammaKind::Standard, grid)?;
                    Ok(vec![num(base.from_nats(l)), num(base.from_nats(g))])
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let meta = [
                ("log_base".to_string(), format!("{base:?}").to_lowercase()),
                ("zero_crossing".to_string(), num(base.from_nats(-p.rev_d()))),
                ("relative_entropy".to_string(), num(base.from_nats(p.d()))),
            ];
            write_csv(cfg, &meta, &["lambda", "gamma"], rows)
        }
    }
}

fn cmd_scan(a: &ScanArgs, cfg: &RunConfig) -> Result<String, CliError> {
    if a.points < 2 {
        return Err(CliError::Input("--points must be at least 2".into()));
    }
    let pts = a.points;
    match a.preset {
        ScanPreset::Fig2b => {
            let xs: Vec<f64> = (0..=pts).map(|i| i as f64 / pts as f64).collect();
            let gamma = DensityOperator::from_diag(&FIG2_GIBBS)?;
            let scan = coherent_resonance_scan(FIG2_POPULATION, &FIG2_TARGET, &gamma, &xs)?;
            let rows = scan.rows.iter().map(|r| vec![num(r.x), num(r.xi), num(r.eps_threshold)]).collect();
            let roots: Vec<String> = scan.roots.iter().map(|&r| num(r)).collect();
            let meta = [("resonance_roots".to_string(), roots.join(";"))];
            write_csv(cfg, &meta, &["x", "xi", "eps_threshold"], rows)
        }
        ScanPreset::Fig6 => {
            if a.exponents.iter().any(|&l| !(l > 0.0)) {
                return Err(CliError::Input("exponents must be positive".into()));
            }
            let lambdas: Vec<f64> = (0..=pts).map(|i| i as f64 / pts as f64).collect();
            let rows = mixture_resonance_scan(a.direction, &lambdas, &a.exponents, &cfg.tolerances)?;
            let weak = mixture_weak_roots(a.direction, pts)?;
            let (closest, gap) = mixture_closest_approach(a.direction, pts, &cfg.tolerances)?;
            let meta = [
                ("direction".to_string(), format!("{:?}", a.direction).to_lowercase()),
                ("weak_resonance_fraction".to_string(), weak.iter().map(|&r| num(r)).collect::<Vec<_>>().join(";")),
                ("closest_approach_fraction".to_string(), num(closest)),
                ("closest_approach_gap".to_string(), num(gap)),
            ];
            let mut header = vec!["mix".to_string(), "first_order".into(), "zero_error".into(), "weak".into(), "strong".into()];
            header.extend(a.exponents.iter().map(|l| format!("large_low_{l}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let rows = rows
                .iter()
                .map(|r| {
                    let mut v = vec![num(r.lambda), num(r.first_order), num(r.zero_error), r.weak.to_string(), r.strong.to_string()];
                    v.extend(r.large.iter().map(|&x| num(x)));
                    v
                })
                .collect();
            write_csv(cfg, &meta, &header, rows)
        }
    }
}

fn cmd_verify(a: &VerifyArgs, cfg: &RunConfig) -> Result<(String, usize), CliError> {
    let name = match a.suite {
        Suite::Sesquinormal => "sesquinormal",
        Suite::Qubit => "qubit",
        Suite::Stein => "stein",
        Suite::Majorization => "majorization",
        Suite::All => "all",
    };
    let reports = verify_suite(name, cfg.seed)?;
    let failures = reports.iter().filter(|r| !r.passed()).count();
    let text = match cfg.format {
        Format::Json => serde_json::to_string_pretty(&reports).map_err(|e| CliError::Output(e.to_string()))? + "\n",
        Format::Csv => {
            let rows = reports
                .iter()
                .map(|r| {
                    vec![
                        r.quantity.clone(),
                        num(r.analytic),
                        num(r.oracle),
                        num(r.abs_diff),
                        num(r.tolerance),
                        r.grid.clone(),
                        r.passed().to_string(),
                    ]
                })
                .collect();
            write_csv(cfg, &[], &["quantity", "analytic", "oracle", "abs_diff", "tolerance", "grid", "passed"], rows)?
        }
    };
    Ok((text, failures))
}
