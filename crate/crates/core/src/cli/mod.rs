//! Command-line front end.

mod config;
mod output;

use std::ffi::OsString;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use rayleigh_stokes::forward::{observation_u, solve};
use rayleigh_stokes::inverse::{recover_alpha, Observation as ObservationMap, ThresholdGate};
use rayleigh_stokes::kernel::{eval_b, eval_db_dt, KernelPoint};
use rayleigh_stokes::oracle::{solve_scalar, OracleConfig};
use rayleigh_stokes::quadrature::QuadratureConfig;
use rayleigh_stokes::sensitivity::{
    check_bound_lemmas, db_dalpha, estimate_t0, BoundCheck, LemmaGrid, ScanGrid,
};
use rayleigh_stokes::spectral::{DomainPoint, ObservationWeights};
use rayleigh_stokes::{Error, Result};

use config::{ProblemConfig, RunKind};
use output::{emit, json_document, num, Provenance, Table};

pub const SCHEMA: &str = include_str!("../../schema/problem_config.schema.json");

#[derive(Parser, Debug)]
#[command(
    name = "rayleigh-stokes",
    version,
    about = "Relaxation kernel, forward solver and fractional-order recovery"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate B and dB/dt on a uniform time grid.
    Kernel(KernelArgs),
    /// Tabulate dB/dα and its five-term breakdown over an α-grid.
    Sensitivity(SensitivityArgs),
    /// Estimate the threshold time beyond which dB/dα < 0.
    ScanT0(ScanArgs),
    /// Check the pointwise bounds behind the sign argument.
    CheckLemmas(LemmaArgs),
    /// Forward solve from a JSON problem file.
    Forward(ConfigArgs),
    /// Recover the fractional order from a JSON problem file.
    Recover(RecoverArgs),
    /// Brute-force time stepping of the scalar problem.
    Oracle(OracleArgs),
    /// Print the JSON schema of problem files.
    Schema,
}

#[derive(Args, Debug, Serialize)]
struct QuadArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    abs_tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_panels: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    panel_order: Option<usize>,
}

impl QuadArgs {
    fn resolve(&self) -> Result<QuadratureConfig> {
        let d = QuadratureConfig::default();
        QuadratureConfig::new(
            self.rel_tol.unwrap_or(d.rel_tol),
            self.abs_tol.unwrap_or(d.abs_tol),
            self.max_panels.unwrap_or(d.max_panels),
            self.panel_order.unwrap_or(d.panel_order),
        )
    }
}

#[derive(Args, Debug, Serialize)]
struct KernelArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    t_min: f64,
    #[arg(long)]
    t_max: f64,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    #[serde(skip)]
    quad: QuadArgs,
    /// Output file (standard output when absent).
    #[arg(long)]
    #[serde(skip)]
    output: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct SensitivityArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    t0: f64,
    #[arg(long)]
    alpha_min: f64,
    #[arg(long)]
    alpha_max: f64,
    #[arg(long)]
    n: usize,
    /// Smallest eigenvalue for the split constant; defaults to --lambda.
    #[arg(long)]
    lambda1: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    quad: QuadArgs,
    #[arg(long)]
    #[serde(skip)]
    output: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct ScanArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    lambda1: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha_min: f64,
    #[arg(long, default_value_t = 0.95)]
    alpha_max: f64,
    #[arg(long, default_value_t = 21)]
    n_alpha: usize,
    #[arg(long, default_value_t = 1.0)]
    start: f64,
    #[arg(long, default_value_t = 20)]
    doublings: u32,
    #[command(flatten)]
    #[serde(skip)]
    quad: QuadArgs,
    #[arg(long)]
    #[serde(skip)]
    output: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct LemmaArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    lambda1: f64,
    /// Comma-separated eigenvalues; defaults to λ1, 2λ1, 10λ1, 100λ1.
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    /// Comma-separated orders; defaults to 0.1, …, 0.9.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Comma-separated times; defaults to 1, 10, 100, 1000.
    #[arg(long, value_delimiter = ',')]
    t0s: Option<Vec<f64>>,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Violations listed in full (all are counted).
    #[arg(long, default_value_t = 20)]
    max_listed: usize,
    #[arg(long)]
    #[serde(skip)]
    output: Option<String>,
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// JSON problem file.
    #[arg(long)]
    config: String,
    /// Overrides `output.path`.
    #[arg(long)]
    output: Option<String>,
}

#[derive(Args, Debug)]
struct RecoverArgs {
    #[command(flatten)]
    base: ConfigArgs,
    /// Skip the threshold check; the result is marked uncertified.
    #[arg(long)]
    unsafe_t0: bool,
}

#[derive(Args, Debug, Serialize)]
struct OracleArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    y0: f64,
    #[arg(long)]
    h: f64,
    #[arg(long)]
    horizon: f64,
    /// Emit every k-th step.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[arg(long)]
    #[serde(skip)]
    output: Option<String>,
}

/// Uniform grid of `n` points from `a` to `b`; a single point is `a`.
fn linear_grid(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("grid needs at least one point".into()));
    }
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidInput(format!(
            "grid bounds [{a}, {b}] are not ordered and finite"
        )));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect())
}

fn cmd_kernel(args: &KernelArgs) -> Result<()> {
    let cfg = args.quad.resolve()?;
    let base = KernelPoint::new(args.lambda, args.gamma, args.alpha, args.t_min.max(0.0))?;
    if args.t_min < 0.0 {
        return Err(Error::param(
            "t-min",
            args.t_min,
            "times must be nonnegative",
        ));
    }
    let times = linear_grid(args.t_min, args.t_max, args.n)?;
    let prov = Provenance::new(&json!({"command": "kernel", "args": args, "quadrature": cfg}));
    let mut table = Table::new(["t", "B", "dBdt"]);
    for t in times {
        let p = base.with_t(t)?;
        let b = eval_b(&p, &cfg)?;
        // dB/dt is unbounded as t → 0+.
        let d = if t == 0.0 {
            f64::NEG_INFINITY
        } else {
            eval_db_dt(&p, &cfg)?
        };
        table.push_nums(&[t, b, d]);
    }
    emit(&table.render(&prov), args.output.as_deref())
}

fn cmd_sensitivity(args: &SensitivityArgs) -> Result<()> {
    let cfg = args.quad.resolve()?;
    let alphas = linear_grid(args.alpha_min, args.alpha_max, args.n)?;
    let lambda1 = args.lambda1.unwrap_or(args.lambda);
    let prov = Provenance::new(&json!({"command": "sensitivity", "args": args, "quadrature": cfg}));
    let mut table = Table::new([
        "alpha",
        "dB_dalpha_total",
        "I1",
        "I2",
        "I3",
        "I4",
        "I5",
        "fd_reference",
    ]);
    for a in alphas {
        let s = db_dalpha(
            &KernelPoint::new(args.lambda, args.gamma, a, args.t0)?,
            lambda1,
            &cfg,
        )?;
        let mut row = vec![a, s.total];
        row.extend(s.terms());
        row.push(s.fd_reference);
        table.push_nums(&row);
    }
    emit(&table.render(&prov), args.output.as_deref())
}

fn cmd_scan_t0(args: &ScanArgs) -> Result<()> {
    let cfg = args.quad.resolve()?;
    let alphas = linear_grid(args.alpha_min, args.alpha_max, args.n_alpha)?;
    let grid = ScanGrid {
        start: args.start,
        doublings: args.doublings,
    };
    let prov = Provenance::new(&json!({"command": "scan-t0", "args": args, "quadrature": cfg}));
    let est = estimate_t0(args.gamma, args.lambda1, &alphas, grid, &cfg)?;
    emit(&json_document(&prov, &est), args.output.as_deref())
}

fn cmd_check_lemmas(args: &LemmaArgs) -> Result<()> {
    let mut grid = LemmaGrid::standard(args.gamma, args.lambda1);
    if let Some(v) = &args.lambdas {
        grid.lambdas = v.clone();
    }
    if let Some(v) = &args.alphas {
        grid.alphas = v.clone();
    }
    if let Some(v) = &args.t0s {
        grid.t0s = v.clone();
    }
    grid.samples_per_regime = args.samples;
    let prov = Provenance::new(&json!({"command": "check-lemmas", "args": args, "grid": grid}));
    let report = check_bound_lemmas(&grid)?;
    let counts: serde_json::Map<String, serde_json::Value> = BoundCheck::ALL
        .iter()
        .map(|&c| {
            let key = serde_json::to_value(c)
                .unwrap()
                .as_str()
                .unwrap()
                .to_owned();
            let checked = report
                .checks
                .iter()
                .find(|(k, _)| *k == c)
                .map_or(0, |e| e.1);
            (
                key,
                json!({"checked": checked, "violations": report.violations_of(c)}),
            )
        })
        .collect();
    let listed: Vec<_> = report.violations.iter().take(args.max_listed).collect();
    let result = json!({
        "clean": report.is_clean(),
        "samples": report.samples,
        "checks": counts,
        "violations": listed,
    });
    emit(&json_document(&prov, &result), args.output.as_deref())
}

fn load_config(path: &str, kind: RunKind) -> Result<ProblemConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
    let c = ProblemConfig::parse(&text)?;
    c.validate(kind)?;
    Ok(c)
}

fn cmd_forward(args: &ConfigArgs) -> Result<()> {
    let mut c = load_config(&args.config, RunKind::Forward)?;
    if args.output.is_some() {
        c.output.path = args.output.clone();
    }
    let op = c.operator.build()?;
    let data = c.initial_data.build(&op)?;
    let weights = ObservationWeights::new(c.observation, &op)?;
    let alpha = c.alpha.expect("validated");
    let points = c.domain_points()?;
    if !points.is_empty() && c.output.field_path.is_none() {
        return Err(Error::InvalidInput(
            "`points` given without `output.field_path`".into(),
        ));
    }
    let prov = Provenance::new(&c);
    let sol = solve(&op, &data, alpha, c.gamma, &c.times, &c.quadrature)?;
    let norms = sol.norm_sq();
    let mut table = Table::new(["t", "norm_sq", "U"]);
    for (i, &t) in c.times.iter().enumerate() {
        let u = if t == 0.0 {
            data.coefficients()
                .iter()
                .zip(weights.values())
                .map(|(a, w)| (a * w).powi(2))
                .sum()
        } else {
            observation_u(&op, &data, alpha, c.gamma, t, &weights, &c.quadrature)?.value
        };
        table.push_nums(&[t, norms[i], u]);
    }
    emit(&table.render(&prov), c.output.path.as_deref())?;
    if let Some(field_path) = &c.output.field_path {
        let values = sol.synthesize(&points)?;
        let coords: &[&str] = match points.first() {
            Some(DomainPoint::Xy(..)) => &["x", "y"],
            Some(DomainPoint::Index(_)) => &["i"],
            _ => &["x"],
        };
        let mut field = Table::new(coords.iter().copied().chain(["t", "u"]));
        for (i, &t) in c.times.iter().enumerate() {
            for (j, p) in points.iter().enumerate() {
                let mut row: Vec<String> = match *p {
                    DomainPoint::X(x) => vec![num(x)],
                    DomainPoint::Xy(x, y) => vec![num(x), num(y)],
                    DomainPoint::Index(k) => vec![k.to_string()],
                };
                row.push(num(t));
                row.push(num(values[i][j]));
                field.push(row);
            }
        }
        emit(&field.render(&prov), Some(field_path))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RecoverReport<'a> {
    alpha_hat: f64,
    residual: f64,
    iterations: usize,
    certificate: &'a rayleigh_stokes::inverse::MonotonicityCertificate,
    #[serde(rename = "T0_used")]
    t0_used: Option<f64>,
    certified: bool,
    u_min: f64,
    u_max: f64,
    bracket: (f64, f64),
}

fn cmd_recover(args: &RecoverArgs) -> Result<()> {
    let mut c = load_config(&args.base.config, RunKind::Recover)?;
    if args.base.output.is_some() {
        c.output.path = args.base.output.clone();
    }
    if args.unsafe_t0 {
        c.threshold = ThresholdGate::Unsafe;
    }
    let op = c.operator.build()?;
    let data = c.initial_data.build(&op)?;
    let weights = ObservationWeights::new(c.observation, &op)?;
    let prov = Provenance::new(&c);
    let obs = ObservationMap {
        op: &op,
        data: &data,
        gamma: c.gamma,
        weights: &weights,
        cfg: &c.quadrature,
    };
    let rec = recover_alpha(&c.inverse_spec(), &obs, c.threshold)?;
    if !rec.certified {
        log::warn!("threshold check skipped: result is uncertified");
    }
    let report = RecoverReport {
        alpha_hat: rec.alpha_hat,
        residual: rec.residual,
        iterations: rec.iterations,
        certificate: &rec.range.certificate,
        t0_used: rec.t0_used,
        certified: rec.certified,
        u_min: rec.range.u_min,
        u_max: rec.range.u_max,
        bracket: rec.bracket,
    };
    emit(&json_document(&prov, &report), c.output.path.as_deref())
}

fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    if args.stride == 0 {
        return Err(Error::InvalidInput("stride must be at least 1".into()));
    }
    let cfg = OracleConfig::new(args.h, args.horizon)?;
    let prov = Provenance::new(&json!({"command": "oracle", "args": args}));
    let tr = solve_scalar(args.lambda, args.gamma, args.alpha, args.y0, &cfg)?;
    let mut table = Table::new(["t", "y"]);
    for (n, (t, y)) in tr.times().zip(&tr.y).enumerate() {
        if n % args.stride == 0 {
            table.push_nums(&[t, *y]);
        }
    }
    emit(&table.render(&prov), args.output.as_deref())
}

fn report_error(kind: &str, message: &str, code: i32) -> i32 {
    let doc = json!({"error": kind, "message": message, "exit_code": code});
    eprintln!("{doc}");
    code
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

/// Parses the arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            return report_error("invalid_arguments", e.render().to_string().trim(), 2);
        }
    };
    init_logging(cli.verbose);
    let result = match &cli.command {
        Command::Kernel(a) => cmd_kernel(a),
        Command::Sensitivity(a) => cmd_sensitivity(a),
        Command::ScanT0(a) => cmd_scan_t0(a),
        Command::CheckLemmas(a) => cmd_check_lemmas(a),
        Command::Forward(a) => cmd_forward(a),
        Command::Recover(a) => cmd_recover(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Schema => emit(SCHEMA, None),
    };
    match result {
        Ok(()) => 0,
        Err(e) => report_error(e.kind(), &e.to_string(), e.exit_code()),
    }
}
