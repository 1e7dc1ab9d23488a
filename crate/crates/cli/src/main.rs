//! `fraclab` command-line front end.

mod config;
mod functions;
mod output;
mod suites;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use fraclab::caputo::{caputo_derivative, marchaud_derivative, CaputoScheme, TimeSeries};
use fraclab::heatflow::heat_kernel_value;
use fraclab::oracles::{oracle, ORACLE_NAMES};
use fraclab::pointops::{fraclap, regional_fraclap, FracLapMethod};
use fraclab::spectral::{
    dirichlet_spectral_fraclap, neumann_spectral_fraclap, torus_fraclap, torus_multiplier, SpectralBasis,
    SpectralCoefficients,
};
use fraclab::stats::power_law_fit;
use fraclab::walkers::*;
use fraclab::{Domain, FracError, FracOrder, FunctionHandle, GridFunction, QuadratureSpec};

use config::Settings;
use output::{emit, float, json_number, pretty, Format, Table};
use suites::{run_suite, CheckResult, SuiteOptions};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameters.
    Usage(String),
    /// A quadrature or extrapolation did not meet its tolerance.
    Tolerance(String),
    /// A verification check failed; the report has already been written.
    VerificationFailed(usize),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::VerificationFailed(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Tolerance(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Tolerance(m) => write!(f, "tolerance not reached: {m}"),
            CliError::VerificationFailed(n) => write!(f, "{n} check(s) failed"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<FracError> for CliError {
    fn from(e: FracError) -> Self {
        match e {
            FracError::ToleranceNotReached { .. } | FracError::ExtrapolationFailed(_) => {
                CliError::Tolerance(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "fraclab", version, about = "Numerical laboratory for fractional operators")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (walk: path prefix).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Plain `key = value` file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate an operator at points.
    Eval(EvalArgs),
    /// Run verification suites and emit a JSON report.
    Verify(VerifyArgs),
    /// Simulate a walker ensemble; writes density and MSD tables.
    Walk(WalkArgs),
    /// Tabulate the fractional heat kernel.
    Heat(HeatArgs),
    /// Caputo derivative of a function on a time grid.
    Caputo(CaputoArgs),
    /// Plain-text summary of all suites.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// fraclap, regional, spectral or caputo.
    #[arg(long, allow_hyphen_values = true)]
    op: Option<String>,
    /// Named oracle function.
    #[arg(long, allow_hyphen_values = true)]
    oracle: Option<String>,
    /// Function expression such as t^2, exp(-t) or gaussian.
    #[arg(long = "fn", allow_hyphen_values = true)]
    function: Option<String>,
    /// CSV file of x,value samples on a uniform grid (spectral only).
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    /// Comma-separated evaluation points.
    #[arg(long, allow_hyphen_values = true)]
    points: Option<String>,
    /// Comma-separated times (caputo).
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<String>,
    /// second-difference or pv-split.
    #[arg(long, allow_hyphen_values = true)]
    method: Option<String>,
    /// torus, dirichlet or neumann.
    #[arg(long, allow_hyphen_values = true)]
    basis: Option<String>,
    /// Grid nodes for spectral evaluation.
    #[arg(long, allow_hyphen_values = true)]
    n: Option<String>,
    /// Time steps for caputo.
    #[arg(long, allow_hyphen_values = true)]
    steps: Option<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, allow_hyphen_values = true)]
    suite: Option<String>,
    /// Reduced point sets and resolutions.
    #[arg(long)]
    quick: bool,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    /// Recorded in the report; the suites are deterministic.
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
}

#[derive(Args, Debug)]
struct WalkArgs {
    /// classical, censored, free or comb.
    #[arg(long, allow_hyphen_values = true)]
    kind: Option<String>,
    /// Ensemble size.
    #[arg(long = "N", allow_hyphen_values = true)]
    ensemble: Option<String>,
    /// Horizon in generator time units (not used by comb).
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    h: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    /// pareto or lattice jump law for the free walk.
    #[arg(long, allow_hyphen_values = true)]
    law: Option<String>,
    #[arg(long = "k-max", allow_hyphen_values = true)]
    k_max: Option<String>,
    /// Censored-walk interval (a, b).
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    /// Steps for the comb walk.
    #[arg(long, allow_hyphen_values = true)]
    steps: Option<String>,
    /// Histogram bins.
    #[arg(long, allow_hyphen_values = true)]
    bins: Option<String>,
}

#[derive(Args, Debug)]
struct HeatArgs {
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    /// Comma-separated points.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// lo:hi:count uniform grid, used when --x is absent.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
}

#[derive(Args, Debug)]
struct CaputoArgs {
    #[arg(long = "fn", allow_hyphen_values = true)]
    function: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    #[arg(long = "t-max", allow_hyphen_values = true)]
    t_max: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    steps: Option<String>,
    /// l1, direct or marchaud.
    #[arg(long, allow_hyphen_values = true)]
    scheme: Option<String>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    quick: bool,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
}

/// Global context shared by the commands.
struct Ctx {
    out: Option<PathBuf>,
    format: Option<String>,
    config: Option<PathBuf>,
    threads: Option<usize>,
}

impl Ctx {
    fn settings(&self, defaults: &[(&str, &str)], flags: Vec<(&str, Option<String>)>) -> CliResult<Settings> {
        let mut defaults = defaults.to_vec();
        if !defaults.iter().any(|(k, _)| *k == "format") {
            defaults.push(("format", "csv"));
        }
        let mut flags = flags;
        flags.push(("format", self.format.clone()));
        Settings::resolve(&defaults, self.config.as_deref(), flags)
    }

    fn format(&self, set: &Settings) -> CliResult<Format> {
        set.get::<String>("format")?.parse().map_err(CliError::Usage)
    }

    fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }
}

fn order(set: &Settings) -> CliResult<FracOrder> {
    let s: f64 = set.get("s")?;
    Ok(FracOrder::new(s)?)
}

fn positive(set: &Settings, key: &str) -> CliResult<f64> {
    let v: f64 = set.get(key)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{key} must be positive, got {v}")))
    }
}

fn count(set: &Settings, key: &str, min: usize) -> CliResult<usize> {
    let v: usize = set.get(key)?;
    if v >= min {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{key} must be at least {min}, got {v}")))
    }
}

fn oracle_name(name: &str) -> &str {
    match name {
        "arctan" => "arctan_layer",
        other => other,
    }
}

fn source_function(set: &Settings, s: FracOrder) -> CliResult<FunctionHandle> {
    match (set.raw("oracle"), set.raw("fn")) {
        (Some(_), Some(_)) => Err(CliError::Usage("give either --oracle or --fn, not both".into())),
        (Some(name), None) => {
            let name = oracle_name(name);
            if !ORACLE_NAMES.contains(&name) {
                return Err(CliError::Usage(format!(
                    "unknown oracle {name}; expected one of {}, arctan",
                    ORACLE_NAMES.join(", ")
                )));
            }
            Ok(oracle(name, Some(s))?.function)
        }
        (None, Some(spec)) => functions::parse_function(spec),
        (None, None) => Err(CliError::Usage("need --oracle or --fn".into())),
    }
}

fn cmd_eval(ctx: &Ctx, a: EvalArgs) -> CliResult<()> {
    let set = ctx.settings(
        &[
            ("op", "fraclap"),
            ("oracle", ""),
            ("fn", ""),
            ("grid", ""),
            ("s", "0.5"),
            ("points", "0"),
            ("t", "1"),
            ("a", "-1"),
            ("b", "1"),
            ("tol", "1e-9"),
            ("method", "second-difference"),
            ("basis", "torus"),
            ("n", "256"),
            ("steps", "1024"),
        ],
        vec![
            ("op", a.op),
            ("oracle", a.oracle),
            ("fn", a.function),
            ("grid", a.grid.map(|p| p.display().to_string())),
            ("s", a.s),
            ("points", a.points),
            ("t", a.t),
            ("a", a.a),
            ("b", a.b),
            ("tol", a.tol),
            ("method", a.method),
            ("basis", a.basis),
            ("n", a.n),
            ("steps", a.steps),
        ],
    )?;
    let format = ctx.format(&set)?;
    let s = order(&set)?;
    let op: String = set.get("op")?;
    let table = match op.as_str() {
        "fraclap" | "regional" => {
            let u = source_function(&set, s)?;
            let q = QuadratureSpec::with_tol(positive(&set, "tol")?);
            let points: Vec<f64> = set.list("points")?;
            if points.is_empty() {
                return Err(CliError::Usage("--points is empty".into()));
            }
            let method = match set.get::<String>("method")?.as_str() {
                "second-difference" => FracLapMethod::SecondDifference,
                "pv-split" => FracLapMethod::PvSplit,
                m => return Err(CliError::Usage(format!("unknown method {m}"))),
            };
            let omega = if op == "regional" {
                Some(Domain::interval(set.get("a")?, set.get("b")?)?)
            } else {
                None
            };
            let mut t = Table::new(&["x", "value", "est_error"]);
            for x in points {
                let e = match omega {
                    Some(d) => regional_fraclap(&u, x, s, d, &q)?,
                    None => fraclap(&u, x, s, &q, method)?,
                };
                t.push(vec![x, e.value, e.error]);
            }
            t
        }
        "spectral" => eval_spectral(&set, s)?,
        "caputo" => {
            let u = source_function(&set, s)?;
            let steps = count(&set, "steps", 2)?;
            let times: Vec<f64> = set.list("t")?;
            let mut t = Table::new(&["x", "value", "est_error"]);
            for tt in times {
                if !(tt > 0.0) {
                    return Err(CliError::Usage(format!("caputo times must be positive, got {tt}")));
                }
                let series = TimeSeries::uniform_from_handle(tt / steps as f64, steps, u.clone())?;
                let direct = caputo_derivative(&series, tt, s, CaputoScheme::DirectQuadrature)?;
                let l1 = caputo_derivative(&series, tt, s, CaputoScheme::L1)?;
                t.push(vec![tt, direct, (l1 - direct).abs()]);
            }
            t
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown operator {other}; expected fraclap, regional, spectral or caputo"
            )))
        }
    };
    emit(&table.render(format), ctx.out())
}

fn read_grid(path: &str) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
    let mut xs = vec![];
    let mut vs = vec![];
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let (Some(x), Some(v)) = (parts.next(), parts.next()) else {
            return Err(CliError::Usage(format!("{path}:{}: expected x,value", no + 1)));
        };
        match (x.parse::<f64>(), v.parse::<f64>()) {
            (Ok(x), Ok(v)) => {
                xs.push(x);
                vs.push(v);
            }
            // a header row
            _ if xs.is_empty() => continue,
            _ => return Err(CliError::Usage(format!("{path}:{}: cannot parse {line}", no + 1))),
        }
    }
    Ok((xs, vs))
}

/// Spectral evaluation on grid nodes. The error column compares with the
/// result after discarding the upper half of the spectrum.
fn eval_spectral(set: &Settings, s: FracOrder) -> CliResult<Table> {
    let basis: String = set.get("basis")?;
    let grid: GridFunction = match set.raw("grid") {
        Some(path) => {
            let (xs, vs) = read_grid(path)?;
            if xs.len() < 4 {
                return Err(CliError::Usage("grid file needs at least 4 samples".into()));
            }
            let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
            if xs.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) {
                return Err(FracError::NonUniformGrid.into());
            }
            let dom = match basis.as_str() {
                "torus" => Domain::torus_from(xs[0], h * xs.len() as f64)?,
                _ => Domain::interval(xs[0], xs[xs.len() - 1])?,
            };
            GridFunction::new(dom, vs)?
        }
        None => {
            let u = source_function(set, s)?;
            let n = count(set, "n", 4)?;
            let dom = match basis.as_str() {
                "torus" => {
                    let (a, b): (f64, f64) = (set.get("a")?, set.get("b")?);
                    Domain::torus_from(a, b - a)?
                }
                _ => Domain::interval(0.0, 1.0)?,
            };
            GridFunction::sample(dom, n, &u)?
        }
    };
    let (value, coarse) = match basis.as_str() {
        "torus" => {
            let full = torus_fraclap(&grid, s)?;
            let cut = 0.5 * std::f64::consts::PI / grid.spacing();
            let a = 2.0 * s.get();
            let half = torus_multiplier(&grid, |xi| if xi.abs() <= cut { xi.abs().powf(a) } else { 0.0 })?;
            (full, half)
        }
        "dirichlet" | "neumann" => {
            let b = if basis == "dirichlet" { SpectralBasis::dirichlet() } else { SpectralBasis::neumann() };
            let modes = grid.len() - 1;
            let apply = |m: usize| -> CliResult<GridFunction> {
                let c = SpectralCoefficients::project(&grid, b, m)?;
                let img = if basis == "dirichlet" {
                    dirichlet_spectral_fraclap(&c, s)?
                } else {
                    neumann_spectral_fraclap(&c, s)?
                };
                Ok(img.synthesize(grid.len())?)
            };
            (apply(modes)?, apply(modes / 2)?)
        }
        other => return Err(CliError::Usage(format!("unknown basis {other}; expected torus, dirichlet or neumann"))),
    };
    let mut t = Table::new(&["x", "value", "est_error"]);
    for (i, x) in grid.nodes().into_iter().enumerate() {
        let v = value.values()[i];
        t.push(vec![x, v, (v - coarse.values()[i]).abs()]);
    }
    Ok(t)
}

fn versions() -> Value {
    json!({ "fraclab": env!("CARGO_PKG_VERSION"), "rustc_edition": "2021" })
}

fn suite_report(set: &Settings, suite: &str, checks: &[CheckResult]) -> CliResult<Value> {
    let seed: u64 = set.get("seed")?;
    Ok(json!({
        "suite": suite,
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "paper_ref": c.paper_ref,
            "residual": json_number(c.residual),
            "threshold": c.threshold,
            "pass": c.pass,
        })).collect::<Vec<_>>(),
        "seed": seed,
        "versions": versions(),
        "config": set.effective(),
    }))
}

fn cmd_verify(ctx: &Ctx, a: VerifyArgs) -> CliResult<()> {
    let set = ctx.settings(
        &[("suite", "all"), ("quick", "false"), ("s", "0.5"), ("seed", "0"), ("format", "json")],
        vec![
            ("suite", a.suite),
            ("quick", a.quick.then(|| "true".to_string())),
            ("s", a.s),
            ("seed", a.seed),
        ],
    )?;
    let suite: String = set.get("suite")?;
    let opts = SuiteOptions {
        s: order(&set)?,
        quick: set.flag("quick")?,
    };
    let checks = run_suite(&suite, opts)?;
    let text = match ctx.format(&set)? {
        Format::Csv => {
            let mut out = String::from("name,paper_ref,residual,threshold,pass\n");
            for c in &checks {
                out.push_str(&format!(
                    "{},\"{}\",{},{},{}\n",
                    c.name,
                    c.paper_ref.replace('"', "\"\""),
                    float(c.residual),
                    float(c.threshold),
                    c.pass
                ));
            }
            out
        }
        Format::Json => pretty(&suite_report(&set, &suite, &checks)?),
    };
    emit(&text, ctx.out())?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(CliError::VerificationFailed(failed));
    }
    Ok(())
}

fn cmd_report(ctx: &Ctx, a: ReportArgs) -> CliResult<()> {
    let set = ctx.settings(
        &[("quick", "false"), ("s", "0.5"), ("seed", "0")],
        vec![("quick", a.quick.then(|| "true".to_string())), ("s", a.s)],
    )?;
    let opts = SuiteOptions {
        s: order(&set)?,
        quick: set.flag("quick")?,
    };
    let mut text = String::from("fraclab verification report\n\n");
    let mut failed = 0;
    for name in suites::SUITES {
        let checks = run_suite(name, opts)?;
        let pass = checks.iter().filter(|c| c.pass).count();
        failed += checks.len() - pass;
        text.push_str(&format!("[{name}] {pass}/{} passed\n", checks.len()));
        for c in &checks {
            text.push_str(&format!(
                "  {} {:<36} residual {:.3e} (threshold {:.1e})  {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.threshold,
                c.paper_ref
            ));
        }
        text.push('\n');
    }
    text.push_str("effective configuration\n");
    for (k, v) in set.effective() {
        text.push_str(&format!("  {k} = {v}\n"));
    }
    if let Some(n) = ctx.threads {
        text.push_str(&format!("  threads = {n}\n"));
    }
    emit(&text, ctx.out())?;
    if failed > 0 {
        return Err(CliError::VerificationFailed(failed));
    }
    Ok(())
}

fn cmd_heat(ctx: &Ctx, a: HeatArgs) -> CliResult<()> {
    let set = ctx.settings(
        &[("s", "0.5"), ("x", ""), ("grid", "-10:10:201"), ("t", "1")],
        vec![("s", a.s), ("x", a.x), ("grid", a.grid), ("t", a.t)],
    )?;
    let format = ctx.format(&set)?;
    let s = order(&set)?;
    let t = positive(&set, "t")?;
    let xs: Vec<f64> = match set.raw("x") {
        Some(_) => set.list("x")?,
        None => {
            let g: Vec<&str> = set.raw("grid").unwrap_or("").split(':').collect();
            let bad = || CliError::Usage("--grid must be lo:hi:count".into());
            if g.len() != 3 {
                return Err(bad());
            }
            let lo: f64 = g[0].trim().parse().map_err(|_| bad())?;
            let hi: f64 = g[1].trim().parse().map_err(|_| bad())?;
            let n: usize = g[2].trim().parse().map_err(|_| bad())?;
            if n < 2 || !(hi > lo) {
                return Err(bad());
            }
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        }
    };
    // G_s(x, t) = t^{−1/2s} G_s(x t^{−1/2s})
    let scale = t.powf(-0.5 / s.get());
    use rayon::prelude::*;
    let values: Vec<f64> = xs
        .par_iter()
        .map(|&x| heat_kernel_value(s, x * scale).map(|g| g * scale))
        .collect::<fraclab::Result<_>>()?;
    let mut table = Table::new(&["x", "value"]);
    for (x, v) in xs.iter().zip(values) {
        table.push(vec![*x, v]);
    }
    emit(&table.render(format), ctx.out())
}

fn cmd_caputo(ctx: &Ctx, a: CaputoArgs) -> CliResult<()> {
    let set = ctx.settings(
        &[("fn", "t^2"), ("s", "0.5"), ("t-max", "1"), ("steps", "256"), ("scheme", "l1")],
        vec![
            ("fn", a.function),
            ("s", a.s),
            ("t-max", a.t_max),
            ("steps", a.steps),
            ("scheme", a.scheme),
        ],
    )?;
    let format = ctx.format(&set)?;
    let s = order(&set)?;
    let u = functions::parse_function(&set.get::<String>("fn")?)?;
    let t_max = positive(&set, "t-max")?;
    let steps = count(&set, "steps", 1)?;
    let dt = t_max / steps as f64;
    let series = TimeSeries::uniform_from_handle(dt, steps, u)?;
    let scheme: String = set.get("scheme")?;
    if !matches!(scheme.as_str(), "l1" | "direct" | "marchaud") {
        return Err(CliError::Usage(format!("unknown scheme {scheme}; expected l1, direct or marchaud")));
    }
    use rayon::prelude::*;
    let values: Vec<f64> = (1..=steps)
        .into_par_iter()
        .map(|i| {
            let t = i as f64 * dt;
            match scheme.as_str() {
                "l1" => caputo_derivative(&series, t, s, CaputoScheme::L1),
                "direct" => caputo_derivative(&series, t, s, CaputoScheme::DirectQuadrature),
                _ => marchaud_derivative(&series, t, s),
            }
        })
        .collect::<fraclab::Result<_>>()?;
    let mut table = Table::new(&["t", "value"]);
    table.push(vec![0.0, 0.0]);
    for (i, v) in values.into_iter().enumerate() {
        table.push(vec![(i + 1) as f64 * dt, v]);
    }
    emit(&table.render(format), ctx.out())
}

fn cmd_walk(ctx: &Ctx, a: WalkArgs) -> CliResult<()> {
    let set = ctx.settings(
        &[
            ("kind", "classical"),
            ("N", "100000"),
            ("t", "0.5"),
            ("h", ""),
            ("s", "0.5"),
            ("seed", "0"),
            ("law", "pareto"),
            ("k-max", "1099511627776"),
            ("a", "-1"),
            ("b", "1"),
            ("steps", "10000"),
            ("bins", "100"),
        ],
        vec![
            ("kind", a.kind),
            ("N", a.ensemble),
            ("t", a.t),
            ("h", a.h),
            ("s", a.s),
            ("seed", a.seed),
            ("law", a.law),
            ("k-max", a.k_max),
            ("a", a.a),
            ("b", a.b),
            ("steps", a.steps),
            ("bins", a.bins),
        ],
    )?;
    let format = ctx.format(&set)?;
    let kind: String = set.get("kind")?;
    let n = count(&set, "N", 1)?;
    let seed: u64 = set.get("seed")?;
    let nbins = count(&set, "bins", 2)?;
    let t = || positive(&set, "t");
    let h_or = |default: f64| -> CliResult<f64> {
        match set.opt::<f64>("h")? {
            None => Ok(default),
            Some(h) if h > 0.0 => Ok(h),
            Some(h) => Err(CliError::Usage(format!("--h must be positive, got {h}"))),
        }
    };
    let (res, bins, tail) = match kind.as_str() {
        "classical" => {
            let h = h_or(0.02)?;
            let res = run_classical_walk(&WalkConfig::classical(h, t()?, n, seed)?)?;
            // reachable sites share the parity of the step count, so bins
            // span an even number of sites with edges halfway between them
            let sd = res.elapsed.sqrt();
            let cells = ((8.0 * sd / h / nbins as f64 / 2.0).ceil() as i64).max(1) * 2;
            let width = cells as f64 * h;
            let lo = -(nbins as f64 / 2.0).floor() * width + (res.steps % 2) as f64 * h - h;
            (res, Bins::new(lo, lo + nbins as f64 * width, nbins)?, false)
        }
        "censored" => {
            let s = order(&set)?;
            let dom = Domain::interval(set.get("a")?, set.get("b")?)?;
            let h = h_or(1.0 / 128.0)?;
            let res = run_censored_walk(&WalkConfig::censored(h, s, dom, t()?, n, seed)?)?;
            let (lo, hi) = match dom {
                Domain::Interval { a, b } => (a, b),
                _ => unreachable!(),
            };
            (res, Bins::new(lo, hi, nbins)?, false)
        }
        "free" => {
            let s = order(&set)?;
            let law = match set.get::<String>("law")?.as_str() {
                "pareto" => JumpLaw::ContinuumPareto,
                "lattice" => JumpLaw::LatticePowerLaw { k_max: set.get("k-max")? },
                l => return Err(CliError::Usage(format!("unknown law {l}; expected pareto or lattice"))),
            };
            let h = h_or(1e-3)?;
            let res = run_free_longjump_walk(&WalkConfig::long_jump(h, s, t()?, n, seed)?, law)?;
            let spread = res.generator_time.powf(0.5 / s.get());
            let half = 10.0 * spread;
            (res, Bins::new(-half, half, nbins)?, true)
        }
        "comb" => {
            let steps = count(&set, "steps", 16)?;
            let res = run_comb_walk(&CombConfig::new(steps, n, seed))?;
            let half = 4.0 * res.record.last().map_or(1.0, |o| o.msd.sqrt()).max(1.0);
            (res, Bins::new(-half, half, nbins)?, false)
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown walk kind {other}; expected classical, censored, free or comb"
            )))
        }
    };
    let density = empirical_density(&res, bins)?;
    let mut dtab = if tail {
        Table::new(&["bin_center", "mass", "tail_exponent"])
    } else {
        Table::new(&["bin_center", "mass"])
    };
    let tail_exp = if tail {
        let s = order(&set)?;
        let spread = res.generator_time.powf(0.5 / s.get());
        let r_min = 10.0 * spread;
        Some(tail_exponent(&res.positions, r_min)?)
    } else {
        None
    };
    let w = bins.width();
    for (x, v) in density.nodes().iter().zip(density.values()) {
        let mut row = vec![*x, v * w];
        if let Some(p) = tail_exp {
            row.push(p);
        }
        dtab.push(row);
    }
    let comb = kind == "comb";
    let rec: Vec<&Observation> = res.record.iter().filter(|o| o.step > 0 && o.msd > 0.0).collect();
    let fit_from = if comb { 100 } else { 0 };
    let fit_rec: Vec<&&Observation> = rec.iter().filter(|o| o.step >= fit_from).collect();
    let times: Vec<f64> = fit_rec.iter().map(|o| o.time).collect();
    let msd: Vec<f64> = fit_rec.iter().map(|o| o.msd).collect();
    let fit = if times.len() >= 2 { power_law_fit(&times, &msd).map(|f| f.0).unwrap_or(f64::NAN) } else { f64::NAN };
    let mut mtab = if comb {
        Table::new(&["t", "msd", "msd_y", "backbone_fraction", "fit_exponent"])
    } else {
        Table::new(&["t", "msd", "fit_exponent"])
    };
    for o in &rec {
        if comb {
            mtab.push(vec![o.time, o.msd, o.msd_y, o.backbone_fraction, fit]);
        } else {
            mtab.push(vec![o.time, o.msd, fit]);
        }
    }
    let prefix = ctx.out.clone().unwrap_or_else(|| PathBuf::from("walk"));
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let with_suffix = |suffix: &str| {
        let mut name = prefix.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(format!("_{suffix}.{ext}"));
        prefix.with_file_name(name)
    };
    let dpath = with_suffix("density");
    let mpath = with_suffix("msd");
    emit(&dtab.render(format), Some(&dpath))?;
    emit(&mtab.render(format), Some(&mpath))?;
    eprintln!(
        "{} walkers, {} steps, generator time {}: wrote {} and {}",
        res.len(),
        res.steps,
        float(res.generator_time),
        dpath.display(),
        mpath.display()
    );
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let ctx = Ctx {
        out: cli.out,
        format: cli.format,
        config: cli.config,
        threads: cli.threads,
    };
    match cli.command {
        Command::Eval(a) => cmd_eval(&ctx, a),
        Command::Verify(a) => cmd_verify(&ctx, a),
        Command::Walk(a) => cmd_walk(&ctx, a),
        Command::Heat(a) => cmd_heat(&ctx, a),
        Command::Caputo(a) => cmd_caputo(&ctx, a),
        Command::Report(a) => cmd_report(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
