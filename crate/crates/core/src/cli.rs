//! Command-line front end: `price`, `kernel`, `compare` and `moments`.
//!
//! Exit codes: 0 success, 1 usage error, 2 domain error, 3 numerical or
//! convergence failure.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::black_scholes::bs_price;
use crate::engine::{ReferenceMeasure, VariantMode};
use crate::error::Error;
use crate::gauss_path::{wick_kurtosis, wick_moment_check};
use crate::kernel::{KernelSpec, KernelTable};
use crate::mc::{derive_seed, with_threads, PriceEstimate};
use crate::mean_path::{price_mean_path, QuadSpec, SigmaStarReading};
use crate::mg_alpha1::{kernel_estimate_alpha1, price_alpha1_with};
use crate::mg_general::{kernel_estimate_general, price_general_with};
use crate::params::{GridSpec, MCSpec, MGParams, MarketParams, ParamFile};
use crate::sde_oracle::{hull_white_mixing_price, price_oracle_with, Drift};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable capping the worker count (0 or unset = automatic).
pub const THREADS_ENV: &str = "MGPATH_THREADS";

#[derive(Parser, Debug)]
#[command(name = "mgpath", version, about = "European call pricing under Merton-Garman stochastic volatility")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Price one call with one method.
    Price(PriceArgs),
    /// Tabulate the evolution kernel on an (x0, y0) grid.
    Kernel(KernelArgs),
    /// Price with several methods and report pairwise z-scores.
    Compare(CompareArgs),
    /// Sampled moments of the Gaussian velocity measure.
    Moments(MomentsArgs),
}

#[derive(Args, Debug, Clone)]
struct ParamArgs {
    /// JSON file with any of the parameter fields; flags win over the file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    spot: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    strike: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rate: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    xi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
    /// Current log-variance.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "variance")]
    y: Option<f64>,
    /// Current variance; shorthand for `--y ln(variance)`.
    #[arg(long, allow_hyphen_values = true)]
    variance: Option<f64>,
    #[arg(long)]
    n_steps: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Pair each path with its mirror image.
    #[arg(long)]
    antithetic: bool,
}

#[derive(Args, Debug, Clone)]
struct MethodArgs {
    #[arg(long, default_value = "exact")]
    variant: VariantMode,
    #[arg(long, default_value = "drifted")]
    reference: ReferenceMeasure,
    /// Black-Scholes volatility; defaults to the current volatility `e^{y/2}`.
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<f64>,
    /// Minimum quadrature nodes per axis for the mean-path pricer.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, default_value = "variance")]
    sigma_star: SigmaStarReading,
    /// Drift of the simulated price: `rn` or `phys:<phi>`.
    #[arg(long, default_value = "rn")]
    drift: Drift,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    output: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PriceArgs {
    #[arg(long, value_enum)]
    method: Method,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    opts: MethodArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[arg(long, value_enum, default_value_t = Method::MgAlpha1)]
    method: Method,
    #[arg(long)]
    y_bins: Option<usize>,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    opts: MethodArgs,
    /// `csv` writes the table; `json` writes the table and its summary.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    output: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Comma-separated methods, each optionally suffixed `:exact` or `:symmetrized`.
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<String>,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    opts: MethodArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    output: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MomentsArgs {
    #[arg(long, default_value_t = 4)]
    order: u32,
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, default_value_t = 64)]
    n_steps: usize,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Bs,
    MgAlpha1,
    MgGeneral,
    MeanPath,
    SdeOracle,
    HullWhite,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Bs => "bs",
            Method::MgAlpha1 => "mg-alpha1",
            Method::MgGeneral => "mg-general",
            Method::MeanPath => "mean-path",
            Method::SdeOracle => "sde-oracle",
            Method::HullWhite => "hull-white",
        }
    }

    fn has_variant(self) -> bool {
        matches!(self, Method::MgAlpha1 | Method::MgGeneral)
    }
}

/// Method plus the action variant where one applies, e.g. `mg-alpha1:symmetrized`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct MethodSpec {
    pub method: Method,
    pub variant: VariantMode,
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.method.has_variant() {
            write!(f, "{}:{}", self.method.name(), self.variant)
        } else {
            f.write_str(self.method.name())
        }
    }
}

impl FromStr for MethodSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (name, variant) = match s.split_once(':') {
            Some((n, v)) => (n, Some(v.parse::<VariantMode>()?)),
            None => (s, None),
        };
        let method = Method::from_str(name.trim(), false).map_err(|_| format!("unknown method `{name}`"))?;
        if variant.is_some() && !method.has_variant() {
            return Err(format!("method `{name}` has no variants"));
        }
        Ok(Self {
            method,
            variant: variant.unwrap_or_default(),
        })
    }
}

/// Error raised for malformed invocations that clap itself accepts.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

pub const DEFAULT_SEED: u64 = 42;

/// Fully resolved parameter block shared by all methods of one run.
#[derive(Debug, Clone, Copy)]
struct Resolved {
    market: MarketParams,
    mg: MGParams,
    grid: GridSpec,
    mc: MCSpec,
}

fn resolve(args: &ParamArgs) -> anyhow::Result<Resolved> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ParamFile::from_json(&text).map_err(|e| usage(format!("bad config file {}: {e}", path.display())))?
        }
        None => ParamFile::default(),
    };
    let flags = ParamFile {
        spot: args.spot,
        strike: args.strike,
        rate: args.rate,
        tau: args.tau,
        lambda: args.lambda,
        mu: args.mu,
        xi: args.xi,
        alpha: args.alpha,
        rho: args.rho,
        y: args.y.or(args.variance.map(f64::ln)),
        n_steps: args.n_steps,
        n_paths: args.paths,
        seed: args.seed,
        antithetic: args.antithetic.then_some(true),
    };
    let p = file.overlay(&flags);
    let tau = p.tau.unwrap_or(1.0);
    let market = MarketParams::new(p.spot.unwrap_or(100.0), p.strike.unwrap_or(100.0), p.rate.unwrap_or(0.05), tau);
    let mg = MGParams::new(
        p.lambda.unwrap_or(0.0),
        p.mu.unwrap_or(0.0),
        p.xi.unwrap_or(0.3),
        p.alpha.unwrap_or(1.0),
        p.rho.unwrap_or(0.0),
        p.y.unwrap_or(0.04f64.ln()),
    );
    let market = market.validate()?;
    let mg = mg.validate()?;
    let grid = GridSpec::new(tau, p.n_steps.unwrap_or(64))?;
    let mc = MCSpec::new(p.n_paths.unwrap_or(100_000), p.seed.unwrap_or(DEFAULT_SEED))
        .antithetic(p.antithetic.unwrap_or(false))
        .validate()?;
    Ok(Resolved { market, mg, grid, mc })
}

fn params_json(r: &Resolved) -> Value {
    json!({
        "spot": r.market.spot,
        "strike": r.market.strike,
        "rate": r.market.rate,
        "tau": r.market.tau,
        "lambda": r.mg.lambda,
        "mu": r.mg.mu,
        "xi": r.mg.xi,
        "alpha": r.mg.alpha,
        "rho": r.mg.rho,
        "y": r.mg.y,
        "n_steps": r.grid.n_steps,
        "n_paths": r.mc.n_paths,
        "antithetic": r.mc.antithetic,
    })
}

/// One method's result.
struct Priced {
    label: String,
    estimate: PriceEstimate,
    sub_seed: Option<u64>,
    extra: Map<String, Value>,
    seconds: f64,
}

fn price_one(spec: MethodSpec, r: &Resolved, opts: &MethodArgs) -> anyhow::Result<Priced> {
    let label = spec.to_string();
    let sub_seed = derive_seed(r.mc.seed, &label);
    let mc = r.mc.with_seed(sub_seed);
    let mut extra = Map::new();
    let start = Instant::now();
    let (estimate, stochastic) = match spec.method {
        Method::Bs => {
            let sigma = opts.sigma.unwrap_or_else(|| r.mg.volatility());
            extra.insert("sigma".into(), json!(sigma));
            (PriceEstimate::deterministic(bs_price(&r.market, sigma)?.price), false)
        }
        Method::MgAlpha1 => {
            r.mg.require_alpha_one()?;
            (price_alpha1_with(&r.market, &r.mg, &r.grid, &mc, spec.variant, opts.reference)?, true)
        }
        Method::MgGeneral => (price_general_with(&r.market, &r.mg, &r.grid, &mc, spec.variant, opts.reference)?, true),
        Method::MeanPath => {
            r.mg.require_alpha_one()?;
            let quad = match opts.nodes {
                Some(n) => QuadSpec::default().with_min_nodes(n),
                None => QuadSpec::default(),
            };
            let p = price_mean_path(&r.market, &r.mg, &quad, opts.sigma_star)?;
            extra.insert("nodes".into(), json!(p.nodes));
            extra.insert("rel_change".into(), json!(p.rel_change));
            extra.insert("sigma_star".into(), json!(opts.sigma_star));
            (PriceEstimate::deterministic(p.price), false)
        }
        Method::SdeOracle => {
            let o = price_oracle_with(&r.market, &r.mg, &r.grid, &mc, opts.drift)?;
            extra.insert("truncation_frequency".into(), json!(o.truncation_frequency));
            extra.insert("drift".into(), json!(opts.drift));
            (o.estimate, true)
        }
        Method::HullWhite => (hull_white_mixing_price(&r.market, &r.mg, &r.grid, &mc)?, true),
    };
    if spec.method.has_variant() {
        extra.insert("variant".into(), json!(spec.variant));
        extra.insert("reference".into(), json!(opts.reference));
    }
    Ok(Priced {
        label,
        estimate,
        sub_seed: stochastic.then_some(sub_seed),
        extra,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// `.`-decimal, 17 significant digits.
fn num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:.16e}")
    }
}

fn ensure_finite(v: &Value) -> anyhow::Result<()> {
    match v {
        Value::Null => bail!("report contains a non-finite number"),
        Value::Array(a) => a.iter().try_for_each(ensure_finite),
        Value::Object(o) => o.values().try_for_each(ensure_finite),
        _ => Ok(()),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn json_text(v: &Value) -> anyhow::Result<String> {
    ensure_finite(v)?;
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn priced_json(p: &Priced) -> Value {
    let mut o = Map::new();
    o.insert("method".into(), json!(p.label));
    o.insert("price".into(), json!(p.estimate.price));
    o.insert("stderr".into(), json!(p.estimate.stderr));
    o.insert("n_paths".into(), json!(p.estimate.n_paths));
    o.insert("effective_sample_size".into(), json!(p.estimate.effective_sample_size));
    o.insert("mean_weight".into(), json!(p.estimate.mean_weight));
    if let Some(s) = p.sub_seed {
        o.insert("sub_seed".into(), json!(s));
    }
    o.insert("seconds".into(), json!(p.seconds));
    o.extend(p.extra.clone());
    Value::Object(o)
}

fn header(command: &str, r: &Resolved) -> Map<String, Value> {
    let mut o = Map::new();
    o.insert("command".into(), json!(command));
    o.insert("version".into(), json!(crate::VERSION));
    o.insert("seed".into(), json!(r.mc.seed));
    o.insert("params".into(), params_json(r));
    o
}

fn run_price(a: PriceArgs) -> anyhow::Result<()> {
    let r = resolve(&a.params)?;
    let spec = MethodSpec {
        method: a.method,
        variant: a.opts.variant,
    };
    let p = price_one(spec, &r, &a.opts)?;
    match a.output.output {
        Format::Json => {
            let mut o = header("price", &r);
            if let Value::Object(m) = priced_json(&p) {
                o.extend(m);
            }
            emit(&a.output.out, &json_text(&Value::Object(o))?)
        }
        Format::Csv => {
            let v = params_json(&r);
            let cols = ["spot", "strike", "rate", "tau", "lambda", "mu", "xi", "alpha", "rho", "y", "n_steps", "n_paths"];
            let mut text = String::from("method,price,stderr,n_paths,seconds,seed,version");
            for c in cols {
                text.push(',');
                text.push_str(c);
            }
            text.push('\n');
            check_finite(&[p.estimate.price, p.estimate.stderr])?;
            text.push_str(&format!(
                "{},{},{},{},{},{},{}",
                p.label,
                num(p.estimate.price),
                num(p.estimate.stderr),
                p.estimate.n_paths,
                num(p.seconds),
                r.mc.seed,
                crate::VERSION
            ));
            for c in cols {
                text.push(',');
                match &v[c] {
                    Value::Number(n) if n.is_f64() => text.push_str(&num(n.as_f64().unwrap_or(f64::NAN))),
                    other => text.push_str(&other.to_string()),
                }
            }
            text.push('\n');
            emit(&a.output.out, &text)
        }
    }
}

fn check_finite(xs: &[f64]) -> anyhow::Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        bail!("report contains a non-finite number")
    }
}

/// Pairwise `(a, b, z)` over all methods.
fn pairwise_z(rows: &[Priced]) -> Vec<(String, String, f64)> {
    let mut out = Vec::new();
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (a, b) = (&rows[i], &rows[j]);
            // Two deterministic prices have no sampling error to compare against.
            if a.estimate.stderr == 0.0 && b.estimate.stderr == 0.0 {
                continue;
            }
            out.push((a.label.clone(), b.label.clone(), a.estimate.z_score(&b.estimate)));
        }
    }
    out
}

fn run_compare(a: CompareArgs) -> anyhow::Result<()> {
    let specs: Vec<MethodSpec> = a
        .methods
        .iter()
        .map(|s| s.parse::<MethodSpec>().map_err(usage))
        .collect::<anyhow::Result<_>>()?;
    if specs.len() < 2 {
        return Err(usage("compare needs at least two methods"));
    }
    let r = resolve(&a.params)?;
    let rows: Vec<Priced> = specs.iter().map(|s| price_one(*s, &r, &a.opts)).collect::<anyhow::Result<_>>()?;
    let zs = pairwise_z(&rows);
    match a.output {
        Format::Csv => {
            let mut text = String::from("method,price,stderr,n_paths,seconds\n");
            for p in &rows {
                check_finite(&[p.estimate.price, p.estimate.stderr, p.seconds])?;
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    p.label,
                    num(p.estimate.price),
                    num(p.estimate.stderr),
                    p.estimate.n_paths,
                    num(p.seconds)
                ));
            }
            emit(&a.out, &text)?;
            for (x, y, z) in &zs {
                eprintln!("z {x} {y} {}", num(*z));
            }
            Ok(())
        }
        Format::Json => {
            let mut o = header("compare", &r);
            o.insert("rows".into(), Value::Array(rows.iter().map(priced_json).collect()));
            o.insert(
                "z".into(),
                Value::Array(zs.iter().map(|(x, y, z)| json!({"a": x, "b": y, "z": z})).collect()),
            );
            emit(&a.out, &json_text(&Value::Object(o))?)
        }
    }
}

fn run_kernel(a: KernelArgs) -> anyhow::Result<()> {
    let r = resolve(&a.params)?;
    let mut spec = KernelSpec::default();
    if let Some(n) = a.y_bins {
        spec.y_bins = n;
    }
    let label = MethodSpec {
        method: a.method,
        variant: a.opts.variant,
    }
    .to_string();
    let mc = r.mc.with_seed(derive_seed(r.mc.seed, &format!("kernel:{label}")));
    let start = Instant::now();
    let table: KernelTable = match a.method {
        Method::MgAlpha1 => {
            r.mg.require_alpha_one()?;
            kernel_estimate_alpha1(r.market.tau, r.market.rate, &r.mg, r.grid.n_steps, &mc, a.opts.variant, &spec)?
        }
        Method::MgGeneral => kernel_estimate_general(r.market.tau, r.market.rate, &r.mg, r.grid.n_steps, &mc, a.opts.variant, &spec)?,
        other => return Err(usage(format!("kernel supports mg-alpha1 and mg-general, not {}", other.name()))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let mut summary = header("kernel", &r);
    summary.insert("method".into(), json!(label));
    summary.insert("integral".into(), json!(table.integral));
    summary.insert("integral_stderr".into(), json!(table.integral_stderr));
    summary.insert("discount".into(), json!(table.discount));
    summary.insert("dropped_paths".into(), json!(table.dropped_paths));
    summary.insert("x_points".into(), json!(table.x0.len()));
    summary.insert("y_bins".into(), json!(table.y0.len()));
    summary.insert("seconds".into(), json!(seconds));
    match a.output {
        Format::Csv => {
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            emit(&a.out, std::str::from_utf8(&buf)?)?;
            eprintln!("{}", serde_json::to_string(&Value::Object(summary))?);
            Ok(())
        }
        Format::Json => {
            summary.insert("table".into(), serde_json::to_value(&table)?);
            emit(&a.out, &json_text(&Value::Object(summary))?)
        }
    }
}

fn run_moments(a: MomentsArgs) -> anyhow::Result<()> {
    let grid = GridSpec::new(a.tau, a.n_steps)?;
    let mc = MCSpec::new(a.paths, derive_seed(a.seed, "moments")).validate()?;
    let start = Instant::now();
    let m = wick_moment_check(grid, mc, a.order)?;
    let mut o = Map::new();
    o.insert("command".into(), json!("moments"));
    o.insert("version".into(), json!(crate::VERSION));
    o.insert("seed".into(), json!(a.seed));
    o.insert("order".into(), json!(m.order));
    o.insert("value".into(), json!(m.value));
    o.insert("stderr".into(), json!(m.stderr));
    o.insert("expected".into(), json!(m.expected));
    o.insert("z".into(), json!(m.z()));
    o.insert("n_samples".into(), json!(m.n_samples));
    o.insert("n_paths".into(), json!(a.paths));
    o.insert("n_steps".into(), json!(a.n_steps));
    if a.order.is_multiple_of(2) && a.order > 2 {
        // Standardize by the sampled second moment rather than its expectation.
        let mu2 = wick_moment_check(grid, mc, 2)?;
        if a.order == 4 {
            let k = wick_kurtosis(grid, mc)?;
            o.insert("ratio".into(), json!(k.ratio));
            o.insert("ratio_stderr".into(), json!(k.stderr));
        } else {
            o.insert("ratio".into(), json!(m.value / mu2.value.powi(a.order as i32 / 2)));
        }
    }
    o.insert("seconds".into(), json!(start.elapsed().as_secs_f64()));
    let v = Value::Object(o);
    match a.output.output {
        Format::Json => emit(&a.output.out, &json_text(&v)?),
        Format::Csv => {
            ensure_finite(&v)?;
            let obj = v.as_object().ok_or_else(|| anyhow!("internal: report is not an object"))?;
            let mut text = String::from("field,value\n");
            for (k, val) in obj {
                let cell = match val {
                    Value::Number(n) if n.is_f64() => num(n.as_f64().unwrap_or(f64::NAN)),
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                text.push_str(&format!("{k},{cell}\n"));
            }
            emit(&a.output.out, &text)
        }
    }
}

/// Exit status for an error: library errors by kind, everything else is usage.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Domain { .. }) => EXIT_DOMAIN,
        Some(Error::Numerical { .. } | Error::Convergence { .. }) => EXIT_NUMERICAL,
        None => EXIT_USAGE,
    }
}

/// Worker count from the environment; unset, empty or 0 means automatic.
pub fn threads_from_env() -> anyhow::Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(s) if s.trim().is_empty() => Ok(0),
        Ok(s) => s.trim().parse().map_err(|_| usage(format!("{THREADS_ENV} must be a non-negative integer, got `{s}`"))),
        Err(_) => Ok(0),
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let threads = threads_from_env()?;
    with_threads(threads, move || match cli.command {
        Command::Price(a) => run_price(a),
        Command::Kernel(a) => run_kernel(a),
        Command::Compare(a) => run_compare(a),
        Command::Moments(a) => run_moments(a),
    })
}

/// Parses `args` (including the program name), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
