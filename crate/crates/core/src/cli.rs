//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or parameter error, 3 numeric failure,
//! 4 I/O or sample-file parse error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::distribution::DistributionSpec;
use crate::gof::{self, GofError};
use crate::measures::{self, MeasureError};
use crate::montecarlo::{self, SampleRule, SimConfig, SimError, Threshold};
use crate::output::{Cell, Format, OutputRecord};
use crate::quadrature::Quadrature;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Caps simulation worker threads.
pub const THREADS_ENV: &str = "DMIM_THREADS";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) | CliError::Io(m) => m,
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::InvalidParams(_) | MeasureError::InvalidAlpha(_) | MeasureError::NotNormalized { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<GofError> for CliError {
    fn from(e: GofError) -> Self {
        match e {
            GofError::InvalidParams(_) => CliError::Usage(e.to_string()),
            GofError::EmptySample | GofError::NonFiniteSample { .. } => CliError::Io(e.to_string()),
            GofError::Measure(m) => m.into(),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(_) | SimError::UnsupportedFamily => CliError::Usage(e.to_string()),
            SimError::Gof(g) => g.into(),
            SimError::Measure(m) => m.into(),
            SimError::ThreadPool(_) => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dmim", version, about = "Differential message importance measure toolkit")]
pub struct Cli {
    /// Output encoding.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: OutputFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// DMIM of a single distribution.
    Dmim(DmimArgs),
    /// Data series for the approximation-error and DMIM-vs-variance plots.
    Curve(CurveArgs),
    /// Sample-size plan for a target DMIM deviation and confidence.
    Plan(PlanArgs),
    /// Kolmogorov–Smirnov statistic of a sample file against a distribution.
    Ks(KsArgs),
    /// Monte Carlo estimate of P{D_n > d} over a grid of DMIM deviations.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
#[group(id = "family", required = true, multiple = false)]
pub struct FamilyFlags {
    /// Normal(mu, sigma).
    #[arg(long)]
    pub normal: bool,
    /// Uniform on [a, b].
    #[arg(long)]
    pub uniform: bool,
    /// Exponential with rate lambda.
    #[arg(long)]
    pub exponential: bool,
}

/// Distribution selection. Uniform takes `--a/--b` or `--sigma` (centered,
/// width 2√3σ); exponential takes `--lambda` or `--sigma` (λ = 1/σ).
#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    #[command(flatten)]
    pub family: FamilyFlags,
    /// Location (normal, or a sigma-parameterized uniform); default 0.
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Uniform lower endpoint.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Uniform upper endpoint.
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Exponential rate.
    #[arg(long)]
    pub lambda: Option<f64>,
}

impl DistArgs {
    pub fn to_spec(&self) -> Result<DistributionSpec, CliError> {
        let usage = |m: &str| CliError::Usage(m.to_owned());
        let spec = if self.family.normal {
            let sigma = self.sigma.ok_or_else(|| usage("--normal requires --sigma"))?;
            DistributionSpec::normal(self.mu.unwrap_or(0.0), sigma)?
        } else if self.family.uniform {
            match (self.a, self.b, self.sigma) {
                (Some(a), Some(b), None) => DistributionSpec::uniform(a, b)?,
                (None, None, Some(s)) => DistributionSpec::with_std_dev(crate::distribution::Family::Uniform, s)?
                    .shifted(self.mu.unwrap_or(0.0)),
                _ => return Err(usage("--uniform requires either --a and --b, or --sigma")),
            }
        } else {
            match (self.lambda, self.sigma) {
                (Some(l), None) => DistributionSpec::exponential(l)?,
                (None, Some(s)) => DistributionSpec::with_std_dev(crate::distribution::Family::Exponential, s)?,
                _ => return Err(usage("--exponential requires exactly one of --lambda or --sigma")),
            }
        };
        Ok(spec)
    }

    fn describe(&self, record: &mut OutputRecord, spec: &DistributionSpec) {
        match *spec {
            DistributionSpec::Uniform { a, b } => {
                record.param("family", "uniform").param("a", a).param("b", b);
            }
            DistributionSpec::Normal { mu, sigma } => {
                record.param("family", "normal").param("mu", mu).param("sigma", sigma);
            }
            DistributionSpec::Exponential { lambda } => {
                record.param("family", "exponential").param("lambda", lambda);
            }
            DistributionSpec::Custom(_) => {
                record.param("family", "custom");
            }
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum Method {
    /// Closed form, normal series, or quadrature as appropriate.
    Auto,
    /// Closed form (uniform, exponential).
    ClosedForm,
    /// Power series (normal).
    Series,
    /// Rényi-entropy partial sum with `--terms` terms.
    RenyiSeries,
    /// e^{-1/(2√π σ)} (normal).
    ApproxExp,
    /// 1 - 1/(2√π σ) (normal).
    ApproxLinear,
    /// Adaptive quadrature of f·e^{-f}.
    Quadrature,
}

#[derive(Debug, Args)]
pub struct DmimArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: Method,
    /// Series stopping tolerance.
    #[arg(long, default_value_t = measures::DEFAULT_SERIES_TOL)]
    pub tol: f64,
    /// Number of Rényi-series terms m.
    #[arg(long, default_value_t = 10)]
    pub terms: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum Figure {
    /// Relative error of both normal approximations vs σ.
    Fig1,
    /// DMIM of the three families vs variance.
    Fig2,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    /// Grid start (σ for fig1, variance for fig2).
    #[arg(long)]
    pub min: Option<f64>,
    #[arg(long)]
    pub max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub beta: f64,
    #[command(flatten)]
    pub dist: DistArgs,
}

#[derive(Debug, Args)]
pub struct KsArgs {
    /// File with one sample per line; `#` starts a comment.
    #[arg(long)]
    pub samples: PathBuf,
    #[command(flatten)]
    pub dist: DistArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum NRule {
    DistributionFree,
    WithLx,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    /// Trials per grid point.
    #[arg(long, default_value_t = montecarlo::DEFAULT_TRIALS)]
    pub trials: usize,
    /// Master seed; per-trial streams derive from it.
    #[arg(long, default_value_t = montecarlo::DEFAULT_SEED)]
    pub seed: u64,
    /// Fixed KS deviation (default 0.01 when --beta is absent).
    #[arg(long, conflicts_with = "beta")]
    pub d: Option<f64>,
    /// Derive d per grid point from this confidence level.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = montecarlo::DEFAULT_EPS_MIN)]
    pub eps_min: f64,
    #[arg(long, default_value_t = montecarlo::DEFAULT_EPS_MAX)]
    pub eps_max: f64,
    /// Log-spaced ε grid points.
    #[arg(long, default_value_t = montecarlo::DEFAULT_GRID_POINTS)]
    pub points: usize,
    /// Sample-count rule for n at each ε.
    #[arg(long, value_enum, default_value = "distribution-free")]
    pub n_rule: NRule,
}

/// Parses `args`, runs the command, writes the rendered record (or the
/// error) and returns the process exit code.
pub fn run_from_args<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{e}");
            return code;
        }
    };
    let format: Format = cli.format.into();
    match run(&cli.command) {
        Ok(record) => match out.write_all(record.render(format).as_bytes()) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_IO
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn run(command: &Command) -> Result<OutputRecord, CliError> {
    match command {
        Command::Dmim(a) => cmd_dmim(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Ks(a) => cmd_ks(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

pub fn cmd_dmim(args: &DmimArgs) -> Result<OutputRecord, CliError> {
    let spec = args.dist.to_spec()?;
    let needs_normal = |m: &str| CliError::Usage(format!("--method {m} applies to --normal only"));
    let (method, record) = match args.method {
        Method::Auto => {
            let mut r = OutputRecord::new("dmim", &["value"]);
            r.push_row(vec![measures::dmim(&spec)?.into()]);
            ("auto", r)
        }
        Method::ClosedForm => {
            let v = match spec {
                DistributionSpec::Uniform { a, b } => measures::dmim_uniform(a, b)?,
                DistributionSpec::Exponential { lambda } => measures::dmim_exponential(lambda)?,
                _ => return Err(CliError::Usage("--method closed-form applies to --uniform and --exponential".into())),
            };
            let mut r = OutputRecord::new("dmim", &["value"]);
            r.push_row(vec![v.into()]);
            ("closed-form", r)
        }
        Method::Series => {
            let DistributionSpec::Normal { sigma, .. } = spec else {
                return Err(needs_normal("series"));
            };
            let s = measures::dmim_normal_series(sigma, args.tol)?;
            let mut r = OutputRecord::new("dmim", &["value", "truncation_bound", "terms_used"]);
            r.push_row(vec![s.value.into(), s.truncation_bound.into(), s.terms_used.into()]);
            ("series", r)
        }
        Method::RenyiSeries => {
            let s = measures::dmim_via_renyi_series(&spec, args.terms)?;
            let mut r = OutputRecord::new("dmim", &["value", "truncation_bound", "terms_used"]);
            r.push_row(vec![s.value.into(), s.truncation_bound.into(), s.terms_used.into()]);
            ("renyi-series", r)
        }
        Method::ApproxExp | Method::ApproxLinear => {
            let DistributionSpec::Normal { sigma, .. } = spec else {
                return Err(needs_normal("approx-*"));
            };
            let (name, v) = if args.method == Method::ApproxExp {
                ("approx-exp", measures::dmim_normal_approx_exp(sigma))
            } else {
                ("approx-linear", measures::dmim_normal_approx_linear(sigma))
            };
            let mut r = OutputRecord::new("dmim", &["value"]);
            r.push_row(vec![v.into()]);
            (name, r)
        }
        Method::Quadrature => {
            let v = measures::dmim_by_quadrature(&spec, &Quadrature::default())?;
            let mut r = OutputRecord::new("dmim", &["value"]);
            r.push_row(vec![v.into()]);
            ("quadrature", r)
        }
    };
    let mut record = record;
    record.param("method", method);
    args.dist.describe(&mut record, &spec);
    Ok(record)
}

fn grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if !(min > 0.0 && max > min && max.is_finite()) || points < 2 {
        return Err(CliError::Usage(format!(
            "grid needs 0 < min < max and at least 2 points (min = {min}, max = {max}, points = {points})"
        )));
    }
    Ok(montecarlo::log_space(min, max, points))
}

pub fn cmd_curve(args: &CurveArgs) -> Result<OutputRecord, CliError> {
    use crate::distribution::Family;
    let record = match args.figure {
        Figure::Fig1 => {
            let sigmas = grid(args.min.unwrap_or(0.1), args.max.unwrap_or(10.0), args.points.unwrap_or(100))?;
            let mut r = OutputRecord::new("curve", &["sigma", "rel_err_exp", "rel_err_linear"]);
            r.param("figure", "fig1");
            for sigma in sigmas {
                let l = measures::dmim_normal_series(sigma, measures::DEFAULT_SERIES_TOL)?.value;
                let e = (measures::dmim_normal_approx_exp(sigma) - l).abs() / l;
                let lin = (measures::dmim_normal_approx_linear(sigma) - l).abs() / l;
                r.push_row(vec![sigma.into(), e.into(), lin.into()]);
            }
            r
        }
        Figure::Fig2 => {
            let vars = grid(args.min.unwrap_or(0.1), args.max.unwrap_or(100.0), args.points.unwrap_or(30))?;
            let mut r = OutputRecord::new("curve", &["variance", "l_uniform", "l_normal", "l_exponential"]);
            r.param("figure", "fig2");
            for v in vars {
                let s = v.sqrt();
                let mut row = vec![Cell::Float(v)];
                for family in [Family::Uniform, Family::Normal, Family::Exponential] {
                    row.push(measures::dmim(&DistributionSpec::with_std_dev(family, s)?)?.into());
                }
                r.push_row(row);
            }
            r
        }
    };
    Ok(record)
}

pub fn cmd_plan(args: &PlanArgs) -> Result<OutputRecord, CliError> {
    let spec = args.dist.to_spec()?;
    if !(args.beta > 0.0 && args.beta <= 1.0) {
        return Err(CliError::Usage(format!("--beta must lie in (0, 1], got {}", args.beta)));
    }
    let plan = gof::make_plan(&spec, args.epsilon, args.beta)?;
    let l_x = measures::dmim(&spec)?;
    let n_with_lx = gof::required_samples(args.epsilon, plan.sigma, Some(l_x))?;
    let mut r = OutputRecord::new("plan", &["n", "d", "sigma", "epsilon", "beta", "l_x", "n_with_lx", "tail_bound"]);
    r.push_row(vec![
        plan.n.into(),
        plan.d.into(),
        plan.sigma.into(),
        plan.epsilon.into(),
        plan.beta.into(),
        l_x.into(),
        n_with_lx.into(),
        plan.tail_bound()?.into(),
    ]);
    args.dist.describe(&mut r, &spec);
    Ok(r)
}

/// Reads one float per line. Blank lines and `#` comments are skipped.
pub fn read_samples(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let v: f64 = content.parse().map_err(|_| {
            CliError::Io(format!("{}:{}: cannot parse {content:?} as a number", path.display(), lineno + 1))
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn cmd_ks(args: &KsArgs) -> Result<OutputRecord, CliError> {
    let spec = args.dist.to_spec()?;
    let samples = read_samples(&args.samples)?;
    let ecdf = gof::empirical_cdf(&samples)?;
    let d = gof::ks_statistic(&ecdf, |x| spec.cdf(x).expect("analytic family"))?;
    let n = ecdf.len() as u64;
    let p = gof::ks_tail_series(n, d, gof::DEFAULT_KS_TERMS);
    let bound = gof::ks_tail_upper_bound(n, d)?;
    let mut r = OutputRecord::new("ks", &["n", "d_n", "p_value", "upper_bound"]);
    r.push_row(vec![n.into(), d.into(), p.into(), bound.into()]);
    args.dist.describe(&mut r, &spec);
    Ok(r)
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<OutputRecord, CliError> {
    let spec = args.dist.to_spec()?;
    let threshold = match (args.d, args.beta) {
        (_, Some(b)) => Threshold::FromBeta(b),
        (Some(d), None) => Threshold::Fixed(d),
        (None, None) => Threshold::Fixed(0.01),
    };
    let mut config = SimConfig::new(spec.clone(), threshold);
    config.epsilon_grid = grid(args.eps_min, args.eps_max, args.points)?;
    config.trials = args.trials;
    config.master_seed = args.seed;
    config.n_rule = match args.n_rule {
        NRule::DistributionFree => SampleRule::DistributionFree,
        NRule::WithLx => SampleRule::WithLX,
    };
    config.threads = threads_from_env()?;
    let reports = montecarlo::estimate_exceedance(&config)?;

    let mut r = OutputRecord::new("simulate", &["epsilon", "n", "d", "exceedance", "std_error", "trials", "seed"]);
    r.param("seed", args.seed).param("trials", args.trials).param(
        "n_rule",
        match args.n_rule {
            NRule::DistributionFree => "distribution-free",
            NRule::WithLx => "with-lx",
        },
    );
    match threshold {
        Threshold::Fixed(d) => r.param("d", d),
        Threshold::FromBeta(b) => r.param("beta", b),
    };
    args.dist.describe(&mut r, &spec);
    for rep in reports {
        r.push_row(vec![
            rep.epsilon.into(),
            rep.n.into(),
            rep.d.into(),
            rep.exceedance_estimate.into(),
            rep.std_error.into(),
            rep.trials.into(),
            rep.seed.into(),
        ]);
    }
    Ok(r)
}
