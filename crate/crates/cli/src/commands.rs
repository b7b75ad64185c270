//! Command-line surface and the handlers behind each subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mvpois::correlation::{avg_corr, pair_corr_bounds};
use mvpois::extrema::{self, DEFAULT_TAIL_EPS};
use mvpois::oracle::{self, McEstimate};
use mvpois::{EvalResult, ExtremeKind, ExtremeQuery, Model};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::reproduce::{self, ParamSet};
use crate::table::{Cell, Format, Table};

/// Environment variable that overrides the default truncation tolerance.
pub const TAIL_EPS_ENV: &str = "MVPOIS_TAIL_EPS";

#[derive(Debug, Parser)]
#[command(name = "mvpois", version, about = "Extreme-value CDFs of dependent multivariate Poisson vectors")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// Probability mass allowed to be dropped by truncated sums, in (0, 1e-3].
    #[arg(long, global = true, env = TAIL_EPS_ENV, default_value_t = DEFAULT_TAIL_EPS)]
    pub tail_eps: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate P(max ≤ x) or P(min ≤ x) over a range of levels.
    Eval(EvalArgs),
    /// Draw random vectors from a model.
    Sample(SampleArgs),
    /// Average correlation and pairwise covariances of a model.
    Corr(CorrArgs),
    /// Monte Carlo or brute-force reference values.
    Oracle(OracleArgs),
    /// Recompute a published table next to its printed values.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stat {
    Max,
    Min,
}

impl From<Stat> for ExtremeKind {
    fn from(s: Stat) -> Self {
        match s {
            Stat::Max => ExtremeKind::Max,
            Stat::Min => ExtremeKind::Min,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodChoice {
    /// The default form for the model's structure.
    Auto,
    Nested,
    Copula,
    Integral,
    Lattice,
    Beta,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "max")]
    pub stat: Stat,
    /// Levels: `7`, `1..15`, or a comma-separated mix such as `1,4..6`.
    #[arg(long, value_parser = parse_levels)]
    pub x: Levels,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodChoice,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Number of vectors.
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CorrArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Use the printed thinning average, which leaves out the background
    /// rates.
    #[arg(long)]
    pub printed_formula: bool,
    /// Also report the attainable correlation range of each pair of
    /// marginals.
    #[arg(long)]
    pub bounds: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "max")]
    pub stat: Stat,
    /// Levels, in the same syntax as `eval`.
    #[arg(long, value_parser = parse_levels)]
    pub x: Levels,
    /// Monte Carlo draws.
    #[arg(long, default_value_t = 1_000_000)]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent substreams; results do not depend on thread count.
    #[arg(long, default_value_t = 16)]
    pub streams: u32,
    /// Enumerate the lattice of independent inputs instead of sampling.
    #[arg(long)]
    pub brute_force: bool,
    /// Mass left outside the enumerated lattice.
    #[arg(long, default_value_t = 1e-12)]
    pub lattice_eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Table1,
    Table2,
    Table3,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub which: Which,
    /// Parameter sets for the CDF table.
    #[arg(long, value_enum, default_value = "stated")]
    pub params: ParamSet,
}

/// A nonempty list of evaluation levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Levels(pub Vec<f64>);

/// Parse `7`, `1..15` (inclusive, unit step), or comma-separated items.
pub fn parse_levels(s: &str) -> Result<Levels, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim) {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{t}` is not a finite number"))
        };
        if let Some((a, b)) = item.split_once("..") {
            let (a, b) = (num(a)?, num(b)?);
            if b < a {
                return Err(format!("empty range `{item}`"));
            }
            if b - a > 1e6 {
                return Err(format!("range `{item}` is too long"));
            }
            let mut v = a;
            while v <= b {
                out.push(v);
                v += 1.0;
            }
        } else {
            out.push(num(item)?);
        }
    }
    if out.is_empty() {
        return Err("no levels given".into());
    }
    Ok(Levels(out))
}

pub fn read_model(path: &Path) -> CliResult<Model> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    parse_model(&text).map_err(|e| match e {
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_model(text: &str) -> CliResult<Model> {
    serde_json::from_str(text).map_err(|e| CliError::Validation(e.to_string()))
}

fn evaluate(model: &Model, q: &ExtremeQuery, method: MethodChoice) -> CliResult<EvalResult> {
    use MethodChoice::*;
    let r = match (model, method) {
        (_, Auto) => extrema::extreme_cdf(model, q),
        (Model::Comonotonic(p), Nested) => extrema::comonotonic_extreme_cdf_nested(p, q),
        (Model::Comonotonic(p), Copula) => extrema::comonotonic_extreme_cdf_copula(p, q),
        (Model::Comonotonic(p), Integral) => extrema::comonotonic_extreme_cdf_integral(p, q),
        (Model::Thinning(p), Lattice) => extrema::thinning_extreme_cdf(p, q),
        (Model::Thinning(p), Beta) => extrema::thinning_l1_extreme_cdf(p, q),
        _ => {
            return Err(CliError::Validation(format!(
                "method {method:?} does not apply to the {} model",
                model.name()
            )))
        }
    };
    Ok(r?)
}

pub fn cmd_eval(args: &EvalArgs, tail_eps: f64) -> CliResult<Table> {
    let model = read_model(&args.model)?;
    let kind: ExtremeKind = args.stat.into();
    let results: Vec<EvalResult> = args
        .x
        .0
        .par_iter()
        .map(|&x| {
            let q = ExtremeQuery::new(kind, x).with_tail_eps(tail_eps)?;
            evaluate(&model, &q, args.method)
        })
        .collect::<CliResult<_>>()?;
    let mut t = Table::new(&["x", "value", "log_value", "trunc_bound", "method"]);
    for (&x, r) in args.x.0.iter().zip(results) {
        t.push(vec![
            x.into(),
            r.value.into(),
            r.log_value.into(),
            r.trunc_bound.into(),
            r.method.as_str().into(),
        ]);
    }
    Ok(t)
}

pub fn cmd_sample(args: &SampleArgs) -> CliResult<Table> {
    let model = read_model(&args.model)?;
    let names: Vec<String> = (1..=model.dim()).map(|j| format!("x{j}")).collect();
    let cols: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut t = Table::new(&cols);
    let sampler = mvpois::models::Sampler::new(&model);
    let mut rng = oracle::substream_rng(args.seed, 0);
    let mut buf = Vec::new();
    for _ in 0..args.n {
        sampler.sample_into(&mut rng, &mut buf);
        t.push(buf.iter().map(|&v| Cell::from(v)).collect());
    }
    Ok(t)
}

pub fn cmd_corr(args: &CorrArgs, tail_eps: f64) -> CliResult<Table> {
    let model = read_model(&args.model)?;
    let r = avg_corr(&model, tail_eps, args.printed_formula)?;
    let mut t = Table::new(&["statistic", "i", "j", "value"]);
    let blank = || Cell::from("");
    t.push(vec!["avg_rho".into(), blank(), blank(), r.avg_rho.into()]);
    t.push(vec!["trunc_bound".into(), blank(), blank(), r.trunc_bound.into()]);
    let d = model.dim();
    for i in 0..d {
        for j in i..d {
            t.push(vec!["cov".into(), (i + 1).into(), (j + 1).into(), r.pairwise_cov[i][j].into()]);
        }
    }
    if args.bounds {
        for i in 0..d {
            for j in i + 1..d {
                let cov = &r.pairwise_cov;
                let b = pair_corr_bounds(cov[i][i], cov[j][j], tail_eps)?;
                let rho = cov[i][j] / (cov[i][i] * cov[j][j]).sqrt();
                for (name, v) in [("rho", rho), ("rho_min", b.rho_min), ("rho_max", b.rho_max)] {
                    t.push(vec![name.into(), (i + 1).into(), (j + 1).into(), v.into()]);
                }
            }
        }
    }
    Ok(t)
}

pub fn cmd_oracle(args: &OracleArgs) -> CliResult<Table> {
    let model = read_model(&args.model)?;
    let kind: ExtremeKind = args.stat.into();
    let xs = &args.x.0;
    if args.brute_force {
        let values: Vec<f64> = xs
            .par_iter()
            .map(|&x| oracle::brute_force_extreme_cdf(&model, &ExtremeQuery::new(kind, x), args.lattice_eps))
            .collect::<Result<_, _>>()?;
        let mut t = Table::new(&["x", "value", "lattice_eps"]);
        for (&x, v) in xs.iter().zip(values) {
            t.push(vec![x.into(), v.into(), args.lattice_eps.into()]);
        }
        return Ok(t);
    }
    let estimates = monte_carlo(&model, kind, xs, args.n, args.seed, args.streams)?;
    let mut t = Table::new(&["x", "estimate", "std_err", "n", "seed", "streams"]);
    for (&x, e) in xs.iter().zip(estimates) {
        t.push(vec![
            x.into(),
            e.estimate.into(),
            e.std_err.into(),
            e.n.into(),
            e.seed.into(),
            Cell::Int(i64::from(e.streams)),
        ]);
    }
    Ok(t)
}

/// Monte Carlo estimates at every level from one shared set of draws, with
/// substreams spread over the thread pool.
pub fn monte_carlo(
    model: &Model,
    kind: ExtremeKind,
    xs: &[f64],
    n: u64,
    seed: u64,
    streams: u32,
) -> CliResult<Vec<McEstimate>> {
    oracle::check_mc_args(n, streams)?;
    let hits = (0..streams)
        .into_par_iter()
        .map(|s| oracle::mc_stream_hits(model, kind, xs, oracle::stream_share(n, streams, s), seed, s))
        .reduce(
            || vec![0u64; xs.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(hits
        .into_iter()
        .map(|h| McEstimate::from_hits(h, n, seed, streams))
        .collect())
}

pub fn cmd_reproduce(args: &ReproduceArgs, tail_eps: f64) -> CliResult<Table> {
    match args.which {
        Which::Table1 => reproduce::table1(args.params, tail_eps),
        Which::Table2 => reproduce::table2(),
        Which::Table3 => reproduce::table3(),
    }
}

/// Run a parsed command line and return the rendered output.
pub fn run(cli: &Cli) -> CliResult<String> {
    extrema::check_tail_eps(cli.tail_eps)?;
    let table = match &cli.command {
        Command::Eval(a) => cmd_eval(a, cli.tail_eps)?,
        Command::Sample(a) => cmd_sample(a)?,
        Command::Corr(a) => cmd_corr(a, cli.tail_eps)?,
        Command::Oracle(a) => cmd_oracle(a)?,
        Command::Reproduce(a) => cmd_reproduce(a, cli.tail_eps)?,
    };
    table.render(cli.format)
}
