//! Command-line front end.
//!
//! Exit codes: 0 on success or convergence, 2 when a solve hits its
//! iteration limit, 1 on usage or I/O errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::csvfmt::{self, real};
use crate::datacollect::{self, Budget, CollectConfig};
use crate::problems::{self, ProblemInstance};
use crate::schemes::{build_level_table, generate_cjm_scheme, generate_srj_scheme, level_scheme, SchemeLevelTable};
use crate::solver::{solve, Controller, StoppingNorm, StoppingRule, Thresholds};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "srj", version, about = "Scheduled relaxation Jacobi solver harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the relaxation factors of a scheme.
    Scheme(SchemeArgs),
    /// Print the scheme level table.
    Levels(LevelsArgs),
    /// Solve one problem and print the per-cycle report.
    Solve(SolveArgs),
    /// Run a benchmark described by a TOML file.
    Bench(BenchArgs),
    /// Gather random-action convergence data on 1D Poisson problems.
    Collect(CollectArgs),
    /// Cluster collected data and fit controller thresholds.
    Fit(FitArgs),
    /// Write a problem's matrix in Matrix Market format.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct SchemeArgs {
    /// Scheme length.
    #[arg(required_unless_present = "level", conflicts_with = "level")]
    m: Option<usize>,
    /// Level in the level table instead of an explicit length.
    #[arg(long)]
    level: Option<usize>,
    /// Build a Chebyshev scheme for Jacobi eigenvalues in [LO, HI] instead.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    cjm: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct LevelsArgs {
    /// Rebuild the table with this stiffness-slope growth factor.
    #[arg(long)]
    growth: Option<f64>,
    #[arg(long, default_value_t = 24)]
    max_level: usize,
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Seed for randomised problems; falls back to $SRJ_SEED, then 0.
    #[arg(long, env = "SRJ_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// poisson1d:N, tridiag:N, laplace2d:n, poisson3d:n, perturbed:n[:jitter], mesh:PATH
    #[arg(long)]
    problem: String,
    /// heuristic, increasing, jacobi, fixed:M, cjm:M or cjm:M:LO:HI
    #[arg(long, default_value = "heuristic")]
    controller: String,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_iters: usize,
    /// Override the problem's stopping norm (absolute_l2, relative_l2, solution_diff_inf).
    #[arg(long)]
    norm: Option<StoppingNorm>,
    /// Thresholds file (`t_hi=`, `t_lo=`) for the heuristic controller.
    #[arg(long)]
    thresholds: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArg,
    /// Write the per-iteration residual trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    spec: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write the CSV here, overriding the spec's `output`.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CollectArgs {
    /// Comma-separated problem sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Total number of points, split evenly over sizes.
    #[arg(long, conflicts_with = "trials")]
    points: Option<usize>,
    /// Trials per size.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Data CSV written by `collect`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 2000)]
    n_set: usize,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    /// Also write the cluster summaries here.
    #[arg(long)]
    clusters: Option<PathBuf>,
    /// Require perfectly ordered action bands instead of minimising
    /// misclassified clusters.
    #[arg(long)]
    strict: bool,
    /// Thresholds file; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    problem: String,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Scheme(a) => cmd_scheme(a),
        Command::Levels(a) => cmd_levels(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Collect(a) => cmd_collect(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Export(a) => cmd_export(a),
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_scheme(a: SchemeArgs) -> Result<i32> {
    let scheme = match (a.level, a.m, a.cjm) {
        (Some(l), _, _) => level_scheme(l)?.clone(),
        (None, Some(m), Some(b)) => generate_cjm_scheme(m, b[0], b[1])?,
        (None, Some(m), None) => generate_srj_scheme(m)?,
        (None, None, _) => return Err(Error::Invalid("give a scheme length or --level".into())),
    };
    let mut w = sink(None)?;
    csvfmt::header(&mut w, &["index", "omega", "order_position"])?;
    for (i, (omega, pos)) in scheme.omegas.iter().zip(scheme.order_positions()).enumerate() {
        writeln!(w, "{},{},{}", i, real(*omega), pos)?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn cmd_levels(a: LevelsArgs) -> Result<i32> {
    let table = match a.growth {
        Some(g) => build_level_table(a.max_level, g)?,
        None => SchemeLevelTable::standard(),
    };
    let mut w = sink(None)?;
    csvfmt::header(&mut w, &["level", "M"])?;
    for (level, m) in table.levels {
        writeln!(w, "{level},{m}")?;
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Invalid(format!("bad {what} `{s}`")))
}

/// Builds a problem from a `family:size[:extra]` address.
///
/// Randomised families take an optional trailing seed that overrides
/// `seed`; `perturbed:n[:jitter[:seed]]` meshes the unit square with `n`
/// cells per side.
pub fn parse_problem(address: &str, seed: u64) -> Result<ProblemInstance> {
    let (family, rest) = address
        .split_once(':')
        .ok_or_else(|| Error::Invalid(format!("problem `{address}` is not family:size")))?;
    if family == "mesh" {
        return problems::assemble_fem_poisson(&problems::read_mesh(rest)?);
    }
    let parts: Vec<&str> = rest.split(':').collect();
    let size: usize = parse_num(parts[0], "size")?;
    let seed_at = |k: usize| -> Result<u64> {
        parts.get(k).map_or(Ok(seed), |s| parse_num(s, "seed"))
    };
    let max_parts = match family {
        "poisson1d" | "poisson3d" => 1,
        "tridiag" | "laplace2d" => 2,
        "perturbed" => 3,
        _ => return Err(Error::Invalid(format!("unknown problem family `{family}`"))),
    };
    if parts.len() > max_parts {
        return Err(Error::Invalid(format!("too many fields in `{address}`")));
    }
    match family {
        "poisson1d" => problems::poisson_1d(size),
        "poisson3d" => problems::poisson_3d(size),
        "tridiag" => problems::random_tridiagonal(size, seed_at(1)?),
        "laplace2d" => problems::laplace_2d_neumann(size, seed_at(1)?),
        _ => {
            let jitter = parts.get(1).map_or(Ok(0.2), |s| parse_num(s, "jitter"))?;
            let mesh = problems::perturbed_mesh(size, size, jitter, seed_at(2)?)?;
            problems::assemble_fem_poisson(&mesh)
        }
    }
}

/// Parses a controller name against a problem (for Chebyshev bounds).
pub fn parse_controller(spec: &str, problem: &ProblemInstance, thresholds: Thresholds) -> Result<Controller> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts[..] {
        ["heuristic"] => Ok(Controller::Heuristic(thresholds)),
        ["increasing"] => Ok(Controller::Increasing),
        ["jacobi"] => Ok(Controller::Jacobi),
        ["fixed", m] => Ok(Controller::Fixed(parse_num(m, "scheme length")?)),
        ["cjm", m] => {
            let (lo, hi) = problem.cjm_bounds.ok_or_else(|| {
                Error::Invalid(format!("{} has no Chebyshev bounds; use cjm:M:LO:HI", problem.label))
            })?;
            Ok(Controller::Cjm(generate_cjm_scheme(parse_num(m, "scheme length")?, lo, hi)?))
        }
        ["cjm", m, lo, hi] => Ok(Controller::Cjm(generate_cjm_scheme(
            parse_num(m, "scheme length")?,
            parse_num(lo, "bound")?,
            parse_num(hi, "bound")?,
        )?)),
        _ => Err(Error::Invalid(format!("unknown controller `{spec}`"))),
    }
}

fn read_thresholds_file(path: Option<&Path>) -> Result<Thresholds> {
    match path {
        Some(p) => datacollect::read_thresholds(BufReader::new(File::open(p)?)),
        None => Ok(Thresholds::default()),
    }
}

fn cmd_solve(a: SolveArgs) -> Result<i32> {
    let problem = parse_problem(&a.problem, a.seed.seed)?;
    let thresholds = read_thresholds_file(a.thresholds.as_deref())?;
    let controller = parse_controller(&a.controller, &problem, thresholds)?;
    let rule = StoppingRule::new(a.norm.unwrap_or(problem.stopping_norm), a.tol, a.max_iters)?;
    let report = solve(&problem, &controller, &rule)?;
    if let Some(path) = &a.trace {
        let mut t = sink(Some(path))?;
        report.write_trace_csv(&mut t)?;
        t.flush()?;
    }
    let mut w = sink(a.output.as_deref())?;
    report.write_csv(&mut w)?;
    w.flush()?;
    Ok(if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

/// Benchmark description read from TOML.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    /// Family name combined with each entry of `sizes`.
    pub family: Option<String>,
    #[serde(default)]
    pub sizes: Vec<usize>,
    /// Full problem addresses, run after the family sizes.
    #[serde(default)]
    pub problems: Vec<String>,
    pub controllers: Vec<String>,
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    pub norm: Option<String>,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    pub thresholds: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

fn default_max_iters() -> usize {
    1_000_000
}

fn one() -> usize {
    1
}

impl BenchSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Invalid(format!("bench spec: {e}")))?;
        if spec.controllers.is_empty() {
            return Err(Error::Invalid("bench spec lists no controllers".into()));
        }
        if spec.sizes.contains(&0) {
            return Err(Error::Invalid("bench sizes must be positive".into()));
        }
        if spec.repetitions == 0 {
            return Err(Error::Invalid("repetitions must be positive".into()));
        }
        if spec.family.is_some() != !spec.sizes.is_empty() {
            return Err(Error::Invalid("`family` and `sizes` go together".into()));
        }
        if spec.sizes.is_empty() && spec.problems.is_empty() {
            return Err(Error::Invalid("bench spec lists no problems".into()));
        }
        Ok(spec)
    }

    pub fn addresses(&self) -> Vec<String> {
        let mut v: Vec<String> = match &self.family {
            Some(f) => self.sizes.iter().map(|n| format!("{f}:{n}")).collect(),
            None => Vec::new(),
        };
        v.extend(self.problems.iter().cloned());
        v
    }
}

/// One benchmark result row.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub problem: String,
    pub size: usize,
    pub controller: String,
    pub rep: usize,
    /// `None` when the run failed before producing a report.
    pub iterations: Option<usize>,
    pub status: String,
    pub seconds: f64,
}

/// Runs every problem x controller x repetition; failures become rows.
///
/// Repetition `r` uses seed `spec.seed + r`. Rows come back in spec order
/// regardless of `jobs`.
pub fn run_bench(spec: &BenchSpec, jobs: usize) -> Result<Vec<BenchRow>> {
    use rayon::prelude::*;
    let thresholds = read_thresholds_file(spec.thresholds.as_deref())?;
    let norm: Option<StoppingNorm> = spec.norm.as_deref().map(str::parse).transpose()?;
    let mut tasks = Vec::new();
    for (pi, address) in spec.addresses().into_iter().enumerate() {
        for (ci, controller) in spec.controllers.iter().enumerate() {
            for rep in 0..spec.repetitions {
                tasks.push((pi, ci, rep, address.clone(), controller.clone()));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let mut rows: Vec<((usize, usize, usize), BenchRow)> = pool.install(|| {
        tasks
            .into_par_iter()
            .map(|(pi, ci, rep, address, controller)| {
                let start = Instant::now();
                let outcome = (|| -> Result<(usize, usize, bool)> {
                    let problem = parse_problem(&address, spec.seed.wrapping_add(rep as u64))?;
                    let ctrl = parse_controller(&controller, &problem, thresholds)?;
                    let rule = StoppingRule::new(norm.unwrap_or(problem.stopping_norm), spec.tol, spec.max_iters)?;
                    let report = solve(&problem, &ctrl, &rule)?;
                    Ok((problem.n(), report.total_iterations, report.converged))
                })();
                let seconds = start.elapsed().as_secs_f64();
                let row = match outcome {
                    Ok((size, iterations, converged)) => BenchRow {
                        problem: address,
                        size,
                        controller,
                        rep,
                        iterations: Some(iterations),
                        status: if converged { "true" } else { "false" }.into(),
                        seconds,
                    },
                    Err(e) => BenchRow {
                        problem: address,
                        size: 0,
                        controller,
                        rep,
                        iterations: None,
                        status: format!("error: {}", e.to_string().replace([',', '\n'], ";")),
                        seconds,
                    },
                };
                ((pi, ci, rep), row)
            })
            .collect()
    });
    rows.sort_by_key(|(k, _)| *k);
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn write_bench<W: Write>(rows: &[BenchRow], mut w: W) -> Result<()> {
    csvfmt::header(
        &mut w,
        &["problem", "size", "controller", "rep", "iterations", "converged", "seconds"],
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.problem,
            r.size,
            r.controller,
            r.rep,
            r.iterations.map(|i| i.to_string()).unwrap_or_default(),
            r.status,
            real(r.seconds)
        )?;
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&a.spec)?;
    let spec = BenchSpec::from_toml(&text)?;
    let rows = run_bench(&spec, a.jobs)?;
    let mut w = sink(a.output.as_deref().or(spec.output.as_deref()))?;
    write_bench(&rows, &mut w)?;
    w.flush()?;
    Ok(EXIT_OK)
}

fn cmd_collect(a: CollectArgs) -> Result<i32> {
    let sizes = a.sizes.unwrap_or_else(|| datacollect::DEFAULT_SIZES.to_vec());
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::Invalid("sizes must be positive".into()));
    }
    let budget = match (a.points, a.trials) {
        (Some(p), _) => Budget::PointsPerSize(p.div_ceil(sizes.len())),
        (None, Some(t)) => Budget::TrialsPerSize(t),
        (None, None) => CollectConfig::default().budget,
    };
    let cfg = CollectConfig {
        sizes,
        budget,
        target_tol: a.tol,
        seed: a.seed.seed,
        max_steps: a.max_steps,
    };
    let mut points = datacollect::collect(&cfg)?;
    if let Some(p) = a.points {
        points.truncate(p);
    }
    let mut w = sink(a.output.as_deref())?;
    datacollect::write_points(&points, &mut w)?;
    w.flush()?;
    Ok(EXIT_OK)
}

fn cmd_fit(a: FitArgs) -> Result<i32> {
    let points = datacollect::read_points(File::open(&a.data)?)?;
    let clusters = datacollect::aggregate(&points, a.n_set, a.confidence)?;
    if let Some(path) = &a.clusters {
        let mut w = sink(Some(path))?;
        datacollect::write_clusters(&clusters, &mut w)?;
        w.flush()?;
    }
    let t = if a.strict {
        datacollect::fit_thresholds(&clusters)?
    } else {
        datacollect::fit_thresholds_robust(&clusters)?
    };
    let mut w = sink(a.output.as_deref())?;
    datacollect::write_thresholds(&t, &mut w)?;
    w.flush()?;
    Ok(EXIT_OK)
}

fn cmd_export(a: ExportArgs) -> Result<i32> {
    let problem = parse_problem(&a.problem, a.seed.seed)?;
    let mut w = sink(a.output.as_deref())?;
    problem.matrix.write_matrix_market(&mut w)?;
    w.flush()?;
    Ok(EXIT_OK)
}
