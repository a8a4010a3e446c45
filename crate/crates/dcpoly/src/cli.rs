//! Command-line front end.
//!
//! Exit codes: 0 on certified success, 2 when the run terminated without a
//! certificate (iteration cap or time limit), 1 on usage or domain errors.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bench::{convergence_study, emit_table, run_suite, Algorithm, TableFormat};
use crate::dc_solver::{solve_direct, solve_via_approximation, SolveConfig};
use crate::oracles::{build_from_spec, ProblemSpec};
use crate::underestimator::{
    approximate_multi_cut, approximate_single_cut, ApproxConfig, Termination,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_UNCERTIFIED: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "dcpoly",
    about = "Certified global minimization of differences of convex functions over boxes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build an epsilon-underestimator of an example's convex part g.
    Approx(ApproxArgs),
    /// Solve min g(x) - h(x) over the box with an epsilon certificate.
    Solve(SolveArgs),
    /// Run an (example, epsilon, algorithm) benchmark grid.
    Bench(BenchArgs),
    /// Record the gap decay of an approximation run (epsilon = 0).
    Convergence(ConvergenceArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Problem id, e.g. ex4 or ex6:n=3,m=2
    #[arg(long)]
    problem: String,
    /// Wall-clock budget in seconds
    #[arg(long, value_name = "SECONDS")]
    time_limit: Option<f64>,
    /// Iteration cap
    #[arg(long, value_name = "N")]
    max_iter: Option<usize>,
    /// Write the machine artifact here
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Artifact format
    #[arg(long, default_value = "json")]
    format: TableFormat,
    /// Worker threads (1 keeps runs byte-reproducible)
    #[arg(long, default_value_t = 1, value_name = "N")]
    workers: usize,
    /// Seed recorded into artifacts (all computations are deterministic)
    #[arg(long, default_value_t = 0, value_name = "N")]
    seed: u64,
}

#[derive(Args, Debug)]
struct ApproxArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    eps: f64,
    /// alg1 (single cut) or alg2 (multi cut)
    #[arg(long, default_value = "alg2")]
    alg: Algorithm,
    /// Cap on cuts added per alg2 scan
    #[arg(long, value_name = "N")]
    max_cuts_per_iter: Option<usize>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    eps: f64,
    /// alg1/alg2 (approximate, then read off the solution) or alg3 (direct)
    #[arg(long, default_value = "alg3")]
    alg: Algorithm,
    #[arg(long, value_name = "N")]
    max_cuts_per_iter: Option<usize>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Comma-separated problem ids, e.g. ex4,ex5,ex8:n=2
    #[arg(long)]
    problem: String,
    /// Comma-separated epsilon list
    #[arg(long, default_value = "1,0.1,0.01")]
    eps: String,
    /// Comma-separated algorithms; default runs all three
    #[arg(long, default_value = "alg1,alg2,alg3")]
    alg: String,
    #[arg(long, value_name = "SECONDS", default_value_t = 600.0)]
    time_limit: f64,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: TableFormat,
    #[arg(long, default_value_t = 1, value_name = "N")]
    workers: usize,
    #[arg(long, default_value_t = 0, value_name = "N")]
    seed: u64,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// alg1 or alg2
    #[arg(long, default_value = "alg1")]
    alg: Algorithm,
}

fn init_logging() {
    let env = env_logger::Env::new().filter("DCPOLY_LOG");
    let _ = env_logger::Builder::from_env(env).try_init();
}

fn write_artifact(path: &PathBuf, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn usage_error(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

/// Parses an argv slice and runs the requested command, returning the process
/// exit code.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Approx(args) => run_approx(args),
        Command::Solve(args) => run_solve(args),
        Command::Bench(args) => run_bench(args),
        Command::Convergence(args) => run_convergence(args),
    }
}

fn parse_problem(text: &str) -> Result<ProblemSpec, String> {
    ProblemSpec::parse(text).map_err(|e| e.to_string())
}

fn run_approx(args: ApproxArgs) -> i32 {
    let spec = match parse_problem(&args.common.problem) {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };
    if args.alg == Algorithm::Alg3 {
        return usage_error("approx supports alg1 and alg2 only");
    }
    let problem = match build_from_spec::<f64>(&spec) {
        Ok(p) => p,
        Err(e) => return usage_error(e),
    };
    let mut cfg = ApproxConfig::new(args.eps);
    if let Some(cap) = args.common.max_iter {
        cfg.max_iterations = cap;
    }
    if let Some(cap) = args.max_cuts_per_iter {
        cfg.max_cuts_per_iteration = cap;
    }
    cfg.time_limit = args.common.time_limit;
    cfg.record_history = true;
    let result = match args.alg {
        Algorithm::Alg1 => approximate_single_cut(problem.g.as_ref(), &problem.domain, &cfg),
        _ => approximate_multi_cut(problem.g.as_ref(), &problem.domain, &cfg),
    };
    let result = match result {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    println!(
        "{} {} eps={} iterations={} cuts={} vertices={} final_gap={:.6e} terminated_by={:?} elapsed={:.3}s",
        spec,
        args.alg,
        args.eps,
        result.iterations,
        result.cuts_added,
        result.poly.vertices().len(),
        result.final_gap,
        result.terminated_by,
        result.elapsed_seconds,
    );
    if let Some(path) = &args.common.out {
        let artifact = match args.common.format {
            TableFormat::Csv => result.history_csv().unwrap_or_default(),
            _ => serde_json::to_string_pretty(&result.poly.to_json()).expect("poly serializes"),
        };
        if let Err(e) = write_artifact(path, &artifact) {
            return usage_error(e);
        }
    }
    if result.terminated_by == Termination::GapMet {
        EXIT_OK
    } else {
        EXIT_UNCERTIFIED
    }
}

fn run_solve(args: SolveArgs) -> i32 {
    let spec = match parse_problem(&args.common.problem) {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };
    let problem = match build_from_spec::<f64>(&spec) {
        Ok(p) => p,
        Err(e) => return usage_error(e),
    };
    let report = match args.alg {
        Algorithm::Alg3 => {
            let mut cfg = SolveConfig::new(args.eps);
            if let Some(cap) = args.common.max_iter {
                cfg.max_iterations = cap;
            }
            cfg.time_limit = args.common.time_limit;
            cfg.record_bounds = true;
            match solve_direct(&problem, &cfg) {
                Ok(r) => r,
                Err(e) => return usage_error(e),
            }
        }
        Algorithm::Alg1 | Algorithm::Alg2 => {
            let mut cfg = ApproxConfig::new(args.eps);
            if let Some(cap) = args.common.max_iter {
                cfg.max_iterations = cap;
            }
            if let Some(cap) = args.max_cuts_per_iter {
                cfg.max_cuts_per_iteration = cap;
            }
            cfg.time_limit = args.common.time_limit;
            let approx = match args.alg {
                Algorithm::Alg1 => {
                    approximate_single_cut(problem.g.as_ref(), &problem.domain, &cfg)
                }
                _ => approximate_multi_cut(problem.g.as_ref(), &problem.domain, &cfg),
            };
            let approx = match approx {
                Ok(a) => a,
                Err(e) => return usage_error(e),
            };
            if approx.terminated_by != Termination::GapMet {
                println!(
                    "{} {} eps={} terminated_by={:?} without a certificate after {} iterations",
                    spec, args.alg, args.eps, approx.terminated_by, approx.iterations
                );
                return EXIT_UNCERTIFIED;
            }
            match solve_via_approximation(&problem, &approx) {
                Ok(r) => r,
                Err(e) => return usage_error(e),
            }
        }
    };
    println!(
        "{} {} eps={} f_best={:.6} x_best={:?} bounds=[{:.6}, {:.6}] gap={:.3e} iterations={} cuts={} terminated_by={:?} elapsed={:.3}s",
        spec,
        args.alg,
        args.eps,
        report.f_best,
        report.x_best,
        report.lower_bound,
        report.upper_bound,
        report.f_best - report.lower_bound,
        report.iterations,
        report.cuts,
        report.terminated_by,
        report.elapsed,
    );
    if let Some(path) = &args.common.out {
        let artifact = match args.common.format {
            TableFormat::Csv => report.bounds_csv().unwrap_or_default(),
            _ => serde_json::to_string_pretty(&report.to_json(
                &spec.to_string(),
                problem.dim(),
                args.eps,
                args.alg.name(),
            ))
            .expect("report serializes"),
        };
        if let Err(e) = write_artifact(path, &artifact) {
            return usage_error(e);
        }
    }
    if report.terminated_by == Termination::GapMet {
        EXIT_OK
    } else {
        EXIT_UNCERTIFIED
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| format!("bad {what} '{s}': {e}")))
        .collect()
}

fn run_bench(args: BenchArgs) -> i32 {
    let specs: Vec<ProblemSpec> = match args
        .problem
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_problem)
        .collect()
    {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };
    let epsilons: Vec<f64> = match parse_list(&args.eps, "epsilon") {
        Ok(v) => v,
        Err(e) => return usage_error(e),
    };
    let algorithms: Vec<Algorithm> = match parse_list(&args.alg, "algorithm") {
        Ok(v) => v,
        Err(e) => return usage_error(e),
    };
    let suite = match run_suite::<f64>(
        &specs,
        &epsilons,
        &algorithms,
        args.time_limit,
        args.workers,
        args.seed,
    ) {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };
    let doc = emit_table(&suite, args.format);
    match &args.out {
        Some(path) => {
            if let Err(e) = write_artifact(path, &doc) {
                return usage_error(e);
            }
            println!(
                "bench: {} rows, {} certified, written to {}",
                suite.rows.len(),
                suite.rows.iter().filter(|r| r.certified).count(),
                path.display()
            );
        }
        None => print!("{doc}"),
    }
    if suite.rows.iter().all(|r| r.certified) {
        EXIT_OK
    } else {
        EXIT_UNCERTIFIED
    }
}

fn run_convergence(args: ConvergenceArgs) -> i32 {
    let spec = match parse_problem(&args.common.problem) {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };
    let iterations = args.common.max_iter.unwrap_or(200);
    let study = match convergence_study::<f64>(
        &spec,
        args.alg,
        iterations,
        args.common.time_limit,
    ) {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };
    let doc = study.to_csv();
    match &args.common.out {
        Some(path) => {
            if let Err(e) = write_artifact(path, &doc) {
                return usage_error(e);
            }
            println!(
                "convergence: {} records, slope {:?}, written to {}",
                study.ks.len(),
                study.loglog_slope,
                path.display()
            );
        }
        None => print!("{doc}"),
    }
    EXIT_OK
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_problem_is_usage_error() {
        let code = parse_and_dispatch(["dcpoly", "solve", "--problem", "ex9", "--eps", "0.1"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        let code = parse_and_dispatch(["dcpoly", "solve", "--nope"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        let code = parse_and_dispatch(["dcpoly", "--help"]);
        assert_eq!(code, EXIT_OK);
    }

    #[test]
    fn solve_ex4_certifies() {
        let code = parse_and_dispatch([
            "dcpoly", "solve", "--problem", "ex4", "--eps", "0.01", "--alg", "alg3",
        ]);
        assert_eq!(code, EXIT_OK);
    }
}
