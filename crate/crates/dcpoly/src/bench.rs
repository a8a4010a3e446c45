//! Benchmark harness: runs (example, epsilon, algorithm) grids over the
//! registry problems and serializes the results as CSV, JSON, or a
//! markdown grid.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dc_solver::{solve_direct, solve_via_approximation, SolveConfig, SolveError};
use crate::oracles::{build_from_spec, DcProblem, ProblemSpec, RegistryError};
use crate::scalar::Scalar;
use crate::underestimator::{
    approximate_multi_cut, approximate_single_cut, convergence_profile, ApproxConfig, ApproxError,
    Termination,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("invalid bench request: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Algorithm {
    #[serde(rename = "alg1")]
    Alg1,
    #[serde(rename = "alg2")]
    Alg2,
    #[serde(rename = "alg3")]
    Alg3,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Alg1, Algorithm::Alg2, Algorithm::Alg3];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Alg3 => "alg3",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alg1" => Ok(Algorithm::Alg1),
            "alg2" => Ok(Algorithm::Alg2),
            "alg3" => Ok(Algorithm::Alg3),
            other => Err(format!("unknown algorithm '{other}', expected alg1|alg2|alg3")),
        }
    }
}

/// One grid cell. A failed cell keeps its coordinates and records the error
/// text instead of a value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct BenchRow<S: Scalar> {
    pub example: String,
    pub n: usize,
    pub m: Option<usize>,
    pub epsilon: S,
    pub algorithm: Algorithm,
    pub time_seconds: f64,
    pub value: Option<S>,
    pub lower_bound: Option<S>,
    pub certified: bool,
    /// z* from the registry when the optimum is known (table annotation).
    pub z_star: Option<S>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct BenchRunConfig<S: Scalar> {
    pub time_limit: f64,
    pub epsilons: Vec<S>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct BenchSuite<S: Scalar> {
    pub rows: Vec<BenchRow<S>>,
    pub config: BenchRunConfig<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            "markdown" => Ok(TableFormat::Markdown),
            other => Err(format!("unknown format '{other}', expected csv|json|markdown")),
        }
    }
}

struct CellOutcome<S: Scalar> {
    time_seconds: f64,
    value: Option<S>,
    lower_bound: Option<S>,
    certified: bool,
    error: Option<String>,
}

fn run_cell<S: Scalar>(
    problem: &DcProblem<S>,
    epsilon: S,
    algorithm: Algorithm,
    time_limit: f64,
) -> CellOutcome<S> {
    let start = Instant::now();
    let outcome: Result<(S, S, bool), String> = (|| match algorithm {
        Algorithm::Alg3 => {
            let mut cfg = SolveConfig::new(epsilon);
            cfg.time_limit = Some(time_limit);
            let report = solve_direct(problem, &cfg).map_err(|e| e.to_string())?;
            let certified = report.terminated_by == Termination::GapMet
                && report.f_best - report.lower_bound <= epsilon + S::c(1e-9);
            Ok((report.f_best, report.lower_bound, certified))
        }
        Algorithm::Alg1 | Algorithm::Alg2 => {
            let mut cfg = ApproxConfig::new(epsilon);
            cfg.time_limit = Some(time_limit);
            let approx = match algorithm {
                Algorithm::Alg1 => approximate_single_cut(problem.g.as_ref(), &problem.domain, &cfg),
                _ => approximate_multi_cut(problem.g.as_ref(), &problem.domain, &cfg),
            }
            .map_err(|e| e.to_string())?;
            if approx.terminated_by == Termination::GapMet {
                let report = solve_via_approximation(problem, &approx).map_err(|e| e.to_string())?;
                let certified = report.f_best - report.lower_bound <= epsilon + S::c(1e-9);
                Ok((report.f_best, report.lower_bound, certified))
            } else {
                // No certificate; the incumbent is still a feasible value and
                // min over vertices of (y - h) is still a valid lower bound.
                let mut best: Option<(S, S)> = None;
                for v in approx.poly.vertices() {
                    let score =
                        v.height - problem.h.eval(&v.point).map_err(|e| e.to_string())?;
                    let f = problem.objective(&v.point).map_err(|e| e.to_string())?;
                    best = Some(match best {
                        None => (f, score),
                        Some((bf, bs)) => (bf.min(f), bs.min(score)),
                    });
                }
                let (value, lower) =
                    best.ok_or_else(|| "empty vertex set".to_string())?;
                Ok((value, lower, false))
            }
        }
    })();
    let time_seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok((value, lower_bound, certified)) => CellOutcome {
            time_seconds,
            value: Some(value),
            lower_bound: Some(lower_bound),
            certified,
            error: None,
        },
        Err(error) => CellOutcome {
            time_seconds,
            value: None,
            lower_bound: None,
            certified: false,
            error: Some(error),
        },
    }
}

/// Runs every (example, epsilon, algorithm) cell. Per-cell failures are
/// recorded in their rows; the suite itself only fails on an unusable
/// request (bad worker count).
pub fn run_suite<S: Scalar>(
    specs: &[ProblemSpec],
    epsilons: &[S],
    algorithms: &[Algorithm],
    time_limit: f64,
    workers: usize,
    seed: u64,
) -> Result<BenchSuite<S>, BenchError> {
    if workers == 0 {
        return Err(BenchError::Invalid("workers must be at least 1".into()));
    }
    let mut cells: Vec<(ProblemSpec, S, Algorithm)> = Vec::new();
    for spec in specs {
        for &eps in epsilons {
            for &alg in algorithms {
                cells.push((*spec, eps, alg));
            }
        }
    }

    let run_one = |(spec, eps, alg): &(ProblemSpec, S, Algorithm)| -> BenchRow<S> {
        let coordinates = |value, lower_bound, certified, time_seconds, z_star, error| BenchRow {
            example: spec.id.to_string(),
            n: spec.n,
            m: spec.m,
            epsilon: *eps,
            algorithm: *alg,
            time_seconds,
            value,
            lower_bound,
            certified,
            z_star,
            error,
        };
        match build_from_spec::<S>(spec) {
            Err(e) => coordinates(None, None, false, 0.0, None, Some(e.to_string())),
            Ok(problem) => {
                let z_star = problem.known_optimum.as_ref().map(|o| o.z_star);
                let out = run_cell(&problem, *eps, *alg, time_limit);
                coordinates(
                    out.value,
                    out.lower_bound,
                    out.certified,
                    out.time_seconds,
                    z_star,
                    out.error,
                )
            }
        }
    };

    let mut rows: Vec<BenchRow<S>> = if workers == 1 {
        cells.iter().map(run_one).collect()
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| BenchError::Invalid(format!("thread pool: {e}")))?;
        pool.install(|| cells.par_iter().map(run_one).collect())
    };
    rows.sort_by(|a, b| {
        (&a.example, a.n, a.m, a.algorithm)
            .cmp(&(&b.example, b.n, b.m, b.algorithm))
            .then(
                a.epsilon
                    .partial_cmp(&b.epsilon)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .reverse(),
            )
    });
    Ok(BenchSuite {
        rows,
        config: BenchRunConfig {
            time_limit,
            epsilons: epsilons.to_vec(),
            seed,
        },
    })
}

fn fmt_opt<S: Scalar>(v: &Option<S>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

/// Serializes a suite. CSV and markdown are for reading; JSON round-trips
/// back to a `BenchSuite`.
pub fn emit_table<S: Scalar>(suite: &BenchSuite<S>, format: TableFormat) -> String {
    match format {
        TableFormat::Csv => {
            let mut out =
                String::from("example,n,m,epsilon,algorithm,time_seconds,value,lower_bound,certified\n");
            for r in &suite.rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{:.6},{},{},{}\n",
                    r.example,
                    r.n,
                    r.m.map(|m| m.to_string()).unwrap_or_default(),
                    r.epsilon,
                    r.algorithm,
                    r.time_seconds,
                    fmt_opt(&r.value),
                    fmt_opt(&r.lower_bound),
                    r.certified,
                ));
            }
            out
        }
        TableFormat::Json => {
            serde_json::to_string_pretty(suite).expect("bench suite serializes")
        }
        TableFormat::Markdown => emit_markdown(suite),
    }
}

/// One line per (example, epsilon) with per-algorithm time/value columns.
fn emit_markdown<S: Scalar>(suite: &BenchSuite<S>) -> String {
    let mut out = String::new();
    out.push_str(
        "| example | n | z* | eps | alg1 time | alg1 value | alg2 time | alg2 value | alg3 time | alg3 value |\n",
    );
    out.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
    let mut groups: Vec<(String, usize, Option<S>, S)> = Vec::new();
    for r in &suite.rows {
        let key = (r.example.clone(), r.n, r.z_star, r.epsilon);
        if !groups
            .iter()
            .any(|g| g.0 == key.0 && g.1 == key.1 && g.3 == key.3)
        {
            groups.push(key);
        }
    }
    for (example, n, z_star, eps) in groups {
        let mut line = format!(
            "| {example} | {n} | {} | {eps} |",
            z_star.map(|z| format!("{z:.4}")).unwrap_or_default()
        );
        for alg in Algorithm::ALL {
            let cell = suite
                .rows
                .iter()
                .find(|r| r.example == example && r.n == n && r.epsilon == eps && r.algorithm == alg);
            match cell {
                Some(r) if r.error.is_none() => {
                    let star = if r.certified { "" } else { "*" };
                    line.push_str(&format!(
                        " {:.3} | {}{star} |",
                        r.time_seconds,
                        fmt_opt(&r.value)
                    ));
                }
                Some(r) => {
                    line.push_str(&format!(" | failed: {} |", r.error.as_deref().unwrap_or("")));
                }
                None => line.push_str(" | |"),
            }
        }
        line.push('\n');
        out.push_str(&line);
    }
    out.push_str("\nuncertified values are marked with *\n");
    out
}

/// Gap decay data for one example's `g`: per-iteration max gap and the
/// fitted log-log slope of the cumulative-min series.
#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub ks: Vec<usize>,
    pub gaps: Vec<f64>,
    pub loglog_slope: Option<f64>,
}

impl ConvergenceStudy {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.loglog_slope {
            Some(s) => out.push_str(&format!("# loglog_slope = {s}\n")),
            None => out.push_str("# loglog_slope = nan\n"),
        }
        out.push_str("k,max_gap\n");
        for (k, gp) in self.ks.iter().zip(&self.gaps) {
            out.push_str(&format!("{k},{gp}\n"));
        }
        out
    }
}

/// Runs the approximation of the example's `g` with epsilon = 0 and an
/// iteration cap, recording the gap series.
pub fn convergence_study<S: Scalar>(
    spec: &ProblemSpec,
    algorithm: Algorithm,
    iterations: usize,
    time_limit: Option<f64>,
) -> Result<ConvergenceStudy, BenchError> {
    if algorithm == Algorithm::Alg3 {
        return Err(BenchError::Invalid(
            "convergence studies apply to alg1/alg2 (the approximation loops)".into(),
        ));
    }
    let problem = build_from_spec::<S>(spec)?;
    let mut cfg = ApproxConfig::new(S::zero());
    cfg.max_iterations = iterations;
    cfg.time_limit = time_limit;
    cfg.record_history = true;
    let result = match algorithm {
        Algorithm::Alg1 => approximate_single_cut(problem.g.as_ref(), &problem.domain, &cfg)?,
        _ => approximate_multi_cut(problem.g.as_ref(), &problem.domain, &cfg)?,
    };
    let profile = convergence_profile(&result)?;
    Ok(ConvergenceStudy {
        ks: profile.ks,
        gaps: profile.gaps.iter().map(|g| g.to_f64_lossy()).collect(),
        loglog_slope: profile.loglog_slope,
    })
}
