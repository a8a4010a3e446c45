//! Global ε-solves of `min over the box of g(x) - h(x)`.
//!
//! Two pathways: the direct loop that refines the underestimator of `g`
//! only around candidate minimizers, and the two-stage route that first
//! builds a full ε-underestimator and then reads the solution off its
//! vertices. Both certify the answer through the sandwich
//! `a_k ≤ min f ≤ b_k`.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::oracles::{supporting_cut, DcProblem, OracleError};
use crate::poly_core::{init_epigraph, PolyError};
use crate::scalar::Scalar;
use crate::underestimator::{ApproxError, ApproxResult, Termination};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("oracle failure at iteration {iteration}: {source}")]
    Oracle {
        iteration: usize,
        #[source]
        source: OracleError,
    },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
}

#[derive(Debug, Clone)]
pub struct SolveConfig<S: Scalar> {
    pub epsilon: S,
    pub max_iterations: usize,
    pub time_limit: Option<f64>,
    pub record_bounds: bool,
}

impl<S: Scalar> SolveConfig<S> {
    pub fn new(epsilon: S) -> Self {
        Self {
            epsilon,
            max_iterations: 100_000,
            time_limit: None,
            record_bounds: false,
        }
    }

    fn validate(&self) -> Result<(), SolveError> {
        if self.epsilon < S::zero() || !self.epsilon.is_finite() {
            return Err(SolveError::InvalidConfig(format!(
                "epsilon must be finite and nonnegative, got {}",
                self.epsilon
            )));
        }
        if self.epsilon == S::zero() && self.max_iterations == usize::MAX {
            return Err(SolveError::InvalidConfig(
                "epsilon = 0 requires a finite iteration cap".into(),
            ));
        }
        Ok(())
    }
}

/// One recorded sandwich: `a_k ≤ min f ≤ b_k`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundsRecord<S: Scalar> {
    pub k: usize,
    pub a_k: S,
    pub b_k: S,
}

#[derive(Debug, Clone)]
pub struct SolveReport<S: Scalar> {
    pub x_best: Vec<S>,
    /// `g(x_best) - h(x_best)`; always equals `upper_bound`.
    pub f_best: S,
    /// The last `a_k`: a certified global lower bound.
    pub lower_bound: S,
    /// The best `b_k` seen: a certified global upper bound.
    pub upper_bound: S,
    pub iterations: usize,
    pub cuts: usize,
    pub elapsed: f64,
    pub terminated_by: Termination,
    pub bounds_history: Option<Vec<BoundsRecord<S>>>,
    /// The last few candidate points, most recent last (limit-point
    /// inspection in the epsilon = 0 mode).
    pub recent_points: Vec<Vec<S>>,
}

impl<S: Scalar> SolveReport<S> {
    /// Bounds history export: CSV columns (k, a_k, b_k).
    pub fn bounds_csv(&self) -> Option<String> {
        let history = self.bounds_history.as_ref()?;
        let mut out = String::from("k,a_k,b_k\n");
        for rec in history {
            out.push_str(&format!("{},{},{}\n", rec.k, rec.a_k, rec.b_k));
        }
        Some(out)
    }

    /// JSON document for the machine artifact.
    pub fn to_json(&self, problem: &str, n: usize, epsilon: S, algorithm: &str) -> serde_json::Value {
        let mut doc = serde_json::json!({
            "problem": problem,
            "n": n,
            "epsilon": epsilon,
            "algorithm": algorithm,
            "x_best": self.x_best,
            "f_best": self.f_best,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "iterations": self.iterations,
            "cuts": self.cuts,
            "elapsed_seconds": self.elapsed,
            "terminated_by": self.terminated_by,
        });
        if let Some(history) = &self.bounds_history {
            doc["bounds_history"] = serde_json::to_value(history).expect("serializable history");
        }
        doc
    }
}

const RECENT_POINT_WINDOW: usize = 8;

/// Algorithm-3 style direct solve: at each iteration minimize `y - h(x)` over
/// the vertices of the current outer approximation (which solves the
/// polyhedral subproblem exactly), stop once the underestimator is tight at
/// the minimizer, otherwise cut there.
pub fn solve_direct<S: Scalar>(
    problem: &DcProblem<S>,
    cfg: &SolveConfig<S>,
) -> Result<SolveReport<S>, SolveError> {
    cfg.validate()?;
    let start = Instant::now();
    let oracle_err = |iteration: usize| move |source| SolveError::Oracle { iteration, source };

    let x0 = problem.domain.midpoint();
    let first = supporting_cut(problem.g.as_ref(), &x0).map_err(oracle_err(0))?;
    let mut poly = init_epigraph(problem.domain.clone(), first)?;

    let mut bounds = cfg.record_bounds.then(Vec::new);
    let mut recent: Vec<Vec<S>> = Vec::new();
    let mut best_b = S::infinity();
    let mut best_x = x0;

    let mut k = 0usize;
    loop {
        k += 1;
        // (x^k, y^k): vertex minimizer of y - h(x); lexicographic tie-break.
        let mut best: Option<(S, usize)> = None;
        for (i, v) in poly.vertices().iter().enumerate() {
            let score = v.height - problem.h.eval(&v.point).map_err(oracle_err(k))?;
            best = match best {
                None => Some((score, i)),
                Some((bs, bi)) => {
                    let better = score < bs
                        || (score == bs
                            && v.lex_key_cmp(&poly.vertices()[bi]).is_lt());
                    if better {
                        Some((score, i))
                    } else {
                        Some((bs, bi))
                    }
                }
            };
        }
        let (a_k, idx) = best.ok_or_else(|| {
            SolveError::Poly(PolyError::InternalConsistency("empty vertex set".into()))
        })?;
        let xk = poly.vertices()[idx].point.clone();
        let yk = poly.vertices()[idx].height;
        let gxk = problem.g.eval(&xk).map_err(oracle_err(k))?;
        let hxk = problem.h.eval(&xk).map_err(oracle_err(k))?;
        let b_k = gxk - hxk;

        if let Some(records) = bounds.as_mut() {
            records.push(BoundsRecord { k, a_k, b_k });
        }
        if b_k < best_b {
            best_b = b_k;
            best_x = xk.clone();
        }
        recent.push(xk.clone());
        if recent.len() > RECENT_POINT_WINDOW {
            recent.remove(0);
        }

        let finish = |terminated_by| SolveReport {
            x_best: best_x.clone(),
            f_best: best_b,
            lower_bound: a_k,
            upper_bound: best_b,
            iterations: k,
            cuts: poly.minorants().len(),
            elapsed: start.elapsed().as_secs_f64(),
            terminated_by,
            bounds_history: bounds.clone(),
            recent_points: recent.clone(),
        };

        // Continue only on strict violation; the negated form also stops
        // (conservatively) if the difference is NaN.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(gxk - yk > cfg.epsilon) {
            return Ok(finish(Termination::GapMet));
        }
        if k >= cfg.max_iterations {
            return Ok(finish(Termination::IterationCap));
        }
        if let Some(limit) = cfg.time_limit {
            if start.elapsed().as_secs_f64() >= limit {
                return Ok(finish(Termination::TimeLimit));
            }
        }
        let cut = supporting_cut(problem.g.as_ref(), &xk).map_err(oracle_err(k))?;
        poly.intersect_halfspace(cut)?;
    }
}

/// Reads an ε-solution off a finished ε-underestimator of `g`: the vertex
/// minimizing `y - h(x)` solves the polyhedral problem, and the
/// underestimator certificate transfers the ε-guarantee to the original
/// problem.
pub fn solve_via_approximation<S: Scalar>(
    problem: &DcProblem<S>,
    approx: &ApproxResult<S>,
) -> Result<SolveReport<S>, SolveError> {
    if approx.terminated_by != Termination::GapMet {
        return Err(SolveError::InvalidInput(
            "approximation did not terminate gap_met; no certificate is available".into(),
        ));
    }
    if approx.poly.dim() != problem.dim() {
        return Err(SolveError::InvalidInput(format!(
            "approximation dimension {} does not match problem dimension {}",
            approx.poly.dim(),
            problem.dim()
        )));
    }
    let start = Instant::now();
    let oracle_err = |source| SolveError::Oracle {
        iteration: 0,
        source,
    };

    let mut best: Option<(S, usize)> = None;
    for (i, v) in approx.poly.vertices().iter().enumerate() {
        let score = v.height - problem.h.eval(&v.point).map_err(oracle_err)?;
        best = match best {
            None => Some((score, i)),
            Some((bs, bi)) => {
                let better = score < bs
                    || (score == bs
                        && v.lex_key_cmp(&approx.poly.vertices()[bi]).is_lt());
                if better {
                    Some((score, i))
                } else {
                    Some((bs, bi))
                }
            }
        };
    }
    let (z_g, idx) = best.ok_or_else(|| {
        SolveError::Poly(PolyError::InternalConsistency("empty vertex set".into()))
    })?;
    let x_best = approx.poly.vertices()[idx].point.clone();
    let f_best =
        problem.g.eval(&x_best).map_err(oracle_err)? - problem.h.eval(&x_best).map_err(oracle_err)?;
    Ok(SolveReport {
        f_best,
        lower_bound: z_g,
        upper_bound: f_best,
        iterations: approx.iterations,
        cuts: approx.poly.minorants().len(),
        elapsed: approx.elapsed_seconds + start.elapsed().as_secs_f64(),
        terminated_by: Termination::GapMet,
        bounds_history: None,
        recent_points: vec![x_best.clone()],
        x_best,
    })
}

/// True iff every recorded sandwich brackets the known optimum.
pub fn bound_sandwich_check<S: Scalar>(
    report: &SolveReport<S>,
    problem: &DcProblem<S>,
) -> Result<bool, SolveError> {
    let opt = problem.known_optimum.as_ref().ok_or_else(|| {
        SolveError::InvalidInput("problem has no known optimum recorded".into())
    })?;
    let records = report.bounds_history.as_ref().ok_or_else(|| {
        SolveError::InvalidInput("report has no bounds history (record_bounds was not set)".into())
    })?;
    let slack = S::c(1e-7);
    Ok(records
        .iter()
        .all(|r| r.a_k <= opt.z_star + slack && r.b_k >= opt.z_star - slack))
}
