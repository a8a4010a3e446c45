//! Cutting-plane construction of ε-polyhedral underestimators of a convex
//! oracle over a box, in two flavors: one cut per iteration at the worst
//! vertex, or a batch of cuts covering every vertex that is still too far
//! from the graph of `g`.

use std::collections::HashSet;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::oracles::{supporting_cut, ConvexOracle, OracleError};
use crate::poly_core::{init_epigraph, BoxDomain, EpigraphPoly, LiftedVertex, PolyError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("insufficient history: need at least {needed} recorded iterations, have {have}")]
    InsufficientHistory { needed: usize, have: usize },
    #[error("oracle failure at iteration {iteration}: {source}")]
    Oracle {
        iteration: usize,
        #[source]
        source: OracleError,
    },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GapMet,
    IterationCap,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct ApproxConfig<S: Scalar> {
    pub epsilon: S,
    pub max_iterations: usize,
    /// Batch cap for the multi-cut algorithm; surplus cuts are deferred to
    /// the next scan.
    pub max_cuts_per_iteration: usize,
    pub time_limit: Option<f64>,
    pub record_history: bool,
}

impl<S: Scalar> ApproxConfig<S> {
    pub fn new(epsilon: S) -> Self {
        Self {
            epsilon,
            max_iterations: 100_000,
            max_cuts_per_iteration: 4096,
            time_limit: None,
            record_history: false,
        }
    }

    fn validate(&self) -> Result<(), ApproxError> {
        if self.epsilon < S::zero() || !self.epsilon.is_finite() {
            return Err(ApproxError::InvalidConfig(format!(
                "epsilon must be finite and nonnegative, got {}",
                self.epsilon
            )));
        }
        if self.epsilon == S::zero() && self.max_iterations == usize::MAX {
            return Err(ApproxError::InvalidConfig(
                "epsilon = 0 requires a finite iteration cap".into(),
            ));
        }
        if self.max_cuts_per_iteration == 0 {
            return Err(ApproxError::InvalidConfig(
                "max_cuts_per_iteration must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HistoryRecord<S: Scalar> {
    pub k: usize,
    pub vertex_count: usize,
    pub max_gap: S,
    pub cuts_so_far: usize,
    pub elapsed_seconds: f64,
}

#[derive(Debug)]
pub struct ApproxResult<S: Scalar> {
    /// `epi g^k ∩ (X × R)`; its minorant list is the set `𝒮`.
    pub poly: EpigraphPoly<S>,
    pub epsilon: S,
    pub iterations: usize,
    pub cuts_added: usize,
    /// Max vertex gap at exit.
    pub final_gap: S,
    pub history: Option<Vec<HistoryRecord<S>>>,
    pub terminated_by: Termination,
    pub elapsed_seconds: f64,
}

impl<S: Scalar> ApproxResult<S> {
    pub fn minorants(&self) -> &[crate::poly_core::AffineMinorant<S>] {
        self.poly.minorants()
    }

    /// History export: CSV columns (k, vertex_count, max_gap, cuts_so_far,
    /// elapsed_seconds).
    pub fn history_csv(&self) -> Option<String> {
        let history = self.history.as_ref()?;
        let mut out = String::from("k,vertex_count,max_gap,cuts_so_far,elapsed_seconds\n");
        for rec in history {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                rec.k, rec.vertex_count, rec.max_gap, rec.cuts_so_far, rec.elapsed_seconds
            ));
        }
        Some(out)
    }
}

/// Max vertex gap `max over vertices of g(x) - y` and the achieving vertex.
///
/// By vertex optimality of polyhedral-minus-convex objectives this equals
/// `sup over the box of (g - g^k)`, and it bounds the Hausdorff distance of
/// the capped epigraph sets from above.
#[derive(Debug, Clone)]
pub struct VertexGap<S: Scalar> {
    pub gap: S,
    pub argmax_vertex: LiftedVertex<S>,
}

pub fn max_vertex_gap<S: Scalar>(
    poly: &EpigraphPoly<S>,
    g: &dyn ConvexOracle<S>,
) -> Result<VertexGap<S>, ApproxError> {
    let mut best: Option<(S, &LiftedVertex<S>)> = None;
    for v in poly.vertices() {
        let gap = g.eval(&v.point).map_err(|source| ApproxError::Oracle {
            iteration: 0,
            source,
        })? - v.height;
        best = match best {
            None => Some((gap, v)),
            Some((bg, bv)) => {
                if gap > bg || (gap == bg && v.lex_key_cmp(bv).is_lt()) {
                    Some((gap, v))
                } else {
                    Some((bg, bv))
                }
            }
        };
    }
    let (gap, v) = best.ok_or_else(|| {
        ApproxError::Poly(PolyError::InternalConsistency("empty vertex set".into()))
    })?;
    Ok(VertexGap {
        gap,
        argmax_vertex: v.clone(),
    })
}

fn oracle_err(iteration: usize) -> impl Fn(OracleError) -> ApproxError {
    move |source| ApproxError::Oracle { iteration, source }
}

/// Single-cut refinement: cut at the vertex farthest below the graph of `g`
/// until every vertex is within `epsilon`.
pub fn approximate_single_cut<S: Scalar>(
    g: &dyn ConvexOracle<S>,
    domain: &BoxDomain<S>,
    cfg: &ApproxConfig<S>,
) -> Result<ApproxResult<S>, ApproxError> {
    cfg.validate()?;
    let start = Instant::now();
    let x0 = domain.midpoint();
    let first = supporting_cut(g, &x0).map_err(oracle_err(0))?;
    let mut poly = init_epigraph(domain.clone(), first)?;
    let mut history = cfg.record_history.then(Vec::new);

    let mut k = 0usize;
    loop {
        let worst = max_vertex_gap(&poly, g)?;
        if let Some(h) = history.as_mut() {
            h.push(HistoryRecord {
                k,
                vertex_count: poly.vertices().len(),
                max_gap: worst.gap,
                cuts_so_far: poly.minorants().len(),
                elapsed_seconds: start.elapsed().as_secs_f64(),
            });
        }
        let finish = |terminated_by| ApproxResult {
            epsilon: cfg.epsilon,
            iterations: k,
            cuts_added: poly.minorants().len(),
            final_gap: worst.gap,
            history: history.clone(),
            terminated_by,
            elapsed_seconds: start.elapsed().as_secs_f64(),
            poly: poly.clone(),
        };
        if worst.gap <= cfg.epsilon {
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
        let cut = supporting_cut(g, &worst.argmax_vertex.point).map_err(oracle_err(k))?;
        poly.intersect_halfspace(cut)?;
        k += 1;
    }
}

/// Bit-pattern key of a vertex x-part; kept vertices are carried over
/// unchanged between iterations, so exact matching is the right identity.
fn vertex_key<S: Scalar>(point: &[S]) -> Vec<u64> {
    point
        .iter()
        .map(|v| v.to_f64_lossy().to_bits())
        .collect()
}

/// Multi-cut refinement: every scan collects a supporting cut at each vertex
/// still farther than `epsilon` below the graph of `g` (deepest first, capped
/// per scan) and intersects them all; vertices once verified close enough are
/// cached and never rechecked.
pub fn approximate_multi_cut<S: Scalar>(
    g: &dyn ConvexOracle<S>,
    domain: &BoxDomain<S>,
    cfg: &ApproxConfig<S>,
) -> Result<ApproxResult<S>, ApproxError> {
    cfg.validate()?;
    let start = Instant::now();
    let x0 = domain.midpoint();
    let first = supporting_cut(g, &x0).map_err(oracle_err(0))?;
    let mut poly = init_epigraph(domain.clone(), first)?;
    let mut history = cfg.record_history.then(Vec::new);
    let mut verified: HashSet<Vec<u64>> = HashSet::new();

    let mut k = 0usize;
    loop {
        let mut pending: Vec<(S, usize)> = Vec::new();
        let mut scan_max = S::zero();
        for (i, v) in poly.vertices().iter().enumerate() {
            let key = vertex_key(&v.point);
            if verified.contains(&key) {
                continue;
            }
            let gap = g.eval(&v.point).map_err(oracle_err(k))? - v.height;
            scan_max = scan_max.max(gap);
            if gap > cfg.epsilon {
                pending.push((gap, i));
            } else {
                verified.insert(key);
            }
        }
        if let Some(h) = history.as_mut() {
            h.push(HistoryRecord {
                k,
                vertex_count: poly.vertices().len(),
                max_gap: scan_max,
                cuts_so_far: poly.minorants().len(),
                elapsed_seconds: start.elapsed().as_secs_f64(),
            });
        }
        let finish = |terminated_by| ApproxResult {
            epsilon: cfg.epsilon,
            iterations: k,
            cuts_added: poly.minorants().len(),
            final_gap: scan_max,
            history: history.clone(),
            terminated_by,
            elapsed_seconds: start.elapsed().as_secs_f64(),
            poly: poly.clone(),
        };
        if pending.is_empty() {
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
        // Deepest gap first; lexicographic point order breaks ties.
        pending.sort_by(|(ga, ia), (gb, ib)| {
            gb.partial_cmp(ga)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| poly.vertices()[*ia].lex_key_cmp(&poly.vertices()[*ib]))
        });
        pending.truncate(cfg.max_cuts_per_iteration);
        let cuts: Vec<_> = pending
            .iter()
            .map(|&(_, i)| supporting_cut(g, &poly.vertices()[i].point).map_err(oracle_err(k)))
            .collect::<Result<_, _>>()?;
        for cut in cuts {
            poly.intersect_halfspace(cut)?;
        }
        k += 1;
    }
}

/// Per-iteration gap series and the fitted log-log decay rate.
#[derive(Debug, Clone)]
pub struct ConvergenceProfile<S: Scalar> {
    pub ks: Vec<usize>,
    pub gaps: Vec<S>,
    /// Least-squares slope of log(cumulative-min gap) against log(k) over the
    /// last half of the series; `None` when the gap collapses to zero (or the
    /// series is degenerate), in which case no rate is defined.
    pub loglog_slope: Option<f64>,
}

pub fn convergence_profile<S: Scalar>(
    result: &ApproxResult<S>,
) -> Result<ConvergenceProfile<S>, ApproxError> {
    let history = result
        .history
        .as_ref()
        .ok_or_else(|| ApproxError::InvalidConfig("record_history was not set".into()))?;
    let ks: Vec<usize> = history.iter().map(|r| r.k).collect();
    let gaps: Vec<S> = history.iter().map(|r| r.max_gap).collect();
    // A short series with positive gaps means the rate was genuinely being
    // measured and there is too little data; a series that collapsed to zero
    // immediately (exactly reconstructed g) simply has no rate to report.
    if history.len() < 20 && gaps.iter().any(|gp| *gp > S::zero()) {
        return Err(ApproxError::InsufficientHistory {
            needed: 20,
            have: history.len(),
        });
    }

    // Cumulative-min series: the certified best gap so far.
    let mut cummin = Vec::with_capacity(gaps.len());
    let mut best = S::infinity();
    for gp in &gaps {
        best = best.min(*gp);
        cummin.push(best);
    }
    let half = cummin.len() / 2;
    let pts: Vec<(f64, f64)> = ks[half..]
        .iter()
        .zip(&cummin[half..])
        .filter(|(k, gp)| **k >= 1 && **gp > S::zero())
        .map(|(k, gp)| ((*k as f64).ln(), gp.to_f64_lossy().ln()))
        .collect();
    let loglog_slope = least_squares_slope(&pts);
    Ok(ConvergenceProfile {
        ks,
        gaps,
        loglog_slope,
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::FnOracle;

    fn square1d() -> FnOracle<f64> {
        FnOracle::new(1, |x: &[f64]| Ok((x[0] * x[0], vec![2.0 * x[0]])))
    }

    fn affine1d() -> FnOracle<f64> {
        FnOracle::new(1, |x: &[f64]| Ok((3.0 * x[0] + 2.0, vec![3.0])))
    }

    fn interval() -> BoxDomain<f64> {
        BoxDomain::new(vec![-1.0], vec![1.0]).unwrap()
    }

    #[test]
    fn single_cut_stops_immediately_at_loose_epsilon() {
        let res = approximate_single_cut(&square1d(), &interval(), &ApproxConfig::new(1.0)).unwrap();
        assert_eq!(res.terminated_by, Termination::GapMet);
        assert_eq!(res.iterations, 0);
        assert_eq!(res.cuts_added, 1);
        assert!((res.final_gap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_cut_affine_is_exact() {
        let res = approximate_single_cut(&affine1d(), &interval(), &ApproxConfig::new(0.5)).unwrap();
        assert_eq!(res.terminated_by, Termination::GapMet);
        assert_eq!(res.iterations, 0);
        assert!(res.final_gap.abs() < 1e-12);
    }

    #[test]
    fn single_cut_parabola_trace() {
        // eps = 0.3: cuts at -1 then +1, leaving gaps of 0.25 at +/- 0.5.
        let res = approximate_single_cut(&square1d(), &interval(), &ApproxConfig::new(0.3)).unwrap();
        assert_eq!(res.terminated_by, Termination::GapMet);
        assert_eq!(res.iterations, 2);
        assert_eq!(res.poly.minorants().len(), 3);
        assert!((res.final_gap - 0.25).abs() < 1e-9);
        // Tie at k=0 resolved lexicographically: the second minorant anchors at -1.
        assert_eq!(res.poly.minorants()[1].anchor, vec![-1.0]);
        assert_eq!(res.poly.minorants()[2].anchor, vec![1.0]);
    }

    #[test]
    fn multi_cut_parabola_one_scan() {
        let res = approximate_multi_cut(&square1d(), &interval(), &ApproxConfig::new(0.5)).unwrap();
        assert_eq!(res.terminated_by, Termination::GapMet);
        assert_eq!(res.iterations, 1);
        assert_eq!(res.poly.minorants().len(), 3);
        assert!(res.final_gap <= 0.25 + 1e-9);
    }

    #[test]
    fn multi_cut_affine_no_cuts() {
        let res = approximate_multi_cut(&affine1d(), &interval(), &ApproxConfig::new(0.5)).unwrap();
        assert_eq!(res.terminated_by, Termination::GapMet);
        assert_eq!(res.iterations, 0);
        assert_eq!(res.poly.minorants().len(), 1);
    }

    #[test]
    fn multi_cut_loose_epsilon_keeps_initial_cut() {
        let g = FnOracle::new(2, |x: &[f64]| {
            Ok((
                x[0] * x[0] + x[1] * x[1],
                vec![2.0 * x[0], 2.0 * x[1]],
            ))
        });
        let domain = BoxDomain::uniform(2, -1.0, 1.0).unwrap();
        let res = approximate_multi_cut(&g, &domain, &ApproxConfig::new(10.0)).unwrap();
        assert_eq!(res.terminated_by, Termination::GapMet);
        assert_eq!(res.iterations, 0);
        assert_eq!(res.poly.minorants().len(), 1);
    }

    #[test]
    fn gap_of_flat_poly_under_parabola() {
        let g = square1d();
        let res = approximate_single_cut(&g, &interval(), &ApproxConfig::new(10.0)).unwrap();
        let worst = max_vertex_gap(&res.poly, &g).unwrap();
        assert!((worst.gap - 1.0).abs() < 1e-12);
        assert_eq!(worst.argmax_vertex.point, vec![-1.0]);
    }

    #[test]
    fn profile_requires_history() {
        let res = approximate_single_cut(&square1d(), &interval(), &ApproxConfig::new(1.0)).unwrap();
        assert!(matches!(
            convergence_profile(&res),
            Err(ApproxError::InvalidConfig(_))
        ));
    }

    #[test]
    fn profile_of_affine_has_no_slope() {
        let mut cfg = ApproxConfig::new(0.0);
        cfg.max_iterations = 25;
        cfg.record_history = true;
        let res = approximate_single_cut(&affine1d(), &interval(), &cfg).unwrap();
        // Affine g is reconstructed exactly at k = 0: no rate to fit.
        let prof = convergence_profile(&res).unwrap();
        assert!(prof.loglog_slope.is_none());
        assert!(prof.gaps.iter().all(|gp| gp.abs() < 1e-12));
    }

    #[test]
    fn zero_epsilon_needs_iteration_cap() {
        let mut cfg = ApproxConfig::new(0.0);
        cfg.max_iterations = usize::MAX;
        assert!(matches!(
            approximate_single_cut(&square1d(), &interval(), &cfg),
            Err(ApproxError::InvalidConfig(_))
        ));
    }
}
