//! Polyhedra of the form `epi(max of affine functions) ∩ (box × R)`.
//!
//! These sets have a single recession direction, the upward ray `e^{n+1}`,
//! so they are fully described by their vertex set plus that ray. The engine
//! keeps the vertex set up to date incrementally as halfspaces of the form
//! `t ≥ s(x)` are intersected in, which is the only kind of update the
//! cutting-plane loops ever perform. A brute-force enumerator over constraint
//! subsets serves as the independent correctness oracle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{lex_cmp, Scalar};

/// Relative tolerance for classifying a vertex against a new cut plane.
const CLASSIFY_TOL: f64 = 1e-9;
/// Euclidean distance below which two lifted vertices are merged.
const MERGE_TOL: f64 = 1e-8;
/// Pivot threshold for the small dense linear solves.
const PIVOT_TOL: f64 = 1e-11;
/// Corner enumeration guard: 2^n evaluations must stay desk-scale.
const MAX_CORNER_DIM: usize = 20;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("dimension {0} exceeds corner-enumeration guard ({MAX_CORNER_DIM})")]
    TooManyCorners(usize),
    #[error("internal consistency violation: {0}")]
    InternalConsistency(String),
}

/// Compact box `[lower, upper]` with nonempty interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct BoxDomain<S: Scalar> {
    lower: Vec<S>,
    upper: Vec<S>,
}

impl<S: Scalar> BoxDomain<S> {
    pub fn new(lower: Vec<S>, upper: Vec<S>) -> Result<Self, PolyError> {
        if lower.is_empty() {
            return Err(PolyError::InvalidBox("dimension must be at least 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(PolyError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            // The negated form also rejects NaN bounds.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(*l < *u) {
                return Err(PolyError::InvalidBox(format!(
                    "lower[{i}] = {l} must be strictly below upper[{i}] = {u}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Uniform box `[lo, hi]^n`.
    pub fn uniform(n: usize, lo: S, hi: S) -> Result<Self, PolyError> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[S] {
        &self.lower
    }

    pub fn upper(&self) -> &[S] {
        &self.upper
    }

    pub fn midpoint(&self) -> Vec<S> {
        let half = S::c(0.5);
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (*l + *u) * half)
            .collect()
    }

    pub fn contains(&self, x: &[S], slack: S) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(xi, (l, u))| *xi >= *l - slack && *xi <= *u + slack)
    }

    /// Visits the `2^n` corners in a fixed (bit-pattern) order.
    pub fn for_each_corner<E>(
        &self,
        mut f: impl FnMut(&[S]) -> Result<(), E>,
    ) -> Result<Result<(), E>, PolyError> {
        let n = self.dim();
        if n > MAX_CORNER_DIM {
            return Err(PolyError::TooManyCorners(n));
        }
        let mut corner = vec![S::zero(); n];
        for mask in 0u64..(1u64 << n) {
            for (j, cj) in corner.iter_mut().enumerate() {
                *cj = if mask >> j & 1 == 1 {
                    self.upper[j]
                } else {
                    self.lower[j]
                };
            }
            if let Err(e) = f(&corner) {
                return Ok(Err(e));
            }
        }
        Ok(Ok(()))
    }
}

/// One cut `s(x) = offset + gradient·x`, recorded with the point it was
/// generated at. The induced halfspace is `{(x,t) : t - gradient·x ≥ offset}`,
/// whose normal always has last coordinate `+1`: it never cuts the upward ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct AffineMinorant<S: Scalar> {
    pub gradient: Vec<S>,
    pub offset: S,
    pub anchor: Vec<S>,
}

impl<S: Scalar> AffineMinorant<S> {
    /// Builds the minorant `s(x) = value + gradient·(x - anchor)`.
    pub fn from_tangent(anchor: Vec<S>, value: S, gradient: Vec<S>) -> Self {
        debug_assert_eq!(anchor.len(), gradient.len());
        let shift: S = gradient.iter().zip(&anchor).map(|(g, a)| *g * *a).sum();
        Self {
            offset: value - shift,
            gradient,
            anchor,
        }
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn evaluate(&self, x: &[S]) -> S {
        self.offset + self.gradient.iter().zip(x).map(|(g, xi)| *g * *xi).sum()
    }
}

/// Identifier of one constraint of the lifted polyhedron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintId {
    /// Box facet `x_j ≥ lower_j`.
    Lower(usize),
    /// Box facet `x_j ≤ upper_j`.
    Upper(usize),
    /// Minorant halfspace `t ≥ s_i(x)`, by index into the minorant list.
    Cut(usize),
}

impl ConstraintId {
    fn is_facet(self) -> bool {
        !matches!(self, ConstraintId::Cut(_))
    }
}

/// Vertex of the lifted polyhedron: x-part, height, and the tight constraints.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(deserialize = ""))]
pub struct LiftedVertex<S: Scalar> {
    pub point: Vec<S>,
    pub height: S,
    #[serde(skip)]
    pub active_set: Vec<ConstraintId>,
}

impl<S: Scalar> LiftedVertex<S> {
    fn new(point: Vec<S>, height: S, mut active_set: Vec<ConstraintId>) -> Self {
        active_set.sort_unstable();
        active_set.dedup();
        Self {
            point,
            height,
            active_set,
        }
    }

    pub fn lifted_dist2(&self, other: &Self) -> S {
        let mut d2 = (self.height - other.height) * (self.height - other.height);
        for (a, b) in self.point.iter().zip(&other.point) {
            d2 = d2 + (*a - *b) * (*a - *b);
        }
        d2
    }

    /// Lexicographic order on (point, height); the deterministic tie-break
    /// used everywhere a vertex must be singled out.
    pub fn lex_key_cmp(&self, other: &Self) -> std::cmp::Ordering {
        lex_cmp(&self.point, &other.point).then_with(|| {
            self.height
                .partial_cmp(&other.height)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    }
}

/// The outer approximation `C^k = epi(max_i s_i) ∩ (X × R)` with its exact
/// vertex set.
#[derive(Debug, Clone)]
pub struct EpigraphPoly<S: Scalar> {
    domain: BoxDomain<S>,
    minorants: Vec<AffineMinorant<S>>,
    vertices: Vec<LiftedVertex<S>>,
}

/// `C^0`: the box corners lifted onto the plane of the first cut.
pub fn init_epigraph<S: Scalar>(
    domain: BoxDomain<S>,
    first_cut: AffineMinorant<S>,
) -> Result<EpigraphPoly<S>, PolyError> {
    let n = domain.dim();
    if first_cut.dim() != n {
        return Err(PolyError::DimensionMismatch {
            expected: n,
            got: first_cut.dim(),
        });
    }
    let mut vertices = Vec::with_capacity(1 << n);
    domain.for_each_corner(|corner| -> Result<(), PolyError> {
        let mut active: Vec<ConstraintId> = Vec::with_capacity(n + 1);
        for (j, cj) in corner.iter().enumerate() {
            if *cj == domain.lower[j] {
                active.push(ConstraintId::Lower(j));
            } else {
                active.push(ConstraintId::Upper(j));
            }
        }
        active.push(ConstraintId::Cut(0));
        vertices.push(LiftedVertex::new(
            corner.to_vec(),
            first_cut.evaluate(corner),
            active,
        ));
        Ok(())
    })??;
    Ok(EpigraphPoly {
        domain,
        minorants: vec![first_cut],
        vertices,
    })
}

impl<S: Scalar> EpigraphPoly<S> {
    pub fn domain(&self) -> &BoxDomain<S> {
        &self.domain
    }

    pub fn minorants(&self) -> &[AffineMinorant<S>] {
        &self.minorants
    }

    pub fn vertices(&self) -> &[LiftedVertex<S>] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// `g^k(x)`: the current underestimator, max over all minorants.
    pub fn underestimator_value(&self, x: &[S]) -> S {
        self.minorants
            .iter()
            .map(|m| m.evaluate(x))
            .fold(S::neg_infinity(), S::max)
    }

    fn degenerate(v: &LiftedVertex<S>, n: usize) -> bool {
        v.active_set.len() > n + 1
    }

    /// Intersects `t ≥ cut(x)` into the polyhedron, updating the vertex set.
    pub fn intersect_halfspace(&mut self, cut: AffineMinorant<S>) -> Result<(), PolyError> {
        let n = self.dim();
        if cut.dim() != n {
            return Err(PolyError::DimensionMismatch {
                expected: n,
                got: cut.dim(),
            });
        }
        let cut_id = ConstraintId::Cut(self.minorants.len());

        // Signed violation of the new halfspace: positive means strictly below
        // the cut plane (the vertex is removed).
        let tol = S::c(CLASSIFY_TOL);
        let mut violation: Vec<S> = Vec::with_capacity(self.vertices.len());
        let mut band: Vec<S> = Vec::with_capacity(self.vertices.len());
        let mut on: Vec<usize> = Vec::new();
        let mut removed: Vec<usize> = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            let phi = cut.evaluate(&v.point) - v.height;
            let bd = tol * (S::one() + v.height.abs());
            if phi > bd {
                removed.push(i);
            } else if phi >= -bd {
                on.push(i);
            }
            violation.push(phi);
            band.push(bd);
        }

        if removed.is_empty() {
            // Redundant (or merely touching) cut: vertex set is unchanged up
            // to active-set bookkeeping on the touched vertices.
            for &i in &on {
                self.vertices[i].active_set.push(cut_id);
                self.vertices[i].active_set.sort_unstable();
            }
            self.minorants.push(cut);
            return Ok(());
        }
        // A cut may remove every vertex (it dominates all previous minorants
        // on the whole box); the vertical-ray crossings over the box corners
        // below then rebuild the vertex set on the cut plane alone.
        let mut new_vertices: Vec<LiftedVertex<S>> = Vec::new();

        // Crossings of bounded edges between a kept and a removed vertex.
        // Adjacency: the shared tight constraints must pin down a line. The
        // shared count is checked without allocating; only actual neighbor
        // pairs (a handful per removed vertex) materialize their shared set.
        for &ir in &removed {
            let b = &self.vertices[ir];
            for (ik, a) in self.vertices.iter().enumerate() {
                if violation[ik] >= -band[ik] {
                    // Removed, or an "on" endpoint whose crossing is itself.
                    continue;
                }
                if shared_count(&a.active_set, &b.active_set) < n {
                    continue;
                }
                let shared = sorted_intersection(&a.active_set, &b.active_set);
                if (Self::degenerate(a, n) || Self::degenerate(b, n))
                    && self.constraint_rank(&shared) < n
                {
                    continue;
                }
                let phi_a = violation[ik];
                let phi_b = violation[ir];
                let lambda = phi_a / (phi_a - phi_b);
                let mut point: Vec<S> = a
                    .point
                    .iter()
                    .zip(&b.point)
                    .map(|(pa, pb)| *pa + lambda * (*pb - *pa))
                    .collect();
                let mut height = cut.evaluate(&point);
                // Interpolation compounds the parents' roundoff across
                // generations; the tight constraints are primary data, so
                // re-solve the defining system and keep that answer when it
                // confirms the interpolated location.
                if shared.len() == n {
                    let mut rows: Vec<Vec<S>> =
                        shared.iter().map(|&id| self.constraint_normal(id)).collect();
                    let mut rhs: Vec<S> = shared
                        .iter()
                        .map(|&id| constraint_rhs(&self.domain, &self.minorants, id))
                        .collect();
                    let mut cut_row = vec![S::zero(); n + 1];
                    for (c, gj) in cut_row.iter_mut().zip(&cut.gradient) {
                        *c = -*gj;
                    }
                    cut_row[n] = S::one();
                    rows.push(cut_row);
                    rhs.push(cut.offset);
                    if let Some(mut z) = solve_square(rows, rhs) {
                        let scale =
                            S::one() + z.iter().map(|v| v.abs()).fold(S::zero(), S::max);
                        let near = S::c(1e-6) * scale;
                        let close = z[..n]
                            .iter()
                            .zip(&point)
                            .all(|(zi, pi)| (*zi - *pi).abs() <= near)
                            && (z[n] - height).abs() <= near;
                        if close {
                            height = z[n];
                            z.truncate(n);
                            point = z;
                        }
                    }
                }
                let mut active = shared;
                active.push(cut_id);
                new_vertices.push(LiftedVertex::new(point, height, active));
            }
        }

        // Crossings of the unbounded vertical edges: those sit above box
        // corners, i.e. above removed vertices with n active facets.
        for &ir in &removed {
            let v = &self.vertices[ir];
            let facets: Vec<ConstraintId> = v
                .active_set
                .iter()
                .copied()
                .filter(|c| c.is_facet())
                .collect();
            if facets.len() < n {
                continue;
            }
            let height = cut.evaluate(&v.point);
            let mut active = facets;
            active.push(cut_id);
            new_vertices.push(LiftedVertex::new(v.point.clone(), height, active));
        }

        // Record the new tight constraint on the touched survivors.
        for &i in &on {
            self.vertices[i].active_set.push(cut_id);
            self.vertices[i].active_set.sort_unstable();
        }

        // Merge new vertices that (numerically) coincide with a survivor or
        // with each other. A survivor within merge distance of a point on the
        // cut plane must itself lie within `MERGE_TOL * ||(gradient, -1)||`
        // of that plane, so only survivors with that small a violation are
        // merge candidates; everything else is untouchable.
        let cut_scale = (cut
            .gradient
            .iter()
            .fold(S::one(), |acc, gj| acc + *gj * *gj))
        .sqrt();
        let near_plane = S::c(2.0 * MERGE_TOL) * cut_scale;
        let merge_candidates: Vec<usize> = (0..self.vertices.len())
            .filter(|&i| violation[i] <= band[i] && violation[i].abs() <= near_plane)
            .collect();
        let merge2 = S::c(MERGE_TOL * MERGE_TOL);
        let mut accepted: Vec<LiftedVertex<S>> = Vec::new();
        'next: for cand in new_vertices {
            for &i in &merge_candidates {
                let existing = &mut self.vertices[i];
                if existing.lifted_dist2(&cand) <= merge2 {
                    existing.active_set.extend_from_slice(&cand.active_set);
                    existing.active_set.sort_unstable();
                    existing.active_set.dedup();
                    continue 'next;
                }
            }
            for existing in accepted.iter_mut() {
                if existing.lifted_dist2(&cand) <= merge2 {
                    existing.active_set.extend_from_slice(&cand.active_set);
                    existing.active_set.sort_unstable();
                    existing.active_set.dedup();
                    continue 'next;
                }
            }
            accepted.push(cand);
        }

        // Drop the removed vertices in place (back to front so the recorded
        // indices stay valid) and append the genuinely new ones.
        for &i in removed.iter().rev() {
            self.vertices.swap_remove(i);
        }
        self.vertices.extend(accepted);
        self.minorants.push(cut);
        Ok(())
    }

    fn constraint_normal(&self, id: ConstraintId) -> Vec<S> {
        constraint_normal(self.dim(), &self.minorants, id)
    }

    fn constraint_rank(&self, ids: &[ConstraintId]) -> usize {
        let rows: Vec<Vec<S>> = ids.iter().map(|&id| self.constraint_normal(id)).collect();
        matrix_rank(rows)
    }

    /// JSON document per the export schema:
    /// `{n, box:{lower,upper}, minorants:[...], vertices:[{point,height}]}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.dim(),
            "box": { "lower": self.domain.lower, "upper": self.domain.upper },
            "minorants": self.minorants,
            "vertices": self.vertices.iter().map(|v| serde_json::json!({
                "point": v.point,
                "height": v.height,
            })).collect::<Vec<_>>(),
        })
    }
}

/// `|a ∩ b|` for sorted slices, without materializing the intersection.
fn shared_count(a: &[ConstraintId], b: &[ConstraintId]) -> usize {
    let mut count = 0;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

fn sorted_intersection(a: &[ConstraintId], b: &[ConstraintId]) -> Vec<ConstraintId> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Lifted normal of one constraint, written as `a·(x,t) ≥ b`.
fn constraint_normal<S: Scalar>(
    n: usize,
    minorants: &[AffineMinorant<S>],
    id: ConstraintId,
) -> Vec<S> {
    let mut a = vec![S::zero(); n + 1];
    match id {
        ConstraintId::Lower(j) => a[j] = S::one(),
        ConstraintId::Upper(j) => a[j] = -S::one(),
        ConstraintId::Cut(i) => {
            for (k, g) in minorants[i].gradient.iter().enumerate() {
                a[k] = -*g;
            }
            a[n] = S::one();
        }
    }
    a
}

fn constraint_rhs<S: Scalar>(domain: &BoxDomain<S>, minorants: &[AffineMinorant<S>], id: ConstraintId) -> S {
    match id {
        ConstraintId::Lower(j) => domain.lower()[j],
        ConstraintId::Upper(j) => -domain.upper()[j],
        ConstraintId::Cut(i) => minorants[i].offset,
    }
}

/// Rank of a small set of row vectors via Gaussian elimination.
#[allow(clippy::needless_range_loop)] // index form mirrors the textbook elimination
fn matrix_rank<S: Scalar>(mut rows: Vec<Vec<S>>) -> usize {
    let pivot_tol = S::c(PIVOT_TOL);
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..rows.len()).max_by(|&a, &b| {
            rows[a][col]
                .abs()
                .partial_cmp(&rows[b][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        }) else {
            break;
        };
        if rows[p][col].abs() <= pivot_tol {
            continue;
        }
        rows.swap(rank, p);
        for r in rank + 1..rows.len() {
            let factor = rows[r][col] / rows[rank][col];
            for c in col..cols {
                let sub = factor * rows[rank][c];
                rows[r][c] = rows[r][c] - sub;
            }
        }
        rank += 1;
    }
    rank
}

/// Solves a square system `A z = b` in place; `None` if numerically singular.
#[allow(clippy::needless_range_loop)] // index form mirrors the textbook elimination
fn solve_square<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Option<Vec<S>> {
    let n = b.len();
    let pivot_tol = S::c(PIVOT_TOL);
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[p][col].abs() <= pivot_tol {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            for c in col..n {
                let sub = factor * a[col][c];
                a[r][c] = a[r][c] - sub;
            }
            let sub = factor * b[col];
            b[r] = b[r] - sub;
        }
    }
    let mut z = vec![S::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc = acc - a[row][c] * z[c];
        }
        z[row] = acc / a[row][row];
    }
    Some(z)
}

/// Brute-force vertex enumeration over all `(n+1)`-subsets of constraints.
///
/// Intended as the independent oracle for the incremental engine on small
/// instances (n ≤ 3, a dozen constraints). Singular subsystems are skipped.
pub fn enumerate_vertices_bruteforce<S: Scalar>(
    domain: &BoxDomain<S>,
    minorants: &[AffineMinorant<S>],
) -> Result<Vec<LiftedVertex<S>>, PolyError> {
    let n = domain.dim();
    for m in minorants {
        if m.dim() != n {
            return Err(PolyError::DimensionMismatch {
                expected: n,
                got: m.dim(),
            });
        }
    }
    let mut ids: Vec<ConstraintId> = Vec::new();
    for j in 0..n {
        ids.push(ConstraintId::Lower(j));
        ids.push(ConstraintId::Upper(j));
    }
    for i in 0..minorants.len() {
        ids.push(ConstraintId::Cut(i));
    }
    if ids.len() < n + 1 {
        return Err(PolyError::InternalConsistency(
            "fewer than n+1 constraints".into(),
        ));
    }

    let feas_tol = S::c(1e-8);
    let tight_tol = S::c(1e-7);
    let merge2 = S::c(MERGE_TOL * MERGE_TOL);
    let mut found: Vec<LiftedVertex<S>> = Vec::new();

    let mut subset = vec![0usize; n + 1];
    for (slot, item) in subset.iter_mut().enumerate() {
        *item = slot;
    }
    loop {
        let chosen: Vec<ConstraintId> = subset.iter().map(|&i| ids[i]).collect();
        let rows: Vec<Vec<S>> = chosen
            .iter()
            .map(|&id| constraint_normal(n, minorants, id))
            .collect();
        let rhs: Vec<S> = chosen
            .iter()
            .map(|&id| constraint_rhs(domain, minorants, id))
            .collect();
        if let Some(z) = solve_square(rows, rhs) {
            let (point, height) = (&z[..n], z[n]);
            let scale = S::one()
                + z.iter()
                    .map(|v| v.abs())
                    .fold(S::zero(), S::max);
            let feasible = ids.iter().all(|&id| {
                let a = constraint_normal(n, minorants, id);
                let b = constraint_rhs(domain, minorants, id);
                let lhs: S = a.iter().zip(&z).map(|(ai, zi)| *ai * *zi).sum();
                lhs >= b - feas_tol * scale
            });
            if feasible {
                let active: Vec<ConstraintId> = ids
                    .iter()
                    .copied()
                    .filter(|&id| {
                        let a = constraint_normal(n, minorants, id);
                        let b = constraint_rhs(domain, minorants, id);
                        let lhs: S = a.iter().zip(&z).map(|(ai, zi)| *ai * *zi).sum();
                        (lhs - b).abs() <= tight_tol * scale
                    })
                    .collect();
                let cand = LiftedVertex::new(point.to_vec(), height, active);
                if !found.iter().any(|v| v.lifted_dist2(&cand) <= merge2) {
                    found.push(cand);
                }
            }
        }
        // Advance to the next (n+1)-subset in lexicographic order.
        let mut slot = n + 1;
        loop {
            if slot == 0 {
                return finish_bruteforce(found);
            }
            slot -= 1;
            if subset[slot] + (n + 1 - slot) < ids.len() {
                subset[slot] += 1;
                for s in slot + 1..n + 1 {
                    subset[s] = subset[s - 1] + 1;
                }
                break;
            }
        }
    }
}

fn finish_bruteforce<S: Scalar>(
    mut found: Vec<LiftedVertex<S>>,
) -> Result<Vec<LiftedVertex<S>>, PolyError> {
    found.sort_by(|a, b| a.lex_key_cmp(b));
    Ok(found)
}

/// Max of a convex function over the box, attained at one of the corners.
pub fn max_over_box_vertices<S: Scalar, E>(
    domain: &BoxDomain<S>,
    mut f: impl FnMut(&[S]) -> Result<S, E>,
) -> Result<Result<S, E>, PolyError> {
    let mut best = S::neg_infinity();
    let run = domain.for_each_corner(|corner| -> Result<(), E> {
        best = best.max(f(corner)?);
        Ok(())
    })?;
    Ok(run.map(|()| best))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minorant(gradient: Vec<f64>, offset: f64) -> AffineMinorant<f64> {
        let n = gradient.len();
        AffineMinorant {
            gradient,
            offset,
            anchor: vec![0.0; n],
        }
    }

    fn sorted_points(poly: &[LiftedVertex<f64>]) -> Vec<(Vec<f64>, f64)> {
        let mut v: Vec<_> = poly.iter().map(|v| (v.point.clone(), v.height)).collect();
        v.sort_by(|a, b| {
            lex_cmp(&a.0, &b.0).then(a.1.partial_cmp(&b.1).unwrap())
        });
        v
    }

    #[test]
    fn init_interval_zero_cut() {
        let domain = BoxDomain::new(vec![-1.0], vec![1.0]).unwrap();
        let poly = init_epigraph(domain, minorant(vec![0.0], 0.0)).unwrap();
        let pts = sorted_points(poly.vertices());
        assert_eq!(pts, vec![(vec![-1.0], 0.0), (vec![1.0], 0.0)]);
    }

    #[test]
    fn init_example4_cut_at_interior_point() {
        // g = (x1+x2)^2/4 cut at (0.5, 0.5): s(x) = 0.25 + 0.5(x1-0.5) + 0.5(x2-0.5)
        let domain: BoxDomain<f64> = BoxDomain::new(vec![-2.0, -3.0], vec![3.0, 4.0]).unwrap();
        let cut = AffineMinorant::from_tangent(vec![0.5, 0.5], 0.25, vec![0.5, 0.5]);
        let poly = init_epigraph(domain, cut).unwrap();
        assert_eq!(poly.vertices().len(), 4);
        let corner = poly
            .vertices()
            .iter()
            .find(|v| v.point == vec![-2.0, -3.0])
            .unwrap();
        assert!((corner.height - (-2.75)).abs() < 1e-12);
    }

    #[test]
    fn init_cube_constant_cut() {
        let domain = BoxDomain::uniform(3, 0.0, 1.0).unwrap();
        let poly = init_epigraph(domain, minorant(vec![0.0; 3], 0.0)).unwrap();
        assert_eq!(poly.vertices().len(), 8);
        assert!(poly.vertices().iter().all(|v| v.height == 0.0));
    }

    #[test]
    fn intersect_square_diagonal_cut() {
        let domain = BoxDomain::uniform(2, -1.0, 1.0).unwrap();
        let mut poly = init_epigraph(domain, minorant(vec![0.0, 0.0], 0.0)).unwrap();
        poly.intersect_halfspace(minorant(vec![1.0, 1.0], -1.0))
            .unwrap();
        let pts = sorted_points(poly.vertices());
        let expected = vec![
            (vec![-1.0, -1.0], 0.0),
            (vec![-1.0, 1.0], 0.0),
            (vec![0.0, 1.0], 0.0),
            (vec![1.0, -1.0], 0.0),
            (vec![1.0, 0.0], 0.0),
            (vec![1.0, 1.0], 1.0),
        ];
        assert_eq!(pts.len(), expected.len());
        for (got, want) in pts.iter().zip(&expected) {
            for (a, b) in got.0.iter().zip(&want.0) {
                assert!((a - b).abs() < 1e-9);
            }
            assert!((got.1 - want.1).abs() < 1e-9);
        }
    }

    #[test]
    fn intersect_interval_slanted_cut() {
        let domain = BoxDomain::new(vec![-1.0], vec![1.0]).unwrap();
        let mut poly = init_epigraph(domain, minorant(vec![0.0], 0.0)).unwrap();
        poly.intersect_halfspace(minorant(vec![2.0], -1.0)).unwrap();
        let pts = sorted_points(poly.vertices());
        assert_eq!(pts.len(), 3);
        assert!((pts[0].0[0] + 1.0).abs() < 1e-12 && pts[0].1.abs() < 1e-12);
        assert!((pts[1].0[0] - 0.5).abs() < 1e-12 && pts[1].1.abs() < 1e-12);
        assert!((pts[2].0[0] - 1.0).abs() < 1e-12 && (pts[2].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dominated_cut_keeps_vertices() {
        let domain = BoxDomain::new(vec![-1.0], vec![1.0]).unwrap();
        let mut poly = init_epigraph(domain, minorant(vec![0.0], 0.0)).unwrap();
        poly.intersect_halfspace(minorant(vec![0.0], -10.0)).unwrap();
        assert_eq!(poly.vertices().len(), 2);
        assert_eq!(poly.minorants().len(), 2);
    }

    #[test]
    fn bruteforce_matches_hand_instances() {
        let domain = BoxDomain::uniform(2, -1.0, 1.0).unwrap();
        let cuts = vec![minorant(vec![0.0, 0.0], 0.0), minorant(vec![1.0, 1.0], -1.0)];
        let verts = enumerate_vertices_bruteforce(&domain, &cuts).unwrap();
        assert_eq!(verts.len(), 6);

        let domain = BoxDomain::new(vec![-1.0], vec![1.0]).unwrap();
        let verts =
            enumerate_vertices_bruteforce(&domain, &[minorant(vec![0.0], 0.0)]).unwrap();
        assert_eq!(sorted_points(&verts), vec![(vec![-1.0], 0.0), (vec![1.0], 0.0)]);

        // max(x, 1-x) over [0,1]: kink at 0.5.
        let domain = BoxDomain::new(vec![0.0], vec![1.0]).unwrap();
        let cuts = vec![minorant(vec![1.0], 0.0), minorant(vec![-1.0], 1.0)];
        let verts = enumerate_vertices_bruteforce(&domain, &cuts).unwrap();
        let pts = sorted_points(&verts);
        assert_eq!(pts.len(), 3);
        assert!((pts[1].0[0] - 0.5).abs() < 1e-12 && (pts[1].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn max_over_corners() {
        let domain = BoxDomain::new(vec![-2.0, -3.0], vec![3.0, 4.0]).unwrap();
        let g = |x: &[f64]| -> Result<f64, ()> { Ok(0.25 * (x[0] + x[1]).powi(2)) };
        let m = max_over_box_vertices(&domain, g).unwrap().unwrap();
        assert!((m - 12.25).abs() < 1e-12);

        let domain = BoxDomain::new(vec![-1.0], vec![1.0]).unwrap();
        let m = max_over_box_vertices(&domain, |_: &[f64]| -> Result<f64, ()> { Ok(5.0) })
            .unwrap()
            .unwrap();
        assert_eq!(m, 5.0);
        let m = max_over_box_vertices(&domain, |x: &[f64]| -> Result<f64, ()> {
            Ok(x[0] * x[0])
        })
        .unwrap()
        .unwrap();
        assert_eq!(m, 1.0);
    }

    #[test]
    fn corner_guard_rejects_large_dimension() {
        let domain = BoxDomain::uniform(25, 0.0, 1.0).unwrap();
        let err = max_over_box_vertices(&domain, |_: &[f64]| -> Result<f64, ()> { Ok(0.0) });
        assert!(matches!(err, Err(PolyError::TooManyCorners(25))));
    }

    #[test]
    fn invalid_box_rejected() {
        assert!(BoxDomain::new(vec![1.0], vec![1.0]).is_err());
        assert!(BoxDomain::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(BoxDomain::<f64>::new(vec![], vec![]).is_err());
    }

    #[test]
    fn dimension_mismatch_on_init() {
        let domain = BoxDomain::uniform(2, 0.0, 1.0).unwrap();
        assert!(init_epigraph(domain, minorant(vec![0.0], 0.0)).is_err());
    }
}
