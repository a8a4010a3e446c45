//! Convex-function oracles: evaluation plus a deterministic subgradient.
//!
//! The cutting loops need exactly one property from a subgradient `c(x̄)`:
//! the minorant inequality `g(x) ≥ g(x̄) + c(x̄)·(x - x̄)`. Where the
//! subdifferential is not a singleton, the kink rule below makes the choice
//! deterministic: for a max expression, take the subgradient of the
//! lowest-index piece whose value is within `1e-12·(1+|max|)` of the max;
//! for `|u|` at `u = 0`, take 0.

pub mod registry;

use std::sync::Arc;

use thiserror::Error;

use crate::poly_core::{AffineMinorant, BoxDomain};
use crate::scalar::Scalar;

pub use registry::{
    build_example, build_from_spec, DcProblem, ExampleId, KnownOptimum, ProblemSpec, RegistryError,
};

#[derive(Debug, Error, Clone)]
pub enum OracleError {
    #[error("oracle domain violation at {point:?}: {reason}")]
    Domain { point: Vec<f64>, reason: String },
    #[error("dimension mismatch: oracle expects {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

impl OracleError {
    pub fn domain<S: Scalar>(x: &[S], reason: impl Into<String>) -> Self {
        OracleError::Domain {
            point: x.iter().map(|v| v.to_f64_lossy()).collect(),
            reason: reason.into(),
        }
    }
}

/// Evaluation + deterministic subgradient of a convex function on a box.
pub trait ConvexOracle<S: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[S]) -> Result<S, OracleError>;
    fn subgrad(&self, x: &[S]) -> Result<Vec<S>, OracleError>;
    fn domain_note(&self) -> Option<&str> {
        None
    }
}

type ValGradFn<S> = dyn Fn(&[S]) -> Result<(S, Vec<S>), OracleError> + Send + Sync;

/// Oracle backed by a single value-plus-gradient closure, shared between
/// `eval` and `subgrad` so the two can never disagree.
#[derive(Clone)]
pub struct FnOracle<S: Scalar> {
    dim: usize,
    note: Option<String>,
    val_grad: Arc<ValGradFn<S>>,
}

impl<S: Scalar> FnOracle<S> {
    pub fn new(
        dim: usize,
        val_grad: impl Fn(&[S]) -> Result<(S, Vec<S>), OracleError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            note: None,
            val_grad: Arc::new(val_grad),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// The zero function, handy as an `h ≡ 0` placeholder.
    pub fn zero(dim: usize) -> Self {
        Self::new(dim, move |x| Ok((S::zero(), vec![S::zero(); x.len()])))
    }

    fn check_dim(&self, x: &[S]) -> Result<(), OracleError> {
        if x.len() != self.dim {
            return Err(OracleError::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

impl<S: Scalar> ConvexOracle<S> for FnOracle<S> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[S]) -> Result<S, OracleError> {
        self.check_dim(x)?;
        Ok((self.val_grad)(x)?.0)
    }

    fn subgrad(&self, x: &[S]) -> Result<Vec<S>, OracleError> {
        self.check_dim(x)?;
        Ok((self.val_grad)(x)?.1)
    }

    fn domain_note(&self) -> Option<&str> {
        self.note.as_deref()
    }
}

/// The affine minorant `s(x) = g(x̄) + c(x̄)·(x - x̄)` anchored at `x̄`.
pub fn supporting_cut<S: Scalar>(
    g: &dyn ConvexOracle<S>,
    x_bar: &[S],
) -> Result<AffineMinorant<S>, OracleError> {
    let value = g.eval(x_bar)?;
    let gradient = g.subgrad(x_bar)?;
    Ok(AffineMinorant::from_tangent(x_bar.to_vec(), value, gradient))
}

/// Numerical check of a subgradient at one point.
#[derive(Debug, Clone)]
pub struct SubgradReport<S: Scalar> {
    /// Worst violation seen: gradient mismatch at a smooth point, or slack of
    /// the subgradient inequality on the random samples (positive = violated).
    pub max_violation: S,
    pub is_smooth_point: bool,
}

/// Checks the returned subgradient against central finite differences (when
/// the point looks smooth) and the subgradient inequality on 100 random box
/// samples. Violations are data, not errors.
pub fn validate_subgradient<S: Scalar>(
    oracle: &dyn ConvexOracle<S>,
    domain: &BoxDomain<S>,
    x: &[S],
    step: S,
    seed: u64,
) -> Result<SubgradReport<S>, OracleError> {
    let n = oracle.dim();
    let fx = oracle.eval(x)?;
    let c = oracle.subgrad(x)?;
    let mut max_violation = S::zero();

    // One-sided differences per coordinate; the point counts as smooth when
    // they agree within 10·step in every coordinate.
    let mut smooth = true;
    let mut central = vec![S::zero(); n];
    let mut xp = x.to_vec();
    for j in 0..n {
        let xj = x[j];
        xp[j] = xj + step;
        let fp = oracle.eval(&xp)?;
        xp[j] = xj - step;
        let fm = oracle.eval(&xp)?;
        xp[j] = xj;
        let dplus = (fp - fx) / step;
        let dminus = (fx - fm) / step;
        if (dplus - dminus).abs() > S::c(10.0) * step {
            smooth = false;
        }
        central[j] = (fp - fm) / (step + step);
    }
    if smooth {
        for j in 0..n {
            max_violation = max_violation.max((central[j] - c[j]).abs());
        }
    }

    let mut rng = SplitMix64::new(seed);
    let mut y = vec![S::zero(); n];
    for _ in 0..100 {
        rng.fill_box_point(domain, &mut y);
        let fy = oracle.eval(&y)?;
        let lin: S = c.iter().zip(y.iter().zip(x)).map(|(cj, (yj, xj))| *cj * (*yj - *xj)).sum();
        // Positive slack means the minorant property failed at y.
        let violation = fx + lin - fy;
        max_violation = max_violation.max(violation);
    }

    Ok(SubgradReport {
        max_violation,
        is_smooth_point: smooth,
    })
}

/// Small deterministic generator for diagnostic sampling (keeps the library
/// free of an RNG dependency).
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_unit<S: Scalar>(&mut self) -> S {
        S::c((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
    }

    pub fn fill_box_point<S: Scalar>(&mut self, domain: &BoxDomain<S>, out: &mut [S]) {
        for (j, o) in out.iter_mut().enumerate() {
            let t: S = self.next_unit();
            *o = domain.lower()[j] + t * (domain.upper()[j] - domain.lower()[j]);
        }
    }
}

// --- building blocks for the registry's hand-coded subgradients ---

/// Value and derivative of |u|, derivative 0 at the kink.
pub(crate) fn abs_vg<S: Scalar>(u: S) -> (S, S) {
    if u > S::zero() {
        (u, S::one())
    } else if u < S::zero() {
        (-u, -S::one())
    } else {
        (S::zero(), S::zero())
    }
}

/// Value and derivative of sqrt(|u|), derivative 0 at the kink.
pub(crate) fn sqrt_abs_vg<S: Scalar>(u: S) -> (S, S) {
    if u == S::zero() {
        return (S::zero(), S::zero());
    }
    let r = u.abs().sqrt();
    let sign = if u > S::zero() { S::one() } else { -S::one() };
    (r, sign / (S::c(2.0) * r))
}

/// Max of pieces with the lowest-index-active tie rule; the payload of the
/// selected piece (usually its gradient) is returned alongside the max value.
pub(crate) fn max_vg<S: Scalar, P>(pieces: Vec<(S, P)>) -> (S, P) {
    let top = pieces
        .iter()
        .map(|(v, _)| *v)
        .fold(S::neg_infinity(), S::max);
    let tol = S::c(1e-12) * (S::one() + top.abs());
    for (v, payload) in pieces {
        if v >= top - tol {
            return (top, payload);
        }
    }
    unreachable!("max over a nonempty piece list always has an active piece")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_oracle() -> FnOracle<f64> {
        FnOracle::new(1, |x: &[f64]| Ok((x[0] * x[0], vec![2.0 * x[0]])))
    }

    fn abs_oracle() -> FnOracle<f64> {
        FnOracle::new(1, |x: &[f64]| {
            let (v, d) = abs_vg(x[0]);
            Ok((v, vec![d]))
        })
    }

    #[test]
    fn supporting_cut_of_parabola() {
        let g = square_oracle();
        let cut = supporting_cut(&g, &[1.0]).unwrap();
        // s(x) = 2x - 1
        assert_eq!(cut.gradient, vec![2.0]);
        assert_eq!(cut.offset, -1.0);
        assert_eq!(cut.evaluate(&[1.0]), 1.0);
    }

    #[test]
    fn supporting_cut_at_abs_kink_is_zero() {
        let g = abs_oracle();
        let cut = supporting_cut(&g, &[0.0]).unwrap();
        assert_eq!(cut.gradient, vec![0.0]);
        assert_eq!(cut.offset, 0.0);
    }

    #[test]
    fn supporting_cut_example4_at_corner() {
        let g = FnOracle::new(2, |x: &[f64]| {
            let s = x[0] + x[1];
            Ok((0.25 * s * s, vec![0.5 * s, 0.5 * s]))
        });
        let cut = supporting_cut(&g, &[3.0, 4.0]).unwrap();
        assert_eq!(cut.gradient, vec![3.5, 3.5]);
        assert!((cut.offset - (-12.25)).abs() < 1e-12);
    }

    #[test]
    fn validate_smooth_point() {
        let g = square_oracle();
        let domain = BoxDomain::new(vec![-1.0], vec![1.0]).unwrap();
        let rep = validate_subgradient(&g, &domain, &[0.3], 1e-6, 7).unwrap();
        assert!(rep.is_smooth_point);
        assert!(rep.max_violation <= 1e-8, "violation {}", rep.max_violation);
    }

    #[test]
    fn validate_kink_point() {
        let g = abs_oracle();
        let domain = BoxDomain::new(vec![-1.0], vec![1.0]).unwrap();
        let rep = validate_subgradient(&g, &domain, &[0.0], 1e-6, 7).unwrap();
        assert!(!rep.is_smooth_point);
        assert!(rep.max_violation <= 0.0 + 1e-12);
    }

    #[test]
    fn subgrad_deterministic_at_kink() {
        let g = abs_oracle();
        let a = g.subgrad(&[0.0]).unwrap();
        let b = g.subgrad(&[0.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch_reported() {
        let g = square_oracle();
        assert!(matches!(
            g.eval(&[1.0, 2.0]),
            Err(OracleError::Dimension { expected: 1, got: 2 })
        ));
    }
}
