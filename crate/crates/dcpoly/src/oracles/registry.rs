//! The eight benchmark DC decompositions, addressable as `ex1` … `ex8` with
//! optional parameters (`ex6:n=3,m=2`, `ex8:n=5`).

use std::fmt;

use thiserror::Error;

use super::{abs_vg, max_vg, sqrt_abs_vg, ConvexOracle, FnOracle, OracleError};
use crate::poly_core::{BoxDomain, PolyError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("unknown example id '{0}'; valid ids are ex1..ex8")]
    UnknownExample(String),
    #[error("invalid parameters for {id}: {reason}; valid combinations: {valid}")]
    InvalidParams {
        id: ExampleId,
        reason: String,
        valid: &'static str,
    },
    #[error("malformed problem spec '{0}'; expected e.g. 'ex4' or 'ex6:n=3,m=2'")]
    MalformedSpec(String),
    #[error("inconsistent problem data: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleId {
    Ex1,
    Ex2,
    Ex3,
    Ex4,
    Ex5,
    Ex6,
    Ex7,
    Ex8,
}

impl ExampleId {
    pub const ALL: [ExampleId; 8] = [
        ExampleId::Ex1,
        ExampleId::Ex2,
        ExampleId::Ex3,
        ExampleId::Ex4,
        ExampleId::Ex5,
        ExampleId::Ex6,
        ExampleId::Ex7,
        ExampleId::Ex8,
    ];

    pub fn parse(s: &str) -> Result<Self, RegistryError> {
        match s {
            "ex1" => Ok(ExampleId::Ex1),
            "ex2" => Ok(ExampleId::Ex2),
            "ex3" => Ok(ExampleId::Ex3),
            "ex4" => Ok(ExampleId::Ex4),
            "ex5" => Ok(ExampleId::Ex5),
            "ex6" => Ok(ExampleId::Ex6),
            "ex7" => Ok(ExampleId::Ex7),
            "ex8" => Ok(ExampleId::Ex8),
            other => Err(RegistryError::UnknownExample(other.to_string())),
        }
    }

    pub fn default_dim(self) -> usize {
        match self {
            ExampleId::Ex1 => 1,
            ExampleId::Ex2 | ExampleId::Ex3 | ExampleId::Ex4 | ExampleId::Ex5 => 2,
            ExampleId::Ex6 => 2,
            ExampleId::Ex7 => 4,
            ExampleId::Ex8 => 2,
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExampleId::Ex1 => "ex1",
            ExampleId::Ex2 => "ex2",
            ExampleId::Ex3 => "ex3",
            ExampleId::Ex4 => "ex4",
            ExampleId::Ex5 => "ex5",
            ExampleId::Ex6 => "ex6",
            ExampleId::Ex7 => "ex7",
            ExampleId::Ex8 => "ex8",
        };
        f.write_str(s)
    }
}

/// Registry address of one problem instance: id plus its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProblemSpec {
    pub id: ExampleId,
    pub n: usize,
    /// Number of well terms; only meaningful for ex6.
    pub m: Option<usize>,
}

impl ProblemSpec {
    pub fn new(id: ExampleId) -> Self {
        let m = if id == ExampleId::Ex6 { Some(2) } else { None };
        Self {
            id,
            n: id.default_dim(),
            m,
        }
    }

    /// Parses the CLI syntax: `ex4`, `ex6:n=3,m=2`, `ex8:n=5`.
    pub fn parse(text: &str) -> Result<Self, RegistryError> {
        let (head, tail) = match text.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (text, None),
        };
        let mut spec = Self::new(ExampleId::parse(head.trim())?);
        if let Some(params) = tail {
            for kv in params.split(',') {
                let (key, value) = kv
                    .split_once('=')
                    .ok_or_else(|| RegistryError::MalformedSpec(text.to_string()))?;
                let value: usize = value
                    .trim()
                    .parse()
                    .map_err(|_| RegistryError::MalformedSpec(text.to_string()))?;
                match key.trim() {
                    "n" => spec.n = value,
                    "m" => spec.m = Some(value),
                    _ => return Err(RegistryError::MalformedSpec(text.to_string())),
                }
            }
        }
        Ok(spec)
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.id, self.m) {
            (ExampleId::Ex6, Some(m)) => write!(f, "ex6:n={},m={}", self.n, m),
            _ if self.n != self.id.default_dim() => write!(f, "{}:n={}", self.id, self.n),
            _ => write!(f, "{}", self.id),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnownOptimum<S: Scalar> {
    pub x_star: Vec<S>,
    pub z_star: S,
}

/// A DC instance: `min over the box of g(x) - h(x)`.
pub struct DcProblem<S: Scalar> {
    pub name: String,
    pub g: Box<dyn ConvexOracle<S>>,
    pub h: Box<dyn ConvexOracle<S>>,
    pub domain: BoxDomain<S>,
    pub known_optimum: Option<KnownOptimum<S>>,
}

impl<S: Scalar> DcProblem<S> {
    pub fn new(
        name: impl Into<String>,
        g: Box<dyn ConvexOracle<S>>,
        h: Box<dyn ConvexOracle<S>>,
        domain: BoxDomain<S>,
        known_optimum: Option<KnownOptimum<S>>,
    ) -> Result<Self, RegistryError> {
        let n = domain.dim();
        if g.dim() != n || h.dim() != n {
            return Err(RegistryError::Inconsistent(format!(
                "oracle dimensions ({}, {}) disagree with box dimension {n}",
                g.dim(),
                h.dim()
            )));
        }
        if let Some(opt) = &known_optimum {
            if opt.x_star.len() != n {
                return Err(RegistryError::Inconsistent(
                    "known optimum point has wrong dimension".into(),
                ));
            }
            let f = g.eval(&opt.x_star)? - h.eval(&opt.x_star)?;
            if (f - opt.z_star).abs() > S::c(1e-6) {
                return Err(RegistryError::Inconsistent(format!(
                    "g(x*) - h(x*) = {f} disagrees with recorded z* = {}",
                    opt.z_star
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            g,
            h,
            domain,
            known_optimum,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn objective(&self, x: &[S]) -> Result<S, OracleError> {
        Ok(self.g.eval(x)? - self.h.eval(x)?)
    }
}

pub fn build_from_spec<S: Scalar>(spec: &ProblemSpec) -> Result<DcProblem<S>, RegistryError> {
    build_example(spec.id, spec.n, spec.m)
}

/// Instantiates one of the eight benchmark problems.
pub fn build_example<S: Scalar>(
    id: ExampleId,
    n: usize,
    m: Option<usize>,
) -> Result<DcProblem<S>, RegistryError> {
    let check_dim = |valid: &'static [usize], valid_text: &'static str| {
        if valid.contains(&n) {
            Ok(())
        } else {
            Err(RegistryError::InvalidParams {
                id,
                reason: format!("n = {n} not supported"),
                valid: valid_text,
            })
        }
    };
    if m.is_some() && id != ExampleId::Ex6 {
        return Err(RegistryError::InvalidParams {
            id,
            reason: "parameter m only applies to ex6".into(),
            valid: "ex1; ex2..ex5; ex6:n∈{2,3},m∈{2,3}; ex7:n=4; ex8:n∈{2,3,4,5}",
        });
    }
    match id {
        ExampleId::Ex1 => {
            check_dim(&[1], "ex1: n=1")?;
            example1()
        }
        ExampleId::Ex2 => {
            check_dim(&[2], "ex2: n=2")?;
            example2()
        }
        ExampleId::Ex3 => {
            check_dim(&[2], "ex3: n=2")?;
            example3()
        }
        ExampleId::Ex4 => {
            check_dim(&[2], "ex4: n=2")?;
            example4()
        }
        ExampleId::Ex5 => {
            check_dim(&[2], "ex5: n=2")?;
            example5()
        }
        ExampleId::Ex6 => {
            check_dim(&[2, 3], "ex6: n∈{2,3}, m∈{2,3}")?;
            let m = m.unwrap_or(2);
            if !(m == 2 || m == 3) {
                return Err(RegistryError::InvalidParams {
                    id,
                    reason: format!("m = {m} not supported"),
                    valid: "ex6: n∈{2,3}, m∈{2,3}",
                });
            }
            example6(n, m)
        }
        ExampleId::Ex7 => {
            check_dim(&[4], "ex7: n=4")?;
            example7()
        }
        ExampleId::Ex8 => {
            check_dim(&[2, 3, 4, 5], "ex8: n∈{2,3,4,5}")?;
            example8(n)
        }
    }
}

/// G(x) = 6x² - 12x + 8 + max{0, -x³}, the convexifying term of ex1.
fn ex1_base<S: Scalar>(x: S) -> (S, S) {
    let v = S::c(6.0) * x * x - S::c(12.0) * x + S::c(8.0);
    let d = S::c(12.0) * x - S::c(12.0);
    let cube = x * x * x;
    let (mv, md) = max_vg(vec![
        (S::zero(), S::zero()),
        (-cube, -S::c(3.0) * x * x),
    ]);
    (v + mv, d + md)
}

fn example1<S: Scalar>() -> Result<DcProblem<S>, RegistryError> {
    let g = FnOracle::new(1, |x: &[S]| {
        let xi = x[0];
        if xi <= S::zero() {
            return Err(OracleError::domain(x, "log requires x > 0"));
        }
        let (gv, gd) = ex1_base(xi);
        Ok((gv - xi.ln(), vec![gd - xi.recip()]))
    })
    .with_note("requires x1 > 0");
    let h = FnOracle::new(1, |x: &[S]| {
        let xi = x[0];
        let (bv, bd) = ex1_base(xi);
        let (s3, d3) = sqrt_abs_vg(S::c(3.0) - xi);
        let (s1, d1) = sqrt_abs_vg(S::one() - xi);
        let cube = xi * xi * xi;
        let (p3v, p3d) = max_vg(vec![(S::zero(), S::zero()), (cube, S::c(3.0) * xi * xi)]);
        let (v, d) = max_vg(vec![
            (bv - s3, bd + d3),
            (bv - s1, bd + d1),
            (p3v, p3d),
        ]);
        Ok((v, vec![d]))
    });
    DcProblem::new(
        "ex1",
        Box::new(g),
        Box::new(h),
        BoxDomain::new(vec![S::one()], vec![S::c(3.0)])?,
        Some(KnownOptimum {
            x_star: vec![S::c(3.0)],
            z_star: -S::one() - S::c(3.0).ln(),
        }),
    )
}

fn example2<S: Scalar>() -> Result<DcProblem<S>, RegistryError> {
    let g = FnOracle::new(2, |x: &[S]| {
        let v = S::c(5.0) * (x[0] * x[0] + x[1] * x[1]);
        Ok((v, vec![S::c(10.0) * x[0], S::c(10.0) * x[1]]))
    });
    let h = FnOracle::new(2, |x: &[S]| {
        let (a, da) = abs_vg(x[0] - x[1]);
        let u = S::c(3.0) * x[0] + S::c(2.0) * x[1] + a;
        let quad = S::c(5.0) * (x[0] * x[0] + x[1] * x[1]);
        let quad_grad = [S::c(10.0) * x[0], S::c(10.0) * x[1]];
        if u <= S::c(1e-30) {
            // Only at the origin corner; 0 is a valid subgradient there.
            return Ok((quad, quad_grad.to_vec()));
        }
        let r = u.sqrt();
        let factor = r.cos() / (S::c(2.0) * r);
        let du = [S::c(3.0) + da, S::c(2.0) - da];
        Ok((
            r.sin() + quad,
            vec![factor * du[0] + quad_grad[0], factor * du[1] + quad_grad[1]],
        ))
    });
    // f = -sin(sqrt(5x)) along the diagonal reaches -1 at x = pi^2/20.
    let xs = S::c(std::f64::consts::PI * std::f64::consts::PI / 20.0);
    DcProblem::new(
        "ex2",
        Box::new(g),
        Box::new(h),
        BoxDomain::uniform(2, S::zero(), S::c(5.0))?,
        Some(KnownOptimum {
            x_star: vec![xs, xs],
            z_star: -S::one(),
        }),
    )
}

fn example3<S: Scalar>() -> Result<DcProblem<S>, RegistryError> {
    let g = FnOracle::new(2, |x: &[S]| {
        let p = x[0] * x[0] + S::c(0.09) * x[0];
        let q = x[1] * x[1] + S::c(0.1) * x[1];
        let v = p * q + S::c(7.5) * (x[0] * x[0] + x[1] * x[1]);
        Ok((
            v,
            vec![
                (S::c(2.0) * x[0] + S::c(0.09)) * q + S::c(15.0) * x[0],
                p * (S::c(2.0) * x[1] + S::c(0.1)) + S::c(15.0) * x[1],
            ],
        ))
    });
    let h = scaled_norm2_oracle(2, S::c(7.5));
    // Separable product: min is q1(-2) * q2(-0.05) = 3.82 * (-0.0025).
    DcProblem::new(
        "ex3",
        Box::new(g),
        Box::new(h),
        BoxDomain::uniform(2, S::c(-2.0), S::one())?,
        Some(KnownOptimum {
            x_star: vec![S::c(-2.0), S::c(-0.05)],
            z_star: S::c(-0.00955),
        }),
    )
}

fn example4<S: Scalar>() -> Result<DcProblem<S>, RegistryError> {
    let g = FnOracle::new(2, |x: &[S]| {
        let s = x[0] + x[1];
        let half = S::c(0.5) * s;
        Ok((S::c(0.25) * s * s, vec![half, half]))
    });
    let h = FnOracle::new(2, |x: &[S]| {
        let d = x[0] - x[1];
        let half = S::c(0.5) * d;
        Ok((S::c(0.25) * d * d, vec![half, -half]))
    });
    DcProblem::new(
        "ex4",
        Box::new(g),
        Box::new(h),
        BoxDomain::new(vec![S::c(-2.0), S::c(-3.0)], vec![S::c(3.0), S::c(4.0)])?,
        Some(KnownOptimum {
            x_star: vec![S::c(3.0), S::c(-3.0)],
            z_star: S::c(-9.0),
        }),
    )
}

fn example5<S: Scalar>() -> Result<DcProblem<S>, RegistryError> {
    let g = FnOracle::new(2, |x: &[S]| {
        let v = S::c(1.03) * (x[0] * x[0] + x[1] * x[1]) - x[0].cos() * x[1].cos();
        Ok((
            v,
            vec![
                S::c(2.06) * x[0] + x[0].sin() * x[1].cos(),
                S::c(2.06) * x[1] + x[0].cos() * x[1].sin(),
            ],
        ))
    });
    let h = scaled_norm2_oracle(2, S::one());
    DcProblem::new(
        "ex5",
        Box::new(g),
        Box::new(h),
        BoxDomain::new(vec![S::c(-6.0), S::c(-5.0)], vec![S::c(4.0), S::c(2.0)])?,
        Some(KnownOptimum {
            x_star: vec![S::zero(), S::zero()],
            z_star: -S::one(),
        }),
    )
}

fn example6<S: Scalar>(n: usize, m: usize) -> Result<DcProblem<S>, RegistryError> {
    let wells: Vec<(S, S)> = [(4.0, 0.70), (2.5, 0.73), (7.5, 0.76)][..m]
        .iter()
        .map(|&(a, c)| (S::c(a), S::c(c)))
        .collect();
    let g = {
        let wells = wells.clone();
        FnOracle::new(n, move |x: &[S]| {
            let mut v = x.iter().map(|xi| *xi * *xi).sum::<S>();
            let mut grad: Vec<S> = x.iter().map(|xi| S::c(2.0) * *xi).collect();
            for &(a, c) in &wells {
                let dist2 = x.iter().map(|xi| (*xi - a) * (*xi - a)).sum::<S>();
                let denom = dist2 + c;
                v = v - denom.recip();
                let factor = S::c(2.0) / (denom * denom);
                for (gj, xj) in grad.iter_mut().zip(x) {
                    *gj = *gj + factor * (*xj - a);
                }
            }
            Ok((v, grad))
        })
    };
    let h = scaled_norm2_oracle(n, S::one());
    DcProblem::new(
        format!("ex6:n={n},m={m}"),
        Box::new(g),
        Box::new(h),
        BoxDomain::uniform(n, S::zero(), S::c(10.0))?,
        None,
    )
}

fn example7<S: Scalar>() -> Result<DcProblem<S>, RegistryError> {
    let g = FnOracle::new(4, |x: &[S]| {
        let mut v = S::zero();
        let mut grad = vec![S::zero(); 4];
        // Pairs with h so that g - h collapses to the L1 Wood function:
        // 200 max{0, |x1|-x2} - 100(|x1|-x2) = 100 | |x1|-x2 |, same for the
        // 180/90 pair in (x3, x4).
        for &j in &[0usize, 2] {
            let (av, ad) = abs_vg(x[j] - S::one());
            v = v + av;
            grad[j] = grad[j] + ad;
        }
        add_hinge(&mut v, &mut grad, x, 0, 1, S::c(200.0));
        add_hinge(&mut v, &mut grad, x, 2, 3, S::c(180.0));
        for &j in &[1usize, 3] {
            let (av, ad) = abs_vg(x[j] - S::one());
            v = v + S::c(10.1) * av;
            grad[j] = grad[j] + S::c(10.1) * ad;
        }
        let (av, ad) = abs_vg(x[1] + x[3] - S::c(2.0));
        v = v + S::c(4.95) * av;
        grad[1] = grad[1] + S::c(4.95) * ad;
        grad[3] = grad[3] + S::c(4.95) * ad;
        Ok((v, grad))
    });
    let h = FnOracle::new(4, |x: &[S]| {
        let mut grad = vec![S::zero(); 4];
        let (a1, d1) = abs_vg(x[0]);
        let (a3, d3) = abs_vg(x[2]);
        let v = S::c(100.0) * (a1 - x[1]) + S::c(90.0) * (a3 - x[3]);
        grad[0] = S::c(100.0) * d1;
        grad[1] = -S::c(100.0);
        grad[2] = S::c(90.0) * d3;
        grad[3] = -S::c(90.0);
        let (a24, d24) = abs_vg(x[1] - x[3]);
        grad[1] = grad[1] + S::c(4.95) * d24;
        grad[3] = grad[3] - S::c(4.95) * d24;
        Ok((v + S::c(4.95) * a24, grad))
    });
    DcProblem::new(
        "ex7",
        Box::new(g),
        Box::new(h),
        BoxDomain::uniform(4, S::c(-10.0), S::c(10.0))?,
        Some(KnownOptimum {
            x_star: vec![S::one(); 4],
            z_star: S::zero(),
        }),
    )
}

fn example8<S: Scalar>(n: usize) -> Result<DcProblem<S>, RegistryError> {
    let g = FnOracle::new(n, move |x: &[S]| {
        let mut grad = vec![S::zero(); n];
        let (av, ad) = abs_vg(x[0] - S::one());
        let mut v = av;
        grad[0] = ad;
        for i in 1..n {
            add_hinge(&mut v, &mut grad, x, i - 1, i, S::c(200.0));
        }
        Ok((v, grad))
    });
    let h = FnOracle::new(n, move |x: &[S]| {
        let mut v = S::zero();
        let mut grad = vec![S::zero(); n];
        for i in 1..n {
            let (av, ad) = abs_vg(x[i - 1]);
            v = v + S::c(100.0) * (av - x[i]);
            grad[i - 1] = grad[i - 1] + S::c(100.0) * ad;
            grad[i] = grad[i] - S::c(100.0);
        }
        Ok((v, grad))
    });
    DcProblem::new(
        format!("ex8:n={n}"),
        Box::new(g),
        Box::new(h),
        BoxDomain::uniform(n, S::c(-10.0), S::c(10.0))?,
        Some(KnownOptimum {
            x_star: vec![S::one(); n],
            z_star: S::zero(),
        }),
    )
}

/// Adds `weight * max{0, |x_i| - x_j}` to a running value/gradient pair.
fn add_hinge<S: Scalar>(v: &mut S, grad: &mut [S], x: &[S], i: usize, j: usize, weight: S) {
    let (av, ad) = abs_vg(x[i]);
    let inner = av - x[j];
    let (mv, picked) = max_vg(vec![(S::zero(), false), (inner, true)]);
    *v = *v + weight * mv;
    if picked {
        grad[i] = grad[i] + weight * ad;
        grad[j] = grad[j] - weight;
    }
}

fn scaled_norm2_oracle<S: Scalar>(n: usize, scale: S) -> FnOracle<S> {
    FnOracle::new(n, move |x: &[S]| {
        let v = x.iter().map(|xi| *xi * *xi).sum::<S>();
        let grad = x.iter().map(|xi| S::c(2.0) * scale * *xi).collect();
        Ok((scale * v, grad))
    })
}
