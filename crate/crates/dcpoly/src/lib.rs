//! Certified global minimization of DC functions (differences of convex
//! functions) over boxes.
//!
//! The convex part `g` is approximated from below by a growing bundle of
//! affine minorants; the polyhedron `epi(max of minorants) ∩ (box × ℝ)` is
//! maintained in vertex form, and everything else (ε-underestimators, the
//! direct solver, benchmarks) reads answers off that vertex list.
//!
//! The crate is generic over the scalar type through [`Scalar`]; the `*F64`
//! and `*F32` aliases below pin the two supported instantiations.

pub mod bench;
pub mod cli;
pub mod dc_solver;
pub mod oracles;
pub mod poly_core;
pub mod scalar;
pub mod underestimator;

pub use bench::{emit_table, run_suite, Algorithm, BenchRow, BenchSuite, TableFormat};
pub use dc_solver::{
    bound_sandwich_check, solve_direct, solve_via_approximation, SolveConfig, SolveReport,
};
pub use oracles::{
    build_example, build_from_spec, supporting_cut, ConvexOracle, DcProblem, ExampleId, FnOracle,
    KnownOptimum, OracleError, ProblemSpec,
};
pub use poly_core::{
    enumerate_vertices_bruteforce, init_epigraph, AffineMinorant, BoxDomain, EpigraphPoly,
    LiftedVertex, PolyError,
};
pub use scalar::Scalar;
pub use underestimator::{
    approximate_multi_cut, approximate_single_cut, convergence_profile, ApproxConfig, ApproxResult,
    Termination,
};

pub type BoxDomainF64 = poly_core::BoxDomain<f64>;
pub type BoxDomainF32 = poly_core::BoxDomain<f32>;
pub type AffineMinorantF64 = poly_core::AffineMinorant<f64>;
pub type AffineMinorantF32 = poly_core::AffineMinorant<f32>;
pub type EpigraphPolyF64 = poly_core::EpigraphPoly<f64>;
pub type EpigraphPolyF32 = poly_core::EpigraphPoly<f32>;
pub type FnOracleF64 = oracles::FnOracle<f64>;
pub type FnOracleF32 = oracles::FnOracle<f32>;
pub type DcProblemF64 = oracles::DcProblem<f64>;
pub type DcProblemF32 = oracles::DcProblem<f32>;
pub type ApproxConfigF64 = underestimator::ApproxConfig<f64>;
pub type ApproxConfigF32 = underestimator::ApproxConfig<f32>;
pub type ApproxResultF64 = underestimator::ApproxResult<f64>;
pub type ApproxResultF32 = underestimator::ApproxResult<f32>;
pub type SolveConfigF64 = dc_solver::SolveConfig<f64>;
pub type SolveConfigF32 = dc_solver::SolveConfig<f32>;
pub type SolveReportF64 = dc_solver::SolveReport<f64>;
pub type SolveReportF32 = dc_solver::SolveReport<f32>;
pub type BenchSuiteF64 = bench::BenchSuite<f64>;
pub type BenchSuiteF32 = bench::BenchSuite<f32>;
