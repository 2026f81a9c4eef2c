//! Solver library for obstacle-type variational inequalities.
//!
//! The constrained problem (find `u <= psi` with the usual variational
//! inequality for `-Δu = p(x,u)`) is approximated by the penalized equation
//!
//! ```text
//! -Δu + (1/ε) (u - ψ)⁺ = p(x, u)
//! ```
//!
//! whose critical points are computed as equilibria of the descending flow
//! `du/dt = A_ε u - u` with `A_ε = K_ε F_ε`. The discretization is a uniform
//! finite-difference grid (1D interval or 2D rectangle, homogeneous Dirichlet
//! boundary), chosen so that the positive and negative cones are *exactly*
//! invariant under the discrete flow: the shifted operator is an M-matrix,
//! its Cholesky substitutions never subtract, and each flow step is a convex
//! combination of nonnegative fields.
//!
//! Modules:
//! - [`grid`]: grids, nodal fields, discrete operators, Laplacian eigenpairs.
//! - [`model`]: nonlinearities, obstacles, growth-hypothesis sampling checks.
//! - [`penalty`]: the penalized energy and its gradient machinery.
//! - [`flow`]: monotone descending flow to critical points.
//! - [`multisol`]: positive / negative / sign-changing solution search by
//!   basin-boundary bisection.
//! - [`continuation`]: ε → 0 continuation with warm starts and a discrete
//!   KKT certificate for the limiting variational inequality.

pub mod continuation;
pub mod error;
pub mod flow;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod multisol;
pub mod penalty;

pub use continuation::{
    continue_to_vi, default_vi_test_fields, sample_vi_tests, sigma_hat, vi_residuals, Branch,
    Schedule, StageRow, ViCertificate, ViResiduals,
};
pub use error::{Error, Result};
pub use flow::{
    classify, flow_step, flow_to_critical, flow_to_critical_traced, Classification,
    CriticalPointReport, FlowParams, SolutionReport, TerminationReason, TraceRow,
};
pub use grid::{
    apply_neg_laplacian, build_grid, eigenpairs, field_to_csv, field_to_json, grid_to_json,
    h1_inner, h1_norm, l2_norm, lq_norm, EigenPair, Field, Grid,
};
pub use model::{
    check_h5, check_hypotheses, model_power, model_power_weighted, GrowthCheckParams,
    H5Report, HypothesisCheckResult, HypothesisReport, Nonlinearity, Obstacle,
};
pub use multisol::{
    find_negative, find_positive, find_sign_changing, nodal_domains, solve_triple,
    BracketDiagnostics, SearchConfig, SolutionSlot, TripleReport,
};
pub use penalty::PenaltyProblem;
