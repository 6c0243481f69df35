// NaN must fail range checks, hence the negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod error;
pub mod grid;
pub mod mesh;
pub mod operators;
pub mod params;
pub mod power;
pub mod solver;
mod quadrature;
pub mod special;

pub use error::{Error, Result};
pub use grid::{integrate_weighted, FnProfile, Profile, WeightedGridFunction};
pub use mesh::{Grading, Mesh};
pub use operators::{
    boundary_limit, delta_rho, generalized_derivative, int_by_parts_residual, int_by_parts_sides,
    left_derivative, left_integral, right_integral, semigroup_residual, BoundaryLimit,
    ByPartsSides, Side,
};
pub use params::ProblemParams;
pub use power::{
    blowup_threshold, exact_solution, matched_beta, power_derivative_closed,
    power_hilfer_closed, power_integral_closed, ExactSolution, PowerSum, ScaledPower,
};
pub use special::{gamma_fn, gamma_ratio, recip_gamma};
pub use solver::{
    detect_blowup, solve_ivp, sweep, tracking_error, BlowupReport, Classification, FnRhs,
    PowerRhs, Rhs, SolveConfig, SweepCell, SweepMode, Trajectory,
};
pub use audit::{
    audit_inequality_chain, audit_trace, bound_constant, build_test_function, supersolution,
    vanishing_bound_trace, young_split, AuditReport, AuditSettings, Candidate, TestFunction,
    TraceRow,
};
