//! Factor-graph nonlinear least squares with native equality-constraint
//! support.
//!
//! The crate provides:
//!
//! * a factor-graph core ([`graph`]) with variable nodes, cost edges,
//!   finite-difference Jacobian fallback, and deterministic global indexing;
//! * dense assembly and a pivoted symmetric-indefinite linear solve
//!   ([`linear`]);
//! * Gauss-Newton and Levenberg-Marquardt loops with a step-norm stopping
//!   criterion ([`solver`]);
//! * equality constraints either as KKT equality edges (a regular edge with
//!   stacked error `[h; γ]` and antidiagonal information matrix, solved by
//!   plain Gauss-Newton over the augmented graph) or through an Augmented
//!   Lagrangian loop, plus a soft-constraint baseline ([`constraints`]);
//! * a longitudinal vehicle velocity-tracking optimal control case study
//!   ([`vehicle`]).

pub mod constraints;
pub mod error;
pub mod graph;
pub mod linear;
pub mod solver;
pub mod vehicle;

pub use constraints::{
    al_inner_step, al_update_multipliers, al_update_penalty, optimize_augmented_lagrangian,
    optimize_kkt_gauss_newton, ALConfig, EqualityConstraint, PenaltyState,
};
pub use error::GraphError;
pub use graph::{
    Edge, EdgeClass, EdgeId, ErrorFn, FactorGraph, IndexMap, JacobianFn, VarId, VariableKind,
    VariableNode,
};
pub use linear::{assemble, assemble_filtered, damping_mask, LinearSystem, SolveReport, SolveStatus};
pub use solver::{
    check_termination, optimize_gauss_newton, optimize_levenberg_marquardt, IterationStats,
    SolverConfig, Termination,
};
pub use vehicle::{
    build_ocp_graph, dynamics_residual_inf, dynamics_step, fit_linearization, resistance_force,
    resistance_force_derivative, resistance_force_mode, rmse, rollout, ConstraintMethod,
    DynamicsMode, OcpGraph, OcpWeights, ReferenceTrajectory, VehicleParams,
};
