//! Gauss-Newton and Levenberg-Marquardt iteration loops.
//!
//! Both loops terminate on the norm of the update step: iterate until
//! ‖Δ‖₂ ≤ `step_norm_tol` or the iteration budget runs out. One iteration is
//! one linear solve, and the terminal small-step solve is counted, so an
//! affine problem takes exactly two iterations (exact solve + confirming
//! step).

use nalgebra::DVector;

use crate::graph::{EdgeClass, FactorGraph, VariableKind};
use crate::linear::{assemble, damping_mask};

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub step_norm_tol: f64,
    pub lm_initial_lambda: f64,
    pub lm_factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            step_norm_tol: 1e-6,
            lm_initial_lambda: 1e-3,
            lm_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    StepTolerance,
    MaxIterations,
    SolverFailure,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Termination::StepTolerance => "StepTolerance",
            Termination::MaxIterations => "MaxIterations",
            Termination::SolverFailure => "SolverFailure",
        };
        f.write_str(s)
    }
}

/// Per-solve trace. `step_norms` and `cost_trace` have one entry per
/// iteration (i.e. per linear solve). The cost trace sums cost-class edges
/// only, so it stays meaningful in the presence of indefinite equality edges.
#[derive(Debug, Clone)]
pub struct IterationStats {
    pub iterations: usize,
    pub step_norms: Vec<f64>,
    pub cost_trace: Vec<f64>,
    pub termination: Termination,
}

impl IterationStats {
    fn new() -> Self {
        Self {
            iterations: 0,
            step_norms: Vec::new(),
            cost_trace: Vec::new(),
            termination: Termination::MaxIterations,
        }
    }

    fn record(&mut self, step_norm: f64, cost: f64) {
        self.iterations += 1;
        self.step_norms.push(step_norm);
        self.cost_trace.push(cost);
    }
}

/// True iff ‖step‖₂ ≤ `step_norm_tol`. A zero-dimensional step is converged.
pub fn check_termination(step: &DVector<f64>, config: &SolverConfig) -> bool {
    step.norm() <= config.step_norm_tol
}

/// Plain Gauss-Newton: assemble, solve, X ← X + Δ, until the step norm drops
/// below tolerance. A singular system ends the solve with `SolverFailure`
/// and the stats collected so far.
pub fn optimize_gauss_newton(graph: &mut FactorGraph, config: &SolverConfig) -> IterationStats {
    let index = graph.build_index();
    let mut stats = IterationStats::new();
    for _ in 0..config.max_iterations {
        let sys = match assemble(graph, &index) {
            Ok(sys) => sys,
            Err(_) => {
                stats.termination = Termination::SolverFailure;
                return stats;
            }
        };
        let (delta, _report) = sys.solve_symmetric_indefinite();
        let Some(delta) = delta else {
            stats.termination = Termination::SolverFailure;
            return stats;
        };
        graph.apply_step(&index, &delta);
        stats.record(delta.norm(), graph.total_cost_of(EdgeClass::Cost));
        if check_termination(&delta, config) {
            stats.termination = Termination::StepTolerance;
            return stats;
        }
    }
    stats.termination = Termination::MaxIterations;
    stats
}

/// Levenberg-Marquardt: the Gauss-Newton loop with adaptive diagonal damping
/// on the primal blocks. A step that does not increase the cost is accepted
/// and λ shrinks; otherwise the step is rolled back and λ grows. Fails once
/// λ exceeds 1e12 without an acceptable step.
pub fn optimize_levenberg_marquardt(
    graph: &mut FactorGraph,
    config: &SolverConfig,
) -> IterationStats {
    const LAMBDA_LIMIT: f64 = 1e12;
    let index = graph.build_index();
    let mask = damping_mask(graph, &index, |kind| kind == VariableKind::Primal);
    let mut stats = IterationStats::new();
    let mut lambda = config.lm_initial_lambda;
    let mut cost = graph.total_cost_of(EdgeClass::Cost);
    let mut sys = match assemble(graph, &index) {
        Ok(sys) => sys,
        Err(_) => {
            stats.termination = Termination::SolverFailure;
            return stats;
        }
    };
    while stats.iterations < config.max_iterations {
        let (delta, _report) = sys.damped(lambda, &mask).solve_symmetric_indefinite();
        let Some(delta) = delta else {
            // damped system still singular: escalate damping like a rejected step
            stats.record(f64::INFINITY, cost);
            lambda *= config.lm_factor;
            if lambda > LAMBDA_LIMIT {
                stats.termination = Termination::SolverFailure;
                return stats;
            }
            continue;
        };
        let saved = graph.save_values(&index);
        graph.apply_step(&index, &delta);
        let new_cost = graph.total_cost_of(EdgeClass::Cost);
        if new_cost <= cost {
            cost = new_cost;
            lambda /= config.lm_factor;
            stats.record(delta.norm(), cost);
            if check_termination(&delta, config) {
                stats.termination = Termination::StepTolerance;
                return stats;
            }
            sys = match assemble(graph, &index) {
                Ok(sys) => sys,
                Err(_) => {
                    stats.termination = Termination::SolverFailure;
                    return stats;
                }
            };
        } else {
            graph.restore_values(&saved);
            lambda *= config.lm_factor;
            stats.record(delta.norm(), cost);
            if lambda > LAMBDA_LIMIT {
                stats.termination = Termination::SolverFailure;
                return stats;
            }
        }
    }
    stats.termination = Termination::MaxIterations;
    stats
}
