//! Equality-constraint handling.
//!
//! Two mechanisms are provided:
//!
//! * **KKT equality edges.** Each constraint `h(x) = 0` becomes a regular
//!   edge with stacked error `e = [h(x); γ]` and the indefinite information
//!   matrix `[[0, I], [I, 0]]`, where γ is an auto-created multiplier
//!   variable node. Running plain Gauss-Newton over the augmented graph then
//!   solves the KKT saddle-point system at every iteration:
//!
//!   ```text
//!   [ H    J_h^T ] [Δx]   [ b − J_h^T γ ]
//!   [ J_h  0     ] [Δγ] = [ −h          ]
//!   ```
//!
//! * **Augmented Lagrangian.** An outer loop keeps the multipliers and a
//!   uniform penalty ρ fixed while inner Gauss-Newton steps minimize the
//!   penalized objective over the primal variables only, then updates
//!   `γ ← γ + ρ·h(x)` and `ρ ← min(ρ_max, α·ρ)`.
//!
//! A soft-constraint baseline (constraint as a large-weight cost edge) is
//! also included.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::GraphError;
use crate::graph::{
    numeric_jacobian, EdgeClass, EdgeId, ErrorFn, FactorGraph, JacobianFn, VarId, VariableKind,
};
use crate::linear::assemble_filtered;
use crate::solver::{IterationStats, SolverConfig, Termination};

/// Constraint function: values of the primal variables → h(x) of length `dim`.
pub type ConstraintFn = Arc<dyn Fn(&[&DVector<f64>]) -> DVector<f64> + Send + Sync>;

/// Per-variable Jacobian blocks of the constraint (dim × dim_j each).
pub type ConstraintJacobianFn = Arc<dyn Fn(&[&DVector<f64>]) -> Vec<DMatrix<f64>> + Send + Sync>;

/// Bookkeeping for one equality constraint: the realized stacked edge, the
/// auto-created multiplier node, and direct access to h for the AL path.
pub struct EqualityConstraint {
    pub edge_id: EdgeId,
    pub multiplier_id: VarId,
    pub primal_var_ids: Vec<VarId>,
    pub dim: usize,
    pub(crate) h_fn: ConstraintFn,
    pub(crate) h_jacobian_fn: Option<ConstraintJacobianFn>,
}

impl EqualityConstraint {
    pub(crate) fn eval_h(&self, graph: &FactorGraph) -> DVector<f64> {
        let values: Vec<&DVector<f64>> = self
            .primal_var_ids
            .iter()
            .map(|id| &graph.variable(*id).expect("constraint variable").value)
            .collect();
        (self.h_fn)(&values)
    }

    pub(crate) fn eval_h_jacobian(&self, graph: &FactorGraph) -> Vec<DMatrix<f64>> {
        let values: Vec<&DVector<f64>> = self
            .primal_var_ids
            .iter()
            .map(|id| &graph.variable(*id).expect("constraint variable").value)
            .collect();
        match &self.h_jacobian_fn {
            Some(f) => f(&values),
            None => numeric_jacobian(self.h_fn.as_ref(), &values, self.dim),
        }
    }
}

/// Augmented Lagrangian hyperparameters. The defaults are the tuned values
/// used for the benchmark scenarios (ρ grows tenfold per outer iteration
/// from 10 up to the 50000 cap, one inner iteration per outer).
#[derive(Debug, Clone)]
pub struct ALConfig {
    pub rho_init: f64,
    pub rho_max: f64,
    pub alpha: f64,
    pub inner_max_iterations: usize,
    pub constraint_tol: f64,
    pub outer_max_iterations: usize,
    pub step_norm_tol: f64,
}

impl Default for ALConfig {
    fn default() -> Self {
        Self {
            rho_init: 10.0,
            rho_max: 50_000.0,
            alpha: 10.0,
            inner_max_iterations: 1,
            constraint_tol: 1e-6,
            outer_max_iterations: 100,
            step_norm_tol: 1e-6,
        }
    }
}

/// Penalty parameter and multiplier estimates of the AL loop. ρ is uniform
/// across constraints; multipliers are keyed by the constraint's edge id.
#[derive(Debug, Clone)]
pub struct PenaltyState {
    pub rho: f64,
    pub multipliers: BTreeMap<EdgeId, DVector<f64>>,
}

impl PenaltyState {
    /// Seeds ρ from the config and the multipliers from the current values
    /// of the constraints' multiplier nodes.
    pub fn init(graph: &FactorGraph, config: &ALConfig) -> Self {
        let multipliers = graph
            .constraints
            .iter()
            .map(|c| {
                (
                    c.edge_id,
                    graph
                        .variable(c.multiplier_id)
                        .expect("multiplier node")
                        .value
                        .clone(),
                )
            })
            .collect();
        PenaltyState {
            rho: config.rho_init,
            multipliers,
        }
    }
}

impl FactorGraph {
    /// Registers an equality constraint `h(x) = 0` of dimension `d` over the
    /// given primal variables. Creates a multiplier node γ (dim `d`, zero
    /// initial value) and a regular edge over `(primal vars, γ)` with error
    /// `[h(x); γ]` and the antidiagonal-identity information matrix. Returns
    /// `(edge id, multiplier id)`.
    pub fn add_equality_constraint(
        &mut self,
        primal_var_ids: Vec<VarId>,
        h_fn: ConstraintFn,
        dim: usize,
        h_jacobian_fn: Option<ConstraintJacobianFn>,
    ) -> Result<(EdgeId, VarId), GraphError> {
        for id in &primal_var_ids {
            if self.variable(*id).is_none() {
                return Err(GraphError::UnknownVariable(id.0));
            }
        }
        let multiplier_id =
            self.add_variable(dim, DVector::zeros(dim), false, VariableKind::Multiplier)?;

        // Ω = [[0, I], [I, 0]]
        let mut information = DMatrix::zeros(2 * dim, 2 * dim);
        for i in 0..dim {
            information[(i, dim + i)] = 1.0;
            information[(dim + i, i)] = 1.0;
        }

        let n_primal = primal_var_ids.len();
        let h_for_error = Arc::clone(&h_fn);
        let error_fn: ErrorFn = Arc::new(move |vals: &[&DVector<f64>]| {
            let h = h_for_error(&vals[..n_primal]);
            let gamma = vals[n_primal];
            let mut stacked = DVector::zeros(h.len() + gamma.len());
            stacked.rows_mut(0, h.len()).copy_from(&h);
            stacked.rows_mut(h.len(), gamma.len()).copy_from(gamma);
            stacked
        });

        // stacked Jacobian is [[J_h, 0], [0, I]]; analytic only when the
        // constraint Jacobian was supplied, otherwise finite differences
        // handle the stacked error as a whole
        let jacobian_fn: Option<JacobianFn> = h_jacobian_fn.as_ref().map(|jh| {
            let jh = Arc::clone(jh);
            Arc::new(move |vals: &[&DVector<f64>]| {
                let h_blocks = jh(&vals[..n_primal]);
                let mut blocks: Vec<DMatrix<f64>> = h_blocks
                    .into_iter()
                    .map(|block| {
                        let mut stacked = DMatrix::zeros(2 * dim, block.ncols());
                        stacked.view_mut((0, 0), (dim, block.ncols())).copy_from(&block);
                        stacked
                    })
                    .collect();
                let mut gamma_block = DMatrix::zeros(2 * dim, dim);
                gamma_block
                    .view_mut((dim, 0), (dim, dim))
                    .copy_from(&DMatrix::identity(dim, dim));
                blocks.push(gamma_block);
                blocks
            }) as JacobianFn
        });

        let mut var_ids = primal_var_ids.clone();
        var_ids.push(multiplier_id);
        let edge_id = self.add_edge_with_class(
            var_ids,
            information,
            error_fn,
            jacobian_fn,
            EdgeClass::Equality,
        )?;
        self.constraints.push(EqualityConstraint {
            edge_id,
            multiplier_id,
            primal_var_ids,
            dim,
            h_fn,
            h_jacobian_fn,
        });
        Ok((edge_id, multiplier_id))
    }

    /// Constraint approximated by a cost edge with information `weight·I`.
    pub fn add_soft_constraint(
        &mut self,
        primal_var_ids: Vec<VarId>,
        h_fn: ConstraintFn,
        dim: usize,
        weight: f64,
        h_jacobian_fn: Option<ConstraintJacobianFn>,
    ) -> Result<EdgeId, GraphError> {
        if weight <= 0.0 {
            return Err(GraphError::InvalidWeight(weight));
        }
        let information = DMatrix::identity(dim, dim) * weight;
        self.add_edge(primal_var_ids, information, h_fn, h_jacobian_fn)
    }

    pub fn constraints(&self) -> &[EqualityConstraint] {
        &self.constraints
    }

    /// ‖h‖∞ over all equality constraints at the current values (0 if none).
    pub fn constraint_violation_inf(&self) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.eval_h(self).amax())
            .fold(0.0, f64::max)
    }
}

/// Runs the Gauss-Newton loop over the full augmented graph (multipliers are
/// ordinary variables), so every linear solve is a KKT solve. Termination is
/// on the norm of the combined (Δx, Δγ) step. A singular KKT system signals
/// linearly dependent constraints and ends with `SolverFailure`.
pub fn optimize_kkt_gauss_newton(graph: &mut FactorGraph, config: &SolverConfig) -> IterationStats {
    crate::solver::optimize_gauss_newton(graph, config)
}

/// One inner AL step: assembles cost edges plus, per constraint,
/// `H_n = J_h^T P J_h` and `b_n = −J_h^T P h − J_h^T γ` with `P = ρI`, then
/// solves and updates the primal variables only. Returns the step.
pub fn al_inner_step(
    graph: &mut FactorGraph,
    state: &PenaltyState,
) -> Result<DVector<f64>, GraphError> {
    let index = crate::graph::IndexMap::build_with(graph, |v| v.kind == VariableKind::Primal);
    let mut sys = assemble_filtered(graph, &index, |e| e.class == EdgeClass::Cost)?;
    for constraint in &graph.constraints {
        let h = constraint.eval_h(graph);
        let jac = constraint.eval_h_jacobian(graph);
        let gamma = &state.multipliers[&constraint.edge_id];
        let penalized = state.rho * &h + gamma;
        for (ai, aid) in constraint.primal_var_ids.iter().enumerate() {
            let Some(ao) = index.offset(*aid) else {
                continue;
            };
            let ja = &jac[ai];
            let mut b_block = sys.b.rows_mut(ao, ja.ncols());
            b_block -= ja.transpose() * &penalized;
            for (bi, bid) in constraint.primal_var_ids.iter().enumerate() {
                let Some(bo) = index.offset(*bid) else {
                    continue;
                };
                let jb = &jac[bi];
                let mut h_block = sys.h.view_mut((ao, bo), (ja.ncols(), jb.ncols()));
                h_block += ja.transpose() * state.rho * jb;
            }
        }
    }
    let (delta, _report) = sys.solve_symmetric_indefinite();
    let Some(delta) = delta else {
        return Err(GraphError::SingularSystem);
    };
    graph.apply_step(&index, &delta);
    Ok(delta)
}

/// Multiplier update `γ ← γ + ρ·h(x)` per constraint.
pub fn al_update_multipliers(state: &mut PenaltyState, h_values: &BTreeMap<EdgeId, DVector<f64>>) {
    for (edge_id, h) in h_values {
        let gamma = state
            .multipliers
            .get_mut(edge_id)
            .expect("multiplier for constraint");
        *gamma += state.rho * h;
    }
}

/// Capped penalty growth `ρ ← min(ρ_max, α·ρ)`.
pub fn al_update_penalty(state: &mut PenaltyState, config: &ALConfig) {
    state.rho = (config.alpha * state.rho).min(config.rho_max);
}

/// The full Augmented Lagrangian loop. The iteration count in the returned
/// stats is the total number of linear solves. On success the multiplier
/// nodes of the graph hold the final multiplier estimates.
pub fn optimize_augmented_lagrangian(
    graph: &mut FactorGraph,
    config: &ALConfig,
) -> IterationStats {
    let mut state = PenaltyState::init(graph, config);
    let mut stats = IterationStats {
        iterations: 0,
        step_norms: Vec::new(),
        cost_trace: Vec::new(),
        termination: Termination::MaxIterations,
    };
    let inner_config = SolverConfig {
        step_norm_tol: config.step_norm_tol,
        ..SolverConfig::default()
    };
    for _ in 0..config.outer_max_iterations {
        let mut last_step_norm = f64::INFINITY;
        for _ in 0..config.inner_max_iterations.max(1) {
            let delta = match al_inner_step(graph, &state) {
                Ok(delta) => delta,
                Err(_) => {
                    stats.termination = Termination::SolverFailure;
                    return stats;
                }
            };
            last_step_norm = delta.norm();
            stats.iterations += 1;
            stats.step_norms.push(last_step_norm);
            stats.cost_trace.push(graph.total_cost_of(EdgeClass::Cost));
            if crate::solver::check_termination(&delta, &inner_config) {
                break;
            }
        }
        let h_values: BTreeMap<EdgeId, DVector<f64>> = graph
            .constraints
            .iter()
            .map(|c| (c.edge_id, c.eval_h(graph)))
            .collect();
        al_update_multipliers(&mut state, &h_values);
        al_update_penalty(&mut state, config);
        write_multipliers_back(graph, &state);

        let violation = h_values.values().map(|h| h.amax()).fold(0.0, f64::max);
        if violation <= config.constraint_tol && last_step_norm <= config.step_norm_tol {
            stats.termination = Termination::StepTolerance;
            return stats;
        }
    }
    stats
}

fn write_multipliers_back(graph: &mut FactorGraph, state: &PenaltyState) {
    let updates: Vec<(VarId, DVector<f64>)> = graph
        .constraints
        .iter()
        .map(|c| (c.multiplier_id, state.multipliers[&c.edge_id].clone()))
        .collect();
    for (id, value) in updates {
        graph.variable_mut(id).expect("multiplier node").value = value;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::assemble;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector};

    fn min_x_squared_st_x_eq_one() -> (FactorGraph, VarId, VarId) {
        let mut g = FactorGraph::new();
        let x = g
            .add_variable(1, dvector![0.0], false, VariableKind::Primal)
            .unwrap();
        g.add_edge(
            vec![x],
            dmatrix![1.0],
            Arc::new(|vals: &[&DVector<f64>]| dvector![vals[0][0]]),
            Some(Arc::new(|_: &[&DVector<f64>]| vec![dmatrix![1.0]])),
        )
        .unwrap();
        let (_, gamma) = g
            .add_equality_constraint(
                vec![x],
                Arc::new(|vals: &[&DVector<f64>]| dvector![vals[0][0] - 1.0]),
                1,
                Some(Arc::new(|_: &[&DVector<f64>]| vec![dmatrix![1.0]])),
            )
            .unwrap();
        (g, x, gamma)
    }

    #[test]
    fn equality_edge_has_stacked_error_and_antidiagonal_information() {
        let (g, _, gamma) = min_x_squared_st_x_eq_one();
        let edge = g.edge(g.constraints()[0].edge_id).unwrap();
        assert_eq!(edge.error_dim, 2);
        assert_eq!(edge.information, dmatrix![0.0, 1.0; 1.0, 0.0]);
        let mult = g.variable(gamma).unwrap();
        assert_eq!(mult.kind, VariableKind::Multiplier);
        assert_eq!(mult.value, dvector![0.0]);
    }

    #[test]
    fn two_dimensional_constraint_builds_four_by_four_information() {
        let mut g = FactorGraph::new();
        let x = g
            .add_variable(2, dvector![0.0, 0.0], false, VariableKind::Primal)
            .unwrap();
        let (edge_id, _) = g
            .add_equality_constraint(
                vec![x],
                Arc::new(|vals: &[&DVector<f64>]| vals[0].clone()),
                2,
                None,
            )
            .unwrap();
        let omega = &g.edge(edge_id).unwrap().information;
        assert_eq!(omega.nrows(), 4);
        let mut expected = DMatrix::zeros(4, 4);
        expected[(0, 2)] = 1.0;
        expected[(1, 3)] = 1.0;
        expected[(2, 0)] = 1.0;
        expected[(3, 1)] = 1.0;
        assert_eq!(omega, &expected);
    }

    #[test]
    fn constraint_on_unknown_variable_is_rejected() {
        let mut g = FactorGraph::new();
        let err = g
            .add_equality_constraint(
                vec![VarId(9)],
                Arc::new(|_: &[&DVector<f64>]| dvector![0.0]),
                1,
                None,
            )
            .unwrap_err();
        assert!(matches!(err, GraphError::UnknownVariable(9)));
    }

    #[test]
    fn equality_edge_contribution_matches_hand_kkt_blocks() {
        // J_h = [2], γ = [3], h = [0.5]: coupling block [[0,2],[2,0]],
        // b = [−J_h^T γ; −h] = [−6, −0.5]
        let mut g = FactorGraph::new();
        let x = g
            .add_variable(1, dvector![0.25], false, VariableKind::Primal)
            .unwrap();
        let (_, gamma) = g
            .add_equality_constraint(
                vec![x],
                Arc::new(|vals: &[&DVector<f64>]| dvector![2.0 * vals[0][0]]),
                1,
                Some(Arc::new(|_: &[&DVector<f64>]| vec![dmatrix![2.0]])),
            )
            .unwrap();
        g.variable_mut(gamma).unwrap().value = dvector![3.0];
        let sys = assemble(&g, &g.build_index()).unwrap();
        assert_eq!(sys.h, dmatrix![0.0, 2.0; 2.0, 0.0]);
        assert_eq!(sys.b, dvector![-6.0, -0.5]);
    }

    #[test]
    fn satisfied_constraint_with_zero_multiplier_contributes_zero_b() {
        let mut g = FactorGraph::new();
        let x = g
            .add_variable(1, dvector![1.0], false, VariableKind::Primal)
            .unwrap();
        g.add_equality_constraint(
            vec![x],
            Arc::new(|vals: &[&DVector<f64>]| dvector![vals[0][0] - 1.0]),
            1,
            None,
        )
        .unwrap();
        let sys = assemble(&g, &g.build_index()).unwrap();
        assert_relative_eq!(sys.b.amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn kkt_toy_solves_in_two_iterations() {
        // hand KKT solve at (x,γ)=(0,0): [[1,1],[1,0]]·Δ = [0,1] → Δ=(1,−1)
        let (mut g, x, gamma) = min_x_squared_st_x_eq_one();
        let stats = optimize_kkt_gauss_newton(&mut g, &SolverConfig::default());
        assert_eq!(stats.iterations, 2);
        assert_eq!(stats.termination, Termination::StepTolerance);
        assert_relative_eq!(g.variable(x).unwrap().value[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(g.variable(gamma).unwrap().value[0], -1.0, epsilon = 1e-10);
    }

    #[test]
    fn kkt_without_constraints_reduces_to_gauss_newton() {
        let build = || {
            let mut g = FactorGraph::new();
            let v = g
                .add_variable(1, dvector![0.0], false, VariableKind::Primal)
                .unwrap();
            g.add_edge(
                vec![v],
                dmatrix![1.0],
                Arc::new(|vals: &[&DVector<f64>]| dvector![vals[0][0] - 3.0]),
                None,
            )
            .unwrap();
            (g, v)
        };
        let (mut a, va) = build();
        let (mut b, vb) = build();
        let sa = optimize_kkt_gauss_newton(&mut a, &SolverConfig::default());
        let sb = crate::solver::optimize_gauss_newton(&mut b, &SolverConfig::default());
        assert_eq!(sa.iterations, sb.iterations);
        assert_eq!(
            a.variable(va).unwrap().value[0],
            b.variable(vb).unwrap().value[0]
        );
    }

    #[test]
    fn duplicated_constraints_make_the_kkt_system_singular() {
        let (mut g, x, _) = min_x_squared_st_x_eq_one();
        g.add_equality_constraint(
            vec![x],
            Arc::new(|vals: &[&DVector<f64>]| dvector![vals[0][0] - 1.0]),
            1,
            None,
        )
        .unwrap();
        let stats = optimize_kkt_gauss_newton(&mut g, &SolverConfig::default());
        assert_eq!(stats.termination, Termination::SolverFailure);
    }

    #[test]
    fn soft_constraint_closed_form_minimizer() {
        // min x² + w(x−1)² → x = w/(1+w)
        let weight = 1e6;
        let mut g = FactorGraph::new();
        let x = g
            .add_variable(1, dvector![0.0], false, VariableKind::Primal)
            .unwrap();
        g.add_edge(
            vec![x],
            dmatrix![1.0],
            Arc::new(|vals: &[&DVector<f64>]| dvector![vals[0][0]]),
            None,
        )
        .unwrap();
        g.add_soft_constraint(
            vec![x],
            Arc::new(|vals: &[&DVector<f64>]| dvector![vals[0][0] - 1.0]),
            1,
            weight,
            None,
        )
        .unwrap();
        crate::solver::optimize_gauss_newton(&mut g, &SolverConfig::default());
        assert_relative_eq!(
            g.variable(x).unwrap().value[0],
            weight / (1.0 + weight),
            epsilon = 1e-9
        );
    }

    #[test]
    fn soft_constraint_rejects_nonpositive_weight() {
        let mut g = FactorGraph::new();
        let x = g
            .add_variable(1, dvector![0.0], false, VariableKind::Primal)
            .unwrap();
        let err = g
            .add_soft_constraint(
                vec![x],
                Arc::new(|vals: &[&DVector<f64>]| dvector![vals[0][0] - 1.0]),
                1,
                0.0,
                None,
            )
            .unwrap_err();
        assert!(matches!(err, GraphError::InvalidWeight(_)));
    }

    #[test]
    fn soft_constraint_approaches_kkt_solution_with_growing_weight() {
        let mut previous_gap = f64::INFINITY;
        for weight in [1e2, 1e4, 1e6] {
            let mut g = FactorGraph::new();
            let x = g
                .add_variable(1, dvector![0.0], false, VariableKind::Primal)
                .unwrap();
            g.add_edge(
                vec![x],
                dmatrix![1.0],
                Arc::new(|vals: &[&DVector<f64>]| dvector![vals[0][0]]),
                None,
            )
            .unwrap();
            g.add_soft_constraint(
                vec![x],
                Arc::new(|vals: &[&DVector<f64>]| dvector![vals[0][0] - 1.0]),
                1,
                weight,
                None,
            )
            .unwrap();
            crate::solver::optimize_gauss_newton(&mut g, &SolverConfig::default());
            let gap = (g.variable(x).unwrap().value[0] - 1.0).abs();
            assert!(gap < previous_gap);
            previous_gap = gap;
        }
    }

    #[test]
    fn al_inner_step_matches_hand_evaluation() {
        // min x² s.t. x=1, x=0, γ=0, ρ=10: H = 1+10 = 11, b = 10, Δ = 10/11
        let (mut g, x, _) = min_x_squared_st_x_eq_one();
        let state = PenaltyState::init(&g, &ALConfig::default());
        let delta = al_inner_step(&mut g, &state).unwrap();
        assert_relative_eq!(delta[0], 10.0 / 11.0, epsilon = 1e-12);
        assert_relative_eq!(g.variable(x).unwrap().value[0], 10.0 / 11.0, epsilon = 1e-12);
    }

    #[test]
    fn al_inner_step_with_zero_penalty_is_the_unconstrained_step() {
        let (mut g, x, _) = min_x_squared_st_x_eq_one();
        let mut state = PenaltyState::init(&g, &ALConfig::default());
        state.rho = 0.0;
        let delta = al_inner_step(&mut g, &state).unwrap();
        // cost edge alone: H=1, b=0 at x=0
        assert_eq!(delta[0], 0.0);
        assert_eq!(g.variable(x).unwrap().value[0], 0.0);
    }

    #[test]
    fn al_multiplier_update_examples() {
        let mut state = PenaltyState {
            rho: 10.0,
            multipliers: BTreeMap::from([(EdgeId(0), dvector![0.0])]),
        };
        al_update_multipliers(
            &mut state,
            &BTreeMap::from([(EdgeId(0), dvector![0.5])]),
        );
        assert_eq!(state.multipliers[&EdgeId(0)], dvector![5.0]);

        al_update_multipliers(&mut state, &BTreeMap::from([(EdgeId(0), dvector![0.0])]));
        assert_eq!(state.multipliers[&EdgeId(0)], dvector![5.0]);

        let mut vec_state = PenaltyState {
            rho: 2.0,
            multipliers: BTreeMap::from([(EdgeId(1), dvector![1.0, -1.0])]),
        };
        al_update_multipliers(
            &mut vec_state,
            &BTreeMap::from([(EdgeId(1), dvector![0.5, 0.5])]),
        );
        assert_eq!(vec_state.multipliers[&EdgeId(1)], dvector![2.0, 0.0]);
    }

    #[test]
    fn al_penalty_update_examples() {
        let config = ALConfig::default();
        let mut state = PenaltyState {
            rho: 10.0,
            multipliers: BTreeMap::new(),
        };
        al_update_penalty(&mut state, &config);
        assert_eq!(state.rho, 100.0);

        state.rho = 10_000.0;
        al_update_penalty(&mut state, &config);
        assert_eq!(state.rho, 50_000.0);

        let identity_config = ALConfig {
            alpha: 1.0,
            ..ALConfig::default()
        };
        state.rho = 10.0;
        al_update_penalty(&mut state, &identity_config);
        assert_eq!(state.rho, 10.0);
    }

    #[test]
    fn al_toy_matches_scripted_fixed_point_oracle() {
        // independent script of the two update formulas for min x² s.t. x=1
        let config = ALConfig::default();
        let (mut ox, mut og, mut orho) = (0.0f64, 0.0f64, config.rho_init);
        let mut oracle_solves = 0;
        loop {
            let h_mat = 1.0 + orho;
            let b = -ox - orho * (ox - 1.0) - og;
            let delta = b / h_mat;
            ox += delta;
            oracle_solves += 1;
            og += orho * (ox - 1.0);
            orho = (config.alpha * orho).min(config.rho_max);
            if (ox - 1.0).abs() <= config.constraint_tol && delta.abs() <= config.step_norm_tol {
                break;
            }
            assert!(oracle_solves < 200);
        }

        let (mut g, x, gamma) = min_x_squared_st_x_eq_one();
        let stats = optimize_augmented_lagrangian(&mut g, &config);
        assert_eq!(stats.termination, Termination::StepTolerance);
        assert_eq!(stats.iterations, oracle_solves);
        assert_relative_eq!(g.variable(x).unwrap().value[0], ox, epsilon = 1e-12);
        assert_relative_eq!(g.variable(gamma).unwrap().value[0], og, epsilon = 1e-12);
        assert_relative_eq!(g.variable(x).unwrap().value[0], 1.0, epsilon = 1e-6);
        assert_relative_eq!(g.variable(gamma).unwrap().value[0], -1.0, epsilon = 1e-3);
    }

    #[test]
    fn al_without_constraints_behaves_like_unconstrained_gn() {
        let mut g = FactorGraph::new();
        let v = g
            .add_variable(1, dvector![0.0], false, VariableKind::Primal)
            .unwrap();
        g.add_edge(
            vec![v],
            dmatrix![1.0],
            Arc::new(|vals: &[&DVector<f64>]| dvector![vals[0][0] - 3.0]),
            None,
        )
        .unwrap();
        let stats = optimize_augmented_lagrangian(&mut g, &ALConfig::default());
        assert_eq!(stats.termination, Termination::StepTolerance);
        assert_relative_eq!(g.variable(v).unwrap().value[0], 3.0, epsilon = 1e-10);
    }

    #[test]
    fn kkt_and_al_agree_on_the_toy_problem() {
        let (mut kkt, xk, gk) = min_x_squared_st_x_eq_one();
        optimize_kkt_gauss_newton(&mut kkt, &SolverConfig::default());
        let (mut al, xa, ga) = min_x_squared_st_x_eq_one();
        optimize_augmented_lagrangian(&mut al, &ALConfig::default());
        let tol = 10.0 * 1e-6;
        assert!(
            (kkt.variable(xk).unwrap().value[0] - al.variable(xa).unwrap().value[0]).abs() <= tol
        );
        let (mk, ma) = (
            kkt.variable(gk).unwrap().value[0],
            al.variable(ga).unwrap().value[0],
        );
        assert_eq!(mk.signum(), ma.signum());
        assert_relative_eq!(mk, ma, max_relative = 1e-3);
    }
}
