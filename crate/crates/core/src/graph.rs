//! Factor-graph representation: variable nodes, cost edges, and the global
//! column indexing used to scatter per-edge contributions into one system.
//!
//! A graph encodes the weighted least squares objective
//!
//! ```text
//! min_X  Σ_j e_j(X_j)^T Ω_j e_j(X_j)
//! ```
//!
//! where each edge `j` owns an error function `e_j` over a subset of the
//! variables and a symmetric information matrix `Ω_j`. The information matrix
//! is *not* required to be positive definite: equality-constraint edges use an
//! indefinite antidiagonal one.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::constraints::EqualityConstraint;
use crate::error::GraphError;

/// Identifier of a variable node. Assigned monotonically by the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

/// Identifier of an edge. Assigned monotonically by the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

/// Role of a variable node in the optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableKind {
    /// Ordinary optimization variable (state, input, ...).
    Primal,
    /// Lagrange multiplier attached to an equality constraint.
    Multiplier,
}

/// Classification of an edge, used to separate true cost terms from
/// equality-constraint edges when computing objective values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeClass {
    /// Contributes e^T Ω e to the objective (Ω positive semidefinite in practice).
    Cost,
    /// Stacked equality-constraint edge with indefinite information matrix.
    Equality,
}

/// Error function of an edge: maps the values of the connected variables
/// (in `var_ids` order) to the residual vector.
pub type ErrorFn = Arc<dyn Fn(&[&DVector<f64>]) -> DVector<f64> + Send + Sync>;

/// Analytic Jacobian of an edge: one `error_dim x dim_j` block per connected
/// variable, in `var_ids` order.
pub type JacobianFn = Arc<dyn Fn(&[&DVector<f64>]) -> Vec<DMatrix<f64>> + Send + Sync>;

/// An optimization variable block.
#[derive(Clone)]
pub struct VariableNode {
    pub id: VarId,
    pub dim: usize,
    pub value: DVector<f64>,
    /// Fixed variables keep their value and contribute no columns to the
    /// global system (column deletion, not a huge prior).
    pub fixed: bool,
    pub kind: VariableKind,
}

/// A factor: residual function over connected variables plus its weighting.
pub struct Edge {
    pub id: EdgeId,
    pub var_ids: Vec<VarId>,
    pub error_dim: usize,
    pub information: DMatrix<f64>,
    pub class: EdgeClass,
    pub(crate) error_fn: ErrorFn,
    pub(crate) jacobian_fn: Option<JacobianFn>,
}

/// Maps variable ids to contiguous global column offsets. Fixed variables
/// (and any variable rejected by the build filter) have no entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMap {
    offsets: BTreeMap<VarId, usize>,
    total_dim: usize,
}

impl IndexMap {
    /// Offsets assigned in ascending variable-id order over the variables
    /// accepted by `filter` (fixed variables are always excluded).
    pub fn build_with<F>(graph: &FactorGraph, filter: F) -> Self
    where
        F: Fn(&VariableNode) -> bool,
    {
        let mut offsets = BTreeMap::new();
        let mut total = 0;
        for var in graph.variables.values() {
            if var.fixed || !filter(var) {
                continue;
            }
            offsets.insert(var.id, total);
            total += var.dim;
        }
        IndexMap {
            offsets,
            total_dim: total,
        }
    }

    pub fn offset(&self, id: VarId) -> Option<usize> {
        self.offsets.get(&id).copied()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn offsets(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.offsets.iter().map(|(id, off)| (*id, *off))
    }
}

/// Factor graph: id-keyed variables and edges with deterministic iteration
/// order (ascending id, which coincides with insertion order).
#[derive(Default)]
pub struct FactorGraph {
    variables: BTreeMap<VarId, VariableNode>,
    edges: BTreeMap<EdgeId, Edge>,
    pub(crate) constraints: Vec<EqualityConstraint>,
    next_var: usize,
    next_edge: usize,
}

impl FactorGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a variable node. Ids are assigned monotonically.
    pub fn add_variable(
        &mut self,
        dim: usize,
        initial: DVector<f64>,
        fixed: bool,
        kind: VariableKind,
    ) -> Result<VarId, GraphError> {
        if initial.len() != dim {
            return Err(GraphError::InvalidDimension {
                expected: dim,
                actual: initial.len(),
            });
        }
        let id = VarId(self.next_var);
        self.next_var += 1;
        self.variables.insert(
            id,
            VariableNode {
                id,
                dim,
                value: initial,
                fixed,
                kind,
            },
        );
        Ok(id)
    }

    /// Registers a cost edge. The error dimension is taken from the
    /// information matrix, which must be square and symmetric to 1e-12.
    /// When `jacobian_fn` is absent, central finite differences are used.
    pub fn add_edge(
        &mut self,
        var_ids: Vec<VarId>,
        information: DMatrix<f64>,
        error_fn: ErrorFn,
        jacobian_fn: Option<JacobianFn>,
    ) -> Result<EdgeId, GraphError> {
        self.add_edge_with_class(var_ids, information, error_fn, jacobian_fn, EdgeClass::Cost)
    }

    pub(crate) fn add_edge_with_class(
        &mut self,
        var_ids: Vec<VarId>,
        information: DMatrix<f64>,
        error_fn: ErrorFn,
        jacobian_fn: Option<JacobianFn>,
        class: EdgeClass,
    ) -> Result<EdgeId, GraphError> {
        for id in &var_ids {
            if !self.variables.contains_key(id) {
                return Err(GraphError::UnknownVariable(id.0));
            }
        }
        if information.nrows() != information.ncols() {
            return Err(GraphError::InvalidDimension {
                expected: information.nrows(),
                actual: information.ncols(),
            });
        }
        let asym = max_asymmetry(&information);
        if asym > 1e-12 {
            return Err(GraphError::InvalidInformation(asym));
        }
        let id = EdgeId(self.next_edge);
        self.next_edge += 1;
        let error_dim = information.nrows();
        self.edges.insert(
            id,
            Edge {
                id,
                var_ids,
                error_dim,
                information,
                class,
                error_fn,
                jacobian_fn,
            },
        );
        Ok(id)
    }

    pub fn variable(&self, id: VarId) -> Option<&VariableNode> {
        self.variables.get(&id)
    }

    pub fn variable_mut(&mut self, id: VarId) -> Option<&mut VariableNode> {
        self.variables.get_mut(&id)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(&id)
    }

    pub fn variables(&self) -> impl Iterator<Item = &VariableNode> {
        self.variables.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Current values of an edge's connected variables, in `var_ids` order.
    pub fn edge_values(&self, edge: &Edge) -> Vec<&DVector<f64>> {
        edge.var_ids
            .iter()
            .map(|id| &self.variables[id].value)
            .collect()
    }

    /// Evaluates the edge error at the current variable values.
    pub fn compute_error(&self, edge_id: EdgeId) -> Result<DVector<f64>, GraphError> {
        let edge = &self.edges[&edge_id];
        let values = self.edge_values(edge);
        let e = (edge.error_fn)(&values);
        if e.len() != edge.error_dim {
            return Err(GraphError::InvalidDimension {
                expected: edge.error_dim,
                actual: e.len(),
            });
        }
        if !e.iter().all(|x| x.is_finite()) {
            return Err(GraphError::NonFiniteError(edge_id.0));
        }
        Ok(e)
    }

    /// Per-variable Jacobian blocks of the edge at the current values.
    /// Uses the analytic function when present, otherwise central finite
    /// differences with step `1e-6 * max(1, |x_i|)` per coordinate.
    pub fn compute_jacobian(&self, edge_id: EdgeId) -> Result<Vec<DMatrix<f64>>, GraphError> {
        let edge = &self.edges[&edge_id];
        let values = self.edge_values(edge);
        let blocks = match &edge.jacobian_fn {
            Some(f) => f(&values),
            None => numeric_jacobian(edge.error_fn.as_ref(), &values, edge.error_dim),
        };
        for (block, id) in blocks.iter().zip(&edge.var_ids) {
            let dim = self.variables[id].dim;
            if block.nrows() != edge.error_dim || block.ncols() != dim {
                return Err(GraphError::InvalidDimension {
                    expected: edge.error_dim * dim,
                    actual: block.nrows() * block.ncols(),
                });
            }
            if !block.iter().all(|x| x.is_finite()) {
                return Err(GraphError::NonFiniteJacobian(edge_id.0));
            }
        }
        Ok(blocks)
    }

    /// Global column index over all non-fixed variables.
    pub fn build_index(&self) -> IndexMap {
        IndexMap::build_with(self, |_| true)
    }

    /// Sum of e^T Ω e over all edges. With indefinite Ω (equality edges) a
    /// summand may be negative; use [`FactorGraph::total_cost_of`] with
    /// [`EdgeClass::Cost`] when a true objective value is needed.
    pub fn total_cost(&self) -> f64 {
        self.edges
            .values()
            .map(|e| self.edge_quadratic(e))
            .sum()
    }

    /// Sum of e^T Ω e restricted to edges of one class.
    pub fn total_cost_of(&self, class: EdgeClass) -> f64 {
        self.edges
            .values()
            .filter(|e| e.class == class)
            .map(|e| self.edge_quadratic(e))
            .sum()
    }

    fn edge_quadratic(&self, edge: &Edge) -> f64 {
        let values = self.edge_values(edge);
        let e = (edge.error_fn)(&values);
        (e.transpose() * &edge.information * &e)[0]
    }

    /// Adds `delta` segments to the values of all indexed variables.
    pub fn apply_step(&mut self, index: &IndexMap, delta: &DVector<f64>) {
        for (id, off) in index.offsets() {
            let var = self.variables.get_mut(&id).expect("indexed variable");
            let dim = var.dim;
            var.value += delta.rows(off, dim);
        }
    }

    /// Snapshot of the indexed variables' values, for step rollback.
    pub(crate) fn save_values(&self, index: &IndexMap) -> Vec<(VarId, DVector<f64>)> {
        index
            .offsets()
            .map(|(id, _)| (id, self.variables[&id].value.clone()))
            .collect()
    }

    pub(crate) fn restore_values(&mut self, saved: &[(VarId, DVector<f64>)]) {
        for (id, value) in saved {
            self.variables.get_mut(id).expect("saved variable").value = value.clone();
        }
    }
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Central finite differences over every coordinate of every connected
/// variable, step `1e-6 * max(1, |x_i|)`.
pub(crate) fn numeric_jacobian(
    f: &(dyn Fn(&[&DVector<f64>]) -> DVector<f64> + Send + Sync),
    values: &[&DVector<f64>],
    error_dim: usize,
) -> Vec<DMatrix<f64>> {
    let mut work: Vec<DVector<f64>> = values.iter().map(|v| (*v).clone()).collect();
    let mut blocks = Vec::with_capacity(values.len());
    for vi in 0..values.len() {
        let dim = values[vi].len();
        let mut block = DMatrix::zeros(error_dim, dim);
        for ci in 0..dim {
            let x = work[vi][ci];
            let h = 1e-6 * x.abs().max(1.0);
            work[vi][ci] = x + h;
            let plus = {
                let refs: Vec<&DVector<f64>> = work.iter().collect();
                f(&refs)
            };
            work[vi][ci] = x - h;
            let minus = {
                let refs: Vec<&DVector<f64>> = work.iter().collect();
                f(&refs)
            };
            work[vi][ci] = x;
            block.set_column(ci, &((plus - minus) / (2.0 * h)));
        }
        blocks.push(block);
    }
    blocks
}
