//! Assembly of the global linear system H·Δ = b from edge contributions and
//! its solution, including symmetric indefinite KKT systems.
//!
//! Per edge the contribution is `H_j = J^T Ω J` and `b_j = -J^T Ω e`,
//! scattered to the global positions given by the index map. KKT matrices
//! carry zero diagonal blocks on the multiplier variables, so the solve uses
//! row-pivoted Gaussian elimination rather than Cholesky.

use nalgebra::{DMatrix, DVector};

use crate::error::GraphError;
use crate::graph::{Edge, FactorGraph, IndexMap, VariableKind};

/// The assembled system. Dense backing store: every problem in this repo
/// stays at desk scale (total_dim around a thousand or less).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub h: DMatrix<f64>,
    pub b: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// ‖H·Δ − b‖₂ of the returned step (0 when Singular).
    pub residual_norm: f64,
}

/// Assembles H and b over all edges at the current variable values.
pub fn assemble(graph: &FactorGraph, index: &IndexMap) -> Result<LinearSystem, GraphError> {
    assemble_filtered(graph, index, |_| true)
}

/// Assembles H and b over the edges accepted by `pred`. Variables without an
/// index entry (fixed, or excluded by the index filter) contribute nothing.
pub fn assemble_filtered<F>(
    graph: &FactorGraph,
    index: &IndexMap,
    pred: F,
) -> Result<LinearSystem, GraphError>
where
    F: Fn(&Edge) -> bool,
{
    let n = index.total_dim();
    let mut h = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for edge in graph.edges() {
        if !pred(edge) {
            continue;
        }
        let e = graph.compute_error(edge.id)?;
        let jac = graph.compute_jacobian(edge.id)?;
        let omega_e = &edge.information * &e;
        for (ai, aid) in edge.var_ids.iter().enumerate() {
            let Some(ao) = index.offset(*aid) else {
                continue;
            };
            let ja = &jac[ai];
            let jt_omega = ja.transpose() * &edge.information;
            let mut b_block = b.rows_mut(ao, ja.ncols());
            b_block -= ja.transpose() * &omega_e;
            for (bi, bid) in edge.var_ids.iter().enumerate() {
                let Some(bo) = index.offset(*bid) else {
                    continue;
                };
                let jb = &jac[bi];
                let mut h_block = h.view_mut((ao, bo), (ja.ncols(), jb.ncols()));
                h_block += &jt_omega * jb;
            }
        }
    }
    Ok(LinearSystem { h, b })
}

/// Boolean diagonal mask selecting the columns of variables whose kind is
/// accepted by `pred`; used to restrict LM damping to primal blocks.
pub fn damping_mask<F>(graph: &FactorGraph, index: &IndexMap, pred: F) -> Vec<bool>
where
    F: Fn(VariableKind) -> bool,
{
    let mut mask = vec![false; index.total_dim()];
    for (id, off) in index.offsets() {
        let var = graph.variable(id).expect("indexed variable");
        if pred(var.kind) {
            for slot in mask.iter_mut().skip(off).take(var.dim) {
                *slot = true;
            }
        }
    }
    mask
}

impl LinearSystem {
    /// H + λ·D with D the identity restricted to masked columns; b unchanged.
    pub fn damped(&self, lambda: f64, mask: &[bool]) -> LinearSystem {
        assert!(lambda >= 0.0);
        let mut h = self.h.clone();
        for (i, on) in mask.iter().enumerate() {
            if *on {
                h[(i, i)] += lambda;
            }
        }
        LinearSystem {
            h,
            b: self.b.clone(),
        }
    }

    /// Solves H·Δ = b by Gaussian elimination with partial (row) pivoting
    /// followed by iterative refinement. A pivot smaller than
    /// `1e-12 · max|H|` declares the system Singular, which for KKT systems
    /// signals a rank-deficient constraint Jacobian.
    pub fn solve_symmetric_indefinite(&self) -> (Option<DVector<f64>>, SolveReport) {
        let n = self.h.nrows();
        if n == 0 {
            return (
                Some(DVector::zeros(0)),
                SolveReport {
                    status: SolveStatus::Solved,
                    residual_norm: 0.0,
                },
            );
        }
        let Some(factors) = LuFactors::factor(&self.h) else {
            return (
                None,
                SolveReport {
                    status: SolveStatus::Singular,
                    residual_norm: 0.0,
                },
            );
        };
        let mut delta = factors.solve(&self.b);
        let mut residual = &self.b - &self.h * &delta;
        // refinement recovers the residual accuracy lost on ill-conditioned
        // systems; two sweeps suffice at condition numbers up to ~1e8
        for _ in 0..2 {
            let norm = residual.norm();
            if norm <= 1e-12 * (1.0 + self.b.norm()) {
                break;
            }
            let correction = factors.solve(&residual);
            let refined = &delta + &correction;
            let refined_residual = &self.b - &self.h * &refined;
            if refined_residual.norm() >= norm {
                break;
            }
            delta = refined;
            residual = refined_residual;
        }
        let residual_norm = residual.norm();
        (
            Some(delta),
            SolveReport {
                status: SolveStatus::Solved,
                residual_norm,
            },
        )
    }
}

/// Row-pivoted LU factors in a row-major store (elimination walks rows,
/// which the column-major DMatrix layout penalizes).
struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    /// Returns None when a pivot falls below `1e-12 · max|H|`.
    fn factor(h: &DMatrix<f64>) -> Option<Self> {
        let n = h.nrows();
        let tol = 1e-12 * h.amax();
        let mut lu = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                lu[i * n + j] = h[(i, j)];
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut pivot_row = k;
            let mut pivot_mag = lu[k * n + k].abs();
            for r in (k + 1)..n {
                let mag = lu[r * n + k].abs();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = r;
                }
            }
            if pivot_mag <= tol {
                return None;
            }
            if pivot_row != k {
                for c in 0..n {
                    lu.swap(k * n + c, pivot_row * n + c);
                }
                perm.swap(k, pivot_row);
            }
            let pivot = lu[k * n + k];
            for r in (k + 1)..n {
                let factor = lu[r * n + k] / pivot;
                if factor == 0.0 {
                    continue;
                }
                lu[r * n + k] = factor;
                for c in (k + 1)..n {
                    lu[r * n + c] -= factor * lu[k * n + c];
                }
            }
        }
        Some(LuFactors { n, lu, perm })
    }

    #[allow(clippy::needless_range_loop)]
    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for k in 0..n {
            let xk = x[k];
            if xk == 0.0 {
                continue;
            }
            for r in (k + 1)..n {
                x[r] -= self.lu[r * n + k] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut sum = x[k];
            for c in (k + 1)..n {
                sum -= self.lu[k * n + c] * x[c];
            }
            x[k] = sum / self.lu[k * n + k];
        }
        DVector::from_vec(x)
    }
}
