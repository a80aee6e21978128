//! Longitudinal vehicle velocity-tracking optimal control.
//!
//! A horizon of N reference samples produces scalar state variables
//! `x_1..x_{N-1}` (velocities) and input variables `u_0..u_{N-2}` (drive
//! forces). The initial velocity `x_0` is fixed to the first reference
//! sample and is not a variable. Tracking costs weight the state deviation
//! from the reference (Q, terminal P) and the input magnitude (R); the
//! discrete dynamics
//!
//! ```text
//! x_{k+1} = x_k + (δt/m)·(u_k − F_resist(x_k))
//! ```
//!
//! couple consecutive states and can be attached as exact equality
//! constraints, as weighted soft constraints, or omitted entirely.

use std::sync::Arc;

use nalgebra::{dmatrix, dvector, DVector};

use crate::error::GraphError;
use crate::graph::{FactorGraph, VarId, VariableKind};

/// Physical parameters of the longitudinal model. The defaults are
/// representative passenger-car values; all fields are overridable.
#[derive(Debug, Clone, Copy)]
pub struct VehicleParams {
    /// Effective mass including rotational inertia of the powertrain (kg).
    pub m: f64,
    /// Vehicle mass (kg).
    pub m_v: f64,
    /// Gravitational acceleration (m/s²).
    pub g: f64,
    /// Road slope (rad).
    pub theta: f64,
    /// Air density (kg/m³).
    pub rho_a: f64,
    /// Frontal area (m²).
    pub a_f: f64,
    /// Air-drag coefficient.
    pub c_a: f64,
    /// Rolling-resistance coefficient.
    pub c_r: f64,
    /// Sampling time δt (s).
    pub dt: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            m: 1700.0,
            m_v: 1600.0,
            g: 9.81,
            theta: 0.0,
            rho_a: 1.206,
            a_f: 2.4,
            c_a: 0.32,
            c_r: 0.009,
            dt: 1.0,
        }
    }
}

/// Tracking weights (scalar state/input case).
#[derive(Debug, Clone, Copy)]
pub struct OcpWeights {
    /// Terminal state weight.
    pub p: f64,
    /// Intermediate state-tracking weight.
    pub q: f64,
    /// Input weight.
    pub r: f64,
}

impl Default for OcpWeights {
    fn default() -> Self {
        Self {
            p: 1000.0,
            q: 1000.0,
            r: 0.0007,
        }
    }
}

/// Reference velocity profile sampled at fixed rate.
#[derive(Debug, Clone)]
pub struct ReferenceTrajectory {
    pub samples: Vec<f64>,
    pub dt: f64,
}

impl ReferenceTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.samples.iter().sum::<f64>() / self.samples.len() as f64
        }
    }
}

/// Dynamics variant: the aerodynamic term uses v² (nonlinear) or the
/// tangent-line surrogate p1 + p2·v.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DynamicsMode {
    Nonlinear,
    Linearized { p1: f64, p2: f64 },
}

/// How the dynamics coupling enters the factor graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintMethod {
    /// Dynamics omitted: inputs decouple, states track the reference freely.
    Unconstrained,
    /// Equality edges with multiplier nodes (solved by KKT Gauss-Newton).
    Kkt,
    /// Equality constraints handled by the Augmented Lagrangian loop.
    Al,
    /// Weighted cost edges with the given weight.
    Soft(f64),
}

/// Total resistance force (gravity + aerodynamic drag + rolling), nonlinear
/// in the velocity.
pub fn resistance_force(v: f64, params: &VehicleParams) -> f64 {
    resistance_force_mode(v, params, DynamicsMode::Nonlinear)
}

/// Resistance force with the aerodynamic v² term replaced per mode.
pub fn resistance_force_mode(v: f64, params: &VehicleParams, mode: DynamicsMode) -> f64 {
    let v_sq = match mode {
        DynamicsMode::Nonlinear => v * v,
        DynamicsMode::Linearized { p1, p2 } => p1 + p2 * v,
    };
    params.m_v * params.g * params.theta.sin()
        + 0.5 * params.rho_a * params.a_f * params.c_a * v_sq
        + params.m_v * params.g * params.c_r * params.theta.cos()
}

/// d F_resist / d v for the given mode.
pub fn resistance_force_derivative(v: f64, params: &VehicleParams, mode: DynamicsMode) -> f64 {
    let dv_sq = match mode {
        DynamicsMode::Nonlinear => 2.0 * v,
        DynamicsMode::Linearized { p2, .. } => p2,
    };
    0.5 * params.rho_a * params.a_f * params.c_a * dv_sq
}

/// Explicit Euler step `x + (δt/m)·(u − F_resist(x))`.
pub fn dynamics_step(x: f64, u: f64, params: &VehicleParams, mode: DynamicsMode) -> f64 {
    x + params.dt / params.m * (u - resistance_force_mode(x, params, mode))
}

/// Tangent-line fit of v² at `v_nominal`: `p2 = 2·v_nominal`,
/// `p1 = −v_nominal²`, matching value and slope at the nominal point.
pub fn fit_linearization(v_nominal: f64) -> (f64, f64) {
    (-v_nominal * v_nominal, 2.0 * v_nominal)
}

/// The built OCP graph plus the handles needed to read the solution back.
pub struct OcpGraph {
    pub graph: FactorGraph,
    pub state_ids: Vec<VarId>,
    pub input_ids: Vec<VarId>,
    pub x0: f64,
    pub params: VehicleParams,
    pub mode: DynamicsMode,
}

impl OcpGraph {
    /// Optimized states x_1..x_{N-1}.
    pub fn states(&self) -> Vec<f64> {
        self.state_ids
            .iter()
            .map(|id| self.graph.variable(*id).expect("state").value[0])
            .collect()
    }

    /// Optimized inputs u_0..u_{N-2}.
    pub fn inputs(&self) -> Vec<f64> {
        self.input_ids
            .iter()
            .map(|id| self.graph.variable(*id).expect("input").value[0])
            .collect()
    }

    /// Velocity trajectory including the fixed initial state: [x_0, x_1, ...].
    pub fn velocity_trajectory(&self) -> Vec<f64> {
        let mut traj = Vec::with_capacity(self.state_ids.len() + 1);
        traj.push(self.x0);
        traj.extend(self.states());
        traj
    }

    /// ∞-norm of the dynamics residual of the current (states, inputs) pair.
    pub fn dynamics_residual_inf(&self) -> f64 {
        dynamics_residual_inf(
            &self.velocity_trajectory(),
            &self.inputs(),
            &self.params,
            self.mode,
        )
    }
}

/// Builds the tracking OCP factor graph for the given attachment method.
/// States are initialized at the initial velocity x_0, inputs at zero.
pub fn build_ocp_graph(
    reference: &ReferenceTrajectory,
    params: &VehicleParams,
    weights: &OcpWeights,
    mode: DynamicsMode,
    method: ConstraintMethod,
) -> Result<OcpGraph, GraphError> {
    let n = reference.len();
    if n < 2 {
        return Err(GraphError::InvalidHorizon(n));
    }
    let x0 = reference.samples[0];
    let params = *params;
    let mut graph = FactorGraph::new();
    let mut state_ids = Vec::with_capacity(n - 1);
    let mut input_ids = Vec::with_capacity(n - 1);

    // interleave x_k, u_{k-1} and the step-(k-1) constraint so the
    // assembled system stays narrowly banded
    for k in 1..n {
        let r_k = reference.samples[k];
        let x_k = graph.add_variable(1, dvector![x0], false, VariableKind::Primal)?;
        let u_prev = graph.add_variable(1, dvector![0.0], false, VariableKind::Primal)?;
        state_ids.push(x_k);
        input_ids.push(u_prev);

        let state_weight = if k == n - 1 { weights.p } else { weights.q };
        graph.add_edge(
            vec![x_k],
            dmatrix![state_weight],
            Arc::new(move |vals: &[&DVector<f64>]| dvector![vals[0][0] - r_k]),
            Some(Arc::new(|_: &[&DVector<f64>]| vec![dmatrix![1.0]])),
        )?;
        graph.add_edge(
            vec![u_prev],
            dmatrix![weights.r],
            Arc::new(|vals: &[&DVector<f64>]| dvector![vals[0][0]]),
            Some(Arc::new(|_: &[&DVector<f64>]| vec![dmatrix![1.0]])),
        )?;

        // dynamics coupling for step k-1
        let (var_ids, h_fn, jac_fn): (
            Vec<VarId>,
            crate::constraints::ConstraintFn,
            crate::constraints::ConstraintJacobianFn,
        ) = if k == 1 {
            // h = x_1 − step(x_0, u_0) with x_0 a fixed parameter
            (
                vec![x_k, u_prev],
                Arc::new(move |vals: &[&DVector<f64>]| {
                    dvector![vals[0][0] - dynamics_step(x0, vals[1][0], &params, mode)]
                }),
                Arc::new(move |_: &[&DVector<f64>]| {
                    vec![dmatrix![1.0], dmatrix![-params.dt / params.m]]
                }),
            )
        } else {
            let x_prev = state_ids[k - 2];
            (
                vec![x_prev, x_k, u_prev],
                Arc::new(move |vals: &[&DVector<f64>]| {
                    dvector![vals[1][0] - dynamics_step(vals[0][0], vals[2][0], &params, mode)]
                }),
                Arc::new(move |vals: &[&DVector<f64>]| {
                    let d_prev = -1.0
                        + params.dt / params.m
                            * resistance_force_derivative(vals[0][0], &params, mode);
                    vec![
                        dmatrix![d_prev],
                        dmatrix![1.0],
                        dmatrix![-params.dt / params.m],
                    ]
                }),
            )
        };
        match method {
            ConstraintMethod::Unconstrained => {}
            ConstraintMethod::Kkt | ConstraintMethod::Al => {
                graph.add_equality_constraint(var_ids, h_fn, 1, Some(jac_fn))?;
            }
            ConstraintMethod::Soft(weight) => {
                graph.add_soft_constraint(var_ids, h_fn, 1, weight, Some(jac_fn))?;
            }
        }
    }

    Ok(OcpGraph {
        graph,
        state_ids,
        input_ids,
        x0,
        params,
        mode,
    })
}

/// Forward simulation of the dynamics under `u_sequence` starting at `x0`.
/// Returns the full trajectory [x_0, x_1, ..., x_len(u)].
pub fn rollout(
    u_sequence: &[f64],
    x0: f64,
    params: &VehicleParams,
    mode: DynamicsMode,
) -> Vec<f64> {
    let mut traj = Vec::with_capacity(u_sequence.len() + 1);
    traj.push(x0);
    let mut x = x0;
    for &u in u_sequence {
        x = dynamics_step(x, u, params, mode);
        traj.push(x);
    }
    traj
}

/// ∞-norm of `x_{k+1} − step(x_k, u_k)` over the trajectory.
pub fn dynamics_residual_inf(
    trajectory: &[f64],
    inputs: &[f64],
    params: &VehicleParams,
    mode: DynamicsMode,
) -> f64 {
    inputs
        .iter()
        .enumerate()
        .map(|(k, &u)| (trajectory[k + 1] - dynamics_step(trajectory[k], u, params, mode)).abs())
        .fold(0.0, f64::max)
}

/// Root mean squared error between two equal-length trajectories.
pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64, GraphError> {
    if a.len() != b.len() {
        return Err(GraphError::InvalidInput(format!(
            "trajectory lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let sum_sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum_sq / a.len() as f64).sqrt())
}
