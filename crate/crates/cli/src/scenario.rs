//! Scenario execution: builds the OCP graph for one of the comparison
//! scenarios, solves it repeatedly for timing, and collects iteration and
//! feasibility figures.
//!
//! Timing measures the solve only; graph construction happens outside the
//! timed section. Solver output is deterministic across repeats, so the
//! iteration count is taken from the first run and asserted equal on the
//! rest.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use eqgraph::{
    build_ocp_graph, fit_linearization, optimize_augmented_lagrangian, optimize_gauss_newton,
    optimize_kkt_gauss_newton, rmse, ALConfig, ConstraintMethod, DynamicsMode, GraphError,
    IterationStats, OcpGraph, OcpWeights, ReferenceTrajectory, SolverConfig, Termination,
    VehicleParams,
};

/// The comparison scenarios: an unconstrained baseline, the KKT equality-edge
/// method and the Augmented Lagrangian method (each with linearized and
/// nonlinear dynamics), plus an optional soft-constraint baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scenario {
    Unconstrained,
    KktLinear,
    KktNonlinear,
    AlLinear,
    AlNonlinear,
    Soft(f64),
}

impl Scenario {
    pub const PAPER_SET: [Scenario; 5] = [
        Scenario::Unconstrained,
        Scenario::KktLinear,
        Scenario::KktNonlinear,
        Scenario::AlLinear,
        Scenario::AlNonlinear,
    ];

    fn uses_linearized_dynamics(&self) -> bool {
        matches!(self, Scenario::KktLinear | Scenario::AlLinear)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Unconstrained => write!(f, "unconstrained"),
            Scenario::KktLinear => write!(f, "kkt-linear"),
            Scenario::KktNonlinear => write!(f, "kkt-nonlinear"),
            Scenario::AlLinear => write!(f, "al-linear"),
            Scenario::AlNonlinear => write!(f, "al-nonlinear"),
            Scenario::Soft(w) => write!(f, "soft-{w}"),
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unconstrained" => Ok(Scenario::Unconstrained),
            "kkt-linear" => Ok(Scenario::KktLinear),
            "kkt-nonlinear" => Ok(Scenario::KktNonlinear),
            "al-linear" => Ok(Scenario::AlLinear),
            "al-nonlinear" => Ok(Scenario::AlNonlinear),
            other => {
                if let Some(w) = other.strip_prefix("soft-") {
                    let weight: f64 = w
                        .parse()
                        .map_err(|_| format!("invalid soft weight: {w}"))?;
                    if weight <= 0.0 {
                        return Err(format!("soft weight must be positive, got {weight}"));
                    }
                    Ok(Scenario::Soft(weight))
                } else {
                    Err(format!(
                        "unknown scenario '{other}' (expected unconstrained, kkt-linear, \
                         kkt-nonlinear, al-linear, al-nonlinear, or soft-<weight>)"
                    ))
                }
            }
        }
    }
}

/// Everything a scenario run needs besides the scenario itself.
#[derive(Debug, Clone, Default)]
pub struct RunSettings {
    pub params: VehicleParams,
    pub weights: OcpWeights,
    pub solver: SolverConfig,
    pub al: ALConfig,
}

/// One row of the benchmark report.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub scenario: String,
    pub n: usize,
    pub iterations: usize,
    pub mean_iter_time_s: f64,
    pub total_time_s: f64,
    pub constraint_violation: f64,
    pub rmse_vs_kkt: Option<f64>,
    pub termination: String,
}

/// Scenario outcome: the report row plus the solved trajectories.
pub struct ScenarioResult {
    pub report: BenchReport,
    pub trajectory: Vec<f64>,
    pub inputs: Vec<f64>,
    pub stats: IterationStats,
}

impl ScenarioResult {
    pub fn succeeded(&self) -> bool {
        self.report.termination != Termination::SolverFailure.to_string()
    }
}

fn dynamics_mode(scenario: Scenario, reference: &ReferenceTrajectory) -> DynamicsMode {
    if scenario.uses_linearized_dynamics() {
        let (p1, p2) = fit_linearization(reference.mean());
        DynamicsMode::Linearized { p1, p2 }
    } else {
        DynamicsMode::Nonlinear
    }
}

fn constraint_method(scenario: Scenario) -> ConstraintMethod {
    match scenario {
        Scenario::Unconstrained => ConstraintMethod::Unconstrained,
        Scenario::KktLinear | Scenario::KktNonlinear => ConstraintMethod::Kkt,
        Scenario::AlLinear | Scenario::AlNonlinear => ConstraintMethod::Al,
        Scenario::Soft(w) => ConstraintMethod::Soft(w),
    }
}

fn solve(ocp: &mut OcpGraph, scenario: Scenario, settings: &RunSettings) -> IterationStats {
    match scenario {
        Scenario::Unconstrained | Scenario::Soft(_) => {
            optimize_gauss_newton(&mut ocp.graph, &settings.solver)
        }
        Scenario::KktLinear | Scenario::KktNonlinear => {
            optimize_kkt_gauss_newton(&mut ocp.graph, &settings.solver)
        }
        Scenario::AlLinear | Scenario::AlNonlinear => {
            optimize_augmented_lagrangian(&mut ocp.graph, &settings.al)
        }
    }
}

/// Builds and solves the scenario `repeats` times, timing each solve, and
/// reports the mean wall time, iteration count, and the ∞-norm dynamics
/// residual of the final trajectory (for the unconstrained baseline this is
/// the unenforced residual).
pub fn run_scenario(
    scenario: Scenario,
    reference: &ReferenceTrajectory,
    repeats: usize,
    settings: &RunSettings,
) -> Result<ScenarioResult, GraphError> {
    let repeats = repeats.max(1);
    let mode = dynamics_mode(scenario, reference);
    let method = constraint_method(scenario);

    let mut total_time = 0.0;
    let mut last: Option<(OcpGraph, IterationStats)> = None;
    for _ in 0..repeats {
        let mut ocp = build_ocp_graph(reference, &settings.params, &settings.weights, mode, method)?;
        let start = Instant::now();
        let stats = solve(&mut ocp, scenario, settings);
        total_time += start.elapsed().as_secs_f64();
        if let Some((_, first)) = &last {
            debug_assert_eq!(stats.iterations, first.iterations);
        }
        last = Some((ocp, stats));
    }
    let (ocp, stats) = last.expect("at least one repeat");

    let mean_solve_time = total_time / repeats as f64;
    let mean_iter_time_s = if stats.iterations > 0 {
        mean_solve_time / stats.iterations as f64
    } else {
        0.0
    };
    Ok(ScenarioResult {
        report: BenchReport {
            scenario: scenario.to_string(),
            n: reference.len(),
            iterations: stats.iterations,
            mean_iter_time_s,
            total_time_s: mean_solve_time,
            constraint_violation: ocp.dynamics_residual_inf(),
            rmse_vs_kkt: None,
            termination: stats.termination.to_string(),
        },
        trajectory: ocp.velocity_trajectory(),
        inputs: ocp.inputs(),
        stats,
    })
}

/// Side-by-side comparison of the KKT and AL methods on the identical
/// nonlinear problem: trajectory RMSE, iteration ratio, and per-iteration
/// time ratio.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub kkt: BenchReport,
    pub al: BenchReport,
    pub rmse_m_per_s: f64,
    pub iteration_ratio_al_over_kkt: f64,
    pub time_per_iteration_ratio_kkt_over_al: f64,
}

pub fn compare_methods(
    reference: &ReferenceTrajectory,
    repeats: usize,
    settings: &RunSettings,
) -> Result<ComparisonReport, GraphError> {
    let kkt = run_scenario(Scenario::KktNonlinear, reference, repeats, settings)?;
    let mut al = run_scenario(Scenario::AlNonlinear, reference, repeats, settings)?;
    let traj_rmse = rmse(&al.trajectory, &kkt.trajectory)?;
    al.report.rmse_vs_kkt = Some(traj_rmse);
    Ok(ComparisonReport {
        rmse_m_per_s: traj_rmse,
        iteration_ratio_al_over_kkt: al.report.iterations as f64 / kkt.report.iterations as f64,
        time_per_iteration_ratio_kkt_over_al: kkt.report.mean_iter_time_s
            / al.report.mean_iter_time_s,
        kkt: kkt.report,
        al: al.report,
    })
}

/// Deterministic piecewise ramp/hold velocity profile in [0, 30] m/s.
/// The same seed always yields the same profile.
pub fn synthesize_reference(n: usize, dt: f64, seed: u64) -> ReferenceTrajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    let mut current = rng.random_range(5.0..15.0);
    while samples.len() < n {
        let hold = rng.random_bool(0.4);
        let segment_len = rng.random_range(20..=60usize).min(n - samples.len());
        if hold {
            for _ in 0..segment_len {
                samples.push(current);
            }
        } else {
            let target: f64 = rng.random_range(0.0..30.0);
            let start = current;
            for i in 1..=segment_len {
                let alpha = i as f64 / segment_len as f64;
                samples.push((start + alpha * (target - start)).clamp(0.0, 30.0));
            }
            current = *samples.last().expect("non-empty segment");
        }
    }
    samples.truncate(n);
    ReferenceTrajectory { samples, dt }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::PAPER_SET {
            assert_eq!(s.to_string().parse::<Scenario>().unwrap(), s);
        }
        assert_eq!(
            "soft-1000".parse::<Scenario>().unwrap(),
            Scenario::Soft(1000.0)
        );
        assert!("bogus".parse::<Scenario>().is_err());
        assert!("soft--1".parse::<Scenario>().is_err());
    }

    #[test]
    fn synthesized_reference_is_deterministic() {
        let a = synthesize_reference(385, 1.0, 42);
        let b = synthesize_reference(385, 1.0, 42);
        assert_eq!(a.samples, b.samples);
        assert_ne!(
            a.samples,
            synthesize_reference(385, 1.0, 43).samples,
            "different seeds should give different profiles"
        );
    }

    #[test]
    fn synthesized_reference_stays_in_range() {
        let r = synthesize_reference(385, 1.0, 7);
        assert!(r.samples.iter().all(|&v| (0.0..=30.0).contains(&v)));
    }

    #[test]
    fn synthesized_reference_has_requested_length() {
        assert_eq!(synthesize_reference(5, 1.0, 1).len(), 5);
        assert_eq!(synthesize_reference(100, 1.0, 1).len(), 100);
    }

    #[test]
    fn kkt_linear_small_horizon_takes_two_iterations() {
        let reference = synthesize_reference(5, 1.0, 42);
        let result = run_scenario(
            Scenario::KktLinear,
            &reference,
            1,
            &RunSettings::default(),
        )
        .unwrap();
        assert_eq!(result.report.iterations, 2);
        assert_eq!(result.report.termination, "StepTolerance");
    }

    #[test]
    fn rmse_of_a_trajectory_with_itself_is_zero() {
        let reference = synthesize_reference(20, 1.0, 3);
        let a = run_scenario(Scenario::KktLinear, &reference, 1, &RunSettings::default()).unwrap();
        assert_eq!(rmse(&a.trajectory, &a.trajectory).unwrap(), 0.0);
    }
}
