//! Command-line benchmark harness for the constrained factor-graph solver.
//!
//! Exit codes: 0 on success, 1 on solver failure, 2 on usage errors.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eqgraph::{ALConfig, OcpWeights, ReferenceTrajectory, SolverConfig, VehicleParams};
use eqgraph_cli::{
    compare_methods, emit_report, read_reference_csv, run_scenario, synthesize_reference,
    BenchReport, ReportFormat, RunSettings, Scenario,
};

#[derive(Parser)]
#[command(name = "eqgraph", version, about = "Equality-constrained factor-graph OCP benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single scenario and report it.
    Solve(SolveArgs),
    /// Run a scenario x horizon grid.
    Bench(BenchArgs),
    /// Compare the KKT and AL methods on the identical nonlinear problem.
    Compare(CompareArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Horizon length (number of reference samples).
    #[arg(long, default_value_t = 385)]
    n: usize,
    /// Repeats for wall-time averaging.
    #[arg(long, default_value_t = 100)]
    repeats: usize,
    /// Load the reference trajectory from a CSV with header `t,velocity`.
    #[arg(long, value_name = "PATH")]
    ref_csv: Option<PathBuf>,
    /// Seed for the synthetic reference generator.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Step-norm stopping tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Iteration budget (outer iterations for AL).
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// AL initial penalty parameter.
    #[arg(long, default_value_t = 10.0)]
    rho_init: f64,
    /// AL penalty cap.
    #[arg(long, default_value_t = 50000.0)]
    rho_max: f64,
    /// AL penalty growth factor.
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    /// AL inner-iteration limit per outer iteration.
    #[arg(long, default_value_t = 1)]
    inner_max: usize,
    /// AL constraint-violation tolerance.
    #[arg(long, default_value_t = 1e-6)]
    constraint_tol: f64,

    /// Effective mass including rotational inertia (kg).
    #[arg(long, default_value_t = 1700.0)]
    mass: f64,
    /// Vehicle mass (kg).
    #[arg(long, default_value_t = 1600.0)]
    mass_vehicle: f64,
    /// Sampling time (s).
    #[arg(long, default_value_t = 1.0)]
    dt: f64,
    /// Road slope (rad).
    #[arg(long, default_value_t = 0.0)]
    slope: f64,
    /// Air density (kg/m^3).
    #[arg(long, default_value_t = 1.206)]
    air_density: f64,
    /// Frontal area (m^2).
    #[arg(long, default_value_t = 2.4)]
    frontal_area: f64,
    /// Air-drag coefficient.
    #[arg(long, default_value_t = 0.32)]
    drag_coeff: f64,
    /// Rolling-resistance coefficient.
    #[arg(long, default_value_t = 0.009)]
    rolling_coeff: f64,
    /// Gravitational acceleration (m/s^2).
    #[arg(long, default_value_t = 9.81)]
    gravity: f64,

    /// Terminal state weight P.
    #[arg(long, default_value_t = 1000.0)]
    weight_p: f64,
    /// State-tracking weight Q.
    #[arg(long, default_value_t = 1000.0)]
    weight_q: f64,
    /// Input weight R.
    #[arg(long, default_value_t = 0.0007)]
    weight_r: f64,
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario name: unconstrained, kkt-linear, kkt-nonlinear, al-linear,
    /// al-nonlinear, or soft-<weight>.
    #[arg(long)]
    scenario: Scenario,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Scenarios to run (defaults to the five comparison scenarios).
    #[arg(long, value_delimiter = ',')]
    scenario: Vec<Scenario>,
    /// Horizon lengths to run.
    #[arg(long, value_delimiter = ',', default_values_t = [5usize, 100, 385])]
    horizons: Vec<usize>,
    /// Run independent scenarios on separate threads. Timing is less honest
    /// under contention, so this is opt-in.
    #[arg(long, default_value_t = false)]
    parallel: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

impl CommonArgs {
    fn settings(&self) -> RunSettings {
        RunSettings {
            params: VehicleParams {
                m: self.mass,
                m_v: self.mass_vehicle,
                g: self.gravity,
                theta: self.slope,
                rho_a: self.air_density,
                a_f: self.frontal_area,
                c_a: self.drag_coeff,
                c_r: self.rolling_coeff,
                dt: self.dt,
            },
            weights: OcpWeights {
                p: self.weight_p,
                q: self.weight_q,
                r: self.weight_r,
            },
            solver: SolverConfig {
                max_iterations: self.max_iters,
                step_norm_tol: self.tol,
                ..SolverConfig::default()
            },
            al: ALConfig {
                rho_init: self.rho_init,
                rho_max: self.rho_max,
                alpha: self.alpha,
                inner_max_iterations: self.inner_max,
                constraint_tol: self.constraint_tol,
                outer_max_iterations: self.max_iters,
                step_norm_tol: self.tol,
            },
        }
    }

    fn reference(&self, n: usize) -> io::Result<ReferenceTrajectory> {
        match &self.ref_csv {
            Some(path) => read_reference_csv(path),
            None => Ok(synthesize_reference(n, self.dt, self.seed)),
        }
    }

    fn write_reports(&self, reports: &[BenchReport]) -> io::Result<()> {
        match &self.out {
            Some(path) => {
                let mut file = File::create(path)?;
                emit_report(reports, self.format.into(), &mut file)
            }
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                emit_report(reports, self.format.into(), &mut lock)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(all_solved) => {
            if all_solved {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            let _ = writeln!(io::stderr(), "error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> io::Result<bool> {
    match cli.command {
        Command::Solve(args) => {
            let settings = args.common.settings();
            let reference = args.common.reference(args.common.n)?;
            let result = run_scenario(args.scenario, &reference, args.common.repeats, &settings)
                .map_err(to_io)?;
            let ok = result.succeeded();
            args.common.write_reports(&[result.report])?;
            Ok(ok)
        }
        Command::Bench(args) => {
            let settings = args.common.settings();
            let scenarios = if args.scenario.is_empty() {
                Scenario::PAPER_SET.to_vec()
            } else {
                args.scenario.clone()
            };
            let mut grid: Vec<(Scenario, usize)> = Vec::new();
            for &n in &args.horizons {
                for &s in &scenarios {
                    grid.push((s, n));
                }
            }
            let results: Vec<io::Result<BenchReport>> = if args.parallel {
                std::thread::scope(|scope| {
                    let handles: Vec<_> = grid
                        .iter()
                        .map(|&(s, n)| {
                            let settings = settings.clone();
                            let common = &args.common;
                            scope.spawn(move || {
                                let reference = common.reference(n)?;
                                run_scenario(s, &reference, common.repeats, &settings)
                                    .map(|r| r.report)
                                    .map_err(to_io)
                            })
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("scenario thread"))
                        .collect()
                })
            } else {
                grid.iter()
                    .map(|&(s, n)| {
                        let reference = args.common.reference(n)?;
                        run_scenario(s, &reference, args.common.repeats, &settings)
                            .map(|r| r.report)
                            .map_err(to_io)
                    })
                    .collect()
            };
            let mut reports = Vec::new();
            for r in results {
                reports.push(r?);
            }
            let ok = reports.iter().all(|r| r.termination != "SolverFailure");
            args.common.write_reports(&reports)?;
            Ok(ok)
        }
        Command::Compare(args) => {
            let settings = args.common.settings();
            let reference = args.common.reference(args.common.n)?;
            let comparison =
                compare_methods(&reference, args.common.repeats, &settings).map_err(to_io)?;
            let ok = comparison.kkt.termination != "SolverFailure"
                && comparison.al.termination != "SolverFailure";
            match args.common.format {
                FormatArg::Json => {
                    let text = serde_json::to_string_pretty(&comparison)?;
                    match &args.common.out {
                        Some(path) => std::fs::write(path, text + "\n")?,
                        None => println!("{text}"),
                    }
                }
                FormatArg::Csv => {
                    args.common
                        .write_reports(&[comparison.kkt.clone(), comparison.al.clone()])?;
                    eprintln!(
                        "rmse={} m/s, iteration ratio AL/KKT={:.3}, per-iteration time ratio KKT/AL={:.3}",
                        comparison.rmse_m_per_s,
                        comparison.iteration_ratio_al_over_kkt,
                        comparison.time_per_iteration_ratio_kkt_over_al
                    );
                }
            }
            Ok(ok)
        }
    }
}

fn to_io(err: eqgraph::GraphError) -> io::Error {
    io::Error::other(err.to_string())
}
