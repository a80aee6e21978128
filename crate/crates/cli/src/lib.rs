//! Benchmark harness for the vehicle velocity-tracking case study: scenario
//! definitions, timing, reference synthesis, and CSV/JSON report emission.

pub mod report;
pub mod scenario;

pub use report::{emit_report, read_reference_csv, write_reference_csv, ReportFormat};
pub use scenario::{
    compare_methods, run_scenario, synthesize_reference, BenchReport, ComparisonReport,
    RunSettings, Scenario, ScenarioResult,
};
