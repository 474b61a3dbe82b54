//! Experiment matrix: config, runner, report and charts.

pub mod config;
pub mod plot;
pub mod report;
pub mod runner;
pub mod technique;

pub use config::{ExperimentConfig, ExperimentPlan, PlanFilter};
pub use report::{build_report, report, Report};
pub use runner::{read_results, run_plan, FailureStage, PlanOutcome, ResultRecord, RunResult};
pub use technique::TechniqueId;
