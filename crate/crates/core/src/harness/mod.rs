//! Experiments on top of the simulator: log generation, agent training,
//! online A/B tests, counterfactual probes, attribution ranking and reports.

pub mod abtest;
pub mod experiment;
pub mod probe;
pub mod ranking;
pub mod report;
pub mod run;
pub mod scenario;
pub mod simulate;
pub mod stats;

pub use experiment::ExperimentSpec;
pub use report::{emit_report, MetricsReport};
pub use run::{generate_logs, rank_schemes, run_ab_test, run_probe, train_agents, training_attribution, HarnessError};
