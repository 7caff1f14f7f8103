//! Experiment orchestration: spec files, the Monte-Carlo driver, and the
//! Lipschitz comparison.

pub mod lipschitz;
pub mod run;
pub mod spec;

pub use lipschitz::{experiment_lipschitz, LipschitzReport, LipschitzSpec};
pub use run::{run_experiment, ExperimentSummary, RunRecord, SummaryRow};
pub use spec::{ExperimentSpec, Preset, Sweep, SweepParam};
