//! End-to-end orchestration: synthetic data, staged runs with a manifest,
//! training-size sweeps, and reports.

mod config;
pub mod manifest;
mod report;
pub mod run;
pub mod synthetic;
mod sweep;

pub use config::{ClusterScope, PipelineConfig, SamplingPlan, TeacherKind, TeacherSpec};
pub use manifest::{Manifest, StageRecord, STAGES};
pub use report::cmd_report;
pub use run::{cmd_run, draw_samples, label_samples, run_with_config, AupcSummary, EvalMetrics, RunSummary, SampleFile, TuneResult};
pub use sweep::{cmd_sweep_train_size, SweepRow};
pub use synthetic::{cmd_gen_synthetic, generate, SyntheticInstance, SyntheticSpec};
