pub mod config;
pub mod output;
pub mod real;
pub mod synthetic;

pub use config::{Estimator, ExperimentConfig, GroupSpec, RealConfig};
pub use output::{emit_real, emit_sample, emit_sweep, emit_synthetic, Manifest};
pub use real::{run_real_analysis, run_sample, RealAnalysis, SampleFit};
pub use synthetic::{
    results_table, run_replications, run_synthetic_experiment, run_threshold_study, ReplicationRecord, ResultsTable,
    StudyReport,
};
