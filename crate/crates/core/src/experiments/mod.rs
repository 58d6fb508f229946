//! Seeded experiment harness: Lebesgue-ratio studies, exact-recovery phase
//! diagrams, thresholding comparisons and rate measurements, driven by TOML
//! configurations and emitting CSV rows plus a JSON summary.

pub mod config;
pub mod demo;
pub mod report;
pub mod runners;
pub mod targets;

pub use config::{ExperimentConfig, ExperimentKind};
pub use demo::{demo_config, run_demo, DEMOS};
pub use report::{fmt_f64, rows_to_csv, ExperimentReport, Flag, Row, CSV_HEADER, REPORT_SCHEMA_VERSION};
pub use runners::{
    build_dictionary, greedy_config, run_experiment, run_lebesgue, run_phase, run_rate, run_tga_compare,
    ExperimentOutput, TrialRecord,
};
pub use targets::{make_target, trial_rng, TargetInstance};
