//! Reproducible experiment sweeps and their reports.

mod config;
mod report;
mod run;

pub use config::{Cell, DataSplits, DatasetDescriptor, ExperimentConfig, RunConfig};
pub use report::{
    compare_sweep_timing, compare_timing, emit_specialization_report, emit_sweep_table, reference,
    specialization_report,
    MemberMajority, SpecializationReport, TimingComparison, SUMMARY_COLUMNS, SWEEP_COLUMNS,
};
pub use run::{persist, rerun, run_cell, run_experiment, write_run_dir, CellFailure, RecordWithEnsemble, RunRecord, SweepOutcome};
