//! Synthetic data, seeded sweeps, rate fits, privacy audits and result files.

mod audit;
mod dist;
mod fit;
mod output;
mod runner;
mod spec;

pub use audit::{
    audit_extreme, audit_privacy, wilson, AuditCell, AuditConfig, AuditMechanism, AuditReport,
};
pub use dist::{
    generate, DataKind, Distribution, Generated, LazyLabeledUsers, LazyScalarUsers, LazyVectorUsers,
};
pub use fit::{fit_rate, fit_records, FitField, RateFit};
pub use output::{
    determinism_hash, read_records, records_jsonl, summarize, summary_csv, write_outputs,
    RunMetadata, SummaryRow, METADATA_FILE, RECORDS_FILE, SUMMARY_FILE, SUMMARY_SCHEMA_VERSION,
};
pub use runner::{
    frame_stream, run_sweep, run_sweep_with_workers, run_trial, trial_stream, workers_from_env,
    Diagnostics, TrialRecord, RECORD_SCHEMA_VERSION, WORKERS_ENV,
};
pub use spec::{
    ExperimentSpec, GridPoint, LossName, Options, SweepGrid, Task, SPEC_SCHEMA_VERSION,
};
