//! Experiment orchestration: specs, per-trial simulation, aggregation,
//! parallel scheduling and persistence.
//!
//! Trial `i` of an experiment always draws from the stream
//! `(master_seed, i)` (identity experiments use `2i` and `2i + 1` for their
//! two sides), so a report depends only on the spec, never on the worker
//! count or the order in which trials finish.

mod aggregate;
mod persist;
mod runner;
mod spec;
mod trial;

pub use aggregate::{
    Aggregate, BlockPoint, BlockSummary, CouplingSummary, CurvePoint, FirstViolation, FitSummary,
    IdentitySummary, Report, SpeedSummary, Summary, SCHEMA_VERSION,
};
pub use persist::{
    emit_plot_data, load_records, load_report, persist_report, BLOCK_FILE, CONFIG_FILE, CURVE_FILE,
    RECORDS_FILE, SPEC_FILE, SUMMARY_FILE,
};
pub use runner::{
    run_block_experiment, run_coupling_audit, run_experiment, run_fit_alpha_experiment,
    run_identity_experiment, run_resumable, run_speed_experiment, RunOptions,
};
pub use spec::{ExperimentKind, ExperimentSpec, InitialData};
pub use trial::{run_trial, run_trial_traced, TrialOutcome, TrialRecord, Violation};
