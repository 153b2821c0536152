//! Experiment harness: initial data, persisted runs, growth fits against
//! regime envelopes, norm-equivalence probes and convergence studies.
//!
//! A run directory holds `manifest.json`, `series.ndjson`, `checkpoint.bin`
//! and, once reported, `report.json` and `plots/*.svg`. Formats are
//! documented in the repository README.

mod convergence;
mod fit;
mod init;
mod plot;
mod probe;
mod report;
mod run;

pub use convergence::{convergence_study, verify_identity, ConvergenceReport, Level, Slope, MIN_LEVELS, ROUNDOFF_DRIFT};
pub use fit::{
    envelope, fit_growth, window_sensitivity, Envelope, GrowthFit, GrowthModel, ENVELOPE_MARGIN, MIN_FIT_SAMPLES,
};
pub use init::{make_initial, InitSpec};
pub use plot::LinePlot;
pub use probe::{
    defect_norm, dt_power_defect, norm_equivalence_probe, probe_ratios, residual_subordination, ProbeReport,
    RatioStats, SubordinationReport,
};
pub use report::{
    build_report, write_report, ColumnFit, ColumnSummary, FitOptions, H1Bound, Report, DEFAULT_FIT_START,
    REPORT_FORMAT, SENSITIVITY_FRACTIONS,
};
pub use run::{
    column, ensemble_member, load_config, parse_series, read_series, resume_experiment, run_ensemble,
    run_experiment, run_with_options, sobolev_column, Checkpoint, Diagnostic, IdentityText, Manifest, Observables,
    Record, RunConfig, RunOptions, RunOutcome, RunStatus, WallClock, CHECKPOINT_FILE, CODE_VERSION, DIAGNOSTIC_FILE,
    MANIFEST_FILE, MANIFEST_FORMAT, PLOTS_DIR, REPORT_FILE, SERIES_FILE,
};

#[cfg(test)]
mod tests;
