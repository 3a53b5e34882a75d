//! Error metrics and the benchmark harness.

mod harness;
mod metrics;
mod plan;
mod tables;

pub use harness::{
    fit_cell, repeat_dataset, run_experiment, split_samples, ExperimentReport, FitRecord, SelectedRun, Stage,
};
pub use metrics::{are, are_rows, eigenspectrum, mean_sd, AreValue};
pub use plan::{EvalMethod, ExperimentPlan, Grid, Hyper};
pub use tables::{
    format_are_by_view, format_are_table, format_fits, format_spectra, format_time_table, write_tables,
};
