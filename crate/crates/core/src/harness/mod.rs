//! Configuration-driven convergence experiments.

mod config;
mod report;
mod run;

pub use config::{parse_observable, parse_system, AcceptanceSpec, ExperimentConfig, GeometryConfig, PredictedLimit};
pub use report::{
    tail_envelope, write_rows, AcceptanceOutcome, ConvergenceReport, ReportRow, RunMetadata, Scale, SpotCheck,
    TailEnvelope, CSV_HEADER,
};
pub use run::{output_path, run_experiment, run_file, single_value, sweep, SPOT_CHECK_STRIDE};
