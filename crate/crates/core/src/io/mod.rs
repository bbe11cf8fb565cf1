//! Configuration, CSV ingestion and the `test` / `sensitivity` /
//! `simulate` / `check` pipelines with their delimited-text outputs.

pub mod config;
pub mod ingest;
pub mod pipeline;

pub use config::{AnalysisConfig, KernelName};
pub use ingest::{dataset_csv, ingest_csv, ingest_reader, Ingested};
pub use pipeline::{
    run_sensitivity, run_test, sensitivity_command, suite_command, test_command, ResultsBundle, YearSensitivity,
    YearTest,
};
