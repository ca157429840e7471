//! Pipeline orchestration for the taxonomy builder: one configuration file
//! drives ingest → pmi-build → generate → verify → store, with a run
//! manifest for reproducibility. The binary in this crate exposes each stage
//! as a subcommand plus query, serve, and eval tooling.

pub mod config;
pub mod pipeline;

pub use config::PipelineConfig;
pub use pipeline::{run_pipeline, RunManifest, StageStatus};
