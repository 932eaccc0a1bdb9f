//! Stage drivers for the jumpcast command-line tool.
//!
//! Each stage reads the artifacts of the previous one from the output
//! directory, writes its own through temporary files and records a manifest.

pub mod artifacts;
pub mod config;
pub mod memory;
pub mod session;
pub mod stages;

pub use config::PipelineConfig;
pub use stages::{run_pipeline, run_stage, Stage};
