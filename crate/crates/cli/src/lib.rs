//! Config-driven orchestration of the HSC pipeline:
//! `synth → sample → train → features → classify → report`.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

pub use artifacts::{Layout, Manifest};
pub use commands::{
    cmd_classify, cmd_features, cmd_report, cmd_run, cmd_sample, cmd_synth, cmd_train, report_csv,
    Evaluation,
};
pub use config::{Protocol, RunConfig, SCHEMA_VERSION};
pub use error::CliError;
