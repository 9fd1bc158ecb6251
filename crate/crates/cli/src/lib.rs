//! Library surface of the command-line pipeline, so the experiment steps
//! can be driven in-process as well as from the shell.

pub mod commands;
pub mod config;
pub mod manifest;

pub use commands::{
    cmd_evaluate, cmd_kb_complement, cmd_kb_subset, cmd_link, cmd_prune, cmd_report, cmd_run,
    cmd_synth, cmd_train, cmd_tune_threshold, Ctx, MetricsFile,
};
pub use config::{Mode, PartialSpec, ReportBlock, ReportEntry, RunConfig, SynthBlock};
pub use manifest::Manifest;
