//! Entity linking under partial knowledge-base inference.
//!
//! Every subcommand is driven by one JSON config (see the README for the
//! schema) and reads or writes files in the config's output directory, so
//! the steps compose: `synth`, `train`, `link`, `tune-threshold` / `prune`,
//! `evaluate`, `report` — or `run` for the whole pipeline of the configured
//! mode.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use partial_el_cli::{commands, config::RunConfig, Ctx};

#[derive(Parser, Debug)]
#[command(name = "partial-el", version, about = "Entity linking with partial knowledge-base inference")]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (JSON).
    #[arg(long, global = true, required = false, default_value = "config.json")]
    config: PathBuf,

    /// Worker threads for document-level linking. Results are byte-identical
    /// for any value.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Also write plot artifacts (SVG) where a command supports them.
    #[arg(long, global = true)]
    plot: bool,

    /// Progress messages on stderr.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the seeded synthetic benchmark named by the config's synth block.
    Synth,
    /// Write the configured partial view as an id-per-line selector file.
    KbSubset,
    /// Write the complement of the configured partial view.
    KbComplement,
    /// Build the gazetteer and the language model from the training split.
    Train,
    /// Link the test split (and dev split in threshold mode) against the inference view.
    Link,
    /// Search θ on the dev predictions and apply it to the test predictions.
    TuneThreshold,
    /// Remove test predictions whose concept is outside the partial view.
    Prune,
    /// Score the final predictions against the view-restricted gold.
    Evaluate,
    /// Build the annotation-proportion report across partial-view runs.
    Report,
    /// Execute the full pipeline for the configured mode and write a manifest.
    Run,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let ctx = Ctx {
        jobs: args.jobs.max(1),
        plot: args.plot,
        verbose: args.verbose,
    };
    match dispatch(&args, ctx) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // One machine-parsable line on stderr.
            eprintln!(
                "{}",
                serde_json::json!({"error": format!("{err:#}")})
            );
            ExitCode::FAILURE
        }
    }
}

fn dispatch(args: &Args, ctx: Ctx) -> anyhow::Result<()> {
    let (config, config_bytes) = RunConfig::load(&args.config)?;
    match args.command {
        Command::Synth => commands::cmd_synth(&config, ctx)?,
        Command::KbSubset => {
            commands::cmd_kb_subset(&config, ctx)?;
        }
        Command::KbComplement => {
            commands::cmd_kb_complement(&config, ctx)?;
        }
        Command::Train => {
            commands::cmd_train(&config, ctx)?;
        }
        Command::Link => {
            commands::cmd_link(&config, ctx)?;
        }
        Command::TuneThreshold => {
            commands::cmd_tune_threshold(&config, ctx)?;
        }
        Command::Prune => {
            commands::cmd_prune(&config, ctx)?;
        }
        Command::Evaluate => {
            commands::cmd_evaluate(&config, ctx)?;
        }
        Command::Report => {
            commands::cmd_report(&config, ctx)?;
        }
        Command::Run => {
            commands::cmd_run(&config, &config_bytes, ctx)?;
        }
    }
    Ok(())
}
