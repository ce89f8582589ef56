//! Command-line driver for the prompting toolkit.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod record;
pub mod report;

use args::{Cli, Command, SourceArgs};
use config::{RunOptions, Settings};
use error::{CliError, EXIT_FAILED, EXIT_OK};
use pipeline::Source;

/// Flags over the optional config file, resolved and validated.
pub fn settings(cli: &Cli) -> Result<Settings, CliError> {
    let base = match &cli.global.config {
        Some(path) => RunOptions::from_toml_file(path)?,
        None => RunOptions::default(),
    };
    cli.global.options().over(base).resolve()
}

fn source(args: &SourceArgs, settings: &Settings) -> Result<Source, CliError> {
    match args.suite {
        Some(suite) => Ok(Source::Suite {
            suite,
            n_seeds: args.seeds,
            base_seed: settings.seed,
        }),
        None if args.manifests.is_empty() => {
            Err(CliError::Config("give --manifest or --suite".into()))
        }
        None => {
            for p in &args.manifests {
                if !p.is_file() {
                    return Err(CliError::Io(format!("{}: manifest not found", p.display())));
                }
            }
            Ok(Source::Manifests(args.manifests.clone()))
        }
    }
}

fn failure_code(records: &[record::MetricRecord]) -> i32 {
    let failed = commands::failures(records);
    if failed == 0 {
        EXIT_OK
    } else {
        eprintln!("{failed} of {} sequences failed", records.len());
        EXIT_FAILED
    }
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let settings = settings(cli)?;
    match &cli.command {
        Command::Synth {
            suite,
            seeds,
            aux_kind,
        } => {
            for p in commands::cmd_synth(&settings, *suite, *seeds, aux_kind)? {
                println!("{}", p.display());
            }
            Ok(EXIT_OK)
        }
        Command::Dye { manifest, modality } => {
            let dir = commands::cmd_dye(&settings, manifest, modality.as_deref())?;
            println!("{}", dir.display());
            Ok(EXIT_OK)
        }
        Command::Prompt { manifest } => {
            println!("{}", commands::cmd_prompt(&settings, manifest)?.display());
            Ok(EXIT_OK)
        }
        Command::Track { manifest } => {
            println!("{}", commands::cmd_track(&settings, manifest)?.display());
            Ok(EXIT_OK)
        }
        Command::Eval { source: src } => {
            let src = source(src, &settings)?;
            let record = commands::cmd_eval(&settings, &src)?;
            print!(
                "{}",
                std::fs::read_to_string(settings.out.join("summary.txt"))
                    .map_err(|e| CliError::io(&settings.out, e))?
            );
            Ok(failure_code(&record.payload.per_sequence_results))
        }
        Command::Ablate {
            source: src,
            axis,
            grid,
        } => {
            let src = source(src, &settings)?;
            let table = commands::cmd_ablate(&settings, &src, *axis, grid.as_deref())?;
            print!("{}", table.to_text());
            let all: Vec<_> = table
                .rows
                .iter()
                .flat_map(|r| r.per_sequence_results.iter().cloned())
                .collect();
            Ok(failure_code(&all))
        }
    }
}

/// Runs one parsed invocation and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("modaprompt: {e}");
            e.exit_code()
        }
    }
}
