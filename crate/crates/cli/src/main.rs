use clap::Parser;
use saltus_cli::commands::{self, Subcommand};
use saltus_cli::config::JobConfig;
use saltus_cli::io;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

/// Transfer operators, saltus decompositions and susceptibility functions of
/// piecewise expanding unimodal maps.
#[derive(Parser, Debug)]
#[command(name = "saltus", version)]
struct Cli {
    /// Pipeline to run.
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// key=value job file; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory receiving the CSV/JSON artifacts and run.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for independent parameter rows.
    #[arg(long)]
    jobs: Option<usize>,
    /// Recorded in run.json; no pipeline draws random numbers.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    subcommand: Subcommand,
    config: &'a JobConfig,
    seed: u64,
    outputs: Vec<String>,
    summary: &'a str,
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<saltus_core::Error>() {
        Some(err) if !err.is_precondition() => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    let text = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: reading {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => String::new(),
    };
    let cfg = match JobConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            let src = cli.config.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
            eprintln!("error: {src}: {e}");
            return ExitCode::from(2);
        }
    };
    let result = std::fs::create_dir_all(&cli.out)
        .map_err(anyhow::Error::from)
        .and_then(|_| commands::run(cli.subcommand, &cfg, &cli.out))
        .and_then(|outcome| {
            let run = RunRecord {
                subcommand: cli.subcommand,
                config: &cfg,
                seed: cli.seed,
                outputs: outcome
                    .files
                    .iter()
                    .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                    .collect(),
                summary: &outcome.summary,
            };
            io::write_json(&cli.out.join("run.json"), &run)?;
            Ok(outcome.summary)
        });
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
