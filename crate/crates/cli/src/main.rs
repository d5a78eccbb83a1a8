//! `dcat-sim`: runs the detuned cat-qubit experiments and writes CSV/JSON
//! data with a checksummed manifest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{split_run_args, ConfigError, Experiment, ExperimentConfig};
use experiments::RunError;

#[derive(Parser)]
#[command(name = "dcat-sim", version, about = "Detuned Kerr-cat qubit simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the available experiments and their keys.
    List,
    /// Run an experiment: `run <id> [--key value ...] [--out DIR] [--config FILE]`.
    Run {
        experiment: String,
        /// `--key value` overrides, `--out DIR`, `--config FILE`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
}

fn list() {
    for e in Experiment::ALL {
        println!("{:<7} {}", e.id(), e.description());
        for k in e.keys() {
            println!("    --{:<16} {:<32} {}", k.name, k.default, k.help);
        }
    }
}

fn resolve(experiment: &str, args: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let exp = Experiment::parse(experiment).ok_or_else(|| ConfigError::UnknownExperiment(experiment.to_string()))?;
    let (out, config_path, flags) = split_run_args(args)?;
    let out = out.unwrap_or_else(|| PathBuf::from(format!("dcat-out/{}", exp.id())));
    let mut cfg = ExperimentConfig::defaults(exp, out);
    if let Some(path) = config_path {
        let text = std::fs::read_to_string(&path).map_err(|e| ConfigError::Io {
            path: path.clone(),
            message: e.to_string(),
        })?;
        if path.extension().is_some_and(|x| x == "json") {
            let manifest: serde_json::Value = serde_json::from_str(&text).map_err(|e| ConfigError::Syntax {
                path: path.clone(),
                line: e.line(),
                message: e.to_string(),
            })?;
            cfg.apply_manifest(&manifest, &path)?;
        } else {
            cfg.apply_file_text(&text, &path)?;
        }
    }
    cfg.apply_flags(&flags)?;
    Ok(cfg)
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var("DCAT_SIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| ConfigError::Usage(format!("DCAT_SIM_THREADS must be a positive integer, got {raw:?}")))?;
    // a global pool that is already set is fine: the first cap wins
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(experiment: &str, args: &[String]) -> Result<(), RunError> {
    configure_threads()?;
    let cfg = resolve(experiment, args)?;
    let start = Instant::now();
    let out = experiments::run(&cfg)?;
    let manifest = output::write_run(&cfg, &out.artifacts, start.elapsed().as_secs_f64())?;
    let files = manifest["files"].as_array().map_or(0, |f| f.len());
    eprintln!("{}: wrote {files} files to {}", cfg.experiment, cfg.out.display());
    println!(
        "{}",
        serde_json::to_string_pretty(&out.summary).expect("summary is plain JSON")
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::List => {
            list();
            ExitCode::SUCCESS
        }
        Command::Run { experiment, args } => match run(&experiment, &args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
