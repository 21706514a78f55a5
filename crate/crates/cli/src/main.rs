use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use shadownet_cli::config::{parse_config, CliOverrides, CommandName};
use shadownet_cli::run_command;

/// Reproducible experiments on sparse rectified generative networks.
#[derive(Parser, Debug)]
#[command(name = "shadownet", version)]
struct Args {
    /// One of: gen, invert, scaling, lemmas, diag, support, twolayer, train.
    command: CommandName,

    /// JSON config file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed for every random draw in the run.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (default: all cores; SHADOWNET_THREADS as fallback).
    #[arg(long)]
    threads: Option<usize>,

    /// Exit nonzero (with the acceptance criterion number) on threshold
    /// violations.
    #[arg(long)]
    check: bool,

    /// Output directory for report.json and CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(255)
        }
    }
}

fn run(args: Args) -> shadownet_cli::Result<ExitCode> {
    let json_text = match &args.config {
        Some(path) => std::fs::read_to_string(path)?,
        None => "{}".to_string(),
    };
    let overrides = CliOverrides {
        seed: args.seed,
        out: args.out,
        threads: args.threads.or_else(|| {
            std::env::var("SHADOWNET_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        }),
        check: args.check,
    };
    let cfg = parse_config(args.command, &json_text, &overrides)?;

    let report = match cfg.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| shadownet_cli::CliError::Config(e.to_string()))?;
            pool.install(|| run_command(&cfg))?
        }
        None => run_command(&cfg)?,
    };

    println!(
        "{} finished in {:.1}s; report in {}",
        cfg.command,
        report.duration_secs,
        cfg.out.display()
    );
    for (key, value) in &report.summary {
        println!("  {key}: {value}");
    }
    for warning in &report.warnings {
        println!("  warning: {warning}");
    }
    for check in &report.checks {
        println!(
            "  [{}] criterion {}: {} ({})",
            if check.passed { "pass" } else { "FAIL" },
            check.criterion,
            check.name,
            check.detail
        );
    }

    if cfg.check {
        if let Some(criterion) = report.first_failed_criterion() {
            return Ok(ExitCode::from(criterion));
        }
    }
    Ok(ExitCode::SUCCESS)
}
