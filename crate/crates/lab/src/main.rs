use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use sfc_lab::config::Format;
use sfc_lab::{emit_report, lookup, run_experiment, Config, LabError, REGISTRY};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Run a named experiment and write its report.
#[derive(Debug, Parser)]
#[command(name = "sfc-lab", version, about)]
struct Cli {
    /// Experiment name, or `list` to print the registry.
    experiment: String,
    /// TOML config file; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn resolve(cli: &Cli) -> Result<Config, LabError> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    config.apply_env(|k| std::env::var(k).ok())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    if let Some(f) = cli.format {
        config.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    if let Some(t) = cli.threads {
        config.threads = t;
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), LabError> {
    if cli.experiment == "list" {
        for e in REGISTRY {
            println!("{:<16} {}  [{}]", e.name, e.summary, e.claims.join(", "));
        }
        return Ok(());
    }
    let entry = lookup(&cli.experiment).ok_or_else(|| LabError::UnknownExperiment(cli.experiment.clone()))?;
    let config = resolve(cli)?;
    let report = run_experiment(entry.experiment, &config)?;
    for path in emit_report(&report, config.format, &config.out)? {
        println!("{}", path.display());
    }
    eprintln!("{} finished in {:.3} s", report.experiment, report.timing.wall_seconds);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
