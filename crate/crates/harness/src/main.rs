use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use empchaos_harness::{
    load_config, resolve, run_experiment, CheckFamily, HarnessError, RunOptions,
};

/// Monte Carlo checks for empirical Wiener chaos.
#[derive(Parser)]
#[command(name = "empchaos", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replicate count for every check, overriding the config.
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write per-replicate cell counts as CSV.
    #[arg(long, global = true)]
    dump_counts: bool,
    /// Write the Gaussian cell values of the limit sample as CSV.
    #[arg(long, global = true)]
    dump_gaussians: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a config without running anything.
    Validate { config: PathBuf },
    /// Cross-moment checks.
    Moments { config: PathBuf },
    /// Mean-formula checks.
    Mean { config: PathBuf },
    /// Product-formula identity checks.
    DiagramCheck { config: PathBuf },
    /// Deterministic F-sweeps.
    Flimits { config: PathBuf },
    /// KS convergence of the truncated chaos.
    Converge { config: PathBuf },
    /// Skewness and kurtosis of W_n(B).
    Gaussianity { config: PathBuf },
    /// Every check in the config.
    All { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<u8, HarnessError> {
    let (config, family) = match cli.command {
        Command::Validate { config } => {
            let resolved = resolve(load_config(&config)?)?;
            println!(
                "{}: ok ({} integrands, {} chaos vectors, {} checks)",
                config.display(),
                resolved.integrands.len(),
                resolved.chaos.len(),
                resolved.config.checks.len()
            );
            return Ok(0);
        }
        Command::Moments { config } => (config, Some(CheckFamily::Moments)),
        Command::Mean { config } => (config, Some(CheckFamily::Mean)),
        Command::DiagramCheck { config } => (config, Some(CheckFamily::DiagramCheck)),
        Command::Flimits { config } => (config, Some(CheckFamily::FLimits)),
        Command::Converge { config } => (config, Some(CheckFamily::Converge)),
        Command::Gaussianity { config } => (config, Some(CheckFamily::Gaussianity)),
        Command::All { config } => (config, None),
    };
    let resolved = resolve(load_config(&config)?)?;
    let opts = RunOptions {
        seed: cli.seed,
        replicates: cli.replicates,
        out_dir: cli.out_dir,
        threads: cli.threads,
        dump_counts: cli.dump_counts,
        dump_gaussians: cli.dump_gaussians,
        family,
    };
    let summary = run_experiment(&resolved, &opts)?;
    if family == Some(CheckFamily::DiagramCheck) {
        // the term-by-term expansion is the CLI's printed output
        for id in summary.outcomes.keys() {
            let path = summary
                .out_dir
                .join("results")
                .join(format!("{id}_terms.csv"));
            print!("{}", std::fs::read_to_string(path)?);
        }
    }
    println!(
        "{} of {} checks passed; results in {}",
        summary.outcomes.values().filter(|o| o.pass).count(),
        summary.outcomes.len(),
        summary.out_dir.display()
    );
    Ok(summary.exit_code() as u8)
}
