use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use hprec_core::harness::{parse_config, run_sweep, write_results, Manifest};
use hprec_core::power::{power_consumption, REFERENCE_TABLE};
use hprec_core::{Architecture, Execution, PowerModel, SystemConfig};

#[derive(Parser)]
#[command(
    name = "hprec",
    version,
    about = "Hybrid precoding Monte-Carlo simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write CSV results plus a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `n_trials`.
        #[arg(long)]
        trials: Option<usize>,
        /// Overrides `output_path`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 1 runs serially, omitted uses all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print front-end power in watts.
    Power {
        /// Architecture label such as `fc-ups` or `daosa-dps:2`; repeatable.
        /// Without it the reference configurations are listed.
        #[arg(long)]
        arch: Vec<String>,
        #[arg(long, default_value_t = 256)]
        n_tx: usize,
        #[arg(long, default_value_t = 8)]
        n_rf: usize,
    },
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(
    config: PathBuf,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<PathBuf>,
    threads: Option<usize>,
) -> Result<()> {
    let mut cfg = parse_config(&config)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(t) = trials {
        cfg.n_trials = t;
    }
    if let Some(o) = out {
        cfg.output_path = o.display().to_string();
    }
    let exec = match threads {
        None => Execution::Parallel,
        Some(0) => bail!("--threads must be at least 1"),
        Some(1) => Execution::Sequential,
        Some(n) => Execution::Threads(n),
    };
    let start = Instant::now();
    let result = run_sweep(&cfg, exec)?;
    let manifest = Manifest::new(&cfg, result.failures.clone(), start.elapsed().as_secs_f64());
    let mpath = write_results(&result.rows, &manifest, &cfg.output_path)
        .with_context(|| format!("writing results to {}", cfg.output_path))?;
    if result.excluded() > 0 {
        eprintln!(
            "warning: {} of {} trials excluded (see manifest)",
            result.excluded(),
            cfg.n_trials
        );
    }
    eprintln!(
        "wrote {} rows to {} ({})",
        result.rows.len(),
        cfg.output_path,
        mpath.display()
    );
    Ok(())
}

fn power(arch: Vec<String>, n_tx: usize, n_rf: usize) -> Result<()> {
    // Only the array dimensions enter the power model.
    let cfg = SystemConfig::new(n_tx, 1, 1, 1, n_rf);
    let pm = PowerModel::default();
    let labels: Vec<String> = if arch.is_empty() {
        REFERENCE_TABLE.iter().map(|(l, _)| l.to_string()).collect()
    } else {
        arch
    };
    for label in labels {
        let a: Architecture = label.parse()?;
        a.validate(n_tx, n_rf)?;
        let watts = power_consumption(&a, &cfg, &pm)?;
        println!("{label}\t{watts:.2}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            seed,
            trials,
            out,
            threads,
        } => run(config, seed, trials, out, threads),
        Command::Power { arch, n_tx, n_rf } => power(arch, n_tx, n_rf),
        Command::Validate { config } => parse_config(&config)
            .map(|cfg| {
                println!(
                    "ok: {} architectures, {} SNR points, {} trials",
                    cfg.architectures.len(),
                    cfg.snr_grid_db.len(),
                    cfg.n_trials
                );
            })
            .map_err(Into::into),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
