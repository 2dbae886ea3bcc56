//! `wvn`: run one lattice experiment from a config file.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use wvn_cli::config::{self, Experiment};
use wvn_cli::output::{ManifestInput, Outputs, Verdict};
use wvn_cli::run;
use wvn_core::ExecPolicy;

const AFTER_HELP: &str = "\
Environment:
  WVN_OUT_DIR   output directory when --out is not given
  WVN_WORKERS   worker thread count when --workers is not given (1 runs sequentially)

Exit status: 0 pass, 2 fail or inconclusive, 1 error.";

#[derive(Debug, Parser)]
#[command(name = "wvn", version, about = "Numerical experiments for discrete Schrödinger operators with Wigner-von Neumann potentials", after_help = AFTER_HELP)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    /// Path to the experiment config file.
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, env = "WVN_OUT_DIR")]
    out: Option<PathBuf>,
    /// Worker threads; 1 selects the sequential path.
    #[arg(long, env = "WVN_WORKERS")]
    workers: Option<usize>,
    /// RNG seed (overrides `seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(cli: Cli) -> Result<Verdict> {
    let started = chrono::Utc::now().to_rfc3339();
    let text = std::fs::read_to_string(&cli.config)
        .with_context(|| format!("reading config {}", cli.config.display()))?;
    let mut cfg = config::parse_config(&text, cli.experiment)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out_dir = cli
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(cli.experiment.name()));

    let workers = cli.workers.unwrap_or_else(rayon::current_num_threads).max(1);
    let policy = if workers == 1 {
        ExecPolicy::Sequential
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .context("configuring the worker pool")?;
        ExecPolicy::Parallel
    };

    let mut out = Outputs::create(&out_dir)?;
    let verdict = run::run_experiment(&cfg, &mut out, policy)?;
    eprintln!("{}: {:?} ({})", cli.experiment.name(), verdict.verdict, verdict.detail);
    let v = verdict.verdict;
    let dir = out.dir().to_path_buf();
    out.finish(ManifestInput {
        config: &cfg,
        config_text: &text,
        started,
        workers,
        verdict,
    })?;
    println!("{}", dir.display());
    Ok(v)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
