//! `alh`: run active-learning experiments and compare strategies.

use std::path::PathBuf;
use std::process::ExitCode;

use alh_core::harness::output::{write_ttests, CURVES_FILE, SUMMARY_FILE, TTEST_FILE};
use alh_core::harness::{
    compare, read_curves, run_experiment, write_outputs, ConfigMap, Outcome, RunConfig,
};
use alh_core::Execution;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "alh",
    version,
    about = "Pool-based multi-class active learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more query strategies and write learning curves.
    Run(RunArgs),
    /// Paired t-tests between two strategies of an earlier run.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// File of `key = value` lines; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// `csv` (label in the last column) or `sparse` (`label idx:val ...`).
    #[arg(long)]
    format: Option<String>,
    /// iral, random, margin or mmd; a comma-separated list runs several.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// RBF width; defaults to 1/d.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    init_per_class: Option<usize>,
    /// Fraction of each split used as the query pool.
    #[arg(long)]
    pool_fraction: Option<f64>,
    /// Rescale every feature to [0, 1].
    #[arg(long)]
    rescale: bool,
    /// Run IR-AL once per β in {1, 2, 10, 100, 1000}.
    #[arg(long)]
    beta_sweep: bool,
    /// Run the experiment repetitions one after another.
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Directory holding curves.csv; ttest.csv is written next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
}

impl RunArgs {
    fn settings(&self) -> Result<ConfigMap> {
        let base = match &self.config {
            Some(path) => ConfigMap::load(path)?,
            None => ConfigMap::new(),
        };
        let mut flags = ConfigMap::new();
        let mut put = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                flags.set(key, v);
            }
        };
        put("data", self.data.as_ref().map(|p| p.display().to_string()));
        put("format", self.format.clone());
        put("strategy", self.strategy.clone());
        put("budget", self.budget.map(|v| v.to_string()));
        put("runs", self.runs.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("beta", self.beta.map(|v| v.to_string()));
        put("lambda", self.lambda.map(|v| v.to_string()));
        put("rho", self.rho.map(|v| v.to_string()));
        put("gamma", self.gamma.map(|v| v.to_string()));
        put("init-per-class", self.init_per_class.map(|v| v.to_string()));
        put("pool-fraction", self.pool_fraction.map(|v| v.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        if self.rescale {
            put("rescale", Some("true".into()));
        }
        if self.beta_sweep {
            put("beta-sweep", Some("true".into()));
        }
        Ok(base.overlay(&flags))
    }
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = RunConfig::from_map(&args.settings()?)?;
    if args.sequential {
        config.execution = Execution::Sequential;
    }
    let output = run_experiment(&config)
        .with_context(|| format!("experiment on {}", config.data.display()))?;
    write_outputs(
        &config.out,
        &output.curves,
        &output.summaries,
        &output.tests,
    )?;

    let last = output
        .summaries
        .iter()
        .map(|s| s.query_index)
        .max()
        .unwrap_or(0);
    for s in output.summaries.iter().filter(|s| s.query_index == last) {
        println!(
            "{:<16} final accuracy {:.4} ± {:.4}",
            s.strategy, s.mean_accuracy, s.std_accuracy
        );
    }
    println!(
        "wrote {CURVES_FILE}, {SUMMARY_FILE} and {TTEST_FILE} to {}",
        config.out.display()
    );
    Ok(())
}

fn compare_cmd(args: CompareArgs) -> Result<()> {
    if args.a == args.b {
        bail!("--a and --b name the same strategy");
    }
    let curves = read_curves(args.out.join(CURVES_FILE))?;
    let rows = compare(&curves, &args.a, &args.b)?;
    write_ttests(&args.out, &rows)?;
    let count = |o: Outcome| rows.iter().filter(|r| r.outcome == o).count();
    println!(
        "{} vs {}: {} win / {} tie / {} loss over {} query points",
        args.a,
        args.b,
        count(Outcome::Win),
        count(Outcome::Tie),
        count(Outcome::Loss),
        rows.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Compare(args) => compare_cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
