use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use frt_core::harness::{Suite, SuiteOptions};
use frt_core::io::{sensitivity_command, suite_command, test_command, AnalysisConfig};

/// Fisher randomization tests with an estimated lottery assignment model,
/// sensitivity curves for unobserved confounding, and validation suites.
#[derive(Parser, Debug)]
#[command(name = "frt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Analysis configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo draws R.
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-year Fisher p-values (pvalues.csv).
    Test(Common),
    /// Per-year sensitivity curves and minimal overturning |zeta|.
    Sensitivity(Common),
    /// Run a simulation suite (lemma1, lemma2, lemma3, theorem2, prop2, ...).
    Simulate(SuiteArgs),
    /// Run a checking suite (theorem1, prop1, ...).
    Check(SuiteArgs),
}

#[derive(Args, Debug)]
struct SuiteArgs {
    suite: String,
    #[command(flatten)]
    common: Common,
    /// Replications, worlds or seeds, depending on the suite.
    #[arg(long)]
    reps: Option<usize>,
}

fn analysis_config(common: &Common) -> anyhow::Result<AnalysisConfig> {
    let path = common.config.as_deref().context("--config is required for this command")?;
    let config = AnalysisConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    Ok(config.with_overrides(common.seed, common.draws, common.alpha)?)
}

fn suite_options(args: &SuiteArgs) -> anyhow::Result<SuiteOptions> {
    let mut opts = SuiteOptions::default();
    if let Some(path) = args.common.config.as_deref() {
        let config = AnalysisConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
        opts.seed = config.seed;
        opts.alpha = config.alpha;
    }
    opts.seed = args.common.seed.unwrap_or(opts.seed);
    opts.alpha = args.common.alpha.unwrap_or(opts.alpha);
    opts.draws = args.common.draws;
    opts.replications = args.reps;
    Ok(opts)
}

fn run_suite(args: &SuiteArgs) -> anyhow::Result<bool> {
    let opts = suite_options(args)?;
    let report = suite_command(&args.suite, &opts, &args.common.out)?;
    for row in &report.rows {
        println!(
            "{} {}: {} (threshold {}) {}",
            report.suite,
            row.claim,
            row.measured,
            row.threshold,
            if row.pass() { "pass" } else { "FAIL" }
        );
    }
    Ok(report.passed())
}

fn print_written(out: &Path) {
    log::info!("results written to {}", out.display());
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Test(common) => {
            let config = analysis_config(&common)?;
            let bundle = test_command(&config, &common.out)?;
            for t in &bundle.tests {
                println!("year {}: p = {} (T_obs = {}, R = {})", t.year, t.p_value, t.observed_statistic, t.draws);
            }
            print_written(&common.out);
            Ok(true)
        }
        Command::Sensitivity(common) => {
            let config = analysis_config(&common)?;
            let bundle = sensitivity_command(&config, &common.out)?;
            for r in &bundle.sensitivity {
                match r.overturn.zeta_star_abs {
                    Some(z) => println!("year {}: |zeta*| = {z}", r.year),
                    None => println!("year {}: no crossing within the grid", r.year),
                }
            }
            print_written(&common.out);
            Ok(true)
        }
        Command::Simulate(args) | Command::Check(args) => run_suite(&args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Command::Simulate(args) | Command::Check(args) = &cli.command {
        if args.suite.parse::<Suite>().is_err() {
            let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
            eprintln!("error: unknown suite `{}` (expected one of: {})", args.suite, names.join(", "));
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: suite failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
