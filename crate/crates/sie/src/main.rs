use clap::{Args, Parser, Subcommand};
use sie::cli::{run, Command, RunOptions};
use std::path::PathBuf;

/// Batch experiment driver for stochastic integral equations.
#[derive(Parser)]
#[command(name = "sie", version, about)]
struct Cli {
    /// Size of the worker thread pool (results are identical for any value).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the TOML experiment config.
    #[arg(long)]
    config: PathBuf,

    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate existence/uniqueness conditions and report verdicts.
    Check(RunArgs),
    /// Fixed-point solve of the stochastic equation.
    Solve(RunArgs),
    /// Strong-convergence ladder and moment table for the linear equation.
    Gbm(RunArgs),
    /// Solve the deterministic integral equation.
    Fredholm(RunArgs),
    /// Compare the two sides of the isometry on registry integrands.
    Isometry(RunArgs),
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // ignore the error if a pool already exists (e.g. under tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let (command, args) = match cli.command {
        Cmd::Check(a) => (Command::Check, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Gbm(a) => (Command::Gbm, a),
        Cmd::Fredholm(a) => (Command::Fredholm, a),
        Cmd::Isometry(a) => (Command::Isometry, a),
    };
    let opts = RunOptions {
        config_path: args.config,
        seed_override: args.seed,
        out_override: args.out,
    };
    std::process::exit(run(command, &opts));
}
