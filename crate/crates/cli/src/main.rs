//! `csc`: generate graphs, build coresets, cluster, score labellings and run sweeps.

mod bench;
mod cluster;
mod coreset;
mod error;
mod eval;
mod generate;
mod run;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "csc", version, about = "Coreset spectral clustering for sparse graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic graph and its ground-truth labels.
    Generate(generate::GenerateArgs),
    /// Sample a weighted coreset and report its timing.
    Coreset(coreset::CoresetArgs),
    /// Cluster a graph and write labels plus a JSON report.
    Cluster(cluster::ClusterArgs),
    /// Score a labelling: normalised cut, kernel k-means cost and optional ARI.
    Eval(eval::EvalArgs),
    /// Run a JSON sweep spec and write CSV.
    Bench(bench::BenchArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate::run(a),
        Command::Coreset(a) => coreset::run(a),
        Command::Cluster(a) => cluster::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Bench(a) => bench::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("csc: {e}");
            e.exit_code()
        }
    }
}
