use std::path::PathBuf;

use clap::Args;
use csc_core::metrics::{compact_labels, EvalRecord};
use serde::Serialize;

use crate::error::{CliResult, Context};
use crate::run::{emit_json, load_labels, GraphInput, RunConfig};

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub graph: GraphInput,
    /// Labels to score, one cluster id per line.
    #[arg(long)]
    pub labels: PathBuf,
    /// Ground-truth labels; adds ARI.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Metrics JSON; printed to stdout when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    n: usize,
    /// Clusters that occur in the labels; the metrics range over these.
    k_occupied: usize,
    metrics: EvalRecord,
    config: RunConfig,
}

pub fn run(args: EvalArgs) -> CliResult<()> {
    let mut config = RunConfig::new("eval", 0);
    config.self_loops = args.graph.self_loops;
    config.input("graph", &args.graph.graph);
    config.input("labels", &args.labels);
    if let Some(p) = &args.truth {
        config.input("truth", p);
    }
    if let Some(p) = &args.out {
        config.output("metrics", p);
    }

    let g = args.graph.load()?;
    let labels = compact_labels(&load_labels(&args.labels, g.n())?);
    let truth = args.truth.as_deref().map(|p| load_labels(p, g.n())).transpose()?;
    let metrics = EvalRecord::compute(&g, &labels, truth.as_ref()).compute()?;
    config.k = Some(labels.k());
    emit_json(
        args.out.as_deref(),
        &EvalOutput {
            n: g.n(),
            k_occupied: labels.k(),
            metrics,
            config,
        },
    )
}
