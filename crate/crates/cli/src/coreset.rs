use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use csc_core::coreset::{construct_coreset, format_weighted, SamplingStats};
use csc_core::kernel::GraphKernel;
use serde::Serialize;

use crate::error::{CliResult, Context};
use crate::run::{emit_json, write_file, GraphInput, RunConfig, SamplerArg, SamplingArgs};

#[derive(Debug, Args)]
pub struct CoresetArgs {
    #[command(flatten)]
    pub graph: GraphInput,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// D²-seeding implementation.
    #[arg(long, value_enum, default_value_t = SamplerArg::Fast)]
    pub sampler: SamplerArg,
    /// Coreset file to write (`vertex weight` per line).
    #[arg(short, long)]
    pub out: PathBuf,
    /// Timing JSON; printed to stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct CoresetTiming {
    pub n: usize,
    pub m: usize,
    pub coreset_size: usize,
    pub total_weight: f64,
    pub rounds: usize,
    pub load_ms: f64,
    pub kernel_ms: f64,
    pub seeding_ms: f64,
    pub sampling_ms: f64,
    pub coreset_ms: f64,
    pub neighbour_checks: u64,
    /// One entry per importance-sampling round.
    pub stages: Vec<SamplingStats>,
    pub config: RunConfig,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn run(args: CoresetArgs) -> CliResult<()> {
    let mut config = RunConfig::new("coreset", args.sampling.seed);
    config.sampling(&args.sampling);
    config.sampler = Some(args.sampler.into());
    config.self_loops = args.graph.self_loops;
    config.input("graph", &args.graph.graph);
    config.output("coreset", &args.out);
    if let Some(r) = &args.report {
        config.output("report", r);
    }

    let t = Instant::now();
    let g = args.graph.load()?;
    let load_ms = ms(t);
    let csc = args.sampling.csc_config(g.n(), args.sampling.seed)?;
    let mut importance = csc.importance_for(g.n());
    importance.sampler = args.sampler.into();

    let t = Instant::now();
    let kern = GraphKernel::new(&g, csc.sigma).compute()?;
    let kernel_ms = ms(t);
    let t = Instant::now();
    let coreset = construct_coreset(&kern, csc.k, csc.eps, csc.seed, csc.max_rounds, &importance).compute()?;
    let coreset_ms = ms(t);

    write_file(&args.out, &(config.header() + &format_weighted(&coreset.indices, &coreset.weights)))?;
    let timing = CoresetTiming {
        n: g.n(),
        m: g.num_edges(),
        coreset_size: coreset.len(),
        total_weight: coreset.total_weight(),
        rounds: coreset.source.rounds,
        load_ms,
        kernel_ms,
        seeding_ms: coreset.stats.iter().map(|s| s.seeding_ms).sum(),
        sampling_ms: coreset.stats.iter().map(|s| s.sampling_ms).sum(),
        coreset_ms,
        neighbour_checks: coreset.stats.iter().map(|s| s.neighbour_checks).sum(),
        stages: coreset.stats,
        config,
    };
    emit_json(args.report.as_deref(), &timing)
}
