use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use csc_core::clustering::{coreset_kernel_kmeans_with, csc, csc_on_coreset, CscConfig};
use csc_core::coreset::{construct_coreset, load_coreset_points};
use csc_core::graph::io;
use csc_core::kernel::GraphKernel;
use csc_core::metrics::{ari, ncut_average_occupied, ncut_trace_occupied};
use csc_core::spectral::Backend;
use csc_core::{Graph, Labeling, Report};
use serde::Serialize;

use crate::error::{CliError, CliResult, Context};
use crate::run::{
    emit_json, load_labels, mean_std, median, parallel_map, parse_jobs, resolve_jobs, write_file, Algo, GraphInput,
    RunConfig, SamplingArgs,
};

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub graph: GraphInput,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, value_enum, default_value_t = Algo::Csc)]
    pub algo: Algo,
    /// Kernel shift for the coreset graph.
    #[arg(long, default_value_t = CscConfig::DEFAULT_GRAPH_SIGMA)]
    pub graph_sigma: f64,
    /// Kernel shift for labelling the full graph.
    #[arg(long, default_value_t = CscConfig::DEFAULT_LABEL_SIGMA)]
    pub label_sigma: f64,
    /// Power steps for `csc-fast`; `10·ceil(ln n)` when omitted.
    #[arg(long)]
    pub power_steps: Option<usize>,
    /// Lloyd iteration cap for `ckkm`.
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Cluster this coreset (as written by `csc coreset`) instead of sampling one.
    #[arg(long)]
    pub coreset: Option<PathBuf>,
    /// Ground-truth labels; adds ARI to the report.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Independent runs; run `i` uses seed `seed + i`.
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    /// Concurrent runs.
    #[arg(long, env = "CSC_JOBS", value_parser = parse_jobs)]
    pub jobs: Option<usize>,
    /// Labels file; with `--repeat` above 1, run `i` writes `<out>.<i>`.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Report JSON; printed to stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Wall times of the coreset kernel k-means baseline in milliseconds.
#[derive(Debug, Clone, Serialize)]
pub struct CkkmTimings {
    pub coreset_ms: f64,
    pub kmeans_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CkkmReport {
    pub labels: Labeling,
    pub coreset_vertices: Vec<usize>,
    pub coreset_weights: Vec<f64>,
    pub coreset_labels: Labeling,
    pub ncut_full: f64,
    pub conductance_full: f64,
    /// Weighted coreset objective after seeding and after every Lloyd step.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub timings: CkkmTimings,
    pub params: CscConfig,
    pub max_iters: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Csc(Report),
    Ckkm(CkkmReport),
}

impl Outcome {
    pub fn labels(&self) -> &Labeling {
        match self {
            Outcome::Csc(r) => &r.labels,
            Outcome::Ckkm(r) => &r.labels,
        }
    }

    pub fn coreset_size(&self) -> usize {
        match self {
            Outcome::Csc(r) => r.coreset_vertices.len(),
            Outcome::Ckkm(r) => r.coreset_vertices.len(),
        }
    }

    pub fn ncut_full(&self) -> f64 {
        match self {
            Outcome::Csc(r) => r.ncut_full,
            Outcome::Ckkm(r) => r.ncut_full,
        }
    }

    pub fn conductance_full(&self) -> f64 {
        match self {
            Outcome::Csc(r) => r.conductance_full,
            Outcome::Ckkm(r) => r.conductance_full,
        }
    }

    pub fn total_ms(&self) -> f64 {
        match self {
            Outcome::Csc(r) => r.timings.total_ms,
            Outcome::Ckkm(r) => r.timings.total_ms,
        }
    }
}

/// Pipeline configuration for `algo`, built on the sampling parameters in `base`.
pub fn algo_config(base: &CscConfig, algo: Algo, power_steps: Option<usize>) -> CscConfig {
    let mut config = base.clone();
    config.spectral.backend = if algo == Algo::CscFast { Backend::Fast } else { Backend::Dense };
    config.spectral.power_steps = power_steps;
    config
}

/// One clustering run. `coreset` skips sampling.
pub fn run_once(
    g: &Graph,
    algo: Algo,
    config: &CscConfig,
    max_iters: usize,
    coreset: Option<&(Vec<usize>, Vec<f64>)>,
) -> csc_core::Result<Outcome> {
    if algo != Algo::Ckkm {
        return Ok(Outcome::Csc(match coreset {
            Some((v, w)) => csc_on_coreset(g, v, w, config)?,
            None => csc(g, config)?,
        }));
    }
    let begin = Instant::now();
    let kern = GraphKernel::new(g, config.sigma).map_err(|e| e.in_stage("kernel"))?;
    let sampled;
    let (vertices, weights) = match coreset {
        Some((v, w)) => (v, w),
        None => {
            let c = construct_coreset(
                &kern,
                config.k,
                config.eps,
                config.seed,
                config.max_rounds,
                &config.importance_for(g.n()),
            )
            .map_err(|e| e.in_stage("coreset"))?;
            sampled = (c.indices, c.weights);
            (&sampled.0, &sampled.1)
        }
    };
    let coreset_ms = begin.elapsed().as_secs_f64() * 1e3;
    let t = Instant::now();
    let label_sigma = config.label_sigma.unwrap_or(config.sigma);
    let label_kern = GraphKernel::new(g, label_sigma).map_err(|e| e.in_stage("kernel"))?;
    let result = coreset_kernel_kmeans_with(&kern, &label_kern, vertices, weights, config.k, config.seed, max_iters)
        .map_err(|e| e.in_stage("kernel-kmeans"))?;
    let kmeans_ms = t.elapsed().as_secs_f64() * 1e3;
    let ncut_full = ncut_trace_occupied(g, &result.labels).map_err(|e| e.in_stage("report"))?;
    let conductance_full = ncut_average_occupied(g, &result.labels).map_err(|e| e.in_stage("report"))?;
    Ok(Outcome::Ckkm(CkkmReport {
        labels: result.labels,
        coreset_vertices: vertices.clone(),
        coreset_weights: weights.clone(),
        coreset_labels: result.coreset_labels,
        ncut_full,
        conductance_full,
        objective_trace: result.objective_trace,
        iterations: result.iterations,
        timings: CkkmTimings {
            coreset_ms,
            kmeans_ms,
            total_ms: begin.elapsed().as_secs_f64() * 1e3,
        },
        params: config.clone(),
        max_iters,
        seed: config.seed,
    }))
}

#[derive(Debug, Serialize)]
struct RunRecord {
    run: usize,
    seed: u64,
    labels_path: String,
    coreset_size: usize,
    ncut_full: f64,
    conductance_full: f64,
    ari: Option<f64>,
    total_ms: f64,
    report: Outcome,
}

#[derive(Debug, Serialize)]
struct Summary {
    runs: usize,
    ari_median: Option<f64>,
    ari_mean: Option<f64>,
    ncut_full_mean: f64,
    ncut_full_std: f64,
    total_ms_mean: f64,
}

#[derive(Debug, Serialize)]
struct ClusterOutput {
    config: RunConfig,
    summary: Summary,
    runs: Vec<RunRecord>,
}

fn labels_path(out: &Path, run: usize, repeat: usize) -> PathBuf {
    if repeat == 1 {
        return out.to_path_buf();
    }
    let mut p = out.to_path_buf().into_os_string();
    p.push(format!(".{run}"));
    PathBuf::from(p)
}

pub fn run(args: ClusterArgs) -> CliResult<()> {
    if args.repeat == 0 {
        return Err(CliError::usage("--repeat must be at least 1"));
    }
    let mut config = RunConfig::new("cluster", args.sampling.seed);
    config.sampling(&args.sampling);
    config.algo = Some(args.algo);
    config.graph_sigma = Some(args.graph_sigma);
    config.label_sigma = Some(args.label_sigma);
    if args.algo == Algo::Ckkm {
        config.max_iters = Some(args.max_iters);
    } else {
        config.backend = Some(if args.algo == Algo::CscFast { Backend::Fast } else { Backend::Dense });
        config.power_steps = args.power_steps;
    }
    config.repeat = args.repeat;
    config.self_loops = args.graph.self_loops;
    config.input("graph", &args.graph.graph);
    if let Some(p) = &args.truth {
        config.input("truth", p);
    }
    if let Some(p) = &args.coreset {
        config.input("coreset", p);
    }
    config.output("labels", &args.out);
    if let Some(p) = &args.report {
        config.output("report", p);
    }

    let g = args.graph.load()?;
    let mut base = args.sampling.csc_config(g.n(), args.sampling.seed)?;
    base.graph_sigma = Some(args.graph_sigma);
    base.label_sigma = Some(args.label_sigma);
    base.validate(g.n()).map_err(|e| CliError::usage(e.to_string()))?;
    if args.power_steps == Some(0) {
        return Err(CliError::usage("--power-steps must be at least 1"));
    }
    let truth = args.truth.as_deref().map(|p| load_labels(p, g.n())).transpose()?;
    let coreset = match &args.coreset {
        Some(p) => {
            let (v, w) = load_coreset_points::<f64>(p).input()?;
            if let Some(&bad) = v.iter().find(|&&x| x >= g.n()) {
                return Err(CliError::usage(format!(
                    "{}: vertex {bad} is outside the graph (n = {})",
                    p.display(),
                    g.n()
                )));
            }
            Some((v, w))
        }
        None => None,
    };

    let runs: Vec<usize> = (0..args.repeat).collect();
    let outcomes = parallel_map(&runs, resolve_jobs(args.jobs), |_, &i| {
        let mut c = algo_config(&base, args.algo, args.power_steps);
        c.seed = base.seed.wrapping_add(i as u64);
        run_once(&g, args.algo, &c, args.max_iters, coreset.as_ref())
    });

    let mut records = Vec::with_capacity(args.repeat);
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome.map_err(|source| CliError::Run {
            context: args.graph.graph.display().to_string(),
            run: i,
            source,
        })?;
        let seed = base.seed.wrapping_add(i as u64);
        let ari = truth.as_ref().map(|t| ari(outcome.labels(), t)).transpose().compute()?;
        let path = labels_path(&args.out, i, args.repeat);
        let header = format!("{}# run {i} seed {seed}\n", config.header());
        write_file(&path, &(header + &io::format_labels(outcome.labels())))?;
        records.push(RunRecord {
            run: i,
            seed,
            labels_path: path.display().to_string(),
            coreset_size: outcome.coreset_size(),
            ncut_full: outcome.ncut_full(),
            conductance_full: outcome.conductance_full(),
            ari,
            total_ms: outcome.total_ms(),
            report: outcome,
        });
    }

    let aris: Vec<f64> = records.iter().filter_map(|r| r.ari).collect();
    let ncuts: Vec<f64> = records.iter().map(|r| r.ncut_full).collect();
    let times: Vec<f64> = records.iter().map(|r| r.total_ms).collect();
    let (ncut_full_mean, ncut_full_std) = mean_std(&ncuts);
    let summary = Summary {
        runs: records.len(),
        ari_median: median(&aris),
        ari_mean: (!aris.is_empty()).then(|| mean_std(&aris).0),
        ncut_full_mean,
        ncut_full_std,
        total_ms_mean: mean_std(&times).0,
    };
    emit_json(
        args.report.as_deref(),
        &ClusterOutput {
            config,
            summary,
            runs: records,
        },
    )
}
