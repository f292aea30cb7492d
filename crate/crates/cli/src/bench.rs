//! Declarative sweeps. A spec is a JSON array of entries; every list-valued grid
//! field (`k`, `sampler`, `algo`, `coreset_frac`, `size_override`) is expanded into
//! a cartesian product and each point is run `repeat` times.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use csc_core::clustering::CscConfig;
use csc_core::coreset::{construct_coreset, Sampler, SensitivityRule};
use csc_core::graph::{gaussian_blobs, generate_sbm, knn_graph, SbmParams};
use csc_core::kernel::GraphKernel;
use csc_core::metrics::ari;
use csc_core::spectral::Backend;
use csc_core::{Graph, Labeling};
use serde::Deserialize;

use crate::cluster::{algo_config, run_once};
use crate::error::{CliError, CliResult};
use crate::generate::{GeneratorConfig, Kind};
use crate::run::{load_graph, load_labels, mean_std, parallel_map, parse_jobs, resolve_jobs, write_file, Algo, RunConfig};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSON spec: an array of run entries.
    #[arg(long)]
    pub spec: PathBuf,
    /// CSV to write; printed to stdout when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Concurrent runs.
    #[arg(long, env = "CSC_JOBS", value_parser = parse_jobs)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Task {
    Coreset,
    Cluster,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
enum GraphSpec {
    Sbm {
        k: usize,
        cluster_size: usize,
        #[serde(default = "default_p")]
        p: f64,
        q: Option<f64>,
        #[serde(default)]
        seed: u64,
    },
    Knn {
        k: usize,
        cluster_size: usize,
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "default_spread")]
        spread: f64,
        #[serde(default = "default_neighbours")]
        neighbours: usize,
        #[serde(default)]
        seed: u64,
    },
    Path(PathBuf),
}

fn default_p() -> f64 {
    0.5
}
fn default_dim() -> usize {
    2
}
fn default_spread() -> f64 {
    10.0
}
fn default_neighbours() -> usize {
    10
}
fn default_eps() -> f64 {
    0.5
}
fn default_sigma() -> f64 {
    1.0
}
fn default_one() -> usize {
    1
}
fn default_max_iters() -> usize {
    100
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    name: Option<String>,
    task: Task,
    graph: GraphSpec,
    truth: Option<PathBuf>,
    #[serde(default)]
    self_loops: bool,
    k: OneOrMany<usize>,
    #[serde(default = "default_eps")]
    eps: f64,
    #[serde(default = "default_sigma")]
    sigma: f64,
    sampler: Option<OneOrMany<Sampler>>,
    algo: Option<OneOrMany<Algo>>,
    coreset_frac: Option<OneOrMany<f64>>,
    size_override: Option<OneOrMany<usize>>,
    #[serde(default = "default_one")]
    rounds: usize,
    sensitivity: Option<SensitivityRule>,
    #[serde(default = "default_one")]
    repeat: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_max_iters")]
    max_iters: usize,
}

/// A validated spec entry.
#[derive(Debug, Clone)]
struct Entry {
    name: String,
    task: Task,
    graph: GraphSpec,
    truth: Option<PathBuf>,
    self_loops: bool,
    ks: Vec<usize>,
    eps: f64,
    sigma: f64,
    samplers: Vec<Sampler>,
    algos: Vec<Algo>,
    /// `(coreset_frac, size_override)` choices.
    sizes: Vec<(Option<f64>, Option<usize>)>,
    rounds: usize,
    sensitivity: SensitivityRule,
    repeat: usize,
    seed: u64,
    max_iters: usize,
}

fn nonempty<T>(field: &str, v: Vec<T>) -> Result<Vec<T>, String> {
    if v.is_empty() {
        Err(format!("'{field}' must not be an empty list"))
    } else {
        Ok(v)
    }
}

impl TryFrom<RawEntry> for Entry {
    type Error = String;

    fn try_from(raw: RawEntry) -> Result<Self, String> {
        let ks = nonempty("k", raw.k.into_vec())?;
        if let Some(&k) = ks.iter().find(|&&k| k < 2) {
            return Err(format!("k must be at least 2, got {k}"));
        }
        if !(raw.eps > 0.0 && raw.eps < 1.0) {
            return Err(format!("eps must lie in (0, 1), got {}", raw.eps));
        }
        if !(raw.sigma >= 0.0 && raw.sigma.is_finite()) {
            return Err(format!("sigma must be finite and nonnegative, got {}", raw.sigma));
        }
        if raw.repeat == 0 || raw.rounds == 0 || raw.max_iters == 0 {
            return Err("repeat, rounds and max_iters must be at least 1".into());
        }
        let samplers = match (raw.task, raw.sampler) {
            (Task::Coreset, s) => nonempty("sampler", s.map_or(vec![Sampler::Fast], OneOrMany::into_vec))?,
            (Task::Cluster, None) => vec![Sampler::Fast],
            (Task::Cluster, Some(_)) => return Err("'sampler' applies to coreset tasks only".into()),
        };
        let algos = match (raw.task, raw.algo) {
            (Task::Cluster, a) => nonempty("algo", a.map_or(vec![Algo::Csc], OneOrMany::into_vec))?,
            (Task::Coreset, None) => vec![Algo::Csc],
            (Task::Coreset, Some(_)) => return Err("'algo' applies to cluster tasks only".into()),
        };
        let sizes = match (raw.coreset_frac, raw.size_override) {
            (Some(_), Some(_)) => return Err("give at most one of 'coreset_frac' and 'size_override'".into()),
            (Some(f), None) => {
                let fs = nonempty("coreset_frac", f.into_vec())?;
                if let Some(f) = fs.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
                    return Err(format!("coreset_frac must lie in (0, 1], got {f}"));
                }
                fs.into_iter().map(|f| (Some(f), None)).collect()
            }
            (None, Some(s)) => {
                let ss = nonempty("size_override", s.into_vec())?;
                if ss.contains(&0) {
                    return Err("size_override must be at least 1".into());
                }
                ss.into_iter().map(|s| (None, Some(s))).collect()
            }
            (None, None) => vec![(None, None)],
        };
        let name = raw.name.unwrap_or_else(|| match raw.task {
            Task::Coreset => "coreset".into(),
            Task::Cluster => "cluster".into(),
        });
        Ok(Entry {
            name,
            task: raw.task,
            graph: raw.graph,
            truth: raw.truth,
            self_loops: raw.self_loops,
            ks,
            eps: raw.eps,
            sigma: raw.sigma,
            samplers,
            algos,
            sizes,
            rounds: raw.rounds,
            sensitivity: raw.sensitivity.unwrap_or(SensitivityRule::GlobalWeight),
            repeat: raw.repeat,
            seed: raw.seed,
            max_iters: raw.max_iters,
        })
    }
}

/// 1-based line of the opening brace of each top-level array element.
fn entry_lines(text: &str) -> Vec<usize> {
    let mut lines = Vec::new();
    let (mut depth, mut line) = (0usize, 1usize);
    let (mut in_string, mut escaped) = (false, false);
    for c in text.chars() {
        if c == '\n' {
            line += 1;
        }
        if in_string {
            match (escaped, c) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '[' | '{' => {
                if depth == 1 && c == '{' {
                    lines.push(line);
                }
                depth += 1;
            }
            ']' | '}' => depth = depth.saturating_sub(1),
            _ => {}
        }
    }
    lines
}

/// Parses a bench spec; `source` names it in error messages.
fn parse_spec(text: &str, source: &str) -> CliResult<(Vec<Entry>, Vec<usize>)> {
    if text.trim().is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let raw: Vec<RawEntry> = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
        CliError::usage(format!("{source}:{}:{}: {msg}", e.line(), e.column()))
    })?;
    let lines = entry_lines(text);
    let entries = raw
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            Entry::try_from(r).map_err(|msg| {
                CliError::usage(format!("{source}:{}: entry {i}: {msg}", lines.get(i).copied().unwrap_or(1)))
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok((entries, lines))
}

struct Prepared {
    graph: Graph,
    truth: Option<Labeling>,
    description: String,
    generator: Option<GeneratorConfig>,
    path: Option<PathBuf>,
}

fn prepare(entry: &Entry, base: &Path, at: &str) -> CliResult<Prepared> {
    let fail = |e: csc_core::Error| CliError::usage(format!("{at}: {e}"));
    let (graph, truth, description, generator, path) = match &entry.graph {
        &GraphSpec::Sbm {
            k,
            cluster_size,
            p,
            q,
            seed,
        } => {
            let q = q.unwrap_or(0.001 / k as f64);
            let mut params = SbmParams::new(k, cluster_size, p, q, seed);
            params.self_loop_isolated = entry.self_loops;
            let (g, t) = generate_sbm(&params).map_err(fail)?;
            let gen = GeneratorConfig {
                kind: Kind::Sbm,
                k: Some(k),
                cluster_size: Some(cluster_size),
                p: Some(p),
                q: Some(q),
                dim: None,
                spread: None,
                neighbours: None,
            };
            let d = format!("sbm(k={k} size={cluster_size} p={p} q={q} seed={seed})");
            (g, Some(t), d, Some(gen), None)
        }
        &GraphSpec::Knn {
            k,
            cluster_size,
            dim,
            spread,
            neighbours,
            seed,
        } => {
            let (points, t) = gaussian_blobs(k, cluster_size, dim, spread, seed).map_err(fail)?;
            let g = knn_graph(&points, neighbours).map_err(fail)?;
            let gen = GeneratorConfig {
                kind: Kind::Knn,
                k: Some(k),
                cluster_size: Some(cluster_size),
                p: None,
                q: None,
                dim: Some(dim),
                spread: Some(spread),
                neighbours: Some(neighbours),
            };
            let d = format!("knn(k={k} size={cluster_size} dim={dim} spread={spread} neighbours={neighbours} seed={seed})");
            (g, Some(t), d, Some(gen), None)
        }
        GraphSpec::Path(p) => {
            let p = base.join(p);
            let g = load_graph(&p, entry.self_loops).map_err(|e| CliError::usage(format!("{at}: {e}")))?;
            (g, None, p.display().to_string(), None, Some(p))
        }
    };
    let truth = match &entry.truth {
        Some(p) => Some(load_labels(&base.join(p), graph.n()).map_err(|e| CliError::usage(format!("{at}: {e}")))?),
        None => truth,
    };
    Ok(Prepared {
        graph,
        truth,
        description,
        generator,
        path,
    })
}

/// One grid point of one entry.
struct Point {
    entry: usize,
    k: usize,
    sampler: Sampler,
    algo: Algo,
    coreset_frac: Option<f64>,
    size_override: Option<usize>,
    config: CscConfig,
}

#[derive(Debug, Clone, Default)]
struct Measure {
    coreset_size: f64,
    seconds: f64,
    seeding_ms: Option<f64>,
    sampling_ms: Option<f64>,
    neighbour_checks: Option<f64>,
    ncut: Option<f64>,
    ari: Option<f64>,
}

fn measure(entry: &Entry, prepared: &Prepared, point: &Point, seed: u64) -> csc_core::Result<Measure> {
    let g = &prepared.graph;
    match entry.task {
        Task::Coreset => {
            let start = Instant::now();
            let kern = GraphKernel::new(g, point.config.sigma)?;
            let mut importance = point.config.importance_for(g.n());
            importance.sampler = point.sampler;
            let c = construct_coreset(&kern, point.k, entry.eps, seed, entry.rounds, &importance)?;
            Ok(Measure {
                coreset_size: c.len() as f64,
                seconds: start.elapsed().as_secs_f64(),
                seeding_ms: Some(c.stats.iter().map(|s| s.seeding_ms).sum()),
                sampling_ms: Some(c.stats.iter().map(|s| s.sampling_ms).sum()),
                neighbour_checks: Some(c.stats.iter().map(|s| s.neighbour_checks as f64).sum()),
                ncut: None,
                ari: None,
            })
        }
        Task::Cluster => {
            let mut config = algo_config(&point.config, point.algo, None);
            config.seed = seed;
            let start = Instant::now();
            let outcome = run_once(g, point.algo, &config, entry.max_iters, None)?;
            let seconds = start.elapsed().as_secs_f64();
            let ari = prepared.truth.as_ref().map(|t| ari(outcome.labels(), t)).transpose()?;
            Ok(Measure {
                coreset_size: outcome.coreset_size() as f64,
                seconds,
                ncut: Some(outcome.ncut_full()),
                ari,
                ..Default::default()
            })
        }
    }
}

const METRICS: [&str; 7] = [
    "coreset_size",
    "seconds",
    "seeding_ms",
    "sampling_ms",
    "neighbour_checks",
    "ncut",
    "ari",
];

fn header() -> Vec<String> {
    let mut h: Vec<String> = [
        "entry", "name", "task", "algo", "sampler", "backend", "graph", "n", "m", "k", "eps", "sigma",
        "coreset_frac", "size_override", "seed", "kind", "repeat",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for m in METRICS {
        h.push(m.to_string());
        h.push(format!("{m}_std"));
    }
    h.push("config".into());
    h
}

fn values(m: &Measure) -> [Option<f64>; 7] {
    [
        Some(m.coreset_size),
        Some(m.seconds),
        m.seeding_ms,
        m.sampling_ms,
        m.neighbour_checks,
        m.ncut,
        m.ari,
    ]
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

pub fn run(args: BenchArgs) -> CliResult<()> {
    let source = args.spec.display().to_string();
    let text = fs::read_to_string(&args.spec).map_err(|e| CliError::usage(format!("cannot read {source}: {e}")))?;
    let (entries, lines) = parse_spec(&text, &source)?;
    let base = args.spec.parent().unwrap_or(Path::new("."));
    let at = |i: usize| format!("{source}:{}: entry {i}", lines.get(i).copied().unwrap_or(1));

    let mut prepared = Vec::with_capacity(entries.len());
    let mut points = Vec::new();
    for (i, entry) in entries.iter().enumerate() {
        let p = prepare(entry, base, &at(i))?;
        for &k in &entry.ks {
            for &sampler in &entry.samplers {
                for &algo in &entry.algos {
                    for &(coreset_frac, size_override) in &entry.sizes {
                        let mut config = CscConfig::new(k, entry.eps, entry.seed);
                        config.sigma = entry.sigma;
                        config.coreset_frac = coreset_frac;
                        config.max_rounds = entry.rounds;
                        config.importance.sensitivity = entry.sensitivity;
                        config.importance.size_override = size_override;
                        config
                            .validate(p.graph.n())
                            .map_err(|e| CliError::usage(format!("{}: {e}", at(i))))?;
                        points.push(Point {
                            entry: i,
                            k,
                            sampler,
                            algo,
                            coreset_frac,
                            size_override,
                            config,
                        });
                    }
                }
            }
        }
        prepared.push(p);
    }

    let jobs: Vec<(usize, usize)> = points
        .iter()
        .enumerate()
        .flat_map(|(pi, p)| (0..entries[p.entry].repeat).map(move |r| (pi, r)))
        .collect();
    let results = parallel_map(&jobs, resolve_jobs(args.jobs), |_, &(pi, r)| {
        let p = &points[pi];
        let e = &entries[p.entry];
        measure(e, &prepared[p.entry], p, e.seed.wrapping_add(r as u64))
    });

    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(header()).map_err(csv_err)?;
    let mut results = results.into_iter();
    for p in &points {
        let e = &entries[p.entry];
        let prep = &prepared[p.entry];
        let backend = match (e.task, p.algo) {
            (Task::Cluster, Algo::Csc) => Some(Backend::Dense),
            (Task::Cluster, Algo::CscFast) => Some(Backend::Fast),
            _ => None,
        };
        let row_config = |seed: u64| {
            let mut c = RunConfig::new("bench", seed);
            c.input("spec", &args.spec);
            if let Some(path) = &prep.path {
                c.input("graph", path);
            }
            if let Some(t) = &e.truth {
                c.input("truth", &base.join(t));
            }
            c.k = Some(p.k);
            c.eps = Some(e.eps);
            c.sigma = Some(e.sigma);
            c.coreset_frac = p.coreset_frac;
            c.size_override = p.size_override;
            c.rounds = Some(e.rounds);
            c.sensitivity = Some(e.sensitivity);
            match e.task {
                Task::Coreset => c.sampler = Some(p.sampler),
                Task::Cluster => {
                    c.algo = Some(p.algo);
                    c.backend = backend;
                    if p.algo == Algo::Ckkm {
                        c.max_iters = Some(e.max_iters);
                    } else {
                        c.graph_sigma = p.config.graph_sigma;
                        c.label_sigma = p.config.label_sigma;
                    }
                }
            }
            c.generator = prep.generator.clone();
            c.self_loops = e.self_loops;
            c.repeat = e.repeat;
            serde_json::to_string(&c).expect("run config serialises")
        };
        let fixed = |seed: u64, kind: &str, repeat: usize| -> Vec<String> {
            vec![
                p.entry.to_string(),
                e.name.clone(),
                format!("{:?}", e.task).to_lowercase(),
                match e.task {
                    Task::Cluster => serde_json::to_value(p.algo).unwrap().as_str().unwrap().to_string(),
                    Task::Coreset => String::new(),
                },
                match e.task {
                    Task::Coreset => serde_json::to_value(p.sampler).unwrap().as_str().unwrap().to_string(),
                    Task::Cluster => String::new(),
                },
                opt(backend.map(|b| serde_json::to_value(b).unwrap().as_str().unwrap().to_string())),
                prep.description.clone(),
                prep.graph.n().to_string(),
                prep.graph.num_edges().to_string(),
                p.k.to_string(),
                e.eps.to_string(),
                e.sigma.to_string(),
                opt(p.coreset_frac),
                opt(p.size_override),
                seed.to_string(),
                kind.to_string(),
                repeat.to_string(),
            ]
        };

        let mut measures = Vec::with_capacity(e.repeat);
        for r in 0..e.repeat {
            let seed = e.seed.wrapping_add(r as u64);
            let m = results.next().expect("one result per run").map_err(|source| CliError::Run {
                context: at(p.entry),
                run: r,
                source,
            })?;
            let mut row = fixed(seed, "run", r);
            for v in values(&m) {
                row.push(opt(v));
                row.push(String::new());
            }
            row.push(row_config(seed));
            out.write_record(&row).map_err(csv_err)?;
            measures.push(m);
        }
        let mut row = fixed(e.seed, "aggregate", e.repeat);
        for j in 0..METRICS.len() {
            let xs: Vec<f64> = measures.iter().filter_map(|m| values(m)[j]).collect();
            if xs.is_empty() {
                row.push(String::new());
                row.push(String::new());
            } else {
                let (mean, std) = mean_std(&xs);
                row.push(mean.to_string());
                row.push(std.to_string());
            }
        }
        row.push(row_config(e.seed));
        out.write_record(&row).map_err(csv_err)?;
    }
    let bytes = out.into_inner().map_err(|e| csv_err(e.into_error().into()))?;
    let text = String::from_utf8(bytes).expect("csv is utf-8");
    match &args.out {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Output {
        path: "csv".into(),
        source: std::io::Error::other(e),
    }
}
