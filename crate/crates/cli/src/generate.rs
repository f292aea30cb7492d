use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use csc_core::graph::{gaussian_blobs, generate_sbm, io, knn_graph, SbmParams};
use csc_core::{Graph, Labeling};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Context};
use crate::run::{emit_json, write_file, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// Stochastic block model with equal clusters.
    Sbm,
    /// k-nearest-neighbour graph of Gaussian blobs (or of `--points`).
    Knn,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: Kind,
    /// Number of planted clusters.
    #[arg(short, long, required_unless_present = "points")]
    pub k: Option<usize>,
    /// Vertices per planted cluster.
    #[arg(long, required_unless_present = "points")]
    pub cluster_size: Option<usize>,
    /// Within-cluster edge probability (sbm).
    #[arg(short, long, default_value_t = 0.5)]
    pub p: f64,
    /// Between-cluster edge probability (sbm); `0.001/k` when omitted.
    #[arg(short, long)]
    pub q: Option<f64>,
    /// Point dimension (knn).
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Blob centers are uniform in `[-spread, spread]^dim` (knn).
    #[arg(long, default_value_t = 10.0)]
    pub spread: f64,
    /// Neighbours per point (knn).
    #[arg(long, default_value_t = 10)]
    pub neighbours: usize,
    /// Build the knn graph over these points (one whitespace-separated row per line).
    #[arg(long, conflicts_with_all = ["k", "cluster_size"])]
    pub points: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Give isolated vertices a unit self-loop.
    #[arg(long)]
    pub self_loops: bool,
    /// Edge list to write.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Ground-truth labels to write; `<out>.labels` when omitted.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
}

/// Generator parameters as recorded in the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub kind: Kind,
    pub k: Option<usize>,
    pub cluster_size: Option<usize>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub dim: Option<usize>,
    pub spread: Option<f64>,
    pub neighbours: Option<usize>,
}

#[derive(Serialize)]
struct Summary<'a> {
    n: usize,
    m: usize,
    d_avg: f64,
    config: &'a RunConfig,
}

impl GenerateArgs {
    fn generator(&self) -> CliResult<GeneratorConfig> {
        let mut g = GeneratorConfig {
            kind: self.kind,
            k: self.k,
            cluster_size: self.cluster_size,
            p: None,
            q: None,
            dim: None,
            spread: None,
            neighbours: None,
        };
        if let (Some(k), Some(size)) = (self.k, self.cluster_size) {
            if k == 0 || size == 0 || k * size < 2 {
                return Err(CliError::usage(format!(
                    "need k, cluster-size >= 1 and at least two vertices, got k = {k}, cluster-size = {size}"
                )));
            }
        }
        match self.kind {
            Kind::Sbm => {
                let Some(k) = self.k else {
                    return Err(CliError::usage("sbm needs --k and --cluster-size"));
                };
                let q = self.q.unwrap_or(0.001 / k as f64);
                for (name, v) in [("p", self.p), ("q", q)] {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(CliError::usage(format!("--{name} must lie in [0, 1], got {v}")));
                    }
                }
                g.p = Some(self.p);
                g.q = Some(q);
            }
            Kind::Knn => {
                if self.neighbours == 0 {
                    return Err(CliError::usage("--neighbours must be at least 1"));
                }
                if self.points.is_none() {
                    if self.dim == 0 {
                        return Err(CliError::usage("--dim must be at least 1"));
                    }
                    if !(self.spread >= 0.0 && self.spread.is_finite()) {
                        return Err(CliError::usage(format!("--spread must be finite and nonnegative, got {}", self.spread)));
                    }
                    let n = self.k.unwrap_or(0) * self.cluster_size.unwrap_or(0);
                    if n <= self.neighbours {
                        return Err(CliError::usage(format!(
                            "knn needs more points than neighbours, got n = {n}, neighbours = {}",
                            self.neighbours
                        )));
                    }
                    g.dim = Some(self.dim);
                    g.spread = Some(self.spread);
                }
                g.neighbours = Some(self.neighbours);
            }
        }
        Ok(g)
    }
}

fn read_points(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let row = content
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
        points.push(row);
    }
    Ok(points)
}

pub fn run(args: GenerateArgs) -> CliResult<()> {
    let generator = args.generator()?;
    let mut config = RunConfig::new("generate", args.seed);
    config.self_loops = args.self_loops;
    if let Some(p) = &args.points {
        config.input("points", p);
    }

    let (graph, truth): (Graph, Option<Labeling>) = match args.kind {
        Kind::Sbm => {
            let mut params = SbmParams::new(
                generator.k.unwrap(),
                generator.cluster_size.unwrap(),
                generator.p.unwrap(),
                generator.q.unwrap(),
                args.seed,
            );
            params.self_loop_isolated = args.self_loops;
            let (g, t) = generate_sbm(&params).input()?;
            (g, Some(t))
        }
        Kind::Knn => match &args.points {
            Some(path) => (knn_graph(&read_points(path)?, args.neighbours).input()?, None),
            None => {
                let (points, t) = gaussian_blobs(
                    generator.k.unwrap(),
                    generator.cluster_size.unwrap(),
                    args.dim,
                    args.spread,
                    args.seed,
                )
                .input()?;
                (knn_graph(&points, args.neighbours).input()?, Some(t))
            }
        },
    };
    config.generator = Some(generator);

    let labels_path = truth.as_ref().map(|_| {
        args.labels_out.clone().unwrap_or_else(|| {
            let mut p = args.out.clone().into_os_string();
            p.push(".labels");
            PathBuf::from(p)
        })
    });
    config.output("graph", &args.out);
    if let Some(p) = &labels_path {
        config.output("labels", p);
    }
    let header = config.header();
    write_file(&args.out, &(header.clone() + &io::format_edge_list(&graph)))?;
    if let (Some(path), Some(t)) = (&labels_path, &truth) {
        write_file(path, &(header + &io::format_labels(t)))?;
    }
    emit_json(
        None,
        &Summary {
            n: graph.n(),
            m: graph.num_edges(),
            d_avg: graph.avg_degree(),
            config: &config,
        },
    )
}
