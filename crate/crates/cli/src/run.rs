//! Pieces shared by the subcommands: the provenance record, argument groups,
//! input loading, output writing and the repeat scheduler.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use clap::{Args, ValueEnum};
use csc_core::clustering::CscConfig;
use csc_core::coreset::{Sampler, SensitivityRule};
use csc_core::graph::{io, GraphOptions};
use csc_core::spectral::Backend;
use csc_core::{Graph, Labeling};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Context};
use crate::generate::GeneratorConfig;

/// Everything needed to reproduce one invocation. Written into every output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    /// Input files by role (`graph`, `truth`, `labels`, `coreset`, `spec`, `points`).
    pub inputs: BTreeMap<String, String>,
    pub k: Option<usize>,
    pub eps: Option<f64>,
    pub sigma: Option<f64>,
    pub graph_sigma: Option<f64>,
    pub label_sigma: Option<f64>,
    pub coreset_frac: Option<f64>,
    pub size_override: Option<usize>,
    pub rounds: Option<usize>,
    pub sensitivity: Option<SensitivityRule>,
    pub sampler: Option<Sampler>,
    pub algo: Option<Algo>,
    pub backend: Option<Backend>,
    pub power_steps: Option<usize>,
    pub max_iters: Option<usize>,
    pub generator: Option<GeneratorConfig>,
    pub self_loops: bool,
    pub seed: u64,
    /// Output files by role.
    pub outputs: BTreeMap<String, String>,
    pub repeat: usize,
}

impl RunConfig {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            seed,
            repeat: 1,
            ..Default::default()
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) {
        self.inputs.insert(role.to_string(), path.display().to_string());
    }

    pub fn output(&mut self, role: &str, path: &Path) {
        self.outputs.insert(role.to_string(), path.display().to_string());
    }

    pub fn sampling(&mut self, s: &SamplingArgs) {
        self.k = Some(s.k);
        self.eps = Some(s.eps);
        self.sigma = Some(s.sigma);
        self.coreset_frac = s.coreset_frac;
        self.size_override = s.size_override;
        self.rounds = Some(s.rounds);
        self.sensitivity = Some(s.sensitivity.into());
    }

    /// One `#` comment line carrying this record as JSON.
    pub fn header(&self) -> String {
        format!("# csc {}\n", serde_json::to_string(self).expect("run config serialises"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    /// Coreset spectral clustering, dense eigensolver.
    Csc,
    /// Coreset spectral clustering, power-iteration eigensolver.
    CscFast,
    /// Weighted kernel k-means on the coreset.
    Ckkm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Fast,
    Naive,
}

impl From<SamplerArg> for Sampler {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Fast => Sampler::Fast,
            SamplerArg::Naive => Sampler::Naive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SensitivityArg {
    ClusterWeight,
    GlobalWeight,
}

impl From<SensitivityArg> for SensitivityRule {
    fn from(s: SensitivityArg) -> Self {
        match s {
            SensitivityArg::ClusterWeight => SensitivityRule::ClusterWeight,
            SensitivityArg::GlobalWeight => SensitivityRule::GlobalWeight,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GraphInput {
    /// Edge list (`u v [w]` per line) or Matrix Market file (`.mtx`).
    #[arg(long)]
    pub graph: PathBuf,
    /// Give isolated vertices a unit self-loop instead of rejecting the graph.
    #[arg(long)]
    pub self_loops: bool,
}

impl GraphInput {
    pub fn load(&self) -> CliResult<Graph> {
        load_graph(&self.graph, self.self_loops)
    }
}

/// Coreset construction parameters shared by `coreset` and `cluster`.
#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    /// Number of clusters.
    #[arg(short, long)]
    pub k: usize,
    /// Coreset accuracy, in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    /// Kernel shift used for D²-sampling and sensitivities.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Draw `ceil(frac·n)` points instead of the size formula.
    #[arg(long, conflicts_with = "size_override")]
    pub coreset_frac: Option<f64>,
    /// Draw exactly this many points.
    #[arg(long)]
    pub size_override: Option<usize>,
    /// Maximum importance-sampling rounds.
    #[arg(long, default_value_t = 1)]
    pub rounds: usize,
    #[arg(long, value_enum, default_value_t = SensitivityArg::GlobalWeight)]
    pub sensitivity: SensitivityArg,
}

impl SamplingArgs {
    /// Pipeline configuration for run seed `seed`; validated against `n`.
    pub fn csc_config(&self, n: usize, seed: u64) -> CliResult<CscConfig> {
        let mut config = CscConfig::new(self.k, self.eps, seed);
        config.sigma = self.sigma;
        config.coreset_frac = self.coreset_frac;
        config.max_rounds = self.rounds;
        config.importance.sensitivity = self.sensitivity.into();
        config.importance.size_override = self.size_override;
        if self.size_override == Some(0) {
            return Err(CliError::usage("--size-override must be at least 1"));
        }
        config.validate(n).map_err(|e| CliError::usage(e.to_string()))?;
        Ok(config)
    }
}

pub fn load_graph(path: &Path, self_loops: bool) -> CliResult<Graph> {
    let options = GraphOptions {
        self_loop_isolated: self_loops,
    };
    if path.extension().is_some_and(|e| e == "mtx") {
        io::load_matrix_market(path, options).input()
    } else {
        io::load_edge_list(path, options).input()
    }
}

/// Loads a labelling and checks that it covers `n` vertices.
pub fn load_labels(path: &Path, n: usize) -> CliResult<Labeling> {
    let labels = io::load_labels(path).input()?;
    if labels.len() != n {
        return Err(CliError::usage(format!(
            "{} has {} labels but the graph has {n} vertices",
            path.display(),
            labels.len()
        )));
    }
    Ok(labels)
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::Output {
        path: path.display().to_string(),
        source,
    })
}

/// Pretty JSON to `path`, or to stdout when no path is given.
pub fn emit_json(path: Option<&Path>, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report serialises") + "\n";
    match path {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn parse_jobs(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(j) if j >= 1 => Ok(j),
        _ => Err(format!("'{s}' is not a positive job count")),
    }
}

/// `--jobs` if given (or `CSC_JOBS`), else the available parallelism.
pub fn resolve_jobs(jobs: Option<usize>) -> usize {
    jobs.unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Applies `f` to every item on up to `jobs` threads; results keep item order.
pub fn parallel_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(usize, &T) -> R + Sync) -> Vec<R> {
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().enumerate().map(|(i, x)| f(i, x)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|s| {
        for _ in 0..jobs.min(items.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(i, &items[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len().is_multiple_of(2) { (v[m - 1] + v[m]) / 2.0 } else { v[m] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<usize> = (0..37).collect();
        for jobs in [1, 3, 8] {
            let out = parallel_map(&items, jobs, |i, &x| i * 100 + x);
            assert_eq!(out, items.iter().map(|&x| x * 101).collect::<Vec<_>>());
        }
    }

    #[test]
    fn mean_std_sample() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn jobs_parser() {
        assert_eq!(parse_jobs("4"), Ok(4));
        assert!(parse_jobs("0").is_err());
        assert!(parse_jobs("x").is_err());
    }
}
