//! Importance-sampling coresets for weighted kernel k-means and the coreset graph.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{io, GraphOptions, SparseGraph};
use crate::kernel::GraphKernel;
use crate::scalar::Real;
use crate::seeding::{fast_d2_sample, naive_d2_sample, NaiveOptions};
use crate::SeedRng;

/// Per-point sensitivity bound used as the sampling distribution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitivityRule {
    /// `w(x)Δ(x, C*)/cost + w(x)/w(cluster of x)`.
    #[default]
    ClusterWeight,
    /// `w(x)Δ(x, C*)/cost + w(x)/w(X)`.
    GlobalWeight,
}

/// D²-sampler used on the full graph. Weighted subsets always use the dense sampler.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampler {
    #[default]
    Fast,
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImportanceConfig {
    /// Constant in `N = ⌈C·k²·ln²(k+1)·ln(n)/ε^e⌉`.
    pub size_constant: f64,
    /// Exponent `e` of ε in the sample-size formula.
    pub eps_exponent: f64,
    /// Number of draws, bypassing the formula.
    pub size_override: Option<usize>,
    pub sensitivity: SensitivityRule,
    pub sampler: Sampler,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        Self {
            size_constant: 0.2,
            eps_exponent: 4.0,
            size_override: None,
            sensitivity: SensitivityRule::ClusterWeight,
            sampler: Sampler::Fast,
        }
    }
}

impl ImportanceConfig {
    /// Number of i.i.d. draws for a point set of size `m`.
    pub fn draws(&self, k: usize, eps: f64, m: usize) -> usize {
        if let Some(n) = self.size_override {
            return n.max(1);
        }
        let k = k as f64;
        let ln_k = (k + 1.0).ln();
        let raw = self.size_constant * k * k * ln_k * ln_k * (m.max(2) as f64).ln() / eps.powf(self.eps_exponent);
        (raw.ceil() as usize).clamp(1, m.max(1))
    }
}

/// Vertices of the graph with weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSet<T> {
    pub vertices: Vec<usize>,
    pub weights: Vec<T>,
    full_graph: bool,
}

impl<T: Real> WeightedSet<T> {
    /// Every vertex with `w = deg`.
    pub fn full(kern: &GraphKernel<'_, T>) -> Self {
        Self {
            vertices: (0..kern.n()).collect(),
            weights: kern.weights().to_vec(),
            full_graph: true,
        }
    }

    pub fn new(vertices: Vec<usize>, weights: Vec<T>) -> Result<Self> {
        if vertices.len() != weights.len() {
            return Err(Error::LengthMismatch {
                left: vertices.len(),
                right: weights.len(),
            });
        }
        Ok(Self {
            vertices,
            weights,
            full_graph: false,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn total_weight(&self) -> T {
        self.weights.iter().copied().sum()
    }
}

/// Instrumentation from one importance-sampling pass.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplingStats {
    pub seeding_ms: f64,
    pub sampling_ms: f64,
    pub neighbour_checks: u64,
    pub seeds: usize,
    pub draws: usize,
    pub seeding_cost: f64,
}

/// Where a coreset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresetSource {
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
    pub k: usize,
    pub eps: f64,
    pub rounds: usize,
    pub config: ImportanceConfig,
}

/// A reweighted vertex subset: sorted distinct indices with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Coreset<T> {
    pub indices: Vec<usize>,
    pub weights: Vec<T>,
    pub source: CoresetSource,
    /// One entry per importance-sampling round.
    pub stats: Vec<SamplingStats>,
}

impl<T: Real> Coreset<T> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn total_weight(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// The whole graph with `w = deg`.
    pub fn identity(kern: &GraphKernel<'_, T>) -> Self {
        Self {
            indices: (0..kern.n()).collect(),
            weights: kern.weights().to_vec(),
            source: CoresetSource {
                n: kern.n(),
                sigma: kern.sigma().as_f64(),
                seed: 0,
                k: 0,
                eps: 0.0,
                rounds: 0,
                config: ImportanceConfig::default(),
            },
            stats: Vec::new(),
        }
    }
}

/// One round of sensitivity sampling over `points`.
pub fn importance_sample<T: Real, R: Rng + ?Sized>(
    kern: &GraphKernel<'_, T>,
    points: &WeightedSet<T>,
    k: usize,
    eps: f64,
    rng: &mut R,
    config: &ImportanceConfig,
) -> Result<(WeightedSet<T>, SamplingStats)> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    let m = points.len();
    let seeding_start = Instant::now();
    let seeding = if points.full_graph && config.sampler == Sampler::Fast {
        fast_d2_sample(kern, k, rng)?
    } else {
        naive_d2_sample(kern, &points.vertices, &points.weights, k.min(m), rng, NaiveOptions::default())?
    };
    let seeding_ms = seeding_start.elapsed().as_secs_f64() * 1e3;
    let cost: T = seeding
        .deltas
        .iter()
        .zip(&points.weights)
        .map(|(&d, &w)| w * d)
        .sum();
    let mut stats = SamplingStats {
        seeding_ms,
        neighbour_checks: seeding.neighbour_checks,
        seeds: seeding.centers.len(),
        seeding_cost: cost.as_f64(),
        ..Default::default()
    };
    let sampling_start = Instant::now();
    if !(cost > T::zero()) {
        let (vertices, weights) = points
            .vertices
            .iter()
            .zip(&points.weights)
            .filter(|(_, &w)| w > T::zero())
            .map(|(&v, &w)| (v, w))
            .unzip();
        stats.sampling_ms = sampling_start.elapsed().as_secs_f64() * 1e3;
        return Ok((WeightedSet::new(vertices, weights)?, stats));
    }

    let smoothing: Vec<T> = match config.sensitivity {
        SensitivityRule::ClusterWeight => {
            let mut cluster_weight = vec![T::zero(); kern.n()];
            for (&c, &w) in seeding.nearest.iter().zip(&points.weights) {
                cluster_weight[c] += w;
            }
            seeding
                .nearest
                .iter()
                .zip(&points.weights)
                .map(|(&c, &w)| if w > T::zero() { w / cluster_weight[c] } else { T::zero() })
                .collect()
        }
        SensitivityRule::GlobalWeight => {
            let total = points.total_weight();
            points.weights.iter().map(|&w| w / total).collect()
        }
    };
    let sensitivity: Vec<T> = seeding
        .deltas
        .iter()
        .zip(&points.weights)
        .zip(&smoothing)
        .map(|((&d, &w), &s)| w * d / cost + s)
        .collect();
    let sens_total: T = sensitivity.iter().copied().sum();
    let probs: Vec<T> = sensitivity.iter().map(|&s| s / sens_total).collect();

    let draws = config.draws(k, eps, m);
    stats.draws = draws;
    let dist = WeightedIndex::new(probs.iter().map(|p| p.as_f64()))
        .map_err(|e| Error::Domain(format!("invalid sampling distribution: {e}")))?;
    let n_draws = T::of_usize(draws);
    let mut merged = vec![T::zero(); m];
    let mut hit = vec![false; m];
    for _ in 0..draws {
        let i = dist.sample(rng);
        merged[i] += points.weights[i] / (probs[i] * n_draws);
        hit[i] = true;
    }
    let mut picked: Vec<(usize, T)> = (0..m)
        .filter(|&i| hit[i])
        .map(|i| (points.vertices[i], merged[i]))
        .collect();
    picked.sort_by_key(|&(v, _)| v);
    let (vertices, weights) = picked.into_iter().unzip();
    stats.sampling_ms = sampling_start.elapsed().as_secs_f64() * 1e3;
    Ok((WeightedSet::new(vertices, weights)?, stats))
}

/// `ln` applied `times` times, floored at 1.
fn iterated_ln(x: f64, times: usize) -> f64 {
    let mut v = x;
    for _ in 0..times {
        if v <= std::f64::consts::E {
            return 1.0;
        }
        v = v.ln();
    }
    v.max(1.0)
}

/// Repeated importance sampling with `ε_i = ε / (ln⁽ⁱ⁾ n)^{1/4}`, feeding each round's
/// weighted output into the next until the support stops shrinking or `max_rounds`
/// rounds have run.
pub fn construct_coreset<T: Real>(
    kern: &GraphKernel<'_, T>,
    k: usize,
    eps: f64,
    seed: u64,
    max_rounds: usize,
    config: &ImportanceConfig,
) -> Result<Coreset<T>> {
    if max_rounds == 0 {
        return Err(Error::Domain("max_rounds must be at least 1".into()));
    }
    let mut rng = SeedRng::seed_from_u64(seed);
    let n = kern.n();
    let mut current = WeightedSet::full(kern);
    let mut all_stats = Vec::new();
    let mut rounds = 0;
    for round in 1..=max_rounds {
        if round > 1 && current.len() <= k {
            break;
        }
        let eps_i = eps / iterated_ln(n as f64, round).powf(0.25);
        let (next, stats) = importance_sample(kern, &current, k, eps_i, &mut rng, config)?;
        all_stats.push(stats);
        rounds = round;
        let shrank = next.len() < current.len();
        current = next;
        if !shrank {
            break;
        }
    }
    Ok(Coreset {
        indices: current.vertices,
        weights: current.weights,
        source: CoresetSource {
            n,
            sigma: kern.sigma().as_f64(),
            seed,
            k,
            eps,
            rounds,
            config: *config,
        },
        stats: all_stats,
    })
}

/// `A_H = W_H K(V′) W_H` over the coreset vertices, with degrees and the map back to `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoresetGraph<T> {
    pub adjacency: SparseGraph<T>,
    /// Original vertex id of each coreset-graph vertex.
    pub vertices: Vec<usize>,
    pub weights: Vec<T>,
}

impl<T: Real> CoresetGraph<T> {
    pub fn degrees(&self) -> &[T] {
        self.adjacency.degrees()
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    /// Writes the adjacency as an edge list and `<path>.weights` with `vertex weight` lines.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        io::save_edge_list(&self.adjacency, path)?;
        let sidecar = format_weighted(&self.vertices, &self.weights);
        let side = path.with_extension(weights_extension(path));
        std::fs::write(&side, sidecar).map_err(|e| Error::Io {
            path: side.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let adjacency = io::load_edge_list(path, GraphOptions::default())?;
        let side = path.with_extension(weights_extension(path));
        let (vertices, weights) = load_weighted(&side)?;
        if vertices.len() != adjacency.n() {
            return Err(Error::LengthMismatch {
                left: vertices.len(),
                right: adjacency.n(),
            });
        }
        Ok(Self {
            adjacency,
            vertices,
            weights,
        })
    }
}

fn weights_extension(path: &Path) -> String {
    match path.extension() {
        Some(ext) => format!("{}.weights", ext.to_string_lossy()),
        None => "weights".to_string(),
    }
}

/// Materialises the coreset graph. Each entry is `K(v_i, v_j)·(w′_i·w′_j)`.
pub fn build_coreset_graph<T: Real>(kern: &GraphKernel<'_, T>, indices: &[usize], weights: &[T]) -> Result<CoresetGraph<T>> {
    if indices.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: indices.len(),
            right: weights.len(),
        });
    }
    if indices.len() < 2 {
        return Err(Error::Domain("coreset graph needs at least two vertices".into()));
    }
    let mut position = vec![usize::MAX; kern.n()];
    for (i, &v) in indices.iter().enumerate() {
        if v >= kern.n() || position[v] != usize::MAX {
            return Err(Error::Domain(format!("coreset vertex {v} is out of range or repeated")));
        }
        position[v] = i;
    }
    let mut edges = Vec::new();
    for (i, &v) in indices.iter().enumerate() {
        for (u, k_vu) in kern.row(v) {
            let j = position[u];
            if j != usize::MAX && j >= i {
                edges.push((i, j, k_vu * (weights[i] * weights[j])));
            }
        }
    }
    let adjacency = SparseGraph::from_edges(indices.len(), edges, GraphOptions::default()).map_err(|e| match e {
        Error::IsolatedVertex { vertex } => Error::DegenerateCoresetVertex { vertex: indices[vertex] },
        other => other,
    })?;
    Ok(CoresetGraph {
        adjacency,
        vertices: indices.to_vec(),
        weights: weights.to_vec(),
    })
}

/// `vertex weight` lines.
pub fn format_weighted<T: Real>(vertices: &[usize], weights: &[T]) -> String {
    let mut out = String::new();
    for (v, w) in vertices.iter().zip(weights) {
        writeln!(out, "{v} {w}").unwrap();
    }
    out
}

pub fn parse_weighted<T: Real>(text: &str, source: &str) -> Result<(Vec<usize>, Vec<T>)> {
    let mut vertices = Vec::new();
    let mut weights = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: source.to_string(),
            line: i + 1,
            message,
        };
        let mut tokens = content.split_whitespace();
        let (Some(v), Some(w), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(err(format!("expected 'vertex weight', got '{content}'")));
        };
        let v = v.parse::<usize>().map_err(|_| err(format!("'{v}' is not a vertex index")))?;
        let w = w.parse::<T>().map_err(|_| err(format!("'{w}' is not a weight")))?;
        if !(w > T::zero()) || !w.is_finite() {
            return Err(err(format!("weight {w} must be positive")));
        }
        vertices.push(v);
        weights.push(w);
    }
    Ok((vertices, weights))
}

fn load_weighted<T: Real>(path: &Path) -> Result<(Vec<usize>, Vec<T>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_weighted(&text, &path.display().to_string())
}

/// Reads a coreset file written by [`format_weighted`].
pub fn load_coreset_points<T: Real>(path: impl AsRef<Path>) -> Result<(Vec<usize>, Vec<T>)> {
    load_weighted(path.as_ref())
}
