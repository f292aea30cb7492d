//! Coreset spectral clustering: coreset → coreset graph → spectral clustering →
//! nearest-centroid labelling of the full graph, plus the coreset kernel k-means
//! baseline.

use std::time::Instant;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::coreset::{build_coreset_graph, construct_coreset, ImportanceConfig, SensitivityRule};
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::kernel::{CentroidSet, CentroidSource, GraphKernel};
use crate::labeling::Labeling;
use crate::metrics::{ncut_average_occupied, ncut_trace, ncut_trace_occupied};
use crate::scalar::Real;
use crate::seeding::{naive_d2_sample, NaiveOptions};
use crate::spectral::{spectral_cluster, SpectralConfig};
use crate::SeedRng;

/// Assigns every vertex of the graph to its nearest coreset centroid in kernel space.
/// Coreset vertices are relabelled by the same rule. Ties go to the lowest cluster id.
pub fn label_full_graph<T: Real>(
    kern: &GraphKernel<'_, T>,
    vertices: &[usize],
    weights: &[T],
    coreset_labels: &Labeling,
) -> Result<Labeling> {
    let centroids = CentroidSet::new(kern, vertices, weights, coreset_labels, CentroidSource::Coreset)?;
    let mut scratch = Vec::new();
    let labels = (0..kern.n())
        .map(|u| centroids.nearest_with(kern, u, &mut scratch).0)
        .collect();
    Labeling::new(labels, coreset_labels.k())
}

/// Parameters of one pipeline run.
///
/// Three kernel shifts are involved. Sampling needs a positive semidefinite kernel and
/// uses `sigma`. The shift also adds `σ·w²/deg` to the diagonal of the coreset graph and
/// `σ·Σw²/(deg·s²)` to every centroid norm, which on sparse graphs outweighs the
/// neighbourhood terms that carry the cluster structure; so the coreset graph keeps a
/// small shift (enough to give every coreset vertex a positive degree) and labelling
/// uses the unshifted kernel, whose k-means cost is exactly the normalised cut.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CscConfig {
    pub k: usize,
    pub eps: f64,
    pub seed: u64,
    /// Kernel shift used for D²-sampling and sensitivities.
    pub sigma: f64,
    /// Kernel shift used to build the coreset graph; `sigma` when unset.
    pub graph_sigma: Option<f64>,
    /// Kernel shift used to label the full graph; `sigma` when unset.
    pub label_sigma: Option<f64>,
    /// Coreset draws as a fraction of `n`, overriding the size formula.
    pub coreset_frac: Option<f64>,
    pub max_rounds: usize,
    pub importance: ImportanceConfig,
    pub spectral: SpectralConfig,
}

impl CscConfig {
    pub const DEFAULT_GRAPH_SIGMA: f64 = 0.1;
    pub const DEFAULT_LABEL_SIGMA: f64 = 0.0;

    pub fn new(k: usize, eps: f64, seed: u64) -> Self {
        Self {
            k,
            eps,
            seed,
            sigma: GraphKernel::<f64>::DEFAULT_SIGMA,
            graph_sigma: Some(Self::DEFAULT_GRAPH_SIGMA),
            label_sigma: Some(Self::DEFAULT_LABEL_SIGMA),
            coreset_frac: None,
            max_rounds: 1,
            importance: ImportanceConfig {
                sensitivity: SensitivityRule::GlobalWeight,
                ..ImportanceConfig::default()
            },
            spectral: SpectralConfig::default(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k < 2 || self.k > n {
            return Err(Error::Domain(format!("k = {} must lie in [2, n = {n}]", self.k)));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Domain(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        for (name, s) in [
            ("sigma", Some(self.sigma)),
            ("graph_sigma", self.graph_sigma),
            ("label_sigma", self.label_sigma),
        ] {
            if let Some(s) = s {
                if !(s >= 0.0 && s.is_finite()) {
                    return Err(Error::Domain(format!("{name} must be finite and nonnegative, got {s}")));
                }
            }
        }
        if let Some(f) = self.coreset_frac {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Domain(format!("coreset_frac must lie in (0, 1], got {f}")));
            }
        }
        if self.max_rounds == 0 {
            return Err(Error::Domain("max_rounds must be at least 1".into()));
        }
        Ok(())
    }

    /// The sampling configuration for a graph on `n` vertices, with `coreset_frac`
    /// resolved into a draw count.
    pub fn importance_for(&self, n: usize) -> ImportanceConfig {
        let mut cfg = self.importance;
        if let Some(f) = self.coreset_frac {
            cfg.size_override = Some(((f * n as f64).ceil() as usize).max(self.k));
        }
        cfg
    }
}

/// Wall time per pipeline stage in milliseconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub coreset_ms: f64,
    pub coreset_graph_ms: f64,
    pub spectral_ms: f64,
    pub labelling_ms: f64,
    pub total_ms: f64,
}

/// Result of [`csc`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CscReport<T> {
    /// Labels of every vertex of the input graph.
    pub labels: Labeling,
    pub coreset_vertices: Vec<usize>,
    pub coreset_weights: Vec<T>,
    /// Spectral labels of the coreset graph, aligned with `coreset_vertices`.
    pub coreset_labels: Labeling,
    /// Trace-form normalised cut of the coreset labels on the coreset graph.
    pub ncut_coreset: f64,
    /// Trace-form normalised cut of `labels` on the input graph, over the clusters
    /// that occur.
    pub ncut_full: f64,
    /// Average conductance of the clusters of `labels` that occur.
    pub conductance_full: f64,
    pub timings: StageTimings,
    pub params: CscConfig,
    pub seed: u64,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Runs coreset spectral clustering on `g`.
pub fn csc<T: Real>(g: &SparseGraph<T>, config: &CscConfig) -> Result<CscReport<T>> {
    stage("config", config.validate(g.n()))?;
    let begin = Instant::now();
    let kern = stage("kernel", GraphKernel::new(g, T::of(config.sigma)))?;
    let coreset = stage(
        "coreset",
        construct_coreset(&kern, config.k, config.eps, config.seed, config.max_rounds, &config.importance_for(g.n())),
    )?;
    let coreset_ms = ms(begin);
    let mut report = csc_on_coreset(g, &coreset.indices, &coreset.weights, config)?;
    report.timings.coreset_ms = coreset_ms;
    report.timings.total_ms = ms(begin);
    Ok(report)
}

/// The pipeline after sampling: coreset graph, spectral clustering, labelling.
pub fn csc_on_coreset<T: Real>(
    g: &SparseGraph<T>,
    vertices: &[usize],
    weights: &[T],
    config: &CscConfig,
) -> Result<CscReport<T>> {
    stage("config", config.validate(g.n()))?;
    let begin = Instant::now();
    let kern = stage("kernel", GraphKernel::new(g, T::of(config.sigma)))?;

    let t = Instant::now();
    let h = stage(
        "coreset-graph",
        with_shift(g, &kern, config.graph_sigma, |k| build_coreset_graph(k, vertices, weights)),
    )?;
    let coreset_graph_ms = ms(t);

    let t = Instant::now();
    let k_h = config.k.min(h.n());
    let coreset_labels = stage("spectral", spectral_cluster(&h.adjacency, k_h, config.seed, &config.spectral))?;
    let spectral_ms = ms(t);

    let t = Instant::now();
    let labels = stage(
        "labelling",
        with_shift(g, &kern, config.label_sigma, |k| label_full_graph(k, vertices, weights, &coreset_labels)),
    )?;
    let labelling_ms = ms(t);

    let ncut_coreset = stage("report", ncut_trace(&h.adjacency, &coreset_labels))?.as_f64();
    let ncut_full = stage("report", ncut_trace_occupied(g, &labels))?.as_f64();
    let conductance_full = stage("report", ncut_average_occupied(g, &labels))?.as_f64();
    Ok(CscReport {
        labels,
        coreset_vertices: vertices.to_vec(),
        coreset_weights: weights.to_vec(),
        coreset_labels,
        ncut_coreset,
        ncut_full,
        conductance_full,
        timings: StageTimings {
            coreset_ms: 0.0,
            coreset_graph_ms,
            spectral_ms,
            labelling_ms,
            total_ms: ms(begin),
        },
        params: config.clone(),
        seed: config.seed,
    })
}

/// Runs `f` on `kern`, or on a kernel of `g` with a different shift.
fn with_shift<T: Real, R>(
    g: &SparseGraph<T>,
    kern: &GraphKernel<'_, T>,
    sigma: Option<f64>,
    f: impl FnOnce(&GraphKernel<'_, T>) -> Result<R>,
) -> Result<R> {
    match sigma {
        Some(s) if T::of(s) != kern.sigma() => f(&GraphKernel::new(g, T::of(s))?),
        _ => f(kern),
    }
}

/// Result of [`coreset_kernel_kmeans`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelKMeansResult<T> {
    pub labels: Labeling,
    pub coreset_labels: Labeling,
    /// Weighted coreset objective after seeding and after every Lloyd step.
    pub objective_trace: Vec<T>,
    pub iterations: usize,
}

/// Weighted kernel k-means on a coreset: D²-seeding, then Lloyd steps with exact
/// centroids until the labels stop changing or `max_iters` steps have run. The labels
/// are then extended to the full graph by nearest centroid.
pub fn coreset_kernel_kmeans<T: Real>(
    kern: &GraphKernel<'_, T>,
    vertices: &[usize],
    weights: &[T],
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<KernelKMeansResult<T>> {
    coreset_kernel_kmeans_with(kern, kern, vertices, weights, k, seed, max_iters)
}

/// [`coreset_kernel_kmeans`] with the full-graph labelling done in `label_kern`.
pub fn coreset_kernel_kmeans_with<T: Real>(
    kern: &GraphKernel<'_, T>,
    label_kern: &GraphKernel<'_, T>,
    vertices: &[usize],
    weights: &[T],
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<KernelKMeansResult<T>> {
    let m = vertices.len();
    if k == 0 || k > m {
        return Err(Error::Domain(format!("k = {k} must lie in [1, {m}]")));
    }
    let mut rng = SeedRng::seed_from_u64(seed);
    let seeding = naive_d2_sample(kern, vertices, weights, k, &mut rng, NaiveOptions::default())?;
    let mut cluster_of_center = vec![usize::MAX; kern.n()];
    for (j, &c) in seeding.centers.iter().enumerate() {
        cluster_of_center[c] = j;
    }
    let mut labels: Vec<usize> = seeding.nearest.iter().map(|&c| cluster_of_center[c]).collect();
    let mut distances = seeding.deltas.clone();
    fill_empty_clusters(&mut labels, &mut distances, k);
    let mut objective_trace = vec![weighted_sum(weights, &distances)];

    let mut scratch = Vec::new();
    let mut iterations = 0;
    while iterations < max_iters {
        let current = Labeling::new(labels.clone(), k)?;
        let centroids = CentroidSet::new(kern, vertices, weights, &current, CentroidSource::Coreset)?;
        let mut changed = false;
        for (i, &x) in vertices.iter().enumerate() {
            let (j, d) = centroids.nearest_with(kern, x, &mut scratch);
            let own = centroids.distance(kern, x, labels[i]);
            // Only move when strictly closer, so a fixpoint is reached.
            if j != labels[i] && d < own {
                labels[i] = j;
                distances[i] = d;
                changed = true;
            } else {
                distances[i] = own;
            }
        }
        fill_empty_clusters(&mut labels, &mut distances, k);
        iterations += 1;
        objective_trace.push(weighted_sum(weights, &distances));
        if !changed {
            break;
        }
    }
    let coreset_labels = Labeling::new(labels, k)?;
    let full = label_full_graph(label_kern, vertices, weights, &coreset_labels)?;
    Ok(KernelKMeansResult {
        labels: full,
        coreset_labels,
        objective_trace,
        iterations,
    })
}

fn weighted_sum<T: Real>(weights: &[T], distances: &[T]) -> T {
    weights.iter().zip(distances).map(|(&w, &d)| w * d).sum()
}

/// Moves the point farthest from its centroid into each empty cluster.
fn fill_empty_clusters<T: Real>(labels: &mut [usize], distances: &mut [T], k: usize) {
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    for j in 0..k {
        if sizes[j] > 0 {
            continue;
        }
        let far = (0..labels.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .max_by(|&a, &b| distances[a].partial_cmp(&distances[b]).unwrap().then(b.cmp(&a)));
        if let Some(i) = far {
            sizes[labels[i]] -= 1;
            labels[i] = j;
            sizes[j] = 1;
            distances[i] = T::zero();
        }
    }
}
