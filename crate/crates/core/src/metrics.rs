//! Evaluation metrics: trace-form normalised cut and the adjusted Rand index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{PartitionStats, SparseGraph};
use crate::labeling::Labeling;
use crate::scalar::Real;

/// `NC(Π) = tr(D⁻¹A) − Σ_j E(π_j, π_j)/vol(π_j)`, accumulated over edges.
///
/// Equivalent to `tr(D⁻¹A) − k + Σ_j cut(π_j)/vol(π_j)` and to the weighted kernel
/// k-means cost of `Π` under `K = D⁻¹AD⁻¹`, `w = deg`.
pub fn ncut_trace<T: Real>(g: &SparseGraph<T>, labels: &Labeling) -> Result<T> {
    let stats = PartitionStats::compute(g, labels)?;
    let mut within = T::zero();
    for j in 0..stats.k {
        within += stats.internal_weights[j] / stats.volumes[j];
    }
    Ok(g.trace_inv_degree_adjacency() - within)
}

/// Drops unused cluster ids so that every remaining cluster is nonempty.
pub fn compact_labels(labels: &Labeling) -> Labeling {
    let mut remap = vec![usize::MAX; labels.k()];
    let mut next = 0;
    let compact = labels
        .as_slice()
        .iter()
        .map(|&l| {
            if remap[l] == usize::MAX {
                remap[l] = next;
                next += 1;
            }
            remap[l]
        })
        .collect();
    Labeling::from_vec(compact)
}

/// [`ncut_trace`] over the clusters that occur in `labels`.
pub fn ncut_trace_occupied<T: Real>(g: &SparseGraph<T>, labels: &Labeling) -> Result<T> {
    ncut_trace(g, &compact_labels(labels))
}

/// Average conductance over the clusters that occur in `labels`.
pub fn ncut_average_occupied<T: Real>(g: &SparseGraph<T>, labels: &Labeling) -> Result<T> {
    crate::graph::ncut_average(g, &compact_labels(labels))
}

/// Adjusted Rand index between two labelings of the same points.
pub fn ari(a: &Labeling, b: &Labeling) -> Result<f64> {
    ari_slices(a.as_slice(), b.as_slice())
}

pub fn ari_slices(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::Domain("adjusted Rand index needs at least two points".into()));
    }
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = std::collections::HashMap::<(usize, usize), i128>::new();
    let mut rows = vec![0i128; ka];
    let mut cols = vec![0i128; kb];
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_insert(0) += 1;
        rows[x] += 1;
        cols[y] += 1;
    }
    let pairs = |c: i128| c * (c - 1) / 2;
    let index: i128 = table.values().map(|&c| pairs(c)).sum();
    let sum_rows: i128 = rows.iter().map(|&c| pairs(c)).sum();
    let sum_cols: i128 = cols.iter().map(|&c| pairs(c)).sum();
    let total = pairs(a.len() as i128);
    // ARI = (index − rows·cols/total) / ((rows + cols)/2 − rows·cols/total),
    // multiplied through by 2·total to stay in integers.
    let numerator = 2 * (index * total - sum_rows * sum_cols);
    let denominator = (sum_rows + sum_cols) * total - 2 * sum_rows * sum_cols;
    if denominator == 0 {
        // Both labelings trivial in the same way (all one cluster or all singletons).
        return Ok(1.0);
    }
    Ok(numerator as f64 / denominator as f64)
}

/// Metrics of one labelling of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub k: usize,
    pub ncut_average: f64,
    pub ncut_trace_objective: f64,
    /// Weighted kernel k-means cost with `σ = 0`; equal to `ncut_trace_objective`.
    pub kkmeans_cost: f64,
    pub ari: Option<f64>,
    pub runtime_ms: f64,
}

impl EvalRecord {
    pub fn compute<T: Real>(g: &SparseGraph<T>, labels: &Labeling, truth: Option<&Labeling>) -> Result<Self> {
        let start = std::time::Instant::now();
        let stats = PartitionStats::compute(g, labels)?;
        let conductances = stats.conductances();
        let k = stats.k;
        let ncut_average = conductances.iter().map(|c| c.as_f64()).sum::<f64>() / k as f64;
        let ncut_trace_objective = ncut_trace(g, labels)?.as_f64();
        let kern = crate::kernel::GraphKernel::new(g, T::zero())?;
        let kkmeans_cost = kern.cost_partition_full(labels)?.as_f64();
        let ari = truth.map(|t| ari(labels, t)).transpose()?;
        Ok(Self {
            k,
            ncut_average,
            ncut_trace_objective,
            kkmeans_cost,
            ari,
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }
}
