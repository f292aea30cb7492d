//! Spectral clustering backends and the Euclidean k-means they finish with.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::labeling::Labeling;
use crate::scalar::Real;
use crate::SeedRng;

/// Largest graph the dense eigensolver accepts.
pub const DENSE_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Lloyd stops once the objective improves by less than this fraction.
    pub tol: f64,
    /// Fresh sub-seeds tried when every restart leaves a cluster empty.
    pub retries: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iters: 100,
            tol: 1e-6,
            retries: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    /// Row-major `k × dim`.
    pub centers: Vec<f64>,
    pub objective: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.chunks_exact(dim).enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus<R: Rng + ?Sized>(data: &[f64], dim: usize, k: usize, rng: &mut R) -> Vec<f64> {
    let n = data.len() / dim;
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(row(i), row(next)));
        }
    }
    chosen.iter().flat_map(|&i| row(i).iter().copied()).collect()
}

fn lloyd(data: &[f64], dim: usize, k: usize, mut centers: Vec<f64>, config: &KMeansConfig) -> KMeansResult {
    let n = data.len() / dim;
    let mut labels = vec![usize::MAX; n];
    let mut objective = f64::INFINITY;
    for _ in 0..config.max_iters.max(1) {
        let mut changed = false;
        let mut next_objective = 0.0;
        for i in 0..n {
            let (j, d) = nearest(&data[i * dim..(i + 1) * dim], &centers, dim);
            if labels[i] != j {
                labels[i] = j;
                changed = true;
            }
            next_objective += d;
        }
        let improved = objective - next_objective;
        objective = next_objective;
        if !changed || improved <= config.tol * objective {
            break;
        }
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for d in 0..dim {
                sums[labels[i] * dim + d] += data[i * dim + d];
            }
        }
        for j in 0..k {
            // An empty cluster keeps its previous center.
            if counts[j] > 0 {
                for d in 0..dim {
                    centers[j * dim + d] = sums[j * dim + d] / counts[j] as f64;
                }
            }
        }
    }
    // Labels must match the returned centers.
    objective = 0.0;
    for i in 0..n {
        let (j, d) = nearest(&data[i * dim..(i + 1) * dim], &centers, dim);
        labels[i] = j;
        objective += d;
    }
    KMeansResult {
        labels,
        centers,
        objective,
    }
}

/// k-means++ seeded Lloyd over the rows of a row-major `n × dim` matrix, best of
/// `restarts` runs with every cluster nonempty.
pub fn kmeans(data: &[f64], dim: usize, k: usize, seed: u64, config: &KMeansConfig) -> Result<KMeansResult> {
    if dim == 0 || !data.len().is_multiple_of(dim) {
        return Err(Error::Domain(format!("data length {} is not a multiple of {dim}", data.len())));
    }
    let n = data.len() / dim;
    if k == 0 || k > n {
        return Err(Error::Domain(format!("k = {k} must lie in [1, {n}]")));
    }
    for attempt in 0..=config.retries {
        let mut rng = SeedRng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let mut best: Option<KMeansResult> = None;
        for _ in 0..config.restarts.max(1) {
            let centers = plus_plus(data, dim, k, &mut rng);
            let run = lloyd(data, dim, k, centers, config);
            let mut seen = vec![false; k];
            for &l in &run.labels {
                seen[l] = true;
            }
            if seen.iter().all(|&s| s) && best.as_ref().is_none_or(|b| run.objective < b.objective) {
                best = Some(run);
            }
        }
        if let Some(best) = best {
            return Ok(best);
        }
    }
    Err(Error::KMeansFailed {
        k,
        attempts: config.retries + 1,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Exact top-k eigenvectors from a dense symmetric eigensolver.
    #[default]
    Dense,
    /// Power-iterated random projections onto the top of the spectrum.
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub backend: Backend,
    /// Power steps for the fast backend; `10·⌈ln n⌉` when unset.
    pub power_steps: Option<usize>,
    pub kmeans: KMeansConfig,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Dense,
            power_steps: None,
            kmeans: KMeansConfig::default(),
        }
    }
}

fn inv_sqrt_degrees<T: Real>(g: &SparseGraph<T>) -> Vec<f64> {
    g.degrees().iter().map(|d| 1.0 / d.as_f64().sqrt()).collect()
}

/// Rows of the top-`k` eigenvectors of `D^{-1/2}AD^{-1/2}`, each scaled by `D^{-1/2}`.
pub fn dense_embedding<T: Real>(g: &SparseGraph<T>, k: usize) -> Result<Vec<f64>> {
    let n = g.n();
    if n > DENSE_LIMIT {
        return Err(Error::TooLargeForDense { n, limit: DENSE_LIMIT });
    }
    let s = inv_sqrt_degrees(g);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (u, v, a) in g.triplets() {
        let x = a.as_f64() * s[u] * s[v];
        m[(u, v)] = x;
        m[(v, u)] = x;
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut out = vec![0.0; n * k];
    for (c, &j) in order.iter().take(k).enumerate() {
        for u in 0..n {
            out[u * k + c] = eig.eigenvectors[(u, j)] * s[u];
        }
    }
    Ok(out)
}

/// `t = ⌈log₂ k⌉ + 1` Gaussian vectors smoothed by `steps` applications of
/// `M = (I + D^{-1/2}AD^{-1/2})/2`, orthonormalised, rows scaled by `D^{-1/2}`.
/// Returns the row-major embedding and `t`.
pub fn fast_embedding<T: Real>(g: &SparseGraph<T>, k: usize, steps: usize, seed: u64) -> (Vec<f64>, usize) {
    let n = g.n();
    let t = (k.max(1) as f64).log2().ceil() as usize + 1;
    let s = inv_sqrt_degrees(g);
    let mut rng = SeedRng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    // Column-major: vector c occupies cols[c*n..(c+1)*n].
    let mut cols: Vec<f64> = (0..n * t).map(|_| rng.sample(StandardNormal)).collect();
    let mut next = vec![0.0; n];
    for _ in 0..steps {
        for col in cols.chunks_exact_mut(n) {
            for u in 0..n {
                let mut acc = 0.0;
                for (v, a) in g.neighbours(u) {
                    acc += a.as_f64() * s[v] * col[v];
                }
                next[u] = 0.5 * (col[u] + s[u] * acc);
            }
            let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
            for (c, x) in col.iter_mut().zip(&next) {
                *c = x * scale;
            }
        }
    }
    orthonormalise(&mut cols, n, t);
    let mut out = vec![0.0; n * t];
    for c in 0..t {
        for u in 0..n {
            out[u * t + c] = cols[c * n + u] * s[u];
        }
    }
    (out, t)
}

/// Modified Gram-Schmidt, two passes; columns that vanish are left at zero.
fn orthonormalise(cols: &mut [f64], n: usize, t: usize) {
    for _ in 0..2 {
        for c in 0..t {
            let (done, rest) = cols.split_at_mut(c * n);
            let col = &mut rest[..n];
            for prev in done.chunks_exact(n) {
                let dot: f64 = prev.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                for (x, p) in col.iter_mut().zip(prev) {
                    *x -= dot * p;
                }
            }
            let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            let scale = if norm > 1e-12 { 1.0 / norm } else { 0.0 };
            col.iter_mut().for_each(|x| *x *= scale);
        }
    }
}

pub fn default_power_steps(n: usize) -> usize {
    10 * (n.max(2) as f64).ln().ceil() as usize
}

/// Spectral clustering of `g` into `k` clusters with the configured backend.
pub fn spectral_cluster<T: Real>(g: &SparseGraph<T>, k: usize, seed: u64, config: &SpectralConfig) -> Result<Labeling> {
    let n = g.n();
    if k == 0 || k > n {
        return Err(Error::Domain(format!("k = {k} must lie in [1, {n}]")));
    }
    if k == 1 {
        return Labeling::new(vec![0; n], 1);
    }
    let (embedding, dim) = match config.backend {
        Backend::Dense => (dense_embedding(g, k)?, k),
        Backend::Fast => {
            let steps = config.power_steps.unwrap_or_else(|| default_power_steps(n));
            fast_embedding(g, k, steps, seed)
        }
    };
    let result = kmeans(&embedding, dim, k, seed, &config.kmeans)?;
    Labeling::new(result.labels, k)
}
