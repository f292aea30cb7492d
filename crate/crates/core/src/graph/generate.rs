//! Synthetic graphs: stochastic block models and k-nearest-neighbour graphs.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use super::{GraphOptions, SparseGraph};
use crate::error::{Error, Result};
use crate::labeling::Labeling;
use crate::scalar::Real;
use crate::SeedRng;

/// Parameters of a planted-partition stochastic block model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbmParams {
    pub k: usize,
    pub cluster_size: usize,
    /// Within-cluster edge probability.
    pub p: f64,
    /// Between-cluster edge probability.
    pub q: f64,
    pub seed: u64,
    pub self_loop_isolated: bool,
}

impl SbmParams {
    pub fn new(k: usize, cluster_size: usize, p: f64, q: f64, seed: u64) -> Self {
        Self {
            k,
            cluster_size,
            p,
            q,
            seed,
            self_loop_isolated: false,
        }
    }
}

/// Calls `emit` for every index in `lo..hi` kept independently with probability `prob`,
/// skipping ahead geometrically between successes.
fn bernoulli_run<R: Rng>(rng: &mut R, lo: usize, hi: usize, prob: f64, mut emit: impl FnMut(usize)) {
    if prob <= 0.0 || lo >= hi {
        return;
    }
    if prob >= 1.0 {
        (lo..hi).for_each(emit);
        return;
    }
    let log_q = (1.0 - prob).ln();
    let mut i = lo;
    loop {
        let r: f64 = 1.0 - rng.random::<f64>();
        let skip = (r.ln() / log_q).floor();
        if skip >= (hi - i) as f64 {
            return;
        }
        i += skip as usize;
        emit(i);
        i += 1;
        if i >= hi {
            return;
        }
    }
}

/// Samples an SBM with `k` equal clusters; vertex `u` belongs to cluster `u / cluster_size`.
pub fn generate_sbm<T: Real>(params: &SbmParams) -> Result<(SparseGraph<T>, Labeling)> {
    let SbmParams {
        k,
        cluster_size,
        p,
        q,
        seed,
        self_loop_isolated,
    } = *params;
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!(
            "edge probabilities must lie in [0, 1], got p = {p}, q = {q}"
        )));
    }
    let n = k * cluster_size;
    if n < 2 {
        return Err(Error::Domain(format!(
            "an SBM needs at least two vertices, got k = {k}, cluster_size = {cluster_size}"
        )));
    }
    let mut rng = SeedRng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        let cu = u / cluster_size;
        for c in cu..k {
            let lo = (c * cluster_size).max(u + 1);
            let hi = (c + 1) * cluster_size;
            let prob = if c == cu { p } else { q };
            bernoulli_run(&mut rng, lo, hi, prob, |v| edges.push((u, v, T::one())));
        }
    }
    let graph = SparseGraph::from_edges(n, edges, GraphOptions { self_loop_isolated })?;
    let labels = Labeling::new((0..n).map(|u| u / cluster_size).collect(), k)?;
    Ok((graph, labels))
}

/// `k` isotropic unit-variance Gaussian blobs of `cluster_size` points in `dim`
/// dimensions. Blob centers are uniform in `[-spread, spread]^dim`; point `i` belongs
/// to blob `i / cluster_size`.
pub fn gaussian_blobs(
    k: usize,
    cluster_size: usize,
    dim: usize,
    spread: f64,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Labeling)> {
    if k == 0 || cluster_size == 0 || dim == 0 {
        return Err(Error::Domain(format!(
            "blobs need k, cluster_size and dim >= 1, got {k}, {cluster_size}, {dim}"
        )));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::Domain(format!("spread must be finite and nonnegative, got {spread}")));
    }
    let mut rng = SeedRng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| rng.random_range(-spread..=spread)).collect())
        .collect();
    let mut points = Vec::with_capacity(k * cluster_size);
    for c in &centers {
        for _ in 0..cluster_size {
            points.push(c.iter().map(|&x| x + rng.sample::<f64, _>(StandardNormal)).collect());
        }
    }
    let labels = Labeling::new((0..k * cluster_size).map(|i| i / cluster_size).collect(), k)?;
    Ok((points, labels))
}

/// Symmetrised, unweighted k-nearest-neighbour graph under Euclidean distance.
///
/// `(u, v)` is an edge iff `v` is among the `neighbours` nearest points of `u` or vice
/// versa. Equal distances prefer the lower index.
pub fn knn_graph<T: Real>(points: &[Vec<T>], neighbours: usize) -> Result<SparseGraph<T>> {
    let n = points.len();
    if neighbours == 0 || n <= neighbours {
        return Err(Error::Domain(format!(
            "knn graph needs n > neighbours >= 1, got n = {n}, neighbours = {neighbours}"
        )));
    }
    let dim = points[0].len();
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::Domain(format!(
                "point {i} has dimension {} but point 0 has {dim}",
                p.len()
            )));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("point {i} has a non-finite coordinate")));
        }
    }
    let mut edges = Vec::with_capacity(n * neighbours);
    let mut candidates: Vec<(T, usize)> = Vec::with_capacity(n - 1);
    for u in 0..n {
        candidates.clear();
        candidates.extend((0..n).filter(|&v| v != u).map(|v| {
            let d: T = points[u]
                .iter()
                .zip(&points[v])
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum();
            (d, v)
        }));
        let order = |a: &(T, usize), b: &(T, usize)| {
            a.0.partial_cmp(&b.0)
                .expect("finite distances")
                .then(a.1.cmp(&b.1))
        };
        candidates.select_nth_unstable_by(neighbours - 1, order);
        for &(_, v) in &candidates[..neighbours] {
            edges.push((u.min(v), u.max(v)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    SparseGraph::from_edges(
        n,
        edges.into_iter().map(|(u, v)| (u, v, T::one())),
        GraphOptions::default(),
    )
}
