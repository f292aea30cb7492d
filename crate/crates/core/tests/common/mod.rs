//! Shared generators and dense-matrix oracles for the integration tests.
#![allow(dead_code)]

use csc_core::graph::{GraphOptions, SparseGraph};
use csc_core::{Labeling, SeedRng};
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> SeedRng {
    SeedRng::seed_from_u64(seed)
}

/// Random weighted graph with about `n·avg_deg/2` edges, occasional self-loops, and a
/// unit self-loop on any vertex left isolated.
pub fn random_graph(n: usize, avg_deg: f64, seed: u64) -> SparseGraph<f64> {
    let mut r = rng(seed);
    let m = ((n as f64 * avg_deg) / 2.0).round() as usize;
    let mut edges = Vec::with_capacity(m + n / 8);
    for _ in 0..m {
        let u = r.random_range(0..n);
        let v = r.random_range(0..n);
        if u != v {
            edges.push((u, v, r.random_range(0.1..3.0)));
        }
    }
    for _ in 0..n / 8 {
        let u = r.random_range(0..n);
        edges.push((u, u, r.random_range(0.1..2.0)));
    }
    SparseGraph::from_edges(n, edges, GraphOptions { self_loop_isolated: true }).unwrap()
}

/// Random connected unweighted graph: a random spanning tree plus extra edges.
pub fn random_connected(n: usize, extra: usize, seed: u64) -> SparseGraph<f64> {
    let mut r = rng(seed);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((r.random_range(0..v), v, 1.0));
    }
    for _ in 0..extra {
        let u = r.random_range(0..n);
        let v = r.random_range(0..n);
        if u != v {
            edges.push((u, v, 1.0));
        }
    }
    // Repeated pairs would sum to weight 2; keep the graph unweighted.
    edges.sort_by_key(|&(u, v, _)| (u.min(v), u.max(v)));
    edges.dedup_by_key(|&mut (u, v, _)| (u.min(v), u.max(v)));
    SparseGraph::from_edges(n, edges, GraphOptions::default()).unwrap()
}

/// Uniformly random labelling with every one of the `k` clusters used.
pub fn random_partition(n: usize, k: usize, r: &mut impl Rng) -> Labeling {
    let mut labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { r.random_range(0..k) }).collect();
    for i in (1..n).rev() {
        labels.swap(i, r.random_range(0..=i));
    }
    Labeling::new(labels, k).unwrap()
}

pub fn dense_adjacency(g: &SparseGraph<f64>) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut a = vec![vec![0.0; n]; n];
    for (u, v, w) in g.triplets() {
        a[u][v] = w;
        a[v][u] = w;
    }
    a
}

pub fn dense_degrees(a: &[Vec<f64>]) -> Vec<f64> {
    a.iter().map(|row| row.iter().sum()).collect()
}

/// `K = D⁻¹AD⁻¹ + σD⁻¹` as a dense matrix.
pub fn dense_kernel(g: &SparseGraph<f64>, sigma: f64) -> Vec<Vec<f64>> {
    let a = dense_adjacency(g);
    let d = dense_degrees(&a);
    let n = a.len();
    let mut k = vec![vec![0.0; n]; n];
    for u in 0..n {
        for v in 0..n {
            k[u][v] = a[u][v] / (d[u] * d[v]);
        }
        k[u][u] += sigma / d[u];
    }
    k
}

pub fn dense_distance(k: &[Vec<f64>], u: usize, v: usize) -> f64 {
    k[u][u] + k[v][v] - 2.0 * k[u][v]
}

/// `tr(WK) − tr(YᵀW^{1/2}KW^{1/2}Y)` with `Y` the normalised indicator matrix of `labels`.
pub fn trace_form_cost(k: &[Vec<f64>], w: &[f64], labels: &[usize], nclusters: usize) -> f64 {
    let n = w.len();
    let tr: f64 = (0..n).map(|x| w[x] * k[x][x]).sum();
    let mut s = vec![0.0; nclusters];
    for x in 0..n {
        s[labels[x]] += w[x];
    }
    let mut within = 0.0;
    for x in 0..n {
        for y in 0..n {
            if labels[x] == labels[y] {
                within += w[x] * w[y] * k[x][y] / s[labels[x]];
            }
        }
    }
    tr - within
}

/// Average conductance of a labelling, from the dense adjacency.
pub fn dense_ncut_average(a: &[Vec<f64>], labels: &[usize], nclusters: usize) -> f64 {
    let d = dense_degrees(a);
    let mut cut = vec![0.0; nclusters];
    let mut vol = vec![0.0; nclusters];
    for u in 0..a.len() {
        vol[labels[u]] += d[u];
        for v in 0..a.len() {
            if labels[u] != labels[v] {
                cut[labels[u]] += a[u][v];
            }
        }
    }
    (0..nclusters).map(|j| cut[j] / vol[j]).sum::<f64>() / nclusters as f64
}

/// Smallest average conductance over all 2-partitions, by enumeration.
pub fn brute_force_opt_ncut2(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut best = f64::INFINITY;
    // Vertex n−1 stays in cluster 0 to skip mirrored partitions.
    for mask in 1u32..(1 << (n - 1)) {
        let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
        best = best.min(dense_ncut_average(a, &labels, 2));
    }
    best
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
