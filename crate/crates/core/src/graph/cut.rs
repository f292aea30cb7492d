//! Cut, volume and conductance primitives.

use super::SparseGraph;
use crate::error::{Error, Result};
use crate::labeling::Labeling;
use crate::scalar::Real;

fn membership(n: usize, set: &[usize]) -> Result<(Vec<bool>, usize)> {
    let mut inside = vec![false; n];
    let mut distinct = 0;
    for &u in set {
        if u >= n {
            return Err(Error::Domain(format!("vertex {u} out of range for {n} vertices")));
        }
        if !inside[u] {
            inside[u] = true;
            distinct += 1;
        }
    }
    Ok((inside, distinct))
}

/// Total weight of edges with exactly one endpoint in `set`, scanned from the rows of `set`.
pub fn cut_weight<T: Real>(g: &SparseGraph<T>, set: &[usize]) -> Result<T> {
    let (inside, _) = membership(g.n(), set)?;
    let mut cut = T::zero();
    for u in (0..g.n()).filter(|&u| inside[u]) {
        for (v, w) in g.neighbours(u) {
            if !inside[v] {
                cut += w;
            }
        }
    }
    Ok(cut)
}

/// `E(S, V∖S) / vol(S)`.
pub fn conductance<T: Real>(g: &SparseGraph<T>, set: &[usize]) -> Result<T> {
    let (inside, distinct) = membership(g.n(), set)?;
    if distinct == 0 {
        return Err(Error::Domain("conductance of the empty set".into()));
    }
    if distinct == g.n() {
        return Err(Error::Domain("conductance of the full vertex set".into()));
    }
    let mut cut = T::zero();
    let mut vol = T::zero();
    for u in (0..g.n()).filter(|&u| inside[u]) {
        vol += g.degree(u);
        for (v, w) in g.neighbours(u) {
            if !inside[v] {
                cut += w;
            }
        }
    }
    if vol <= T::zero() {
        return Err(Error::Domain("set has zero volume".into()));
    }
    Ok(cut / vol)
}

/// Per-cluster cut weight, internal weight and volume of a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionStats<T> {
    pub k: usize,
    /// `E(π_j, V∖π_j)`.
    pub cut_weights: Vec<T>,
    /// `Σ_{u,v ∈ π_j} A(u,v)`, self-loops once.
    pub internal_weights: Vec<T>,
    pub volumes: Vec<T>,
}

impl<T: Real> PartitionStats<T> {
    /// Accumulates the statistics in one pass over the stored entries.
    pub fn compute(g: &SparseGraph<T>, labels: &Labeling) -> Result<Self> {
        if labels.len() != g.n() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: g.n(),
            });
        }
        labels.require_nonempty()?;
        let k = labels.k();
        let mut cut_weights = vec![T::zero(); k];
        let mut internal_weights = vec![T::zero(); k];
        let mut volumes = vec![T::zero(); k];
        for u in 0..g.n() {
            let lu = labels.get(u);
            volumes[lu] += g.degree(u);
            for (v, w) in g.neighbours(u) {
                if labels.get(v) == lu {
                    internal_weights[lu] += w;
                } else {
                    cut_weights[lu] += w;
                }
            }
        }
        if let Some(cluster) = volumes.iter().position(|&v| v <= T::zero()) {
            return Err(Error::EmptyCluster { cluster });
        }
        Ok(Self {
            k,
            cut_weights,
            internal_weights,
            volumes,
        })
    }

    pub fn conductances(&self) -> Vec<T> {
        self.cut_weights
            .iter()
            .zip(&self.volumes)
            .map(|(&c, &v)| c / v)
            .collect()
    }
}

/// Average conductance over the clusters of `labels`.
pub fn ncut_average<T: Real>(g: &SparseGraph<T>, labels: &Labeling) -> Result<T> {
    let stats = PartitionStats::compute(g, labels)?;
    let total: T = stats.conductances().into_iter().sum();
    Ok(total / T::of_usize(stats.k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphOptions;

    fn graph(n: usize, edges: &[(usize, usize)]) -> SparseGraph<f64> {
        SparseGraph::from_edges(
            n,
            edges.iter().map(|&(u, v)| (u, v, 1.0)),
            GraphOptions::default(),
        )
        .unwrap()
    }

    fn two_edges() -> SparseGraph<f64> {
        graph(4, &[(0, 1), (2, 3)])
    }

    fn cycle4() -> SparseGraph<f64> {
        graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)])
    }

    fn triangle() -> SparseGraph<f64> {
        graph(3, &[(0, 1), (1, 2), (0, 2)])
    }

    #[test]
    fn conductance_examples() {
        assert_eq!(conductance(&two_edges(), &[0, 1]).unwrap(), 0.0);
        assert_eq!(conductance(&cycle4(), &[0, 1]).unwrap(), 0.5);
        assert_eq!(conductance(&triangle(), &[0]).unwrap(), 1.0);
    }

    #[test]
    fn conductance_domain_errors() {
        assert!(matches!(conductance(&triangle(), &[]), Err(Error::Domain(_))));
        assert!(matches!(conductance(&triangle(), &[0, 1, 2]), Err(Error::Domain(_))));
    }

    #[test]
    fn ncut_examples() {
        let l = Labeling::new(vec![0, 0, 1, 1], 2).unwrap();
        assert_eq!(ncut_average(&two_edges(), &l).unwrap(), 0.0);
        assert_eq!(ncut_average(&cycle4(), &l).unwrap(), 0.5);
        let l = Labeling::new(vec![0, 0, 1], 2).unwrap();
        assert_eq!(ncut_average(&triangle(), &l).unwrap(), 0.75);
    }

    #[test]
    fn ncut_names_empty_cluster() {
        let l = Labeling::new(vec![0, 0, 2], 3).unwrap();
        assert_eq!(
            ncut_average(&triangle(), &l).unwrap_err(),
            Error::EmptyCluster { cluster: 1 }
        );
    }

    #[test]
    fn stats_split_volume() {
        let l = Labeling::new(vec![0, 0, 1], 2).unwrap();
        let s = PartitionStats::compute(&triangle(), &l).unwrap();
        for j in 0..2 {
            assert_eq!(s.cut_weights[j] + s.internal_weights[j], s.volumes[j]);
        }
    }
}
