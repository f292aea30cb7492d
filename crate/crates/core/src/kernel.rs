//! The implicit feature space of a graph.
//!
//! `K(u, v) = A(u, v) / (deg(u)·deg(v)) + σ·[u = v] / deg(u)`, weights `w(u) = deg(u)`.
//! Nothing here materialises `K`; every quantity is assembled from sparse rows of `A`.
//! With `σ ≥ 1`, `D^{1/2} K D^{1/2} = σI + D^{-1/2}AD^{-1/2}` is positive semidefinite,
//! so all squared distances are nonnegative up to round-off.

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::labeling::Labeling;
use crate::scalar::Real;

/// Kernel view over a borrowed graph.
#[derive(Debug, Clone)]
pub struct GraphKernel<'g, T> {
    graph: &'g SparseGraph<T>,
    sigma: T,
    self_affinity: Vec<T>,
}

impl<'g, T: Real> GraphKernel<'g, T> {
    pub const DEFAULT_SIGMA: f64 = 1.0;

    pub fn new(graph: &'g SparseGraph<T>, sigma: T) -> Result<Self> {
        if !sigma.is_finite() || sigma < T::zero() {
            return Err(Error::Domain(format!("sigma must be finite and nonnegative, got {sigma}")));
        }
        let self_affinity = (0..graph.n())
            .map(|u| {
                let d = graph.degree(u);
                graph.weight(u, u) / (d * d) + sigma / d
            })
            .collect();
        Ok(Self {
            graph,
            sigma,
            self_affinity,
        })
    }

    /// Kernel with the default shift `σ = 1`.
    pub fn with_default_shift(graph: &'g SparseGraph<T>) -> Self {
        Self::new(graph, T::one()).expect("unit shift is valid")
    }

    pub fn graph(&self) -> &'g SparseGraph<T> {
        self.graph
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Vertex weight `w(u) = deg(u)`.
    #[inline]
    pub fn weight(&self, u: usize) -> T {
        self.graph.degree(u)
    }

    pub fn weights(&self) -> &[T] {
        self.graph.degrees()
    }

    /// `K(u, u)`.
    #[inline]
    pub fn self_affinity(&self, u: usize) -> T {
        self.self_affinity[u]
    }

    #[inline]
    fn off_diagonal(&self, u: usize, v: usize, a: T) -> T {
        a / (self.graph.degree(u) * self.graph.degree(v))
    }

    /// `K(u, v)`; exactly symmetric.
    pub fn entry(&self, u: usize, v: usize) -> T {
        if u == v {
            self.self_affinity[u]
        } else {
            self.off_diagonal(u, v, self.graph.weight(u, v))
        }
    }

    /// Off-diagonal nonzeros `(v, K(u, v))` of row `u`, in column order.
    pub fn off_diagonal_row(&self, u: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        self.graph
            .neighbours(u)
            .filter(move |&(v, _)| v != u)
            .map(move |(v, a)| (v, self.off_diagonal(u, v, a)))
    }

    /// Every nonzero `(v, K(u, v))` of row `u`, the diagonal included.
    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        std::iter::once((u, self.self_affinity[u]))
            .filter(|&(_, k)| k != T::zero())
            .chain(self.off_diagonal_row(u))
    }

    /// `Δ(u, v) = K(u,u) + K(v,v) − 2K(u,v)`, clamped at zero.
    #[inline]
    pub fn distance_sq(&self, u: usize, v: usize) -> T {
        if u == v {
            return T::zero();
        }
        self.distance_with_entry(u, v, self.entry(u, v))
    }

    /// Same as [`distance_sq`](Self::distance_sq) when `K(u, v)` is already known.
    #[inline]
    pub fn distance_with_entry(&self, u: usize, v: usize, k_uv: T) -> T {
        let two = T::one() + T::one();
        let d = self.self_affinity[u] + self.self_affinity[v] - two * k_uv;
        self.clamp(d, self.self_affinity[u] + self.self_affinity[v])
    }

    /// Clamps a squared distance at zero when `σ ≥ 1`. Below that the kernel may be
    /// indefinite and negative values are genuine, so they are passed through.
    #[inline]
    pub(crate) fn clamp(&self, value: T, scale: T) -> T {
        if value >= T::zero() || self.sigma < T::one() {
            return value;
        }
        debug_assert!(
            -value <= T::of(1e-9).max(T::epsilon() * T::of(64.0)) * scale.max(T::one()),
            "squared distance {value} is negative beyond round-off"
        );
        T::zero()
    }

    /// Vertex of smallest `K(u, u)` (lowest index on ties) and that value.
    pub fn min_self_affinity(&self) -> (usize, T) {
        let mut best = 0;
        for u in 1..self.n() {
            if self.self_affinity[u] < self.self_affinity[best] {
                best = u;
            }
        }
        (best, self.self_affinity[best])
    }

    /// `Δ(φ(u), c)`, touching only row `u` of the kernel.
    pub fn distance_to_center(&self, u: usize, center: &ImplicitCenter<T>) -> T {
        let two = T::one() + T::one();
        let cross: T = self
            .row(u)
            .map(|(v, k)| center.coefficient(v) * k)
            .sum();
        let kuu = self.self_affinity[u];
        self.clamp(kuu + center.norm_sq - two * cross, kuu + center.norm_sq)
    }

    /// `⟨a, b⟩` for two centers in the span of the data.
    pub fn inner(&self, a: &ImplicitCenter<T>, b: &ImplicitCenter<T>) -> T {
        let (small, large) = if a.support.len() <= b.support.len() {
            (a, b)
        } else {
            (b, a)
        };
        small
            .support
            .iter()
            .zip(&small.coeffs)
            .map(|(&i, &alpha)| {
                let s: T = self.row(i).map(|(j, k)| large.coefficient(j) * k).sum();
                alpha * s
            })
            .sum()
    }

    /// `‖a − b‖²`, clamped at zero.
    pub fn distance_between(&self, a: &ImplicitCenter<T>, b: &ImplicitCenter<T>) -> T {
        let two = T::one() + T::one();
        let d = a.norm_sq + b.norm_sq - two * self.inner(a, b);
        self.clamp(d, a.norm_sq + b.norm_sq)
    }

    /// `Σ_x w(x)·min_c Δ(φ(x), c)` over the weighted vertex subset.
    pub fn cost_points(&self, vertices: &[usize], weights: &[T], centers: &[ImplicitCenter<T>]) -> Result<T> {
        if centers.is_empty() {
            return Err(Error::Domain("cost needs at least one center".into()));
        }
        if vertices.len() != weights.len() {
            return Err(Error::LengthMismatch {
                left: vertices.len(),
                right: weights.len(),
            });
        }
        Ok(vertices
            .iter()
            .zip(weights)
            .map(|(&x, &w)| {
                let best = centers
                    .iter()
                    .map(|c| self.distance_to_center(x, c))
                    .fold(T::infinity(), T::min);
                w * best
            })
            .sum())
    }

    /// Kernel k-means objective of a partition of a weighted vertex subset: every point
    /// is charged its distance to the centroid of its own cluster.
    pub fn cost_partition(&self, vertices: &[usize], weights: &[T], labels: &Labeling) -> Result<T> {
        let centroids = CentroidSet::new(self, vertices, weights, labels, CentroidSource::Custom)?;
        Ok(vertices
            .iter()
            .zip(weights)
            .zip(labels.as_slice())
            .map(|((&x, &w), &j)| w * centroids.distance(self, x, j))
            .sum())
    }

    /// [`cost_partition`](Self::cost_partition) over all vertices with `w = deg`.
    pub fn cost_partition_full(&self, labels: &Labeling) -> Result<T> {
        let vertices: Vec<usize> = (0..self.n()).collect();
        self.cost_partition(&vertices, self.weights(), labels)
    }
}

/// A point `Σ_i α_i φ(x_i)` of the feature space spanned by the data.
#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitCenter<T> {
    support: Vec<usize>,
    coeffs: Vec<T>,
    norm_sq: T,
}

impl<T: Real> ImplicitCenter<T> {
    /// Builds a center from `(vertex, coefficient)` pairs; repeated vertices are merged.
    pub fn new(kern: &GraphKernel<'_, T>, terms: impl IntoIterator<Item = (usize, T)>) -> Result<Self> {
        let mut pairs: Vec<(usize, T)> = terms.into_iter().collect();
        if pairs.is_empty() {
            return Err(Error::Domain("implicit center needs a nonempty support".into()));
        }
        pairs.sort_by_key(|&(v, _)| v);
        let mut support: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut coeffs: Vec<T> = Vec::with_capacity(pairs.len());
        for (v, a) in pairs {
            if v >= kern.n() {
                return Err(Error::Domain(format!("support vertex {v} out of range")));
            }
            if !a.is_finite() {
                return Err(Error::Domain(format!("coefficient of vertex {v} is not finite")));
            }
            if support.last() == Some(&v) {
                *coeffs.last_mut().unwrap() += a;
            } else {
                support.push(v);
                coeffs.push(a);
            }
        }
        let mut center = Self {
            support,
            coeffs,
            norm_sq: T::zero(),
        };
        let norm_sq = kern.inner(&center, &center);
        center.norm_sq = kern.clamp(norm_sq, norm_sq.abs());
        Ok(center)
    }

    /// `φ(u)` itself.
    pub fn point(kern: &GraphKernel<'_, T>, u: usize) -> Self {
        Self {
            support: vec![u],
            coeffs: vec![T::one()],
            norm_sq: kern.self_affinity(u),
        }
    }

    /// `Σ_i c_i · centers_i`.
    pub fn combine(kern: &GraphKernel<'_, T>, parts: &[(T, &ImplicitCenter<T>)]) -> Result<Self> {
        Self::new(
            kern,
            parts.iter().flat_map(|&(scale, c)| {
                c.support
                    .iter()
                    .zip(&c.coeffs)
                    .map(move |(&v, &a)| (v, scale * a))
            }),
        )
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Cached `‖c‖²`.
    pub fn norm_sq(&self) -> T {
        self.norm_sq
    }

    /// Coefficient of `φ(v)`, zero off the support.
    #[inline]
    pub fn coefficient(&self, v: usize) -> T {
        match self.support.binary_search(&v) {
            Ok(i) => self.coeffs[i],
            Err(_) => T::zero(),
        }
    }
}

/// Which weighted point set a [`CentroidSet`] was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CentroidSource {
    FullGraph,
    Coreset,
    Custom,
}

const NOT_MEMBER: usize = usize::MAX;

/// Weighted centroids `m_j = Σ_{x∈π_j} w(x)φ(x) / s_j` of a partition with their
/// squared norms precomputed by sparse row scans.
#[derive(Debug, Clone)]
pub struct CentroidSet<T> {
    k: usize,
    members: Vec<Vec<usize>>,
    member_weights: Vec<Vec<T>>,
    totals: Vec<T>,
    norms: Vec<T>,
    /// Clusters sorted by `(norm, id)`.
    norm_order: Vec<usize>,
    cluster_of: Vec<usize>,
    weight_of: Vec<T>,
    source: CentroidSource,
}

impl<T: Real> CentroidSet<T> {
    /// `vertices[i]` carries weight `weights[i]` and label `labels[i]`; vertices must be distinct.
    pub fn new(
        kern: &GraphKernel<'_, T>,
        vertices: &[usize],
        weights: &[T],
        labels: &Labeling,
        source: CentroidSource,
    ) -> Result<Self> {
        if vertices.len() != weights.len() {
            return Err(Error::LengthMismatch {
                left: vertices.len(),
                right: weights.len(),
            });
        }
        if vertices.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: vertices.len(),
                right: labels.len(),
            });
        }
        let n = kern.n();
        let k = labels.k();
        let mut members = vec![Vec::new(); k];
        let mut member_weights = vec![Vec::new(); k];
        let mut totals = vec![T::zero(); k];
        let mut cluster_of = vec![NOT_MEMBER; n];
        let mut weight_of = vec![T::zero(); n];
        for ((&x, &w), &j) in vertices.iter().zip(weights).zip(labels.as_slice()) {
            if x >= n {
                return Err(Error::Domain(format!("vertex {x} out of range")));
            }
            if cluster_of[x] != NOT_MEMBER {
                return Err(Error::Domain(format!("vertex {x} appears twice")));
            }
            if !w.is_finite() || w < T::zero() {
                return Err(Error::Domain(format!("vertex {x} has invalid weight {w}")));
            }
            cluster_of[x] = j;
            weight_of[x] = w;
            members[j].push(x);
            member_weights[j].push(w);
            totals[j] += w;
        }
        if let Some(cluster) = totals.iter().position(|&s| s <= T::zero()) {
            return Err(Error::EmptyCluster { cluster });
        }
        let norms: Vec<T> = (0..k)
            .map(|j| {
                let mut acc = T::zero();
                for (&y, &wy) in members[j].iter().zip(&member_weights[j]) {
                    let row: T = kern
                        .row(y)
                        .filter(|&(z, _)| cluster_of[z] == j)
                        .map(|(z, kyz)| weight_of[z] * kyz)
                        .sum();
                    acc += wy * row;
                }
                (acc / (totals[j] * totals[j])).max(T::zero())
            })
            .collect();
        let mut norm_order: Vec<usize> = (0..k).collect();
        norm_order.sort_by(|&a, &b| norms[a].partial_cmp(&norms[b]).unwrap().then(a.cmp(&b)));
        Ok(Self {
            k,
            members,
            member_weights,
            totals,
            norms,
            norm_order,
            cluster_of,
            weight_of,
            source,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn source(&self) -> CentroidSource {
        self.source
    }

    pub fn members(&self, j: usize) -> &[usize] {
        &self.members[j]
    }

    pub fn member_weights(&self, j: usize) -> &[T] {
        &self.member_weights[j]
    }

    /// `s_j = Σ_{x∈π_j} w(x)`.
    pub fn total_weight(&self, j: usize) -> T {
        self.totals[j]
    }

    /// `‖m_j‖²`.
    pub fn norm_sq(&self, j: usize) -> T {
        self.norms[j]
    }

    /// `Σ_{v ∈ π_j} w(v)·K(u, v)` for every cluster `j` that row `u` touches.
    fn cross_terms(&self, kern: &GraphKernel<'_, T>, u: usize, out: &mut Vec<(usize, T)>) {
        out.clear();
        for (v, k) in kern.row(u) {
            let j = self.cluster_of[v];
            if j == NOT_MEMBER {
                continue;
            }
            let term = self.weight_of[v] * k;
            match out.iter_mut().find(|(c, _)| *c == j) {
                Some((_, acc)) => *acc += term,
                None => out.push((j, term)),
            }
        }
    }

    #[inline]
    fn finish(&self, kern: &GraphKernel<'_, T>, u: usize, j: usize, cross: T) -> T {
        let two = T::one() + T::one();
        let base = kern.self_affinity(u) + self.norms[j];
        kern.clamp(base - two * cross / self.totals[j], base)
    }

    /// `Δ(φ(u), m_j)`.
    pub fn distance(&self, kern: &GraphKernel<'_, T>, u: usize, j: usize) -> T {
        let cross: T = kern
            .row(u)
            .filter(|&(v, _)| self.cluster_of[v] == j)
            .map(|(v, k)| self.weight_of[v] * k)
            .sum();
        self.finish(kern, u, j, cross)
    }

    /// Nearest centroid of `u` (lowest id on ties) and its distance. Clusters that row
    /// `u` does not touch are all at `K(u,u) + ‖m_j‖²`, so only the smallest-norm one of
    /// them needs to be considered.
    pub fn nearest(&self, kern: &GraphKernel<'_, T>, u: usize) -> (usize, T) {
        let mut touched = Vec::new();
        self.nearest_with(kern, u, &mut touched)
    }

    pub(crate) fn nearest_with(
        &self,
        kern: &GraphKernel<'_, T>,
        u: usize,
        scratch: &mut Vec<(usize, T)>,
    ) -> (usize, T) {
        self.cross_terms(kern, u, scratch);
        let mut best: Option<(usize, T)> = None;
        let mut consider = |j: usize, d: T| match best {
            Some((bj, bd)) if d > bd || (d == bd && j > bj) => {}
            _ => best = Some((j, d)),
        };
        for &(j, cross) in scratch.iter() {
            consider(j, self.finish(kern, u, j, cross));
        }
        if let Some(&j) = self
            .norm_order
            .iter()
            .find(|&&j| !scratch.iter().any(|&(c, _)| c == j))
        {
            consider(j, self.finish(kern, u, j, T::zero()));
        }
        best.expect("at least one cluster")
    }

    /// The centroids as explicit [`ImplicitCenter`]s.
    pub fn centers(&self, kern: &GraphKernel<'_, T>) -> Result<Vec<ImplicitCenter<T>>> {
        (0..self.k)
            .map(|j| {
                let s = self.totals[j];
                ImplicitCenter::new(
                    kern,
                    self.members[j]
                        .iter()
                        .zip(&self.member_weights[j])
                        .map(|(&x, &w)| (x, w / s)),
                )
            })
            .collect()
    }
}

/// Both sides of the weighted centroid decomposition
/// `Σ w(x)‖x − z‖² = Σ w(x)‖x − c(S)‖² + (Σ w(x))·‖c(S) − z‖²`.
pub fn weighted_centroid_identity<T: Real>(
    kern: &GraphKernel<'_, T>,
    points: &[ImplicitCenter<T>],
    weights: &[T],
    z: &ImplicitCenter<T>,
) -> Result<(T, T)> {
    if points.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: points.len(),
            right: weights.len(),
        });
    }
    let total: T = weights.iter().copied().sum();
    if total <= T::zero() {
        return Err(Error::Domain("total weight must be positive".into()));
    }
    let parts: Vec<(T, &ImplicitCenter<T>)> = weights.iter().map(|&w| w / total).zip(points).collect();
    let centroid = ImplicitCenter::combine(kern, &parts)?;
    let lhs = points
        .iter()
        .zip(weights)
        .map(|(x, &w)| w * kern.distance_between(x, z))
        .sum();
    let spread: T = points
        .iter()
        .zip(weights)
        .map(|(x, &w)| w * kern.distance_between(x, &centroid))
        .sum();
    Ok((lhs, spread + total * kern.distance_between(&centroid, z)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphOptions;

    fn graph(n: usize, edges: &[(usize, usize)]) -> SparseGraph<f64> {
        SparseGraph::from_edges(n, edges.iter().map(|&(u, v)| (u, v, 1.0)), GraphOptions::default()).unwrap()
    }

    #[test]
    fn triangle_adjacent_distance() {
        let g = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let kern = GraphKernel::new(&g, 1.0).unwrap();
        assert_eq!(kern.distance_sq(0, 1), 0.5);
        assert_eq!(kern.distance_sq(2, 2), 0.0);
    }

    #[test]
    fn path_endpoint_distance() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let kern = GraphKernel::new(&g, 1.0).unwrap();
        assert_eq!(kern.distance_sq(0, 2), 2.0);
    }

    #[test]
    fn min_self_affinity_examples() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(GraphKernel::new(&g, 1.0).unwrap().min_self_affinity(), (1, 0.5));
        let cycle = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(GraphKernel::new(&cycle, 1.0).unwrap().min_self_affinity().0, 0);
        assert_eq!(GraphKernel::new(&g, 0.0).unwrap().min_self_affinity(), (0, 0.0));
    }

    #[test]
    fn negative_sigma_rejected() {
        let g = graph(2, &[(0, 1)]);
        assert!(GraphKernel::new(&g, -1.0).is_err());
    }

    #[test]
    fn point_center_has_zero_distance() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let kern = GraphKernel::new(&g, 1.0).unwrap();
        let c = ImplicitCenter::point(&kern, 2);
        assert_eq!(kern.distance_to_center(2, &c), 0.0);
        assert!((kern.distance_to_center(1, &c) - kern.distance_sq(1, 2)).abs() < 1e-15);
    }

    #[test]
    fn singleton_centroid_norms() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let kern = GraphKernel::new(&g, 1.0).unwrap();
        let labels = Labeling::new(vec![0, 1, 2, 3], 4).unwrap();
        let vs = [0, 1, 2, 3];
        let c = CentroidSet::new(&kern, &vs, kern.weights(), &labels, CentroidSource::FullGraph).unwrap();
        for u in 0..4 {
            assert!((c.norm_sq(u) - kern.self_affinity(u)).abs() < 1e-15);
        }
    }

    #[test]
    fn non_adjacent_pair_centroid_norm() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let kern = GraphKernel::new(&g, 1.0).unwrap();
        let labels = Labeling::new(vec![0, 0], 1).unwrap();
        let c = CentroidSet::new(&kern, &[0, 2], &[1.0, 1.0], &labels, CentroidSource::Custom).unwrap();
        let expected = (kern.self_affinity(0) + kern.self_affinity(2)) / 4.0;
        assert!((c.norm_sq(0) - expected).abs() < 1e-15);
    }

    #[test]
    fn empty_cluster_is_named() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let kern = GraphKernel::new(&g, 1.0).unwrap();
        let labels = Labeling::new(vec![0, 2, 0], 3).unwrap();
        let err = CentroidSet::new(&kern, &[0, 1, 2], kern.weights(), &labels, CentroidSource::FullGraph).unwrap_err();
        assert_eq!(err, Error::EmptyCluster { cluster: 1 });
    }

    #[test]
    fn singleton_partition_costs_zero() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let kern = GraphKernel::new(&g, 1.0).unwrap();
        let labels = Labeling::new(vec![0, 1, 2, 3], 4).unwrap();
        assert!(kern.cost_partition_full(&labels).unwrap().abs() < 1e-15);
    }

    #[test]
    fn cost_with_every_point_a_center_is_zero() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let kern = GraphKernel::new(&g, 1.0).unwrap();
        let centers: Vec<_> = (0..4).map(|u| ImplicitCenter::point(&kern, u)).collect();
        let vs = [0, 1, 2, 3];
        assert_eq!(kern.cost_points(&vs, kern.weights(), &centers).unwrap(), 0.0);
        assert!(kern.cost_points(&vs, kern.weights(), &[]).is_err());
    }

    #[test]
    fn centroid_identity_duplicate_points() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let kern = GraphKernel::new(&g, 1.0).unwrap();
        let x = ImplicitCenter::point(&kern, 0);
        let z = ImplicitCenter::point(&kern, 2);
        let (lhs, rhs) = weighted_centroid_identity(&kern, &[x.clone(), x.clone()], &[1.0, 1.0], &z).unwrap();
        let d = kern.distance_between(&x, &z);
        assert!((lhs - 2.0 * d).abs() < 1e-12);
        assert!((rhs - 2.0 * d).abs() < 1e-12);
    }

    #[test]
    fn kernel_in_f32() {
        let g = SparseGraph::<f32>::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], GraphOptions::default()).unwrap();
        let kern = GraphKernel::new(&g, 1.0f32).unwrap();
        assert_eq!(kern.distance_sq(0, 1), 0.5f32);
    }
}
