//! Contribution sampling tree for D²-sampling on sparse kernels.
//!
//! Leaves hold one point each with its weight and current squared distance `Δ(x, C)`;
//! every internal node stores the total contribution `Σ w(x)·Δ(x, C)` of the leaves
//! below it. Levels are built by pairing consecutive nodes, an odd trailing node being
//! promoted unchanged, so the depth is at most `⌈log₂ n⌉ + 1`.
//!
//! Updates rewrite a leaf and recompute each ancestor as the sum of its two children,
//! so every internal value is always exactly the floating-point sum of its children
//! and subtrees whose leaves are all covered hold an exact zero.

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::GraphKernel;
use crate::scalar::Real;

const NO_NODE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct SamplingTree<T> {
    n: usize,
    /// Contribution of every node; leaves occupy `0..n`, internal nodes follow.
    contribution: Vec<T>,
    /// Children of internal node `n + i`.
    children: Vec<[usize; 2]>,
    parent: Vec<usize>,
    delta: Vec<T>,
    weight: Vec<T>,
    /// Nearest inserted center per leaf, as a vertex id.
    nearest: Vec<usize>,
    root: usize,
}

impl<T: Real> SamplingTree<T> {
    /// Builds the tree with every leaf at `Δ = K(x, x) + c_star` and weight `deg(x)`.
    ///
    /// `c_star` is the minimum self-affinity, attained at `x_star`; until `x_star` is
    /// repaired in, every point reports `x_star` as its nearest center.
    pub fn construct(kern: &GraphKernel<'_, T>, x_star: usize, c_star: T) -> Self {
        let n = kern.n();
        assert!(n >= 1, "sampling tree needs at least one point");
        let delta: Vec<T> = (0..n).map(|x| kern.self_affinity(x) + c_star).collect();
        let weight = kern.weights().to_vec();
        Self::from_leaves(delta, weight, vec![x_star; n])
    }

    /// Builds a tree over explicit leaf deltas and weights.
    pub fn from_leaves(delta: Vec<T>, weight: Vec<T>, nearest: Vec<usize>) -> Self {
        let n = delta.len();
        assert!(n >= 1 && weight.len() == n && nearest.len() == n);
        let mut contribution: Vec<T> = delta.iter().zip(&weight).map(|(&d, &w)| w * d).collect();
        let mut children = Vec::with_capacity(n);
        let mut parent = vec![NO_NODE; n];
        let mut level: Vec<usize> = (0..n).collect();
        while level.len() > 1 {
            let mut next = Vec::with_capacity(level.len().div_ceil(2));
            for pair in level.chunks(2) {
                if let [left, right] = *pair {
                    let id = contribution.len();
                    contribution.push(contribution[left] + contribution[right]);
                    children.push([left, right]);
                    parent.push(NO_NODE);
                    parent[left] = id;
                    parent[right] = id;
                    next.push(id);
                } else {
                    next.push(pair[0]);
                }
            }
            level = next;
        }
        Self {
            n,
            root: level[0],
            contribution,
            children,
            parent,
            delta,
            weight,
            nearest,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `Σ_x w(x)·Δ(x, C)`.
    pub fn total(&self) -> T {
        self.contribution[self.root]
    }

    pub fn delta(&self, x: usize) -> T {
        self.delta[x]
    }

    pub fn deltas(&self) -> &[T] {
        &self.delta
    }

    /// Vertex id of the center each point is currently charged to.
    pub fn nearest_centers(&self) -> &[usize] {
        &self.nearest
    }

    pub fn leaf_contribution(&self, x: usize) -> T {
        self.contribution[x]
    }

    fn set_leaf(&mut self, x: usize, delta: T) {
        self.delta[x] = delta;
        self.contribution[x] = self.weight[x] * delta;
        let mut node = self.parent[x];
        while node != NO_NODE {
            let [l, r] = self.children[node - self.n];
            self.contribution[node] = self.contribution[l] + self.contribution[r];
            node = self.parent[node];
        }
    }

    /// Inserts `y` into the center set: zeroes its own leaf and lowers every kernel
    /// neighbour whose distance to `y` beats its stored value. Non-neighbours cannot
    /// improve because `x_star` is already a center. Returns the number of neighbour
    /// checks performed. Re-inserting a center is a no-op apart from the checks.
    pub fn repair(&mut self, kern: &GraphKernel<'_, T>, y: usize) -> usize {
        if self.delta[y] != T::zero() || self.nearest[y] != y {
            self.nearest[y] = y;
            if self.delta[y] != T::zero() {
                self.set_leaf(y, T::zero());
            }
        }
        let mut checks = 0;
        for (x, k_xy) in kern.off_diagonal_row(y) {
            checks += 1;
            let d = kern.distance_with_entry(x, y, k_xy);
            if d < self.delta[x] {
                self.nearest[x] = y;
                self.set_leaf(x, d);
            }
        }
        checks
    }

    /// Draws a leaf by walking down from the root, taking each child with probability
    /// proportional to its contribution (one uniform per internal node).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        if !(self.total() > T::zero()) {
            return Err(Error::AllCovered);
        }
        let mut node = self.root;
        while node >= self.n {
            let [l, r] = self.children[node - self.n];
            let (cl, cr) = (self.contribution[l], self.contribution[r]);
            node = if cl <= T::zero() {
                r
            } else if cr <= T::zero() {
                l
            } else {
                let u = T::of(rng.random::<f64>());
                if u * (cl + cr) < cl {
                    l
                } else {
                    r
                }
            };
        }
        Ok(node)
    }

    /// Inverse-CDF draw over leaves in index order for a given `u ∈ [0, 1)`.
    pub fn sample_with_uniform(&self, u: f64) -> Result<usize> {
        if !(self.total() > T::zero()) {
            return Err(Error::AllCovered);
        }
        let mut target = T::of(u) * self.total();
        let mut node = self.root;
        while node >= self.n {
            let [l, r] = self.children[node - self.n];
            let (cl, cr) = (self.contribution[l], self.contribution[r]);
            if cr <= T::zero() || (cl > T::zero() && target < cl) {
                node = l;
            } else {
                target -= cl;
                node = r;
            }
        }
        Ok(node)
    }

    /// Product of branch probabilities along the root-to-leaf path of `x`.
    pub fn path_probability(&self, x: usize) -> T {
        let mut p = T::one();
        let mut node = x;
        while self.parent[node] != NO_NODE {
            let parent = self.parent[node];
            let [l, r] = self.children[parent - self.n];
            let total = self.contribution[l] + self.contribution[r];
            if total <= T::zero() {
                return T::zero();
            }
            p *= self.contribution[node] / total;
            node = parent;
        }
        p
    }

    pub fn depth(&self) -> usize {
        (0..self.n)
            .map(|x| {
                let mut d = 0;
                let mut node = x;
                while self.parent[node] != NO_NODE {
                    node = self.parent[node];
                    d += 1;
                }
                d
            })
            .max()
            .unwrap_or(0)
    }

    /// Largest relative gap between an internal node and the sum of the leaves below it.
    pub fn max_internal_drift(&self) -> T {
        let mut leaf_sum = self.contribution[..self.n].to_vec();
        leaf_sum.resize(self.contribution.len(), T::zero());
        let mut worst = T::zero();
        for i in 0..self.children.len() {
            let [l, r] = self.children[i];
            let id = self.n + i;
            leaf_sum[id] = leaf_sum[l] + leaf_sum[r];
            let gap = (leaf_sum[id] - self.contribution[id]).abs();
            let scale = leaf_sum[id].abs().max(T::min_positive_value());
            worst = worst.max(gap / scale);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{GraphOptions, SparseGraph};
    use crate::SeedRng;
    use rand::SeedableRng;

    fn path3() -> SparseGraph<f64> {
        SparseGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)], GraphOptions::default()).unwrap()
    }

    #[test]
    fn single_leaf_is_root() {
        let t = SamplingTree::from_leaves(vec![2.0f64], vec![3.0], vec![0]);
        assert_eq!(t.total(), 6.0);
        assert_eq!(t.depth(), 0);
        assert_eq!(t.path_probability(0), 1.0);
    }

    #[test]
    fn path_root_contribution() {
        let g = path3();
        let kern = GraphKernel::new(&g, 1.0).unwrap();
        let (x_star, c_star) = kern.min_self_affinity();
        assert_eq!((x_star, c_star), (1, 0.5));
        let t = SamplingTree::construct(&kern, x_star, c_star);
        assert_eq!(t.total(), 5.0);
    }

    #[test]
    fn odd_levels_promote() {
        let t = SamplingTree::from_leaves(vec![1.0f64; 5], vec![1.0; 5], vec![0; 5]);
        assert_eq!(t.total(), 5.0);
        assert!(t.depth() <= 4);
        assert_eq!(t.children.len(), 4);
    }

    #[test]
    fn repair_first_center() {
        let g = path3();
        let kern = GraphKernel::new(&g, 1.0).unwrap();
        let (x_star, c_star) = kern.min_self_affinity();
        let mut t = SamplingTree::construct(&kern, x_star, c_star);
        let checks = t.repair(&kern, x_star);
        assert_eq!(checks, 2);
        assert_eq!(t.delta(1), 0.0);
        for x in [0, 2] {
            assert_eq!(t.delta(x), kern.distance_sq(x, 1));
            assert!(t.delta(x) <= kern.self_affinity(x) + c_star);
        }
        // Re-inserting is a no-op.
        let before = t.deltas().to_vec();
        t.repair(&kern, x_star);
        assert_eq!(t.deltas(), &before[..]);
    }

    #[test]
    fn single_nonzero_leaf_always_sampled() {
        let t = SamplingTree::from_leaves(vec![0.0f64, 0.0, 4.0, 0.0, 0.0], vec![1.0; 5], vec![0; 5]);
        let mut rng = SeedRng::seed_from_u64(1);
        for _ in 0..200 {
            assert_eq!(t.sample(&mut rng).unwrap(), 2);
        }
        assert_eq!(t.sample_with_uniform(0.0).unwrap(), 2);
        assert_eq!(t.sample_with_uniform(0.999_999).unwrap(), 2);
    }

    #[test]
    fn empty_tree_reports_all_covered() {
        let t = SamplingTree::from_leaves(vec![0.0f64; 3], vec![1.0; 3], vec![0; 3]);
        let mut rng = SeedRng::seed_from_u64(1);
        assert_eq!(t.sample(&mut rng), Err(Error::AllCovered));
    }

    #[test]
    fn path_probabilities_match_contributions() {
        let t = SamplingTree::from_leaves(vec![1.0f64, 3.0, 0.5, 2.0, 7.0], vec![1.0, 2.0, 1.0, 1.0, 0.5], vec![0; 5]);
        for x in 0..5 {
            let expected = t.leaf_contribution(x) / t.total();
            assert!((t.path_probability(x) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_cdf_matches_prefix_scan() {
        let t = SamplingTree::from_leaves(vec![1.0f64, 0.0, 3.0, 2.0], vec![1.0; 4], vec![0; 4]);
        // Cumulative contributions 1, 1, 4, 6.
        assert_eq!(t.sample_with_uniform(0.1).unwrap(), 0);
        assert_eq!(t.sample_with_uniform(0.2).unwrap(), 2);
        assert_eq!(t.sample_with_uniform(0.7).unwrap(), 3);
    }
}
