//! D²-sampling (k-means++ seeding) in kernel space.
//!
//! [`fast_d2_sample`] keeps the squared distances in a [`SamplingTree`] and, because the
//! minimum-self-affinity point `x*` is always a center, only has to revisit the kernel
//! neighbours of each new center. [`naive_d2_sample`] recomputes a dense distance array
//! per center and doubles as the reference for the fast sampler.

use std::time::{Duration, Instant};

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::GraphKernel;
use crate::scalar::Real;
use crate::tree::SamplingTree;

/// How a categorical draw consumes randomness.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DrawRule {
    /// One uniform per internal tree node.
    #[default]
    PerBranch,
    /// One uniform per draw, inverted against the cumulative contributions in point
    /// order. Fast and naive samplers then make identical choices from identical streams.
    InverseCdf,
}

#[derive(Debug, Clone)]
pub struct SeedingResult<T> {
    /// Distinct center vertices in insertion order.
    pub centers: Vec<usize>,
    /// Weighted cost `Σ w(x)Δ(x, C)` after initialisation and after every draw.
    pub cost_trace: Vec<T>,
    /// Final `Δ(x, C)` per point of the input set.
    pub deltas: Vec<T>,
    /// Final nearest center (vertex id) per point of the input set.
    pub nearest: Vec<usize>,
    pub neighbour_checks: u64,
    pub elapsed: Duration,
    /// Set when every point was covered before all draws were made.
    pub exhausted: bool,
}

impl<T: Real> SeedingResult<T> {
    pub fn final_cost(&self) -> T {
        *self.cost_trace.last().expect("trace starts with the initial cost")
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Domain(format!("seeding needs 1 <= k <= n, got k = {k}, n = {n}")));
    }
    Ok(())
}

/// Tree-based D²-sampling over all vertices with `w = deg`.
///
/// Starts from a uniform point and `x*`, then draws `k` further points, so up to
/// `k + 2` centers are returned.
pub fn fast_d2_sample<T: Real, R: Rng + ?Sized>(
    kern: &GraphKernel<'_, T>,
    k: usize,
    rng: &mut R,
) -> Result<SeedingResult<T>> {
    fast_d2_sample_with(kern, k, rng, DrawRule::PerBranch)
}

pub fn fast_d2_sample_with<T: Real, R: Rng + ?Sized>(
    kern: &GraphKernel<'_, T>,
    k: usize,
    rng: &mut R,
    rule: DrawRule,
) -> Result<SeedingResult<T>> {
    let start = Instant::now();
    let n = kern.n();
    check_k(n, k)?;
    let (x_star, c_star) = kern.min_self_affinity();
    let mut tree = SamplingTree::construct(kern, x_star, c_star);
    let first = rng.random_range(0..n);
    let mut centers = vec![first];
    if x_star != first {
        centers.push(x_star);
    }
    let mut checks = tree.repair(kern, x_star) as u64;
    if first != x_star {
        checks += tree.repair(kern, first) as u64;
    }
    let mut cost_trace = vec![tree.total()];
    let mut exhausted = false;
    for _ in 0..k {
        if !(tree.total() > T::zero()) {
            exhausted = true;
            break;
        }
        let x = match rule {
            DrawRule::PerBranch => tree.sample(rng)?,
            DrawRule::InverseCdf => tree.sample_with_uniform(rng.random::<f64>())?,
        };
        centers.push(x);
        checks += tree.repair(kern, x) as u64;
        cost_trace.push(tree.total());
    }
    Ok(SeedingResult {
        centers,
        cost_trace,
        deltas: tree.deltas().to_vec(),
        nearest: tree.nearest_centers().to_vec(),
        neighbour_checks: checks,
        elapsed: start.elapsed(),
        exhausted,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NaiveOptions {
    /// Seed with the uniform point and the minimum-self-affinity point and make `k`
    /// draws, mirroring the fast sampler step for step.
    pub inject_min_self_affinity: bool,
}

/// Dense D²-sampling over a weighted vertex subset: one uniform point, then `k − 1`
/// draws with probability `w(x)·Δ(x, C) / cost`. Every draw inverts one uniform.
pub fn naive_d2_sample<T: Real, R: Rng + ?Sized>(
    kern: &GraphKernel<'_, T>,
    vertices: &[usize],
    weights: &[T],
    k: usize,
    rng: &mut R,
    options: NaiveOptions,
) -> Result<SeedingResult<T>> {
    let start = Instant::now();
    let m = vertices.len();
    if weights.len() != m {
        return Err(Error::LengthMismatch { left: m, right: weights.len() });
    }
    check_k(m, k)?;
    let mut state = DenseState::new(kern, vertices, weights);
    let first = rng.random_range(0..m);
    let draws = if options.inject_min_self_affinity {
        let star = (0..m)
            .min_by(|&a, &b| {
                kern.self_affinity(vertices[a])
                    .partial_cmp(&kern.self_affinity(vertices[b]))
                    .unwrap()
                    .then(vertices[a].cmp(&vertices[b]))
            })
            .unwrap();
        state.insert(vertices[star]);
        state.insert(vertices[first]);
        state.centers = vec![vertices[first]];
        if star != first {
            state.centers.push(vertices[star]);
        }
        k
    } else {
        state.insert(vertices[first]);
        k - 1
    };
    let mut cost_trace = vec![state.cost()];
    let mut exhausted = false;
    for _ in 0..draws {
        let total = state.cost();
        if !(total > T::zero()) {
            exhausted = true;
            break;
        }
        let i = state.inverse_cdf(rng.random::<f64>(), total);
        state.insert(vertices[i]);
        cost_trace.push(state.cost());
    }
    Ok(SeedingResult {
        centers: state.centers,
        cost_trace,
        deltas: state.delta,
        nearest: state.nearest,
        neighbour_checks: state.checks,
        elapsed: start.elapsed(),
        exhausted,
    })
}

struct DenseState<'a, 'g, T> {
    kern: &'a GraphKernel<'g, T>,
    vertices: &'a [usize],
    weights: &'a [T],
    delta: Vec<T>,
    nearest: Vec<usize>,
    centers: Vec<usize>,
    row: Vec<T>,
    checks: u64,
}

impl<'a, 'g, T: Real> DenseState<'a, 'g, T> {
    fn new(kern: &'a GraphKernel<'g, T>, vertices: &'a [usize], weights: &'a [T]) -> Self {
        Self {
            kern,
            vertices,
            weights,
            delta: vec![T::infinity(); vertices.len()],
            nearest: vec![usize::MAX; vertices.len()],
            centers: Vec::new(),
            row: vec![T::zero(); kern.n()],
            checks: 0,
        }
    }

    fn insert(&mut self, c: usize) {
        if !self.centers.contains(&c) {
            self.centers.push(c);
        }
        for (v, k) in self.kern.off_diagonal_row(c) {
            self.row[v] = k;
        }
        for (i, &x) in self.vertices.iter().enumerate() {
            let d = if x == c {
                T::zero()
            } else {
                self.kern.distance_with_entry(x, c, self.row[x])
            };
            self.checks += 1;
            if d < self.delta[i] || (x == c && self.nearest[i] != c) {
                self.delta[i] = d;
                self.nearest[i] = c;
            }
        }
        for (v, _) in self.kern.off_diagonal_row(c) {
            self.row[v] = T::zero();
        }
    }

    fn cost(&self) -> T {
        self.delta
            .iter()
            .zip(self.weights)
            .map(|(&d, &w)| w * d)
            .sum()
    }

    /// Smallest index whose cumulative contribution exceeds `u·total`, skipping
    /// zero-contribution points.
    fn inverse_cdf(&self, u: f64, total: T) -> usize {
        let target = T::of(u) * total;
        let mut acc = T::zero();
        let mut last_positive = 0;
        for (i, (&d, &w)) in self.delta.iter().zip(self.weights).enumerate() {
            let c = w * d;
            if c > T::zero() {
                acc += c;
                last_positive = i;
                if target < acc {
                    return i;
                }
            }
        }
        last_positive
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
    fn fast_covers_tiny_graph() {
        let g = SparseGraph::from_edges(
            5,
            [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 0, 1.0)],
            GraphOptions::default(),
        )
        .unwrap();
        let kern = GraphKernel::new(&g, 1.0).unwrap();
        let mut rng = SeedRng::seed_from_u64(4);
        let r = fast_d2_sample(&kern, 5, &mut rng).unwrap();
        let mut c = r.centers.clone();
        c.sort();
        assert_eq!(c, vec![0, 1, 2, 3, 4]);
        assert_eq!(r.final_cost(), 0.0);
        assert!(r.exhausted);
    }

    #[test]
    fn fast_on_path_includes_x_star() {
        let g = path3();
        let kern = GraphKernel::new(&g, 1.0).unwrap();
        let mut rng = SeedRng::seed_from_u64(9);
        let r = fast_d2_sample(&kern, 1, &mut rng).unwrap();
        assert!(r.centers.contains(&1));
        assert!(r.centers.len() <= 3);
    }

    #[test]
    fn naive_k1_is_one_uniform_point() {
        let g = path3();
        let kern = GraphKernel::new(&g, 1.0).unwrap();
        let vs = [0, 1, 2];
        let mut rng = SeedRng::seed_from_u64(2);
        let r = naive_d2_sample(&kern, &vs, kern.weights(), 1, &mut rng, NaiveOptions::default()).unwrap();
        assert_eq!(r.centers.len(), 1);
        assert_eq!(r.cost_trace.len(), 1);
    }

    #[test]
    fn rejects_bad_k() {
        let g = path3();
        let kern = GraphKernel::new(&g, 1.0).unwrap();
        let mut rng = SeedRng::seed_from_u64(2);
        assert!(fast_d2_sample(&kern, 0, &mut rng).is_err());
        assert!(fast_d2_sample(&kern, 4, &mut rng).is_err());
    }

    #[test]
    fn lockstep_on_path() {
        let g = path3();
        let kern = GraphKernel::new(&g, 1.0).unwrap();
        for seed in 0..20 {
            let fast = fast_d2_sample_with(&kern, 1, &mut SeedRng::seed_from_u64(seed), DrawRule::InverseCdf).unwrap();
            let naive = naive_d2_sample(
                &kern,
                &[0, 1, 2],
                kern.weights(),
                1,
                &mut SeedRng::seed_from_u64(seed),
                NaiveOptions { inject_min_self_affinity: true },
            )
            .unwrap();
            assert_eq!(fast.centers, naive.centers);
            assert_eq!(fast.deltas, naive.deltas);
            assert!((fast.final_cost() - naive.final_cost()).abs() < 1e-10);
        }
    }
}
