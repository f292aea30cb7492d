//! Symmetric weighted graphs in compressed-sparse-row form.

mod cut;
mod generate;
pub mod io;

pub use cut::{conductance, cut_weight, ncut_average, PartitionStats};
pub use generate::{gaussian_blobs, generate_sbm, knn_graph, SbmParams};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Construction switches for [`SparseGraph`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GraphOptions {
    /// Give zero-degree vertices a unit self-loop instead of rejecting the graph.
    pub self_loop_isolated: bool,
}

/// Undirected weighted graph with both `(u, v)` and `(v, u)` stored.
///
/// Rows are sorted by column, free of duplicates and carry strictly positive
/// degree. Self-loops are allowed and contribute their weight once to the degree.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
    degrees: Vec<T>,
}

impl<T: Real> SparseGraph<T> {
    /// Builds a graph from an edge iterator. Each `(u, v, w)` is inserted in both
    /// directions, duplicates sum their weights and zero-weight entries are dropped.
    pub fn from_edges<I>(n: usize, edges: I, options: GraphOptions) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {n} vertices"
                )));
            }
            if !w.is_finite() || w < T::zero() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) has invalid weight {w}"
                )));
            }
            rows[u].push((v, w));
            if u != v {
                rows[v].push((u, w));
            }
        }
        Self::assemble(n, rows, options)
    }

    /// Validates and adopts raw CSR arrays.
    pub fn from_csr(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        Self::from_csr_with(n, row_ptr, col_idx, values, GraphOptions::default())
    }

    pub fn from_csr_with(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<T>,
        options: GraphOptions,
    ) -> Result<Self> {
        if row_ptr.len() != n + 1 {
            return Err(Error::InvalidGraph(format!(
                "row_ptr has length {} but n + 1 = {}",
                row_ptr.len(),
                n + 1
            )));
        }
        if row_ptr[0] != 0 || row_ptr[n] != col_idx.len() || col_idx.len() != values.len() {
            return Err(Error::InvalidGraph(
                "row_ptr, col_idx and values lengths are inconsistent".into(),
            ));
        }
        for u in 0..n {
            let (start, end) = (row_ptr[u], row_ptr[u + 1]);
            if start > end {
                return Err(Error::InvalidGraph(format!("row_ptr decreases at row {u}")));
            }
            for e in start..end {
                let v = col_idx[e];
                if v >= n {
                    return Err(Error::InvalidGraph(format!(
                        "entry ({u}, {v}) out of range for {n} vertices"
                    )));
                }
                if e > start && col_idx[e - 1] >= v {
                    return Err(Error::InvalidGraph(format!(
                        "row {u} columns are not strictly increasing at column {v}"
                    )));
                }
                let w = values[e];
                if !w.is_finite() || w < T::zero() {
                    return Err(Error::InvalidGraph(format!(
                        "entry ({u}, {v}) has invalid weight {w}"
                    )));
                }
            }
        }
        let mut graph = Self {
            n,
            row_ptr,
            col_idx,
            values,
            degrees: Vec::new(),
        };
        for u in 0..n {
            for (v, w) in graph.neighbours(u) {
                if graph.weight(v, u) != w {
                    return Err(Error::InvalidGraph(format!(
                        "asymmetric entry: w({u}, {v}) = {w} but w({v}, {u}) = {}",
                        graph.weight(v, u)
                    )));
                }
            }
        }
        graph.degrees = graph.row_sums();
        if let Some(vertex) = graph.degrees.iter().position(|&d| d <= T::zero()) {
            if !options.self_loop_isolated {
                return Err(Error::IsolatedVertex { vertex });
            }
            let edges: Vec<_> = graph.triplets().collect();
            return Self::from_edges(n, edges, options);
        }
        Ok(graph)
    }

    fn assemble(n: usize, mut rows: Vec<Vec<(usize, T)>>, options: GraphOptions) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (u, row) in rows.iter_mut().enumerate() {
            // Stable sort keeps duplicate summation order identical in (u, v) and (v, u).
            row.sort_by_key(|&(v, _)| v);
            let start = col_idx.len();
            for &(v, w) in row.iter() {
                if col_idx.len() > start && *col_idx.last().unwrap() == v {
                    *values.last_mut().unwrap() += w;
                } else {
                    col_idx.push(v);
                    values.push(w);
                }
            }
            // Drop entries that summed to zero.
            let mut keep = start;
            for e in start..col_idx.len() {
                if values[e] > T::zero() {
                    col_idx[keep] = col_idx[e];
                    values[keep] = values[e];
                    keep += 1;
                }
            }
            col_idx.truncate(keep);
            values.truncate(keep);
            if keep == start {
                if !options.self_loop_isolated {
                    return Err(Error::IsolatedVertex { vertex: u });
                }
                col_idx.push(u);
                values.push(T::one());
            }
            row_ptr.push(col_idx.len());
        }
        let mut graph = Self {
            n,
            row_ptr,
            col_idx,
            values,
            degrees: Vec::new(),
        };
        graph.degrees = graph.row_sums();
        Ok(graph)
    }

    fn row_sums(&self) -> Vec<T> {
        (0..self.n)
            .map(|u| self.row_values(u).iter().copied().sum())
            .collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored entries (both directions, self-loops once).
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Number of undirected edges, self-loops included.
    pub fn num_edges(&self) -> usize {
        let loops = (0..self.n).filter(|&u| self.has_self_loop(u)).count();
        (self.nnz() - loops) / 2 + loops
    }

    /// Average number of off-diagonal row entries, `2|E| / n` for simple graphs.
    pub fn avg_degree(&self) -> f64 {
        let loops = (0..self.n).filter(|&u| self.has_self_loop(u)).count();
        (self.nnz() - loops) as f64 / self.n as f64
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn row_cols(&self, u: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[u]..self.row_ptr[u + 1]]
    }

    #[inline]
    pub fn row_values(&self, u: usize) -> &[T] {
        &self.values[self.row_ptr[u]..self.row_ptr[u + 1]]
    }

    /// `(v, w(u, v))` for every stored entry of row `u`, including a self-loop.
    #[inline]
    pub fn neighbours(&self, u: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        self.row_cols(u)
            .iter()
            .copied()
            .zip(self.row_values(u).iter().copied())
    }

    /// Number of entries in row `u`, excluding a self-loop.
    pub fn out_degree_count(&self, u: usize) -> usize {
        self.row_cols(u).len() - usize::from(self.has_self_loop(u))
    }

    /// Edge weight, zero when absent.
    #[inline]
    pub fn weight(&self, u: usize, v: usize) -> T {
        let cols = self.row_cols(u);
        match cols.binary_search(&v) {
            Ok(pos) => self.row_values(u)[pos],
            Err(_) => T::zero(),
        }
    }

    pub fn has_self_loop(&self, u: usize) -> bool {
        self.row_cols(u).binary_search(&u).is_ok()
    }

    #[inline]
    pub fn degree(&self, u: usize) -> T {
        self.degrees[u]
    }

    pub fn degrees(&self) -> &[T] {
        &self.degrees
    }

    pub fn volume(&self, set: &[usize]) -> T {
        set.iter().map(|&u| self.degrees[u]).sum()
    }

    pub fn total_volume(&self) -> T {
        self.degrees.iter().copied().sum()
    }

    /// Upper-triangle triplets `(u, v, w)` with `u <= v`, in row order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbours(u)
                .filter(move |&(v, _)| v >= u)
                .map(move |(v, w)| (u, v, w))
        })
    }

    /// Sum of `D⁻¹A` diagonal entries, `Σ_u A(u,u) / deg(u)`.
    pub fn trace_inv_degree_adjacency(&self) -> T {
        (0..self.n)
            .map(|u| self.weight(u, u) / self.degrees[u])
            .sum()
    }
}
