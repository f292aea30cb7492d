//! Coreset spectral clustering for sparse graphs.
//!
//! A graph `G` with adjacency `A` and degrees `D` defines the kernel
//! `K = D⁻¹AD⁻¹ + σD⁻¹` with vertex weights `w = deg`. Weighted kernel k-means on
//! `(K, w)` has the same objective as the normalised cut of `G` (up to the constant
//! `σ(n − k)`), so a kernel k-means coreset of `G` can be turned back into a small
//! graph, clustered spectrally, and the labelling transferred to every vertex of `G`
//! by nearest kernel-space centroid.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix it to `f64`.
//!
//! ```
//! use csc_core::clustering::{csc, CscConfig};
//! use csc_core::graph::{generate_sbm, SbmParams};
//! use csc_core::metrics::ari;
//!
//! # fn main() -> csc_core::Result<()> {
//! let (g, truth) = generate_sbm::<f64>(&SbmParams::new(10, 200, 0.5, 0.001, 1))?;
//! let mut config = CscConfig::new(10, 0.5, 42);
//! config.coreset_frac = Some(0.1);
//! let report = csc(&g, &config)?;
//! assert!(ari(&report.labels, &truth)? > 0.5);
//! # Ok(())
//! # }
//! ```

pub mod clustering;
pub mod coreset;
pub mod error;
pub mod graph;
pub mod kernel;
pub mod labeling;
pub mod metrics;
pub mod scalar;
pub mod seeding;
pub mod spectral;
pub mod tree;

pub use error::{Error, Result};
pub use labeling::Labeling;
pub use scalar::Real;

/// Seedable 64-bit generator used by every randomised routine.
pub type SeedRng = rand_chacha::ChaCha8Rng;

pub type Graph = graph::SparseGraph<f64>;
pub type Kernel<'g> = kernel::GraphKernel<'g, f64>;
pub type Center = kernel::ImplicitCenter<f64>;
pub type Centroids = kernel::CentroidSet<f64>;
pub type Tree = tree::SamplingTree<f64>;
pub type Seeding = seeding::SeedingResult<f64>;
pub type Coreset = coreset::Coreset<f64>;
pub type CoresetGraph = coreset::CoresetGraph<f64>;
pub type Report = clustering::CscReport<f64>;
