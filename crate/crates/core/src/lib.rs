//! Numerical engine for fibered one-dimensional discrete Schrödinger operators
//! `H_V = L₀⊗I + V` with structured, possibly non-selfadjoint, compact perturbations.

pub mod birman_schwinger;
pub mod charval;
pub mod defaults;
pub mod eig_oracle;
pub mod error;
pub mod free_resolvent;
pub mod generator;
pub mod lattice;
pub mod matrix;
pub mod scaling;
pub mod spec;

pub use error::{Error, Result};

/// Caps the worker threads used by contour evaluation and dense linear algebra.
/// Only the first call configures the global rayon pool.
pub fn configure_threads(threads: usize) {
    let threads = threads.max(1);
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    faer::set_global_parallelism(if threads == 1 { faer::Par::Seq } else { faer::Par::rayon(threads) });
}
