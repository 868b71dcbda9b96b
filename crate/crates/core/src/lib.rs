//! Per-vertex change detection in dynamic networks.
//!
//! Each snapshot of a dynamic network is turned into a regularized,
//! degree-normalized representation matrix and embedded spectrally. A
//! vertex's change score compares its current embedded position with a
//! profile built by generalized Procrustes alignment of the previous `w`
//! embeddings. The crate also ships a degree-corrected stochastic block
//! model simulator, two eigenvector-centrality baselines and the evaluation
//! harness used to compare them.

// `!(x > 0.0)` is used on purpose so NaN lands on the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b): (f64, f64) = ($a, $b);
        assert!((a - b).abs() <= $tol, "{a} vs {b} (tol {})", $tol);
    }};
}

pub mod baselines;
pub mod dcsbm;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod io;
pub mod pipeline;
pub mod procrustes;
pub mod seed;
pub mod spectral;

pub use nalgebra;

pub use error::{CdpError, Result};
pub use graph::Snapshot;
pub use pipeline::{run_cdp, CdpConfig, Method, ScoreSeries};
pub use spectral::Embedding;
