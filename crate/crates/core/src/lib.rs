//! Desk-scale machinery for μ-constrained Boolean Max-CSPs.
//!
//! The crate is split along the pipeline:
//!
//! - [`probspace`]: biased product spaces, Fourier expansion, influences, noise operators.
//! - [`csp`]: predicates, weighted constraint hypergraphs, brute-force constrained optima.
//! - [`pseudodist`]: Lasserre-style local distribution families, smoothing, conditioning,
//!   moment matrices and the degree-2 vector solution.
//! - [`gaussian`]: correlated Gaussians, r-ary halfspace stability, Borell checks, Hermite basis.
//! - [`rounding`]: the Gaussian-projection rounding scheme and its empirical checks.
//! - [`reduction`]: the SSE gadget reduction, dictator assignments, mixing/decoupling/decoding checks.
//! - [`harness`]: seeded RNG streams, Monte Carlo runs, exact oracles, reports, file formats, pipeline.

pub mod csp;
pub mod error;
pub mod gaussian;
pub mod harness;
pub mod probspace;
pub mod pseudodist;
pub mod reduction;
pub mod rounding;

pub use crate::csp::{Assignment, ConstraintHypergraph, Edge, OptResult, Predicate};
pub use crate::error::{Error, Result};
pub use crate::harness::report::{CheckReport, Verdict};
pub use crate::probspace::{
    Alphabet, BiasedSpace, FourierTable, FunctionTable, MultilinearPoly, NoiseMode, TableSpace,
};
pub use crate::pseudodist::{LocalDist, LocalDistributionFamily, MomentMatrix, VectorSolution};
pub use crate::reduction::{ReductionParams, SseGraph};
