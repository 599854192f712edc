//! Biased product probability spaces over `{0,1}` and `{⊥,⊤}`.
//!
//! Subsets of coordinates are bitmasks in little-endian coordinate order: bit `j`
//! stands for coordinate `j` (0-based). Points of the cube use the same encoding,
//! bit `j` holding `x(j)`. On the leak alphabet a set bit means `⊤`.
//!
//! A table over the product space `Ω^R = ({0,1} × {⊥,⊤})^R` is stored as a function
//! on `2R` bits: bits `0..R` carry `x` and bits `R..2R` carry `z`. A Fourier mask
//! therefore encodes the pair `(S, T)` as `S | T << R`.

mod fourier;
mod multilinear;
mod space;

pub use fourier::{
    fourier_expand, high_degree_variance, influence, multilinear_extend, noise_apply, FourierTable,
    NoiseMode,
};
pub use multilinear::MultilinearPoly;
pub use space::{character, Alphabet, BiasedSpace, FunctionTable, TableSpace};

/// Largest coordinate count for explicit tables on the bit alphabet.
pub const MAX_CUBE_COORDS: usize = 16;
/// Largest coordinate count for explicit tables on the four-point alphabet.
pub const MAX_OMEGA_COORDS: usize = 8;
/// Comparison tolerance for Fourier identities.
pub const FOURIER_TOL: f64 = 1e-9;
