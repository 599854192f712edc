//! Lasserre-style local distribution families.
//!
//! Families are never solved for: they come from true distributions, explicit
//! tables, or smoothing and conditioning of other families. Locals are computed on
//! demand, so a chain like `condition(smooth(mixture))` stays exact.

mod analysis;
mod family;
mod local;

pub use analysis::{
    find_conditioning, objective, statistics, vector_solution, verify_feasible, ConditioningOutcome,
    ConditioningStep, ConsistencyViolation, FeasibilityReport, MomentMatrix, Statistics, VectorSolution,
    DEGENERATE_VAR, PSD_TOL,
};
pub use family::{condition, from_distribution, smooth, LocalDistributionFamily};
pub use local::{canonical, LocalDist};
