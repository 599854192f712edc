//! The small-set-expansion gadget reduction at desk scale.

pub mod averaging;
pub mod completeness;
pub mod decoding;
pub mod decoupling;
pub mod graph;
pub mod longcode;
pub mod mixing;
pub mod params;
pub mod sampler;

pub use averaging::{
    arithmetization_rhs, averaged_function, coupled_coordinate_law, coupled_product_expectation, omega_noise,
    AveragingMode,
};
pub use completeness::{acceptance_estimate, acceptance_run, DEFAULT_ETA_SLACK};
pub use decoding::{dictator_table, influence_decode_stat, DecodeReport};
pub use decoupling::{decoupling_check, random_smooth_table, DecouplingConfig, DecouplingMode, DecouplingReport};
pub use graph::{expansion, generate_sse, noisy_walk, Expansion, GraphKind, SseGraph};
pub use longcode::{
    analytic_bias, dictator_assignment, permutation_respect_check, Dictator, IStarRule, LongCodeAssignment,
    PermutationCheck,
};
pub use mixing::{mixing_check, mu_a};
pub use params::{ManualParams, ParamMode, ReductionParams, SAMPLING_CAP};
pub use sampler::{
    apply_perm, leakage_apply, permute_bits, permute_slice, random_perm, sample_test_tuple, LiftedVertex,
    ReductionContext, TestSample,
};
