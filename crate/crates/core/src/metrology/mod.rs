//! Quantum Fisher information, quasi-privacy measures and the bounds built on them.
//!
//! Parameters are indexed by the position of the owning party in the state, starting at 0.

mod encoding;
mod privacy;
mod qfim;
mod search;

pub use encoding::{
    encode_raw, encode_state, encode_subset, wrap_angle, ChannelFn, Combiner, DirectionMode, EncodingFamily,
    LocalEncoding, MeasurementBasis, ParamPoint,
};
pub use privacy::{
    privacy_epsilon, complete_basis, generator_epsilon, multi_round_bound, privacy_measure, privacy_report,
    qfim_alignment_fit, reparametrize_qfim, alignment_bound, AlignmentFit, DirectionBasis, GeneratorEpsilonMode, PrivacyReport,
    AlignmentBound,
};
pub use qfim::{
    classical_fisher, finite_difference_derivative, parity_distribution, qfim, qfim_pure_covariance, state_derivative,
    QfimMatrix, FD_STEP, FISHER_STEP,
};
pub use search::{equivalent_class_distance, EquivalenceSearch, SearchBudget};
