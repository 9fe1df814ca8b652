//! Distinguishing-advantage experiments and bound audits.
//!
//! The prior over the two systems is uniform throughout.

mod advantage;
mod audit;
mod parity;

pub use advantage::{
    classical_advantage, classical_distance, empirical_estimate, ensemble_distance, estimate_advantage,
    estimate_advantage_with, exact_advantage, AdvantageEstimate, AdvantageMode, CiMethod, ConstantGuess,
    DistinguisherStrategy, Guess, OutputBit, ParityComparison, CONFIDENCE,
};
pub use audit::{audit, resource_pair, BoundAudit, Relation, Relations, RELATION_SLACK};
pub use parity::{
    estimator_variance, even_parity_frequency, mean_estimate, parity_sweep, sweep_angles, ParityPoint, VarianceRun,
};
