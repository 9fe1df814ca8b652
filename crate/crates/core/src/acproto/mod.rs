//! Abstract-cryptography model of distributed parameter estimation.
//!
//! A [`ComposedSystem`] wires a resource with one converter (or none) per
//! interface. Three layouts exist: honest protocol converters around the
//! concrete resource, filters around the ideal resource, and simulators
//! around the ideal resource. [`execute`] produces a [`Transcript`];
//! [`cq_output`] gives the exact classical-quantum output of one round.

mod cq;
mod run;
mod system;
mod transcript;

pub use cq::{cq_output, CqBranch, CqEnsemble};
pub use run::{execute, DishonestStrategy, FixedBits, FollowProtocol, RunInputs, StrategyContext};
pub use system::{
    build_system, ComposedSystem, ConverterKind, Dynamics, Layout, PartyPartition, ResourceKind, SystemSpec,
    DEFAULT_MAX_BRANCHES,
};
pub use transcript::{
    validate_transcript, Direction, Message, Payload, Phase, Port, QuantumRegister, Transcript, ValidationReport,
};
