//! Dense complex linear algebra and quantum-state engine.
//!
//! All registers are qubits. A [`DensityMatrix`] records the party owning each
//! tensor factor; party order is significant and the first party is the
//! most-significant factor of every basis index.

mod channel;
mod eigen;
pub mod io;
mod matrix;
mod measure;
mod metrics;
pub mod random;
mod sld;
mod state;

pub use channel::{apply_channel, apply_channel_on, unitary_from_generator, Channel};
pub use eigen::{general_trace_norm, hermitian_eigen, hermitian_eigen_with, trace_norm, HermitianEigen};
pub use matrix::{excited_projector, pauli_x, pauli_y, pauli_z, ComplexMatrix, C64, I, ONE, ZERO};
pub use measure::{projective_measure, MeasurementBranch, ProjectiveMeasurement, NULL_BRANCH};
pub use metrics::{helstrom_advantage, state_metrics, state_metrics_of, StateMetrics};
pub use sld::{qfi_from_sld, sld_residual, sld_solve, sld_solve_with};
pub use state::{embed_operator, partial_trace, tensor_product, DensityMatrix, PartyLabel, TensorOperand};


/// Numerical tolerances shared by every qcore operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Max `|M − M†|` entry accepted as Hermitian.
    pub hermitian: f64,
    /// Max `|Tr ρ − 1|`.
    pub trace: f64,
    /// Density matrices need min eigenvalue `≥ −psd`.
    pub psd: f64,
    /// Metric inputs are rejected below `−metric_psd`.
    pub metric_psd: f64,
    /// Eigenvalues (and SLD denominators) below this count as zero.
    pub rank_cutoff: f64,
    /// Allowed kernel×kernel leakage of a derivative in the SLD equation.
    pub sld_kernel: f64,
    /// Kraus completeness `‖Σ K†K − I‖_max`.
    pub completeness: f64,
    /// Idempotency, Hermiticity and completeness of projectors.
    pub projector: f64,
    /// Largest Hilbert-space dimension any operation may create.
    pub max_dim: usize,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian: 1e-9,
        trace: 1e-9,
        psd: 1e-10,
        metric_psd: 1e-8,
        rank_cutoff: 1e-12,
        sld_kernel: 1e-8,
        completeness: 1e-9,
        projector: 1e-9,
        max_dim: 1 << 12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
