use super::eigen::hermitian_eigen;
use super::matrix::ComplexMatrix;
use super::state::DensityMatrix;
use super::Tolerances;
use crate::error::{Error, Result};

/// Distance and overlap measures between two states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateMetrics {
    /// Fidelity `(Tr √(√ρ σ √ρ))²`.
    pub fidelity: f64,
    /// Trace distance `½‖ρ − σ‖₁`.
    pub trace_distance: f64,
    /// Bures distance `√(2(1 − √F))`.
    pub bures: f64,
}

pub fn state_metrics(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<StateMetrics> {
    state_metrics_of(rho.matrix(), sigma.matrix())
}

/// [`state_metrics`] on bare matrices (e.g. unnormalised branch blocks already scaled).
pub fn state_metrics_of(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<StateMetrics> {
    if rho.rows() != sigma.rows() || rho.cols() != sigma.cols() {
        return Err(Error::Shape(format!("metrics between {}- and {}-dimensional states", rho.rows(), sigma.rows())));
    }
    let fidelity = fidelity_of(rho, sigma)?;
    let trace_distance = trace_distance_of(rho, sigma)?;
    let bures = (2.0 * (1.0 - fidelity.sqrt())).max(0.0).sqrt();
    Ok(StateMetrics { fidelity, trace_distance, bures })
}

fn checked_eigen(m: &ComplexMatrix) -> Result<super::eigen::HermitianEigen> {
    let eig = hermitian_eigen(m)?;
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min < -Tolerances::DEFAULT.metric_psd {
        return Err(Error::NotPsd(min));
    }
    Ok(eig)
}

/// `λ ⟨v|σ|v⟩` when `m = λ|v⟩⟨v|` has rank one.
fn rank_one_overlap(eig: &super::eigen::HermitianEigen, other: &ComplexMatrix) -> Option<f64> {
    let cut = Tolerances::DEFAULT.rank_cutoff;
    let d = eig.values.len();
    if d == 0 || eig.values[..d - 1].iter().any(|&x| x >= cut) {
        return None;
    }
    let v = eig.vectors.column(d - 1);
    let sv = other.apply(&v);
    let overlap: f64 = v.iter().zip(&sv).map(|(a, b)| (a.conj() * b).re).sum();
    Some(eig.values[d - 1] * overlap)
}

fn fidelity_of(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    let cut = Tolerances::DEFAULT.rank_cutoff;
    let rho_eig = checked_eigen(rho)?;
    let sigma_eig = checked_eigen(sigma)?;
    // Pure inputs avoid square roots of round-off eigenvalues, which would otherwise
    // add O(1e−8) to the fidelity and swamp small Bures distances.
    if let Some(f) = rank_one_overlap(&rho_eig, sigma).or_else(|| rank_one_overlap(&sigma_eig, rho)) {
        return Ok(f.clamp(0.0, 1.0));
    }
    let sqrt_rho = rho_eig.map_values(|x| if x < cut { 0.0 } else { x.sqrt() });
    let inner = (&(&sqrt_rho * sigma) * &sqrt_rho).hermitian_part();
    let eig = hermitian_eigen(&inner)?;
    let root_sum: f64 = eig.values.iter().map(|&x| if x < cut { 0.0 } else { x.sqrt() }).sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

fn trace_distance_of(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    let diff = (rho - sigma).hermitian_part();
    let eig = hermitian_eigen(&diff)?;
    Ok(0.5 * eig.values.iter().map(|x| x.abs()).sum::<f64>())
}

/// Optimal advantage for distinguishing `rho` from `sigma` at uniform prior.
///
/// By the Holevo–Helstrom theorem this equals the trace distance.
pub fn helstrom_advantage(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(state_metrics(rho, sigma)?.trace_distance)
}
