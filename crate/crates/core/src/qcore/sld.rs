use super::eigen::hermitian_eigen;
use super::matrix::{ComplexMatrix, C64, ZERO};
use super::state::DensityMatrix;
use super::Tolerances;
use crate::error::{Error, Result};

/// Symmetric logarithmic derivative `L` with `½(ρL + Lρ) = ∂ρ`.
///
/// Solved in ρ's eigenbasis: `L_ij = 2 (∂ρ)_ij / (λ_i + λ_j)`, with entries whose
/// denominator falls below the rank cutoff set to zero. A component of `∂ρ` in the
/// kernel×kernel block means the rank of ρ changes along the derivative and the
/// equation has no solution there.
pub fn sld_solve(rho: &DensityMatrix, drho: &ComplexMatrix) -> Result<ComplexMatrix> {
    sld_solve_with(rho, drho, &Tolerances::DEFAULT)
}

pub fn sld_solve_with(rho: &DensityMatrix, drho: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix> {
    let d = rho.dim();
    if drho.rows() != d || drho.cols() != d {
        return Err(Error::Shape(format!("derivative is {}x{}, state is {d}x{d}", drho.rows(), drho.cols())));
    }
    let herm = drho.hermitian_deviation();
    if herm > tol.sld_kernel {
        return Err(Error::NotHermitian(herm));
    }
    let tr = drho.trace().norm();
    if tr > tol.sld_kernel {
        return Err(Error::OutOfRange(format!("derivative of a density matrix must be traceless (trace {tr:e})")));
    }
    let eig = hermitian_eigen(rho.matrix())?;
    let v = &eig.vectors;
    let local = &(&v.adjoint() * drho) * v;
    let mut l = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let denom = eig.values[i] + eig.values[j];
            if denom < tol.rank_cutoff {
                let leak = local[(i, j)].norm();
                if leak > tol.sld_kernel {
                    return Err(Error::RankChange(leak));
                }
                l[(i, j)] = ZERO;
            } else {
                l[(i, j)] = local[(i, j)] * (2.0 / denom);
            }
        }
    }
    Ok((&(v * &l) * &v.adjoint()).hermitian_part())
}

/// `Tr(ρ L²)`, the quantum Fisher information for one parameter.
pub fn qfi_from_sld(rho: &DensityMatrix, l: &ComplexMatrix) -> f64 {
    let l2 = l * l;
    (rho.matrix() * &l2).trace().re
}

/// Residual `‖½(ρL + Lρ) − ∂ρ‖_F`.
pub fn sld_residual(rho: &DensityMatrix, l: &ComplexMatrix, drho: &ComplexMatrix) -> f64 {
    let anti = &(rho.matrix() * l) + &(l * rho.matrix());
    (&anti.scale(C64::new(0.5, 0.0)) - drho).frobenius_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::matrix::{excited_projector, pauli_y, I};

    #[test]
    fn maximally_mixed_qubit_gives_pauli_y() {
        // With ρ = I/2 every λ_i + λ_j = 1, so L = 2∂ρ = σ_y.
        let rho = DensityMatrix::maximally_mixed(1).unwrap();
        let drho = pauli_y().scale_real(0.5);
        let l = sld_solve(&rho, &drho).unwrap();
        assert!(l.max_abs_diff(&pauli_y()) < 1e-12);
    }

    #[test]
    fn zero_derivative() {
        let rho = DensityMatrix::ghz(2).unwrap();
        let l = sld_solve(&rho, &ComplexMatrix::zeros(4, 4)).unwrap();
        assert!(l.frobenius_norm() < 1e-15);
    }

    #[test]
    fn pure_phase_encoding_qfi_is_one() {
        // ∂ρ = −i[G, ρ] with G = |1⟩⟨1| on |+⟩; pure-state QFI = 4 var(G) = 4·¼.
        let plus = DensityMatrix::plus_product(1).unwrap();
        let g = excited_projector();
        let drho = g.commutator(plus.matrix()).scale(-I);
        let l = sld_solve(&plus, &drho).unwrap();
        assert!((qfi_from_sld(&plus, &l) - 1.0).abs() < 1e-10);
        assert!(sld_residual(&plus, &l, &drho) < 1e-10);
    }

    #[test]
    fn rank_change_detected() {
        // ρ = |0⟩⟨0| and ∂ρ with weight on |1⟩⟨1| (kernel×kernel).
        let zero = DensityMatrix::basis(&[0]).unwrap();
        let drho = ComplexMatrix::from_real_rows(&[&[-0.1, 0.0], &[0.0, 0.1]]);
        assert!(matches!(sld_solve(&zero, &drho), Err(Error::RankChange(_))));
    }

    #[test]
    fn rejects_non_hermitian_or_traceful_derivative() {
        let rho = DensityMatrix::maximally_mixed(1).unwrap();
        let bad = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(sld_solve(&rho, &bad).is_err());
        assert!(sld_solve(&rho, &ComplexMatrix::identity(2)).is_err());
    }
}
