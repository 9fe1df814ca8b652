use nalgebra::SymmetricEigen;

use super::matrix::{ComplexMatrix, C64};
use super::Tolerances;
use crate::error::{Error, Result};

/// Eigendecomposition `M = V diag(values) V†` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_values(|x| x)
    }

    /// `V f(Λ) V†`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let d = self.values.len();
        let v = &self.vectors;
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        ComplexMatrix::from_fn(d, d, |r, c| {
            (0..d).map(|k| v[(r, k)] * fv[k] * v[(c, k)].conj()).sum::<C64>()
        })
    }
}

pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<HermitianEigen> {
    hermitian_eigen_with(m, &Tolerances::DEFAULT)
}

pub fn hermitian_eigen_with(m: &ComplexMatrix, tol: &Tolerances) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::Shape(format!("eigendecomposition of a {}x{} matrix", m.rows(), m.cols())));
    }
    let dev = m.hermitian_deviation();
    if dev > tol.hermitian {
        return Err(Error::NotHermitian(dev));
    }
    let d = m.rows();
    if d == 0 {
        return Ok(HermitianEigen { values: Vec::new(), vectors: ComplexMatrix::zeros(0, 0) });
    }
    let eig = SymmetricEigen::try_new(m.hermitian_part().to_nalgebra(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("symmetric eigen iteration did not converge".into()))?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

/// Trace norm `‖M‖₁` of a Hermitian matrix: the sum of absolute eigenvalues.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigen(m)?.values.iter().map(|x| x.abs()).sum())
}

/// Trace norm of an arbitrary square matrix, `Tr √(M†M)`.
///
/// Needed for non-Hermitian operators such as `[H, ρ]`, which is anti-Hermitian.
pub fn general_trace_norm(m: &ComplexMatrix) -> Result<f64> {
    let gram = &m.adjoint() * m;
    Ok(hermitian_eigen(&gram)?.values.iter().map(|&x| x.max(0.0).sqrt()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::matrix::{pauli_x, pauli_z};

    #[test]
    fn pauli_z_spectrum() {
        let e = hermitian_eigen(&pauli_z()).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);
    }

    #[test]
    fn pauli_x_vectors_are_minus_then_plus() {
        let e = hermitian_eigen(&pauli_x()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // |−⟩ and |+⟩ up to a global phase: |⟨v|±⟩| = 1.
        let minus = e.vectors.column(0);
        let plus = e.vectors.column(1);
        assert!(((minus[0] * s - minus[1] * s).norm() - 1.0).abs() < 1e-12);
        assert!(((plus[0] * s + plus[1] * s).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_four() {
        let e = hermitian_eigen(&ComplexMatrix::identity(4)).unwrap();
        for v in e.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(hermitian_eigen(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn reconstructs_random_hermitian() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for d in 1..=8 {
            let a = ComplexMatrix::from_fn(d, d, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let h = a.hermitian_part();
            let e = hermitian_eigen(&h).unwrap();
            assert!((&e.reconstruct() - &h).frobenius_norm() < 1e-8);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            let gram = &e.vectors.adjoint() * &e.vectors;
            assert!(gram.max_abs_diff(&ComplexMatrix::identity(d)) < 1e-10);
        }
    }
}
