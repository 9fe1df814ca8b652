use super::eigen::hermitian_eigen_with;
use super::matrix::{ComplexMatrix, C64, ONE, ZERO};
use super::Tolerances;
use crate::error::{Error, Result};

/// Label of a party in a network; by convention parties are numbered from 1.
pub type PartyLabel = usize;

/// A density matrix over an ordered list of qubit registers, one per party.
///
/// The first entry of `parties` is the most-significant tensor factor.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    parties: Vec<PartyLabel>,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix, parties: Vec<PartyLabel>) -> Result<Self> {
        Self::with_tolerances(matrix, parties, &Tolerances::DEFAULT)
    }

    /// Validates shape, Hermiticity, unit trace and positivity.
    pub fn with_tolerances(matrix: ComplexMatrix, parties: Vec<PartyLabel>, tol: &Tolerances) -> Result<Self> {
        check_parties(&parties)?;
        let dim = 1usize.checked_shl(parties.len() as u32).unwrap_or(usize::MAX);
        if dim > tol.max_dim {
            return Err(Error::DimensionOverflow { dim, max: tol.max_dim });
        }
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::Shape(format!(
                "{}x{} matrix for {} qubit parties (expected {dim}x{dim})",
                matrix.rows(),
                matrix.cols(),
                parties.len()
            )));
        }
        let dev = matrix.hermitian_deviation();
        if dev > tol.hermitian {
            return Err(Error::NotHermitian(dev));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min = hermitian_eigen_with(&matrix, tol)?.values.first().copied().unwrap_or(0.0);
        if min < -tol.psd {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { matrix, parties })
    }

    /// For operations that preserve the invariants analytically.
    pub(crate) fn from_parts(matrix: ComplexMatrix, parties: Vec<PartyLabel>) -> Self {
        debug_assert_eq!(matrix.rows(), 1 << parties.len());
        Self { matrix, parties }
    }

    /// `|ψ⟩⟨ψ|` after normalising `psi`.
    pub fn from_pure(psi: &[C64], parties: Vec<PartyLabel>) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::OutOfRange("state vector has zero or non-finite norm".into()));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&v), parties)
    }

    /// `(|0…0⟩ + |1…1⟩)/√2` on parties `1..=n`.
    pub fn ghz(n: usize) -> Result<Self> {
        let dim = 1usize << n;
        let mut psi = vec![ZERO; dim];
        psi[0] = ONE;
        psi[dim - 1] = ONE;
        Self::from_pure(&psi, (1..=n).collect())
    }

    /// `|+⟩^{⊗n}` on parties `1..=n`.
    pub fn plus_product(n: usize) -> Result<Self> {
        let dim = 1usize << n;
        Self::from_pure(&vec![ONE; dim], (1..=n).collect())
    }

    /// Computational basis state; `bits[0]` belongs to party 1.
    pub fn basis(bits: &[u8]) -> Result<Self> {
        let n = bits.len();
        let idx = bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b & 1));
        let mut psi = vec![ZERO; 1 << n];
        psi[idx] = ONE;
        Self::from_pure(&psi, (1..=n).collect())
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        let dim = 1usize << n;
        Self::new(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64), (1..=n).collect())
    }

    /// Global depolarizing admixture `(1 − p) ρ + p I/d`.
    pub fn depolarized(&self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange(format!("depolarizing probability {p}")));
        }
        let d = self.dim();
        let mixed = ComplexMatrix::identity(d).scale_real(p / d as f64);
        Ok(Self::from_parts(&self.matrix.scale_real(1.0 - p) + &mixed, self.parties.clone()))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn parties(&self) -> &[PartyLabel] {
        &self.parties
    }

    /// Tensor-factor position of `party`.
    pub fn position(&self, party: PartyLabel) -> Result<usize> {
        self.parties.iter().position(|&p| p == party).ok_or(Error::UnknownParty(party))
    }

    pub fn positions(&self, parties: &[PartyLabel]) -> Result<Vec<usize>> {
        parties.iter().map(|&p| self.position(p)).collect()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn relabel(&self, parties: Vec<PartyLabel>) -> Result<Self> {
        if parties.len() != self.parties.len() {
            return Err(Error::Shape("relabel with a different party count".into()));
        }
        check_parties(&parties)?;
        Ok(Self { matrix: self.matrix.clone(), parties })
    }

    /// Checks the invariants again (used after numerically heavy pipelines).
    pub fn validated(self) -> Result<Self> {
        Self::new(self.matrix, self.parties)
    }
}

fn check_parties(parties: &[PartyLabel]) -> Result<()> {
    for (i, p) in parties.iter().enumerate() {
        if parties[..i].contains(p) {
            return Err(Error::DuplicateParty(*p));
        }
    }
    Ok(())
}

/// Operands accepted by [`tensor_product`].
pub trait TensorOperand: Sized {
    fn tensor(&self, other: &Self, tol: &Tolerances) -> Result<Self>;
}

impl TensorOperand for ComplexMatrix {
    fn tensor(&self, other: &Self, tol: &Tolerances) -> Result<Self> {
        let dim = self.rows().max(self.cols()).saturating_mul(other.rows().max(other.cols()));
        if dim > tol.max_dim {
            return Err(Error::DimensionOverflow { dim, max: tol.max_dim });
        }
        Ok(self.kron(other))
    }
}

impl TensorOperand for DensityMatrix {
    fn tensor(&self, other: &Self, tol: &Tolerances) -> Result<Self> {
        let dim = self.dim().saturating_mul(other.dim());
        if dim > tol.max_dim {
            return Err(Error::DimensionOverflow { dim, max: tol.max_dim });
        }
        let mut parties = self.parties.clone();
        parties.extend_from_slice(&other.parties);
        check_parties(&parties)?;
        Ok(Self::from_parts(self.matrix.kron(&other.matrix), parties))
    }
}

/// Kronecker product with `a`'s factors (and parties) first.
pub fn tensor_product<T: TensorOperand>(a: &T, b: &T) -> Result<T> {
    a.tensor(b, &Tolerances::DEFAULT)
}

/// Reduced state on `keep`, in the original relative party order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[PartyLabel]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::ScalarTrace);
    }
    let mut kept_pos = rho.positions(keep)?;
    kept_pos.sort_unstable();
    kept_pos.dedup();
    let n = rho.n_parties();
    let traced_pos: Vec<usize> = (0..n).filter(|p| !kept_pos.contains(p)).collect();
    let k = kept_pos.len();
    let t = traced_pos.len();
    let kept_dim = 1usize << k;
    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    let m = rho.matrix();
    for ki in 0..kept_dim {
        for kj in 0..kept_dim {
            let mut acc = ZERO;
            for e in 0..(1usize << t) {
                let i = compose_index(n, &kept_pos, ki, &traced_pos, e);
                let j = compose_index(n, &kept_pos, kj, &traced_pos, e);
                acc += m[(i, j)];
            }
            out[(ki, kj)] = acc;
        }
    }
    let parties = kept_pos.iter().map(|&p| rho.parties()[p]).collect();
    Ok(DensityMatrix::from_parts(out, parties))
}

/// Bit of tensor position `pos` (0 = most significant) in an `n`-qubit index.
#[inline]
pub(crate) fn bit_at(index: usize, n: usize, pos: usize) -> usize {
    (index >> (n - 1 - pos)) & 1
}

/// Sub-index of `index` restricted to `positions`, `positions[0]` most significant.
#[inline]
pub(crate) fn sub_index(index: usize, n: usize, positions: &[usize]) -> usize {
    positions.iter().fold(0, |acc, &p| (acc << 1) | bit_at(index, n, p))
}

/// Replace the bits at `positions` in `index` by those of `sub`.
#[inline]
pub(crate) fn replace_sub_index(index: usize, n: usize, positions: &[usize], sub: usize) -> usize {
    let k = positions.len();
    positions.iter().enumerate().fold(index, |acc, (j, &p)| {
        let shift = n - 1 - p;
        let bit = (sub >> (k - 1 - j)) & 1;
        (acc & !(1 << shift)) | (bit << shift)
    })
}

fn compose_index(n: usize, a_pos: &[usize], a: usize, b_pos: &[usize], b: usize) -> usize {
    let idx = replace_sub_index(0, n, a_pos, a);
    replace_sub_index(idx, n, b_pos, b)
}

/// `(op ⊗ I) · m` where `op` acts on the qubits at tensor `positions` of an `n`-qubit operator.
pub(crate) fn apply_left(op: &ComplexMatrix, positions: &[usize], n: usize, m: &ComplexMatrix) -> ComplexMatrix {
    let k = positions.len();
    assert_eq!(op.rows(), 1 << k, "local operator dimension mismatch");
    let sub_dim = 1usize << k;
    let dim = m.rows();
    let cols = m.cols();
    let mut out = ComplexMatrix::zeros(dim, cols);
    for i in 0..dim {
        let si = sub_index(i, n, positions);
        for s in 0..sub_dim {
            let a = op[(si, s)];
            if a == ZERO {
                continue;
            }
            let src = replace_sub_index(i, n, positions, s);
            for j in 0..cols {
                out[(i, j)] += a * m[(src, j)];
            }
        }
    }
    out
}

/// `(K ⊗ I) ρ (K ⊗ I)†` for Hermitian `rho`.
pub(crate) fn conjugate_local(op: &ComplexMatrix, positions: &[usize], n: usize, rho: &ComplexMatrix) -> ComplexMatrix {
    let left = apply_left(op, positions, n, rho);
    // K ρ K† = K (K ρ)†  because ρ = ρ†.
    apply_left(op, positions, n, &left.adjoint())
}

/// The full `2^n`-dimensional matrix of `op` acting on `positions`.
pub fn embed_operator(op: &ComplexMatrix, positions: &[usize], n: usize) -> ComplexMatrix {
    apply_left(op, positions, n, &ComplexMatrix::identity(1 << n))
}
