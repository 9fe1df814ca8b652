use super::matrix::{ComplexMatrix, C64};
use super::state::{conjugate_local, DensityMatrix, PartyLabel};
use super::Tolerances;
use crate::error::{Error, Result};

/// A CPTP map in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    kraus: Vec<ComplexMatrix>,
}

impl Channel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tolerances(kraus, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(kraus: Vec<ComplexMatrix>, tol: &Tolerances) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::Shape("channel without Kraus operators".into()))?;
        let (r, c) = (first.rows(), first.cols());
        if r != c || kraus.iter().any(|k| k.rows() != r || k.cols() != c) {
            return Err(Error::Shape("Kraus operators must be square and share a shape".into()));
        }
        let mut sum = ComplexMatrix::zeros(c, c);
        for k in &kraus {
            sum = &sum + &(&k.adjoint() * k);
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(c));
        if dev > tol.completeness {
            return Err(Error::Completeness(dev));
        }
        Ok(Self { kraus })
    }

    pub fn identity(dim: usize) -> Self {
        Self { kraus: vec![ComplexMatrix::identity(dim)] }
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// `ρ ↦ (1 − p) ρ + p I/2` on one qubit.
    pub fn depolarizing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange(format!("depolarizing probability {p}")));
        }
        let paulis = [super::matrix::pauli_x(), super::matrix::pauli_y(), super::matrix::pauli_z()];
        let mut kraus = vec![ComplexMatrix::identity(2).scale_real((1.0 - 0.75 * p).sqrt())];
        kraus.extend(paulis.iter().map(|s| s.scale_real((p / 4.0).sqrt())));
        Self::new(kraus)
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].rows()
    }

    /// Action on a bare operator (no party bookkeeping).
    pub fn apply_matrix(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
        for k in &self.kraus {
            out = &out + &(&(k * m) * &k.adjoint());
        }
        out
    }
}

/// `Σ_K (I⊗K⊗I) ρ (I⊗K⊗I)†` with `K` acting on `target`'s qubit.
pub fn apply_channel(rho: &DensityMatrix, ch: &Channel, target: PartyLabel) -> Result<DensityMatrix> {
    apply_channel_on(rho, ch, &[target])
}

/// As [`apply_channel`] for a channel acting jointly on several parties.
pub fn apply_channel_on(rho: &DensityMatrix, ch: &Channel, targets: &[PartyLabel]) -> Result<DensityMatrix> {
    let positions = rho.positions(targets)?;
    if ch.dim() != 1 << positions.len() {
        return Err(Error::Shape(format!(
            "channel of dimension {} applied to {} qubit(s)",
            ch.dim(),
            positions.len()
        )));
    }
    let n = rho.n_parties();
    let mut out = ComplexMatrix::zeros(rho.dim(), rho.dim());
    for k in ch.kraus() {
        out = &out + &conjugate_local(k, &positions, n, rho.matrix());
    }
    Ok(DensityMatrix::from_parts(out, rho.parties().to_vec()))
}

/// `exp(−iθH)` for a Hermitian `H`.
pub fn unitary_from_generator(generator: &ComplexMatrix, theta: f64) -> Result<ComplexMatrix> {
    let eig = super::eigen::hermitian_eigen(generator)?;
    let d = eig.values.len();
    let v = &eig.vectors;
    let phases: Vec<C64> = eig.values.iter().map(|&l| C64::from_polar(1.0, -theta * l)).collect();
    Ok(ComplexMatrix::from_fn(d, d, |r, c| (0..d).map(|k| v[(r, k)] * phases[k] * v[(c, k)].conj()).sum()))
}
