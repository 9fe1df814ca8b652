use super::matrix::ComplexMatrix;
use super::state::{apply_left, DensityMatrix, PartyLabel};
use super::Tolerances;
use crate::error::{Error, Result};

/// A complete set of orthogonal projectors indexed by outcome label.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveMeasurement {
    projectors: Vec<ComplexMatrix>,
}

impl ProjectiveMeasurement {
    pub fn new(projectors: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tolerances(projectors, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(projectors: Vec<ComplexMatrix>, tol: &Tolerances) -> Result<Self> {
        let first = projectors.first().ok_or_else(|| Error::InvalidMeasurement("no projectors".into()))?;
        let d = first.rows();
        let mut sum = ComplexMatrix::zeros(d, d);
        for (label, p) in projectors.iter().enumerate() {
            if p.rows() != d || p.cols() != d {
                return Err(Error::InvalidMeasurement(format!("projector {label} has the wrong shape")));
            }
            let herm = p.hermitian_deviation();
            let idem = (p * p).max_abs_diff(p);
            if herm > tol.projector || idem > tol.projector {
                return Err(Error::InvalidMeasurement(format!(
                    "projector {label} is not an orthogonal projector (hermiticity {herm:e}, idempotency {idem:e})"
                )));
            }
            sum = &sum + p;
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(d));
        if dev > tol.projector {
            return Err(Error::InvalidMeasurement(format!("projectors do not sum to identity ({dev:e})")));
        }
        Ok(Self { projectors })
    }

    /// Computational basis on `k` qubits; outcome label = basis index.
    pub fn computational(k: usize) -> Self {
        let d = 1usize << k;
        let projectors = (0..d)
            .map(|i| {
                let mut p = ComplexMatrix::zeros(d, d);
                p[(i, i)] = super::matrix::ONE;
                p
            })
            .collect();
        Self { projectors }
    }

    /// Single-qubit X basis: outcome 0 is `|+⟩`, outcome 1 is `|−⟩`.
    pub fn x_basis() -> Self {
        let plus = ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let minus = ComplexMatrix::from_real_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]);
        Self { projectors: vec![plus, minus] }
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].rows()
    }

    pub fn outcomes(&self) -> usize {
        self.projectors.len()
    }
}

/// One outcome of a projective measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBranch {
    pub outcome: usize,
    pub probability: f64,
    /// Renormalised post-measurement state; `None` for zero-probability branches.
    pub post_state: Option<DensityMatrix>,
}

impl MeasurementBranch {
    pub fn is_null(&self) -> bool {
        self.post_state.is_none()
    }
}

/// Probabilities below this are reported as null branches.
pub const NULL_BRANCH: f64 = 1e-14;

/// Measure the qubits of `parties` (projector factor order follows `parties`).
///
/// The post-state keeps every party; measured registers are left in the
/// projected state.
pub fn projective_measure(
    rho: &DensityMatrix,
    meas: &ProjectiveMeasurement,
    parties: &[PartyLabel],
) -> Result<Vec<MeasurementBranch>> {
    let positions = rho.positions(parties)?;
    if meas.dim() != 1 << positions.len() {
        return Err(Error::Shape(format!(
            "measurement of dimension {} on {} qubit(s)",
            meas.dim(),
            positions.len()
        )));
    }
    let n = rho.n_parties();
    let mut branches = Vec::with_capacity(meas.outcomes());
    for (outcome, proj) in meas.projectors().iter().enumerate() {
        let left = apply_left(proj, &positions, n, rho.matrix());
        let projected = apply_left(proj, &positions, n, &left.adjoint());
        let probability = projected.trace().re.max(0.0);
        let post_state = (probability > NULL_BRANCH).then(|| {
            DensityMatrix::from_parts(projected.scale_real(1.0 / probability), rho.parties().to_vec())
        });
        branches.push(MeasurementBranch { outcome, probability, post_state });
    }
    Ok(branches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::state::partial_trace;

    #[test]
    fn x_measurement_on_ghz2() {
        // Explicit computation: ⟨±|₁ GHZ₂ = (|0⟩ ± |1⟩)/2, so each outcome has p = ½
        // and leaves qubit 2 in |±⟩.
        let ghz = DensityMatrix::ghz(2).unwrap();
        let branches = projective_measure(&ghz, &ProjectiveMeasurement::x_basis(), &[1]).unwrap();
        assert_eq!(branches.len(), 2);
        for b in &branches {
            assert!((b.probability - 0.5).abs() < 1e-14);
            let post = b.post_state.as_ref().unwrap();
            assert!((post.purity() - 1.0).abs() < 1e-12);
            let q2 = partial_trace(post, &[2]).unwrap();
            let sign = if b.outcome == 0 { 0.5 } else { -0.5 };
            let expected = ComplexMatrix::from_real_rows(&[&[0.5, sign], &[sign, 0.5]]);
            assert!(q2.matrix().max_abs_diff(&expected) < 1e-14);
        }
    }

    #[test]
    fn deterministic_outcome_and_null_branch() {
        let zero = DensityMatrix::basis(&[0]).unwrap();
        let branches = projective_measure(&zero, &ProjectiveMeasurement::computational(1), &[1]).unwrap();
        assert!((branches[0].probability - 1.0).abs() < 1e-15);
        assert!(branches[1].is_null());
    }

    #[test]
    fn maximally_mixed_is_uniform() {
        let mm = DensityMatrix::maximally_mixed(1).unwrap();
        let branches = projective_measure(&mm, &ProjectiveMeasurement::computational(1), &[1]).unwrap();
        assert!((branches[0].probability - 0.5).abs() < 1e-15);
        assert!((branches[1].probability - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_projectors_rejected() {
        let not_proj = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(ProjectiveMeasurement::new(vec![not_proj.clone(), not_proj]).is_err());
        let p0 = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(ProjectiveMeasurement::new(vec![p0]).is_err());
        assert!(ProjectiveMeasurement::new(ProjectiveMeasurement::x_basis().projectors().to_vec()).is_ok());
    }
}
