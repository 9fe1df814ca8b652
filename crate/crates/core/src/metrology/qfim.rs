use nalgebra::DMatrix;

use super::encoding::{encode_raw, EncodingFamily, LocalEncoding, ParamPoint};
use crate::error::{Error, Result};
use crate::qcore::{embed_operator, hermitian_eigen, sld_solve, ComplexMatrix, DensityMatrix, C64};

/// Step of the central difference used for channel-form derivatives.
pub const FD_STEP: f64 = 1e-5;
/// Step of the central difference in [`classical_fisher`].
pub const FISHER_STEP: f64 = 1e-6;

/// Real symmetric positive semidefinite `n×n` information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QfimMatrix(DMatrix<f64>);

impl QfimMatrix {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::Shape(format!("QFIm must be square, got {}x{}", q.nrows(), q.ncols())));
        }
        if q.iter().any(|x| !x.is_finite()) {
            return Err(Error::OutOfRange("QFIm has non-finite entries".into()));
        }
        let asym = (&q - q.transpose()).amax();
        if asym > 1e-8 {
            return Err(Error::OutOfRange(format!("QFIm is not symmetric (deviation {asym:e})")));
        }
        let sym = (&q + q.transpose()) * 0.5;
        if sym.nrows() > 0 {
            let min = sym.clone().symmetric_eigenvalues().min();
            if min < -1e-8 {
                return Err(Error::NotPsd(min));
            }
        }
        Ok(Self(sym))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("QFIm rows must all have length n".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn get(&self, mu: usize, nu: usize) -> f64 {
        self.0[(mu, nu)]
    }

    /// `uᵀ Q u`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let n = self.n();
        (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| u[r] * self.0[(r, c)] * u[c]).sum()
    }
}

fn generator_embedding(rho: &DensityMatrix, h: &ComplexMatrix, mu: usize) -> ComplexMatrix {
    embed_operator(h, &[mu], rho.n_parties())
}

/// `∂ρ(θ)/∂θ_μ` for the party at position `mu` (zero-based).
///
/// Generator encodings use `−i[H′_μ, ρ(θ)]`; channel encodings need the
/// finite-difference permission and use a central difference with step [`FD_STEP`].
pub fn state_derivative(rho: &DensityMatrix, enc: &EncodingFamily, theta: &ParamPoint, mu: usize) -> Result<ComplexMatrix> {
    state_derivative_raw(rho, enc, theta.as_slice(), mu)
}

fn state_derivative_raw(rho: &DensityMatrix, enc: &EncodingFamily, theta: &[f64], mu: usize) -> Result<ComplexMatrix> {
    let local = enc
        .locals()
        .get(mu)
        .ok_or_else(|| Error::Encoding(format!("no parameter at position {mu}")))?;
    match local {
        LocalEncoding::Generator(h) => {
            let encoded = encode_raw(rho, enc, theta)?;
            let hm = generator_embedding(&encoded, h, mu);
            Ok(hm.commutator(encoded.matrix()).scale(C64::new(0.0, -1.0)).hermitian_part())
        }
        LocalEncoding::Channel(_) if enc.allows_finite_difference() => finite_difference_derivative(rho, enc, theta, mu),
        LocalEncoding::Channel(_) => Err(Error::Encoding(format!(
            "party {} uses a channel without generator and finite differences are not enabled",
            mu + 1
        ))),
    }
}

/// Central finite difference `(ρ(θ + h e_μ) − ρ(θ − h e_μ)) / 2h` with `h = FD_STEP`.
pub fn finite_difference_derivative(rho: &DensityMatrix, enc: &EncodingFamily, theta: &[f64], mu: usize) -> Result<ComplexMatrix> {
    let shifted = |s: f64| {
        let mut t = theta.to_vec();
        t[mu] += s;
        encode_raw(rho, enc, &t)
    };
    let plus = shifted(FD_STEP)?;
    let minus = shifted(-FD_STEP)?;
    Ok((plus.matrix() - minus.matrix()).scale_real(0.5 / FD_STEP).hermitian_part())
}

/// QFIm `Q_μν = ½ Tr(ρ(θ) {L_μ, L_ν})` from the SLDs of every parameter.
pub fn qfim(rho: &DensityMatrix, enc: &EncodingFamily, theta: &ParamPoint) -> Result<QfimMatrix> {
    let encoded = encode_raw(rho, enc, theta.as_slice())?;
    let n = enc.n();
    let slds = (0..n)
        .map(|mu| sld_solve(&encoded, &state_derivative_raw(rho, enc, theta.as_slice(), mu)?))
        .collect::<Result<Vec<_>>>()?;
    let weighted: Vec<ComplexMatrix> = slds.iter().map(|l| encoded.matrix() * l).collect();
    let q = DMatrix::from_fn(n, n, |mu, nu| {
        // Tr(ρ L_ν L_μ) is the conjugate of Tr(ρ L_μ L_ν), so the anticommutator keeps the real part.
        (&weighted[mu] * &slds[nu]).trace().re
    });
    QfimMatrix::new(q)
}

/// Pure-state identity `Q_μν = 4 Re(⟨H′_μ H′_ν⟩ − ⟨H′_μ⟩⟨H′_ν⟩)` evaluated on `ρ(θ)`.
pub fn qfim_pure_covariance(psi: &DensityMatrix, enc: &EncodingFamily, theta: &ParamPoint) -> Result<QfimMatrix> {
    let purity = psi.purity();
    if (purity - 1.0).abs() > 1e-9 {
        return Err(Error::NotPure(purity));
    }
    let gens = enc
        .generators()
        .ok_or_else(|| Error::Encoding("covariance formula needs a generator for every party".into()))?;
    let encoded = encode_raw(psi, enc, theta.as_slice())?;
    let eig = hermitian_eigen(encoded.matrix())?;
    let v = eig.vectors.column(encoded.dim() - 1);
    let applied: Vec<Vec<C64>> = gens
        .iter()
        .enumerate()
        .map(|(mu, h)| generator_embedding(&encoded, h, mu).apply(&v))
        .collect();
    let inner = |x: &[C64], y: &[C64]| x.iter().zip(y).map(|(a, b)| a.conj() * b).sum::<C64>();
    let mean: Vec<C64> = applied.iter().map(|hv| inner(&v, hv)).collect();
    let n = enc.n();
    // ⟨ψ|H_μ H_ν|ψ⟩ = ⟨H_μ ψ|H_ν ψ⟩ for Hermitian H_μ.
    let q = DMatrix::from_fn(n, n, |mu, nu| 4.0 * (inner(&applied[mu], &applied[nu]) - mean[mu] * mean[nu]).re);
    QfimMatrix::new(q)
}

/// Classical Fisher information `Σ_x (∂_θ p_x)² / p_x` by central differences.
pub fn classical_fisher(dist: impl Fn(f64) -> Vec<f64>, theta: f64) -> Result<f64> {
    let h = FISHER_STEP;
    let p = dist(theta);
    let plus = dist(theta + h);
    let minus = dist(theta - h);
    if plus.len() != p.len() || minus.len() != p.len() {
        return Err(Error::Shape("distribution changes length with θ".into()));
    }
    let mut total = 0.0;
    for x in 0..p.len() {
        let floor = p[x].min(plus[x]).min(minus[x]);
        if floor <= 1e-12 {
            return Err(Error::SingularPoint { theta, prob: floor });
        }
        let dp = (plus[x] - minus[x]) / (2.0 * h);
        total += dp * dp / p[x];
    }
    Ok(total)
}

/// Even-parity law `(½(1 + cos nθ̄), ½(1 − cos nθ̄))` of GHZ mean estimation.
pub fn parity_distribution(n: usize, theta_bar: f64) -> Vec<f64> {
    let c = (n as f64 * theta_bar).cos();
    vec![0.5 * (1.0 + c), 0.5 * (1.0 - c)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::random::{random_pure_state, random_unit_vector};
    use crate::qcore::{excited_projector, state_metrics_of, pauli_x, pauli_y, pauli_z, unitary_from_generator, Channel};
    use rand::SeedableRng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
    use std::sync::Arc;

    fn ones(n: usize) -> DMatrix<f64> {
        DMatrix::from_element(n, n, 1.0)
    }

    #[test]
    fn commuting_derivative_vanishes() {
        let rho = DensityMatrix::basis(&[1]).unwrap();
        let enc = EncodingFamily::phase(vec![1.0]).unwrap();
        let d = state_derivative(&rho, &enc, &ParamPoint::new(vec![0.3]).unwrap(), 0).unwrap();
        assert!(d.frobenius_norm() < 1e-15);
    }

    #[test]
    fn plus_state_derivative() {
        // −i[|1⟩⟨1|, |+⟩⟨+|] = ½[[0, i], [−i, 0]]
        let rho = DensityMatrix::plus_product(1).unwrap();
        let enc = EncodingFamily::phase(vec![1.0]).unwrap();
        let d = state_derivative(&rho, &enc, &ParamPoint::zeros(1), 0).unwrap();
        let expected = ComplexMatrix::from_rows(&[vec![C64::new(0.0, 0.0), C64::new(0.0, 0.5)], vec![C64::new(0.0, -0.5), C64::new(0.0, 0.0)]]);
        assert!(d.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let rho = random_pure_state(3, &mut rng).unwrap();
        let enc = EncodingFamily::mean(3).unwrap();
        let theta = [0.4, 1.9, 5.1];
        for mu in 0..3 {
            let exact = state_derivative(&rho, &enc, &ParamPoint::new(theta.to_vec()).unwrap(), mu).unwrap();
            let fd = finite_difference_derivative(&rho, &enc, &theta, mu).unwrap();
            assert!((&exact - &fd).frobenius_norm() <= 1e-3 * exact.frobenius_norm());
        }
    }

    #[test]
    fn channel_encoding_requires_permission() {
        let f: super::super::encoding::ChannelFn = Arc::new(|t| Channel::unitary(unitary_from_generator(&excited_projector(), t)?));
        let enc = EncodingFamily::new(vec![LocalEncoding::Channel(f)], vec![1.0], super::super::DirectionMode::Unit).unwrap();
        let rho = DensityMatrix::plus_product(1).unwrap();
        assert!(matches!(state_derivative(&rho, &enc, &ParamPoint::zeros(1), 0), Err(Error::Encoding(_))));
        let enc = enc.with_finite_difference(true);
        let q = qfim(&rho, &enc, &ParamPoint::new(vec![0.2]).unwrap()).unwrap();
        assert!((q.get(0, 0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ghz_is_all_ones() {
        for n in 2..=4 {
            let rho = DensityMatrix::ghz(n).unwrap();
            let enc = EncodingFamily::mean(n).unwrap();
            let q = qfim(&rho, &enc, &ParamPoint::zeros(n)).unwrap();
            assert!((q.matrix() - ones(n)).amax() < 1e-8, "n = {n}");
            let c = qfim_pure_covariance(&rho, &enc, &ParamPoint::zeros(n)).unwrap();
            assert!((c.matrix() - ones(n)).amax() < 1e-12);
        }
    }

    #[test]
    fn plus_product_is_identity_and_mixed_is_zero() {
        let n = 3;
        let enc = EncodingFamily::mean(n).unwrap();
        let q = qfim(&DensityMatrix::plus_product(n).unwrap(), &enc, &ParamPoint::new(vec![0.1, 0.2, 0.3]).unwrap()).unwrap();
        assert!((q.matrix() - DMatrix::identity(n, n)).amax() < 1e-8);
        let z = qfim(&DensityMatrix::maximally_mixed(n).unwrap(), &enc, &ParamPoint::zeros(n)).unwrap();
        assert!(z.matrix().amax() < 1e-12);
        let c = qfim_pure_covariance(&DensityMatrix::basis(&[0, 0, 0]).unwrap(), &enc, &ParamPoint::zeros(n)).unwrap();
        assert!(c.matrix().amax() < 1e-15);
    }

    #[test]
    fn covariance_oracle_on_random_states_and_generators() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let gens = [pauli_x(), pauli_y(), pauli_z().scale_real(0.5)];
        for n in [2, 3] {
            for trial in 0..10 {
                let psi = random_pure_state(n, &mut rng).unwrap();
                let locals = (0..n).map(|k| LocalEncoding::Generator(gens[(k + trial) % 3].clone())).collect();
                let a = random_unit_vector(n, &mut rng);
                if a.iter().any(|x| x.abs() < 1e-6) {
                    continue;
                }
                let enc = EncodingFamily::new(locals, a, super::super::DirectionMode::Unit).unwrap();
                let theta = ParamPoint::new(vec![0.7; n]).unwrap();
                let q = qfim(&psi, &enc, &theta).unwrap();
                let c = qfim_pure_covariance(&psi, &enc, &theta).unwrap();
                assert!((q.matrix() - c.matrix()).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn mixed_input_rejected_by_covariance_formula() {
        let rho = DensityMatrix::ghz(2).unwrap().depolarized(0.1).unwrap();
        let r = qfim_pure_covariance(&rho, &EncodingFamily::mean(2).unwrap(), &ParamPoint::zeros(2));
        assert!(matches!(r, Err(Error::NotPure(_))));
    }

    #[test]
    fn bures_metric_matches_quarter_qfim() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let h = 1e-3;
        for _ in 0..5 {
            let psi = random_pure_state(2, &mut rng).unwrap();
            let enc = EncodingFamily::phase(vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
            let u = random_unit_vector(2, &mut rng);
            let theta = [0.3, 1.1];
            let q = qfim(&psi, &enc, &ParamPoint::new(theta.to_vec()).unwrap()).unwrap();
            let a = encode_raw(&psi, &enc, &theta).unwrap();
            let b = encode_raw(&psi, &enc, &[theta[0] + h * u[0], theta[1] + h * u[1]]).unwrap();
            let db = state_metrics_of(a.matrix(), b.matrix()).unwrap().bures;
            let ratio = db * db / (0.25 * q.quadratic_form(&u) * h * h);
            assert!((ratio - 1.0).abs() < 1e-2, "ratio {ratio}");
        }
    }

    #[test]
    fn fisher_of_parity_law() {
        // n = 3, nθ̄ = π/2: (∂p)²/p summed over both outcomes is n² sin²/(1 − cos²) = 9.
        let f = classical_fisher(|t| parity_distribution(3, t), FRAC_PI_2 / 3.0).unwrap();
        assert!((f - 9.0).abs() < 1e-6);
        assert_eq!(classical_fisher(|_| vec![0.3, 0.7], 1.0).unwrap(), 0.0);
        let toy = |t: f64| vec![0.5 + 0.1 * t.cos(), 0.5 - 0.1 * t.cos()];
        assert!((classical_fisher(toy, FRAC_PI_2).unwrap() - 0.04).abs() < 1e-8);
        assert!(matches!(classical_fisher(|t| parity_distribution(1, t), 0.0), Err(Error::SingularPoint { .. })));
        assert!(classical_fisher(|t| parity_distribution(1, t), PI / 2.0).is_ok());
    }

    #[test]
    fn qfim_matrix_validation() {
        assert!(QfimMatrix::from_rows(&[&[1.0, 0.5], &[0.4, 1.0]]).is_err());
        assert!(matches!(QfimMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]), Err(Error::NotPsd(_))));
        assert!(QfimMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).is_ok());
    }
}
