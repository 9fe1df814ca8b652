use nalgebra::DMatrix;

use super::encoding::{encode_raw, EncodingFamily, ParamPoint};
use super::qfim::{qfim, state_derivative, QfimMatrix};
use crate::error::{Error, Result};
use crate::qcore::{embed_operator, trace_norm, C64};

/// Columns closer than this to the span of earlier ones are skipped by [`complete_basis`].
const DEPENDENCE_THRESHOLD: f64 = 1e-8;
const K_TOLERANCE: f64 = 1e-10;

fn check_unit(a: &[f64]) -> Result<()> {
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::OutOfRange(format!("direction must have unit norm, got {norm}")));
    }
    Ok(())
}

fn check_direction(q: &QfimMatrix, a: &[f64]) -> Result<()> {
    if a.len() != q.n() {
        return Err(Error::Shape(format!("direction has {} entries, QFIm is {}x{}", a.len(), q.n(), q.n())));
    }
    check_unit(a)?;
    if q.trace() <= 1e-12 {
        return Err(Error::NoInformation);
    }
    Ok(())
}

/// `P(Q, a) = aᵀQa / Tr Q`.
pub fn privacy_measure(q: &QfimMatrix, a: &[f64]) -> Result<f64> {
    check_direction(q, a)?;
    let p = q.quadratic_form(a) / q.trace();
    if !(-1e-10..=1.0 + 1e-10).contains(&p) {
        return Err(Error::OutOfRange(format!("privacy measure {p} outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// `√(1 − P²)`.
pub fn privacy_epsilon(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("privacy measure {p} outside [0, 1]")));
    }
    Ok((1.0 - p * p).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorEpsilonMode {
    /// `‖∂_μρ − ∂_νρ‖₁`.
    Pairwise,
    /// `‖[H′_μ − H′_ν, ρ(θ)]‖₁`; generator encodings only.
    Commutator,
}

/// Matrix of pairwise distinguishability entries of the ε-privacy condition.
pub fn generator_epsilon(
    rho: &crate::qcore::DensityMatrix,
    enc: &EncodingFamily,
    theta: &ParamPoint,
    mode: GeneratorEpsilonMode,
) -> Result<DMatrix<f64>> {
    let n = enc.n();
    let ops = match mode {
        GeneratorEpsilonMode::Pairwise => (0..n).map(|mu| state_derivative(rho, enc, theta, mu)).collect::<Result<Vec<_>>>()?,
        GeneratorEpsilonMode::Commutator => {
            let gens = enc
                .generators()
                .ok_or_else(|| Error::Encoding("commutator form needs a generator for every party".into()))?;
            let encoded = encode_raw(rho, enc, theta.as_slice())?;
            // i[H, ρ] is Hermitian and has the same trace norm as [H, ρ].
            gens.iter()
                .enumerate()
                .map(|(mu, h)| embed_operator(h, &[mu], n).commutator(encoded.matrix()).scale(C64::new(0.0, 1.0)))
                .collect()
        }
    };
    let mut out = DMatrix::zeros(n, n);
    for mu in 0..n {
        for nu in mu + 1..n {
            let v = trace_norm(&(&ops[mu] - &ops[nu]).hermitian_part())?;
            out[(mu, nu)] = v;
            out[(nu, mu)] = v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentFit {
    pub k_star: f64,
    pub eps_star: f64,
}

fn alignment_residual(q: &QfimMatrix, a: &[f64], k: f64) -> f64 {
    let n = q.n();
    let mut worst = 0.0f64;
    for mu in 0..n {
        for nu in 0..n {
            worst = worst.max((q.get(mu, nu) - k * a[mu] * a[nu]).abs());
        }
    }
    worst
}

/// Best `k` in `|Q_μν − k a_μ a_ν| ≤ ϵ` and the resulting `ϵ`.
///
/// The objective is convex and piecewise linear in `k`; ternary search on
/// `[−2 Tr Q / min a², 2 Tr Q / min a²]` down to an interval width of 1e−10.
pub fn qfim_alignment_fit(q: &QfimMatrix, a: &[f64]) -> Result<AlignmentFit> {
    check_direction(q, a)?;
    let min_a2 = a.iter().map(|x| x * x).fold(f64::INFINITY, f64::min);
    let bound = 2.0 * q.trace() / min_a2;
    let (mut lo, mut hi) = (-bound, bound);
    while hi - lo > K_TOLERANCE {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if alignment_residual(q, a, m1) <= alignment_residual(q, a, m2) {
            hi = m2;
        } else {
            lo = m1;
        }
        // The interval stops shrinking once m1 and m2 round to the endpoints.
        if m1 <= lo && m2 >= hi {
            break;
        }
    }
    let k_star = 0.5 * (lo + hi);
    Ok(AlignmentFit { k_star, eps_star: alignment_residual(q, a, k_star) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentBound {
    /// `n ϵ / Tr Q`.
    pub linear: f64,
    /// `√(1 − (1 − n ϵ / Tr Q)²)`, present when `n ϵ / Tr Q ≤ 1`.
    pub chain: Option<f64>,
}

pub fn alignment_bound(n: usize, eps_star: f64, trace_q: f64) -> Result<AlignmentBound> {
    if trace_q.is_nan() || trace_q <= 0.0 {
        return Err(Error::OutOfRange(format!("Tr Q = {trace_q} must be positive")));
    }
    let x = n as f64 * eps_star / trace_q;
    let chain = (x <= 1.0).then(|| (1.0 - (1.0 - x) * (1.0 - x)).max(0.0).sqrt());
    Ok(AlignmentBound { linear: x, chain })
}

/// Orthogonal `n×n` matrix whose first column is the unit vector `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionBasis(DMatrix<f64>);

impl DirectionBasis {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

/// Gram–Schmidt over `(a, e₁, e₂, …)`.
///
/// Candidates within 1e−8 of the span so far are skipped. Each added column is
/// signed so that its first non-negligible component is positive.
pub fn complete_basis(a: &[f64]) -> Result<DirectionBasis> {
    check_unit(a)?;
    let n = a.len();
    let mut cols: Vec<Vec<f64>> = vec![a.to_vec()];
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[e] = 1.0;
        // Two passes keep the result orthogonal to machine precision.
        for _ in 0..2 {
            for c in &cols {
                let dot: f64 = c.iter().zip(&v).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= dot * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < DEPENDENCE_THRESHOLD {
            continue;
        }
        let sign = v.iter().find(|x| x.abs() > 1e-12).map_or(1.0, |x| x.signum());
        cols.push(v.iter().map(|x| sign * x / norm).collect());
    }
    Ok(DirectionBasis(DMatrix::from_fn(n, n, |r, c| cols[c][r])))
}

/// `Bᵀ Q B`.
pub fn reparametrize_qfim(q: &QfimMatrix, b: &DMatrix<f64>) -> Result<QfimMatrix> {
    if b.nrows() != q.n() || b.ncols() != q.n() {
        return Err(Error::Shape(format!("B is {}x{}, QFIm is {}x{}", b.nrows(), b.ncols(), q.n(), q.n())));
    }
    let t = b.transpose() * q.matrix() * b;
    QfimMatrix::new((&t + t.transpose()) * 0.5)
}

/// `√(1 − (1 − ε²)^N)`.
pub fn multi_round_bound(eps: f64, rounds: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::OutOfRange(format!("ε = {eps} outside [0, 1]")));
    }
    if rounds == 0 {
        return Err(Error::OutOfRange("at least one round is required".into()));
    }
    if rounds == 1 {
        return Ok(eps);
    }
    let exponent = i32::try_from(rounds).map_err(|_| Error::OutOfRange(format!("{rounds} rounds")))?;
    Ok((1.0 - (1.0 - eps * eps).powi(exponent)).max(0.0).sqrt())
}

/// QFIm plus every privacy quantity derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyReport {
    pub qfim: QfimMatrix,
    /// Unit direction used for `P` (the mean weights renormalised in mean mode).
    pub direction: Vec<f64>,
    pub p: f64,
    pub eps_privacy: f64,
    pub eps_generator_pairwise: DMatrix<f64>,
    /// Absent for channel-form encodings.
    pub eps_generator_commutator: Option<DMatrix<f64>>,
    pub k_star: f64,
    pub eps_star: f64,
    pub alignment_bound: f64,
    pub alignment_chain: Option<f64>,
    pub trace_q: f64,
}

pub fn privacy_report(rho: &crate::qcore::DensityMatrix, enc: &EncodingFamily, theta: &ParamPoint) -> Result<PrivacyReport> {
    let q = qfim(rho, enc, theta)?;
    let a = enc.unit_direction();
    let p = privacy_measure(&q, &a)?;
    let fit = qfim_alignment_fit(&q, &a)?;
    let trace_q = q.trace();
    let alignment = alignment_bound(enc.n(), fit.eps_star, trace_q)?;
    let commutator = if enc.is_generator_form() {
        Some(generator_epsilon(rho, enc, theta, GeneratorEpsilonMode::Commutator)?)
    } else {
        None
    };
    Ok(PrivacyReport {
        eps_privacy: privacy_epsilon(p)?,
        eps_generator_pairwise: generator_epsilon(rho, enc, theta, GeneratorEpsilonMode::Pairwise)?,
        eps_generator_commutator: commutator,
        qfim: q,
        direction: a,
        p,
        k_star: fit.k_star,
        eps_star: fit.eps_star,
        alignment_bound: alignment.linear,
        alignment_chain: alignment.chain,
        trace_q,
    })
}
