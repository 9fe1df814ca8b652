//! Random states, unitaries and channels for property checks.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::channel::Channel;
use super::matrix::{ComplexMatrix, C64};
use super::state::{DensityMatrix, PartyLabel};
use crate::error::Result;

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

/// Haar-random pure state on `n` qubits (parties `1..=n`).
pub fn random_pure_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DensityMatrix> {
    let psi: Vec<C64> = (0..1usize << n).map(|_| gaussian_c64(rng)).collect();
    DensityMatrix::from_pure(&psi, (1..=n).collect())
}

/// Full-rank random mixed state `GG†/Tr(GG†)` from a square Ginibre matrix.
pub fn random_mixed_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DensityMatrix> {
    let d = 1usize << n;
    let g = ginibre(d, d, rng);
    let gg = (&g * &g.adjoint()).hermitian_part();
    let tr = gg.trace().re;
    DensityMatrix::new(gg.scale_real(1.0 / tr), (1..=n).collect::<Vec<PartyLabel>>())
}

/// Haar-random unitary (QR of a Ginibre matrix with phase correction).
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g: DMatrix<C64> = ginibre(d, d, rng).to_nalgebra();
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for c in 0..d {
        let diag = r[(c, c)];
        let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..d {
            q[(row, c)] *= phase;
        }
    }
    ComplexMatrix::from_nalgebra(&q)
}

/// Random channel on dimension `d` with `k` Kraus operators, taken from the
/// first `d` columns of a Haar unitary on `d·k` dimensions.
pub fn random_channel<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Result<Channel> {
    let u = random_unitary(d * k, rng);
    let kraus = (0..k).map(|b| ComplexMatrix::from_fn(d, d, |r, c| u[(b * d + r, c)])).collect();
    Channel::new(kraus)
}

/// Haar-random real orthogonal matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for c in 0..n {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

/// Uniform point on the unit sphere in ℝⁿ.
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
