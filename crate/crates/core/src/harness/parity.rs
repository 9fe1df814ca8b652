use std::f64::consts::PI;

use rayon::prelude::*;

use crate::acproto::{build_system, execute, ComposedSystem, FollowProtocol, PartyPartition, ResourceKind, RunInputs, SystemSpec};
use crate::error::{Error, Result};
use crate::metrology::EncodingFamily;
use crate::qcore::DensityMatrix;
use crate::seed::derive_seed;

/// One point of an honest-run parity sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParityPoint {
    pub theta_bar: f64,
    /// Fraction of rounds with even parity.
    pub empirical: f64,
    /// `½(1 + cos nθ̄)`.
    pub predicted: f64,
    /// Binomial standard deviation of `empirical` at `predicted`.
    pub sd: f64,
}

impl ParityPoint {
    /// Deviation in units of `sd`; infinite when `sd` vanishes and the values differ.
    pub fn z_score(&self) -> f64 {
        let diff = (self.empirical - self.predicted).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.sd
        }
    }
}

/// `θ̄_k = (2k + 1)π / (8n)` for `k < points`.
pub fn sweep_angles(n: usize, points: usize) -> Vec<f64> {
    (0..points).map(|k| (2 * k + 1) as f64 * PI / (8.0 * n as f64)).collect()
}

fn honest_ghz(n: usize, rounds: usize) -> Result<ComposedSystem> {
    let part = PartyPartition::new(n, &[])?;
    build_system(
        SystemSpec::concrete(ResourceKind::ConcreteR, &part),
        &EncodingFamily::mean(n)?,
        &DensityMatrix::ghz(n)?,
        rounds,
        0,
    )
}

/// Fraction of even-parity rounds for an all-honest GHZ run with every angle equal to `theta_bar`.
pub fn even_parity_frequency(n: usize, rounds: usize, theta_bar: f64, seed: u64) -> Result<f64> {
    run_frequency(&honest_ghz(n, rounds)?, n, theta_bar, seed)
}

fn run_frequency(sys: &ComposedSystem, n: usize, theta_bar: f64, seed: u64) -> Result<f64> {
    let t = execute(sys, &RunInputs::from_angles(&vec![theta_bar; n]), &mut FollowProtocol::default(), seed)?;
    let bits = t.output_bits(1).ok_or_else(|| Error::Wiring("honest run produced no output".into()))?;
    Ok(bits.iter().filter(|&&b| b == 0).count() as f64 / bits.len() as f64)
}

/// Honest parity frequency at each [`sweep_angles`] point. Point `k` uses seed label `parity/{k}`.
pub fn parity_sweep(n: usize, rounds: usize, points: usize, seed: u64) -> Result<Vec<ParityPoint>> {
    let sys = honest_ghz(n, rounds)?;
    sweep_angles(n, points)
        .into_par_iter()
        .enumerate()
        .map(|(k, theta_bar)| {
            let empirical = run_frequency(&sys, n, theta_bar, derive_seed(seed, &format!("parity/{k}")))?;
            let predicted = 0.5 * (1.0 + (n as f64 * theta_bar).cos());
            let sd = (predicted * (1.0 - predicted) / rounds as f64).sqrt();
            Ok(ParityPoint { theta_bar, empirical, predicted, sd })
        })
        .collect()
}

/// `θ̂ = arccos(2p̂ − 1) / n` from an even-parity frequency.
pub fn mean_estimate(n: usize, even_frequency: f64) -> f64 {
    (2.0 * even_frequency - 1.0).clamp(-1.0, 1.0).acos() / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceRun {
    pub estimates: Vec<f64>,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// `1 / (n² N)`.
    pub predicted: f64,
}

/// Repeat an honest `rounds`-round run and estimate `θ̄` each time.
pub fn estimator_variance(n: usize, rounds: usize, theta_bar: f64, repetitions: usize, seed: u64) -> Result<VarianceRun> {
    if repetitions < 2 {
        return Err(Error::OutOfRange("a variance needs at least two repetitions".into()));
    }
    let sys = honest_ghz(n, rounds)?;
    let estimates: Vec<f64> = (0..repetitions)
        .into_par_iter()
        .map(|r| Ok(mean_estimate(n, run_frequency(&sys, n, theta_bar, derive_seed(seed, &format!("variance/{r}")))?)))
        .collect::<Result<_>>()?;
    let m = repetitions as f64;
    let mean = estimates.iter().sum::<f64>() / m;
    let variance = estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(VarianceRun { estimates, mean, variance, predicted: 1.0 / ((n * n) as f64 * rounds as f64) })
}
