use std::collections::BTreeSet;

use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::acproto::{
    cq_output, execute, ComposedSystem, CqEnsemble, DishonestStrategy, FollowProtocol, Message, Payload, Phase, Port,
    RunInputs,
};
use crate::error::{Error, Result};
use crate::qcore::trace_norm;
use crate::seed::derive_seed;

/// Two-sided confidence level of every interval.
pub const CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvantageMode {
    Exact,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CiMethod {
    #[default]
    Hoeffding,
    ClopperPearson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvantageEstimate {
    pub d_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Zero for exact results.
    pub trials: usize,
    pub mode: AdvantageMode,
}

impl AdvantageEstimate {
    pub fn exact(d: f64) -> Self {
        let d = d.clamp(0.0, 1.0);
        Self { d_hat: d, ci_low: d, ci_high: d, trials: 0, mode: AdvantageMode::Exact }
    }

    pub fn contains(&self, d: f64) -> bool {
        self.ci_low <= d && d <= self.ci_high
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Guess {
    A,
    B,
}

/// Distinguisher for Monte-Carlo experiments.
pub trait DistinguisherStrategy: Sync {
    /// Angles fed to every open angle interface.
    fn inputs(&self, system: &ComposedSystem) -> RunInputs;

    /// Fresh behaviour at the open quantum interfaces for one trial; follows the protocol by default.
    fn dishonest(&self) -> Box<dyn DishonestStrategy> {
        Box::new(FollowProtocol::default())
    }

    /// Decide from the outer-port messages alone.
    fn guess(&self, observed: &[&Message]) -> Guess;
}

/// `½ Σ_x ‖p_A(x) ρ_A|x − p_B(x) ρ_B|x‖₁`; a label missing from one side has weight zero there.
pub fn ensemble_distance(a: &CqEnsemble, b: &CqEnsemble) -> Result<f64> {
    let labels: BTreeSet<&String> = a.branches.keys().chain(b.branches.keys()).collect();
    let mut total = 0.0;
    for label in labels {
        let weighted = |e: &CqEnsemble| e.branches.get(label).map(|br| br.state.scale_real(br.probability));
        total += match (weighted(a), weighted(b)) {
            (Some(x), Some(y)) => {
                if x.rows() != y.rows() {
                    return Err(Error::Shape(format!("branch {label}: {}x{0} vs {}x{1}", x.rows(), y.rows())));
                }
                trace_norm(&(&x - &y))?
            }
            (Some(x), None) | (None, Some(x)) => x.trace().re,
            (None, None) => 0.0,
        };
    }
    Ok((0.5 * total).clamp(0.0, 1.0))
}

/// Total-variation distance of the branch labels, ignoring the quantum registers.
pub fn classical_distance(a: &CqEnsemble, b: &CqEnsemble) -> f64 {
    let labels: BTreeSet<&String> = a.branches.keys().chain(b.branches.keys()).collect();
    let prob = |e: &CqEnsemble, l: &String| e.branches.get(l).map_or(0.0, |br| br.probability);
    0.5 * labels.into_iter().map(|l| (prob(a, l) - prob(b, l)).abs()).sum::<f64>()
}

/// Optimal one-round advantage between two systems with the same inputs.
pub fn exact_advantage(sys_a: &ComposedSystem, sys_b: &ComposedSystem, inputs: &RunInputs) -> Result<AdvantageEstimate> {
    check_single_round(sys_a)?;
    check_single_round(sys_b)?;
    let ea = cq_output(sys_a, inputs, 1)?;
    let eb = cq_output(sys_b, inputs, 1)?;
    Ok(AdvantageEstimate::exact(ensemble_distance(&ea, &eb)?))
}

/// As [`exact_advantage`] for a distinguisher that discards the quantum registers.
pub fn classical_advantage(sys_a: &ComposedSystem, sys_b: &ComposedSystem, inputs: &RunInputs) -> Result<AdvantageEstimate> {
    check_single_round(sys_a)?;
    check_single_round(sys_b)?;
    let ea = cq_output(sys_a, inputs, 1)?;
    let eb = cq_output(sys_b, inputs, 1)?;
    Ok(AdvantageEstimate::exact(classical_distance(&ea, &eb)))
}

fn check_single_round(sys: &ComposedSystem) -> Result<()> {
    if sys.rounds() != 1 {
        return Err(Error::OutOfRange(format!("exact advantage needs N = 1, system has N = {}", sys.rounds())));
    }
    Ok(())
}

pub fn estimate_advantage(
    sys_a: &ComposedSystem,
    sys_b: &ComposedSystem,
    strategy: &dyn DistinguisherStrategy,
    trials: usize,
    seed: u64,
) -> Result<AdvantageEstimate> {
    estimate_advantage_with(sys_a, sys_b, strategy, trials, seed, CiMethod::Hoeffding)
}

/// Trials `0..T/2` run system A, the rest system B; each trial has its own derived seed.
pub fn estimate_advantage_with(
    sys_a: &ComposedSystem,
    sys_b: &ComposedSystem,
    strategy: &dyn DistinguisherStrategy,
    trials: usize,
    seed: u64,
    method: CiMethod,
) -> Result<AdvantageEstimate> {
    if trials < 100 {
        return Err(Error::OutOfRange(format!("{trials} trials; at least 100 are required")));
    }
    let inputs_a = strategy.inputs(sys_a);
    let inputs_b = strategy.inputs(sys_b);
    let half = trials / 2;
    let outcomes: Vec<Result<bool>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let (sys, inputs, truth) = if i < half { (sys_a, &inputs_a, Guess::A) } else { (sys_b, &inputs_b, Guess::B) };
            let mut adversary = strategy.dishonest();
            let t = execute(sys, inputs, adversary.as_mut(), derive_seed(seed, &format!("trial/{i}")))?;
            if t.abort.is_some() {
                return Ok(false);
            }
            let observed: Vec<&Message> = t.observable().collect();
            Ok(strategy.guess(&observed) == truth)
        })
        .collect();
    let mut correct = 0usize;
    for o in outcomes {
        correct += usize::from(o?);
    }
    Ok(empirical_estimate(correct, trials, method))
}

/// Advantage estimate from `correct` successes in `trials` guesses at uniform prior.
pub fn empirical_estimate(correct: usize, trials: usize, method: CiMethod) -> AdvantageEstimate {
    let t = trials as f64;
    let p_hat = correct as f64 / t;
    let (p_low, p_high) = match method {
        CiMethod::Hoeffding => {
            let w = ((2.0 / (1.0 - CONFIDENCE)).ln() / (2.0 * t)).sqrt();
            (p_hat - w, p_hat + w)
        }
        CiMethod::ClopperPearson => clopper_pearson(correct, trials),
    };
    let clip = |x: f64| x.clamp(0.0, 1.0);
    AdvantageEstimate {
        d_hat: clip(2.0 * p_hat - 1.0),
        ci_low: clip(2.0 * p_low - 1.0),
        ci_high: clip(2.0 * p_high - 1.0),
        trials,
        mode: AdvantageMode::Empirical,
    }
}

fn clopper_pearson(k: usize, n: usize) -> (f64, f64) {
    let alpha = 1.0 - CONFIDENCE;
    let (k, nf) = (k as f64, n as f64);
    let low = if k == 0.0 { 0.0 } else { beta_quantile(k, nf - k + 1.0, alpha / 2.0) };
    let high = if k == nf { 1.0 } else { beta_quantile(k + 1.0, nf - k, 1.0 - alpha / 2.0) };
    (low, high)
}

fn beta_quantile(a: f64, b: f64, q: f64) -> f64 {
    Beta::new(a, b).map(|d| d.inverse_cdf(q)).unwrap_or(f64::NAN)
}

/// Final output bits visible at `party`'s outer interface.
fn finish_bits<'a>(observed: &[&'a Message], party: usize) -> Option<&'a [u8]> {
    observed.iter().find_map(|m| match (&m.phase, m.party, &m.payload) {
        (Phase::Finish, p, Payload::Bits(b)) if p == party && m.port == Port::Outer => Some(&b[..]),
        _ => None,
    })
}

/// Always the same guess.
#[derive(Debug, Clone)]
pub struct ConstantGuess {
    pub inputs: RunInputs,
    pub guess: Guess,
}

impl DistinguisherStrategy for ConstantGuess {
    fn inputs(&self, _system: &ComposedSystem) -> RunInputs {
        self.inputs.clone()
    }

    fn guess(&self, _observed: &[&Message]) -> Guess {
        self.guess
    }
}

/// Guess `A` when the first output bit at `party` is 0.
#[derive(Debug, Clone)]
pub struct OutputBit {
    pub inputs: RunInputs,
    pub party: usize,
}

impl DistinguisherStrategy for OutputBit {
    fn inputs(&self, _system: &ComposedSystem) -> RunInputs {
        self.inputs.clone()
    }

    fn guess(&self, observed: &[&Message]) -> Guess {
        match finish_bits(observed, self.party).and_then(|b| b.first()) {
            Some(0) => Guess::A,
            _ => Guess::B,
        }
    }
}

/// Dishonest parties measure honestly; guess `A` when every honest output bit equals the
/// parity of the broadcast outcomes of its round.
#[derive(Debug, Clone)]
pub struct ParityComparison {
    pub inputs: RunInputs,
    pub honest_party: usize,
}

impl DistinguisherStrategy for ParityComparison {
    fn inputs(&self, _system: &ComposedSystem) -> RunInputs {
        self.inputs.clone()
    }

    fn guess(&self, observed: &[&Message]) -> Guess {
        let Some(p) = finish_bits(observed, self.honest_party) else { return Guess::B };
        let consistent = p.iter().enumerate().all(|(i, &bit)| {
            observed.iter().any(|m| match (&m.phase, &m.payload) {
                (Phase::Round(r), Payload::Bits(o)) if *r == i + 1 => o.iter().fold(0, |acc, b| acc ^ b) == bit,
                _ => false,
            })
        });
        if consistent {
            Guess::A
        } else {
            Guess::B
        }
    }
}
