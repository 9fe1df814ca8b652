use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::system::{ComposedSystem, ConverterKind, Dynamics, Layout};
use super::transcript::{Direction, Message, Payload, Phase, Port, QuantumRegister, Transcript};
use crate::error::{Error, Result};
use crate::metrology::wrap_angle;
use crate::qcore::{
    apply_channel, partial_trace, projective_measure, ComplexMatrix, DensityMatrix, MeasurementBranch, PartyLabel,
    ProjectiveMeasurement, C64,
};
use crate::seed::stream;

/// Angles supplied at open angle-taking interfaces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunInputs {
    pub angles: BTreeMap<PartyLabel, f64>,
}

impl RunInputs {
    /// Angles for parties 1..=n in order.
    pub fn from_angles(theta: &[f64]) -> Self {
        Self { angles: theta.iter().enumerate().map(|(i, &t)| (i + 1, t)).collect() }
    }

    pub(crate) fn angle(&self, party: PartyLabel) -> Result<f64> {
        let t = *self
            .angles
            .get(&party)
            .ok_or_else(|| Error::MissingInput(format!("no angle for interface {party}")))?;
        if !(0.0..TAU).contains(&t) {
            return Err(Error::OutOfRange(format!("angle {t} at interface {party} is outside [0, 2π)")));
        }
        Ok(t)
    }
}

/// What a dishonest strategy sees when it must answer one round.
pub struct StrategyContext<'a> {
    pub round: usize,
    /// Dishonest parties in label order; `register` factors follow this order.
    pub parties: &'a [PartyLabel],
    pub register: &'a DensityMatrix,
    pub dynamics: &'a Dynamics,
    /// Messages logged so far, including inner ones; strategies should restrict themselves to outer ports.
    pub observed: &'a [Message],
}

/// Behaviour of the distinguisher at the open quantum interfaces.
pub trait DishonestStrategy {
    /// One bit per dishonest party. Anything else aborts the run.
    fn respond(&mut self, ctx: &StrategyContext<'_>, rng: &mut ChaCha8Rng) -> Vec<u8>;
}

/// Dishonest parties follow the honest protocol with the given angles (default 0).
#[derive(Debug, Clone, Default)]
pub struct FollowProtocol {
    pub angles: BTreeMap<PartyLabel, f64>,
}

impl DishonestStrategy for FollowProtocol {
    fn respond(&mut self, ctx: &StrategyContext<'_>, rng: &mut ChaCha8Rng) -> Vec<u8> {
        let mut state = ctx.register.clone();
        let mut bits = Vec::with_capacity(ctx.parties.len());
        for &p in ctx.parties {
            let theta = self.angles.get(&p).copied().unwrap_or(0.0);
            let step = ctx
                .dynamics
                .local_channel(p - 1, theta)
                .and_then(|ch| apply_channel(&state, &ch, p))
                .and_then(|s| sample_measure(&s, &ctx.dynamics.measurement(), p, rng));
            match step {
                Ok((bit, post)) => {
                    bits.push(bit);
                    state = post;
                }
                Err(_) => return Vec::new(),
            }
        }
        bits
    }
}

/// Always reports the same bits.
#[derive(Debug, Clone)]
pub struct FixedBits(pub Vec<u8>);

impl DishonestStrategy for FixedBits {
    fn respond(&mut self, _ctx: &StrategyContext<'_>, _rng: &mut ChaCha8Rng) -> Vec<u8> {
        self.0.clone()
    }
}

/// Measure one qubit and sample the outcome.
pub(crate) fn sample_measure(
    state: &DensityMatrix,
    meas: &ProjectiveMeasurement,
    party: PartyLabel,
    rng: &mut ChaCha8Rng,
) -> Result<(u8, DensityMatrix)> {
    let branches = projective_measure(state, meas, &[party])?;
    let (outcome, post) = sample_branch(branches, rng)?;
    Ok((outcome as u8, post))
}

fn sample_branch(branches: Vec<MeasurementBranch>, rng: &mut ChaCha8Rng) -> Result<(usize, DensityMatrix)> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for b in branches {
        acc += b.probability;
        if let Some(post) = b.post_state {
            if u < acc {
                return Ok((b.outcome, post));
            }
            last = Some((b.outcome, post));
        }
    }
    // Round-off can leave `acc` a hair below `u`; fall back to the last live branch.
    last.ok_or_else(|| Error::InvalidMeasurement("every branch has zero probability".into()))
}

/// `(|0…0⟩ + (−1)^h e^{iφ}|1…1⟩)/√2` on `parties`.
pub(crate) fn phased_ghz(parties: &[PartyLabel], h: u8, phi: f64) -> Result<DensityMatrix> {
    let dim = 1usize << parties.len();
    let mut psi = vec![C64::new(0.0, 0.0); dim];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    psi[0] = C64::new(s, 0.0);
    let sign = if h == 0 { 1.0 } else { -1.0 };
    psi[dim - 1] += C64::from_polar(sign * s, phi);
    DensityMatrix::from_pure(&psi, parties.to_vec())
}

/// Joint measurement of `k` qubits in the dynamics' basis; outcome bits are party-ordered, MSB first.
pub(crate) fn joint_measurement(dynamics: &Dynamics, k: usize) -> Result<ProjectiveMeasurement> {
    let single = dynamics.measurement();
    let mut projectors = vec![ComplexMatrix::identity(1)];
    for _ in 0..k {
        projectors = projectors.iter().flat_map(|p| single.projectors().iter().map(move |q| p.kron(q))).collect();
    }
    ProjectiveMeasurement::new(projectors)
}

pub(crate) fn index_bits(index: usize, k: usize) -> Vec<u8> {
    (0..k).map(|i| ((index >> (k - 1 - i)) & 1) as u8).collect()
}

/// Apply the honest encodings for `(party, θ)` pairs.
pub(crate) fn encode_parties(dynamics: &Dynamics, rho: &DensityMatrix, angles: &[(PartyLabel, f64)]) -> Result<DensityMatrix> {
    let mut state = rho.clone();
    for &(p, t) in angles {
        state = apply_channel(&state, &dynamics.local_channel(p - 1, t)?, p)?;
    }
    Ok(state)
}

/// `Pr(g = 0)` for honest measurement of every party of `state`.
pub(crate) fn even_probability(dynamics: &Dynamics, state: &DensityMatrix) -> Result<f64> {
    let n = state.n_parties();
    let meas = joint_measurement(dynamics, n)?;
    let branches = projective_measure(state, &meas, state.parties())?;
    Ok(branches
        .iter()
        .filter(|b| dynamics.combine(&index_bits(b.outcome, n)) == 0)
        .map(|b| b.probability)
        .sum::<f64>()
        .clamp(0.0, 1.0))
}

/// Probability of output 0 emitted by the ◇ filters for resource value `t`.
pub(crate) fn filter_zero_probability(system: &ComposedSystem, t: f64) -> Result<f64> {
    let dynamics = system.dynamics();
    let n = system.spec().n();
    if dynamics.is_mean() {
        return Ok(0.5 * (1.0 + (n as f64 * t).cos()));
    }
    // The filter only knows f(θ): it rebuilds ρ(θ′) at θ′ = f a/‖a‖².
    let a = dynamics.encoding().a();
    let norm2: f64 = a.iter().map(|x| x * x).sum();
    let angles: Vec<(PartyLabel, f64)> = (1..=n).map(|p| (p, wrap_angle(t * a[p - 1] / norm2))).collect();
    even_probability(dynamics, &encode_parties(dynamics, system.state(), &angles)?)
}

/// Angles σ_D injects into the ideal resource to signal the bit `p`.
pub(crate) fn signal_angles(system: &ComposedSystem, dishonest: &[PartyLabel], p: u8) -> Vec<f64> {
    let k = dishonest.len() as f64;
    if p == 0 {
        return vec![0.0; dishonest.len()];
    }
    if system.dynamics().is_mean() {
        return vec![PI / k; dishonest.len()];
    }
    let a = system.dynamics().encoding().a();
    let split: Vec<f64> = dishonest.iter().map(|&mu| wrap_angle(PI / (k * a[mu - 1]))).collect();
    let f: f64 = dishonest.iter().zip(&split).map(|(&mu, x)| a[mu - 1] * x).sum();
    if f != 0.0 {
        return split;
    }
    // Wrapping cancelled the signal; a single interface always carries a non-zero value.
    let mut single = vec![0.0; dishonest.len()];
    single[0] = PI / 2.0;
    single
}

struct Runner<'a> {
    system: &'a ComposedSystem,
    t: Transcript,
}

impl Runner<'_> {
    fn log(&mut self, phase: Phase, party: PartyLabel, port: Port, direction: Direction, payload: Payload) {
        self.t.push(phase, party, port, direction, payload);
    }

    fn ask(
        &mut self,
        strategy: &mut dyn DishonestStrategy,
        rng: &mut ChaCha8Rng,
        round: usize,
        dishonest: &[PartyLabel],
        register: DensityMatrix,
    ) -> Option<Vec<u8>> {
        let bits = {
            let ctx = StrategyContext {
                round,
                parties: dishonest,
                register: &register,
                dynamics: self.system.dynamics(),
                observed: &self.t.messages,
            };
            strategy.respond(&ctx, rng)
        };
        self.t.registers.push(QuantumRegister { round, parties: dishonest.to_vec(), state: register });
        if bits.len() != dishonest.len() || bits.iter().any(|&b| b > 1) {
            self.t.abort = Some(format!("round {round}: strategy returned {bits:?} for {} interfaces", dishonest.len()));
            return None;
        }
        Some(bits)
    }
}

/// Run the composed system once. Identical system, inputs, strategy and seed give an identical transcript.
pub fn execute(system: &ComposedSystem, inputs: &RunInputs, strategy: &mut dyn DishonestStrategy, seed: u64) -> Result<Transcript> {
    let mut runner = Runner { system, t: Transcript { rounds: system.rounds(), ..Transcript::default() } };
    let mut strategy_rng = stream(seed, "strategy");
    match system.spec().layout() {
        Layout::Concrete => run_concrete(&mut runner, inputs, strategy, &mut strategy_rng, seed)?,
        Layout::Filtered => run_filtered(&mut runner, inputs, seed)?,
        Layout::Simulated => run_simulated(&mut runner, inputs, strategy, &mut strategy_rng, seed)?,
    }
    Ok(runner.t)
}

fn run_concrete(
    r: &mut Runner<'_>,
    inputs: &RunInputs,
    strategy: &mut dyn DishonestStrategy,
    strategy_rng: &mut ChaCha8Rng,
    seed: u64,
) -> Result<()> {
    let sys = r.system;
    let n = sys.spec().n();
    let honest = sys.spec().honest();
    let dishonest = sys.spec().dishonest();
    let angles: Vec<(PartyLabel, f64)> = honest.iter().map(|&p| Ok((p, inputs.angle(p)?))).collect::<Result<_>>()?;
    let mut rngs: BTreeMap<PartyLabel, ChaCha8Rng> = honest.iter().map(|&p| (p, stream(seed, &format!("converter/{p}")))).collect();
    for &(p, t) in &angles {
        r.log(Phase::Setup, p, Port::Outer, Direction::In, Payload::Angle(t));
    }
    let meas = sys.dynamics().measurement();
    let mut p_bits = Vec::with_capacity(sys.rounds());
    let encoded = encode_parties(sys.dynamics(), sys.state(), &angles)?;
    for round in 1..=sys.rounds() {
        let phase = Phase::Round(round);
        let mut state = encoded.clone();
        let mut o = vec![0u8; n];
        for &p in &honest {
            let (bit, post) = sample_measure(&state, &meas, p, rngs.get_mut(&p).expect("stream per honest party"))?;
            o[p - 1] = bit;
            state = post;
        }
        let handle = r.t.registers.len();
        for p in 1..=n {
            if dishonest.contains(&p) {
                r.log(phase, p, Port::Outer, Direction::Out, Payload::Quantum(Some(handle)));
            } else {
                r.log(phase, p, Port::Inner, Direction::Out, Payload::Quantum(None));
            }
        }
        if !dishonest.is_empty() {
            let register = partial_trace(&state, &dishonest)?;
            let Some(bits) = r.ask(strategy, strategy_rng, round, &dishonest, register) else { return Ok(()) };
            for (&p, b) in dishonest.iter().zip(bits) {
                o[p - 1] = b;
            }
        }
        for p in 1..=n {
            let port = if dishonest.contains(&p) { Port::Outer } else { Port::Inner };
            r.log(phase, p, port, Direction::In, Payload::Bit(o[p - 1]));
        }
        for p in 1..=n {
            let port = if dishonest.contains(&p) { Port::Outer } else { Port::Inner };
            r.log(phase, p, port, Direction::Out, Payload::Bits(o.clone()));
        }
        p_bits.push(sys.dynamics().combine(&o));
    }
    for &p in &honest {
        r.log(Phase::Finish, p, Port::Outer, Direction::Out, Payload::Bits(p_bits.clone()));
        r.t.outputs.insert(p, Payload::Bits(p_bits.clone()));
    }
    Ok(())
}

fn run_filtered(r: &mut Runner<'_>, inputs: &RunInputs, seed: u64) -> Result<()> {
    let sys = r.system;
    let n = sys.spec().n();
    let theta: Vec<f64> = (1..=n).map(|p| inputs.angle(p)).collect::<Result<_>>()?;
    let filtered: Vec<bool> = (1..=n).map(|p| sys.spec().converter(p) == Some(ConverterKind::FilterDiamond)).collect();
    for p in 1..=n {
        r.log(Phase::Setup, p, Port::Outer, Direction::In, Payload::Angle(theta[p - 1]));
        if filtered[p - 1] {
            r.log(Phase::Setup, p, Port::Inner, Direction::In, Payload::Angle(theta[p - 1]));
        }
    }
    let t = sys.dynamics().target(&theta);
    for p in 1..=n {
        if filtered[p - 1] {
            r.log(Phase::Setup, p, Port::Inner, Direction::Out, Payload::Real(t));
        } else {
            r.log(Phase::Setup, p, Port::Outer, Direction::Out, Payload::Real(t));
            r.t.outputs.insert(p, Payload::Real(t));
        }
    }
    if filtered.iter().any(|&f| f) {
        let p0 = filter_zero_probability(sys, t)?;
        // One shared tape: every filter emits the same bits.
        let mut rng = stream(seed, "diamond/shared");
        let f: Vec<u8> = (0..sys.rounds()).map(|_| u8::from(rng.random::<f64>() >= p0)).collect();
        for p in (1..=n).filter(|&p| filtered[p - 1]) {
            r.log(Phase::Finish, p, Port::Outer, Direction::Out, Payload::Bits(f.clone()));
            r.t.outputs.insert(p, Payload::Bits(f.clone()));
        }
    }
    Ok(())
}

fn run_simulated(
    r: &mut Runner<'_>,
    inputs: &RunInputs,
    strategy: &mut dyn DishonestStrategy,
    strategy_rng: &mut ChaCha8Rng,
    seed: u64,
) -> Result<()> {
    let sys = r.system;
    let n = sys.spec().n();
    let honest = sys.spec().honest();
    let dishonest = sys.spec().dishonest();
    let mut sim_rng = stream(seed, "sim-dishonest");
    let mut theta0 = vec![0.0; n];
    for &p in &honest {
        theta0[p - 1] = inputs.angle(p)?;
        r.log(Phase::Setup, p, Port::Outer, Direction::In, Payload::Angle(theta0[p - 1]));
    }
    for p in 1..=n {
        r.log(Phase::Setup, p, Port::Inner, Direction::In, Payload::Angle(theta0[p - 1]));
    }
    let f0 = sys.dynamics().target(&theta0);
    for p in 1..=n {
        r.log(Phase::Setup, p, Port::Inner, Direction::Out, Payload::Real(f0));
    }
    let canonical: Vec<(PartyLabel, f64)> = if sys.dynamics().is_mean() {
        Vec::new()
    } else {
        let th = sys.canonical_honest_angles(f0);
        honest.iter().map(|&p| (p, th[p - 1])).collect()
    };
    // Mean dynamics never touch the resource state; σ_D prepares its register from the formula.
    let encoded = match sys.dynamics().is_mean() {
        true => None,
        false => Some(encode_parties(sys.dynamics(), sys.state(), &canonical)?),
    };
    let meas = sys.dynamics().measurement();
    let mut p_bits = Vec::with_capacity(sys.rounds());
    for round in 1..=sys.rounds() {
        let phase = Phase::Round(round);
        let mut o = vec![0u8; n];
        let register = if let Some(start) = &encoded {
            let mut state = start.clone();
            for &p in &honest {
                let (bit, post) = sample_measure(&state, &meas, p, &mut sim_rng)?;
                o[p - 1] = bit;
                state = post;
            }
            partial_trace(&state, &dishonest)?
        } else {
            for &p in &honest {
                o[p - 1] = u8::from(sim_rng.random::<bool>());
            }
            let h = honest.iter().fold(0, |acc, &p| acc ^ o[p - 1]);
            phased_ghz(&dishonest, h, n as f64 * f0)?
        };
        let handle = r.t.registers.len();
        for &p in &dishonest {
            r.log(phase, p, Port::Outer, Direction::Out, Payload::Quantum(Some(handle)));
        }
        let Some(bits) = r.ask(strategy, strategy_rng, round, &dishonest, register) else { return Ok(()) };
        for (&p, &b) in dishonest.iter().zip(&bits) {
            o[p - 1] = b;
            r.log(phase, p, Port::Outer, Direction::In, Payload::Bit(b));
        }
        let p = sys.dynamics().combine(&o);
        let signal = signal_angles(sys, &dishonest, p);
        let mut sent = vec![0.0; n];
        for (&mu, &x) in dishonest.iter().zip(&signal) {
            sent[mu - 1] = x;
        }
        for mu in 1..=n {
            r.log(phase, mu, Port::Inner, Direction::In, Payload::Angle(sent[mu - 1]));
        }
        let ti = sys.dynamics().target(&sent);
        for mu in 1..=n {
            r.log(phase, mu, Port::Inner, Direction::Out, Payload::Real(ti));
        }
        // σ_H: p_i = 0 exactly when the resource returned 0.
        p_bits.push(u8::from(ti != 0.0));
        for &mu in &dishonest {
            r.log(phase, mu, Port::Outer, Direction::Out, Payload::Bits(o.clone()));
        }
    }
    for &p in &honest {
        r.log(Phase::Finish, p, Port::Outer, Direction::Out, Payload::Bits(p_bits.clone()));
        r.t.outputs.insert(p, Payload::Bits(p_bits.clone()));
    }
    Ok(())
}
