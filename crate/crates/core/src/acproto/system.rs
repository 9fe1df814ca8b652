use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrology::{DirectionMode, EncodingFamily};
use crate::qcore::{state_metrics, Channel, ComplexMatrix, DensityMatrix, PartyLabel, ProjectiveMeasurement, C64};

/// Resource at the centre of a composed system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ResourceKind {
    /// Receives one angle per party and returns their mean.
    IdealMean,
    /// Per round distributes a GHZ qubit to every interface, collects and broadcasts outcomes.
    ConcreteR,
    /// Receives one angle per party and returns `a·θ`.
    IdealGeneral,
    /// As [`ResourceKind::ConcreteR`] with an arbitrary initial state.
    ConcreteGeneral,
}

impl ResourceKind {
    pub fn is_ideal(self) -> bool {
        matches!(self, ResourceKind::IdealMean | ResourceKind::IdealGeneral)
    }

    pub fn is_mean(self) -> bool {
        matches!(self, ResourceKind::IdealMean | ResourceKind::ConcreteR)
    }

    pub fn id(self) -> &'static str {
        match self {
            ResourceKind::IdealMean => "IdealMean",
            ResourceKind::ConcreteR => "ConcreteR",
            ResourceKind::IdealGeneral => "IdealGeneral",
            ResourceKind::ConcreteGeneral => "ConcreteGeneral",
        }
    }
}

impl FromStr for ResourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "IdealMean" => ResourceKind::IdealMean,
            "ConcreteR" => ResourceKind::ConcreteR,
            "IdealGeneral" => ResourceKind::IdealGeneral,
            "ConcreteGeneral" => ResourceKind::ConcreteGeneral,
            other => return Err(Error::UnknownBehavior(other.to_string())),
        })
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Converter attached to one interface of the resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConverterKind {
    HonestPi,
    FilterDiamond,
    SimHonest,
    /// Monolithic simulator; every interface carrying it belongs to the same instance.
    SimDishonest,
}

impl ConverterKind {
    pub fn id(self) -> &'static str {
        match self {
            ConverterKind::HonestPi => "HonestPi",
            ConverterKind::FilterDiamond => "FilterDiamond",
            ConverterKind::SimHonest => "SimHonest",
            ConverterKind::SimDishonest => "SimDishonest",
        }
    }
}

impl FromStr for ConverterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "HonestPi" => ConverterKind::HonestPi,
            "FilterDiamond" => ConverterKind::FilterDiamond,
            "SimHonest" => ConverterKind::SimHonest,
            "SimDishonest" => ConverterKind::SimDishonest,
            other => return Err(Error::UnknownBehavior(other.to_string())),
        })
    }
}

impl fmt::Display for ConverterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Honest and dishonest parties; labels run from 1 to n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyPartition {
    n: usize,
    honest: BTreeSet<PartyLabel>,
    dishonest: BTreeSet<PartyLabel>,
}

impl PartyPartition {
    pub fn new(n: usize, dishonest: &[PartyLabel]) -> Result<Self> {
        let mut d = BTreeSet::new();
        for &p in dishonest {
            if p == 0 || p > n {
                return Err(Error::UnknownParty(p));
            }
            if !d.insert(p) {
                return Err(Error::DuplicateParty(p));
            }
        }
        let honest = (1..=n).filter(|p| !d.contains(p)).collect();
        Ok(Self { n, honest, dishonest: d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn honest(&self) -> &BTreeSet<PartyLabel> {
        &self.honest
    }

    pub fn dishonest(&self) -> &BTreeSet<PartyLabel> {
        &self.dishonest
    }
}

/// A resource plus at most one converter per interface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemSpec {
    pub resource: ResourceKind,
    /// Interfaces 1..=n; `None` leaves the resource interface open.
    pub converters: BTreeMap<PartyLabel, Option<ConverterKind>>,
}

impl SystemSpec {
    /// Build from textual behaviour ids; `"none"` leaves an interface open.
    pub fn from_ids(resource: &str, converters: &[(PartyLabel, &str)]) -> Result<Self> {
        let resource = resource.parse()?;
        let mut map = BTreeMap::new();
        for &(party, id) in converters {
            let conv = if id == "none" { None } else { Some(id.parse()?) };
            if map.insert(party, conv).is_some() {
                return Err(Error::Wiring(format!("interface {party} has more than one converter")));
            }
        }
        Ok(Self { resource, converters: map })
    }

    /// `π_H R`: honest protocol on H, dishonest interfaces open.
    pub fn concrete(resource: ResourceKind, partition: &PartyPartition) -> Self {
        let converters = (1..=partition.n())
            .map(|p| (p, (!partition.dishonest().contains(&p)).then_some(ConverterKind::HonestPi)))
            .collect();
        Self { resource, converters }
    }

    /// `σ_H S σ_D`.
    pub fn simulated(resource: ResourceKind, partition: &PartyPartition) -> Self {
        let converters = (1..=partition.n())
            .map(|p| {
                let kind = if partition.dishonest().contains(&p) { ConverterKind::SimDishonest } else { ConverterKind::SimHonest };
                (p, Some(kind))
            })
            .collect();
        Self { resource, converters }
    }

    /// `◇_H S ◇_D`.
    pub fn filtered(resource: ResourceKind, n: usize) -> Self {
        Self { resource, converters: (1..=n).map(|p| (p, Some(ConverterKind::FilterDiamond))).collect() }
    }

    pub fn n(&self) -> usize {
        self.converters.len()
    }

    pub fn converter(&self, party: PartyLabel) -> Option<ConverterKind> {
        self.converters.get(&party).copied().flatten()
    }

    /// Parties whose resource interface is open or attached to the dishonest simulator.
    pub fn dishonest(&self) -> Vec<PartyLabel> {
        self.converters
            .iter()
            .filter(|(_, c)| matches!(c, None | Some(ConverterKind::SimDishonest)))
            .map(|(&p, _)| p)
            .collect()
    }

    pub fn honest(&self) -> Vec<PartyLabel> {
        let d = self.dishonest();
        self.converters.keys().copied().filter(|p| !d.contains(p)).collect()
    }

    pub fn partition(&self) -> Result<PartyPartition> {
        PartyPartition::new(self.n(), &self.dishonest())
    }

    pub fn layout(&self) -> Layout {
        if !self.resource.is_ideal() {
            Layout::Concrete
        } else if self.converters.values().any(|c| matches!(c, Some(ConverterKind::SimHonest | ConverterKind::SimDishonest))) {
            Layout::Simulated
        } else {
            Layout::Filtered
        }
    }

    fn check(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::Wiring("a system needs at least one interface".into()));
        }
        if self.converters.keys().copied().ne(1..=n) {
            return Err(Error::Wiring(format!("interfaces must be labelled 1..={n}")));
        }
        let kinds: Vec<Option<ConverterKind>> = self.converters.values().copied().collect();
        match self.layout() {
            Layout::Concrete => {
                if let Some(bad) = kinds.iter().flatten().find(|k| **k != ConverterKind::HonestPi) {
                    return Err(Error::Wiring(format!("{bad} cannot attach to the concrete resource {}", self.resource)));
                }
            }
            Layout::Filtered => {}
            Layout::Simulated => {
                if kinds.iter().any(|k| !matches!(k, Some(ConverterKind::SimHonest | ConverterKind::SimDishonest))) {
                    return Err(Error::Wiring("simulators must cover every interface of the ideal resource".into()));
                }
                if !kinds.contains(&Some(ConverterKind::SimDishonest)) {
                    return Err(Error::Wiring("simulated systems need at least one dishonest interface".into()));
                }
            }
        }
        Ok(())
    }
}

/// The three wirings the runtime supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Concrete resource with `π` or open interfaces.
    Concrete,
    /// Ideal resource with filters or open interfaces.
    Filtered,
    /// Ideal resource with `σ_H` and `σ_D`.
    Simulated,
}

/// Local operations of honest parties: encoding, measurement and `g`.
#[derive(Debug, Clone)]
pub struct Dynamics {
    mean: bool,
    enc: EncodingFamily,
}

impl Dynamics {
    pub fn n(&self) -> usize {
        self.enc.n()
    }

    pub fn is_mean(&self) -> bool {
        self.mean
    }

    pub fn encoding(&self) -> &EncodingFamily {
        &self.enc
    }

    /// Mean estimation applies `Û(θ) = |0⟩⟨0| + e^{iθ}|1⟩⟨1|`; the general case uses `Λ_μ(θ)`.
    pub fn local_channel(&self, pos: usize, theta: f64) -> Result<Channel> {
        if self.mean {
            let u = ComplexMatrix::diagonal(&[C64::new(1.0, 0.0), C64::from_polar(1.0, theta)]);
            Channel::unitary(u)
        } else {
            self.enc.locals()[pos].channel_at(theta)
        }
    }

    pub fn measurement(&self) -> ProjectiveMeasurement {
        self.enc.basis().measurement()
    }

    pub fn combine(&self, bits: &[u8]) -> u8 {
        self.enc.combiner().combine(bits)
    }

    /// Value returned by the ideal resource: the mean in mean mode, `a·θ` otherwise.
    pub fn target(&self, theta: &[f64]) -> f64 {
        self.enc.target(theta)
    }
}

/// A validated, runnable wiring.
#[derive(Debug, Clone)]
pub struct ComposedSystem {
    pub(crate) spec: SystemSpec,
    pub(crate) dynamics: Dynamics,
    pub(crate) rho: DensityMatrix,
    pub(crate) rounds: usize,
    pub(crate) seed: u64,
    pub(crate) max_branches: usize,
}

pub const DEFAULT_MAX_BRANCHES: usize = 1 << 16;

pub fn build_system(spec: SystemSpec, enc: &EncodingFamily, rho: &DensityMatrix, rounds: usize, seed: u64) -> Result<ComposedSystem> {
    spec.check()?;
    let n = spec.n();
    if enc.n() != n || rho.n_parties() != n {
        return Err(Error::Wiring(format!(
            "system has {n} interfaces, encoding {} parties and state {} parties",
            enc.n(),
            rho.n_parties()
        )));
    }
    if rounds == 0 {
        return Err(Error::Wiring("at least one round is required".into()));
    }
    let mean = spec.resource.is_mean();
    if mean {
        if enc.mode() != DirectionMode::Mean {
            return Err(Error::Wiring(format!("{} needs a mean-mode encoding", spec.resource)));
        }
        let ghz = DensityMatrix::ghz(n)?;
        if state_metrics(rho, &ghz)?.trace_distance > 1e-9 {
            return Err(Error::Wiring(format!("{} distributes the GHZ state", spec.resource)));
        }
    }
    // Resource ports are addressed by party label 1..=n in state order.
    let rho = rho.relabel((1..=n).collect())?;
    Ok(ComposedSystem { spec, dynamics: Dynamics { mean, enc: enc.clone() }, rho, rounds, seed, max_branches: DEFAULT_MAX_BRANCHES })
}

impl ComposedSystem {
    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_branches(mut self, max: usize) -> Self {
        self.max_branches = max;
        self
    }

    /// Parties that provide an angle at an open interface.
    pub fn angle_inputs(&self) -> Vec<PartyLabel> {
        match self.spec.layout() {
            Layout::Concrete => self.spec.honest(),
            Layout::Filtered => (1..=self.spec.n()).collect(),
            Layout::Simulated => self.spec.honest(),
        }
    }

    /// Parties whose open interface exchanges qubits and bits with the distinguisher.
    pub fn quantum_interfaces(&self) -> Vec<PartyLabel> {
        match self.spec.layout() {
            Layout::Concrete | Layout::Simulated => self.spec.dishonest(),
            Layout::Filtered => Vec::new(),
        }
    }

    /// Angles chosen by `σ_D` for the honest parties: `θ_μ = f₀ a_μ / ‖a_H‖²`, wrapped.
    pub(crate) fn canonical_honest_angles(&self, f0: f64) -> Vec<f64> {
        let a = self.dynamics.enc.a();
        let honest = self.spec.honest();
        let norm2: f64 = honest.iter().map(|&p| a[p - 1] * a[p - 1]).sum();
        let mut theta = vec![0.0; self.spec.n()];
        for &p in &honest {
            theta[p - 1] = crate::metrology::wrap_angle(f0 * a[p - 1] / norm2);
        }
        theta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn behaviour_ids() {
        assert_eq!("ConcreteR".parse::<ResourceKind>().unwrap(), ResourceKind::ConcreteR);
        assert!(matches!("Bogus".parse::<ConverterKind>(), Err(Error::UnknownBehavior(_))));
        assert!(SystemSpec::from_ids("IdealMean", &[(1, "Mystery")]).is_err());
        assert!(SystemSpec::from_ids("IdealMean", &[(1, "SimHonest"), (1, "SimDishonest")]).is_err());
    }

    #[test]
    fn wiring_checks() {
        let enc = EncodingFamily::mean(3).unwrap();
        let ghz = DensityMatrix::ghz(3).unwrap();
        let all_honest = PartyPartition::new(3, &[]).unwrap();
        let sys = build_system(SystemSpec::concrete(ResourceKind::ConcreteR, &all_honest), &enc, &ghz, 1, 0).unwrap();
        assert_eq!(sys.angle_inputs(), vec![1, 2, 3]);
        let one_bad = PartyPartition::new(3, &[3]).unwrap();
        let sim = build_system(SystemSpec::simulated(ResourceKind::IdealMean, &one_bad), &enc, &ghz, 1, 0).unwrap();
        assert_eq!(sim.angle_inputs(), vec![1, 2]);
        assert_eq!(sim.quantum_interfaces(), vec![3]);
        let mixed = SystemSpec::from_ids("ConcreteR", &[(1, "SimHonest"), (2, "HonestPi"), (3, "none")]).unwrap();
        assert!(matches!(build_system(mixed, &enc, &ghz, 1, 0), Err(Error::Wiring(_))));
        let no_d = SystemSpec::simulated(ResourceKind::IdealMean, &all_honest);
        assert!(build_system(no_d, &enc, &ghz, 1, 0).is_err());
        let plus = DensityMatrix::plus_product(3).unwrap();
        assert!(build_system(SystemSpec::filtered(ResourceKind::IdealMean, 3), &enc, &plus, 1, 0).is_err());
        assert!(PartyPartition::new(3, &[4]).is_err());
    }
}
