use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use super::system::{ComposedSystem, ConverterKind, Layout};
use crate::error::Result;
use crate::qcore::io::save_matrix;
use crate::qcore::{DensityMatrix, PartyLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Setup,
    /// Rounds are numbered from 1.
    Round(usize),
    Finish,
}

/// Outer ports face the distinguisher; inner ports connect a converter to the resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Port {
    Outer,
    Inner,
}

/// `In` travels towards the resource, `Out` away from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Angle(f64),
    Bit(u8),
    Bits(Vec<u8>),
    Real(f64),
    /// Index into [`Transcript::registers`]; `None` for qubits that never leave a converter.
    Quantum(Option<usize>),
}

impl Payload {
    pub fn type_name(&self) -> &'static str {
        match self {
            Payload::Angle(_) => "angle",
            Payload::Bit(_) => "bit",
            Payload::Bits(_) => "bits",
            Payload::Real(_) => "real",
            Payload::Quantum(_) => "quantum",
        }
    }

    fn render(&self) -> String {
        match self {
            Payload::Angle(x) | Payload::Real(x) => format!("{x:.16e}"),
            Payload::Bit(b) => b.to_string(),
            Payload::Bits(bits) => bits.iter().map(|b| b.to_string()).collect(),
            Payload::Quantum(Some(h)) => format!("register-{h}.txt"),
            Payload::Quantum(None) => "internal".into(),
        }
    }

    fn in_domain(&self) -> bool {
        match self {
            Payload::Angle(x) => (0.0..TAU).contains(x),
            Payload::Bit(b) => *b <= 1,
            Payload::Bits(bits) => bits.iter().all(|b| *b <= 1),
            Payload::Real(x) => x.is_finite(),
            Payload::Quantum(_) => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub phase: Phase,
    pub party: PartyLabel,
    pub port: Port,
    pub direction: Direction,
    pub payload: Payload,
}

/// Joint state handed to the open dishonest interfaces in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumRegister {
    pub round: usize,
    pub parties: Vec<PartyLabel>,
    pub state: DensityMatrix,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transcript {
    pub rounds: usize,
    pub messages: Vec<Message>,
    pub registers: Vec<QuantumRegister>,
    /// Final payload at each outer interface that produces one.
    pub outputs: BTreeMap<PartyLabel, Payload>,
    pub abort: Option<String>,
}

impl Transcript {
    pub(crate) fn push(&mut self, phase: Phase, party: PartyLabel, port: Port, direction: Direction, payload: Payload) {
        self.messages.push(Message { phase, party, port, direction, payload });
    }

    /// Bits output at `party`'s outer interface, if any.
    pub fn output_bits(&self, party: PartyLabel) -> Option<&[u8]> {
        match self.outputs.get(&party) {
            Some(Payload::Bits(b)) => Some(b),
            _ => None,
        }
    }

    /// Messages visible to the distinguisher (outer ports only).
    pub fn observable(&self) -> impl Iterator<Item = &Message> {
        self.messages.iter().filter(|m| m.port == Port::Outer)
    }

    /// One line per message: `round,interface,direction,payload_type,payload`.
    pub fn to_records(&self) -> String {
        let mut out = String::from("round,interface,direction,payload_type,payload\n");
        for m in &self.messages {
            let round = match m.phase {
                Phase::Setup => "setup".to_string(),
                Phase::Round(i) => i.to_string(),
                Phase::Finish => "finish".to_string(),
            };
            let port = match m.port {
                Port::Outer => "outer",
                Port::Inner => "inner",
            };
            let dir = match m.direction {
                Direction::In => "in",
                Direction::Out => "out",
            };
            let _ = writeln!(out, "{round},P{}.{port},{dir},{},{}", m.party, m.payload.type_name(), m.payload.render());
        }
        if let Some(reason) = &self.abort {
            let _ = writeln!(out, "abort,,,text,{}", reason.replace([',', '\n'], " "));
        }
        out
    }

    /// Write `transcript.csv` and one matrix file per quantum register into `dir`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("transcript.csv"), self.to_records())?;
        for (h, reg) in self.registers.iter().enumerate() {
            save_matrix(&dir.join(format!("register-{h}.txt")), reg.state.matrix())?;
        }
        Ok(())
    }
}

/// Problems found by [`validate_transcript`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

type Shape = (Phase, Port, Direction, &'static str);

/// Per-interface message sequence prescribed by the behaviour automata.
fn expected_shapes(system: &ComposedSystem, party: PartyLabel) -> Vec<Shape> {
    use Direction::{In, Out};
    use Port::{Inner, Outer};
    let rounds = system.rounds();
    let mut v: Vec<Shape> = Vec::new();
    let conv = system.spec().converter(party);
    match (system.spec().layout(), conv) {
        (Layout::Concrete, Some(_)) => {
            v.push((Phase::Setup, Outer, In, "angle"));
            for i in 1..=rounds {
                let r = Phase::Round(i);
                v.extend([(r, Inner, Out, "quantum"), (r, Inner, In, "bit"), (r, Inner, Out, "bits")]);
            }
            v.push((Phase::Finish, Outer, Out, "bits"));
        }
        (Layout::Concrete, None) => {
            for i in 1..=rounds {
                let r = Phase::Round(i);
                v.extend([(r, Outer, Out, "quantum"), (r, Outer, In, "bit"), (r, Outer, Out, "bits")]);
            }
        }
        (Layout::Filtered, Some(_)) => {
            v.extend([(Phase::Setup, Outer, In, "angle"), (Phase::Setup, Inner, In, "angle"), (Phase::Setup, Inner, Out, "real")]);
            v.push((Phase::Finish, Outer, Out, "bits"));
        }
        (Layout::Filtered, None) => {
            v.extend([(Phase::Setup, Outer, In, "angle"), (Phase::Setup, Outer, Out, "real")]);
        }
        (Layout::Simulated, Some(ConverterKind::SimHonest)) => {
            v.extend([(Phase::Setup, Outer, In, "angle"), (Phase::Setup, Inner, In, "angle"), (Phase::Setup, Inner, Out, "real")]);
            for i in 1..=rounds {
                v.extend([(Phase::Round(i), Inner, In, "angle"), (Phase::Round(i), Inner, Out, "real")]);
            }
            v.push((Phase::Finish, Outer, Out, "bits"));
        }
        (Layout::Simulated, _) => {
            v.extend([(Phase::Setup, Inner, In, "angle"), (Phase::Setup, Inner, Out, "real")]);
            for i in 1..=rounds {
                let r = Phase::Round(i);
                v.extend([
                    (r, Outer, Out, "quantum"),
                    (r, Outer, In, "bit"),
                    (r, Inner, In, "angle"),
                    (r, Inner, Out, "real"),
                    (r, Outer, Out, "bits"),
                ]);
            }
        }
    }
    v
}

/// Check message order and count per behaviour, payload domains, and `p_i = g(o_i)`.
pub fn validate_transcript(t: &Transcript, system: &ComposedSystem) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = system.spec().n();
    for party in 1..=n {
        let expected = expected_shapes(system, party);
        let actual: Vec<Shape> = t
            .messages
            .iter()
            .filter(|m| m.party == party)
            .map(|m| (m.phase, m.port, m.direction, m.payload.type_name()))
            .collect();
        if t.abort.is_some() {
            // An aborted run must still be a prefix of the automaton.
            if actual.len() > expected.len() || actual[..] != expected[..actual.len()] {
                report.violations.push(format!("interface {party}: aborted run deviates from the automaton"));
            }
            continue;
        }
        if actual.len() != expected.len() {
            report
                .violations
                .push(format!("interface {party}: {} messages, automaton prescribes {}", actual.len(), expected.len()));
        }
        if let Some(k) = actual.iter().zip(&expected).position(|(a, e)| a != e) {
            report.violations.push(format!(
                "interface {party}: message {k} is {:?}, automaton prescribes {:?}",
                actual[k], expected[k]
            ));
        }
    }
    for (k, m) in t.messages.iter().enumerate() {
        if !m.payload.in_domain() {
            report.violations.push(format!("message {k} carries an out-of-domain {}", m.payload.type_name()));
        }
        if let (Phase::Round(i), Payload::Bits(b)) = (m.phase, &m.payload) {
            if b.len() != n {
                report.violations.push(format!("round {i}: broadcast to interface {} has {} bits", m.party, b.len()));
            }
        }
    }
    if t.abort.is_none() && system.spec().layout() != Layout::Filtered {
        check_parity_consistency(t, system, &mut report);
    }
    report
}

fn check_parity_consistency(t: &Transcript, system: &ComposedSystem, report: &mut ValidationReport) {
    let mut broadcasts: BTreeMap<usize, &[u8]> = BTreeMap::new();
    for m in &t.messages {
        if let (Phase::Round(i), Direction::Out, Payload::Bits(b)) = (m.phase, m.direction, &m.payload) {
            match broadcasts.get(&i) {
                Some(prev) if *prev != &b[..] => {
                    report.violations.push(format!("round {i}: interfaces received different outcome broadcasts"))
                }
                _ => {
                    broadcasts.insert(i, b);
                }
            }
        }
    }
    for (&party, out) in &t.outputs {
        let Payload::Bits(p) = out else { continue };
        if p.len() != t.rounds {
            report.violations.push(format!("interface {party}: output has {} bits for {} rounds", p.len(), t.rounds));
            continue;
        }
        for (i, &bit) in p.iter().enumerate() {
            // Rounds with no visible broadcast cannot be cross-checked.
            if let Some(o) = broadcasts.get(&(i + 1)) {
                if o.len() == system.spec().n() && system.dynamics().combine(o) != bit {
                    report.violations.push(format!("round {}: interface {party} output {bit} is not g of the outcomes", i + 1));
                }
            }
        }
    }
}
