use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::qcore::{
    apply_channel_on, excited_projector, unitary_from_generator, Channel, ComplexMatrix, DensityMatrix,
    ProjectiveMeasurement, C64,
};
use crate::textconf::{parse_f64_list, Document};

/// Channel-valued function `θ ↦ Λ(θ)` for encodings without a generator.
pub type ChannelFn = Arc<dyn Fn(f64) -> Result<Channel> + Send + Sync>;

/// How one party imprints its parameter on its qubit.
#[derive(Clone)]
pub enum LocalEncoding {
    /// Conjugation by `exp(−iθH′)` for a Hermitian 2×2 generator `H′`.
    Generator(ComplexMatrix),
    /// An arbitrary channel family; derivatives fall back to finite differences.
    Channel(ChannelFn),
}

impl fmt::Debug for LocalEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalEncoding::Generator(h) => f.debug_tuple("Generator").field(h).finish(),
            LocalEncoding::Channel(_) => f.write_str("Channel(<fn>)"),
        }
    }
}

impl LocalEncoding {
    pub fn channel_at(&self, theta: f64) -> Result<Channel> {
        match self {
            LocalEncoding::Generator(h) => Channel::unitary(unitary_from_generator(h, theta)?),
            LocalEncoding::Channel(f) => f(theta),
        }
    }

    pub fn generator(&self) -> Option<&ComplexMatrix> {
        match self {
            LocalEncoding::Generator(h) => Some(h),
            LocalEncoding::Channel(_) => None,
        }
    }
}

/// Whether the target direction is a unit vector or the mean weights `(1/n, …, 1/n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionMode {
    Unit,
    Mean,
}

/// Local measurement performed by honest parties.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementBasis {
    Computational,
    /// Outcome 0 is `|+⟩`.
    X,
}

impl MeasurementBasis {
    pub fn measurement(self) -> ProjectiveMeasurement {
        match self {
            MeasurementBasis::Computational => ProjectiveMeasurement::computational(1),
            MeasurementBasis::X => ProjectiveMeasurement::x_basis(),
        }
    }
}

/// Outcome-combination function `g` over the n measurement bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Combiner {
    /// XOR of all bits.
    Parity,
    /// Truth table indexed by the bits with party 1 most significant.
    Table(Vec<u8>),
}

impl Combiner {
    pub fn combine(&self, bits: &[u8]) -> u8 {
        match self {
            Combiner::Parity => bits.iter().fold(0, |acc, b| acc ^ (b & 1)),
            Combiner::Table(t) => t[bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b & 1))],
        }
    }

    /// `g` must read every party's bit.
    fn check(&self, n: usize) -> Result<()> {
        let Combiner::Table(t) = self else { return Ok(()) };
        if t.len() != 1 << n {
            return Err(Error::Encoding(format!("combiner table has {} rows, expected {}", t.len(), 1 << n)));
        }
        if t.iter().any(|&b| b > 1) {
            return Err(Error::Encoding("combiner table entries must be bits".into()));
        }
        for party in 0..n {
            let flip = 1 << (n - 1 - party);
            if (0..t.len()).all(|x| t[x] == t[x ^ flip]) {
                return Err(Error::Encoding(format!("combiner ignores the bit of party {}", party + 1)));
            }
        }
        Ok(())
    }
}

/// Per-party encodings, the target direction `a`, the honest measurement and `g`.
#[derive(Debug, Clone)]
pub struct EncodingFamily {
    locals: Vec<LocalEncoding>,
    a: Vec<f64>,
    mode: DirectionMode,
    basis: MeasurementBasis,
    combiner: Combiner,
    finite_difference: bool,
}

impl EncodingFamily {
    pub fn new(locals: Vec<LocalEncoding>, a: Vec<f64>, mode: DirectionMode) -> Result<Self> {
        let enc = Self {
            locals,
            a,
            mode,
            basis: MeasurementBasis::Computational,
            combiner: Combiner::Parity,
            finite_difference: false,
        };
        enc.check()?;
        Ok(enc)
    }

    /// GHZ mean estimation: generators `|1⟩⟨1|`, `a = (1/n, …, 1/n)`, X-basis parity.
    pub fn mean(n: usize) -> Result<Self> {
        let locals = vec![LocalEncoding::Generator(excited_projector()); n];
        Ok(Self::new(locals, vec![1.0 / n as f64; n], DirectionMode::Mean)?.with_basis(MeasurementBasis::X))
    }

    /// Phase generators `|1⟩⟨1|` on every party with a unit target direction.
    pub fn phase(a: Vec<f64>) -> Result<Self> {
        let locals = vec![LocalEncoding::Generator(excited_projector()); a.len()];
        Self::new(locals, a, DirectionMode::Unit)
    }

    pub fn with_basis(mut self, basis: MeasurementBasis) -> Self {
        self.basis = basis;
        self
    }

    pub fn with_combiner(mut self, combiner: Combiner) -> Result<Self> {
        combiner.check(self.n())?;
        self.combiner = combiner;
        Ok(self)
    }

    /// Permit finite-difference derivatives for channel-form encodings.
    pub fn with_finite_difference(mut self, allow: bool) -> Self {
        self.finite_difference = allow;
        self
    }

    fn check(&self) -> Result<()> {
        let n = self.locals.len();
        if n == 0 {
            return Err(Error::Encoding("no parties".into()));
        }
        if self.a.len() != n {
            return Err(Error::Encoding(format!("a has {} entries for {n} parties", self.a.len())));
        }
        if self.a.iter().any(|&x| x == 0.0 || !x.is_finite()) {
            return Err(Error::Encoding("every entry of a must be finite and non-zero".into()));
        }
        match self.mode {
            DirectionMode::Unit => {
                let norm = self.a.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-12 {
                    return Err(Error::Encoding(format!("a must be a unit vector (norm {norm})")));
                }
            }
            DirectionMode::Mean => {
                let w = 1.0 / n as f64;
                if self.a.iter().any(|x| (x - w).abs() > 1e-12) {
                    return Err(Error::Encoding(format!("mean mode requires a = (1/{n}, …, 1/{n})")));
                }
            }
        }
        for (mu, local) in self.locals.iter().enumerate() {
            match local {
                LocalEncoding::Generator(h) => {
                    if h.rows() != 2 || h.cols() != 2 {
                        return Err(Error::Encoding(format!("generator of party {} is not 2x2", mu + 1)));
                    }
                    if h.hermitian_deviation() > 1e-9 {
                        return Err(Error::Encoding(format!("generator of party {} is not Hermitian", mu + 1)));
                    }
                }
                LocalEncoding::Channel(f) => {
                    let ch = f(0.0)?;
                    if ch.dim() != 2 {
                        return Err(Error::Encoding(format!("channel of party {} is not a qubit channel", mu + 1)));
                    }
                    for r in 0..2 {
                        for c in 0..2 {
                            let mut unit = ComplexMatrix::zeros(2, 2);
                            unit[(r, c)] = C64::new(1.0, 0.0);
                            if ch.apply_matrix(&unit).max_abs_diff(&unit) > 1e-9 {
                                return Err(Error::Encoding(format!(
                                    "channel of party {} is not the identity at θ = 0",
                                    mu + 1
                                )));
                            }
                        }
                    }
                }
            }
        }
        self.combiner.check(n)
    }

    pub fn n(&self) -> usize {
        self.locals.len()
    }

    pub fn locals(&self) -> &[LocalEncoding] {
        &self.locals
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn mode(&self) -> DirectionMode {
        self.mode
    }

    pub fn basis(&self) -> MeasurementBasis {
        self.basis
    }

    pub fn combiner(&self) -> &Combiner {
        &self.combiner
    }

    pub fn allows_finite_difference(&self) -> bool {
        self.finite_difference
    }

    /// `a / ‖a‖`.
    pub fn unit_direction(&self) -> Vec<f64> {
        let norm = self.a.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.a.iter().map(|x| x / norm).collect()
    }

    /// `f(θ) = a·θ`.
    pub fn target(&self, theta: &[f64]) -> f64 {
        self.a.iter().zip(theta).map(|(a, t)| a * t).sum()
    }

    pub fn is_generator_form(&self) -> bool {
        self.locals.iter().all(|l| matches!(l, LocalEncoding::Generator(_)))
    }

    pub fn generators(&self) -> Option<Vec<&ComplexMatrix>> {
        self.locals.iter().map(LocalEncoding::generator).collect()
    }

    /// Parse an encoding specification file.
    ///
    /// ```text
    /// n = 2
    /// mode = unit            # or mean
    /// a = 0.7071067811865476, 0.7071067811865476
    /// basis = computational  # or x
    /// combiner = parity      # or a 0/1 truth table of length 2^n
    /// finite_difference = false
    /// generator.1 = 0 0  0 0  0 0  1 0   # H00, H01, H10, H11 as re im pairs
    /// generator.2 = 0 0  0 0  0 0  1 0
    /// ```
    pub fn parse_spec(text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        if let Some(s) = doc.sections.iter().find(|s| !s.name.is_empty()) {
            return Err(Error::Parse { line: s.line, msg: "encoding files have no sections".into() });
        }
        let root = &doc.sections[0];
        let bad = |line: usize, msg: String| Error::Parse { line, msg };
        let n: usize = match root.get("n") {
            Some(e) => e.value.parse().map_err(|_| bad(e.line, format!("n = `{}` is not a count", e.value)))?,
            None => return Err(bad(1, "missing key `n`".into())),
        };
        let mut mode = DirectionMode::Unit;
        let mut basis = MeasurementBasis::Computational;
        let mut combiner = Combiner::Parity;
        let mut finite_difference = false;
        let mut a: Option<Vec<f64>> = None;
        let mut generators: Vec<Option<ComplexMatrix>> = vec![None; n];
        for e in &root.entries {
            match e.key.as_str() {
                "n" => {}
                "mode" => {
                    mode = match e.value.as_str() {
                        "unit" => DirectionMode::Unit,
                        "mean" => DirectionMode::Mean,
                        other => return Err(bad(e.line, format!("unknown mode `{other}`"))),
                    }
                }
                "basis" => {
                    basis = match e.value.as_str() {
                        "computational" | "z" => MeasurementBasis::Computational,
                        "x" => MeasurementBasis::X,
                        other => return Err(bad(e.line, format!("unknown basis `{other}`"))),
                    }
                }
                "combiner" => {
                    combiner = if e.value == "parity" {
                        Combiner::Parity
                    } else {
                        let table = e
                            .value
                            .split(|c: char| c == ',' || c.is_whitespace())
                            .filter(|s| !s.is_empty())
                            .map(|s| s.parse::<u8>())
                            .collect::<std::result::Result<Vec<u8>, _>>()
                            .map_err(|_| bad(e.line, "combiner must be `parity` or a list of bits".into()))?;
                        Combiner::Table(table)
                    }
                }
                "finite_difference" => {
                    finite_difference = e
                        .value
                        .parse()
                        .map_err(|_| bad(e.line, format!("`{}` is not true/false", e.value)))?
                }
                "a" => a = Some(parse_f64_list(&e.value).map_err(|m| bad(e.line, m))?),
                key => {
                    let idx = key
                        .strip_prefix("generator.")
                        .and_then(|s| s.parse::<usize>().ok())
                        .filter(|&i| (1..=n).contains(&i))
                        .ok_or_else(|| bad(e.line, format!("unknown key `{key}`")))?;
                    let vals = parse_f64_list(&e.value).map_err(|m| bad(e.line, m))?;
                    if vals.len() != 8 {
                        return Err(bad(e.line, format!("generator needs 8 numbers, got {}", vals.len())));
                    }
                    let entries = vals.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
                    generators[idx - 1] = Some(ComplexMatrix::new(2, 2, entries)?);
                }
            }
        }
        let a = match (a, mode) {
            (Some(a), _) => a,
            (None, DirectionMode::Mean) => vec![1.0 / n as f64; n],
            (None, DirectionMode::Unit) => return Err(bad(1, "missing key `a`".into())),
        };
        let locals = generators
            .into_iter()
            .enumerate()
            .map(|(i, g)| g.map(LocalEncoding::Generator).ok_or_else(|| bad(1, format!("missing generator.{}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(locals, a, mode)?
            .with_basis(basis)
            .with_combiner(combiner)?
            .with_finite_difference(finite_difference))
    }

    pub fn load_spec(path: &std::path::Path) -> Result<Self> {
        Self::parse_spec(&std::fs::read_to_string(path)?)
    }
}

/// A parameter vector with every angle in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint(Vec<f64>);

impl ParamPoint {
    /// Wraps each angle into `[0, 2π)`.
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::OutOfRange("parameter angles must be finite".into()));
        }
        Ok(Self(theta.into_iter().map(wrap_angle).collect()))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn wrap_angle(t: f64) -> f64 {
    let w = t.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// `⊗_μ Λ_μ(θ_μ) ρ` with raw (unwrapped) angles, one per party of `rho` in order.
pub fn encode_raw(rho: &DensityMatrix, enc: &EncodingFamily, theta: &[f64]) -> Result<DensityMatrix> {
    if rho.n_parties() != enc.n() || theta.len() != enc.n() {
        return Err(Error::Encoding(format!(
            "state has {} parties, encoding {} and θ {} entries",
            rho.n_parties(),
            enc.n(),
            theta.len()
        )));
    }
    let assignments: Vec<(usize, f64)> = theta.iter().copied().enumerate().collect();
    encode_subset(rho, enc, &assignments)
}

/// Apply `Λ_μ(θ)` only for the given `(position, θ)` pairs.
pub fn encode_subset(rho: &DensityMatrix, enc: &EncodingFamily, assignments: &[(usize, f64)]) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    for &(pos, theta) in assignments {
        let local = enc
            .locals
            .get(pos)
            .ok_or_else(|| Error::Encoding(format!("no encoding for position {pos}")))?;
        if theta == 0.0 {
            continue;
        }
        let party = *rho.parties().get(pos).ok_or_else(|| Error::Encoding(format!("no party at position {pos}")))?;
        out = apply_channel_on(&out, &local.channel_at(theta)?, &[party])?;
    }
    Ok(out)
}

/// `ρ(θ)`; party at position μ of `rho` uses `Λ_μ`.
pub fn encode_state(rho: &DensityMatrix, enc: &EncodingFamily, theta: &ParamPoint) -> Result<DensityMatrix> {
    encode_raw(rho, enc, theta.as_slice())
}
