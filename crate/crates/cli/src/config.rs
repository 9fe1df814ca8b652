//! Run configuration files.
//!
//! ```text
//! [run]
//! scenario = privacy
//! seed = 7
//!
//! [system]
//! n = 3
//! state = depolarized-ghz 0.05
//! encoding = mean
//! dishonest = 3
//! ```
//!
//! Relative paths are resolved against the directory of the configuration file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use netsense::metrology::{EncodingFamily, MeasurementBasis, SearchBudget};
use netsense::qcore::io::load_density_matrix;
use netsense::qcore::DensityMatrix;
use netsense::textconf::{parse_f64_list, parse_usize_list, Document, Entry};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Qfim,
    Privacy,
    Simulate,
    Advantage,
    Audit,
    Compose,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Qfim => "qfim",
            ScenarioKind::Privacy => "privacy",
            ScenarioKind::Simulate => "simulate",
            ScenarioKind::Advantage => "advantage",
            ScenarioKind::Audit => "audit",
            ScenarioKind::Compose => "compose",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, ScenarioKind::Simulate | ScenarioKind::Advantage | ScenarioKind::Audit)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "qfim" => ScenarioKind::Qfim,
            "privacy" => ScenarioKind::Privacy,
            "simulate" => ScenarioKind::Simulate,
            "advantage" => ScenarioKind::Advantage,
            "audit" => ScenarioKind::Audit,
            "compose" => ScenarioKind::Compose,
            other => return Err(format!("unknown scenario `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Ghz,
    PlusProduct,
    DepolarizedGhz(f64),
    File(PathBuf),
}

impl StateSpec {
    pub fn build(&self, n: usize) -> netsense::Result<DensityMatrix> {
        match self {
            StateSpec::Ghz => DensityMatrix::ghz(n),
            StateSpec::PlusProduct => DensityMatrix::plus_product(n),
            StateSpec::DepolarizedGhz(p) => DensityMatrix::ghz(n)?.depolarized(*p),
            StateSpec::File(path) => load_density_matrix(path),
        }
    }

    /// ` (<path>)` for file-backed states, empty otherwise.
    fn source(&self) -> String {
        match self {
            StateSpec::File(p) => format!(" ({})", p.display()),
            _ => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EncodingSpec {
    Mean,
    /// `|1⟩⟨1|` generators with direction `a`.
    Phase { a: Vec<f64>, basis: MeasurementBasis },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComposeInputs {
    pub epsilon: f64,
    pub lambda: f64,
    pub delta: f64,
    /// Second security level for sequential composition.
    pub epsilon2: Option<f64>,
}

/// Strategy used by the `advantage` scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    Parity,
    OutputBit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Option<ScenarioKind>,
    pub seed: Option<u64>,
    /// `N`.
    pub rounds: usize,
    pub trials: usize,
    pub out: Option<PathBuf>,
    pub n: usize,
    pub dishonest: Vec<usize>,
    pub state: StateSpec,
    pub encoding: EncodingSpec,
    /// Parameter point for `qfim`, `privacy` and `advantage`; zeros by default.
    pub theta: Option<Vec<f64>>,
    pub points: usize,
    pub repetitions: usize,
    pub strategy: StrategyKind,
    pub budget: SearchBudget,
    pub compose: Option<ComposeInputs>,
    /// SHA-256 of the configuration text, hex encoded.
    pub hash: String,
}

impl RunConfig {
    pub fn build_state(&self) -> netsense::Result<DensityMatrix> {
        self.state.build(self.n)
    }

    pub fn build_encoding(&self) -> netsense::Result<EncodingFamily> {
        match &self.encoding {
            EncodingSpec::Mean => EncodingFamily::mean(self.n),
            EncodingSpec::Phase { a, basis } => Ok(EncodingFamily::phase(a.clone())?.with_basis(*basis)),
            EncodingSpec::File(path) => EncodingFamily::load_spec(path),
        }
    }
}

impl EncodingSpec {
    fn source(&self) -> String {
        match self {
            EncodingSpec::File(p) => format!(" ({})", p.display()),
            _ => String::new(),
        }
    }
}

/// Keys accepted in each section.
const KNOWN: &[(&str, &[&str])] = &[
    ("run", &["scenario", "seed", "rounds", "trials", "out"]),
    ("system", &["n", "dishonest", "state", "encoding", "a", "basis", "theta"]),
    ("simulate", &["points", "repetitions"]),
    ("advantage", &["strategy"]),
    ("search", &["directions", "grid_points", "tolerance", "max_evaluations"]),
    ("compose", &["epsilon", "lambda", "delta", "epsilon2"]),
];

pub const DEFAULT_TRIALS: usize = 100_000;

struct Reader<'a> {
    doc: &'a Document,
    errors: Vec<String>,
    base: PathBuf,
}

impl Reader<'_> {
    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.doc.section(section).and_then(|s| s.get(key))
    }

    fn parse<T: FromStr>(&mut self, section: &str, key: &str) -> Option<T> {
        let e = self.entry(section, key)?;
        match e.value.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.errors.push(format!("line {}: {section}.{key}: cannot parse `{}`", e.line, e.value));
                None
            }
        }
    }

    fn list_f64(&mut self, section: &str, key: &str) -> Option<Vec<f64>> {
        let e = self.entry(section, key)?;
        match parse_f64_list(&e.value) {
            Ok(v) => Some(v),
            Err(msg) => {
                self.errors.push(format!("line {}: {section}.{key}: {msg}", e.line));
                None
            }
        }
    }

    fn path(&self, value: &str) -> PathBuf {
        let p = PathBuf::from(value);
        if p.is_absolute() {
            p
        } else {
            self.base.join(p)
        }
    }

    fn range(&mut self, ok: bool, field: &str, msg: impl fmt::Display) {
        if !ok {
            self.errors.push(format!("{field}: {msg}"));
        }
    }
}

pub fn hash_text(text: &str) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn parse_config(path: &Path, strict: bool) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_text(&text, &base, strict)
}

/// Parse and validate; every problem found is reported, not only the first.
pub fn parse_config_text(text: &str, base: &Path, strict: bool) -> Result<RunConfig, CliError> {
    let doc = Document::parse(text).map_err(|e| CliError::Config(vec![e.to_string()]))?;
    let mut r = Reader { doc: &doc, errors: Vec::new(), base: base.to_path_buf() };
    if strict {
        let known: BTreeMap<&str, &[&str]> = KNOWN.iter().copied().collect();
        for (section, entry) in doc.entries() {
            match known.get(section.name.as_str()) {
                None => r.errors.push(format!("line {}: unknown section [{}]", entry.line, section.name)),
                Some(keys) if !keys.contains(&entry.key.as_str()) => {
                    r.errors.push(format!("line {}: unknown key {}.{}", entry.line, section.name, entry.key))
                }
                Some(_) => {}
            }
        }
    }

    let scenario = match r.entry("run", "scenario").map(|e| (e.line, e.value.clone())) {
        Some((line, v)) => match v.parse::<ScenarioKind>() {
            Ok(s) => Some(s),
            Err(msg) => {
                r.errors.push(format!("line {line}: run.scenario: {msg}"));
                None
            }
        },
        None => None,
    };
    let seed = r.parse::<u64>("run", "seed");
    let rounds = r.parse::<usize>("run", "rounds").unwrap_or(1);
    r.range(rounds >= 1, "run.rounds", "must be at least 1");
    let trials = r.parse::<usize>("run", "trials").unwrap_or(DEFAULT_TRIALS);
    r.range(trials >= 100, "run.trials", "must be at least 100");
    let out = r.entry("run", "out").map(|e| e.value.clone()).map(|v| r.path(&v));

    let has_system = doc.section("system").is_some();
    let n = r.parse::<usize>("system", "n").unwrap_or(0);
    if has_system {
        r.range((1..=4).contains(&n), "system.n", format!("{n} parties; supported range is 1..=4"));
    }

    let dishonest = match r.entry("system", "dishonest").map(|e| (e.line, e.value.clone())) {
        Some((_, v)) if v == "none" => Vec::new(),
        Some((line, v)) => parse_usize_list(&v).unwrap_or_else(|msg| {
            r.errors.push(format!("line {line}: system.dishonest: {msg}"));
            Vec::new()
        }),
        None => Vec::new(),
    };
    for &d in &dishonest {
        r.range(d >= 1 && d <= n, "system.dishonest", format!("party {d} is not in 1..={n}"));
    }

    let state = match r.entry("system", "state").map(|e| (e.line, e.value.clone())) {
        None => StateSpec::Ghz,
        Some((line, v)) => {
            let mut words = v.split_whitespace();
            match (words.next(), words.next(), words.next()) {
                (Some("ghz"), None, _) => StateSpec::Ghz,
                (Some("plus-product"), None, _) => StateSpec::PlusProduct,
                (Some("depolarized-ghz"), Some(p), None) => match p.parse::<f64>() {
                    Ok(p) if (0.0..=1.0).contains(&p) => StateSpec::DepolarizedGhz(p),
                    _ => {
                        r.errors.push(format!("line {line}: system.state: depolarizing weight `{p}` must lie in [0, 1]"));
                        StateSpec::Ghz
                    }
                },
                (Some("file"), Some(p), None) => StateSpec::File(r.path(p)),
                _ => {
                    r.errors.push(format!("line {line}: system.state: expected ghz, plus-product, depolarized-ghz <p> or file <path>"));
                    StateSpec::Ghz
                }
            }
        }
    };

    let a = r.list_f64("system", "a");
    if let Some(a) = &a {
        r.range(a.len() == n, "system.a", format!("{} entries for {n} parties", a.len()));
    }
    let basis = match r.entry("system", "basis").map(|e| (e.line, e.value.clone())) {
        None => MeasurementBasis::X,
        Some((_, v)) if v == "x" => MeasurementBasis::X,
        Some((_, v)) if v == "computational" || v == "z" => MeasurementBasis::Computational,
        Some((line, v)) => {
            r.errors.push(format!("line {line}: system.basis: unknown basis `{v}`"));
            MeasurementBasis::X
        }
    };
    let encoding = match r.entry("system", "encoding").map(|e| (e.line, e.value.clone())) {
        None => EncodingSpec::Mean,
        Some((_, v)) if v == "mean" => EncodingSpec::Mean,
        Some((_, v)) if v == "phase" => {
            let a = a.clone().unwrap_or_else(|| vec![1.0 / (n.max(1) as f64).sqrt(); n]);
            EncodingSpec::Phase { a, basis }
        }
        Some((line, v)) => match v.strip_prefix("file ") {
            Some(p) => EncodingSpec::File(r.path(p.trim())),
            None => {
                r.errors.push(format!("line {line}: system.encoding: expected mean, phase or file <path>"));
                EncodingSpec::Mean
            }
        },
    };
    if matches!(encoding, EncodingSpec::Mean) && a.is_some() {
        r.errors.push("system.a: the mean encoding fixes a = (1/n, …, 1/n)".into());
    }

    let theta = r.list_f64("system", "theta");
    if let Some(t) = &theta {
        r.range(t.len() == n, "system.theta", format!("{} entries for {n} parties", t.len()));
        r.range(t.iter().all(|x| x.is_finite()), "system.theta", "entries must be finite");
    }

    let points = r.parse::<usize>("simulate", "points").unwrap_or(8);
    r.range(points >= 1, "simulate.points", "must be at least 1");
    let repetitions = r.parse::<usize>("simulate", "repetitions").unwrap_or(0);
    r.range(repetitions != 1, "simulate.repetitions", "a variance needs 0 or at least 2 repetitions");

    let strategy = match r.entry("advantage", "strategy").map(|e| (e.line, e.value.clone())) {
        None => StrategyKind::Parity,
        Some((_, v)) if v == "parity" => StrategyKind::Parity,
        Some((_, v)) if v == "output-bit" => StrategyKind::OutputBit,
        Some((line, v)) => {
            r.errors.push(format!("line {line}: advantage.strategy: unknown strategy `{v}`"));
            StrategyKind::Parity
        }
    };

    let mut budget = SearchBudget::default();
    if let Some(v) = r.parse::<usize>("search", "directions") {
        budget.directions = v;
    }
    if let Some(v) = r.parse::<usize>("search", "grid_points") {
        r.range(v >= 2, "search.grid_points", "must be at least 2");
        budget.grid_points = v;
    }
    if let Some(v) = r.parse::<f64>("search", "tolerance") {
        r.range(v > 0.0, "search.tolerance", "must be positive");
        budget.tolerance = v;
    }
    if let Some(v) = r.parse::<usize>("search", "max_evaluations") {
        budget.max_evaluations = v;
    }

    let compose = if doc.section("compose").is_some() {
        let epsilon = r.parse::<f64>("compose", "epsilon").unwrap_or(0.0);
        let lambda = r.parse::<f64>("compose", "lambda").unwrap_or(0.0);
        let delta = r.parse::<f64>("compose", "delta").unwrap_or(0.0);
        let epsilon2 = r.parse::<f64>("compose", "epsilon2");
        r.range(epsilon >= 0.0, "compose.epsilon", "must be non-negative");
        r.range((0.0..=1.0).contains(&lambda), "compose.lambda", "must lie in [0, 1]");
        r.range((0.0..=1.0).contains(&delta), "compose.delta", "must lie in [0, 1]");
        if let Some(e2) = epsilon2 {
            r.range(e2 >= 0.0, "compose.epsilon2", "must be non-negative");
        }
        Some(ComposeInputs { epsilon, lambda, delta, epsilon2 })
    } else {
        None
    };

    let mut cfg = RunConfig {
        scenario,
        seed,
        rounds,
        trials,
        out,
        n,
        dishonest,
        state,
        encoding,
        theta,
        points,
        repetitions,
        strategy,
        budget,
        compose,
        hash: hash_text(text),
    };
    if r.errors.is_empty() && has_system {
        // Load referenced files now so that broken inputs surface as configuration errors.
        match cfg.build_state() {
            Ok(rho) if rho.n_parties() != cfg.n => {
                r.errors.push(format!("system.state: {} parties, system.n is {}", rho.n_parties(), cfg.n))
            }
            Ok(_) => {}
            Err(e) => r.errors.push(format!("system.state{}: {e}", cfg.state.source())),
        }
        match cfg.build_encoding() {
            Ok(enc) if enc.n() != cfg.n => r.errors.push(format!("system.encoding: {} parties, system.n is {}", enc.n(), cfg.n)),
            Ok(_) => {}
            Err(e) => r.errors.push(format!("system.encoding{}: {e}", cfg.encoding.source())),
        }
    }
    cfg.budget.seed = cfg.seed.unwrap_or(0);
    if r.errors.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Config(r.errors))
    }
}

impl RunConfig {
    /// Apply command-line overrides and check what the chosen scenario needs.
    pub fn resolve(mut self, verb: ScenarioKind, seed: Option<u64>, trials: Option<usize>) -> Result<Self, CliError> {
        let mut errors = Vec::new();
        if let Some(s) = self.scenario {
            if s != verb {
                errors.push(format!("run.scenario: config is for `{s}`, command is `{verb}`"));
            }
        }
        self.scenario = Some(verb);
        if seed.is_some() {
            self.seed = seed;
            self.budget.seed = self.seed.unwrap_or(0);
        }
        if let Some(t) = trials {
            if t < 100 {
                errors.push("--trials: must be at least 100".into());
            }
            self.trials = t;
        }
        if verb.is_stochastic() && self.seed.is_none() {
            errors.push(format!("run.seed: required for the stochastic scenario `{verb}`"));
        }
        if verb == ScenarioKind::Compose && self.compose.is_none() {
            errors.push("[compose]: section required for the compose scenario".into());
        }
        if verb != ScenarioKind::Compose && self.n == 0 {
            errors.push("[system]: section with n required".into());
        }
        if matches!(verb, ScenarioKind::Advantage | ScenarioKind::Audit) && self.dishonest.is_empty() {
            errors.push(format!("system.dishonest: the {verb} scenario needs at least one dishonest party"));
        }
        if errors.is_empty() {
            Ok(self)
        } else {
            Err(CliError::Config(errors))
        }
    }

    pub fn scenario_kind(&self) -> ScenarioKind {
        self.scenario.unwrap_or(ScenarioKind::Qfim)
    }
}
