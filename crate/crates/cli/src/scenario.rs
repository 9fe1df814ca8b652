use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use netsense::acproto::{build_system, execute, validate_transcript, FollowProtocol, PartyPartition, RunInputs, SystemSpec};
use netsense::harness::{
    audit, estimate_advantage, estimator_variance, exact_advantage, parity_sweep, resource_pair, sweep_angles,
    AdvantageEstimate, DistinguisherStrategy, OutputBit, ParityComparison,
};
use netsense::metrology::{multi_round_bound, privacy_report, qfim, wrap_angle, ParamPoint};
use netsense::veriflib::{sequential_epsilon, verified_epsilon, SecurityLevel, VerificationGuarantee};

use crate::config::{EncodingSpec, RunConfig, ScenarioKind, StateSpec, StrategyKind};
use crate::error::CliError;
use crate::report::{fmt_f64, PlotPoint, RunManifest};

/// Rows of a `scenario,field,index,value` result file.
#[derive(Debug, Default)]
struct Records {
    scenario: &'static str,
    text: String,
}

impl Records {
    fn new(scenario: ScenarioKind) -> Self {
        Self { scenario: scenario.name(), text: "scenario,field,index,value\n".into() }
    }

    fn push(&mut self, field: &str, index: &str, value: f64) -> Result<(), CliError> {
        if !value.is_finite() {
            return Err(CliError::Invariant(format!("{field}[{index}] is not finite")));
        }
        let _ = writeln!(self.text, "{},{field},{index},{}", self.scenario, fmt_f64(value));
        Ok(())
    }

    fn matrix(&mut self, field: &str, m: &nalgebra::DMatrix<f64>) -> Result<(), CliError> {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                self.push(field, &format!("{r}:{c}"), m[(r, c)])?;
            }
        }
        Ok(())
    }
}

fn write(out: &Path, name: &str, text: &str, manifest: &mut RunManifest) -> Result<(), CliError> {
    std::fs::write(out.join(name), text)?;
    manifest.results.push(PathBuf::from(name));
    Ok(())
}

fn theta_point(cfg: &RunConfig) -> Result<ParamPoint, CliError> {
    Ok(match &cfg.theta {
        Some(t) => ParamPoint::new(t.clone())?,
        None => ParamPoint::zeros(cfg.n),
    })
}

/// Execute the configured scenario, writing result files into `out`.
///
/// The manifest is returned even for runs whose search budget ran out; the caller maps that case to its exit status.
pub fn run_scenario(cfg: &RunConfig, out: &Path) -> Result<RunManifest, CliError> {
    std::fs::create_dir_all(out)?;
    let kind = cfg.scenario_kind();
    let mut m = RunManifest::new(kind.name(), &cfg.hash, cfg.seed);
    match kind {
        ScenarioKind::Qfim => run_qfim(cfg, out, &mut m)?,
        ScenarioKind::Privacy => run_privacy(cfg, out, &mut m)?,
        ScenarioKind::Simulate => run_simulate(cfg, out, &mut m)?,
        ScenarioKind::Advantage => run_advantage(cfg, out, &mut m)?,
        ScenarioKind::Audit => run_audit(cfg, out, &mut m)?,
        ScenarioKind::Compose => run_compose(cfg, out, &mut m)?,
    }
    Ok(m)
}

fn run_qfim(cfg: &RunConfig, out: &Path, m: &mut RunManifest) -> Result<(), CliError> {
    let rho = cfg.build_state()?;
    let enc = cfg.build_encoding()?;
    let q = qfim(&rho, &enc, &theta_point(cfg)?)?;
    let mut rec = Records::new(ScenarioKind::Qfim);
    rec.matrix("qfim", q.matrix())?;
    rec.push("trace_q", "", q.trace())?;
    write(out, "qfim.csv", &rec.text, m)?;
    m.summary("trace_q", q.trace());
    Ok(())
}

fn run_privacy(cfg: &RunConfig, out: &Path, m: &mut RunManifest) -> Result<(), CliError> {
    let rho = cfg.build_state()?;
    let enc = cfg.build_encoding()?;
    let r = privacy_report(&rho, &enc, &theta_point(cfg)?)?;
    let single_round = (1.0 - r.p * r.p).max(0.0).sqrt();
    let multi = multi_round_bound(single_round, cfg.rounds)?;
    let mut rec = Records::new(ScenarioKind::Privacy);
    let scalars = [
        ("p", r.p),
        ("eps_privacy", r.eps_privacy),
        ("privacy_bound", single_round),
        ("multi_round_bound", multi),
        ("k_star", r.k_star),
        ("eps_star", r.eps_star),
        ("trace_q", r.trace_q),
        ("alignment_bound_linear", r.alignment_bound),
    ];
    for (name, v) in scalars {
        rec.push(name, "", v)?;
        m.summary(name, v);
    }
    if let Some(c) = r.alignment_chain {
        rec.push("alignment_bound_chain", "", c)?;
        m.summary("alignment_bound_chain", c);
    }
    rec.matrix("qfim", r.qfim.matrix())?;
    rec.matrix("eps_generator_pairwise", &r.eps_generator_pairwise)?;
    if let Some(c) = &r.eps_generator_commutator {
        rec.matrix("eps_generator_commutator", c)?;
    }
    write(out, "privacy.csv", &rec.text, m)
}

fn run_simulate(cfg: &RunConfig, out: &Path, m: &mut RunManifest) -> Result<(), CliError> {
    if cfg.state != StateSpec::Ghz || cfg.encoding != EncodingSpec::Mean {
        return Err(CliError::Config(vec!["simulate: runs the GHZ mean-estimation protocol (state = ghz, encoding = mean)".into()]));
    }
    let seed = cfg.seed.unwrap_or(0);
    let points = parity_sweep(cfg.n, cfg.rounds, cfg.points, seed)?;
    let mut csv = String::from("theta_bar,empirical,predicted\n");
    for p in &points {
        let _ = writeln!(csv, "{},{},{}", fmt_f64(p.theta_bar), fmt_f64(p.empirical), fmt_f64(p.predicted));
        m.plot.push(PlotPoint { x: p.theta_bar, y: p.empirical, series: "empirical".into() });
        m.plot.push(PlotPoint { x: p.theta_bar, y: p.predicted, series: "predicted".into() });
    }
    write(out, "parity.csv", &csv, m)?;
    let worst = points.iter().map(|p| p.z_score()).fold(0.0, f64::max);
    m.summary("points", points.len() as f64);
    m.summary("max_z_score", worst);

    // A short honest run, exported and checked against the behaviour automata.
    let part = PartyPartition::new(cfg.n, &[])?;
    let sys = build_system(
        SystemSpec::concrete(netsense::acproto::ResourceKind::ConcreteR, &part),
        &cfg.build_encoding()?,
        &cfg.build_state()?,
        cfg.rounds.min(8),
        seed,
    )?;
    let theta0 = sweep_angles(cfg.n, 1)[0];
    let t = execute(&sys, &RunInputs::from_angles(&vec![theta0; cfg.n]), &mut FollowProtocol::default(), seed)?;
    t.export(&out.join("transcript"))?;
    m.results.push(PathBuf::from("transcript/transcript.csv"));
    let report = validate_transcript(&t, &sys);
    if !report.is_clean() {
        return Err(CliError::Invariant(report.violations.join("; ")));
    }

    if cfg.repetitions >= 2 {
        let theta_bar = std::f64::consts::PI / (2.0 * cfg.n as f64);
        let v = estimator_variance(cfg.n, cfg.rounds, theta_bar, cfg.repetitions, seed)?;
        let mut csv = String::from("repetition,estimate\n");
        for (i, e) in v.estimates.iter().enumerate() {
            let _ = writeln!(csv, "{i},{}", fmt_f64(*e));
        }
        write(out, "variance.csv", &csv, m)?;
        m.summary("estimator_mean", v.mean);
        m.summary("estimator_variance", v.variance);
        m.summary("predicted_variance", v.predicted);
        m.summary("variance_ratio", v.variance / v.predicted);
        m.plot.push(PlotPoint { x: cfg.rounds as f64, y: v.variance, series: "variance".into() });
        m.plot.push(PlotPoint { x: cfg.rounds as f64, y: v.predicted, series: "1/(n^2 N)".into() });
    }
    Ok(())
}

fn run_advantage(cfg: &RunConfig, out: &Path, m: &mut RunManifest) -> Result<(), CliError> {
    let rho = cfg.build_state()?;
    let enc = cfg.build_encoding()?;
    let part = PartyPartition::new(cfg.n, &cfg.dishonest)?;
    let seed = cfg.seed.unwrap_or(0);
    let (concrete, ideal) = resource_pair(&rho, &enc)?;
    let real = build_system(SystemSpec::concrete(concrete, &part), &enc, &rho, cfg.rounds, seed)?;
    let sim = build_system(SystemSpec::simulated(ideal, &part), &enc, &rho, cfg.rounds, seed)?;
    let theta = theta_point(cfg)?;
    let inputs = RunInputs {
        angles: part.honest().iter().map(|&p| (p, wrap_angle(theta.as_slice()[p - 1]))).collect(),
    };
    let first_honest = part.honest().iter().next().copied().unwrap_or(1);
    let strategy: Box<dyn DistinguisherStrategy> = match cfg.strategy {
        StrategyKind::Parity => Box::new(ParityComparison { inputs: inputs.clone(), honest_party: first_honest }),
        StrategyKind::OutputBit => Box::new(OutputBit { inputs: inputs.clone(), party: first_honest }),
    };
    let est = estimate_advantage(&real, &sim, strategy.as_ref(), cfg.trials, seed)?;
    let mut rec = Records::new(ScenarioKind::Advantage);
    let mut put = |rec: &mut Records, prefix: &str, e: &AdvantageEstimate| -> Result<(), CliError> {
        for (name, v) in [("d_hat", e.d_hat), ("ci_low", e.ci_low), ("ci_high", e.ci_high)] {
            rec.push(&format!("{prefix}_{name}"), "", v)?;
            m.summary(&format!("{prefix}_{name}"), v);
        }
        Ok(())
    };
    put(&mut rec, "empirical", &est)?;
    rec.push("trials", "", est.trials as f64)?;
    if cfg.rounds == 1 {
        let exact = exact_advantage(&real, &sim, &inputs)?;
        put(&mut rec, "exact", &exact)?;
    }
    write(out, "advantage.csv", &rec.text, m)
}

fn run_audit(cfg: &RunConfig, out: &Path, m: &mut RunManifest) -> Result<(), CliError> {
    let rho = cfg.build_state()?;
    let enc = cfg.build_encoding()?;
    let part = PartyPartition::new(cfg.n, &cfg.dishonest)?;
    let a = audit(&rho, &enc, &part, &cfg.budget)?;
    let chain = a.alignment_bound_chain.map_or_else(|| "NA".to_string(), fmt_f64);
    let r = &a.relations;
    let mut csv = String::from(
        "measured,exact_advantage,class_distance_bound,privacy_bound,alignment_bound_linear,alignment_bound_chain,p,k_star,eps_star,trace_q,\
         search_exhausted,advantage_vs_class_distance,measured_vs_privacy_bound,measured_vs_alignment_linear,measured_vs_alignment_chain\n",
    );
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{chain},{},{},{},{},{},{},{},{},{}",
        fmt_f64(a.measured),
        fmt_f64(a.exact_advantage),
        fmt_f64(a.class_distance_bound),
        fmt_f64(a.privacy_bound),
        fmt_f64(a.alignment_bound_linear),
        fmt_f64(a.p),
        fmt_f64(a.k_star),
        fmt_f64(a.eps_star),
        fmt_f64(a.trace_q),
        u8::from(a.search_exhausted),
        r.advantage_vs_class_distance,
        r.measured_vs_privacy_bound,
        r.measured_vs_alignment_linear,
        r.measured_vs_alignment_chain.map_or("NA".to_string(), |x| x.to_string()),
    );
    write(out, "audit.csv", &csv, m)?;
    for (name, v) in [
        ("measured", a.measured),
        ("exact_advantage", a.exact_advantage),
        ("privacy_bound", a.privacy_bound),
        ("alignment_bound_linear", a.alignment_bound_linear),
        ("p", a.p),
    ] {
        m.summary(name, v);
    }
    if let Some(c) = a.alignment_bound_chain {
        m.summary("alignment_bound_chain", c);
    }
    let mut bounds = vec![("class_distance", a.class_distance_bound), ("privacy", a.privacy_bound), ("alignment_linear", a.alignment_bound_linear)];
    bounds.extend(a.alignment_bound_chain.map(|c| ("alignment_chain", c)));
    for (series, bound) in bounds {
        m.plot.push(PlotPoint { x: bound, y: a.measured, series: series.into() });
    }
    if a.any_violation() {
        m.warnings.push("measured distance exceeds at least one stated bound; see relation columns".into());
    }
    if a.search_exhausted {
        return Err(CliError::Budget(format!("{} evaluations allowed", cfg.budget.max_evaluations)));
    }
    Ok(())
}

fn run_compose(cfg: &RunConfig, out: &Path, m: &mut RunManifest) -> Result<(), CliError> {
    let c = cfg.compose.as_ref().expect("resolved compose config has inputs");
    let eps = SecurityLevel::new(c.epsilon)?;
    let v = verified_epsilon(eps, VerificationGuarantee::new(c.lambda, c.delta)?);
    let mut rec = Records::new(ScenarioKind::Compose);
    rec.push("conditional_epsilon", "", v.conditional.epsilon())?;
    rec.push("verified_epsilon", "", v.overall.epsilon())?;
    m.summary("conditional_epsilon", v.conditional.epsilon());
    m.summary("verified_epsilon", v.overall.epsilon());
    m.warnings.extend(v.conditional.warning());
    m.warnings.extend(v.overall.warning());
    if let Some(e2) = c.epsilon2 {
        let s = sequential_epsilon(eps, SecurityLevel::new(e2)?);
        rec.push("sequential_epsilon", "", s.epsilon())?;
        m.summary("sequential_epsilon", s.epsilon());
        m.warnings.extend(s.warning());
    }
    write(out, "compose.csv", &rec.text, m)
}
