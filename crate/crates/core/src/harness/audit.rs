use std::fmt;

use crate::acproto::{build_system, PartyPartition, ResourceKind, RunInputs, SystemSpec};
use crate::error::{Error, Result};
use crate::metrology::{equivalent_class_distance, privacy_report, wrap_angle, DirectionMode, EncodingFamily, ParamPoint, SearchBudget};
use crate::qcore::{state_metrics, DensityMatrix};

use super::advantage::exact_advantage;

/// Slack allowed before a value counts as exceeding a bound.
pub const RELATION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// Value is at most the bound.
    Within,
    /// Value exceeds the bound.
    Exceeds,
}

impl Relation {
    pub fn of(value: f64, bound: f64) -> Self {
        if value <= bound + RELATION_SLACK {
            Relation::Within
        } else {
            Relation::Exceeds
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Within => "<=",
            Relation::Exceeds => ">",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Relations {
    /// Exact advantage against the equivalent-class distance.
    pub advantage_vs_class_distance: Relation,
    pub measured_vs_privacy_bound: Relation,
    pub measured_vs_alignment_linear: Relation,
    /// Absent when the chain form is undefined.
    pub measured_vs_alignment_chain: Option<Relation>,
}

/// Measured equivalent-class distance next to every bound that claims to cap it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundAudit {
    pub measured: f64,
    pub argmax: (ParamPoint, ParamPoint),
    /// Exact one-round advantage of the concrete system against the simulated ideal one, maximised over the argmax pair.
    pub exact_advantage: f64,
    /// The security level guaranteed through the equivalent-class distance.
    pub class_distance_bound: f64,
    /// `√(1 − P²)`.
    pub privacy_bound: f64,
    pub alignment_bound_linear: f64,
    pub alignment_bound_chain: Option<f64>,
    pub p: f64,
    pub k_star: f64,
    pub eps_star: f64,
    pub trace_q: f64,
    pub search_exhausted: bool,
    pub relations: Relations,
}

impl BoundAudit {
    pub fn compute_relations(&self) -> Relations {
        Relations {
            advantage_vs_class_distance: Relation::of(self.exact_advantage, self.class_distance_bound),
            measured_vs_privacy_bound: Relation::of(self.measured, self.privacy_bound),
            measured_vs_alignment_linear: Relation::of(self.measured, self.alignment_bound_linear),
            measured_vs_alignment_chain: self.alignment_bound_chain.map(|b| Relation::of(self.measured, b)),
        }
    }

    pub fn any_violation(&self) -> bool {
        let r = &self.relations;
        [r.advantage_vs_class_distance, r.measured_vs_privacy_bound, r.measured_vs_alignment_linear]
            .into_iter()
            .chain(r.measured_vs_alignment_chain)
            .any(|x| x == Relation::Exceeds)
    }
}

/// Concrete and ideal resources matching a state and encoding.
pub fn resource_pair(rho: &DensityMatrix, enc: &EncodingFamily) -> Result<(ResourceKind, ResourceKind)> {
    if enc.mode() == DirectionMode::Mean {
        let ghz = DensityMatrix::ghz(enc.n())?;
        if rho.n_parties() == enc.n() && state_metrics(rho, &ghz)?.trace_distance <= 1e-9 {
            return Ok((ResourceKind::ConcreteR, ResourceKind::IdealMean));
        }
    }
    Ok((ResourceKind::ConcreteGeneral, ResourceKind::IdealGeneral))
}

/// Compare the searched equivalent-class distance against every bound. Never fails on a violated bound;
/// violations are reported through [`BoundAudit::relations`].
pub fn audit(rho: &DensityMatrix, enc: &EncodingFamily, partition: &PartyPartition, budget: &SearchBudget) -> Result<BoundAudit> {
    let n = enc.n();
    if partition.n() != n {
        return Err(Error::Wiring(format!("partition of {} parties for an {n}-party encoding", partition.n())));
    }
    if partition.dishonest().is_empty() {
        return Err(Error::Wiring("an audit needs at least one dishonest party".into()));
    }
    let search = equivalent_class_distance(rho, enc, enc.a(), budget)?;
    let report = privacy_report(rho, enc, &ParamPoint::zeros(n))?;
    let privacy_bound = (1.0 - report.p * report.p).max(0.0).sqrt();

    let (concrete, ideal) = resource_pair(rho, enc)?;
    let real = build_system(SystemSpec::concrete(concrete, partition), enc, rho, 1, budget.seed)?;
    let sim = build_system(SystemSpec::simulated(ideal, partition), enc, rho, 1, budget.seed)?;
    let mut exact = 0.0f64;
    for theta in [&search.argmax.0, &search.argmax.1] {
        let inputs = RunInputs {
            angles: partition.honest().iter().map(|&p| (p, wrap_angle(theta.as_slice()[p - 1]))).collect(),
        };
        exact = exact.max(exact_advantage(&real, &sim, &inputs)?.d_hat);
    }

    let mut out = BoundAudit {
        measured: search.value,
        argmax: search.argmax,
        exact_advantage: exact,
        class_distance_bound: search.value,
        privacy_bound,
        alignment_bound_linear: report.alignment_bound,
        alignment_bound_chain: report.alignment_chain,
        p: report.p,
        k_star: report.k_star,
        eps_star: report.eps_star,
        trace_q: report.trace_q,
        search_exhausted: search.exhausted,
        relations: Relations {
            advantage_vs_class_distance: Relation::Within,
            measured_vs_privacy_bound: Relation::Within,
            measured_vs_alignment_linear: Relation::Within,
            measured_vs_alignment_chain: None,
        },
    };
    out.relations = out.compute_relations();
    Ok(out)
}
