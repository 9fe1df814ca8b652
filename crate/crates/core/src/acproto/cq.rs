use std::collections::BTreeMap;

use super::run::{encode_parties, filter_zero_probability, index_bits, joint_measurement, phased_ghz, RunInputs};
use super::system::{ComposedSystem, ConverterKind, Layout};
use crate::error::{Error, Result};
use crate::qcore::{partial_trace, projective_measure, ComplexMatrix, PartyLabel};

/// Classical label with the normalised state of the open quantum interfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct CqBranch {
    pub probability: f64,
    /// `1×1` identity when no interface is dishonest.
    pub state: ComplexMatrix,
}

/// Classical-quantum output of one round as seen by the distinguisher.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CqEnsemble {
    pub dishonest: Vec<PartyLabel>,
    pub branches: BTreeMap<String, CqBranch>,
}

impl CqEnsemble {
    fn add(&mut self, label: String, p: f64, state: ComplexMatrix) {
        let weighted = state.scale_real(p);
        match self.branches.get_mut(&label) {
            Some(b) => {
                b.probability += p;
                b.state = &b.state + &weighted;
            }
            None => {
                self.branches.insert(label, CqBranch { probability: p, state: weighted });
            }
        }
    }

    fn normalise(mut self) -> Self {
        self.branches.retain(|_, b| b.probability > 0.0);
        for b in self.branches.values_mut() {
            b.state = b.state.scale_real(1.0 / b.probability);
        }
        self
    }

    pub fn total_probability(&self) -> f64 {
        self.branches.values().map(|b| b.probability).sum()
    }
}

fn bit_label(bits: &[u8]) -> String {
    bits.iter().map(|b| b.to_string()).collect()
}

/// Exact output ensemble of round `round`. Rounds are independent given the inputs, so every round
/// has the same ensemble; labels only reflect what the distinguisher reads at outer interfaces.
pub fn cq_output(system: &ComposedSystem, inputs: &RunInputs, round: usize) -> Result<CqEnsemble> {
    if round == 0 || round > system.rounds() {
        return Err(Error::OutOfRange(format!("round {round} of {}", system.rounds())));
    }
    let spec = system.spec();
    let n = spec.n();
    let dishonest = spec.dishonest();
    let honest = spec.honest();
    let mut ens = CqEnsemble { dishonest: dishonest.clone(), ..CqEnsemble::default() };
    let unit = ComplexMatrix::identity(1);
    let check_branches = |k: usize| -> Result<()> {
        let needed = 1usize.checked_shl(k as u32).unwrap_or(usize::MAX);
        if k >= usize::BITS as usize || needed > system.max_branches {
            return Err(Error::BranchOverflow { needed, max: system.max_branches });
        }
        Ok(())
    };
    match spec.layout() {
        Layout::Filtered => {
            let theta: Vec<f64> = (1..=n).map(|p| inputs.angle(p)).collect::<Result<_>>()?;
            let t = system.dynamics().target(&theta);
            let raw = (1..=n).any(|p| spec.converter(p) != Some(ConverterKind::FilterDiamond));
            let suffix = if raw { format!(";t:{t:.12e}") } else { String::new() };
            if (1..=n).any(|p| spec.converter(p) == Some(ConverterKind::FilterDiamond)) {
                let p0 = filter_zero_probability(system, t)?;
                ens.add(format!("out:0{suffix}"), p0, unit.clone());
                ens.add(format!("out:1{suffix}"), 1.0 - p0, unit);
            } else {
                ens.add(suffix.trim_start_matches(';').to_string(), 1.0, unit);
            }
        }
        Layout::Simulated if system.dynamics().is_mean() => {
            check_branches(honest.len())?;
            let mut theta0 = vec![0.0; n];
            for &p in &honest {
                theta0[p - 1] = inputs.angle(p)?;
            }
            let f0 = system.dynamics().target(&theta0);
            let w = 0.5f64.powi(honest.len() as i32);
            for idx in 0..1usize << honest.len() {
                let bits = index_bits(idx, honest.len());
                let h = bits.iter().fold(0, |a, b| a ^ b);
                let reg = phased_ghz(&dishonest, h, n as f64 * f0)?;
                ens.add(format!("o_H:{}", bit_label(&bits)), w, reg.into_matrix());
            }
        }
        Layout::Concrete | Layout::Simulated => {
            check_branches(honest.len())?;
            let angles: Vec<(PartyLabel, f64)> = if spec.layout() == Layout::Concrete {
                honest.iter().map(|&p| Ok((p, inputs.angle(p)?))).collect::<Result<_>>()?
            } else {
                let mut theta0 = vec![0.0; n];
                for &p in &honest {
                    theta0[p - 1] = inputs.angle(p)?;
                }
                let th = system.canonical_honest_angles(system.dynamics().target(&theta0));
                honest.iter().map(|&p| (p, th[p - 1])).collect()
            };
            let state = encode_parties(system.dynamics(), system.state(), &angles)?;
            if honest.is_empty() {
                ens.add("o_H:".into(), 1.0, state.into_matrix());
                return Ok(ens.normalise());
            }
            let meas = joint_measurement(system.dynamics(), honest.len())?;
            for b in projective_measure(&state, &meas, &honest)? {
                let Some(post) = b.post_state else { continue };
                let bits = index_bits(b.outcome, honest.len());
                if dishonest.is_empty() {
                    ens.add(format!("out:{}", system.dynamics().combine(&bits)), b.probability, unit.clone());
                } else {
                    let reg = partial_trace(&post, &dishonest)?;
                    ens.add(format!("o_H:{}", bit_label(&bits)), b.probability, reg.into_matrix());
                }
            }
        }
    }
    Ok(ens.normalise())
}
