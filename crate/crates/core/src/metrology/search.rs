use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;

use super::encoding::{encode_raw, EncodingFamily, ParamPoint};
use super::privacy::complete_basis;
use crate::error::{Error, Result};
use crate::qcore::random::random_unit_vector;
use crate::qcore::{helstrom_advantage, DensityMatrix};
use crate::seed::stream;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Knobs of the constrained trace-distance search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBudget {
    /// Random directions orthogonal to `a`.
    pub directions: usize,
    pub grid_points: usize,
    /// Final bracket width of the golden-section refinement.
    pub tolerance: f64,
    /// Directions whose cost would push the total past this are dropped.
    pub max_evaluations: usize,
    pub max_parties: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self { directions: 32, grid_points: 64, tolerance: 1e-6, max_evaluations: 1_000_000, max_parties: 4, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceSearch {
    /// Largest `T(ρ(θ), ρ(θ′))` found with `a·(θ′ − θ) = 0`.
    pub value: f64,
    /// Maximising pair, wrapped into `[0, 2π)`.
    pub argmax: (ParamPoint, ParamPoint),
    /// Unwrapped `θ′ − θ`.
    pub displacement: Vec<f64>,
    pub evaluations: usize,
    /// Set when the evaluation budget cut the direction list short.
    pub exhausted: bool,
}

struct Start {
    base: Vec<f64>,
    direction: Vec<f64>,
}

/// Multi-start lower bound on `max T(ρ(θ), ρ(θ′))` over pairs sharing `a·θ`.
///
/// Starts are the configured number of random unit directions in the orthogonal
/// complement of `a`, followed by the normalised projections of every coordinate
/// difference `e_μ − e_ν`. Each start scans `t ∈ [0, 2π√n)` on a uniform grid and
/// refines the best cell by golden-section search. Generator encodings are unitary,
/// so the base point is `θ = 0` without loss of generality; channel encodings draw a
/// random base point for the random starts.
pub fn equivalent_class_distance(
    rho: &DensityMatrix,
    enc: &EncodingFamily,
    a: &[f64],
    budget: &SearchBudget,
) -> Result<EquivalenceSearch> {
    let n = enc.n();
    if n > budget.max_parties {
        return Err(Error::OutOfRange(format!("search supports at most {} parties, got {n}", budget.max_parties)));
    }
    if a.len() != n {
        return Err(Error::Shape(format!("direction has {} entries for {n} parties", a.len())));
    }
    if budget.grid_points < 2 || budget.tolerance.is_nan() || budget.tolerance <= 0.0 {
        return Err(Error::OutOfRange("search needs at least 2 grid points and a positive tolerance".into()));
    }
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a_hat: Vec<f64> = a.iter().map(|x| x / norm).collect();
    let base_state = encode_raw(rho, enc, &vec![0.0; n])?;
    if n == 1 {
        // The equivalence class of a single parameter is a point.
        let zero = ParamPoint::zeros(1);
        return Ok(EquivalenceSearch {
            value: 0.0,
            argmax: (zero.clone(), zero),
            displacement: vec![0.0],
            evaluations: 0,
            exhausted: false,
        });
    }

    let starts = build_starts(enc, &a_hat, budget)?;
    let t_max = TAU * (n as f64).sqrt();
    let cell = t_max / budget.grid_points as f64;
    let golden_steps = golden_iterations(2.0 * cell, budget.tolerance);
    let per_start = budget.grid_points + golden_steps + 2;
    let affordable = (budget.max_evaluations / per_start).min(starts.len());
    let exhausted = affordable < starts.len();

    let results: Vec<Result<(f64, f64)>> = starts[..affordable]
        .par_iter()
        .map(|s| {
            let origin = if s.base.iter().all(|&x| x == 0.0) { base_state.clone() } else { encode_raw(rho, enc, &s.base)? };
            let objective = |t: f64| -> Result<f64> {
                let shifted: Vec<f64> = s.base.iter().zip(&s.direction).map(|(b, d)| b + t * d).collect();
                helstrom_advantage(&origin, &encode_raw(rho, enc, &shifted)?)
            };
            line_search(objective, cell, budget.grid_points, golden_steps)
        })
        .collect();

    // Ordered reduction: strictly larger wins, so ties keep the lowest start index.
    let mut best: Option<(usize, f64, f64)> = None;
    for (idx, r) in results.into_iter().enumerate() {
        let (value, t) = r?;
        if best.is_none_or(|(_, v, _)| value > v) {
            best = Some((idx, value, t));
        }
    }
    let (idx, value, t) = best.unwrap_or((0, 0.0, 0.0));
    let (base, displacement) = match starts.get(idx).filter(|_| affordable > 0) {
        Some(s) => (s.base.clone(), s.direction.iter().map(|d| t * d).collect::<Vec<_>>()),
        None => (vec![0.0; n], vec![0.0; n]),
    };
    let shifted: Vec<f64> = base.iter().zip(&displacement).map(|(b, d)| b + d).collect();
    Ok(EquivalenceSearch {
        value: value.min(1.0),
        argmax: (ParamPoint::new(base)?, ParamPoint::new(shifted)?),
        displacement,
        evaluations: affordable * per_start,
        exhausted,
    })
}

fn build_starts(enc: &EncodingFamily, a_hat: &[f64], budget: &SearchBudget) -> Result<Vec<Start>> {
    let n = a_hat.len();
    let basis = complete_basis(a_hat)?;
    let complement = basis.matrix();
    let mut rng = stream(budget.seed, "metrology/equivalent-class");
    let mut starts = Vec::with_capacity(budget.directions + n * (n - 1) / 2);
    for _ in 0..budget.directions {
        let w = random_unit_vector(n - 1, &mut rng);
        let direction = (0..n).map(|r| (1..n).map(|k| complement[(r, k)] * w[k - 1]).sum()).collect();
        let base = if enc.is_generator_form() {
            vec![0.0; n]
        } else {
            (0..n).map(|_| rng.random::<f64>() * TAU).collect()
        };
        starts.push(Start { base, direction });
    }
    for mu in 0..n {
        for nu in mu + 1..n {
            let mut d = vec![0.0; n];
            d[mu] = 1.0;
            d[nu] = -1.0;
            let along: f64 = d.iter().zip(a_hat).map(|(x, y)| x * y).sum();
            d.iter_mut().zip(a_hat).for_each(|(x, y)| *x -= along * y);
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-8 {
                continue;
            }
            starts.push(Start { base: vec![0.0; n], direction: d.iter().map(|x| x / norm).collect() });
        }
    }
    Ok(starts)
}

fn golden_iterations(width: f64, tol: f64) -> usize {
    if width <= tol {
        0
    } else {
        ((tol / width).ln() / INV_PHI.ln()).ceil() as usize
    }
}

/// Grid scan of `f` on `t = k·cell`, then golden-section refinement around the best node.
fn line_search(f: impl Fn(f64) -> Result<f64>, cell: f64, points: usize, steps: usize) -> Result<(f64, f64)> {
    let values = (0..points).map(|k| f(k as f64 * cell)).collect::<Result<Vec<_>>>()?;
    let (k_best, &v_best) = values
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, cur| if *cur.1 > *acc.1 { cur } else { acc });
    let mut best = (v_best, k_best as f64 * cell);
    let (mut lo, mut hi) = ((k_best as f64 - 1.0) * cell, (k_best as f64 + 1.0) * cell);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..steps {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    for (v, x) in [(f1, x1), (f2, x2)] {
        if v > best.0 {
            best = (v, x);
        }
    }
    Ok(best)
}
