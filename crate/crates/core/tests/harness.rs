use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use netsense::acproto::{build_system, ComposedSystem, PartyPartition, ResourceKind, RunInputs, SystemSpec};
use netsense::harness::{
    audit, classical_advantage, empirical_estimate, estimate_advantage, estimate_advantage_with, exact_advantage,
    AdvantageMode, CiMethod, ConstantGuess, Guess, OutputBit, ParityComparison, Relation,
};
use netsense::metrology::{equivalent_class_distance, EncodingFamily, MeasurementBasis, SearchBudget};
use netsense::qcore::random::random_mixed_state;
use netsense::qcore::{DensityMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ghz_pair(n: usize, dishonest: &[usize]) -> (ComposedSystem, ComposedSystem) {
    let enc = EncodingFamily::mean(n).unwrap();
    let rho = DensityMatrix::ghz(n).unwrap();
    let part = PartyPartition::new(n, dishonest).unwrap();
    (
        build_system(SystemSpec::concrete(ResourceKind::ConcreteR, &part), &enc, &rho, 1, 0).unwrap(),
        build_system(SystemSpec::simulated(ResourceKind::IdealMean, &part), &enc, &rho, 1, 0).unwrap(),
    )
}

/// All-honest systems on a computational-basis state: the output bit is the parity of the state's bits.
fn classical_system(rho: DensityMatrix, rounds: usize) -> ComposedSystem {
    let n = rho.n_parties();
    let enc = EncodingFamily::phase(vec![1.0 / (n as f64).sqrt(); n]).unwrap();
    let part = PartyPartition::new(n, &[]).unwrap();
    build_system(SystemSpec::concrete(ResourceKind::ConcreteGeneral, &part), &enc, &rho, rounds, 0).unwrap()
}

#[test]
fn ghz_concrete_and_simulated_are_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for dishonest in [vec![3], vec![1, 3], vec![2]] {
        let (real, sim) = ghz_pair(3, &dishonest);
        for _ in 0..4 {
            let theta: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..TAU)).collect();
            let d = exact_advantage(&real, &sim, &RunInputs::from_angles(&theta)).unwrap();
            assert_eq!(d.mode, AdvantageMode::Exact);
            assert!(d.d_hat < 1e-9, "{dishonest:?}: {}", d.d_hat);
            assert_eq!(d.ci_low, d.ci_high);
        }
    }
}

#[test]
fn exact_advantage_is_symmetric_and_zero_on_self() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let enc = EncodingFamily::phase(vec![0.6, 0.8]).unwrap().with_basis(MeasurementBasis::X);
    let part = PartyPartition::new(2, &[2]).unwrap();
    for _ in 0..5 {
        let rho = random_mixed_state(2, &mut rng).unwrap();
        let real = build_system(SystemSpec::concrete(ResourceKind::ConcreteGeneral, &part), &enc, &rho, 1, 0).unwrap();
        let sim = build_system(SystemSpec::simulated(ResourceKind::IdealGeneral, &part), &enc, &rho, 1, 0).unwrap();
        let inputs = RunInputs::from_angles(&[rng.random_range(0.0..TAU), 0.0]);
        assert!(exact_advantage(&real, &real, &inputs).unwrap().d_hat < 1e-12);
        let ab = exact_advantage(&real, &sim, &inputs).unwrap().d_hat;
        let ba = exact_advantage(&sim, &real, &inputs).unwrap().d_hat;
        assert!((ab - ba).abs() < 1e-12);
    }
}

#[test]
fn restricting_observables_never_helps() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..10 {
        let n = 2 + i % 2;
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let enc = EncodingFamily::phase(a.iter().map(|x| x / norm).collect()).unwrap().with_basis(MeasurementBasis::X);
        let rho = random_mixed_state(n, &mut rng).unwrap();
        let part = PartyPartition::new(n, &[n]).unwrap();
        let real = build_system(SystemSpec::concrete(ResourceKind::ConcreteGeneral, &part), &enc, &rho, 1, 0).unwrap();
        let sim = build_system(SystemSpec::simulated(ResourceKind::IdealGeneral, &part), &enc, &rho, 1, 0).unwrap();
        let theta: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
        let inputs = RunInputs::from_angles(&theta);
        let full = exact_advantage(&real, &sim, &inputs).unwrap().d_hat;
        let classical = classical_advantage(&real, &sim, &inputs).unwrap().d_hat;
        assert!(classical <= full + 1e-12, "{classical} > {full}");
    }
}

#[test]
fn plus_plus_advantage_respects_class_distance() {
    let enc = EncodingFamily::phase(vec![FRAC_1_SQRT_2; 2]).unwrap().with_basis(MeasurementBasis::X);
    let rho = DensityMatrix::plus_product(2).unwrap();
    let part = PartyPartition::new(2, &[2]).unwrap();
    let real = build_system(SystemSpec::concrete(ResourceKind::ConcreteGeneral, &part), &enc, &rho, 1, 0).unwrap();
    let sim = build_system(SystemSpec::simulated(ResourceKind::IdealGeneral, &part), &enc, &rho, 1, 0).unwrap();
    let measured = equivalent_class_distance(&rho, &enc, enc.a(), &SearchBudget::default()).unwrap().value;
    let mut worst = 0.0f64;
    for k in 0..16 {
        let inputs = RunInputs::from_angles(&[k as f64 * TAU / 16.0, 0.0]);
        worst = worst.max(exact_advantage(&real, &sim, &inputs).unwrap().d_hat);
    }
    assert!(worst <= measured + 1e-9);
}

#[test]
fn identical_systems_are_indistinguishable() {
    let (real, _) = ghz_pair(3, &[3]);
    let strategy = ParityComparison { inputs: RunInputs::from_angles(&[0.5, 1.5, 0.0]), honest_party: 1 };
    let est = estimate_advantage(&real, &real, &strategy, 100_000, 3).unwrap();
    assert!(est.contains(0.0), "{est:?}");
    assert_eq!(est.trials, 100_000);
    assert!(est.ci_low <= est.d_hat && est.d_hat <= est.ci_high);
}

#[test]
fn ghz_concrete_vs_simulated_empirically() {
    let (real, sim) = ghz_pair(3, &[2, 3]);
    let strategy = ParityComparison { inputs: RunInputs::from_angles(&[0.9, 0.0, 0.0]), honest_party: 1 };
    let est = estimate_advantage(&real, &sim, &strategy, 100_000, 17).unwrap();
    assert!(est.contains(0.0), "{est:?}");
}

#[test]
fn constant_outputs_are_perfectly_distinguishable() {
    let zero = classical_system(DensityMatrix::basis(&[0, 0, 0]).unwrap(), 1);
    let one = classical_system(DensityMatrix::basis(&[1, 0, 0]).unwrap(), 1);
    let strategy = OutputBit { inputs: RunInputs::from_angles(&[0.0; 3]), party: 1 };
    let est = estimate_advantage(&zero, &one, &strategy, 1000, 0).unwrap();
    assert_eq!(est.d_hat, 1.0);
    assert!((exact_advantage(&zero, &one, &strategy.inputs).unwrap().d_hat - 1.0).abs() < 1e-12);
    let blind = ConstantGuess { inputs: RunInputs::from_angles(&[0.0; 3]), guess: Guess::A };
    assert_eq!(estimate_advantage(&zero, &one, &blind, 1000, 0).unwrap().d_hat, 0.0);
}

#[test]
fn calibration_pair_coverage() {
    // |000⟩ always outputs 0; |+00⟩ outputs a fair bit. Exact advantage ½.
    let mut psi = vec![C64::new(0.0, 0.0); 8];
    psi[0] = C64::new(FRAC_1_SQRT_2, 0.0);
    psi[4] = C64::new(FRAC_1_SQRT_2, 0.0);
    let mixed = DensityMatrix::from_pure(&psi, vec![1, 2, 3]).unwrap();
    let a = classical_system(DensityMatrix::basis(&[0, 0, 0]).unwrap(), 1);
    let b = classical_system(mixed, 1);
    let strategy = OutputBit { inputs: RunInputs::from_angles(&[0.0; 3]), party: 1 };
    let exact = exact_advantage(&a, &b, &strategy.inputs).unwrap().d_hat;
    assert!((exact - 0.5).abs() < 1e-12);
    let mut covered = 0;
    for rep in 0..40 {
        let est = estimate_advantage(&a, &b, &strategy, 2000, 1000 + rep).unwrap();
        covered += usize::from(est.contains(exact));
        assert!(est.d_hat <= exact + est.half_width() + 1e-12);
    }
    assert!(covered >= 38, "coverage {covered}/40");
}

#[test]
fn estimates_are_reproducible_and_validated() {
    let (real, sim) = ghz_pair(2, &[2]);
    let strategy = ParityComparison { inputs: RunInputs::from_angles(&[0.3, 0.0]), honest_party: 1 };
    let a = estimate_advantage(&real, &sim, &strategy, 400, 5).unwrap();
    let b = estimate_advantage(&real, &sim, &strategy, 400, 5).unwrap();
    assert_eq!(a, b);
    assert!(estimate_advantage(&real, &sim, &strategy, 99, 5).is_err());
    let cp = estimate_advantage_with(&real, &sim, &strategy, 400, 5, CiMethod::ClopperPearson).unwrap();
    assert_eq!(cp.d_hat, a.d_hat);
    assert!(cp.contains(cp.d_hat));
}

#[test]
fn interval_methods() {
    let h = empirical_estimate(750, 1000, CiMethod::Hoeffding);
    assert!((h.d_hat - 0.5).abs() < 1e-12);
    let w = ((2.0f64 / 0.01).ln() / 2000.0).sqrt();
    assert!((h.ci_high - h.ci_low - 4.0 * w).abs() < 1e-12);
    let cp = empirical_estimate(750, 1000, CiMethod::ClopperPearson);
    assert!(cp.ci_low < 0.5 && cp.ci_high > 0.5);
    // The exact interval is narrower than Hoeffding at this sample size.
    assert!(cp.ci_high - cp.ci_low < h.ci_high - h.ci_low);
    let all = empirical_estimate(1000, 1000, CiMethod::ClopperPearson);
    assert_eq!(all.ci_high, 1.0);
}

#[test]
fn audit_ghz_full_privacy() {
    let enc = EncodingFamily::mean(3).unwrap();
    let rho = DensityMatrix::ghz(3).unwrap();
    let a = audit(&rho, &enc, &PartyPartition::new(3, &[3]).unwrap(), &SearchBudget::default()).unwrap();
    assert!(a.measured < 1e-6);
    assert!(a.exact_advantage < 1e-9);
    assert!(a.privacy_bound >= 0.0 && a.alignment_bound_linear >= 0.0);
    assert!(!a.any_violation(), "{:?}", a.relations);
    assert_eq!(a.relations, a.compute_relations());
}

#[test]
fn audit_plus_plus_exceeds_privacy_bound() {
    let enc = EncodingFamily::phase(vec![FRAC_1_SQRT_2; 2]).unwrap().with_basis(MeasurementBasis::X);
    let rho = DensityMatrix::plus_product(2).unwrap();
    let a = audit(&rho, &enc, &PartyPartition::new(2, &[2]).unwrap(), &SearchBudget::default()).unwrap();
    assert!((a.measured - 1.0).abs() < 1e-6);
    assert!((a.privacy_bound - 0.75f64.sqrt()).abs() < 1e-9);
    assert_eq!(a.relations.measured_vs_privacy_bound, Relation::Exceeds);
    assert_eq!(a.relations.advantage_vs_class_distance, Relation::Within);
}

#[test]
fn audit_depolarized_ghz() {
    let enc = EncodingFamily::mean(3).unwrap();
    let rho = DensityMatrix::ghz(3).unwrap().depolarized(0.05).unwrap();
    let a = audit(&rho, &enc, &PartyPartition::new(3, &[3]).unwrap(), &SearchBudget::default()).unwrap();
    assert!(a.exact_advantage <= a.measured + 1e-9);
    assert!(a.alignment_bound_chain.is_some());
    assert!(a.trace_q > 0.0 && a.k_star.is_finite() && a.eps_star >= 0.0);
    assert!(!a.search_exhausted);
}

#[test]
fn parity_sweep_tracks_cosine_law() {
    let pts = netsense::harness::parity_sweep(3, 5000, 8, 2).unwrap();
    assert_eq!(pts.len(), 8);
    let failures = pts.iter().filter(|p| p.z_score() > 3.0).count();
    assert!(failures <= 1, "{pts:?}");
    assert_eq!(pts, netsense::harness::parity_sweep(3, 5000, 8, 2).unwrap());
}

#[test]
fn mean_estimate_inverts_parity_law() {
    for theta in [0.1, 0.4, 0.9] {
        let p = 0.5 * (1.0 + (3.0f64 * theta).cos());
        assert!((netsense::harness::mean_estimate(3, p) - theta).abs() < 1e-12);
    }
}
