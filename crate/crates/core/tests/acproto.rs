use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use netsense::acproto::{
    build_system, cq_output, execute, validate_transcript, ComposedSystem, ConverterKind, Direction, FixedBits,
    FollowProtocol, Layout, PartyPartition, Payload, Phase, Port, ResourceKind, RunInputs, SystemSpec,
};
use netsense::metrology::{EncodingFamily, MeasurementBasis};
use netsense::qcore::{ComplexMatrix, DensityMatrix, C64};
use netsense::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ghz_system(spec: SystemSpec, rounds: usize) -> ComposedSystem {
    let n = spec.n();
    build_system(spec, &EncodingFamily::mean(n).unwrap(), &DensityMatrix::ghz(n).unwrap(), rounds, 7).unwrap()
}

fn honest_run(n: usize, theta: &[f64], rounds: usize, seed: u64) -> Vec<u8> {
    let sys = ghz_system(SystemSpec::concrete(ResourceKind::ConcreteR, &PartyPartition::new(n, &[]).unwrap()), rounds);
    let t = execute(&sys, &RunInputs::from_angles(theta), &mut FollowProtocol::default(), seed).unwrap();
    assert!(validate_transcript(&t, &sys).is_clean());
    t.output_bits(1).unwrap().to_vec()
}

#[test]
fn construction_exposes_open_interfaces() {
    let all_honest = ghz_system(SystemSpec::concrete(ResourceKind::ConcreteR, &PartyPartition::new(3, &[]).unwrap()), 1);
    assert_eq!(all_honest.angle_inputs(), vec![1, 2, 3]);
    assert!(all_honest.quantum_interfaces().is_empty());

    let sim = ghz_system(SystemSpec::simulated(ResourceKind::IdealMean, &PartyPartition::new(3, &[3]).unwrap()), 1);
    assert_eq!(sim.angle_inputs(), vec![1, 2]);
    assert_eq!(sim.quantum_interfaces(), vec![3]);
    assert_eq!(sim.spec().layout(), Layout::Simulated);

    assert!(matches!(SystemSpec::from_ids("IdealMean", &[(1, "Oracle")]), Err(Error::UnknownBehavior(_))));
    assert!(matches!(SystemSpec::from_ids("Quantum", &[]), Err(Error::UnknownBehavior(_))));
}

#[test]
fn mean_resources_require_ghz() {
    let spec = SystemSpec::concrete(ResourceKind::ConcreteR, &PartyPartition::new(2, &[]).unwrap());
    let plus = DensityMatrix::plus_product(2).unwrap();
    assert!(build_system(spec, &EncodingFamily::mean(2).unwrap(), &plus, 1, 0).is_err());
}

#[test]
fn honest_parity_extremes() {
    assert_eq!(honest_run(3, &[0.0; 3], 20, 1), vec![0; 20]);
    assert_eq!(honest_run(3, &[PI / 3.0; 3], 1, 2), vec![1]);
    assert_eq!(honest_run(3, &[PI, 0.0, 0.0], 10, 3), vec![1; 10]);
}

#[test]
fn honest_parity_frequency() {
    let n = 3;
    let rounds = 4000;
    for k in 0..4 {
        let mean = (2 * k + 1) as f64 * PI / (8.0 * n as f64);
        let bits = honest_run(n, &[mean; 3], rounds, 10 + k as u64);
        let freq = bits.iter().filter(|&&b| b == 0).count() as f64 / rounds as f64;
        let p = 0.5 * (1.0 + (n as f64 * mean).cos());
        let sd = (p * (1.0 - p) / rounds as f64).sqrt();
        assert!((freq - p).abs() <= 4.0 * sd, "θ̄ = {mean}: {freq} vs {p}");
    }
}

#[test]
fn execution_is_deterministic() {
    let partition = PartyPartition::new(3, &[2]).unwrap();
    for spec in [
        SystemSpec::concrete(ResourceKind::ConcreteR, &partition),
        SystemSpec::simulated(ResourceKind::IdealMean, &partition),
        SystemSpec::filtered(ResourceKind::IdealMean, 3),
    ] {
        let sys = ghz_system(spec, 5);
        let inputs = RunInputs::from_angles(&[0.3, 1.1, 2.0]);
        let a = execute(&sys, &inputs, &mut FollowProtocol::default(), 99).unwrap();
        let b = execute(&sys, &inputs, &mut FollowProtocol::default(), 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_records(), b.to_records());
        let report = validate_transcript(&a, &sys);
        assert!(report.is_clean(), "{:?}", report.violations);
    }
}

#[test]
fn general_simulated_runs_validate() {
    let n = 3;
    let a = vec![0.6, 0.48, 0.64];
    let enc = EncodingFamily::phase(a).unwrap().with_basis(MeasurementBasis::X);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rho = netsense::qcore::random::random_mixed_state(n, &mut rng).unwrap();
    let partition = PartyPartition::new(n, &[2, 3]).unwrap();
    for spec in [
        SystemSpec::concrete(ResourceKind::ConcreteGeneral, &partition),
        SystemSpec::simulated(ResourceKind::IdealGeneral, &partition),
    ] {
        let sys = build_system(spec, &enc, &rho, 4, 11).unwrap();
        let t = execute(&sys, &RunInputs::from_angles(&[1.0, 2.0, 3.0]), &mut FollowProtocol::default(), 3).unwrap();
        let report = validate_transcript(&t, &sys);
        assert!(report.is_clean(), "{:?}", report.violations);
    }
}

#[test]
fn simulator_signalling_is_consistent() {
    // σ_H must decode exactly g of the dishonest bits combined with h, for every dishonest response.
    let partition = PartyPartition::new(4, &[2, 4]).unwrap();
    let sys = ghz_system(SystemSpec::simulated(ResourceKind::IdealMean, &partition), 16);
    for bits in [vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]] {
        let t = execute(&sys, &RunInputs::from_angles(&[0.4, 0.0, 2.5, 0.0]), &mut FixedBits(bits), 8).unwrap();
        let p = t.output_bits(1).unwrap();
        let broadcasts: Vec<&Vec<u8>> = t
            .messages
            .iter()
            .filter(|m| m.party == 2 && m.direction == Direction::Out)
            .filter_map(|m| match &m.payload {
                Payload::Bits(b) => Some(b),
                _ => None,
            })
            .collect();
        assert_eq!(broadcasts.len(), 16);
        for (bit, o) in p.iter().zip(broadcasts) {
            assert_eq!(*bit, o.iter().fold(0, |x, y| x ^ y));
        }
        assert!(validate_transcript(&t, &sys).is_clean());
    }
}

#[test]
fn invalid_responses_abort() {
    let sys = ghz_system(SystemSpec::concrete(ResourceKind::ConcreteR, &PartyPartition::new(3, &[3]).unwrap()), 3);
    let inputs = RunInputs::from_angles(&[0.1, 0.2, 0.0]);
    for bad in [vec![2], vec![0, 1], vec![]] {
        let t = execute(&sys, &inputs, &mut FixedBits(bad), 1).unwrap();
        assert!(t.abort.is_some());
        assert!(t.to_records().lines().last().unwrap().starts_with("abort"));
        assert!(validate_transcript(&t, &sys).is_clean(), "aborted prefix must conform");
    }
}

#[test]
fn missing_and_out_of_range_inputs() {
    let sys = ghz_system(SystemSpec::concrete(ResourceKind::ConcreteR, &PartyPartition::new(2, &[]).unwrap()), 1);
    let mut inputs = RunInputs::default();
    inputs.angles.insert(1, 0.5);
    assert!(matches!(execute(&sys, &inputs, &mut FollowProtocol::default(), 0), Err(Error::MissingInput(_))));
    inputs.angles.insert(2, TAU);
    assert!(matches!(execute(&sys, &inputs, &mut FollowProtocol::default(), 0), Err(Error::OutOfRange(_))));
}

#[test]
fn validation_flags_tampering() {
    let sys = ghz_system(SystemSpec::concrete(ResourceKind::ConcreteR, &PartyPartition::new(3, &[]).unwrap()), 3);
    let t = execute(&sys, &RunInputs::from_angles(&[0.5, 0.6, 0.7]), &mut FollowProtocol::default(), 4).unwrap();
    assert!(validate_transcript(&t, &sys).is_clean());

    let mut missing = t.clone();
    let k = missing
        .messages
        .iter()
        .position(|m| m.phase == Phase::Round(2) && m.party == 1 && m.direction == Direction::Out && matches!(m.payload, Payload::Bits(_)))
        .unwrap();
    missing.messages.remove(k);
    let report = validate_transcript(&missing, &sys);
    assert!(!report.is_clean());

    let mut tampered = t.clone();
    let Some(Payload::Bits(p)) = tampered.outputs.get_mut(&1) else { panic!() };
    p[0] ^= 1;
    let report = validate_transcript(&tampered, &sys);
    assert_eq!(report.violations.len(), 1, "{:?}", report.violations);
    assert!(report.violations[0].contains("not g"));

    let mut bad_domain = t.clone();
    bad_domain.messages[0].payload = Payload::Angle(7.0);
    assert!(!validate_transcript(&bad_domain, &sys).is_clean());
}

#[test]
fn transcript_records_and_export() {
    let sys = ghz_system(SystemSpec::concrete(ResourceKind::ConcreteR, &PartyPartition::new(2, &[2]).unwrap()), 2);
    let t = execute(&sys, &RunInputs::from_angles(&[1.0, 0.0]), &mut FollowProtocol::default(), 6).unwrap();
    let records = t.to_records();
    let mut lines = records.lines();
    assert_eq!(lines.next(), Some("round,interface,direction,payload_type,payload"));
    assert!(records.contains("1,P2.outer,out,quantum,register-0.txt"));
    assert!(records.contains("setup,P1.outer,in,angle,1.0000000000000000e0"));
    let dir = tempfile::tempdir().unwrap();
    t.export(dir.path()).unwrap();
    assert!(dir.path().join("transcript.csv").exists());
    assert!(dir.path().join("register-1.txt").exists());
    assert!(t.observable().all(|m| m.port == Port::Outer));
}

/// (|0⟩ + (−1)^h e^{iφ}|1⟩)/√2 as a density matrix.
fn phased_qubit(h: u8, phi: f64) -> ComplexMatrix {
    let s = if h == 0 { 1.0 } else { -1.0 };
    let psi = [C64::new(FRAC_1_SQRT_2, 0.0), C64::from_polar(s * FRAC_1_SQRT_2, phi)];
    ComplexMatrix::outer(&psi)
}

#[test]
fn cq_branches_of_ghz_with_one_dishonest_party() {
    let partition = PartyPartition::new(3, &[3]).unwrap();
    let theta = [0.7, 1.9, 0.0];
    let inputs = RunInputs::from_angles(&theta);
    for spec in [
        SystemSpec::concrete(ResourceKind::ConcreteR, &partition),
        SystemSpec::simulated(ResourceKind::IdealMean, &partition),
    ] {
        let sys = ghz_system(spec, 1);
        let ens = cq_output(&sys, &inputs, 1).unwrap();
        assert_eq!(ens.dishonest, vec![3]);
        assert!((ens.total_probability() - 1.0).abs() < 1e-12);
        // Group the honest outcome strings by parity h.
        let mut by_h: BTreeMap<u8, (f64, ComplexMatrix)> = BTreeMap::new();
        for (label, b) in &ens.branches {
            let h = label.trim_start_matches("o_H:").bytes().fold(0, |acc, c| acc ^ (c - b'0'));
            let e = by_h.entry(h).or_insert((0.0, ComplexMatrix::zeros(2, 2)));
            e.0 += b.probability;
            e.1 = &e.1 + &b.state.scale_real(b.probability);
        }
        assert_eq!(by_h.len(), 2);
        for (h, (p, m)) in by_h {
            assert!((p - 0.5).abs() < 1e-12);
            let expected = phased_qubit(h, theta[0] + theta[1]);
            assert!(m.scale_real(1.0 / p).max_abs_diff(&expected) < 1e-12);
        }
    }
}

#[test]
fn cq_of_all_honest_is_classical() {
    let sys = ghz_system(SystemSpec::concrete(ResourceKind::ConcreteR, &PartyPartition::new(3, &[]).unwrap()), 1);
    let mean: f64 = 0.4;
    let ens = cq_output(&sys, &RunInputs::from_angles(&[mean; 3]), 1).unwrap();
    assert!(ens.dishonest.is_empty());
    let p0 = ens.branches["out:0"].probability;
    assert!((p0 - 0.5 * (1.0 + (3.0 * mean).cos())).abs() < 1e-12);
    assert!(ens.branches.values().all(|b| b.state.rows() == 1));
}

#[test]
fn cq_branch_overflow() {
    let sys = ghz_system(SystemSpec::concrete(ResourceKind::ConcreteR, &PartyPartition::new(3, &[3]).unwrap()), 1)
        .with_max_branches(2);
    assert!(matches!(
        cq_output(&sys, &RunInputs::from_angles(&[0.0; 3]), 1),
        Err(Error::BranchOverflow { needed: 4, max: 2 })
    ));
}

#[test]
fn filtered_matches_honest_distribution() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 3;
    let enc = EncodingFamily::mean(n).unwrap();
    let rho = DensityMatrix::ghz(n).unwrap().depolarized(0.2).unwrap();
    let all = PartyPartition::new(n, &[]).unwrap();
    for (real, ideal, state) in [
        (ResourceKind::ConcreteR, ResourceKind::IdealMean, DensityMatrix::ghz(n).unwrap()),
        (ResourceKind::ConcreteGeneral, ResourceKind::IdealGeneral, rho),
    ] {
        let honest = build_system(SystemSpec::concrete(real, &all), &enc, &state, 1, 0).unwrap();
        let filtered = build_system(SystemSpec::filtered(ideal, n), &enc, &state, 1, 0).unwrap();
        for _ in 0..5 {
            let theta: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..TAU)).collect();
            let inputs = RunInputs::from_angles(&theta);
            let a = cq_output(&honest, &inputs, 1).unwrap();
            let b = cq_output(&filtered, &inputs, 1).unwrap();
            assert_eq!(a.branches.keys().collect::<Vec<_>>(), b.branches.keys().collect::<Vec<_>>());
            for (label, br) in &a.branches {
                assert!((br.probability - b.branches[label].probability).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn converter_ids_round_trip() {
    for id in ["HonestPi", "FilterDiamond", "SimHonest", "SimDishonest"] {
        assert_eq!(id.parse::<ConverterKind>().unwrap().to_string(), id);
    }
    let spec = SystemSpec::from_ids("ConcreteR", &[(1, "HonestPi"), (2, "none")]).unwrap();
    assert_eq!(spec.dishonest(), vec![2]);
}
