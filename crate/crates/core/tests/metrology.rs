use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use nalgebra::DMatrix;
use netsense::metrology::{
    privacy_epsilon, classical_fisher, complete_basis, encode_state, equivalent_class_distance, multi_round_bound,
    parity_distribution, privacy_measure, privacy_report, qfim, qfim_alignment_fit, alignment_bound, wrap_angle,
    EncodingFamily, MeasurementBasis, ParamPoint, QfimMatrix, SearchBudget,
};
use netsense::qcore::random::random_mixed_state;
use netsense::qcore::DensityMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn product_state_qfim_is_identity() {
    let rho = DensityMatrix::plus_product(3).unwrap();
    let enc = EncodingFamily::phase(vec![0.6, 0.48, 0.64]).unwrap();
    let q = qfim(&rho, &enc, &ParamPoint::new(vec![0.1, 2.0, 4.0]).unwrap()).unwrap();
    assert!((q.matrix() - DMatrix::<f64>::identity(3, 3)).amax() < 1e-10);
}

#[test]
fn privacy_measure_of_diagonal_qfim() {
    let q = QfimMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 1.0]]).unwrap();
    let a = [0.6, 0.8];
    let want = (0.36 * 2.0 + 0.64 * 1.0) / 3.0;
    assert!((privacy_measure(&q, &a).unwrap() - want).abs() < 1e-15);
    assert!(privacy_measure(&q, &[1.0, 1.0]).is_err());
    assert!(privacy_measure(&q, &[1.0]).is_err());
}

#[test]
fn product_state_is_only_partly_private() {
    let rho = DensityMatrix::plus_product(2).unwrap();
    let enc = EncodingFamily::phase(vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
    let r = privacy_report(&rho, &enc, &ParamPoint::zeros(2)).unwrap();
    assert!((r.p - 0.5).abs() < 1e-10);
    assert!((r.eps_privacy - 0.75f64.sqrt()).abs() < 1e-10);
    // Q = I against k a aᵀ: best k = 1 gives residual ½ on every entry.
    assert!((r.k_star - 1.0).abs() < 1e-6);
    assert!((r.eps_star - 0.5).abs() < 1e-8);
    assert!(r.eps_generator_commutator.is_some());
}

#[test]
fn ghz_search_finds_nothing_and_product_search_finds_everything() {
    let budget = SearchBudget::default();
    let ghz = DensityMatrix::ghz(3).unwrap();
    let mean = EncodingFamily::mean(3).unwrap();
    let s = equivalent_class_distance(&ghz, &mean, &mean.unit_direction(), &budget).unwrap();
    assert!(s.value < 1e-9);

    let plus = DensityMatrix::plus_product(2).unwrap();
    let enc = EncodingFamily::phase(vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap().with_basis(MeasurementBasis::X);
    let s = equivalent_class_distance(&plus, &enc, enc.a(), &budget).unwrap();
    assert!((s.value - 1.0).abs() < 1e-6);
    let a = enc.a();
    let shift: f64 = s.displacement.iter().zip(a).map(|(d, w)| d * w).sum();
    assert!(shift.abs() < 1e-9);
    assert!(!s.exhausted);
}

#[test]
fn search_respects_its_budget() {
    let plus = DensityMatrix::plus_product(2).unwrap();
    let enc = EncodingFamily::phase(vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
    let tight = SearchBudget { directions: 8, grid_points: 16, max_evaluations: 20, ..SearchBudget::default() };
    let s = equivalent_class_distance(&plus, &enc, enc.a(), &tight).unwrap();
    assert!(s.exhausted);
    assert!(s.evaluations <= 20);
    let wide = SearchBudget { max_parties: 1, ..SearchBudget::default() };
    assert!(equivalent_class_distance(&plus, &enc, enc.a(), &wide).is_err());
}

#[test]
fn parity_fisher_information_is_n_squared() {
    for n in 1..=4 {
        for t in [0.1, 0.4, 1.0] {
            let f = classical_fisher(|x| parity_distribution(n, x), t).unwrap();
            assert!((f - (n * n) as f64).abs() < 1e-6, "n={n} t={t}: {f}");
        }
    }
    let d = parity_distribution(3, PI / 9.0);
    assert!((d[0] - 0.5 * (1.0 + (PI / 3.0).cos())).abs() < 1e-15);
    assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-15);
}

#[test]
fn multi_round_closed_form() {
    assert_eq!(multi_round_bound(0.37, 1).unwrap(), 0.37);
    let direct = (1.0 - 0.99f64.powi(10)).sqrt();
    assert!((multi_round_bound(0.1, 10).unwrap() - direct).abs() < 1e-15);
    assert!((direct - 0.309_221_5).abs() < 1e-7);
    assert_eq!(multi_round_bound(1.0, 5).unwrap(), 1.0);
    assert_eq!(multi_round_bound(0.0, 5).unwrap(), 0.0);
    assert!(multi_round_bound(0.1, 0).is_err());
    assert!(multi_round_bound(1.1, 2).is_err());
}

#[test]
fn alignment_bound_forms() {
    let b = alignment_bound(3, 0.1, 3.0).unwrap();
    assert!((b.linear - 0.1).abs() < 1e-15);
    assert!((b.chain.unwrap() - (1.0f64 - 0.81).sqrt()).abs() < 1e-15);
    assert!(alignment_bound(3, 2.0, 3.0).unwrap().chain.is_none());
    assert!(alignment_bound(3, 0.1, 0.0).is_err());
}

#[test]
fn privacy_epsilon_domain() {
    assert_eq!(privacy_epsilon(1.0).unwrap(), 0.0);
    assert_eq!(privacy_epsilon(0.0).unwrap(), 1.0);
    assert!(privacy_epsilon(-0.1).is_err());
}

#[test]
fn complete_basis_needs_a_unit_vector() {
    assert!(complete_basis(&[1.0, 1.0]).is_err());
}

#[test]
fn encoding_spec_files() {
    let z = "0.5 0  0 0  0 0  -0.5 0";
    let text = format!("n = 2\nmode = unit\na = 0.6, 0.8\nbasis = x\ngenerator.1 = {z}\ngenerator.2 = {z}\n");
    let enc = EncodingFamily::parse_spec(&text).unwrap();
    assert_eq!(enc.n(), 2);
    assert_eq!(enc.basis(), MeasurementBasis::X);
    let commented = "n = 2\nmode = unit            # or mean\na = 0.7071067811865476, 0.7071067811865476\n\
                     combiner = parity      # or a truth table\ngenerator.1 = 0 0  0 0  0 0  1 0   # |1><1|\n\
                     generator.2 = 0 0  0 0  0 0  1 0\n";
    assert_eq!(EncodingFamily::parse_spec(commented).unwrap().n(), 2);
    assert!(EncodingFamily::parse_spec("n = 2\na = 1, 2, 3\n").is_err());
    assert!(EncodingFamily::parse_spec("mode = unit\n").is_err());
}

#[test]
fn angles_are_wrapped() {
    assert_eq!(ParamPoint::new(vec![TAU]).unwrap().as_slice(), &[0.0]);
    assert!((ParamPoint::new(vec![-0.1]).unwrap().as_slice()[0] - (TAU - 0.1)).abs() < 1e-15);
    assert!(ParamPoint::new(vec![f64::NAN]).is_err());
    assert!((wrap_angle(-0.5) - (TAU - 0.5)).abs() < 1e-15);
    let rho = DensityMatrix::ghz(2).unwrap();
    let enc = EncodingFamily::mean(2).unwrap();
    assert!(encode_state(&rho, &enc, &ParamPoint::zeros(3)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn complete_basis_is_orthogonal(raw in prop::collection::vec(0.05f64..1.0, 2..=4)) {
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let a: Vec<f64> = raw.iter().map(|x| x / norm).collect();
        let b = complete_basis(&a).unwrap().into_matrix();
        let n = a.len();
        prop_assert!((b.transpose() * &b - DMatrix::<f64>::identity(n, n)).amax() < 1e-12);
        for (i, x) in a.iter().enumerate() {
            prop_assert!((b[(i, 0)] - x).abs() < 1e-12);
        }
    }

    #[test]
    fn qfim_is_psd_and_privacy_in_unit_interval(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_mixed_state(2, &mut rng).unwrap();
        let enc = EncodingFamily::phase(vec![0.6, 0.8]).unwrap();
        let q = qfim(&rho, &enc, &ParamPoint::zeros(2)).unwrap();
        let eig = q.matrix().clone().symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|&l| l > -1e-10));
        if q.trace() > 1e-6 {
            let p = privacy_measure(&q, enc.a()).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            let fit = qfim_alignment_fit(&q, enc.a()).unwrap();
            prop_assert!(fit.eps_star >= 0.0);
        }
    }
}
