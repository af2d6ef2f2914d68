//! Randomized invariants of every module, on seeded inputs.

mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use qpt_core::channel::{
    affine_from_chi, apply_chi, apply_kraus, chi_from_affine, chi_from_choi, chi_from_kraus, choi_from_chi, compose,
    is_completely_positive, is_trace_preserving, kraus_from_chi, AffineMap, ChiMatrix, KrausSet, StandardChannel,
};
use qpt_core::linalg::{hermitian_eigensystem, ComplexMatrix};
use qpt_core::metrics::{bures_metric, c_metric, fidelity, matrix_norms, trace_distance};
use qpt_core::process_tomography::{
    affine_from_state_images, build_beta, estimate_from_states, run_process_tomography, BetaTensor, InputBasis,
    StateImages,
};
use qpt_core::projection::{project_to_physical, tp_normalize};
use qpt_core::simulator::{record_sets, run_channel_experiment, run_experiment, ExperimentConfig};
use qpt_core::state::{
    bloch_from_density, density_from_bloch, von_neumann_entropy, BlochVector, DensityMatrix, PauliBasis,
};
use qpt_core::state_tomography::{exact_records, reconstruct_state, Axis, ExpectationRecord, Shots};

use common::{bloch, complex_matrix, cptp_chi, cptp_kraus, hermitian, rng, state};

// ---- quantum states ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn density_bloch_round_trip(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
        let r = BlochVector::new(x, y, z).clamped_to_ball();
        let rho = density_from_bloch(r).unwrap();
        let back = bloch_from_density(&rho);
        prop_assert!(back.distance(r) < 1e-12);
        let again = density_from_bloch(back).unwrap();
        prop_assert!(again.matrix().approx_eq(rho.matrix(), 1e-12));
    }

    #[test]
    fn shots_text_round_trip(n in 1u64..u64::MAX) {
        let shots = Shots::Finite(n);
        prop_assert_eq!(shots.to_string().parse::<Shots>().unwrap(), shots);
        let json = serde_json::to_string(&shots).unwrap();
        prop_assert_eq!(serde_json::from_str::<Shots>(&json).unwrap(), shots);
    }
}

#[test]
fn eigensystems_reconstruct_hermitian_matrices() {
    let mut rng = rng(1);
    for n in [2, 4] {
        for _ in 0..500 {
            let m = hermitian(&mut rng, n);
            let eig = hermitian_eigensystem(&m).unwrap();
            assert!(eig.reconstruct().approx_eq(&m, 1e-10));
            assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}

#[test]
fn entropy_is_concave_and_purity_matches_bloch() {
    let mut rng = rng(2);
    for _ in 0..1000 {
        let a = state(&mut rng);
        let b = state(&mut rng);
        let w: f64 = rng.gen();
        let mixed = a.mix(&b, w);
        let lhs = von_neumann_entropy(&mixed);
        let rhs = w * von_neumann_entropy(&a) + (1.0 - w) * von_neumann_entropy(&b);
        assert!(lhs >= rhs - 1e-9);
        let r = a.bloch().norm();
        assert!((a.purity() - (1.0 + r * r) / 2.0).abs() < 1e-10);
    }
}

// ---- channel representations ----

/// Random mixture of unitaries: a unital channel.
fn unital_chi(rng: &mut impl Rng) -> ChiMatrix {
    let a = StandardChannel::UnitaryRotation {
        axis: bloch(rng, true).to_array(),
        angle: rng.gen_range(-3.0..3.0),
    };
    let b = StandardChannel::UnitaryRotation {
        axis: bloch(rng, true).to_array(),
        angle: rng.gen_range(-3.0..3.0),
    };
    a.chi().unwrap().mix(&b.chi().unwrap(), rng.gen())
}

#[test]
fn representation_round_trips() {
    let mut rng = rng(3);
    for i in 0..300 {
        let chi = if i % 2 == 0 { cptp_chi(&mut rng) } else { unital_chi(&mut rng) };
        let via_kraus = chi_from_kraus(&kraus_from_chi(&chi).unwrap());
        assert!(via_kraus.frobenius_distance(&chi) < 1e-8);
        let via_affine = chi_from_affine(&affine_from_chi(&chi));
        assert!(via_affine.frobenius_distance(&chi) < 1e-8);
        let via_choi = chi_from_choi(&choi_from_chi(&chi));
        assert!(via_choi.frobenius_distance(&chi) < 1e-8);
    }
}

#[test]
fn applications_agree() {
    let mut rng = rng(4);
    for _ in 0..500 {
        let kraus = cptp_kraus(&mut rng);
        let chi = chi_from_kraus(&kraus);
        let affine = affine_from_chi(&chi);
        for _ in 0..3 {
            let rho = state(&mut rng);
            let by_chi = apply_chi(&chi, &rho);
            let by_kraus = apply_kraus(&kraus, &rho);
            assert!(by_chi.matrix.approx_eq(&by_kraus.matrix, 1e-9));
            assert!(affine.apply(rho.bloch()).distance(by_kraus.bloch()) < 1e-9);
        }
    }
}

#[test]
fn cptp_maps_keep_the_ball() {
    let mut rng = rng(5);
    for _ in 0..50 {
        let chi = cptp_chi(&mut rng);
        let affine = affine_from_chi(&chi);
        for _ in 0..200 {
            assert!(affine.apply(bloch(&mut rng, false)).norm() <= 1.0 + 1e-8);
        }
    }
}

#[test]
fn trace_preservation_matches_reduced_choi() {
    let mut rng = rng(6);
    let half_identity = ComplexMatrix::identity(2).scale_real(0.5);
    for i in 0..200 {
        let kraus = if i % 2 == 0 {
            cptp_kraus(&mut rng)
        } else {
            KrausSet::new((0..2).map(|_| complex_matrix(&mut rng, 2)).collect()).unwrap()
        };
        let chi = chi_from_kraus(&kraus);
        let tp = is_trace_preserving(&chi, 1e-8).trace_preserving;
        // Normalize to trace one before reading the marginal.
        let choi = choi_from_chi(&chi);
        let marginal = choi.reduced_input().scale_real(1.0 / choi.trace());
        assert_eq!(tp, marginal.approx_eq(&half_identity, 1e-8) && (choi.trace() - 1.0).abs() < 1e-8);
        assert_eq!(tp, i % 2 == 0);
    }
}

#[test]
fn dephasing_composes_additively() {
    for (t1, t2) in [(5.0, 7.0), (20.0, 60.0), (0.0, 80.0), (33.3, 0.1)] {
        let a = StandardChannel::Dephasing { time: t1, t2: 100.0 }.chi().unwrap();
        let b = StandardChannel::Dephasing { time: t2, t2: 100.0 }.chi().unwrap();
        let ab = StandardChannel::Dephasing { time: t1 + t2, t2: 100.0 }.chi().unwrap();
        assert!(compose(&a, &b).unwrap().frobenius_distance(&ab) < 1e-9);
    }
}

// ---- state tomography ----

#[test]
fn consistent_records_are_recovered() {
    let mut rng = rng(7);
    for _ in 0..500 {
        let pure = rng.gen_bool(0.2);
        let r = bloch(&mut rng, pure);
        let est = reconstruct_state(&exact_records(r), 1e-6).unwrap();
        assert!(est.rho.bloch().distance(r) < 1e-5);
        assert!(est.residual < 1e-6);
        assert!(est.complete);
    }
}

#[test]
fn any_records_give_a_valid_state() {
    let mut rng = rng(8);
    for _ in 0..300 {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let records: Vec<ExpectationRecord> =
            Axis::ALL.iter().map(|&a| ExpectationRecord::exact(a, v[a.index()])).collect();
        let est = reconstruct_state(&records, 1e-6).unwrap();
        assert!(DensityMatrix::new(est.rho.matrix().clone()).is_ok());
        let r = BlochVector::from_array(v);
        if r.norm() > 1.0 {
            // The minimizer is the radial projection; the residual is the shortfall.
            assert!(est.rho.bloch().norm() <= 1.0 + 1e-9);
            assert!((est.residual - (r.norm() - 1.0)).abs() < 1e-4);
            assert!(est.rho.bloch().distance(r.clamped_to_ball()) < 1e-4);
        } else {
            assert!(est.residual < 1e-6);
        }
    }
}

#[test]
fn entropy_weight_only_breaks_ties() {
    let mut rng = rng(9);
    for _ in 0..100 {
        let r = bloch(&mut rng, false);
        let records: Vec<ExpectationRecord> = exact_records(r).into_iter().filter(|rec| rec.axis != Axis::Y).collect();
        let a = reconstruct_state(&records, 1e-6).unwrap().rho.bloch();
        let b = reconstruct_state(&records, 1e-7).unwrap().rho.bloch();
        assert!((a.x - b.x).abs() < 1e-5 && (a.z - b.z).abs() < 1e-5);
        assert!(a.y.abs() < 1e-6);
    }
}

// ---- process tomography ----

fn exact_chi(channel: &ChiMatrix) -> ChiMatrix {
    let records = run_channel_experiment(&ExperimentConfig::new(100.0, 0.0), channel).unwrap();
    run_process_tomography(&record_sets(&records)).unwrap().chi
}

#[test]
fn exact_pipeline_recovers_random_channels() {
    let mut rng = rng(10);
    for _ in 0..200 {
        let chi = cptp_chi(&mut rng);
        let d = exact_chi(&chi).frobenius_distance(&chi);
        assert!(d < 1e-7, "{d}");
    }
}

#[test]
fn beta_is_input_independent() {
    let standard = BetaTensor::standard();
    let ops = PauliBasis::get().operation_elements.clone();
    let rebuilt = build_beta(&ops, &InputBasis::standard().matrices()).unwrap();
    assert_eq!(rebuilt.matrix(), standard.matrix());
    assert_eq!(rebuilt.pseudoinverse(), standard.pseudoinverse());
}

#[test]
fn tomography_is_linear_in_the_channel() {
    let mut rng = rng(11);
    for _ in 0..50 {
        let a = cptp_chi(&mut rng);
        let b = cptp_chi(&mut rng);
        let p: f64 = rng.gen();
        let mixed = exact_chi(&a.mix(&b, p));
        let expected = exact_chi(&a).mix(&exact_chi(&b), p);
        assert!(mixed.frobenius_distance(&expected) < 1e-8);
    }
}

#[test]
fn affine_and_chi_routes_agree() {
    let mut rng = rng(12);
    let inputs = InputBasis::standard().states();
    for _ in 0..100 {
        let chi = cptp_chi(&mut rng);
        let states = inputs
            .iter()
            .map(|rho| {
                let out = apply_chi(&chi, rho).bloch();
                reconstruct_state(&exact_records(out), 1e-6).unwrap()
            })
            .collect::<Vec<_>>();
        let blochs: [BlochVector; 4] = std::array::from_fn(|i| states[i].rho.bloch());
        let direct = affine_from_state_images(&StateImages::from_input_outputs(&blochs));
        let estimate = estimate_from_states(states).unwrap();
        assert!(direct.max_abs_difference(&affine_from_chi(&estimate.chi)) < 1e-8);
    }
}

// ---- physical projection ----

fn assert_cptp(chi: &ChiMatrix) {
    assert!(is_completely_positive(chi, 1e-9).unwrap().completely_positive);
    assert!(is_trace_preserving(chi, 1e-8).trace_preserving);
}

#[test]
fn projection_output_is_always_cptp() {
    let mut rng = rng(13);
    for _ in 0..30 {
        let chi = ChiMatrix::new(hermitian(&mut rng, 4)).unwrap();
        let result = project_to_physical(&chi).unwrap();
        assert_cptp(&result.chi_tilde);
    }
}

#[test]
fn projection_is_idempotent() {
    let mut rng = rng(14);
    for _ in 0..10 {
        let noisy = ChiMatrix::new(&cptp_chi(&mut rng).into_matrix() + &hermitian(&mut rng, 4).scale_real(0.1)).unwrap();
        let first = project_to_physical(&noisy).unwrap();
        let second = project_to_physical(&first.chi_tilde).unwrap();
        assert!(second.distance < 1e-6, "{}", second.distance);
    }
}

#[test]
fn projection_distance_is_dominated_by_the_noise() {
    let mut rng = rng(15);
    for _ in 0..100 {
        let truth = cptp_chi(&mut rng);
        let h = hermitian(&mut rng, 4);
        let noise = h.scale_real(0.1 / h.frobenius_norm());
        let noisy = ChiMatrix::new(truth.matrix() + &noise).unwrap();
        let result = project_to_physical(&noisy).unwrap();
        assert_cptp(&result.chi_tilde);
        assert!(result.distance <= 0.1 + 1e-6, "{}", result.distance);
    }
}

#[test]
fn restarts_agree_on_standard_inputs() {
    let inputs = [
        chi_from_affine(&AffineMap::diagonal([1.2, 1.2, 1.0], [0.0; 3])),
        chi_from_affine(&AffineMap::diagonal([1.0, -1.0, 1.0], [0.0; 3])),
        ChiMatrix::from_real_diagonal([0.75, 0.0, 0.0, 0.25]),
    ];
    for chi in inputs {
        let spread = project_to_physical(&chi).unwrap().restart_spread().unwrap();
        assert!(spread < 1e-4, "{spread}");
    }
}

#[test]
fn tp_normalize_completes_random_sets() {
    let mut rng = rng(16);
    for _ in 0..200 {
        let k = rng.gen_range(1..=4);
        let set = KrausSet::new((0..k).map(|_| complex_matrix(&mut rng, 2)).collect()).unwrap();
        let normalized = tp_normalize(&set).unwrap();
        assert!(normalized.completeness_deficit() < 1e-10);
        assert!(is_completely_positive(&chi_from_kraus(&normalized), 1e-9).unwrap().completely_positive);
    }
}

// ---- metrics ----

#[test]
fn norm_identities_on_hermitian_matrices() {
    let mut rng = rng(17);
    for _ in 0..500 {
        let x = hermitian(&mut rng, 4);
        let n = matrix_norms(&x).unwrap();
        let half = n.half_trace.unwrap();
        assert!((n.p1 - n.p_inf).abs() < 1e-10);
        assert!(n.p2 <= n.frobenius + 1e-10);
        assert!(n.frobenius <= 2.0 * half + 1e-10);
    }
}

#[test]
fn state_metric_relations() {
    let mut rng = rng(18);
    for _ in 0..500 {
        let (a, b, c) = (state(&mut rng), state(&mut rng), state(&mut rng));
        let (a, b, c) = (a.matrix(), b.matrix(), c.matrix());
        let dab = trace_distance(a, b).unwrap();
        let dbc = trace_distance(b, c).unwrap();
        let dac = trace_distance(a, c).unwrap();
        assert!(dab + dbc - dac >= -1e-9);
        let f = fidelity(a, b).unwrap();
        assert!(dab >= 1.0 - f.sqrt() - 1e-9);
        assert!(dab <= (1.0 - f).sqrt() + 1e-9, "D={dab} F={f} a={:?} b={:?}", a, b);
        let bures = bures_metric(a, b).unwrap();
        assert!((bures * bures - (2.0 - 2.0 * f.sqrt())).abs() < 1e-12);
        let cm = c_metric(a, b).unwrap();
        assert!((cm * cm - (1.0 - f)).abs() < 1e-12);
    }
}

// ---- experiment simulator ----

#[test]
fn eighty_ns_collapses_towards_z() {
    for shots in [Shots::Exact, Shots::Finite(10_000)] {
        let config = ExperimentConfig::preset("paper-80ns").unwrap().with_shots(shots).with_seed(1);
        let estimate = run_process_tomography(&record_sets(&run_experiment(&config).unwrap())).unwrap();
        let projected = project_to_physical(&estimate.chi).unwrap();
        let e = affine_from_chi(&projected.chi_tilde).e;
        assert!(e[2][2] > e[0][0].abs() && e[2][2] > e[1][1].abs(), "{shots}: {e:?}");
    }
}

#[test]
fn records_do_not_depend_on_thread_count() {
    let config = ExperimentConfig::preset("paper-20ns")
        .unwrap()
        .with_shots(Shots::Finite(2_000))
        .with_seed(99);
    let reference = run_experiment(&config).unwrap();
    for threads in [1, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let records = pool.install(|| run_experiment(&config).unwrap());
        assert_eq!(records, reference);
    }
}

#[test]
fn complex_generator_covers_the_square() {
    // Guards the generators above against degenerate output.
    let mut rng = rng(19);
    let values: Vec<Complex64> = (0..1000).map(|_| common::complex(&mut rng)).collect();
    assert!(values.iter().any(|c| c.re < -0.9) && values.iter().any(|c| c.im > 0.9));
}
