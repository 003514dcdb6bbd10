//! Cross-module properties of the public API.

use gmequiv::diagnostics::{appendix_b_decomposition, condition_i_statistic};
use gmequiv::experiments::{path_from_discrete, reconstruct_discrete_from_path, simulate_e1, Variant};
use gmequiv::fourier::sample_ellipsoid;
use gmequiv::kernel::design_points;
use gmequiv::{ClassSpec, FourierFunction, GaussMarkovKernel, KrigingInterpolator};
use proptest::prelude::*;

fn kernels() -> Vec<GaussMarkovKernel> {
    vec![
        GaussMarkovKernel::bm(),
        GaussMarkovKernel::ou(0.5).unwrap(),
        GaussMarkovKernel::ou(2.0).unwrap(),
        GaussMarkovKernel::slepian(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gram_matrices_are_symmetric_and_positive_definite(
        rate in 0.1f64..3.0,
        mut pts in prop::collection::vec(0.01f64..1.0, 2..12),
    ) {
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let k = GaussMarkovKernel::ou(rate).unwrap();
        let g = k.gram_matrix(&pts).unwrap();
        prop_assert!((&g - g.transpose()).amax() < 1e-14);
        prop_assert!(g.cholesky().is_some());
    }

    #[test]
    fn kriging_reproduces_knots_on_both_routes(n in 1usize..40, seed in any::<u64>(), which in 0usize..4) {
        let k = &kernels()[which];
        let y = simulate_e1(k, &FourierFunction::cosine(1, 1.0), n, seed, Variant::Original).unwrap().values;
        let interp = KrigingInterpolator::new(k, n).unwrap();
        for (i, t) in design_points(n).into_iter().skip(1).enumerate() {
            let scale = 1.0 + y[i].abs();
            prop_assert!((interp.interpolate(&y, t).unwrap() - y[i]).abs() <= 1e-9 * scale);
        }
        for t in [0.013, 0.37, 0.5, 0.999] {
            let a = interp.interpolate(&y, t).unwrap();
            let b = interp.interpolate_tridiagonal(&y, t).unwrap();
            prop_assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn path_round_trip_recovers_the_sample(n in 1usize..48, seed in any::<u64>(), which in 0usize..4) {
        let k = &kernels()[which];
        let f = FourierFunction::cosine(2, 0.7).plus(&FourierFunction::sine(1, 0.3));
        let sample = simulate_e1(k, &f, n, seed, Variant::CellAveraged).unwrap();
        let path = path_from_discrete(k, &sample, 4, seed ^ 1).unwrap();
        let back = reconstruct_discrete_from_path(&path, n).unwrap();
        for (a, b) in back.values.iter().zip(&sample.values) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn discretisation_split_is_consistent(seed in any::<u64>(), n in 2usize..64, beta in 0.6f64..3.0) {
        let spec = ClassSpec::sobolev(beta, 1.0).unwrap();
        let f = sample_ellipsoid(&spec, 32, seed).unwrap();
        let terms = appendix_b_decomposition(&f, n).unwrap();
        prop_assert!(terms.parseval_residual.abs() <= 1e-10);
        prop_assert!(terms.split_bound_holds);
        prop_assert!(terms.a_sum >= 0.0 && terms.b_sum >= 0.0 && terms.c_sum >= 0.0);
    }
}

#[test]
fn simulation_is_reproducible_per_seed() {
    let k = GaussMarkovKernel::ou(1.0).unwrap();
    let f = FourierFunction::cosine(1, 1.0);
    let a = simulate_e1(&k, &f, 64, 11, Variant::Original).unwrap();
    let b = simulate_e1(&k, &f, 64, 11, Variant::Original).unwrap();
    let c = simulate_e1(&k, &f, 64, 12, Variant::Original).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.values, c.values);
}

#[test]
fn expression_kernel_matches_preset() {
    let custom = GaussMarkovKernel::custom("bm-expr", "t", "1").unwrap();
    let bm = GaussMarkovKernel::bm();
    for (s, t) in [(0.1, 0.9), (0.5, 0.5), (0.73, 0.2)] {
        assert!((custom.covariance(s, t).unwrap() - bm.covariance(s, t).unwrap()).abs() < 1e-15);
    }
    assert!(custom.validate(201).unwrap().all_passed());
}

#[test]
fn constant_drift_has_no_discretisation_gap() {
    for k in kernels() {
        for n in [1, 7, 64] {
            assert!(condition_i_statistic(&k, &FourierFunction::constant(2.5), n).unwrap().abs() < 1e-12);
        }
    }
}
