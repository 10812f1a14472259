mod common;

use cvalue_core::affine::{u_quadratic, QuadraticUInputs};
use cvalue_core::cvalue::{c_value, win, ComparisonProblem};
use cvalue_core::estimators::{two_source_posterior, two_source_spatial_posterior};
use cvalue_core::normal_means::{subspace_bound, SubspaceShrinkageSpec};
use cvalue_core::simulation::format_f64;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn vec_strategy(n: usize, scale: f64) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-scale..scale, n).prop_map(DVector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn u_is_the_supremum_of_the_feasible_set(
        gamma in -50.0f64..50.0,
        eta in -4.0f64..4.0,
        rho in 0.0f64..30.0,
        nu in 0.0f64..8.0,
    ) {
        let u = u_quadratic(QuadraticUInputs { gamma, eta, rho, nu }).unwrap();
        prop_assert!(u >= 0.0);
        let lhs = |x: f64| x - eta.abs() * (rho + nu * x).sqrt();
        if u > 0.0 {
            prop_assert!(lhs(u) <= gamma + 1e-8 * u.max(1.0) + 1e-8 * gamma.abs());
        }
        let beyond = u + 1e-6 * u.max(1.0);
        prop_assert!(lhs(beyond) > gamma - 1e-8 * u.max(1.0) || lhs(0.0) > gamma);
        prop_assert!((u - common::u_bisection(gamma, eta, rho, nu)).abs() <= 1e-8 * u.max(1.0));
    }

    #[test]
    fn u_is_monotone_in_gamma(gamma in -20.0f64..20.0, step in 0.0f64..5.0, eta in -3.0f64..0.0, rho in 0.0f64..10.0, nu in 0.0f64..4.0) {
        let a = u_quadratic(QuadraticUInputs { gamma, eta, rho, nu }).unwrap();
        let b = u_quadratic(QuadraticUInputs { gamma: gamma + step, eta, rho, nu }).unwrap();
        prop_assert!(b >= a - 1e-9 * a.max(1.0));
    }

    #[test]
    fn subspace_bound_is_non_increasing_and_c_is_a_level(y in vec_strategy(8, 4.0), tau in 0.2f64..3.0) {
        let spec = SubspaceShrinkageSpec::lindley_smith(y, tau).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..20 {
            let b = subspace_bound(&spec, i as f64 / 20.0).unwrap();
            prop_assert!(b <= prev + 1e-9 * prev.abs().max(1.0));
            prev = b;
        }
        let c = c_value(&spec).unwrap().c_value;
        prop_assert!((0.0..=1.0).contains(&c));
    }

    #[test]
    fn swapping_estimates_negates_the_win(theta in vec_strategy(5, 3.0), a in vec_strategy(5, 3.0), b in vec_strategy(5, 3.0)) {
        let y = theta.clone();
        let fwd = win(&theta, &ComparisonProblem::new(y.clone(), a.clone(), b.clone()).unwrap()).unwrap();
        let back = win(&theta, &ComparisonProblem::new(y, b, a).unwrap()).unwrap();
        prop_assert!((fwd + back).abs() <= 1e-12 * fwd.abs().max(1.0));
    }

    #[test]
    fn floats_round_trip_through_text(bits in any::<u64>()) {
        let v = f64::from_bits(bits);
        prop_assume!(v.is_finite());
        let back: f64 = format_f64(v).parse().unwrap();
        prop_assert_eq!(back.to_bits(), v.to_bits());
    }

    #[test]
    fn pooled_estimates_are_affine_in_y(
        y1 in vec_strategy(4, 5.0),
        y2 in vec_strategy(4, 5.0),
        y3 in vec_strategy(4, 5.0),
        z in vec_strategy(4, 5.0),
        sy in 0.1f64..3.0,
        sz in 0.1f64..3.0,
        sd in 0.0f64..2.0,
    ) {
        let k = DMatrix::from_fn(4, 4, |i, j| (-(i as f64 - j as f64).powi(2) / 4.0).exp());
        let est = |y: &DVector<f64>| two_source_spatial_posterior(y, &z, sy, sz, sd, &k).unwrap().estimate;
        let d1 = est(&(&y1 + &y2)) - est(&y2);
        let d2 = est(&(&y1 + &y3)) - est(&y3);
        prop_assert!((d1 - d2).amax() <= 1e-9 * (y1.amax() + y2.amax() + y3.amax() + 1.0));
        let plain = two_source_posterior(&y1, &z, sy, sz, sd).unwrap().estimate;
        let spatial = two_source_spatial_posterior(&y1, &z, sy, sz, sd, &DMatrix::zeros(4, 4)).unwrap().estimate;
        prop_assert!((plain - spatial).amax() <= 1e-10 * (y1.amax() + z.amax() + 1.0));
    }
}
