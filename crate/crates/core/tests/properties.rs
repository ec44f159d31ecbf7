use cone_mt_core::cone_domain::{integrate, ConeDomain, GridFunction, LogGrid};
use cone_mt_core::cone_operator::DiscreteOperator;
use cone_mt_core::corpus::{random_smooth, rng, sample_bumps, Bump};
use cone_mt_core::mellin::{transform_at, HalfLineFunction};
use cone_mt_core::norms::{luxemburg_norm, lp_gamma_norm, ExpSquare, NormSpec};
use cone_mt_core::rearrangement::rearrange;
use num_complex::Complex64;
use proptest::prelude::*;

fn cone_grid(n: usize) -> LogGrid {
    LogGrid::new(ConeDomain::full_cone(1.0).unwrap(), n, n).unwrap()
}

fn strip_grid(n: usize) -> LogGrid {
    LogGrid::new(ConeDomain::bounded_strip(3.0).unwrap(), n, n).unwrap()
}

prop_compose! {
    fn bump()(cx in -0.3..0.3, cy in -0.3..0.3, a0 in 0.1..0.3, a1 in 0.1..0.3,
              angle in 0.0..3.14, amplitude in 0.2..1.5) -> Bump {
        Bump { center: (cx, cy), axes: (a0, a1), angle, amplitude }
    }
}

fn smooth(seed: u64) -> GridFunction {
    random_smooth(strip_grid(21), 3, 1.0, &mut rng(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lp_norm_triangle_inequality(a in any::<u64>(), b in any::<u64>(), p in 1.0..6.0, gamma in -1.0..1.0) {
        let spec = NormSpec::new(p, gamma, 0).unwrap();
        let (u, v) = (smooth(a), smooth(b));
        let sum = u.lin_comb(1.0, &v, 1.0).unwrap();
        let lhs = lp_gamma_norm(&sum, &spec).unwrap();
        let rhs = lp_gamma_norm(&u, &spec).unwrap() + lp_gamma_norm(&v, &spec).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn luxemburg_norm_is_a_norm(a in any::<u64>(), b in any::<u64>(), c in 0.1..5.0, alpha in 0.5..12.0) {
        let n = ExpSquare::new(alpha).unwrap();
        let (u, v) = (smooth(a), smooth(b));
        let nu = luxemburg_norm(&u, &n).unwrap();
        let scaled = luxemburg_norm(&u.scaled(c), &n).unwrap();
        prop_assert!((scaled - c * nu).abs() <= 1e-8 * c * nu);
        let sum = luxemburg_norm(&u.lin_comb(1.0, &v, 1.0).unwrap(), &n).unwrap();
        prop_assert!(sum <= (nu + luxemburg_norm(&v, &n).unwrap()) * (1.0 + 1e-8));
        prop_assert_eq!(luxemburg_norm(&u.abs(), &n).unwrap(), nu);
    }

    #[test]
    fn mellin_transform_is_linear(a in -3.0..3.0, b in -3.0..3.0, re in -0.5..0.5, im in -20.0..20.0) {
        let f = HalfLineFunction::from_log_fn(12.0, 2001, |s| (-s * s).exp()).unwrap();
        let g = HalfLineFunction::from_log_fn(12.0, 2001, |s| s * (-(s - 0.5) * (s - 0.5)).exp()).unwrap();
        let h = HalfLineFunction::from_log_fn(12.0, 2001, |s| {
            a * (-s * s).exp() + b * s * (-(s - 0.5) * (s - 0.5)).exp()
        })
        .unwrap();
        let z = Complex64::new(re, im);
        let lhs = transform_at(&h, z);
        let rhs: Complex64 = transform_at(&f, z) * a + transform_at(&g, z) * b;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn rearrangement_is_equimeasurable_and_monotone(bumps in prop::collection::vec(bump(), 1..3)) {
        let u = sample_bumps(cone_grid(65), &bumps);
        let (profile, star) = rearrange(&u).unwrap();
        for g in [|s: f64| s * s, |s: f64| s.powi(4), |s: f64| (s * s).exp_m1()] {
            let before = integrate(&u.map(g)).unwrap();
            let after = integrate(&star.map(g)).unwrap();
            prop_assert!((before - after).abs() <= 1e-12 * before.abs().max(1e-300));
        }
        prop_assert!(profile.values().windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(profile.grid().windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(star.max_abs(), u.max_abs());
    }

    #[test]
    fn rearrangement_ignores_the_position_of_values(bumps in prop::collection::vec(bump(), 1..3)) {
        // Reflecting through the log-origin permutes the nodes of a centred grid.
        let u = sample_bumps(cone_grid(33), &bumps);
        let mirrored: Vec<Bump> = bumps
            .iter()
            .map(|b| Bump { center: (-b.center.0, -b.center.1), ..*b })
            .collect();
        let v = sample_bumps(cone_grid(33), &mirrored);
        let (_, a) = rearrange(&u).unwrap();
        let (_, b) = rearrange(&v).unwrap();
        let worst = a.values().iter().zip(b.values()).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        prop_assert!(worst <= 1e-12);
    }

    #[test]
    fn operator_is_symmetric_and_positive(a in any::<u64>(), b in any::<u64>()) {
        let op = DiscreteOperator::new(strip_grid(21));
        let (u, v) = (smooth(a), smooth(b));
        let au = op.apply(&u).unwrap();
        let av = op.apply(&v).unwrap();
        let left = op.inner(au.values(), v.values());
        let right = op.inner(u.values(), av.values());
        prop_assert!((left - right).abs() <= 1e-10 * (left.abs() + right.abs() + 1.0));
        prop_assert!(op.energy_form(&u).unwrap() >= 0.0);
    }

    #[test]
    fn binary_round_trip(a in any::<u64>()) {
        let u = smooth(a);
        let mut bytes = Vec::new();
        u.write_binary(&mut bytes).unwrap();
        let back = GridFunction::read_binary(bytes.as_slice()).unwrap();
        prop_assert_eq!(back, u);
    }
}
