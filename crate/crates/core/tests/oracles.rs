use std::f64::consts::PI;
use std::fs::File;

use cone_mt_core::cone_domain::{ConeDomain, GridFunction, LogGrid};
use cone_mt_core::cone_operator::DiscreteOperator;
use cone_mt_core::mountain_pass::{mp_solve, newton_refine, Family, MPOptions, NonlinearitySpec};
use cone_mt_core::mt_lab::{moser_bar, MoserSequence};
use cone_mt_core::rearrangement::{reduce_to_1d, RadialProfile, ProfileVariable};
use cone_mt_core::OMEGA_1;

/// Smallest eigenvalue of the five-point Dirichlet Laplacian on an
/// `a × b` rectangle with `n × m` nodes, from the product of sine modes.
fn discrete_rectangle_eigenvalue(a: f64, b: f64, n: usize, m: usize) -> f64 {
    let (hr, hy) = (a / (n - 1) as f64, b / (m - 1) as f64);
    let sr = (PI * hr / (2.0 * a)).sin();
    let sy = (PI * hy / (2.0 * b)).sin();
    4.0 * sr * sr / (hr * hr) + 4.0 * sy * sy / (hy * hy)
}

#[test]
fn eigenvalue_matches_the_separable_discrete_spectrum() {
    for (r_max, n) in [(3.0, 31), (4.0, 41), (2.0, 33)] {
        let grid = LogGrid::new(ConeDomain::bounded_strip(r_max).unwrap(), n, 21).unwrap();
        let got = DiscreteOperator::new(grid).first_eigenvalue(1e-12).unwrap();
        let want = discrete_rectangle_eigenvalue(r_max, 2.0, n, 21);
        assert!((got.lambda1 - want).abs() <= 1e-8 * want, "{r_max}: {} vs {want}", got.lambda1);
    }
}

#[test]
fn moser_function_on_a_grid_approaches_its_closed_forms() {
    let m = MoserSequence::new(4.0).unwrap();
    let mut errors = Vec::new();
    for n in [129, 257] {
        let grid = LogGrid::new(ConeDomain::full_cone(1.5).unwrap(), n, n).unwrap();
        let u = m.on_grid(grid).unwrap();
        let e = DiscreteOperator::new(grid).energy_form(&u).unwrap();
        errors.push((e - m.dirichlet_integral_exact()).abs());
    }
    assert!(errors[1] < errors[0], "{errors:?}");
    assert!(errors[1] < 2e-2, "{errors:?}");
}

#[test]
fn reduction_of_the_truncated_logarithm() {
    // ln(1/ρ) capped at ρ = 1/2 with R = 1 gives w(t) = √(2ω₁)·min(t/2, ln 2).
    let grid = RadialProfile::uniform_grid(1.0, 2001);
    let p = RadialProfile::from_fn(ProfileVariable::Rho, grid, |r| (1.0 / r.max(0.5)).ln()).unwrap();
    let w = reduce_to_1d(&p, 1.0).unwrap();
    let scale = (2.0 * OMEGA_1).sqrt();
    for (t, v) in w.grid().iter().zip(w.values()) {
        let want = scale * (0.5 * t).min(2f64.ln());
        assert!((v - want).abs() < 2e-3, "t = {t}: {v} vs {want}");
    }
    // ∫ẇ² dt = 2π ∫ u'² ρ dρ = 2π ln 2 for the log part.
    let lhs = w.dirichlet_integral();
    let rhs = p.dirichlet_integral();
    assert!((lhs - rhs).abs() <= 1e-3 * rhs, "{lhs} vs {rhs}");
    assert!((rhs - 2.0 * PI * 2f64.ln()).abs() <= 1e-3 * rhs);
}

#[test]
fn moser_bar_reduction_identities() {
    let grid = RadialProfile::uniform_grid(1.0, 4001);
    let p = RadialProfile::from_fn(ProfileVariable::Rho, grid, moser_bar).unwrap();
    let w = reduce_to_1d(&p, 1.0).unwrap();
    let lhs = w.dirichlet_integral();
    let rhs = p.dirichlet_integral();
    assert!((lhs - rhs).abs() <= 1e-3 * rhs, "{lhs} vs {rhs}");
    let top = w.values().iter().fold(0.0_f64, |m, &v| m.max(v));
    assert_eq!(top, (2.0 * OMEGA_1).sqrt() * p.max_value());
}

#[test]
fn polynomial_mountain_pass_on_a_coarse_strip() {
    let grid = LogGrid::new(ConeDomain::bounded_strip(4.0).unwrap(), 25, 13).unwrap();
    let spec = NonlinearitySpec::new(Family::Polynomial { p_exp: 4.0 }).unwrap();
    let res = mp_solve(grid, &spec, MPOptions::default()).unwrap();
    assert!(res.grad_norm <= 1e-6, "gradient {}", res.grad_norm);
    assert!(res.level > 0.0);
    assert!(res.levels_nonincreasing());
    let newton = newton_refine(&res.u_star, &spec, 1e-9).unwrap();
    assert!(newton.residual <= 1e-9);
    assert!(!newton.trivial);
    let v = newton.solution.values();
    assert!(v.iter().all(|&x| x >= -1e-12) || v.iter().all(|&x| x <= 1e-12));
}

#[test]
fn grid_function_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let grid = LogGrid::new(ConeDomain::bounded_strip(2.0).unwrap(), 9, 7).unwrap();
    let u = GridFunction::from_log_fn(grid, |r, y| r.sin() * (1.0 - y * y)).with_dirichlet();
    let path = dir.path().join("u.bin");
    u.write_binary(File::create(&path).unwrap()).unwrap();
    let back = GridFunction::read_binary(File::open(&path).unwrap()).unwrap();
    assert_eq!(back, u);
}
