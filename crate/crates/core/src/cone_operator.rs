//! The discrete cone Laplacian `-Δ_B` in log coordinates, Krylov solvers and
//! the first Dirichlet eigenpair.
//!
//! Under `r = -ln x1` the operator `(x1 d/dx1)^2 + (d/dx2)^2` is the flat
//! Laplacian, so the discretization is the standard 5-point stencil acting on
//! interior nodes with homogeneous Dirichlet data on every edge, including the
//! truncation edge `r = r_max` near the conical point.

use crate::cone_domain::{GridFunction, LogGrid};
use crate::error::{ConeError, Result};

/// Default relative residual for CG solves.
pub const CG_TOL: f64 = 1e-10;

/// Five-point Dirichlet Laplacian on a [`LogGrid`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteOperator {
    grid: LogGrid,
    cr: f64,
    cy: f64,
}

/// Outcome of a linear solve.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub solution: GridFunction,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// First Dirichlet eigenpair.
#[derive(Clone, Debug)]
pub struct EigenResult {
    pub lambda1: f64,
    /// Positive in the interior, unit weighted L² norm.
    pub eigenfunction: GridFunction,
    /// `‖A v - λ v‖ / ‖v‖` in the weighted L² norm.
    pub residual: f64,
    pub outer_iterations: usize,
}

impl DiscreteOperator {
    pub fn new(grid: LogGrid) -> Self {
        Self {
            grid,
            cr: 1.0 / (grid.hr() * grid.hr()),
            cy: 1.0 / (grid.hy() * grid.hy()),
        }
    }

    pub fn grid(&self) -> &LogGrid {
        &self.grid
    }

    /// Stencil application to raw nodal data. Boundary entries of `x` are
    /// ignored (treated as the zero Dirichlet trace) and boundary entries of
    /// `out` are set to zero.
    pub fn apply_raw(&self, x: &[f64], out: &mut [f64]) {
        let (nr, ny) = (self.grid.nr(), self.grid.ny());
        let diag = 2.0 * (self.cr + self.cy);
        out[..ny].fill(0.0);
        out[(nr - 1) * ny..].fill(0.0);
        for i in 1..nr - 1 {
            let row = i * ny;
            out[row] = 0.0;
            out[row + ny - 1] = 0.0;
            for j in 1..ny - 1 {
                let k = row + j;
                let up = if i + 2 < nr { x[k + ny] } else { 0.0 };
                let down = if i > 1 { x[k - ny] } else { 0.0 };
                let right = if j + 2 < ny { x[k + 1] } else { 0.0 };
                let left = if j > 1 { x[k - 1] } else { 0.0 };
                out[k] = diag * x[k] - self.cr * (up + down) - self.cy * (left + right);
            }
        }
    }

    /// `A u`, zero at Dirichlet nodes.
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        self.check_grid(u)?;
        let mut out = vec![0.0; self.grid.len()];
        self.apply_raw(u.values(), &mut out);
        Ok(GridFunction::new(self.grid, out)?.with_dirichlet())
    }

    /// Quadrature inner product `Σ w_k a_k b_k` over interior nodes.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let (nr, ny) = (self.grid.nr(), self.grid.ny());
        let mut s = 0.0;
        for i in 1..nr - 1 {
            let row = i * ny;
            for j in 1..ny - 1 {
                s += a[row + j] * b[row + j];
            }
        }
        s * self.grid.hr() * self.grid.hy()
    }

    /// Discrete Dirichlet energy `⟨A u, u⟩` (the summation-by-parts form of `∫|∇_B u|²`).
    pub fn energy_form(&self, u: &GridFunction) -> Result<f64> {
        let au = self.apply(u)?;
        Ok(self.inner(au.values(), u.values()))
    }

    fn check_grid(&self, u: &GridFunction) -> Result<()> {
        if u.grid() == &self.grid {
            Ok(())
        } else {
            Err(ConeError::Shape("function and operator live on different grids".into()))
        }
    }

    fn max_iterations(&self) -> usize {
        20 * (self.grid.nr() + self.grid.ny()) + 1000
    }

    /// Conjugate gradients for `A u = b` with relative residual `tol`.
    pub fn solve(&self, b: &GridFunction, tol: f64) -> Result<SolveResult> {
        self.check_grid(b)?;
        b.check_finite("solve rhs")?;
        if !(tol > 0.0) {
            return Err(ConeError::InvalidParameter(format!("tol must be positive, got {tol}")));
        }
        let (x, iterations, rel) = self.cg(b.values(), None, 0.0, tol)?;
        Ok(SolveResult {
            solution: GridFunction::new(self.grid, x)?.with_dirichlet(),
            iterations,
            relative_residual: rel,
        })
    }

    /// [`DiscreteOperator::solve`] starting from `x0`.
    pub fn solve_from(&self, b: &GridFunction, x0: &GridFunction, tol: f64) -> Result<SolveResult> {
        self.check_grid(b)?;
        self.check_grid(x0)?;
        b.check_finite("solve rhs")?;
        if !(tol > 0.0) {
            return Err(ConeError::InvalidParameter(format!("tol must be positive, got {tol}")));
        }
        let (x, iterations, rel) = self.cg(b.values(), Some(x0.values()), 0.0, tol)?;
        Ok(SolveResult {
            solution: GridFunction::new(self.grid, x)?.with_dirichlet(),
            iterations,
            relative_residual: rel,
        })
    }

    /// CG on `(A - shift I) x = b`, interior unknowns only, optional warm start.
    fn cg(
        &self,
        b: &[f64],
        x0: Option<&[f64]>,
        shift: f64,
        tol: f64,
    ) -> Result<(Vec<f64>, usize, f64)> {
        let n = self.grid.len();
        let mut b_in = b.to_vec();
        self.zero_boundary(&mut b_in);
        let b_norm = self.inner(&b_in, &b_in).sqrt();
        if b_norm == 0.0 {
            return Ok((vec![0.0; n], 0, 0.0));
        }
        let mut x = match x0 {
            Some(x0) => {
                let mut x = x0.to_vec();
                self.zero_boundary(&mut x);
                x
            }
            None => vec![0.0; n],
        };
        let mut ap = vec![0.0; n];
        let mut r = b_in.clone();
        if x0.is_some() {
            self.apply_raw(&x, &mut ap);
            for k in 0..n {
                r[k] -= ap[k] - shift * x[k];
            }
            self.zero_boundary(&mut r);
        }
        let mut p = r.clone();
        let mut rr = self.inner(&r, &r);
        let max_iter = self.max_iterations();
        let target = tol * b_norm;
        let mut it = 0;
        while rr.sqrt() > target {
            if it >= max_iter {
                return Err(ConeError::Solver {
                    method: "conjugate gradient",
                    iterations: it,
                    residual: rr.sqrt() / b_norm,
                });
            }
            self.apply_raw(&p, &mut ap);
            if shift != 0.0 {
                for k in 0..n {
                    ap[k] -= shift * p[k];
                }
                self.zero_boundary(&mut ap);
            }
            let pap = self.inner(&p, &ap);
            if !(pap > 0.0) {
                return Err(ConeError::Solver {
                    method: "conjugate gradient (lost positive definiteness)",
                    iterations: it,
                    residual: rr.sqrt() / b_norm,
                });
            }
            let alpha = rr / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            let rr_new = self.inner(&r, &r);
            let beta = rr_new / rr;
            for k in 0..n {
                p[k] = r[k] + beta * p[k];
            }
            rr = rr_new;
            it += 1;
        }
        // True residual.
        self.apply_raw(&x, &mut ap);
        let mut res = 0.0;
        {
            let mut diff = vec![0.0; n];
            for k in 0..n {
                diff[k] = b_in[k] - (ap[k] - shift * x[k]);
            }
            self.zero_boundary(&mut diff);
            res += self.inner(&diff, &diff);
        }
        Ok((x, it, res.sqrt() / b_norm))
    }

    fn zero_boundary(&self, v: &mut [f64]) {
        let (nr, ny) = (self.grid.nr(), self.grid.ny());
        v[..ny].fill(0.0);
        v[(nr - 1) * ny..].fill(0.0);
        for i in 1..nr - 1 {
            v[i * ny] = 0.0;
            v[i * ny + ny - 1] = 0.0;
        }
    }

    /// Solves `A g = residual`: the steepest-descent direction in the energy inner product.
    pub fn riesz_gradient(&self, residual: &GridFunction, tol: f64) -> Result<GridFunction> {
        Ok(self.solve(residual, tol)?.solution)
    }

    /// First Dirichlet eigenvalue by inverse iteration with CG inner solves.
    ///
    /// A few unshifted steps give a Rayleigh quotient `ρ ≥ λ₁` close enough to
    /// `λ₁` that the shift `σ = 0.95 ρ` keeps `A - σ` positive definite; the
    /// shifted iteration then converges at rate `(λ₁ - σ)/(λ₂ - σ)`.
    pub fn first_eigenvalue(&self, tol: f64) -> Result<EigenResult> {
        if !(tol > 0.0) {
            return Err(ConeError::InvalidParameter(format!("tol must be positive, got {tol}")));
        }
        let n = self.grid.len();
        let mut v = vec![1.0; n];
        self.zero_boundary(&mut v);
        self.normalize(&mut v);
        let mut av = vec![0.0; n];
        let mut lambda = self.rayleigh(&v, &mut av);
        let mut shift = 0.0;
        let max_outer = 500;
        for outer in 1..=max_outer {
            let guess: Vec<f64> = v.iter().map(|x| x / (lambda - shift)).collect();
            let (x, _, _) = self.cg(&v, Some(&guess), shift, 1e-13)?;
            v = x;
            self.normalize(&mut v);
            let new_lambda = self.rayleigh(&v, &mut av);
            let change = (new_lambda - lambda).abs() / new_lambda;
            lambda = new_lambda;
            let residual = self.eigen_residual(&v, &av, lambda);
            if residual <= tol {
                return self.finish_eigen(v, lambda, residual, outer);
            }
            if shift == 0.0 && change < 1e-4 {
                shift = 0.95 * lambda;
            }
        }
        Err(ConeError::Solver {
            method: "inverse iteration",
            iterations: max_outer,
            residual: self.eigen_residual(&v, &av, lambda),
        })
    }

    fn finish_eigen(
        &self,
        mut v: Vec<f64>,
        lambda: f64,
        residual: f64,
        outer: usize,
    ) -> Result<EigenResult> {
        let sum: f64 = v.iter().sum();
        if sum < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let eigenfunction = GridFunction::new(self.grid, v)?.with_dirichlet();
        Ok(EigenResult {
            lambda1: lambda,
            eigenfunction,
            residual,
            outer_iterations: outer,
        })
    }

    fn normalize(&self, v: &mut [f64]) {
        let norm = self.inner(v, v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    }

    fn rayleigh(&self, v: &[f64], av: &mut [f64]) -> f64 {
        self.apply_raw(v, av);
        self.inner(av, v) / self.inner(v, v)
    }

    fn eigen_residual(&self, v: &[f64], av: &[f64], lambda: f64) -> f64 {
        let diff: Vec<f64> = av.iter().zip(v).map(|(a, x)| a - lambda * x).collect();
        (self.inner(&diff, &diff) / self.inner(v, v)).sqrt()
    }
}

/// MINRES for a symmetric (possibly indefinite) operator given as a closure.
///
/// The closure and the inner product must both act on the same index set;
/// callers working on grids pass the interior-masked operator and quadrature
/// inner product. Returns the solution, iteration count and true relative
/// residual.
pub fn minres(
    apply: impl Fn(&[f64], &mut [f64]),
    inner: impl Fn(&[f64], &[f64]) -> f64,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = b.len();
    let beta1 = inner(b, b).sqrt();
    let mut x = vec![0.0; n];
    if beta1 == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut v_old = vec![0.0; n];
    let mut v: Vec<f64> = b.iter().map(|bi| bi / beta1).collect();
    let mut w_old = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut av = vec![0.0; n];
    let (mut c_old, mut c, mut s_old, mut s) = (1.0, 1.0, 0.0, 0.0);
    let mut beta = beta1;
    let mut eta = beta1;
    let mut it = 0;
    while eta.abs() > tol * beta1 {
        if it >= max_iter {
            return Err(ConeError::Solver {
                method: "MINRES",
                iterations: it,
                residual: eta.abs() / beta1,
            });
        }
        apply(&v, &mut av);
        let alpha = inner(&v, &av);
        let mut v_new: Vec<f64> = (0..n).map(|k| av[k] - alpha * v[k] - beta * v_old[k]).collect();
        let beta_new = inner(&v_new, &v_new).sqrt();

        let rho0 = c * alpha - c_old * s * beta;
        let rho1 = rho0.hypot(beta_new);
        let rho2 = s * alpha + c_old * c * beta;
        let rho3 = s_old * beta;
        if rho1 == 0.0 {
            return Err(ConeError::Solver {
                method: "MINRES (breakdown)",
                iterations: it,
                residual: eta.abs() / beta1,
            });
        }
        let c_new = rho0 / rho1;
        let s_new = beta_new / rho1;
        let w_new: Vec<f64> = (0..n)
            .map(|k| (v[k] - rho3 * w_old[k] - rho2 * w[k]) / rho1)
            .collect();
        for k in 0..n {
            x[k] += c_new * eta * w_new[k];
        }
        eta *= -s_new;

        if beta_new > 0.0 {
            v_new.iter_mut().for_each(|e| *e /= beta_new);
        }
        v_old = std::mem::replace(&mut v, v_new);
        w_old = std::mem::replace(&mut w, w_new);
        beta = beta_new;
        c_old = c;
        s_old = s;
        c = c_new;
        s = s_new;
        it += 1;
        if beta_new == 0.0 {
            break;
        }
    }
    apply(&x, &mut av);
    let diff: Vec<f64> = (0..n).map(|k| b[k] - av[k]).collect();
    let rel = inner(&diff, &diff).sqrt() / beta1;
    Ok((x, it, rel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_domain::ConeDomain;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn strip(r_max: f64, n: usize) -> LogGrid {
        LogGrid::new(ConeDomain::bounded_strip(r_max).unwrap(), n, n).unwrap()
    }

    fn random_dirichlet(grid: LogGrid, rng: &mut ChaCha8Rng) -> GridFunction {
        let v: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        GridFunction::new(grid, v).unwrap().with_dirichlet()
    }

    #[test]
    fn separable_mode_is_an_eigenfunction_up_to_h2() {
        let r_max = 4.0;
        let g = strip(r_max, 129);
        let a = DiscreteOperator::new(g);
        let u = GridFunction::from_log_fn(g, |r, y| (PI * r / r_max).sin() * (PI * (y + 1.0) / 2.0).sin())
            .with_dirichlet();
        let au = a.apply(&u).unwrap();
        let lam = (PI / r_max).powi(2) + (PI / 2.0).powi(2);
        let err = au
            .values()
            .iter()
            .zip(u.values())
            .map(|(x, y)| (x - lam * y).abs())
            .fold(0.0, f64::max);
        assert!(err < lam * 1e-3, "{err}");
    }

    #[test]
    fn zero_and_linearity() {
        let g = strip(2.0, 17);
        let a = DiscreteOperator::new(g);
        assert_eq!(a.apply(&GridFunction::zeros(g)).unwrap().max_abs(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (u, v) = (random_dirichlet(g, &mut rng), random_dirichlet(g, &mut rng));
        let lhs = a.apply(&u.lin_comb(2.0, &v, -3.0).unwrap()).unwrap();
        let rhs = a.apply(&u).unwrap().lin_comb(2.0, &a.apply(&v).unwrap(), -3.0).unwrap();
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn operator_is_symmetric() {
        let g = strip(3.0, 33);
        let a = DiscreteOperator::new(g);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let (u, v) = (random_dirichlet(g, &mut rng), random_dirichlet(g, &mut rng));
            let auv = a.inner(a.apply(&u).unwrap().values(), v.values());
            let uav = a.inner(u.values(), a.apply(&v).unwrap().values());
            assert!((auv - uav).abs() <= 1e-12 * auv.abs().max(1.0));
        }
    }

    #[test]
    fn solve_recovers_manufactured_solution() {
        let g = strip(4.0, 65);
        let a = DiscreteOperator::new(g);
        let exact = GridFunction::from_log_fn(g, |r, y| (r * (4.0 - r)) * (1.0 - y * y) * (r + y).cos())
            .with_dirichlet();
        let b = a.apply(&exact).unwrap();
        let sol = a.solve(&b, 1e-12).unwrap();
        assert!(sol.relative_residual <= 1e-12 * 1.01);
        let err = sol.solution.lin_comb(1.0, &exact, -1.0).unwrap().max_abs();
        assert!(err < 1e-8 * exact.max_abs(), "{err}");
        let zero = a.solve(&GridFunction::zeros(g), 1e-10).unwrap();
        assert_eq!(zero.solution.max_abs(), 0.0);
        assert_eq!(zero.iterations, 0);
    }

    #[test]
    fn riesz_gradient_properties() {
        let g = strip(4.0, 65);
        let a = DiscreteOperator::new(g);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = random_dirichlet(g, &mut rng);
        let gv = a.riesz_gradient(&a.apply(&v).unwrap(), 1e-12).unwrap();
        assert!(gv.lin_comb(1.0, &v, -1.0).unwrap().max_abs() < 1e-8);
        assert_eq!(a.riesz_gradient(&GridFunction::zeros(g), 1e-10).unwrap().max_abs(), 0.0);
        let res = random_dirichlet(g, &mut rng);
        let gr = a.riesz_gradient(&res, 1e-12).unwrap();
        let lhs = a.energy_form(&gr).unwrap();
        let rhs = a.inner(gr.values(), res.values());
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs());
    }

    #[test]
    fn eigenvalue_matches_discrete_closed_form() {
        // Exact discrete eigenvalue of the 5-point Dirichlet Laplacian on the rectangle.
        let (r_max, n) = (4.0, 65);
        let g = strip(r_max, n);
        let a = DiscreteOperator::new(g);
        let e = a.first_eigenvalue(1e-8).unwrap();
        let disc = 4.0 / (g.hr() * g.hr()) * (PI * g.hr() / (2.0 * r_max)).sin().powi(2)
            + 4.0 / (g.hy() * g.hy()) * (PI * g.hy() / 4.0).sin().powi(2);
        assert_relative_eq!(e.lambda1, disc, max_relative = 1e-10);
        assert!(e.residual <= 1e-8);
        let ef = &e.eigenfunction;
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                assert!(ef.at(i, j) > 0.0);
                assert!((ef.at(i, j) - ef.at(i, n - 1 - j)).abs() < 1e-6 * ef.max_abs());
            }
        }
    }

    #[test]
    fn minres_solves_indefinite_diagonal_and_laplacian_shift() {
        let d: Vec<f64> = (0..50).map(|k| if k % 3 == 0 { -(k as f64 + 1.0) } else { k as f64 + 0.5 }).collect();
        let b: Vec<f64> = (0..50).map(|k| (k as f64).sin()).collect();
        let apply = |x: &[f64], out: &mut [f64]| {
            for k in 0..50 {
                out[k] = d[k] * x[k];
            }
        };
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let (x, _, rel) = minres(apply, dot, &b, 1e-12, 500).unwrap();
        assert!(rel < 1e-11);
        for k in 0..50 {
            assert!((x[k] - b[k] / d[k]).abs() < 1e-9);
        }

        // A - 1.5 λ₁ on a grid is indefinite.
        let g = strip(3.0, 33);
        let a = DiscreteOperator::new(g);
        let lam = a.first_eigenvalue(1e-8).unwrap().lambda1;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rhs = random_dirichlet(g, &mut rng);
        let shift = 1.5 * lam;
        let apply = |x: &[f64], out: &mut [f64]| {
            a.apply_raw(x, out);
            for k in 0..x.len() {
                out[k] -= shift * x[k];
            }
            a.zero_boundary(out);
        };
        let (x, _, rel) = minres(apply, |p, q| a.inner(p, q), rhs.values(), 1e-11, 5000).unwrap();
        assert!(rel < 1e-10, "{rel}");
        let xf = GridFunction::new(g, x).unwrap();
        let ax = a.apply(&xf).unwrap();
        let r = ax.lin_comb(1.0, &xf, -shift).unwrap().lin_comb(1.0, &rhs, -1.0).unwrap();
        assert!(a.inner(r.values(), r.values()).sqrt() < 1e-9 * a.inner(rhs.values(), rhs.values()).sqrt());
    }
}
