//! Weighted Lebesgue, cone Sobolev and Luxemburg norms.
//!
//! With `n = 1` the weighted norm
//! `|u|_{L_p^γ} = [∫ t^{2} |t^{-γ} u|^p dt/t dx]^{1/p}` becomes, in log
//! coordinates, `[∫∫ e^{-(2 - γp) r} |u|^p dr dy]^{1/p}`.

use crate::cone_domain::{cone_gradient, GridFunction, LogGrid};
use crate::error::{ConeError, Result};
use crate::EXP_GUARD;

/// `(p, γ, m)` for the spaces `L_p^γ` (m = 0) and `H_p^{1,γ}` (m = 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSpec {
    p: f64,
    gamma: f64,
    order: u32,
}

impl NormSpec {
    pub fn new(p: f64, gamma: f64, order: u32) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(ConeError::InvalidParameter(format!("p must be >= 1, got {p}")));
        }
        if !gamma.is_finite() {
            return Err(ConeError::InvalidParameter(format!("gamma = {gamma}")));
        }
        if order > 1 {
            return Err(ConeError::InvalidParameter(format!(
                "only orders 0 and 1 are supported, got {order}"
            )));
        }
        Ok(Self { p, gamma, order })
    }

    /// `L_2^1`, the plain L² norm in log coordinates.
    pub fn l2() -> Self {
        Self {
            p: 2.0,
            gamma: 1.0,
            order: 0,
        }
    }

    /// `H_2^{1,1}`.
    pub fn h1() -> Self {
        Self {
            p: 2.0,
            gamma: 1.0,
            order: 1,
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    fn weight_exponent(&self) -> f64 {
        2.0 - self.gamma * self.p
    }
}

/// `∫ e^{-(2-γp) r} g(node) dr dy` by the trapezoidal tensor rule.
fn weighted_integral(grid: &LogGrid, spec: &NormSpec, g: impl Fn(usize) -> f64) -> f64 {
    let c = spec.weight_exponent();
    let mut total = 0.0;
    for i in 0..grid.nr() {
        let w_r = if c == 0.0 { 1.0 } else { (-c * grid.r(i)).exp() };
        for j in 0..grid.ny() {
            total += grid.weight(i, j) * w_r * g(grid.idx(i, j));
        }
    }
    total
}

/// `|u|_{L_p^γ}`.
pub fn lp_gamma_norm(u: &GridFunction, spec: &NormSpec) -> Result<f64> {
    if spec.order != 0 {
        return Err(ConeError::Precondition(
            "lp_gamma_norm needs a NormSpec of order 0".into(),
        ));
    }
    u.check_finite("lp_gamma_norm")?;
    let v = u.values();
    let p = spec.p;
    let s = weighted_integral(u.grid(), spec, |k| v[k].abs().powf(p));
    Ok(s.powf(1.0 / p))
}

/// `‖ |∇_B u| ‖_{L_p^γ}`, the gradient seminorm alone.
pub fn gradient_seminorm(u: &GridFunction, spec: &NormSpec) -> Result<f64> {
    u.check_finite("gradient_seminorm")?;
    let (gr, gy) = cone_gradient(u);
    let (a, b) = (gr.values(), gy.values());
    let p = spec.p;
    let s = weighted_integral(u.grid(), spec, |k| a[k].hypot(b[k]).powf(p));
    Ok(s.powf(1.0 / p))
}

/// The Dirichlet seminorm `‖∇_B u‖₂` that normalizes every Moser–Trudinger functional.
pub fn dirichlet_seminorm(u: &GridFunction) -> Result<f64> {
    gradient_seminorm(u, &NormSpec::h1())
}

/// `(Σ_{|α|+|β|≤1} ‖weighted derivative‖_p^p)^{1/p}` over `u`, `t∂_t u` and `∂_x u`.
pub fn h1_norm(u: &GridFunction, spec: &NormSpec) -> Result<f64> {
    if spec.order != 1 {
        return Err(ConeError::Precondition(
            "h1_norm needs a NormSpec of order 1".into(),
        ));
    }
    u.check_finite("h1_norm")?;
    let (gr, gy) = cone_gradient(u);
    let (v, a, b) = (u.values(), gr.values(), gy.values());
    let p = spec.p;
    let s = weighted_integral(u.grid(), spec, |k| {
        v[k].abs().powf(p) + a[k].abs().powf(p) + b[k].abs().powf(p)
    });
    Ok(s.powf(1.0 / p))
}

/// A Young function used to build a Luxemburg norm.
pub trait NFunction {
    fn eval(&self, s: f64) -> Result<f64>;

    /// A `λ` at which `A(max|u|/λ)` is at most one; the bisection bracket starts from ten times this.
    fn unit_scale(&self, max_abs: f64) -> f64 {
        max_abs
    }
}

/// `A_α(s) = e^{α s²} - 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpSquare {
    alpha: f64,
}

impl ExpSquare {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(ConeError::InvalidParameter(format!(
                "N-function exponent must be positive, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl NFunction for ExpSquare {
    fn eval(&self, s: f64) -> Result<f64> {
        let arg = self.alpha * s * s;
        if arg > EXP_GUARD {
            return Err(ConeError::Range {
                context: "N-function e^{αs²}-1",
                argument: arg,
                limit: EXP_GUARD,
            });
        }
        Ok(arg.exp_m1())
    }

    fn unit_scale(&self, max_abs: f64) -> f64 {
        max_abs * (self.alpha / std::f64::consts::LN_2).sqrt()
    }
}

/// A user supplied monotone convex `A` with `A(0) = 0`.
pub struct CustomNFunction<F: Fn(f64) -> f64>(pub F);

impl<F: Fn(f64) -> f64> NFunction for CustomNFunction<F> {
    fn eval(&self, s: f64) -> Result<f64> {
        let v = (self.0)(s);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ConeError::Numeric(format!("custom N-function returned {v} at {s}")))
        }
    }
}

/// `∫ A(|u|/λ) dμ - 1`.
fn luxemburg_gap(u: &GridFunction, a: &dyn NFunction, lambda: f64) -> Result<f64> {
    let grid = u.grid();
    let v = u.values();
    let mut total = 0.0;
    for k in 0..grid.len() {
        if v[k] != 0.0 {
            let (i, j) = grid.ij(k);
            total += grid.weight(i, j) * a.eval(v[k].abs() / lambda)?;
        }
    }
    Ok(total - 1.0)
}

/// Luxemburg norm `inf{λ > 0 : ∫ A(|u|/λ) dμ ≤ 1}` by bisection.
///
/// Trial values of `λ` at which the exponent guard trips are treated as lying
/// below the root; the returned `λ*` is always evaluated without saturation.
pub fn luxemburg_norm(u: &GridFunction, a: &dyn NFunction) -> Result<f64> {
    u.check_finite("luxemburg_norm")?;
    let max_abs = u.max_abs();
    if max_abs == 0.0 {
        return Ok(0.0);
    }
    // G(λ) > 0 below the root; a guard trip means the integral is enormous.
    let sign_positive = |lambda: f64| -> Result<(bool, f64)> {
        match luxemburg_gap(u, a, lambda) {
            Ok(g) => Ok((g > 0.0, g)),
            Err(ConeError::Range { .. }) => Ok((true, f64::INFINITY)),
            Err(e) => Err(e),
        }
    };

    let mut lo: f64 = 1e-8;
    let mut hi = a.unit_scale(max_abs) * 10.0;
    let mut doublings = 0;
    loop {
        let (pos, g) = sign_positive(hi)?;
        if !pos {
            if g.abs() <= 1e-10 {
                return Ok(hi);
            }
            break;
        }
        lo = lo.max(hi);
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(ConeError::Solver {
                method: "luxemburg bracket",
                iterations: doublings,
                residual: g,
            });
        }
    }
    if lo >= hi {
        lo = hi * 0.5;
    }
    let (lo_pos, _) = sign_positive(lo)?;
    if !lo_pos {
        // The root lies below 1e-8; only possible for tiny |u|. Shrink.
        let mut l = lo;
        while !sign_positive(l)?.0 {
            hi = l;
            l *= 0.5;
            if l < f64::MIN_POSITIVE {
                return Ok(0.0);
            }
        }
        lo = l;
    }

    let mut best = (hi, f64::INFINITY);
    for _ in 0..500 {
        let mid = 0.5 * (lo + hi);
        let (pos, g) = sign_positive(mid)?;
        if g.is_finite() && g.abs() < best.1.abs() {
            best = (mid, g);
        }
        if g.abs() <= 1e-10 {
            return Ok(mid);
        }
        if pos {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    // Bracket collapsed to machine precision; G is as close to zero as f64 allows.
    Ok(best.0)
}
