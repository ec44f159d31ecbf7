//! Moser–Trudinger functionals in two dimensions and after reduction to one,
//! the concentrating families that probe the sharp exponent, the dilation
//! `u_r(x₁, x₂) = u(x₁^r, r x₂)` and the limit constant `lim n∫₀¹ e^{n(t²-t)} dt`.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::cone_domain::{integrate, DomainKind, GridFunction, LogGrid};
use crate::cone_operator::DiscreteOperator;
use crate::error::{ConeError, Result};
use crate::rearrangement::{ProfileVariable, RadialProfile};
use crate::{ALPHA_2, EXP_GUARD, OMEGA_1};

/// Exponents of a Moser–Trudinger problem: `α` in two dimensions, `β = α/α₂`
/// after reduction, and the conjugate pair `1/p + 1/q = 1` with `q ≥ 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MTParams {
    alpha: f64,
    p: f64,
}

impl MTParams {
    pub fn new(alpha: f64, p: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(ConeError::InvalidParameter(format!("alpha = {alpha}")));
        }
        if !(p > 1.0 && p <= 2.0) {
            return Err(ConeError::InvalidParameter(format!("p = {p} needs 1 < p <= 2 so that q >= 2")));
        }
        Ok(Self { alpha, p })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.alpha / ALPHA_2
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }
}

/// `‖∇_B u‖₂` in the discrete energy form `⟨A u, u⟩^{1/2}`; second order.
pub fn energy_norm(u: &GridFunction) -> Result<f64> {
    Ok(DiscreteOperator::new(*u.grid()).energy_form(u)?.max(0.0).sqrt())
}

/// `‖∇_B u‖₂` from fourth-order central differences, with `u` continued
/// oddly across the edges (the zero trace), summed by the trapezoid rule.
pub fn dirichlet_norm(u: &GridFunction) -> Result<f64> {
    u.check_finite("dirichlet_norm")?;
    let g = u.grid();
    let (nr, ny) = (g.nr() as isize, g.ny() as isize);
    let at = |i: isize, j: isize| -> f64 {
        let reflect = |k: isize, n: isize| -> (isize, f64) {
            if k < 0 {
                (-k, -1.0)
            } else if k >= n {
                (2 * (n - 1) - k, -1.0)
            } else {
                (k, 1.0)
            }
        };
        let (ii, si) = reflect(i, nr);
        let (jj, sj) = reflect(j, ny);
        si * sj * u.at(ii as usize, jj as usize)
    };
    let d4 = |m2: f64, m1: f64, p1: f64, p2: f64, h: f64| (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let mut sq = vec![0.0; g.len()];
    for i in 0..nr {
        for j in 0..ny {
            let dr = d4(at(i - 2, j), at(i - 1, j), at(i + 1, j), at(i + 2, j), g.hr());
            let dy = d4(at(i, j - 2), at(i, j - 1), at(i, j + 1), at(i, j + 2), g.hy());
            sq[g.idx(i as usize, j as usize)] = dr * dr + dy * dy;
        }
    }
    Ok(integrate(&GridFunction::new(*g, sq)?)?.sqrt())
}

/// `‖u‖₂²` with respect to the cone measure.
pub fn l2_norm_sq(u: &GridFunction) -> Result<f64> {
    integrate(&u.map(|v| v * v))
}

fn exp_m1_guarded(x: f64, context: &'static str) -> Result<f64> {
    if x > EXP_GUARD {
        return Err(ConeError::Range {
            context,
            argument: x,
            limit: EXP_GUARD,
        });
    }
    Ok(x.exp_m1())
}

/// `∫(e^{α(u/‖∇_B u‖₂)²} - 1) dμ`.
pub fn mt_functional(u: &GridFunction, alpha: f64) -> Result<f64> {
    let g = dirichlet_norm(u)?;
    if g == 0.0 {
        return Err(ConeError::Precondition("mt_functional needs a non-constant u".into()));
    }
    let scale = alpha / (g * g);
    let mut vals = Vec::with_capacity(u.values().len());
    for &v in u.values() {
        vals.push(exp_m1_guarded(scale * v * v, "mt_functional")?);
    }
    integrate(&GridFunction::new(*u.grid(), vals)?)
}

/// `mt_functional(u, α) / (‖u‖₂² / ‖∇_B u‖₂²)`.
pub fn mt_ratio(u: &GridFunction, alpha: f64) -> Result<f64> {
    let l2 = l2_norm_sq(u)?;
    if l2 == 0.0 {
        return Err(ConeError::Precondition("mt_ratio needs u != 0".into()));
    }
    let g = dirichlet_norm(u)?;
    Ok(mt_functional(u, alpha)? * g * g / l2)
}

/// The concentrating family `u_k`: `√(k/(2ω₁))` for `ρ ≤ e^{-k/2}`,
/// `-2 ln ρ / √(2ω₁ k)` up to `ρ = 1`, zero beyond, with `ρ` the log-metric
/// radius. Every member has unit Dirichlet integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoserSequence {
    k: f64,
}

impl MoserSequence {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(ConeError::InvalidParameter(format!("k = {k}")));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Radius of the plateau, `e^{-k/2}`.
    pub fn core_radius(&self) -> f64 {
        (-0.5 * self.k).exp()
    }

    pub fn value(&self, rho: f64) -> f64 {
        let c = (2.0 * OMEGA_1).sqrt();
        if rho <= self.core_radius() {
            self.k.sqrt() / c
        } else if rho <= 1.0 {
            -2.0 * rho.ln() / (c * self.k.sqrt())
        } else {
            0.0
        }
    }

    /// Closed form of `∫|∇_B u_k|² dμ`.
    pub fn dirichlet_integral_exact(&self) -> f64 {
        let c2 = 2.0 * OMEGA_1;
        // (2/ρ)²/(c² k) · 2π ρ integrated over e^{-k/2} < ρ < 1.
        4.0 / (c2 * self.k) * 2.0 * std::f64::consts::PI * 0.5 * self.k
    }

    /// Closed form of `‖u_k‖₂² = 1/(2k) - e^{-k}(1/2 + 1/(2k))`.
    pub fn l2_norm_sq_exact(&self) -> f64 {
        let k = self.k;
        0.5 / k - (-k).exp() * (0.5 + 0.5 / k)
    }

    /// `∫(e^{α u_k²} - 1) dμ` by radial quadrature: the plateau exactly, the
    /// logarithmic part in `s = -ln ρ` by double-exponential quadrature.
    pub fn mt_functional(&self, alpha: f64) -> Result<f64> {
        let k = self.k;
        let pi = std::f64::consts::PI;
        let plateau_exp = alpha * k / (2.0 * OMEGA_1);
        let plateau = exp_m1_guarded(plateau_exp, "moser plateau")? * pi * (-k).exp();
        // u² = 4 s² / (2ω₁ k) and ρ dρ = e^{-2s} ds.
        let a = 4.0 * alpha / (2.0 * OMEGA_1 * k);
        if a * 0.25 * k * k > EXP_GUARD {
            return Err(ConeError::Range {
                context: "moser annulus",
                argument: a * 0.25 * k * k,
                limit: EXP_GUARD,
            });
        }
        let out = quadrature::double_exponential::integrate(
            |s| (a * s * s).exp_m1() * (-2.0 * s).exp(),
            0.0,
            0.5 * k,
            1e-14,
        );
        Ok(plateau + 2.0 * pi * out.integral)
    }

    /// `mt_functional / ‖u_k‖₂²` (the Dirichlet integral is one).
    pub fn mt_ratio(&self, alpha: f64) -> Result<f64> {
        Ok(self.mt_functional(alpha)? / self.l2_norm_sq_exact())
    }

    /// Piecewise-linear radial profile on a log-spaced radius grid with the
    /// kinks at `e^{-k/2}` and `1` as nodes; `per_unit` nodes per unit of `ln ρ`.
    pub fn sampled_profile(&self, per_unit: usize) -> Result<RadialProfile> {
        let span = 0.5 * self.k;
        let m = ((span * per_unit as f64).ceil() as usize).max(8);
        let mut grid = vec![0.0];
        for i in 0..=m {
            grid.push((-span * (1.0 - i as f64 / m as f64)).exp());
        }
        *grid.last_mut().unwrap() = 1.0;
        grid.push(1.5);
        let values = grid.iter().map(|&r| self.value(r)).collect();
        RadialProfile::new(ProfileVariable::Rho, grid, values)
    }

    /// `u_k` on a full-cone grid centred at the log-origin. The plateau must
    /// span at least four cells and the unit ball must fit inside the domain.
    pub fn on_grid(&self, grid: LogGrid) -> Result<GridFunction> {
        if grid.domain().kind() != DomainKind::FullCone {
            return Err(ConeError::Domain("moser sequence lives on the full cone".into()));
        }
        if grid.domain().r_max() <= 1.0 {
            return Err(ConeError::SupportOverflow("unit ball does not fit".into()));
        }
        let h = grid.hr().max(grid.hy());
        if self.core_radius() < 4.0 * h {
            return Err(ConeError::Resolution(format!(
                "plateau radius {:.3e} is below four cells of {h:.3e}",
                self.core_radius()
            )));
        }
        Ok(GridFunction::from_log_fn(grid, |r, y| self.value(r.hypot(y))).with_dirichlet())
    }
}

/// Normalized truncated-logarithm profile of radius `d` about `center` in log
/// coordinates: `ω₁^{-1/2}` times `√(ln 2)` inside `d/2`, `ln(d/ρ)/√(ln 2)` out to `d`.
pub fn moser_function_2d(grid: LogGrid, d: f64, center: (f64, f64)) -> Result<GridFunction> {
    if !(d > 0.0) {
        return Err(ConeError::InvalidParameter(format!("d = {d}")));
    }
    let (r0, r1) = grid.domain().r_interval();
    let (y0, y1) = grid.domain().y_interval();
    let (cr, cy) = center;
    if cr - d < r0 || cr + d > r1 || cy - d < y0 || cy + d > y1 {
        return Err(ConeError::SupportOverflow(format!(
            "ball of radius {d} about ({cr}, {cy}) leaves the domain"
        )));
    }
    Ok(GridFunction::from_log_fn(grid, |r, y| moser_bar((r - cr).hypot(y - cy) / d)).with_dirichlet())
}

/// The unscaled profile `M̄₂(ρ)`.
pub fn moser_bar(rho: f64) -> f64 {
    let c = OMEGA_1.powf(-0.5);
    let l2 = std::f64::consts::LN_2;
    if rho <= 0.5 {
        c * l2.sqrt()
    } else if rho < 1.0 {
        c * (1.0 / rho).ln() / l2.sqrt()
    } else {
        0.0
    }
}

/// Resampling scheme for [`scale_map_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interpolation {
    Bilinear,
    /// Keys cubic convolution (`a = -1/2`), third order.
    Cubic,
}

/// `u_r(x₁, x₂) = u(x₁^r, r x₂)`, the dilation `(s, y) ↦ (r s, r y)` in log
/// coordinates, resampled bilinearly.
pub fn scale_map(u: &GridFunction, r: f64) -> Result<GridFunction> {
    scale_map_with(u, r, Interpolation::Bilinear)
}

pub fn scale_map_with(u: &GridFunction, r: f64, scheme: Interpolation) -> Result<GridFunction> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(ConeError::InvalidParameter(format!("r = {r}")));
    }
    if r == 1.0 {
        return Ok(u.clone());
    }
    let grid = *u.grid();
    let (ra, rb) = grid.domain().r_interval();
    let (ya, yb) = grid.domain().y_interval();
    // Every nonzero value must land strictly inside the grid after dilation.
    for k in 0..grid.len() {
        if u.values()[k] != 0.0 {
            let (i, j) = grid.ij(k);
            let (s, y) = (grid.r(i) / r, grid.y(j) / r);
            if s <= ra || s >= rb || y <= ya || y >= yb {
                return Err(ConeError::SupportOverflow(format!(
                    "dilated support leaves the domain at ({s:.4}, {y:.4})"
                )));
            }
        }
    }
    let out = GridFunction::from_log_fn(grid, |s, y| sample(u, r * s, r * y, scheme));
    Ok(if u.is_dirichlet() { out.with_dirichlet() } else { out })
}

/// Interpolated value at log coordinates `(s, y)`; zero outside the grid.
fn sample(u: &GridFunction, s: f64, y: f64, scheme: Interpolation) -> f64 {
    let g = u.grid();
    let (ra, _) = g.domain().r_interval();
    let (ya, _) = g.domain().y_interval();
    let (pr, py) = ((s - ra) / g.hr(), (y - ya) / g.hy());
    let (nr, ny) = (g.nr() as f64, g.ny() as f64);
    if !(pr >= 0.0 && pr <= nr - 1.0 && py >= 0.0 && py <= ny - 1.0) {
        return 0.0;
    }
    let at = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= g.nr() as isize || j >= g.ny() as isize {
            0.0
        } else {
            u.at(i as usize, j as usize)
        }
    };
    let (i0, j0) = (pr.floor(), py.floor());
    let (fr, fy) = (pr - i0, py - j0);
    let (i0, j0) = (i0 as isize, j0 as isize);
    match scheme {
        Interpolation::Bilinear => {
            (1.0 - fr) * ((1.0 - fy) * at(i0, j0) + fy * at(i0, j0 + 1))
                + fr * ((1.0 - fy) * at(i0 + 1, j0) + fy * at(i0 + 1, j0 + 1))
        }
        Interpolation::Cubic => {
            let wr = keys_weights(fr);
            let wy = keys_weights(fy);
            let mut acc = 0.0;
            for (a, wa) in wr.iter().enumerate() {
                for (b, wb) in wy.iter().enumerate() {
                    acc += wa * wb * at(i0 - 1 + a as isize, j0 - 1 + b as isize);
                }
            }
            acc
        }
    }
}

fn keys_weights(f: f64) -> [f64; 4] {
    let a = -0.5;
    let far = |x: f64| a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a;
    let near = |x: f64| (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0;
    [far(1.0 + f), near(f), near(1.0 - f), far(2.0 - f)]
}

/// `∫₀^T e^{βw^p - t} dt` plus the tail `e^{βw(T)^p - T}` of the constant
/// extension, without checking admissibility of `w`.
///
/// Each cell uses the exponential fit of `βw^p - t` between its end nodes,
/// which is exact whenever that exponent is linear on the cell.
pub fn one_d_integral(w: &RadialProfile, beta: f64, p: f64) -> Result<f64> {
    if w.variable() != ProfileVariable::MoserT {
        return Err(ConeError::Precondition("one-dimensional functional needs a Moser-variable profile".into()));
    }
    let t = w.grid();
    let mut g = Vec::with_capacity(t.len());
    for (&ti, &wi) in t.iter().zip(w.values()) {
        let e = beta * wi.powf(p) - ti;
        if e > EXP_GUARD {
            return Err(ConeError::Range {
                context: "one_d_functional",
                argument: e,
                limit: EXP_GUARD,
            });
        }
        g.push(e);
    }
    let mut total = 0.0;
    for k in 1..t.len() {
        let h = t[k] - t[k - 1];
        let d = g[k] - g[k - 1];
        total += if d.abs() < 1e-6 {
            h * g[k - 1].exp() * (1.0 + d * (0.5 + d / 6.0))
        } else {
            h * (g[k].exp() - g[k - 1].exp()) / d
        };
    }
    let tail = g[g.len() - 1].exp();
    Ok(total + tail)
}

/// `∫₀^∞ |ẇ|^q dt` of the piecewise-linear interpolant.
pub fn admissibility_integral(w: &RadialProfile, q: f64) -> f64 {
    let t = w.grid();
    let v = w.values();
    (1..t.len())
        .filter(|&k| t[k] > t[k - 1])
        .map(|k| {
            let h = t[k] - t[k - 1];
            ((v[k] - v[k - 1]) / h).abs().powf(q) * h
        })
        .sum()
}

/// [`one_d_integral`] for admissible `w`: `w(0) = 0`, nondecreasing and
/// `∫ẇ^q dt ≤ 1` with `1/p + 1/q = 1`.
pub fn one_d_functional(w: &RadialProfile, beta: f64, p: f64) -> Result<f64> {
    let params = MTParams::new(beta * ALPHA_2, p)?;
    if w.variable() != ProfileVariable::MoserT {
        return Err(ConeError::Precondition("one-dimensional functional needs a Moser-variable profile".into()));
    }
    if w.grid()[0] != 0.0 || w.values()[0] != 0.0 {
        return Err(ConeError::Precondition("admissible profiles start at w(0) = 0".into()));
    }
    let a = admissibility_integral(w, params.q());
    if a > 1.0 + 1e-9 {
        return Err(ConeError::Precondition(format!("∫ẇ^q = {a} exceeds 1")));
    }
    one_d_integral(w, beta, p)
}

/// `w = t₁^{1/p} min(t/t₁, 1)` with `t₁` a grid node, on `[0, t_max]` with
/// cells of width at most `h`.
pub fn blowup_profile_with(t1: f64, p: f64, t_max: f64, h: f64) -> Result<RadialProfile> {
    if !(t1 > 0.0) || !(p > 1.0) || !(t_max > t1) || !(h > 0.0) {
        return Err(ConeError::InvalidParameter(format!(
            "t1 = {t1}, p = {p}, t_max = {t_max}, h = {h}"
        )));
    }
    let m1 = (t1 / h).ceil() as usize;
    let m2 = ((t_max - t1) / h).ceil() as usize;
    let mut grid: Vec<f64> = (0..m1).map(|i| t1 * i as f64 / m1 as f64).collect();
    grid.extend((0..=m2).map(|i| t1 + (t_max - t1) * i as f64 / m2 as f64));
    let top = t1.powf(1.0 / p);
    RadialProfile::from_fn(ProfileVariable::MoserT, grid, |t| top * (t / t1).min(1.0))
}

/// [`blowup_profile_with`] on `[0, t₁ + 1]` with cells of width `0.01`.
pub fn blowup_profile(t1: f64, p: f64) -> Result<RadialProfile> {
    blowup_profile_with(t1, p, t1 + 1.0, 0.01)
}

/// Closed form of `∫ẇ^q dt` for the blow-up profile: `t₁ · t₁^{q(1/p - 1)} = 1`.
pub fn blowup_admissibility_exact(t1: f64, p: f64) -> f64 {
    let q = p / (p - 1.0);
    t1 * t1.powf(q * (1.0 / p - 1.0))
}

/// `∫(e^{αv²} - 1) dμ` for the radial function whose reduction is `w`, after
/// scaling `w` to unit `∫ẇ² dt`: `πR² (J - 1)` with `J` the reduced integral
/// at `β = α/α₂`.
pub fn reduced_mt_functional(w: &RadialProfile, alpha: f64, radius: f64) -> Result<f64> {
    let d = w.dirichlet_integral();
    if d == 0.0 {
        return Err(ConeError::Precondition("reduced profile is constant".into()));
    }
    let scale = d.sqrt();
    let unit = RadialProfile::new(
        ProfileVariable::MoserT,
        w.grid().to_vec(),
        w.values().iter().map(|v| v / scale).collect(),
    )?;
    let j = one_d_integral(&unit, alpha / ALPHA_2, 2.0)?;
    Ok(std::f64::consts::PI * radius * radius * (j - 1.0))
}

/// `n ∫₀¹ e^{n(t² - t)} dt` by composite Gauss–Legendre of the given degree on
/// panels that double in width away from the endpoints (the integrand is
/// symmetric about `t = 1/2`).
pub fn f5_constant_with(n: u64, degree: usize) -> Result<f64> {
    if n == 0 {
        return Err(ConeError::InvalidParameter("n must be positive".into()));
    }
    let degree = NonZeroUsize::new(degree.max(2)).unwrap();
    let rule = GaussLegendre::new(degree);
    let nf = n as f64;
    let mut edges = vec![0.0];
    let mut e = 0.25 / nf;
    while e < 0.5 {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(0.5);
    let f = |t: f64| (nf * t * (t - 1.0)).exp();
    let half: f64 = edges.windows(2).map(|w| rule.integrate(w[0], w[1], f)).sum();
    Ok(2.0 * nf * half)
}

pub fn f5_constant(n: u64) -> Result<f64> {
    f5_constant_with(n, 20)
}
