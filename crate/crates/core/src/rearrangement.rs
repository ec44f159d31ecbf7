//! Symmetric decreasing rearrangement with respect to the cone measure, which
//! is Lebesgue measure in log coordinates, and the change of variables
//! `ρ = R e^{-t/2}` that turns a radial profile into a one-dimensional one.
//!
//! The rearrangement works on the lattice itself: the k-th largest nodal value
//! is placed on the k-th closest node to the log-origin. Interior nodes all
//! carry the same quadrature weight, so every distribution integral of a
//! compactly supported function is preserved exactly.

use std::io::Write;

use crate::cone_domain::{fmt_f64, DomainKind, GridFunction};
use crate::cone_operator::DiscreteOperator;
use crate::error::{ConeError, Result};
use crate::OMEGA_1;

/// Which variable a [`RadialProfile`] is tabulated against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileVariable {
    /// Log-metric radius about the log-origin; values nonincreasing.
    Rho,
    /// Moser variable `t` with `ρ² / R² = e^{-t}`; values nondecreasing.
    MoserT,
}

impl ProfileVariable {
    fn label(self) -> &'static str {
        match self {
            ProfileVariable::Rho => "rho",
            ProfileVariable::MoserT => "t",
        }
    }
}

/// A monotone nonnegative profile on a nondecreasing 1-D grid, extended by
/// its end values outside the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    variable: ProfileVariable,
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(variable: ProfileVariable, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() {
            return Err(ConeError::Shape(format!(
                "profile grid has {} points, values {}",
                grid.len(),
                values.len()
            )));
        }
        if grid.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(ConeError::Numeric("non-finite profile entry".into()));
        }
        if grid[0] < 0.0 || grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(ConeError::Precondition("profile grid must be nonnegative and nondecreasing".into()));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(ConeError::Precondition("profile values must be nonnegative".into()));
        }
        let monotone = match variable {
            ProfileVariable::Rho => values.windows(2).all(|w| w[1] <= w[0]),
            ProfileVariable::MoserT => values.windows(2).all(|w| w[1] >= w[0]),
        };
        if !monotone {
            return Err(ConeError::Precondition(format!(
                "{} profile has the wrong monotonicity",
                variable.label()
            )));
        }
        Ok(Self { variable, grid, values })
    }

    pub fn from_fn(variable: ProfileVariable, grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::new(variable, grid, values)
    }

    /// Uniform grid of `n` points on `[0, end]`.
    pub fn uniform_grid(end: f64, n: usize) -> Vec<f64> {
        let h = end / (n - 1) as f64;
        (0..n).map(|k| if k + 1 == n { end } else { k as f64 * h }).collect()
    }

    pub fn variable(&self) -> ProfileVariable {
        self.variable
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Piecewise-linear interpolant; constant beyond either end.
    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.grid;
        let n = g.len();
        if x <= g[0] {
            return self.values[0];
        }
        if x >= g[n - 1] {
            return self.values[n - 1];
        }
        let k = g.partition_point(|&v| v <= x);
        let (x0, x1) = (g[k - 1], g[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        if x1 == x0 {
            return v1;
        }
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }

    /// Smallest point beyond which the interpolant vanishes (`+∞` if it never does).
    pub fn support_end(&self) -> f64 {
        match self.values.iter().rposition(|&v| v != 0.0) {
            None => self.grid[0],
            Some(k) if k + 1 < self.len() => self.grid[k + 1],
            Some(_) => f64::INFINITY,
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, &v| m.max(v))
    }

    /// Dirichlet integral of the piecewise-linear interpolant: `2π ∫ u'² ρ dρ`
    /// for a radial profile, `∫ ẇ² dt` for a Moser profile. Exact for that interpolant.
    pub fn dirichlet_integral(&self) -> f64 {
        let mut s = 0.0;
        for k in 1..self.len() {
            let (x0, x1) = (self.grid[k - 1], self.grid[k]);
            if x1 == x0 {
                continue;
            }
            let d = (self.values[k] - self.values[k - 1]) / (x1 - x0);
            s += match self.variable {
                ProfileVariable::Rho => d * d * 0.5 * (x1 * x1 - x0 * x0),
                ProfileVariable::MoserT => d * d * (x1 - x0),
            };
        }
        match self.variable {
            ProfileVariable::Rho => 2.0 * std::f64::consts::PI * s,
            ProfileVariable::MoserT => s,
        }
    }

    /// First point where the interpolant drops to `level` or below (radial
    /// profiles) or reaches it (Moser profiles); `None` if it never does.
    pub fn level_crossing(&self, level: f64) -> Option<f64> {
        let hit = |v: f64| match self.variable {
            ProfileVariable::Rho => v <= level,
            ProfileVariable::MoserT => v >= level,
        };
        if hit(self.values[0]) {
            return Some(self.grid[0]);
        }
        for k in 1..self.len() {
            if hit(self.values[k]) {
                let (x0, x1) = (self.grid[k - 1], self.grid[k]);
                let (v0, v1) = (self.values[k - 1], self.values[k]);
                return Some(if v1 == v0 { x1 } else { x0 + (level - v0) * (x1 - x0) / (v1 - v0) });
            }
        }
        None
    }

    /// `rho,value` or `t,value` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record([self.variable.label(), "value"])?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            w.write_record([fmt_f64(*x), fmt_f64(*v)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Symmetric decreasing rearrangement of a nonnegative function on the full cone.
///
/// Returns the radial profile (one entry per node up to the edge of the
/// support, tabulated against node radius) and the rearranged grid function.
pub fn rearrange(u: &GridFunction) -> Result<(RadialProfile, GridFunction)> {
    let grid = *u.grid();
    if grid.domain().kind() != DomainKind::FullCone {
        return Err(ConeError::Domain(
            "rearrangement is centred at the log-origin and needs the full cone domain".into(),
        ));
    }
    u.check_finite("rearrange")?;
    if let Some(v) = u.values().iter().find(|&&v| v < 0.0) {
        return Err(ConeError::Precondition(format!("rearrange needs u >= 0, found {v}")));
    }
    let n = grid.len();
    let radius2: Vec<f64> = (0..n)
        .map(|k| {
            let (i, j) = grid.ij(k);
            grid.r(i) * grid.r(i) + grid.y(j) * grid.y(j)
        })
        .collect();
    // Stable sorts: ties broken by node index.
    let mut by_radius: Vec<usize> = (0..n).collect();
    by_radius.sort_by(|&a, &b| radius2[a].total_cmp(&radius2[b]));
    let vals = u.values();
    let mut by_value: Vec<usize> = (0..n).collect();
    by_value.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));

    let mut star = vec![0.0; n];
    let mut support_end = 0;
    for (rank, (&node, &src)) in by_radius.iter().zip(&by_value).enumerate() {
        let v = vals[src];
        if v == 0.0 {
            break;
        }
        let (i, j) = grid.ij(node);
        if grid.is_boundary(i, j) {
            return Err(ConeError::SupportOverflow(format!(
                "rearranged support reaches the grid edge at radius {:.4}",
                radius2[node].sqrt()
            )));
        }
        star[node] = v;
        support_end = rank + 1;
    }
    let keep = (support_end + 1).min(n);
    let radii = by_radius[..keep].iter().map(|&k| radius2[k].sqrt()).collect();
    let values = by_value[..keep]
        .iter()
        .enumerate()
        .map(|(rank, &k)| if rank < support_end { vals[k] } else { 0.0 })
        .collect();
    let profile = RadialProfile::new(ProfileVariable::Rho, radii, values)?;
    let star = GridFunction::new(grid, star)?.with_dirichlet();
    Ok((profile, star))
}

/// `∫|∇_B u|² - ∫|∇_B u*|²` in the discrete energy form.
pub fn polya_szego_gap(u: &GridFunction) -> Result<f64> {
    let (_, star) = rearrange(u)?;
    let op = DiscreteOperator::new(*u.grid());
    Ok(op.energy_form(u)? - op.energy_form(&star)?)
}

/// `w(t) = √(2ω₁) u*(R e^{-t/2})` on a uniform grid over `[0, t_max]`.
pub fn reduce_to_1d_with(profile: &RadialProfile, radius: f64, t_max: f64, n_t: usize) -> Result<RadialProfile> {
    if profile.variable() != ProfileVariable::Rho {
        return Err(ConeError::Precondition("reduce_to_1d needs a radial profile".into()));
    }
    if !(radius > 0.0) || !(t_max > 0.0) || n_t < 2 {
        return Err(ConeError::InvalidParameter(format!(
            "radius = {radius}, t_max = {t_max}, n_t = {n_t}"
        )));
    }
    if profile.support_end() > radius {
        return Err(ConeError::Precondition(format!("profile support exceeds R = {radius}")));
    }
    let scale = (2.0 * OMEGA_1).sqrt();
    let grid = RadialProfile::uniform_grid(t_max, n_t);
    let values: Vec<f64> = grid
        .iter()
        .map(|&t| scale * profile.eval(radius * (-0.5 * t).exp()))
        .collect();
    RadialProfile::new(ProfileVariable::MoserT, grid, values)
}

/// [`reduce_to_1d_with`] with `t_max` chosen so that `R e^{-t_max/2}` lies below
/// the first positive radius of the profile, beyond which `w` is constant.
pub fn reduce_to_1d(profile: &RadialProfile, radius: f64) -> Result<RadialProfile> {
    let inner = profile
        .grid()
        .iter()
        .copied()
        .find(|&g| g > 0.0)
        .unwrap_or(radius)
        .min(radius);
    let t_max = (2.0 * (radius / inner).ln()).max(0.0) + 2.0;
    reduce_to_1d_with(profile, radius, t_max, 8001)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_domain::{integrate, ConeDomain, LogGrid};

    fn grid(n: usize) -> LogGrid {
        LogGrid::new(ConeDomain::full_cone(1.0).unwrap(), n, n).unwrap()
    }

    fn bump(rho2: f64, radius: f64) -> f64 {
        let q = 1.0 - rho2 / (radius * radius);
        if q > 0.0 {
            q * q * q
        } else {
            0.0
        }
    }

    #[test]
    fn radial_input_is_fixed() {
        let g = grid(65);
        let u = GridFunction::from_log_fn(g, |r, y| bump(r * r + y * y, 0.6)).with_dirichlet();
        let (profile, star) = rearrange(&u).unwrap();
        assert_eq!(star.values(), u.values());
        assert!(profile.values().windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(polya_szego_gap(&u).unwrap(), 0.0);
    }

    #[test]
    fn indicator_becomes_centred_ball() {
        let g = grid(81);
        let u = GridFunction::from_log_fn(g, |r, y| {
            if (r - 0.3).abs() < 0.2 && (y + 0.2).abs() < 0.1 {
                1.0
            } else {
                0.0
            }
        });
        let m = integrate(&u).unwrap();
        let (profile, star) = rearrange(&u).unwrap();
        assert_eq!(integrate(&star).unwrap(), m);
        let radius = (m / std::f64::consts::PI).sqrt();
        let h = g.hr();
        for k in 0..g.len() {
            let (i, j) = g.ij(k);
            let rho = g.r(i).hypot(g.y(j));
            if rho < radius - 2.0 * h {
                assert_eq!(star.values()[k], 1.0);
            }
            if rho > radius + 2.0 * h {
                assert_eq!(star.values()[k], 0.0);
            }
        }
        assert!((profile.level_crossing(0.5).unwrap() - radius).abs() <= 2.0 * h);
    }

    #[test]
    fn distribution_integrals_are_preserved() {
        let g = grid(65);
        let u = GridFunction::from_log_fn(g, |r, y| {
            1.3 * bump((r - 0.2).powi(2) + 4.0 * (y - 0.1).powi(2), 0.5) + 0.7 * bump((r + 0.3).powi(2) + y * y, 0.3)
        });
        let (_, star) = rearrange(&u).unwrap();
        for f in [|s: f64| s * s, |s: f64| s.powi(4), |s: f64| (s * s).exp_m1()] {
            let a = integrate(&u.map(f)).unwrap();
            let b = integrate(&star.map(f)).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs());
        }
        assert!(polya_szego_gap(&u).unwrap() > 0.0);
    }

    #[test]
    fn translation_by_whole_nodes_gives_zero_gap() {
        let g = grid(81);
        let shift = 6.0 * g.hr();
        let u = GridFunction::from_log_fn(g, |r, y| bump((r - shift).powi(2) + y * y, 0.4));
        assert!(polya_szego_gap(&u).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let g = grid(33);
        let neg = GridFunction::from_log_fn(g, |r, _| r);
        assert!(matches!(rearrange(&neg), Err(ConeError::Precondition(_))));
        let wide = GridFunction::from_log_fn(g, |_, _| 1.0);
        assert!(matches!(rearrange(&wide), Err(ConeError::SupportOverflow(_))));
        let strip = LogGrid::new(ConeDomain::bounded_strip(1.0).unwrap(), 9, 9).unwrap();
        assert!(matches!(rearrange(&GridFunction::zeros(strip)), Err(ConeError::Domain(_))));
    }

    #[test]
    fn zero_reduces_to_zero() {
        let p = RadialProfile::new(ProfileVariable::Rho, vec![0.0, 0.5, 1.0], vec![0.0; 3]).unwrap();
        let w = reduce_to_1d(&p, 1.0).unwrap();
        assert!(w.values().iter().all(|&v| v == 0.0));
    }

    fn moser_bar(rho: f64) -> f64 {
        let c = OMEGA_1.powf(-0.5);
        let l2 = std::f64::consts::LN_2;
        if rho <= 0.5 {
            c * l2.sqrt()
        } else if rho <= 1.0 {
            c * (1.0 / rho).ln() / l2.sqrt()
        } else {
            0.0
        }
    }

    #[test]
    fn truncated_log_profile_reduces_to_piecewise_linear() {
        let p = RadialProfile::from_fn(ProfileVariable::Rho, RadialProfile::uniform_grid(1.0, 20001), moser_bar).unwrap();
        let w = reduce_to_1d_with(&p, 1.0, 4.0, 4001).unwrap();
        let slope = (2.0 * OMEGA_1).sqrt() * OMEGA_1.powf(-0.5) / (2.0 * std::f64::consts::LN_2.sqrt());
        let knee = 2.0 * std::f64::consts::LN_2;
        for (&t, &v) in w.grid().iter().zip(w.values()) {
            let exact = slope * t.min(knee);
            assert!((v - exact).abs() <= 1e-6, "t = {t}");
        }
        assert!((w.max_value() - (2.0 * OMEGA_1).sqrt() * p.max_value()).abs() <= 1e-15);
        // Both Dirichlet integrals are 1 for the normalized profile.
        assert!((p.dirichlet_integral() - 1.0).abs() <= 1e-3);
        assert!((w.dirichlet_integral() - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn exponential_integral_survives_reduction() {
        let p = RadialProfile::from_fn(ProfileVariable::Rho, RadialProfile::uniform_grid(1.0, 20001), moser_bar).unwrap();
        let alpha = 2.0;
        // 2π ∫ e^{α u²} ρ dρ over the unit ball, by the trapezoid rule on the fine profile grid.
        let g = p.grid();
        let mut lhs = 0.0;
        for k in 1..g.len() {
            let f = |i: usize| (alpha * p.values()[i].powi(2)).exp() * g[i];
            lhs += 0.5 * (f(k) + f(k - 1)) * (g[k] - g[k - 1]);
        }
        lhs *= 2.0 * std::f64::consts::PI;
        let w = reduce_to_1d(&p, 1.0).unwrap();
        let beta = alpha / crate::ALPHA_2;
        let t = w.grid();
        let mut rhs = 0.0;
        for k in 1..t.len() {
            let f = |i: usize| (beta * w.values()[i].powi(2) - t[i]).exp();
            rhs += 0.5 * (f(k) + f(k - 1)) * (t[k] - t[k - 1]);
        }
        rhs += (beta * w.values()[t.len() - 1].powi(2) - t[t.len() - 1]).exp();
        assert!((lhs / std::f64::consts::PI - rhs).abs() <= 1e-3 * rhs);
    }

    #[test]
    fn reduction_rejects_wide_support() {
        let p = RadialProfile::new(ProfileVariable::Rho, vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.0]).unwrap();
        assert!(reduce_to_1d(&p, 1.5).is_err());
        assert!(reduce_to_1d(&p, 2.0).is_ok());
    }

    #[test]
    fn profile_validation() {
        assert!(RadialProfile::new(ProfileVariable::Rho, vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(RadialProfile::new(ProfileVariable::MoserT, vec![0.0, 1.0], vec![0.0, 1.0]).is_ok());
        assert!(RadialProfile::new(ProfileVariable::Rho, vec![1.0, 0.0], vec![1.0, 0.0]).is_err());
        assert!(RadialProfile::new(ProfileVariable::Rho, vec![0.0], vec![-1.0]).is_err());
    }

    #[test]
    fn profile_csv_header() {
        let p = RadialProfile::new(ProfileVariable::MoserT, vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let mut out = Vec::new();
        p.write_csv(&mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("t,value\n"));
    }
}
