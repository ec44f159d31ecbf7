//! Weighted Mellin transform along vertical lines `Re z = 1/2 - γ`.
//!
//! `Mu(z) = ∫₀^∞ t^z u(t) dt/t`. With `s = ln t` this is the two-sided Laplace
//! integral `∫ e^{zs} u(e^s) ds`, evaluated here by the trapezoidal rule on a
//! uniform `s` grid; on a vertical line it is a Fourier transform of
//! `e^{(1/2-γ)s} u(e^s)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{ConeError, Result};

/// Relative size below which the ends of a sampled function count as decayed.
pub const DECAY_TOL: f64 = 1e-12;
/// Relative size below which a spectrum's tails count as decayed.
pub const SPECTRUM_TAIL_TOL: f64 = 1e-10;

/// Samples of `u(t)` on a log-uniform grid `t_k = e^{s_k}`, `s_k ∈ [-r_max, r_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfLineFunction {
    r_max: f64,
    values: Vec<f64>,
}

impl HalfLineFunction {
    pub fn new(r_max: f64, values: Vec<f64>) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(ConeError::InvalidParameter(format!("r_max = {r_max}")));
        }
        if values.len() < 2 {
            return Err(ConeError::Shape("need at least two samples".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(ConeError::Numeric(format!("sample {v}")));
        }
        Ok(Self { r_max, values })
    }

    /// Samples `g(s)` at `s = ln t`.
    pub fn from_log_fn(r_max: f64, n: usize, g: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 {
            return Err(ConeError::Shape("need at least two samples".into()));
        }
        let h = 2.0 * r_max / (n - 1) as f64;
        let values = (0..n).map(|k| g(log_node(h, n, k))).collect();
        Self::new(r_max, values)
    }

    /// Samples `u(t)`.
    pub fn from_fn(r_max: f64, n: usize, u: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_log_fn(r_max, n, |s| u(s.exp()))
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn step(&self) -> f64 {
        2.0 * self.r_max / (self.values.len() - 1) as f64
    }

    /// `s_k = ln t_k`.
    pub fn log_t(&self, k: usize) -> f64 {
        log_node(self.step(), self.values.len(), k)
    }

    pub fn t(&self, k: usize) -> f64 {
        self.log_t(k).exp()
    }

    /// Same grid, new values from a per-node map `(s, u) -> v`.
    pub fn map_nodes(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..self.len()).map(|k| f(self.log_t(k), self.values[k])).collect();
        Self {
            r_max: self.r_max,
            values,
        }
    }

    /// Whether both ends have decayed below `DECAY_TOL` relative to the maximum.
    pub fn decays(&self) -> bool {
        let max = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let n = self.values.len();
        max == 0.0 || self.values[0].abs().max(self.values[n - 1].abs()) <= DECAY_TOL * max
    }

    /// Eight-point Lagrange interpolation in `s`; zero outside the grid. Exact at nodes.
    pub fn interpolate_log(&self, s: f64) -> f64 {
        let n = self.values.len();
        let h = self.step();
        let pos = (s + self.r_max) / h;
        if !(pos >= 0.0 && pos <= (n - 1) as f64) {
            return 0.0;
        }
        let base = pos.floor();
        if pos == base {
            return self.values[base as usize];
        }
        let start = (base as isize - 3).clamp(0, n as isize - 8) as usize;
        let mut acc = 0.0;
        for a in start..start + 8 {
            let mut l = 1.0;
            for b in start..start + 8 {
                if a != b {
                    l *= (pos - b as f64) / (a as f64 - b as f64);
                }
            }
            acc += l * self.values[a];
        }
        acc
    }

    /// Sixth-order central difference in `s` (lower order near the ends).
    pub fn derivative_log(&self) -> Self {
        let n = self.values.len();
        let h = self.step();
        let v = &self.values;
        let d = (0..n)
            .map(|k| {
                if k >= 3 && k + 3 < n {
                    (45.0 * (v[k + 1] - v[k - 1]) - 9.0 * (v[k + 2] - v[k - 2]) + (v[k + 3] - v[k - 3]))
                        / (60.0 * h)
                } else if k >= 1 && k + 1 < n {
                    (v[k + 1] - v[k - 1]) / (2.0 * h)
                } else if k == 0 {
                    (v[1] - v[0]) / h
                } else {
                    (v[k] - v[k - 1]) / h
                }
            })
            .collect();
        Self {
            r_max: self.r_max,
            values: d,
        }
    }
}

fn log_node(h: f64, n: usize, k: usize) -> f64 {
    // Symmetric about zero so mirrored nodes negate exactly.
    (k as f64 - 0.5 * (n - 1) as f64) * h
}

/// Uniform frequency grid on `[-tau_max, tau_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauGrid {
    pub tau_max: f64,
    pub n: usize,
}

impl Default for TauGrid {
    fn default() -> Self {
        Self {
            tau_max: 40.0,
            n: 4096,
        }
    }
}

impl TauGrid {
    pub fn step(&self) -> f64 {
        2.0 * self.tau_max / (self.n - 1) as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        (k as f64 - 0.5 * (self.n - 1) as f64) * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.point(k)).collect()
    }

    fn doubled(&self) -> Self {
        Self {
            tau_max: 2.0 * self.tau_max,
            n: 2 * self.n,
        }
    }
}

/// Samples of `M_γ u` on the line `Re z = 1/2 - γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MellinSamples {
    pub gamma: f64,
    pub tau: TauGrid,
    pub values: Vec<Complex64>,
    /// The input did not decay at the ends of its grid.
    pub truncation_flagged: bool,
}

impl MellinSamples {
    pub fn line(&self) -> f64 {
        0.5 - self.gamma
    }

    pub fn z(&self, k: usize) -> Complex64 {
        Complex64::new(self.line(), self.tau.point(k))
    }

    fn tail_ratio(&self) -> f64 {
        let max = self.values.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        if max == 0.0 {
            return 0.0;
        }
        let n = self.values.len();
        self.values[0].norm().max(self.values[n - 1].norm()) / max
    }

    /// Writes `tau,re,im` rows.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(["tau", "re", "im"])?;
        for (k, v) in self.values.iter().enumerate() {
            use crate::cone_domain::fmt_f64;
            w.write_record([fmt_f64(self.tau.point(k)), fmt_f64(v.re), fmt_f64(v.im)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `Mu(z) = ∫ e^{zs} u(e^s) ds` by the trapezoidal rule, for arbitrary complex `z`.
pub fn transform_at(u: &HalfLineFunction, z: Complex64) -> Complex64 {
    let n = u.len();
    let h = u.step();
    let s0 = u.log_t(0);
    // e^{z s_k} = e^{z s_0} (e^{z h})^k, accumulated in fixed order.
    let step = (z * h).exp();
    let mut phase = (z * s0).exp();
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &v) in u.values.iter().enumerate() {
        let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
        acc += phase * (w * v);
        phase *= step;
        if k % 64 == 63 {
            // Re-anchor to keep the recurrence error at the rounding level.
            phase = (z * u.log_t(k + 1)).exp();
        }
    }
    acc * h
}

fn transform_points(u: &HalfLineFunction, zs: &[Complex64]) -> Vec<Complex64> {
    zs.par_iter().map(|&z| transform_at(u, z)).collect()
}

/// `M_γ u` sampled on `tau`. Flags (but does not reject) a non-decaying input.
pub fn mellin_transform(u: &HalfLineFunction, gamma: f64, tau: TauGrid) -> MellinSamples {
    let c = 0.5 - gamma;
    let zs: Vec<Complex64> = (0..tau.n).map(|k| Complex64::new(c, tau.point(k))).collect();
    MellinSamples {
        gamma,
        tau,
        values: transform_points(u, &zs),
        truncation_flagged: !u.decays(),
    }
}

/// [`mellin_transform`] on the default window, doubled until the spectrum tails
/// fall below `SPECTRUM_TAIL_TOL`.
pub fn mellin_transform_auto(u: &HalfLineFunction, gamma: f64) -> Result<MellinSamples> {
    let mut tau = TauGrid::default();
    for _ in 0..6 {
        let m = mellin_transform(u, gamma, tau);
        if m.tail_ratio() <= SPECTRUM_TAIL_TOL {
            return Ok(m);
        }
        tau = tau.doubled();
    }
    Err(ConeError::Precondition(format!(
        "spectrum does not decay within |tau| <= {}",
        tau.tau_max
    )))
}

/// `(M_γ^{-1} F)(t) = (1/2π) ∫ t^{-z} F(z) dτ` along the line, sampled on the
/// log grid of `2 r_max` width with `n` points.
pub fn mellin_inverse(f: &MellinSamples, r_max: f64, n: usize) -> Result<HalfLineFunction> {
    if f.tail_ratio() > SPECTRUM_TAIL_TOL {
        return Err(ConeError::Precondition(format!(
            "aliasing: spectrum tail ratio {:.3e} exceeds {SPECTRUM_TAIL_TOL:e}; widen the tau window",
            f.tail_ratio()
        )));
    }
    let c = f.line();
    let dtau = f.tau.step();
    let m = f.values.len();
    let h = 2.0 * r_max / (n - 1) as f64;
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let s = log_node(h, n, k);
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in f.values.iter().enumerate() {
                let w = if j == 0 || j + 1 == m { 0.5 } else { 1.0 };
                let z = Complex64::new(c, f.tau.point(j));
                acc += (-z * s).exp() * v * w;
            }
            (acc * dtau / (2.0 * std::f64::consts::PI)).re
        })
        .collect();
    HalfLineFunction::new(r_max, values)
}

/// Parameters of the identity suite: the shift `p` in identity 2 and the
/// dilation `β` in identity 4.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityParams {
    pub shift_p: f64,
    pub dilation_beta: f64,
    pub tau: TauGrid,
}

impl Default for IdentityParams {
    fn default() -> Self {
        Self {
            shift_p: 0.5,
            dilation_beta: 2.0,
            tau: TauGrid::default(),
        }
    }
}

/// Max-relative residuals `max|lhs - rhs| / max|rhs|` of the four operational identities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityReport {
    /// `M((-t∂_t)u)(z) = z Mu(z)`.
    pub derivative: f64,
    /// `M(t^{-p}u)(z) = Mu(z - p)`.
    pub power_shift: f64,
    /// `M((log t)u)(z) = ∂_z Mu(z)`.
    pub log_multiplier: f64,
    /// `M(u(t^β))(z) = β^{-1} Mu(z/β)`.
    pub dilation: f64,
}

impl IdentityReport {
    pub fn max(&self) -> f64 {
        self.derivative
            .max(self.power_shift)
            .max(self.log_multiplier)
            .max(self.dilation)
    }
}

fn rel_residual(lhs: &[Complex64], rhs: &[Complex64]) -> f64 {
    let scale = rhs.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    let diff = lhs
        .iter()
        .zip(rhs)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Checks the four operational identities of the Mellin transform on the line
/// `Re z = 1/2 - γ`. Each left-hand side transforms a modified sample vector;
/// each right-hand side manipulates the transform of `u` itself.
pub fn identity_suite(u: &HalfLineFunction, gamma: f64, params: IdentityParams) -> IdentityReport {
    let tau = params.tau;
    let c = 0.5 - gamma;
    let zs: Vec<Complex64> = (0..tau.n).map(|k| Complex64::new(c, tau.point(k))).collect();
    let mu = transform_points(u, &zs);

    // (1) -t∂_t = -∂_s.
    let du = u.derivative_log().map_nodes(|_, v| -v);
    let lhs1 = transform_points(&du, &zs);
    let rhs1: Vec<Complex64> = zs.iter().zip(&mu).map(|(z, m)| z * m).collect();

    // (2) t^{-p} = e^{-ps}.
    let p = params.shift_p;
    let lhs2 = if p == 0.0 {
        mu.clone()
    } else {
        transform_points(&u.map_nodes(|s, v| (-p * s).exp() * v), &zs)
    };
    let shifted: Vec<Complex64> = zs.iter().map(|z| z - p).collect();
    let rhs2 = if p == 0.0 { mu.clone() } else { transform_points(u, &shifted) };

    // (3) log t = s; ∂_z = -i ∂_τ by fourth-order differences on the τ grid.
    let lhs3 = transform_points(&u.map_nodes(|s, v| s * v), &zs);
    let dt = tau.step();
    let inner: Vec<usize> = (2..tau.n - 2).collect();
    let rhs3: Vec<Complex64> = inner
        .iter()
        .map(|&k| {
            let d = (mu[k - 2] - mu[k - 1] * 8.0 + mu[k + 1] * 8.0 - mu[k + 2]) / (12.0 * dt);
            d * Complex64::new(0.0, -1.0)
        })
        .collect();
    let lhs3: Vec<Complex64> = inner.iter().map(|&k| lhs3[k]).collect();

    // (4) u(t^β) = ũ(βs).
    let beta = params.dilation_beta;
    let (lhs4, rhs4) = if beta == 1.0 {
        (mu.clone(), mu.clone())
    } else {
        let dilated = u.map_nodes(|s, _| u.interpolate_log(beta * s));
        let lhs = transform_points(&dilated, &zs);
        let scaled: Vec<Complex64> = zs.iter().map(|z| z / beta).collect();
        let rhs = transform_points(u, &scaled)
            .into_iter()
            .map(|m| m / beta)
            .collect();
        (lhs, rhs)
    };

    IdentityReport {
        derivative: rel_residual(&lhs1, &rhs1),
        power_shift: rel_residual(&lhs2, &rhs2),
        log_multiplier: rel_residual(&lhs3, &rhs3),
        dilation: rel_residual(&lhs4, &rhs4),
    }
}

/// Both sides of `|u|_{L₂^γ(ℝ₊)} = (2π)^{-1/2} |M_γ u|_{L²(Γ_{1/2-γ})}`.
pub fn plancherel_check(u: &HalfLineFunction, gamma: f64, tau: TauGrid) -> (f64, f64) {
    let n = u.len();
    let h = u.step();
    let c2 = 1.0 - 2.0 * gamma;
    let mut lhs = 0.0;
    for k in 0..n {
        let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
        lhs += w * (c2 * u.log_t(k)).exp() * u.values[k] * u.values[k];
    }
    lhs *= h;
    let m = mellin_transform(u, gamma, tau);
    let mut rhs = 0.0;
    for (k, v) in m.values.iter().enumerate() {
        let w = if k == 0 || k + 1 == tau.n { 0.5 } else { 1.0 };
        rhs += w * v.norm_sqr();
    }
    rhs *= tau.step() / (2.0 * std::f64::consts::PI);
    (lhs.sqrt(), rhs.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const R: f64 = 12.0;
    const N: usize = 4801;

    fn gaussian() -> HalfLineFunction {
        HalfLineFunction::from_fn(R, N, |t| (-(t.ln()).powi(2)).exp()).unwrap()
    }

    fn gaussian_closed_form(z: Complex64) -> Complex64 {
        (z * z / 4.0).exp() * PI.sqrt()
    }

    #[test]
    fn gaussian_matches_closed_form() {
        for gamma in [0.5, 0.0, 1.0, 1.5] {
            let m = mellin_transform(&gaussian(), gamma, TauGrid::default());
            assert!(!m.truncation_flagged);
            let exact: Vec<Complex64> = (0..m.tau.n).map(|k| gaussian_closed_form(m.z(k))).collect();
            assert!(rel_residual(&m.values, &exact) <= 1e-6);
        }
    }

    #[test]
    fn indicator_matches_elementary_antiderivative() {
        // Nodes sit exactly on ln a and ln b; the jump nodes carry the midpoint value.
        let (la, lb) = (-1.0, 1.5);
        let n = 2401;
        let u = HalfLineFunction::from_log_fn(R, n, |s| {
            if (s - la).abs() < 1e-9 || (s - lb).abs() < 1e-9 {
                0.5
            } else if s > la && s < lb {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let tau = TauGrid { tau_max: 10.0, n: 201 };
        let m = mellin_transform(&u, 0.0, tau);
        let h = u.step();
        for k in 0..tau.n {
            let z = m.z(k);
            let exact = ((z * lb).exp() - (z * la).exp()) / z;
            // Leading trapezoid error h²/12 (f'(b) - f'(a)) with f = e^{zs}.
            let bound = h * h / 12.0 * z.norm() * ((z.re * lb).exp() + (z.re * la).exp());
            assert!((m.values[k] - exact).norm() <= 1.05 * bound + 1e-12, "tau {}", z.im);
        }
    }

    #[test]
    fn zero_function_transforms_to_zero() {
        let u = HalfLineFunction::from_fn(R, 101, |_| 0.0).unwrap();
        let m = mellin_transform(&u, 0.5, TauGrid { tau_max: 5.0, n: 11 });
        assert!(m.values.iter().all(|v| v.norm() == 0.0));
        let back = mellin_inverse(&m, R, 101).unwrap();
        assert!(back.values().iter().all(|&v| v == 0.0));
        assert_eq!(plancherel_check(&u, 0.5, TauGrid { tau_max: 5.0, n: 11 }), (0.0, 0.0));
    }

    #[test]
    fn round_trips() {
        let u = gaussian();
        let m = mellin_transform_auto(&u, 0.5).unwrap();
        let back = mellin_inverse(&m, R, N).unwrap();
        let err = back.values().iter().zip(u.values()).fold(0.0_f64, |e, (a, b)| e.max((a - b).abs()));
        assert!(err <= 1e-6, "{err}");

        let tu = HalfLineFunction::from_fn(R, N, |t| t * (-(t.ln()).powi(2)).exp()).unwrap();
        let m = mellin_transform_auto(&tu, 1.5).unwrap();
        let back = mellin_inverse(&m, R, N).unwrap();
        let err = back.values().iter().zip(tu.values()).fold(0.0_f64, |e, (a, b)| e.max((a - b).abs()));
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn inverse_flags_aliasing() {
        let u = gaussian();
        let m = mellin_transform(&u, 0.5, TauGrid { tau_max: 2.0, n: 64 });
        assert!(matches!(mellin_inverse(&m, R, 101), Err(ConeError::Precondition(_))));
    }

    #[test]
    fn non_decaying_input_is_flagged() {
        let u = HalfLineFunction::from_fn(4.0, 201, |t| 1.0 / (1.0 + t)).unwrap();
        assert!(mellin_transform(&u, 0.5, TauGrid { tau_max: 1.0, n: 5 }).truncation_flagged);
    }

    #[test]
    fn identity_suite_on_gaussian() {
        let r = identity_suite(&gaussian(), 0.5, IdentityParams::default());
        assert!(r.max() <= 1e-5, "{r:?}");
        let trivial = identity_suite(
            &gaussian(),
            0.5,
            IdentityParams {
                shift_p: 0.0,
                dilation_beta: 1.0,
                tau: TauGrid { tau_max: 10.0, n: 256 },
            },
        );
        assert_eq!(trivial.power_shift, 0.0);
        assert_eq!(trivial.dilation, 0.0);
    }

    #[test]
    fn plancherel_on_gaussian_and_dilation() {
        let u = gaussian();
        let (l, r) = plancherel_check(&u, 0.5, TauGrid::default());
        assert!((l - r).abs() <= 1e-5 * l);
        // u(t²): the L² side scales by 1/√2, and so must the spectral side.
        let d = HalfLineFunction::from_fn(R, N, |t| (-(2.0 * t.ln()).powi(2)).exp()).unwrap();
        let (ld, rd) = plancherel_check(&d, 0.5, TauGrid::default());
        assert!((ld - rd).abs() <= 1e-5 * ld);
        assert!((ld / l - 0.5f64.sqrt()).abs() <= 1e-5);
        assert!((rd / r - 0.5f64.sqrt()).abs() <= 1e-5);
    }

    #[test]
    fn line_shift_consistency() {
        let u = gaussian();
        let delta = 0.7;
        let tu = u.map_nodes(|s, v| (delta * s).exp() * v);
        let tau = TauGrid { tau_max: 20.0, n: 512 };
        let a = mellin_transform(&u, 0.5, tau);
        let b = mellin_transform(&tu, 0.5 + delta, tau);
        assert!(rel_residual(&b.values, &a.values) <= 1e-6);
    }

    #[test]
    fn transform_is_linear() {
        let u = gaussian();
        let v = HalfLineFunction::from_log_fn(R, N, |s| s * (-(s - 0.3).powi(2)).exp()).unwrap();
        let w = HalfLineFunction::new(
            R,
            u.values().iter().zip(v.values()).map(|(a, b)| 2.0 * a - 0.5 * b).collect(),
        )
        .unwrap();
        let tau = TauGrid { tau_max: 10.0, n: 128 };
        let (mu, mv, mw) = (
            mellin_transform(&u, 0.5, tau),
            mellin_transform(&v, 0.5, tau),
            mellin_transform(&w, 0.5, tau),
        );
        for k in 0..tau.n {
            let comb = mu.values[k] * 2.0 - mv.values[k] * 0.5;
            assert!((comb - mw.values[k]).norm() <= 1e-13 * (1.0 + comb.norm()));
        }
    }
}
