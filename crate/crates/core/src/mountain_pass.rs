//! The energy `I(u) = ½∫|∇_B u|² dμ - ∫F(u) dμ`, model nonlinearities, checks
//! of their structural conditions, and a path-deformation mountain-pass solver
//! with a Newton refinement used as an independent oracle.

use serde::{Deserialize, Serialize};

use crate::cone_domain::{ConeDomain, GridFunction, LogGrid};
use crate::cone_operator::{minres, DiscreteOperator};
use crate::corpus;
use crate::error::{ConeError, Result};
use crate::mt_lab::f5_constant;
use crate::EXP_GUARD;

/// Autonomous nonlinearities `f(t)` with primitive `F(t) = ∫₀^t f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    /// `f ≡ 0`; has no mountain-pass geometry and exists for negative tests.
    Zero,
    /// `f(t) = sign(t)|t|^{p-1}`, `p > 2`.
    Polynomial { p_exp: f64 },
    /// `f(t) = c t³ e^{|t|^γ}`, `0 < γ < 2`.
    SubcriticalExp { gamma_exp: f64, c: f64 },
    /// `f(t) = c t³ e^{α₀ t²}`.
    CriticalExp { alpha0: f64, c: f64 },
}

fn guard(x: f64, context: &'static str) -> Result<()> {
    if x > EXP_GUARD {
        Err(ConeError::Range {
            context,
            argument: x,
            limit: EXP_GUARD,
        })
    } else {
        Ok(())
    }
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Zero => "zero",
            Family::Polynomial { .. } => "polynomial",
            Family::SubcriticalExp { .. } => "subcritical-exp",
            Family::CriticalExp { .. } => "critical-exp",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Family::Zero => true,
            Family::Polynomial { p_exp } => p_exp > 2.0 && p_exp.is_finite(),
            Family::SubcriticalExp { gamma_exp, c } => gamma_exp > 0.0 && gamma_exp < 2.0 && c > 0.0,
            Family::CriticalExp { alpha0, c } => alpha0 > 0.0 && c > 0.0 && alpha0.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(ConeError::InvalidParameter(format!("{self:?}")))
        }
    }

    /// The exponent inside `e^{...}`, zero for non-exponential families.
    fn exponent(&self, t: f64) -> f64 {
        match *self {
            Family::SubcriticalExp { gamma_exp, .. } => t.abs().powf(gamma_exp),
            Family::CriticalExp { alpha0, .. } => alpha0 * t * t,
            _ => 0.0,
        }
    }

    pub fn f(&self, t: f64) -> Result<f64> {
        let x = self.exponent(t);
        guard(x, "nonlinearity")?;
        Ok(match *self {
            Family::Zero => 0.0,
            Family::Polynomial { p_exp } => t.signum() * t.abs().powf(p_exp - 1.0),
            Family::SubcriticalExp { c, .. } | Family::CriticalExp { c, .. } => c * t * t * t * x.exp(),
        })
    }

    /// `f'(t)`.
    pub fn df(&self, t: f64) -> Result<f64> {
        let x = self.exponent(t);
        guard(x, "nonlinearity derivative")?;
        Ok(match *self {
            Family::Zero => 0.0,
            Family::Polynomial { p_exp } => (p_exp - 1.0) * t.abs().powf(p_exp - 2.0),
            Family::SubcriticalExp { gamma_exp, c } => c * t * t * x.exp() * (3.0 + gamma_exp * x),
            Family::CriticalExp { c, .. } => c * t * t * x.exp() * (3.0 + 2.0 * x),
        })
    }

    /// `F(t) = ∫₀^t f`.
    pub fn primitive(&self, t: f64) -> Result<f64> {
        let x = self.exponent(t);
        guard(x, "primitive")?;
        let v = match *self {
            Family::Zero => 0.0,
            Family::Polynomial { p_exp } => t.abs().powf(p_exp) / p_exp,
            Family::SubcriticalExp { gamma_exp, c } => {
                // c Σ_k |t|^{4+kγ} / (k! (4 + kγ)), all terms positive.
                let t4 = t.powi(4);
                let mut term = 1.0;
                let mut sum = 0.25;
                let mut k = 0usize;
                loop {
                    k += 1;
                    term *= x / k as f64;
                    let add = term / (4.0 + k as f64 * gamma_exp);
                    sum += add;
                    if (k as f64 > x && add <= 1e-17 * sum) || k > 5000 {
                        break;
                    }
                }
                c * t4 * sum
            }
            Family::CriticalExp { alpha0, c } => {
                // c/(2α₀²) (e^x (x - 1) + 1) with x = α₀t²; series Σ_{n≥2} (n-1) x^n / n! for small x.
                let g = if x < 0.5 {
                    let mut term = x;
                    let mut sum = 0.0;
                    for n in 2..40 {
                        term *= x / n as f64;
                        sum += (n - 1) as f64 * term;
                        if term < 1e-18 * sum {
                            break;
                        }
                    }
                    sum
                } else {
                    x.exp() * (x - 1.0) + 1.0
                };
                c * g / (2.0 * alpha0 * alpha0)
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ConeError::Range {
                context: "primitive",
                argument: x,
                limit: EXP_GUARD,
            })
        }
    }

    /// `ln f(t)` for `t > 0`, overflow free.
    pub fn ln_f(&self, t: f64) -> f64 {
        match *self {
            Family::Zero => f64::NEG_INFINITY,
            Family::Polynomial { p_exp } => (p_exp - 1.0) * t.ln(),
            Family::SubcriticalExp { c, .. } | Family::CriticalExp { c, .. } => c.ln() + 3.0 * t.ln() + self.exponent(t),
        }
    }

    /// `f'(t) / f(t)` for `t > 0`.
    pub fn log_derivative(&self, t: f64) -> f64 {
        match *self {
            Family::Zero => 0.0,
            Family::Polynomial { p_exp } => (p_exp - 1.0) / t,
            Family::SubcriticalExp { gamma_exp, .. } => (3.0 + gamma_exp * t.powf(gamma_exp)) / t,
            Family::CriticalExp { alpha0, .. } => 3.0 / t + 2.0 * alpha0 * t,
        }
    }
}

/// A nonlinearity `f(x, t) = family(t) + forcing(x)`. The forcing term is the
/// hook for non-autonomous problems and manufactured solutions.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearitySpec {
    pub family: Family,
    pub forcing: Option<GridFunction>,
}

impl NonlinearitySpec {
    pub fn new(family: Family) -> Result<Self> {
        family.validate()?;
        Ok(Self { family, forcing: None })
    }

    pub fn with_forcing(mut self, g: GridFunction) -> Self {
        self.forcing = Some(g);
        self
    }
}

/// The discretized functional on one grid.
struct Functional<'a> {
    op: DiscreteOperator,
    spec: &'a NonlinearitySpec,
}

impl<'a> Functional<'a> {
    fn new(grid: LogGrid, spec: &'a NonlinearitySpec) -> Result<Self> {
        if let Some(g) = &spec.forcing {
            if g.grid() != &grid {
                return Err(ConeError::Shape("forcing lives on a different grid".into()));
            }
        }
        Ok(Self {
            op: DiscreteOperator::new(grid),
            spec,
        })
    }

    fn grid(&self) -> &LogGrid {
        self.op.grid()
    }

    fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        let (nr, ny) = (self.grid().nr(), self.grid().ny());
        (1..nr - 1).flat_map(move |i| (1..ny - 1).map(move |j| i * ny + j))
    }

    fn cell(&self) -> f64 {
        self.grid().hr() * self.grid().hy()
    }

    fn energy(&self, x: &[f64]) -> Result<f64> {
        let mut ax = vec![0.0; x.len()];
        self.op.apply_raw(x, &mut ax);
        let quad = 0.5 * self.op.inner(&ax, x);
        let mut nl = 0.0;
        for k in self.interior() {
            nl += self.spec.family.primitive(x[k])?;
        }
        let mut e = quad - nl * self.cell();
        if let Some(g) = &self.spec.forcing {
            e -= self.op.inner(g.values(), x);
        }
        Ok(e)
    }

    /// Nodal residual `A u - f(u)` (zero on the boundary).
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut r = vec![0.0; x.len()];
        self.op.apply_raw(x, &mut r);
        let forcing = self.spec.forcing.as_ref().map(|g| g.values());
        for k in self.interior() {
            r[k] -= self.spec.family.f(x[k])?;
            if let Some(g) = forcing {
                r[k] -= g[k];
            }
        }
        Ok(r)
    }

    /// `(A⁻¹ r, ‖r‖_{H⁻¹})`.
    fn riesz(&self, r: &[f64], warm: Option<&[f64]>) -> Result<(Vec<f64>, f64)> {
        let grid = *self.grid();
        let b = GridFunction::new(grid, r.to_vec())?;
        let sol = match warm {
            Some(w) => self.op.solve_from(&b, &GridFunction::new(grid, w.to_vec())?, 1e-11)?,
            None => self.op.solve(&b, 1e-11)?,
        };
        let g = sol.solution.into_values();
        let n = self.op.inner(r, &g).max(0.0).sqrt();
        Ok((g, n))
    }

    fn energy_norm(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; x.len()];
        self.op.apply_raw(x, &mut ax);
        self.op.inner(&ax, x).max(0.0).sqrt()
    }
}

/// `I(u)`.
pub fn energy(u: &GridFunction, spec: &NonlinearitySpec) -> Result<f64> {
    Functional::new(*u.grid(), spec)?.energy(u.values())
}

/// `A u - f(u)`, the gradient of `I` in the quadrature pairing.
pub fn gradient(u: &GridFunction, spec: &NonlinearitySpec) -> Result<GridFunction> {
    let r = Functional::new(*u.grid(), spec)?.gradient(u.values())?;
    Ok(GridFunction::new(*u.grid(), r)?.with_dirichlet())
}

/// The quadrature pairing `⟨a, b⟩` over interior nodes.
pub fn pairing(a: &GridFunction, b: &GridFunction) -> f64 {
    DiscreteOperator::new(*a.grid()).inner(a.values(), b.values())
}

/// `‖u‖ = ⟨A u, u⟩^{1/2}`, the norm the mountain-pass geometry is measured in.
pub fn energy_norm(u: &GridFunction) -> f64 {
    let op = DiscreteOperator::new(*u.grid());
    let mut au = vec![0.0; u.values().len()];
    op.apply_raw(u.values(), &mut au);
    op.inner(&au, u.values()).max(0.0).sqrt()
}

/// `‖A u - f(u)‖_{H⁻¹}`.
pub fn gradient_norm(u: &GridFunction, spec: &NonlinearitySpec) -> Result<f64> {
    let func = Functional::new(*u.grid(), spec)?;
    let r = func.gradient(u.values())?;
    Ok(func.riesz(&r, None)?.1)
}

/// Central finite differences of `I` against `⟨gradient(u), v⟩` on `pairs`
/// random smooth `(u, v)`; returns `(finite difference, pairing)` per pair.
pub fn gradient_check(
    grid: LogGrid,
    spec: &NonlinearitySpec,
    pairs: usize,
    seed: u64,
    amplitude: f64,
    eps: f64,
) -> Result<Vec<(f64, f64)>> {
    let func = Functional::new(grid, spec)?;
    let mut rng = corpus::rng(seed);
    let mut out = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let u = corpus::random_smooth(grid, 4, amplitude, &mut rng);
        let v = corpus::random_smooth(grid, 4, 1.0, &mut rng);
        let plus: Vec<f64> = u.values().iter().zip(v.values()).map(|(a, b)| a + eps * b).collect();
        let minus: Vec<f64> = u.values().iter().zip(v.values()).map(|(a, b)| a - eps * b).collect();
        let fd = (func.energy(&plus)? - func.energy(&minus)?) / (2.0 * eps);
        let g = func.gradient(u.values())?;
        out.push((fd, func.op.inner(&g, v.values())));
    }
    Ok(out)
}

/// Minimum of `I` over `directions` random smooth functions scaled to
/// `‖u‖ = rho`.
pub fn geometry_check(grid: LogGrid, spec: &NonlinearitySpec, rho: f64, directions: usize, seed: u64) -> Result<f64> {
    let func = Functional::new(grid, spec)?;
    let mut rng = corpus::rng(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..directions {
        let d = corpus::random_smooth(grid, 4, 1.0, &mut rng);
        let n = func.energy_norm(d.values());
        let x: Vec<f64> = d.values().iter().map(|v| v * rho / n).collect();
        worst = worst.min(func.energy(&x)?);
    }
    Ok(worst)
}

/// Doubles `t` from 1 until `I(t · direction) ≤ -1`; returns `(t · direction, t)`.
pub fn find_endpoint(direction: &GridFunction, spec: &NonlinearitySpec) -> Result<(GridFunction, f64)> {
    if direction.max_abs() == 0.0 {
        return Err(ConeError::Precondition("endpoint direction is zero".into()));
    }
    if direction.values().iter().any(|&v| v < 0.0) {
        return Err(ConeError::Precondition("endpoint direction must be nonnegative".into()));
    }
    let func = Functional::new(*direction.grid(), spec)?;
    let mut t = 1.0;
    for _ in 0..=60 {
        let x: Vec<f64> = direction.values().iter().map(|v| t * v).collect();
        match func.energy(&x) {
            Ok(e) if e <= -1.0 => return Ok((GridFunction::new(*direction.grid(), x)?.with_dirichlet(), t)),
            Ok(_) => {}
            Err(ConeError::Range { .. }) => break,
            Err(e) => return Err(e),
        }
        t *= 2.0;
    }
    Err(ConeError::Solver {
        method: "mountain-pass endpoint search",
        iterations: 60,
        residual: t,
    })
}

/// Knobs of [`mp_solve`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MPOptions {
    pub path_points: usize,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for MPOptions {
    fn default() -> Self {
        Self {
            path_points: 21,
            tol: 1e-6,
            max_iterations: 4000,
        }
    }
}

/// One iteration of the path deformation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Path maximum before the step.
    pub level: f64,
    pub grad_norm: f64,
    pub step: f64,
    /// Segment of the path holding the maximum.
    pub path_index: usize,
}

/// Output of [`mp_solve`].
#[derive(Clone, Debug)]
pub struct MPResult {
    pub u_star: GridFunction,
    pub level: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    /// `I` at the nodes of the final path.
    pub path_energies: Vec<f64>,
    pub lambda1: f64,
    pub endpoint_scale: f64,
}

impl MPResult {
    /// Whether the recorded path maxima never increased.
    pub fn levels_nonincreasing(&self) -> bool {
        self.history
            .windows(2)
            .all(|w| w[1].level <= w[0].level + 1e-12 * w[0].level.abs())
    }
}

fn axpy(a: &[f64], s: f64, d: &[f64]) -> Vec<f64> {
    a.iter().zip(d).map(|(x, y)| x + s * y).collect()
}

/// Illinois false position for a sign change `f(lo) > 0 ≥ f(hi)`.
fn slope_root(
    slope: &mut impl FnMut(f64) -> Result<f64>,
    mut lo: f64,
    mut flo: f64,
    mut hi: f64,
    mut fhi: f64,
) -> Result<f64> {
    if !fhi.is_finite() {
        // Bisect until the upper end is finite so that false position is usable.
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = slope(mid)?;
            if fm > 0.0 {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
                fhi = fm;
                if fhi.is_finite() {
                    break;
                }
            }
        }
    }
    let width = (hi - lo).abs();
    let mut side = 0;
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-14 * width {
            break;
        }
        let s = (lo * fhi - hi * flo) / (fhi - flo);
        let fs = slope(s)?;
        if fs == 0.0 {
            return Ok(s);
        }
        if fs > 0.0 {
            lo = s;
            flo = fs;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            hi = s;
            fhi = fs;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn lerp(a: &[f64], b: &[f64], s: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect()
}

/// Energy with overflow of the nonlinearity read as `-∞`.
fn energy_or_low(func: &Functional, x: &[f64]) -> Result<f64> {
    match func.energy(x) {
        Err(ConeError::Range { .. }) => Ok(f64::NEG_INFINITY),
        other => other,
    }
}

/// Maximum of `I` on the segment `[a, b]`: coarse sampling, then a root of
/// the directional derivative next to the best sample. Returns `(s, I)`.
fn segment_max(func: &Functional, a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    const SAMPLES: usize = 8;
    let d: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut best_k = 0;
    for k in 0..=SAMPLES {
        let s = k as f64 / SAMPLES as f64;
        let e = energy_or_low(func, &lerp(a, b, s))?;
        if e > best.1 {
            best = (s, e);
            best_k = k;
        }
    }
    let mut slope = |s: f64| -> Result<f64> {
        match func.gradient(&lerp(a, b, s)) {
            Ok(g) => Ok(func.op.inner(&g, &d)),
            Err(ConeError::Range { .. }) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    };
    let s0 = best.0;
    let f0 = slope(s0)?;
    let h = 1.0 / SAMPLES as f64;
    let bracket = if f0 > 0.0 && best_k < SAMPLES {
        Some((s0, f0, s0 + h, slope(s0 + h)?))
    } else if f0 < 0.0 && best_k > 0 {
        let sl = s0 - h;
        Some((sl, slope(sl)?, s0, f0))
    } else {
        None
    };
    if let Some((lo, flo, hi, fhi)) = bracket {
        if flo > 0.0 && fhi <= 0.0 {
            let s = slope_root(&mut slope, lo, flo, hi, fhi)?;
            let e = energy_or_low(func, &lerp(a, b, s))?;
            if e > best.1 {
                best = (s, e);
            }
        }
    }
    Ok(best)
}

fn path_maxima(func: &Functional, path: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    path.windows(2).map(|w| segment_max(func, &w[0], &w[1])).collect()
}

fn highest(seg: &[(f64, f64)]) -> (usize, f64, f64) {
    let j = (0..seg.len()).max_by(|&a, &b| seg[a].1.total_cmp(&seg[b].1)).unwrap();
    (j, seg[j].0, seg[j].1)
}

/// `count` nodes at equal arc length, in the energy norm, along the
/// piecewise-linear path.
fn reparametrize(func: &Functional, path: &[Vec<f64>], count: usize) -> Vec<Vec<f64>> {
    let m = path.len();
    let mut cum = vec![0.0];
    for w in path.windows(2) {
        let d: Vec<f64> = w[1].iter().zip(&w[0]).map(|(x, y)| x - y).collect();
        cum.push(cum.last().unwrap() + func.energy_norm(&d));
    }
    let total = cum[m - 1];
    let mut out = Vec::with_capacity(count);
    out.push(path[0].clone());
    let mut seg = 0;
    for j in 1..count - 1 {
        let target = total * j as f64 / (count - 1) as f64;
        while seg + 1 < m - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let s = if len > 0.0 { (target - cum[seg]) / len } else { 0.0 };
        out.push(lerp(&path[seg], &path[seg + 1], s));
    }
    out.push(path[m - 1].clone());
    out
}

/// Mountain-pass critical point by path deformation. The path starts as the
/// segment from 0 to an endpoint `e` along the first eigenfunction and is
/// kept piecewise linear. Each iteration locates the maximum of `I` over the
/// whole path, moves that point along the negative energy-gradient with
/// Armijo backtracking on the maxima of the two new adjacent segments, and
/// inserts it as a node. The path is re-spaced once it has doubled in size,
/// provided that does not raise its maximum.
pub fn mp_solve(grid: LogGrid, spec: &NonlinearitySpec, options: MPOptions) -> Result<MPResult> {
    if options.path_points < 3 {
        return Err(ConeError::InvalidParameter("path needs at least three points".into()));
    }
    let func = Functional::new(grid, spec)?;
    let eig = func.op.first_eigenvalue(1e-9)?;
    let (endpoint, t_end) = find_endpoint(&eig.eigenfunction, spec)?;
    let m = options.path_points;
    let mut path: Vec<Vec<f64>> = (0..m)
        .map(|i| endpoint.values().iter().map(|v| v * i as f64 / (m - 1) as f64).collect())
        .collect();
    let mut seg = path_maxima(&func, &path)?;
    if highest(&seg).2 <= 0.0 {
        return Err(ConeError::Precondition(
            "initial path never rises above zero; no mountain-pass geometry".into(),
        ));
    }
    let mut history = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    let mut tau = 1.0_f64;
    let mut respace_at = 2 * m;
    for iteration in 0..options.max_iterations {
        let (j, s, level) = highest(&seg);
        let x = lerp(&path[j], &path[j + 1], s);
        let r = func.gradient(&x)?;
        let (g, gn) = func.riesz(&r, warm.as_deref())?;
        if gn <= options.tol {
            history.push(IterationRecord {
                iteration,
                level,
                grad_norm: gn,
                step: 0.0,
                path_index: j,
            });
            let path_energies = path.iter().map(|p| func.energy(p)).collect::<Result<Vec<_>>>()?;
            return Ok(MPResult {
                u_star: GridFunction::new(grid, x)?.with_dirichlet(),
                level,
                grad_norm: gn,
                iterations: iteration,
                history,
                path_energies,
                lambda1: eig.lambda1,
                endpoint_scale: t_end,
            });
        }
        // A maximum sitting on a node replaces it; otherwise the moved point
        // is inserted between the segment's ends.
        let (left, right, replace) = if s <= 1e-9 {
            (j - 1, j + 1, Some(j))
        } else if s >= 1.0 - 1e-9 {
            (j, j + 2, Some(j + 1))
        } else {
            (j, j + 1, None)
        };
        tau = (2.0 * tau).min(1.0);
        let mut accepted = None;
        for _ in 0..=30 {
            let trial = axpy(&x, -tau, &g);
            let a = segment_max(&func, &path[left], &trial)?;
            let b = segment_max(&func, &trial, &path[right])?;
            if a.1.max(b.1) <= level - 1e-4 * tau * gn * gn {
                accepted = Some((trial, a, b));
                break;
            }
            tau *= 0.5;
        }
        let Some((trial, a, b)) = accepted else {
            return Err(ConeError::Solver {
                method: "mountain-pass line search",
                iterations: iteration,
                residual: gn,
            });
        };
        history.push(IterationRecord {
            iteration,
            level,
            grad_norm: gn,
            step: tau,
            path_index: j,
        });
        match replace {
            Some(k) => {
                path[k] = trial;
                seg[k - 1] = a;
                seg[k] = b;
            }
            None => {
                path.insert(j + 1, trial);
                seg[j] = a;
                seg.insert(j + 1, b);
            }
        }
        warm = Some(g);

        if path.len() >= respace_at {
            let respaced = reparametrize(&func, &path, m);
            let new_seg = path_maxima(&func, &respaced)?;
            if highest(&new_seg).2 <= highest(&seg).2 {
                path = respaced;
                seg = new_seg;
                respace_at = 2 * m;
            } else {
                respace_at = path.len() + m;
            }
        }
    }
    Err(ConeError::Solver {
        method: "mountain pass",
        iterations: options.max_iterations,
        residual: history.last().map_or(f64::NAN, |h| h.grad_norm),
    })
}

/// Output of [`newton_refine`].
#[derive(Clone, Debug)]
pub struct NewtonResult {
    pub solution: GridFunction,
    /// Final `‖A u - f(u)‖_{H⁻¹}`.
    pub residual: f64,
    pub steps: usize,
    pub residual_history: Vec<f64>,
    /// The iteration landed on `u ≡ 0`.
    pub trivial: bool,
}

/// Damped Newton on `A u = f(u)` with Jacobian `A - f'(u)`, linear steps by MINRES.
pub fn newton_refine(u0: &GridFunction, spec: &NonlinearitySpec, tol: f64) -> Result<NewtonResult> {
    let grid = *u0.grid();
    let func = Functional::new(grid, spec)?;
    let mut u = u0.clone().with_dirichlet().into_values();
    let mut history = Vec::new();
    let residual_of = |x: &[f64]| -> Result<(Vec<f64>, f64)> {
        let r = func.gradient(x)?;
        let n = func.riesz(&r, None)?.1;
        Ok((r, n))
    };
    let (mut r, mut res) = residual_of(&u)?;
    let max_steps = 30;
    for step in 0..=max_steps {
        history.push(res);
        if res <= tol {
            let trivial = func.energy_norm(&u) <= 1e-6;
            return Ok(NewtonResult {
                solution: GridFunction::new(grid, u)?.with_dirichlet(),
                residual: res,
                steps: step,
                residual_history: history,
                trivial,
            });
        }
        if step == max_steps {
            break;
        }
        let mut dfu = vec![0.0; u.len()];
        for k in func.interior() {
            dfu[k] = spec.family.df(u[k])?;
        }
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let apply = |x: &[f64], out: &mut [f64]| {
            func.op.apply_raw(x, out);
            for k in func.interior() {
                out[k] -= dfu[k] * x[k];
            }
        };
        let inner = |a: &[f64], b: &[f64]| func.op.inner(a, b);
        let (delta, _, _) = minres(apply, inner, &rhs, 1e-11, 200_000)?;
        let mut s = 1.0;
        loop {
            let trial = axpy(&u, s, &delta);
            if let Ok((rt, nt)) = residual_of(&trial) {
                if nt < (1.0 - 1e-4 * s) * res || s < 1.0 / 1024.0 {
                    u = trial;
                    r = rt;
                    res = nt;
                    break;
                }
            }
            s *= 0.5;
            if s < 1.0 / 4096.0 {
                return Err(ConeError::Solver {
                    method: "newton line search",
                    iterations: step,
                    residual: res,
                });
            }
        }
    }
    Err(ConeError::Solver {
        method: "newton",
        iterations: max_steps,
        residual: res,
    })
}

/// Growth class read off from `f'/f` at large `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum GrowthClass {
    Zero,
    /// `|f(t)| ~ |t|^{p_exp - 1}`.
    Polynomial { p_exp: f64 },
    Subcritical,
    Critical { alpha0: f64 },
}

/// The exponential-threshold comparison for a critical family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdCheck {
    /// `ln(f(t)/e^{α t²})` decreases across the samples for `α = 1.1 α̂`.
    pub vanishes_above: bool,
    /// It increases across the samples for `α = 0.9 α̂`.
    pub blows_up_below: bool,
}

/// The lower bound on `f(t) t e^{-α₀t²}` tied to the inner radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LowerBoundReport {
    /// `f(t) t e^{-α₀t²}` at the largest sampled `t`.
    pub sampled_value: f64,
    /// `(2/d)² / (M α₀)`.
    pub threshold: f64,
    pub limit_constant: f64,
    pub inner_radius: f64,
    pub pass: bool,
}

/// Numerical spot checks of the structural conditions on `f`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    /// `max 2F(t)/t²` over `|t| ∈ {1e-3, …, 1e-6}`.
    pub small_t_quotient: f64,
    pub lambda1: f64,
    pub below_eigenvalue: bool,
    /// `max 𝓕(st) - 𝓕(t)` over the sampled `(t, s)` with `𝓕 = f t - 2F`.
    pub monotonicity_defect: f64,
    pub monotone: bool,
    pub superquadratic: bool,
    pub growth: GrowthClass,
    pub threshold: Option<ThresholdCheck>,
    pub lower_bound: Option<LowerBoundReport>,
    /// Compactness of Cerami sequences is a property of sequences, not of `f`.
    pub compactness_note: &'static str,
}

impl ConditionReport {
    /// The checks needed for mountain-pass geometry.
    pub fn geometry_ok(&self) -> bool {
        self.below_eigenvalue && self.monotone && self.superquadratic
    }
}

fn classify(family: &Family) -> GrowthClass {
    if matches!(family, Family::Zero) {
        return GrowthClass::Zero;
    }
    let k = |t: f64| t * family.log_derivative(t);
    let (k15, k30) = (k(15.0), k(30.0));
    if (k30 - k15).abs() <= 1e-9 * k30.abs() {
        return GrowthClass::Polynomial { p_exp: k30 + 1.0 };
    }
    let a = |t: f64| family.log_derivative(t) / (2.0 * t);
    let (a15, a30) = (a(15.0), a(30.0));
    if a30 >= 0.9 * a15 {
        // a(t) = α₀ + C/t²: one Richardson step.
        GrowthClass::Critical {
            alpha0: (4.0 * a30 - a15) / 3.0,
        }
    } else {
        GrowthClass::Subcritical
    }
}

/// Spot checks of the structural conditions on `f` against `λ₁` and the
/// inner radius of `domain`.
pub fn validate_conditions(spec: &NonlinearitySpec, lambda1: f64, domain: &ConeDomain) -> Result<ConditionReport> {
    let fam = &spec.family;
    let mut small = 0.0_f64;
    for t in [1e-3, 1e-4, 1e-5, 1e-6] {
        for s in [t, -t] {
            small = small.max(2.0 * fam.primitive(s)? / (s * s));
        }
    }
    let big = |t: f64| -> Result<f64> { Ok(fam.f(t)? * t - 2.0 * fam.primitive(t)?) };
    let mut defect = f64::NEG_INFINITY;
    let mut scale = 0.0_f64;
    for i in 1..=50 {
        let t = 0.1 * i as f64;
        for t in [t, -t] {
            let bt = big(t)?;
            scale = scale.max(bt.abs());
            for j in 1..=20 {
                let s = 0.05 * j as f64;
                defect = defect.max(big(s * t)? - bt);
            }
        }
    }
    let monotone = defect <= 1e-12 * scale.max(1.0);
    let quotients = [2.0, 4.0, 8.0, 16.0]
        .iter()
        .map(|&t| fam.primitive(t).map(|f| f / (t * t)))
        .collect::<Result<Vec<_>>>()?;
    let superquadratic = quotients.windows(2).all(|w| w[1] > w[0]) && quotients[3] >= 10.0 * quotients[0];
    let growth = classify(fam);
    let (threshold, lower_bound) = match growth {
        GrowthClass::Critical { alpha0 } => {
            let ts = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
            let trend = |alpha: f64| -> Vec<f64> { ts.iter().map(|&t| fam.ln_f(t) - alpha * t * t).collect() };
            let above = trend(1.1 * alpha0);
            let below = trend(0.9 * alpha0);
            let th = ThresholdCheck {
                vanishes_above: above.windows(2).all(|w| w[1] < w[0]),
                blows_up_below: below.windows(2).all(|w| w[1] > w[0]),
            };
            let d = domain.inner_radius();
            let m_const = f5_constant(10_000)?;
            let t = 30.0;
            let sampled = (fam.ln_f(t) + t.ln() - alpha0 * t * t).exp();
            let thr = (2.0 / d).powi(2) / (m_const * alpha0);
            let lb = LowerBoundReport {
                sampled_value: sampled,
                threshold: thr,
                limit_constant: m_const,
                inner_radius: d,
                pass: sampled > thr,
            };
            (Some(th), Some(lb))
        }
        _ => (None, None),
    };
    Ok(ConditionReport {
        small_t_quotient: small,
        lambda1,
        below_eigenvalue: small < lambda1,
        monotonicity_defect: defect,
        monotone,
        superquadratic,
        growth,
        threshold,
        lower_bound,
        compactness_note: "sequential compactness is not checkable from f alone",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip(n: usize) -> LogGrid {
        LogGrid::new(ConeDomain::bounded_strip(4.0).unwrap(), n, n).unwrap()
    }

    fn families() -> Vec<Family> {
        vec![
            Family::Polynomial { p_exp: 4.0 },
            Family::SubcriticalExp { gamma_exp: 1.5, c: 1.0 },
            Family::CriticalExp { alpha0: 0.5, c: 1.0 },
        ]
    }

    #[test]
    fn primitives_match_quadrature() {
        use std::num::NonZeroUsize;
        let gl = gauss_quad::GaussLegendre::new(NonZeroUsize::new(40).unwrap());
        for fam in families() {
            for t in [-2.5, -0.3, 1e-3, 0.7, 1.9, 3.0] {
                let q: f64 = (0..8)
                    .map(|k| {
                        let (a, b) = (t * k as f64 / 8.0, t * (k + 1) as f64 / 8.0);
                        gl.integrate(a, b, |s| fam.f(s).unwrap())
                    })
                    .sum();
                let v = fam.primitive(t).unwrap();
                assert!((v - q).abs() <= 1e-12 * v.abs().max(1e-300), "{fam:?} t = {t}: {v} vs {q}");
            }
        }
    }

    #[test]
    fn derivatives_match_differences() {
        for fam in families() {
            for t in [-1.7, 0.4, 2.2] {
                let h = 1e-6;
                let fd = (fam.f(t + h).unwrap() - fam.f(t - h).unwrap()) / (2.0 * h);
                assert!((fd - fam.df(t).unwrap()).abs() <= 1e-6 * fd.abs().max(1.0));
            }
        }
    }

    #[test]
    fn guard_trips() {
        let fam = Family::CriticalExp { alpha0: 1.0, c: 1.0 };
        assert!(matches!(fam.f(30.0), Err(ConeError::Range { .. })));
    }

    #[test]
    fn zero_state() {
        let g = strip(33);
        let spec = NonlinearitySpec::new(Family::Polynomial { p_exp: 4.0 }).unwrap();
        let z = GridFunction::zeros(g);
        assert_eq!(energy(&z, &spec).unwrap(), 0.0);
        assert!(gradient(&z, &spec).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quartic_energy_along_a_ray() {
        let g = strip(33);
        let spec = NonlinearitySpec::new(Family::Polynomial { p_exp: 4.0 }).unwrap();
        let u0 = corpus::random_smooth(g, 3, 1.0, &mut corpus::rng(3));
        let op = DiscreteOperator::new(g);
        let e2 = op.energy_form(&u0).unwrap();
        let q4 = op.inner(&u0.values().iter().map(|v| v.powi(4)).collect::<Vec<_>>(), &vec![1.0; g.len()]);
        let mut values = Vec::new();
        for t in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let e = energy(&u0.scaled(t), &spec).unwrap();
            let exact = 0.5 * t * t * e2 - 0.25 * t.powi(4) * q4;
            assert!((e - exact).abs() <= 1e-8 * exact.abs().max(1.0));
            values.push(e);
        }
        // Eventually negative and strictly decreasing.
        let first_negative = values.iter().position(|&e| e < 0.0).unwrap();
        assert!(values[first_negative..].windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = strip(33);
        for fam in families() {
            let spec = NonlinearitySpec::new(fam).unwrap();
            for (fd, an) in gradient_check(g, &spec, 5, 11, 1.0, 1e-5).unwrap() {
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{fam:?}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn eigenfunction_gradient_plugin() {
        let g = strip(65);
        let op = DiscreteOperator::new(g);
        let eig = op.first_eigenvalue(1e-10).unwrap();
        let spec = NonlinearitySpec::new(Family::Polynomial { p_exp: 4.0 }).unwrap();
        let r = gradient(&eig.eigenfunction, &spec).unwrap();
        let v = eig.eigenfunction.values();
        for k in 0..g.len() {
            let (i, j) = g.ij(k);
            if !g.is_boundary(i, j) {
                let expect = eig.lambda1 * v[k] - v[k].powi(3);
                assert!((r.values()[k] - expect).abs() <= 1e-6 * (1.0 + expect.abs()));
            }
        }
    }

    #[test]
    fn condition_reports() {
        let dom = ConeDomain::bounded_strip(4.0).unwrap();
        let poly = validate_conditions(&NonlinearitySpec::new(Family::Polynomial { p_exp: 4.0 }).unwrap(), 3.0, &dom).unwrap();
        assert!(poly.below_eigenvalue && poly.monotone && poly.superquadratic);
        assert_eq!(poly.growth, GrowthClass::Polynomial { p_exp: 4.0 });
        let crit = validate_conditions(&NonlinearitySpec::new(Family::CriticalExp { alpha0: 1.0, c: 1.0 }).unwrap(), 3.0, &dom).unwrap();
        match crit.growth {
            GrowthClass::Critical { alpha0 } => assert!((alpha0 - 1.0).abs() < 1e-3),
            other => panic!("{other:?}"),
        }
        let th = crit.threshold.unwrap();
        assert!(th.vanishes_above && th.blows_up_below);
        let sub = validate_conditions(&NonlinearitySpec::new(Family::SubcriticalExp { gamma_exp: 1.5, c: 1.0 }).unwrap(), 3.0, &dom).unwrap();
        assert_eq!(sub.growth, GrowthClass::Subcritical);
        assert!(sub.geometry_ok());
        let zero = validate_conditions(&NonlinearitySpec::new(Family::Zero).unwrap(), 3.0, &dom).unwrap();
        assert!(!zero.superquadratic);
    }

    #[test]
    fn endpoint_matches_quartic_oracle() {
        let g = strip(33);
        let op = DiscreteOperator::new(g);
        let eig = op.first_eigenvalue(1e-10).unwrap();
        let spec = NonlinearitySpec::new(Family::Polynomial { p_exp: 4.0 }).unwrap();
        let (_, t) = find_endpoint(&eig.eigenfunction, &spec).unwrap();
        let phi = eig.eigenfunction.values();
        let q4 = op.inner(&phi.iter().map(|v| v.powi(4)).collect::<Vec<_>>(), &vec![1.0; g.len()]);
        let scalar = |t: f64| 0.5 * t * t * eig.lambda1 - 0.25 * t.powi(4) * q4;
        let mut expect = 1.0;
        while scalar(expect) > -1.0 {
            expect *= 2.0;
        }
        assert_eq!(t, expect);
        let none = NonlinearitySpec::new(Family::Zero).unwrap();
        assert!(matches!(find_endpoint(&eig.eigenfunction, &none), Err(ConeError::Solver { .. })));
    }

    #[test]
    fn newton_on_manufactured_and_trivial_problems() {
        let g = strip(33);
        let exact = corpus::random_smooth(g, 3, 1.0, &mut corpus::rng(5));
        let op = DiscreteOperator::new(g);
        let spec = NonlinearitySpec::new(Family::Zero).unwrap().with_forcing(op.apply(&exact).unwrap());
        let out = newton_refine(&GridFunction::zeros(g), &spec, 1e-10).unwrap();
        let err = out.solution.values().iter().zip(exact.values()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1e-8, "{err}");
        let poly = NonlinearitySpec::new(Family::Polynomial { p_exp: 4.0 }).unwrap();
        let triv = newton_refine(&GridFunction::zeros(g), &poly, 1e-10).unwrap();
        assert!(triv.trivial && triv.steps == 0);
    }

    #[test]
    fn mountain_pass_small_grid() {
        let g = strip(33);
        let spec = NonlinearitySpec::new(Family::Polynomial { p_exp: 4.0 }).unwrap();
        let res = mp_solve(g, &spec, MPOptions::default()).unwrap();
        assert!(res.grad_norm <= 1e-6 && res.level > 0.0);
        assert!(res.levels_nonincreasing());
        assert!(res.u_star.values().iter().all(|&v| v >= 0.0));
        let newton = newton_refine(&res.u_star, &spec, 1e-9).unwrap();
        assert!(newton.steps <= 8 && !newton.trivial);
        let e = energy(&newton.solution, &spec).unwrap();
        assert!((e - res.level).abs() <= 1e-4 * res.level);
        let delta = geometry_check(g, &spec, 0.1 * energy_norm(&res.u_star), 50, 1).unwrap();
        assert!(delta > 0.0 && res.level >= delta - 1e-6);
    }
}
