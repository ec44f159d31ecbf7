//! The stretched cone, its log-coordinate flattening and tensor-grid quadrature.
//!
//! A point `(x1, x2)` of the cone is represented in log coordinates
//! `(r, y) = (-ln x1, x2)`. Under this substitution the cone measure
//! `dx1/x1 dx2` becomes the Lebesgue measure `dr dy` and the cone gradient
//! `(x1 d/dx1, d/dx2)` becomes `(-d/dr, d/dy)`, so every grid computation
//! below is an ordinary flat computation on a rectangle.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};

use crate::error::{ConeError, Result};

/// Which cone is being modelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    /// `[0,1) x (-1,1)`; log image `[0, r_max] x [-1, 1]`.
    BoundedStrip,
    /// The half plane `x1 > 0`; log image truncated to `[-r_max, r_max]^2`.
    FullCone,
}

impl DomainKind {
    fn code(self) -> u32 {
        match self {
            DomainKind::BoundedStrip => 0,
            DomainKind::FullCone => 1,
        }
    }

    fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(DomainKind::BoundedStrip),
            1 => Ok(DomainKind::FullCone),
            other => Err(ConeError::Shape(format!("unknown domain kind code {other}"))),
        }
    }
}

/// A truncated cone domain. The conical point sits at `r = +inf` and is never
/// part of the grid; the truncation edge `r = r_max` carries a Dirichlet condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeDomain {
    kind: DomainKind,
    r_max: f64,
}

impl ConeDomain {
    pub fn new(kind: DomainKind, r_max: f64) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(ConeError::InvalidParameter(format!(
                "r_max must be positive and finite, got {r_max}"
            )));
        }
        Ok(Self { kind, r_max })
    }

    pub fn bounded_strip(r_max: f64) -> Result<Self> {
        Self::new(DomainKind::BoundedStrip, r_max)
    }

    pub fn full_cone(r_max: f64) -> Result<Self> {
        Self::new(DomainKind::FullCone, r_max)
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Log-coordinate interval in the `r = -ln x1` direction.
    pub fn r_interval(&self) -> (f64, f64) {
        match self.kind {
            DomainKind::BoundedStrip => (0.0, self.r_max),
            DomainKind::FullCone => (-self.r_max, self.r_max),
        }
    }

    /// Transverse interval in `x2`.
    pub fn y_interval(&self) -> (f64, f64) {
        match self.kind {
            DomainKind::BoundedStrip => (-1.0, 1.0),
            DomainKind::FullCone => (-self.r_max, self.r_max),
        }
    }

    /// Cone measure of the truncated domain (area of the log box).
    pub fn measure(&self) -> f64 {
        let (r0, r1) = self.r_interval();
        let (y0, y1) = self.y_interval();
        (r1 - r0) * (y1 - y0)
    }

    /// Radius of the largest log-metric ball that fits inside the log box.
    pub fn inner_radius(&self) -> f64 {
        let (r0, r1) = self.r_interval();
        let (y0, y1) = self.y_interval();
        0.5 * (r1 - r0).min(y1 - y0)
    }
}

/// `(x1, x2) -> (r, y) = (-ln x1, x2)`.
pub fn to_log(x1: f64, x2: f64) -> Result<(f64, f64)> {
    if !(x1 > 0.0) || !x1.is_finite() || !x2.is_finite() {
        return Err(ConeError::Domain(format!(
            "({x1}, {x2}) has no log image; the conical point x1 = 0 is not representable"
        )));
    }
    Ok((-x1.ln(), x2))
}

/// Inverse of [`to_log`].
pub fn from_log(r: f64, y: f64) -> (f64, f64) {
    ((-r).exp(), y)
}

/// Uniform tensor grid on the log image of a [`ConeDomain`].
///
/// Nodes are stored row-major with `r` as the slow index: node `(i, j)` has
/// flat index `i * ny + j`. Coordinates are computed symmetrically about the
/// centre of each interval so that mirrored nodes have bitwise-negated
/// coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogGrid {
    domain: ConeDomain,
    nr: usize,
    ny: usize,
    hr: f64,
    hy: f64,
}

impl LogGrid {
    pub fn new(domain: ConeDomain, nr: usize, ny: usize) -> Result<Self> {
        if nr < 3 || ny < 3 {
            return Err(ConeError::InvalidParameter(format!(
                "grid needs at least 3 nodes per direction, got {nr} x {ny}"
            )));
        }
        let (r0, r1) = domain.r_interval();
        let (y0, y1) = domain.y_interval();
        Ok(Self {
            domain,
            nr,
            ny,
            hr: (r1 - r0) / (nr - 1) as f64,
            hy: (y1 - y0) / (ny - 1) as f64,
        })
    }

    pub fn domain(&self) -> &ConeDomain {
        &self.domain
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hr(&self) -> f64 {
        self.hr
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn len(&self) -> usize {
        self.nr * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    /// Inverse of [`LogGrid::idx`].
    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k / self.ny, k % self.ny)
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        let (r0, r1) = self.domain.r_interval();
        let centre = 0.5 * (r0 + r1);
        centre + (i as f64 - 0.5 * (self.nr - 1) as f64) * self.hr
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        let (y0, y1) = self.domain.y_interval();
        let centre = 0.5 * (y0 + y1);
        centre + (j as f64 - 0.5 * (self.ny - 1) as f64) * self.hy
    }

    /// Cone coordinate `x1 = e^{-r}` of row `i`.
    pub fn x1(&self, i: usize) -> f64 {
        (-self.r(i)).exp()
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nr || j + 1 == self.ny
    }

    /// Trapezoidal tensor weight of node `(i, j)`.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let wr = if i == 0 || i + 1 == self.nr { 0.5 } else { 1.0 };
        let wy = if j == 0 || j + 1 == self.ny { 0.5 } else { 1.0 };
        wr * wy * self.hr * self.hy
    }

    /// Same grid with a different node count (domain unchanged).
    pub fn with_resolution(&self, nr: usize, ny: usize) -> Result<Self> {
        Self::new(self.domain, nr, ny)
    }

    fn check_same(&self, other: &LogGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(ConeError::Shape(format!(
                "grid mismatch: {}x{} on {:?} vs {}x{} on {:?}",
                self.nr, self.ny, self.domain, other.nr, other.ny, other.domain
            )))
        }
    }
}

/// Nodal values of a function on a [`LogGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: LogGrid,
    values: Vec<f64>,
    dirichlet: bool,
}

impl GridFunction {
    pub fn new(grid: LogGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(ConeError::Shape(format!(
                "expected {} values for a {}x{} grid, got {}",
                grid.len(),
                grid.nr,
                grid.ny,
                values.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            dirichlet: false,
        })
    }

    pub fn zeros(grid: LogGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            dirichlet: true,
        }
    }

    /// Samples `f(r, y)` at every node.
    pub fn from_log_fn(grid: LogGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nr {
            let r = grid.r(i);
            for j in 0..grid.ny {
                values.push(f(r, grid.y(j)));
            }
        }
        Self {
            grid,
            values,
            dirichlet: false,
        }
    }

    /// Samples `f(x1, x2)` given in cone coordinates.
    pub fn from_cone_fn(grid: LogGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_log_fn(grid, |r, y| {
            let (x1, x2) = from_log(r, y);
            f(x1, x2)
        })
    }

    pub fn grid(&self) -> &LogGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        self.dirichlet = false;
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_dirichlet(&self) -> bool {
        self.dirichlet
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    /// Zeroes every boundary node and marks the function as carrying a zero trace.
    pub fn with_dirichlet(mut self) -> Self {
        let (nr, ny) = (self.grid.nr, self.grid.ny);
        for i in 0..nr {
            for j in 0..ny {
                if self.grid.is_boundary(i, j) {
                    self.values[i * ny + j] = 0.0;
                }
            }
        }
        self.dirichlet = true;
        self
    }

    /// True when every boundary value is exactly zero.
    pub fn vanishes_on_boundary(&self) -> bool {
        (0..self.grid.len()).all(|k| {
            let (i, j) = self.grid.ij(k);
            !self.grid.is_boundary(i, j) || self.values[k] == 0.0
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn check_finite(&self, context: &str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(k) => {
                let (i, j) = self.grid.ij(k);
                Err(ConeError::Numeric(format!(
                    "{context}: value {} at node ({i}, {j})",
                    self.values[k]
                )))
            }
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            dirichlet: self.dirichlet && f(0.0) == 0.0,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
            dirichlet: self.dirichlet && other.dirichlet && f(0.0, 0.0) == 0.0,
        })
    }

    /// `a*self + b*other`.
    pub fn lin_comb(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        self.zip_with(other, |x, y| a * x + b * y)
    }

    /// Writes `r,y,value` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(["r", "y", "value"])?;
        for i in 0..self.grid.nr {
            for j in 0..self.grid.ny {
                w.write_record([
                    fmt_f64(self.grid.r(i)),
                    fmt_f64(self.grid.y(j)),
                    fmt_f64(self.at(i, j)),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Compact binary dump: `nr: u32, ny: u32, r_max: f64, kind: u32`, then
    /// `nr*ny` row-major doubles, all little-endian. Reading marks the
    /// function Dirichlet when its boundary values vanish.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_u32::<LittleEndian>(self.grid.nr as u32)?;
        w.write_u32::<LittleEndian>(self.grid.ny as u32)?;
        w.write_f64::<LittleEndian>(self.grid.domain.r_max)?;
        w.write_u32::<LittleEndian>(self.grid.domain.kind.code())?;
        for &v in &self.values {
            w.write_f64::<LittleEndian>(v)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let nr = r.read_u32::<LittleEndian>()? as usize;
        let ny = r.read_u32::<LittleEndian>()? as usize;
        let r_max = r.read_f64::<LittleEndian>()?;
        let kind = DomainKind::from_code(r.read_u32::<LittleEndian>()?)?;
        let grid = LogGrid::new(ConeDomain::new(kind, r_max)?, nr, ny)?;
        let mut values = vec![0.0; grid.len()];
        r.read_f64_into::<LittleEndian>(&mut values)?;
        let u = Self::new(grid, values)?;
        Ok(if u.vanishes_on_boundary() { u.with_dirichlet() } else { u })
    }
}

/// Round-trip-exact decimal rendering used by every CSV writer in the crate.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Weighted pullback `e^{-((n+1)/2 - gamma) r} u(e^{-r}, x)`.
///
/// `u` holds the values `u(t_i, x_j)` at `t_i = e^{-r_i}`, i.e. it was sampled
/// in `t`-coordinates on the nodes of its grid. For `n = 1, gamma = 1` the
/// weight is identically one.
pub fn s_map(u: &GridFunction, gamma: f64, n: u32) -> Result<GridFunction> {
    if !gamma.is_finite() {
        return Err(ConeError::InvalidParameter(format!("gamma = {gamma}")));
    }
    let exponent = 0.5 * (n as f64 + 1.0) - gamma;
    let grid = u.grid;
    let mut values = u.values.clone();
    if exponent != 0.0 {
        for i in 0..grid.nr {
            let w = (-exponent * grid.r(i)).exp();
            for v in &mut values[i * grid.ny..(i + 1) * grid.ny] {
                *v *= w;
            }
        }
    }
    Ok(GridFunction {
        grid,
        values,
        dirichlet: u.dirichlet,
    })
}

/// Trapezoidal approximation of `int u dx1/x1 dx2 = int int u dr dy`.
pub fn integrate(u: &GridFunction) -> Result<f64> {
    u.check_finite("integrate")?;
    Ok(weighted_sum(&u.grid, &u.values))
}

pub(crate) fn weighted_sum(grid: &LogGrid, values: &[f64]) -> f64 {
    let (nr, ny) = (grid.nr, grid.ny);
    let mut total = 0.0;
    for i in 0..nr {
        let wr = if i == 0 || i + 1 == nr { 0.5 } else { 1.0 };
        let row = &values[i * ny..(i + 1) * ny];
        let mut s = 0.5 * (row[0] + row[ny - 1]);
        for v in &row[1..ny - 1] {
            s += v;
        }
        total += wr * s;
    }
    total * grid.hr * grid.hy
}

/// The cone gradient `(x1 d/dx1 u, d/dx2 u) = (-d/dr u, d/dy u)`.
///
/// Second-order central differences in the interior and second-order
/// one-sided differences on the edges.
pub fn cone_gradient(u: &GridFunction) -> (GridFunction, GridFunction) {
    let grid = u.grid;
    let (nr, ny) = (grid.nr, grid.ny);
    let v = &u.values;
    let mut gr = vec![0.0; grid.len()];
    let mut gy = vec![0.0; grid.len()];
    let (ir, iy) = (0.5 / grid.hr, 0.5 / grid.hy);
    for i in 0..nr {
        for j in 0..ny {
            let k = i * ny + j;
            let dr = if i == 0 {
                -3.0 * v[k] + 4.0 * v[k + ny] - v[k + 2 * ny]
            } else if i + 1 == nr {
                3.0 * v[k] - 4.0 * v[k - ny] + v[k - 2 * ny]
            } else {
                v[k + ny] - v[k - ny]
            };
            let dy = if j == 0 {
                -3.0 * v[k] + 4.0 * v[k + 1] - v[k + 2]
            } else if j + 1 == ny {
                3.0 * v[k] - 4.0 * v[k - 1] + v[k - 2]
            } else {
                v[k + 1] - v[k - 1]
            };
            gr[k] = -dr * ir;
            gy[k] = dy * iy;
        }
    }
    (
        GridFunction {
            grid,
            values: gr,
            dirichlet: false,
        },
        GridFunction {
            grid,
            values: gy,
            dirichlet: false,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn strip(r_max: f64, n: usize) -> LogGrid {
        LogGrid::new(ConeDomain::bounded_strip(r_max).unwrap(), n, n).unwrap()
    }

    #[test]
    fn to_log_examples() {
        assert_eq!(to_log(1.0, 0.5).unwrap(), (0.0, 0.5));
        let (r, y) = to_log((-2.0f64).exp(), 0.0).unwrap();
        assert_relative_eq!(r, 2.0, epsilon = 1e-15);
        assert_eq!(y, 0.0);
        assert!(matches!(to_log(0.0, 0.0), Err(ConeError::Domain(_))));
        assert!(to_log(-1.0, 0.0).is_err());
    }

    #[test]
    fn round_trip_is_exact_on_truncated_range() {
        let r_max = 8.0;
        for k in 0..=200 {
            let x1 = (-(r_max * k as f64 / 200.0)).exp();
            let (r, y) = to_log(x1, 0.3).unwrap();
            let (x1b, yb) = from_log(r, y);
            assert!((x1b - x1).abs() <= 4.0 * f64::EPSILON * x1);
            assert_eq!(yb, 0.3);
        }
    }

    #[test]
    fn grid_invariants() {
        let g = strip(8.0, 257);
        assert_relative_eq!(g.hr(), 8.0 / 256.0);
        assert_relative_eq!(g.hy(), 2.0 / 256.0);
        assert_eq!(g.r(0), 0.0);
        assert_relative_eq!(g.r(256), 8.0, epsilon = 1e-14);
        assert_relative_eq!(g.y(0), -1.0, epsilon = 1e-15);
        assert_eq!(g.y(128), 0.0);
        let c = LogGrid::new(ConeDomain::full_cone(3.0).unwrap(), 9, 9).unwrap();
        for i in 0..9 {
            assert_eq!(c.r(i), -c.r(8 - i));
        }
        assert!(LogGrid::new(ConeDomain::full_cone(1.0).unwrap(), 2, 5).is_err());
        assert!(ConeDomain::full_cone(0.0).is_err());
        assert!(ConeDomain::full_cone(f64::INFINITY).is_err());
    }

    #[test]
    fn wrong_length_is_a_shape_error() {
        let g = strip(1.0, 5);
        assert!(matches!(
            GridFunction::new(g, vec![0.0; 24]),
            Err(ConeError::Shape(_))
        ));
    }

    #[test]
    fn integrate_constant_gives_box_area() {
        let g = strip(5.0, 33);
        let one = GridFunction::from_log_fn(g, |_, _| 1.0);
        assert_relative_eq!(integrate(&one).unwrap(), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn integrate_x1_converges_at_second_order() {
        let r_max = 6.0;
        let exact = 2.0 * (1.0 - (-r_max as f64).exp());
        let errs: Vec<f64> = [33usize, 65, 129]
            .iter()
            .map(|&n| {
                let u = GridFunction::from_cone_fn(strip(r_max, n), |x1, _| x1);
                (integrate(&u).unwrap() - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.9..=2.1).contains(&order), "order {order}");
        }
        assert!(errs[2] < 1e-3);
    }

    #[test]
    fn integrate_rejects_nan() {
        let g = strip(1.0, 5);
        let mut u = GridFunction::zeros(g);
        u.values_mut()[7] = f64::NAN;
        assert!(matches!(integrate(&u), Err(ConeError::Numeric(_))));
    }

    #[test]
    fn s_map_weights() {
        let g = strip(4.0, 17);
        let u = GridFunction::from_cone_fn(g, |x1, x2| x1 * x1 + x2);
        assert_eq!(s_map(&u, 1.0, 1).unwrap(), u);
        let one = GridFunction::from_log_fn(g, |_, _| 1.0);
        let w = s_map(&one, 0.0, 1).unwrap();
        for i in 0..g.nr() {
            assert_relative_eq!(w.at(i, 3), (-g.r(i)).exp(), max_relative = 1e-15);
        }
        // Symbolically e^{-r/2} * (e^{-r})^{p}: equals one exactly when p = -1/2.
        let u = GridFunction::from_cone_fn(g, |t, _| t.powf(-0.5));
        let s = s_map(&u, 0.5, 1).unwrap();
        assert!(s.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let u = GridFunction::from_cone_fn(g, |t, _| t.sqrt());
        let s = s_map(&u, 0.5, 1).unwrap();
        for i in 0..g.nr() {
            assert_relative_eq!(s.at(i, 0), (-g.r(i)).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn gradient_examples() {
        let g = strip(3.0, 65);
        let u = GridFunction::from_cone_fn(g, |x1, _| x1);
        let (gr, gy) = cone_gradient(&u);
        for i in 1..g.nr() - 1 {
            let x1 = g.x1(i);
            assert!((gr.at(i, 10) - x1).abs() < 0.5 * g.hr() * g.hr());
            assert!(gy.at(i, 10).abs() < 1e-12);
        }
        let u = GridFunction::from_cone_fn(g, |_, x2| x2);
        let (gr, gy) = cone_gradient(&u);
        assert!(gr.max_abs() < 1e-12);
        assert!(gy.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        // x1 d/dx1 ln x1 = 1.
        let u = GridFunction::from_cone_fn(g, |x1, _| x1.ln());
        let (gr, _) = cone_gradient(&u);
        assert!(gr.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn gradient_converges_at_second_order() {
        let f = |r: f64, y: f64| (-(r - 1.0).powi(2)).exp() * (2.0 * y).cos();
        let dfr = |r: f64, y: f64| 2.0 * (r - 1.0) * (-(r - 1.0).powi(2)).exp() * (2.0 * y).cos();
        let dfy = |r: f64, y: f64| -2.0 * (-(r - 1.0).powi(2)).exp() * (2.0 * y).sin();
        let errs: Vec<f64> = [33usize, 65, 129]
            .iter()
            .map(|&n| {
                let g = strip(3.0, n);
                let u = GridFunction::from_log_fn(g, f);
                let (gr, gy) = cone_gradient(&u);
                let mut e: f64 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let (r, y) = (g.r(i), g.y(j));
                        e = e.max((gr.at(i, j) - dfr(r, y)).abs());
                        e = e.max((gy.at(i, j) - dfy(r, y)).abs());
                    }
                }
                e
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.8..=2.2).contains(&order), "order {order}");
        }
    }

    #[test]
    fn binary_and_csv_round_trip() {
        let g = LogGrid::new(ConeDomain::full_cone(2.0).unwrap(), 5, 7).unwrap();
        let u = GridFunction::from_log_fn(g, |r, y| r.sin() + y * 1e-7 + 1.0 / 3.0);
        let mut buf = Vec::new();
        u.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 8 + 4 + 8 * 35);
        let back = GridFunction::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.values(), u.values());
        assert_eq!(back.grid(), u.grid());

        let mut csv_buf = Vec::new();
        u.write_csv(&mut csv_buf).unwrap();
        let text = String::from_utf8(csv_buf).unwrap();
        assert!(text.starts_with("r,y,value\n"));
        assert!(!text.contains('\r'));
        let parsed: Vec<f64> = text
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
            .collect();
        assert_eq!(parsed, u.values());
    }
}
