//! Seeded test-function families shared by the verification experiments.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erf;

use crate::cone_domain::{GridFunction, LogGrid};

/// A named function of `s = ln t` for the Mellin checks.
pub struct HalfLineCase {
    pub name: &'static str,
    pub f: fn(f64) -> f64,
}

fn gaussian(s: f64) -> f64 {
    (-s * s).exp()
}

fn shifted_gaussian(s: f64) -> f64 {
    (-(s - 0.7) * (s - 0.7) / 0.5).exp()
}

fn t_gaussian(s: f64) -> f64 {
    (s - s * s).exp()
}

fn log_gaussian(s: f64) -> f64 {
    s * (-s * s).exp()
}

/// Indicator of `[e^{-1}, e^{1}]` smoothed in `ln t` at width 0.4.
fn smooth_indicator_a(s: f64) -> f64 {
    0.5 * (erf((s + 1.0) / 0.4) - erf((s - 1.0) / 0.4))
}

/// Indicator of `[e^{-1/2}, e^{2}]` smoothed at width 0.6.
fn smooth_indicator_b(s: f64) -> f64 {
    0.5 * (erf((s + 0.5) / 0.6) - erf((s - 2.0) / 0.6))
}

/// Four Gaussian-type and two smoothed-indicator functions of `ln t`.
pub fn mellin_corpus() -> Vec<HalfLineCase> {
    vec![
        HalfLineCase { name: "gaussian", f: gaussian },
        HalfLineCase { name: "shifted-gaussian", f: shifted_gaussian },
        HalfLineCase { name: "t-gaussian", f: t_gaussian },
        HalfLineCase { name: "log-gaussian", f: log_gaussian },
        HalfLineCase { name: "smooth-indicator-a", f: smooth_indicator_a },
        HalfLineCase { name: "smooth-indicator-b", f: smooth_indicator_b },
    ]
}

/// `(1 - q)^4` for `q < 1`, zero beyond: a C³ bump in the quadratic form `q`.
pub fn poly_bump(q: f64) -> f64 {
    if q < 1.0 {
        let a = 1.0 - q;
        a * a * a * a
    } else {
        0.0
    }
}

/// One anisotropic, rotated bump with random centre, axes and amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub center: (f64, f64),
    pub axes: (f64, f64),
    pub angle: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn eval(&self, r: f64, y: f64) -> f64 {
        let (dr, dy) = (r - self.center.0, y - self.center.1);
        let (c, s) = (self.angle.cos(), self.angle.sin());
        let a = (c * dr + s * dy) / self.axes.0;
        let b = (-s * dr + c * dy) / self.axes.1;
        self.amplitude * poly_bump(a * a + b * b)
    }

    /// Largest distance of the support from the log-origin.
    pub fn reach(&self) -> f64 {
        self.center.0.hypot(self.center.1) + self.axes.0.max(self.axes.1)
    }
}

/// Sums of one to three random bumps whose supports stay within `reach` of
/// the log-origin; deterministic in `seed`.
pub fn bump_corpus(count: usize, reach: f64, seed: u64) -> Vec<Vec<Bump>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let parts = rng.gen_range(1..=3);
            (0..parts)
                .map(|_| {
                    let a0 = rng.gen_range(0.15..0.4) * reach;
                    let a1 = rng.gen_range(0.15..0.4) * reach;
                    let room = reach - a0.max(a1);
                    let rad = rng.gen_range(0.0..room);
                    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                    Bump {
                        center: (rad * phi.cos(), rad * phi.sin()),
                        axes: (a0, a1),
                        angle: rng.gen_range(0.0..std::f64::consts::PI),
                        amplitude: rng.gen_range(0.3..1.5),
                    }
                })
                .collect()
        })
        .collect()
}

pub fn sample_bumps(grid: LogGrid, bumps: &[Bump]) -> GridFunction {
    GridFunction::from_log_fn(grid, |r, y| bumps.iter().map(|b| b.eval(r, y)).sum()).with_dirichlet()
}

/// Random combination of the lowest `modes × modes` Dirichlet sine modes of
/// the grid's rectangle, coefficients uniform in `[-amp, amp]` damped by `1/(mn)`.
pub fn random_smooth(grid: LogGrid, modes: usize, amp: f64, rng: &mut ChaCha8Rng) -> GridFunction {
    let (r0, r1) = grid.domain().r_interval();
    let (y0, y1) = grid.domain().y_interval();
    let mut coef = vec![0.0; modes * modes];
    for (k, c) in coef.iter_mut().enumerate() {
        let (m, n) = (k / modes + 1, k % modes + 1);
        *c = rng.gen_range(-amp..=amp) / (m * n) as f64;
    }
    let pi = std::f64::consts::PI;
    GridFunction::from_log_fn(grid, |r, y| {
        let (a, b) = ((r - r0) / (r1 - r0), (y - y0) / (y1 - y0));
        let mut s = 0.0;
        for m in 1..=modes {
            let sm = (m as f64 * pi * a).sin();
            for n in 1..=modes {
                s += coef[(m - 1) * modes + n - 1] * sm * (n as f64 * pi * b).sin();
            }
        }
        s
    })
    .with_dirichlet()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_domain::ConeDomain;

    #[test]
    fn corpus_is_deterministic_and_contained() {
        let a = bump_corpus(20, 0.8, 7);
        assert_eq!(a, bump_corpus(20, 0.8, 7));
        assert!(a.iter().flatten().all(|b| b.reach() <= 0.8 + 1e-12));
    }

    #[test]
    fn random_smooth_vanishes_on_edges() {
        let g = LogGrid::new(ConeDomain::bounded_strip(2.0).unwrap(), 17, 9).unwrap();
        let u = random_smooth(g, 3, 1.0, &mut rng(1));
        assert!(u.vanishes_on_boundary());
        assert!(u.max_abs() > 0.0);
    }

    #[test]
    fn mellin_cases_decay() {
        for c in mellin_corpus() {
            assert!((c.f)(12.0).abs() < 1e-40 && (c.f)(-12.0).abs() < 1e-40, "{}", c.name);
        }
    }
}
