use std::time::Instant;

use cone_mt_core::cone_domain::{integrate, GridFunction, LogGrid};
use cone_mt_core::mountain_pass::{
    energy, energy_norm, gradient_check, mp_solve, newton_refine, validate_conditions, Family, MPOptions,
    NonlinearitySpec,
};
use cone_mt_core::mt_lab::moser_function_2d;
use cone_mt_core::{ConeError, ALPHA_2};
use rayon::prelude::*;
use serde::Deserialize;

use super::{strip_grid, timed};
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::report::{Check, Figure, Outcome, Table};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    families: Vec<Family>,
    path_points: usize,
    tol: f64,
    max_iterations: usize,
    newton_tol: f64,
    energy_tol: f64,
    identity_tol: f64,
    gradient_pairs: usize,
    gradient_tol: f64,
    gradient_step: f64,
    gradient_amplitude: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            families: shipped().into_iter().filter(|f| *f != Family::Zero).collect(),
            path_points: 21,
            tol: 1e-6,
            max_iterations: 4000,
            newton_tol: 1e-9,
            energy_tol: 1e-4,
            identity_tol: 1e-6,
            gradient_pairs: 20,
            gradient_tol: 1e-6,
            gradient_step: 1e-5,
            gradient_amplitude: 1.0,
        }
    }
}

/// The nonlinearities shipped as standard configurations.
fn shipped() -> Vec<Family> {
    vec![
        Family::Zero,
        Family::Polynomial { p_exp: 4.0 },
        Family::SubcriticalExp { gamma_exp: 1.5, c: 1.0 },
        Family::CriticalExp { alpha0: 0.5, c: 1.0 },
    ]
}

pub const GATE: &str = "gradient-gate";

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let p: Params = config.params()?;
    if p.families.is_empty() {
        return Err(CliError::Usage("mp-solve needs at least one family".into()));
    }
    for f in &p.families {
        f.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let grid = strip_grid(config)?;
    let labels = labels(&p.families);
    let mut out = Outcome::default();
    timed(&mut out, GATE, |out| gate(&p, grid, config.seed, out))?;
    let runs = p
        .families
        .par_iter()
        .zip(&labels)
        .map(|(f, label)| {
            let start = Instant::now();
            let r = solve(&p, grid, *f, label);
            (r, start.elapsed())
        })
        .collect::<Vec<_>>();
    let mut summary = Table::new(
        "mp-runs",
        &["family", "level", "grad_norm", "iterations", "newton_residual", "newton_level", "lambda1"],
    );
    let mut critical = Table::new("critical-levels", &["alpha0", "level", "moser_ray_max", "bound"]);
    for ((f, label), (r, elapsed)) in p.families.iter().zip(&labels).zip(runs) {
        let run = r?;
        out.timings.push((label.clone(), elapsed));
        summary.push(vec![
            label.as_str().into(),
            run.level.into(),
            run.grad_norm.into(),
            run.iterations.into(),
            run.newton_residual.into(),
            run.newton_level.into(),
            run.lambda1.into(),
        ]);
        if let Family::CriticalExp { alpha0, .. } = f {
            let ray = run.moser_ray_max.unwrap_or(f64::NAN);
            critical.push(vec![(*alpha0).into(), run.level.into(), ray.into(), (0.5 * ALPHA_2 / alpha0).into()]);
            out.value(format!("{label}/moser-ray-max"), ray);
        }
        out.value(format!("{label}/level"), run.level);
        out.value(format!("{label}/iterations"), run.iterations as f64);
        out.checks.extend(run.checks);
        let history = format!("history-{label}");
        let path = format!("path-{label}");
        out.figures
            .push(Figure::new(&format!("convergence-{label}"), &history, "iteration", &["grad_norm"]).log_y());
        out.figures
            .push(Figure::new(&format!("path-energy-{label}"), &path, "node", &["energy"]));
        out.tables.push(run.history);
        out.tables.push(run.path);
    }
    out.tables.push(summary);
    if !critical.rows.is_empty() {
        out.figures
            .push(Figure::new("level-vs-alpha0", "critical-levels", "alpha0", &["level", "moser_ray_max", "bound"]));
        out.tables.push(critical);
    }
    Ok(out)
}

/// Check-group and file labels: the family name, numbered when it repeats.
fn labels(families: &[Family]) -> Vec<String> {
    families
        .iter()
        .enumerate()
        .map(|(i, f)| {
            if families.iter().filter(|g| g.name() == f.name()).count() > 1 {
                format!("{}-{}", f.name(), i + 1)
            } else {
                f.name().to_string()
            }
        })
        .collect()
}

/// Finite-difference check of the gradient for every shipped and configured family.
fn gate(p: &Params, grid: LogGrid, seed: u64, out: &mut Outcome) -> Result<()> {
    let mut families = shipped();
    for f in &p.families {
        if !families.contains(f) {
            families.push(*f);
        }
    }
    let mut table = Table::new("gradient-gate", &["family", "pair", "finite_difference", "pairing", "error"]);
    for f in families {
        let spec = NonlinearitySpec::new(f)?;
        let pairs = gradient_check(grid, &spec, p.gradient_pairs, seed, p.gradient_amplitude, p.gradient_step)?;
        let mut worst: f64 = 0.0;
        for (i, (fd, an)) in pairs.iter().enumerate() {
            let err = (fd - an).abs() / an.abs().max(1.0);
            worst = worst.max(err);
            table.push(vec![f.name().into(), i.into(), (*fd).into(), (*an).into(), err.into()]);
        }
        out.check(Check::at_most(GATE, format!("{}/directional-derivative", f.name()), worst, p.gradient_tol));
    }
    out.tables.push(table);
    Ok(())
}

struct Run {
    level: f64,
    grad_norm: f64,
    iterations: usize,
    newton_residual: f64,
    newton_level: f64,
    lambda1: f64,
    /// `max_{t ≥ 0} I(t M)` along the ray of a normalized truncated logarithm.
    moser_ray_max: Option<f64>,
    checks: Vec<Check>,
    history: Table,
    path: Table,
}

fn solve(p: &Params, grid: LogGrid, family: Family, group: &str) -> Result<Run> {
    let spec = NonlinearitySpec::new(family)?;
    let options = MPOptions {
        path_points: p.path_points,
        tol: p.tol,
        max_iterations: p.max_iterations,
    };
    let res = mp_solve(grid, &spec, options)?;
    let mut checks = Vec::new();
    let report = validate_conditions(&spec, res.lambda1, grid.domain())?;
    checks.push(Check::holds(group, "geometry-conditions", report.geometry_ok()));
    checks.push(Check::at_most(group, "gradient-norm", res.grad_norm, p.tol));
    checks.push(Check::holds(group, "path-maximum-nonincreasing", res.levels_nonincreasing()));
    checks.push(Check::at_least(group, "level-positive", res.level, f64::MIN_POSITIVE));

    let newton = newton_refine(&res.u_star, &spec, p.newton_tol)?;
    let newton_level = energy(&newton.solution, &spec)?;
    checks.push(Check::at_most(group, "newton-residual", newton.residual, p.newton_tol));
    checks.push(Check::at_most(
        group,
        "energy-agreement",
        (newton_level - res.level).abs() / res.level.abs(),
        p.energy_tol,
    ));
    checks.push(Check::holds(group, "nontrivial", !newton.trivial && res.u_star.max_abs() > 0.0));
    let (lo, hi) = res
        .u_star
        .values()
        .iter()
        .fold((0.0_f64, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let one_signed = lo >= -1e-10 * hi || hi <= -1e-10 * lo;
    checks.push(Check::holds(group, "one-signed", one_signed));

    if let Family::CriticalExp { alpha0, .. } = family {
        checks.push(Check::at_most(group, "level-below-threshold", res.level, 0.5 * ALPHA_2 / alpha0));
        let norm_sq = energy_norm(&res.u_star).powi(2);
        let mut prim = Vec::with_capacity(grid.len());
        for &v in res.u_star.values() {
            prim.push(2.0 * family.primitive(v)?);
        }
        let two_f = integrate(&GridFunction::new(grid, prim)?)?;
        let defect = (norm_sq - two_f - 2.0 * res.level).abs() / (2.0 * res.level);
        checks.push(Check::at_most(group, "energy-identity", defect, p.identity_tol));
    }
    let moser_ray_max = match family {
        Family::CriticalExp { .. } => Some(moser_ray_max(grid, &spec)?),
        _ => None,
    };

    let mut history = Table::new(&format!("history-{group}"), &["iteration", "level", "grad_norm", "step"]);
    for h in &res.history {
        history.push(vec![h.iteration.into(), h.level.into(), h.grad_norm.into(), h.step.into()]);
    }
    let mut path = Table::new(&format!("path-{group}"), &["node", "energy"]);
    for (i, e) in res.path_energies.iter().enumerate() {
        path.push(vec![i.into(), (*e).into()]);
    }
    Ok(Run {
        level: res.level,
        grad_norm: res.grad_norm,
        iterations: res.iterations,
        newton_residual: newton.residual,
        newton_level,
        lambda1: res.lambda1,
        moser_ray_max,
        checks,
        history,
        path,
    })
}

/// Largest energy along `t ↦ t M`, `M` the unit-gradient truncated logarithm
/// centred in the strip. The ray is scanned until the energy turns negative
/// or the exponent guard trips, then the best bracket is refined.
fn moser_ray_max(grid: LogGrid, spec: &NonlinearitySpec) -> Result<f64> {
    let r_max = grid.domain().r_max();
    let m = moser_function_2d(grid, (0.5 * r_max).min(1.0), (0.5 * r_max, 0.0))?;
    let at = |t: f64| -> Result<Option<f64>> {
        match energy(&m.scaled(t), spec) {
            Ok(e) => Ok(Some(e)),
            Err(ConeError::Range { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    };
    let step = 0.05;
    let (mut best_t, mut best) = (0.0, 0.0);
    let mut t = step;
    while let Some(e) = at(t)? {
        if e > best {
            (best_t, best) = (t, e);
        }
        if e < 0.0 {
            break;
        }
        t += step;
    }
    let (mut lo, mut hi) = ((best_t - step).max(0.0), best_t + step);
    for _ in 0..60 {
        let (a, b) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        match (at(a)?, at(b)?) {
            (Some(ea), Some(eb)) if ea < eb => lo = a,
            (Some(_), _) => hi = b,
            (None, _) => hi = a,
        }
    }
    Ok(at(0.5 * (lo + hi))?.unwrap_or(best).max(best))
}
