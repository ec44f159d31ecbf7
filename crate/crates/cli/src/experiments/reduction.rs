use cone_mt_core::cone_domain::{GridFunction, LogGrid};
use cone_mt_core::corpus::poly_bump;
use cone_mt_core::mt_lab::{admissibility_integral, blowup_profile_with, mt_functional, one_d_functional, reduced_mt_functional};
use cone_mt_core::rearrangement::{rearrange, reduce_to_1d, ProfileVariable, RadialProfile};
use rayon::prelude::*;
use serde::Deserialize;

use super::{full_cone_grid, slope, timed};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{Cell, Check, Figure, Outcome, Table};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    subcritical_betas: Vec<f64>,
    subcritical_slack: f64,
    critical_t1: Vec<f64>,
    supercritical_betas: Vec<f64>,
    supercritical_t1: Vec<f64>,
    /// Cell width of the blow-up profiles; the stability check halves it.
    blowup_step: f64,
    stability_tol: f64,
    slope_tol: f64,
    reduction_alphas: Vec<f64>,
    reduction_tol: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            subcritical_betas: vec![0.25, 0.5, 0.75],
            subcritical_slack: 1e-6,
            critical_t1: (1..=20).map(f64::from).collect(),
            supercritical_betas: vec![1.1, 1.2],
            supercritical_t1: (5..=25).map(f64::from).collect(),
            blowup_step: 0.01,
            stability_tol: 1e-2,
            slope_tol: 5e-2,
            reduction_alphas: vec![std::f64::consts::PI, 2.0 * std::f64::consts::PI],
            reduction_tol: 1e-3,
        }
    }
}

const DICHOTOMY: &str = "dichotomy";
const REDUCTION: &str = "reduction";

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let p: Params = config.params()?;
    let grid = full_cone_grid(config)?;
    let mut out = Outcome::default();
    timed(&mut out, DICHOTOMY, |out| dichotomy(&p, out))?;
    timed(&mut out, REDUCTION, |out| reduction(&p, grid, out))?;
    Ok(out)
}

/// Scales `w` to unit `∫ẇ² dt` of its piecewise-linear interpolant.
fn normalized(name: &str, grid: &[f64], f: impl Fn(f64) -> f64) -> Result<(String, RadialProfile)> {
    let w = RadialProfile::from_fn(ProfileVariable::MoserT, grid.to_vec(), f)?;
    let s = admissibility_integral(&w, 2.0).sqrt();
    let values = w.values().iter().map(|v| v / s).collect();
    Ok((name.to_string(), RadialProfile::new(ProfileVariable::MoserT, grid.to_vec(), values)?))
}

/// Admissible profiles for the subcritical bound: blow-up ramps and smooth
/// saturating shapes, all with `w(0) = 0` and unit `∫ẇ²`.
fn admissible_suite(step: f64) -> Result<Vec<(String, RadialProfile)>> {
    let mut suite = Vec::new();
    for t1 in [0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
        suite.push((format!("ramp-{t1}"), blowup_profile_with(t1, 2.0, t1 + 1.0, step)?));
    }
    let grid = RadialProfile::uniform_grid(200.0, 20001);
    for a in [0.1, 1.0, 5.0] {
        suite.push(normalized(&format!("saturating-{a}"), &grid, |t| 1.0 - (-a * t).exp())?);
    }
    suite.push(normalized("arctan", &grid, f64::atan)?);
    suite.push(normalized("tanh", &grid, f64::tanh)?);
    Ok(suite)
}

fn blowup(t1: f64, beta: f64, step: f64) -> Result<f64> {
    Ok(one_d_functional(&blowup_profile_with(t1, 2.0, t1 + 1.0, step)?, beta, 2.0)?)
}

fn dichotomy(p: &Params, out: &mut Outcome) -> Result<()> {
    // Subcritical exponents: J ≤ 1/(1 - β) on every admissible profile.
    let suite = admissible_suite(p.blowup_step)?;
    let mut sub = Table::new("subcritical", &["profile", "beta", "functional", "bound"]);
    for &beta in &p.subcritical_betas {
        let bound = 1.0 / (1.0 - beta);
        for (name, w) in &suite {
            let j = one_d_functional(w, beta, 2.0)?;
            sub.push(vec![name.as_str().into(), beta.into(), j.into(), bound.into()]);
            out.check(Check::at_most(
                DICHOTOMY,
                format!("beta={beta}/{name}/bounded"),
                j,
                bound + p.subcritical_slack,
            ));
        }
    }
    out.tables.push(sub);

    // Blow-up family over a common range of t₁ for every exponent.
    let mut t1s: Vec<f64> = p.critical_t1.iter().chain(&p.supercritical_t1).copied().collect();
    t1s.sort_by(f64::total_cmp);
    t1s.dedup();
    let betas: Vec<f64> = std::iter::once(1.0).chain(p.supercritical_betas.iter().copied()).collect();
    let rows = t1s
        .par_iter()
        .map(|&t1| {
            let mut row = vec![blowup(t1, 1.0, 0.5 * p.blowup_step)?];
            for &b in &betas {
                row.push(blowup(t1, b, p.blowup_step)?);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec!["t1".to_string(), "beta_1_refined".to_string()];
    header.extend(betas.iter().map(|b| format!("beta_{b}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::new("blowup", &header_refs);
    for (t1, row) in t1s.iter().zip(&rows) {
        let mut cells: Vec<Cell> = vec![(*t1).into()];
        cells.extend(row.iter().map(|&v| Cell::Num(v)));
        table.push(cells);
    }
    out.tables.push(table);
    let y: Vec<&str> = header_refs[2..].to_vec();
    out.figures.push(Figure::new("functional-vs-t1", "blowup", "t1", &y).log_y());

    // β = 1: bounded, with the bound stable under halving the cell width.
    let pick = |ts: &[f64], col: usize| -> Vec<f64> {
        ts.iter()
            .map(|t| rows[t1s.iter().position(|s| s == t).unwrap()][col])
            .collect()
    };
    let coarse = pick(&p.critical_t1, 1).into_iter().fold(f64::NEG_INFINITY, f64::max);
    let fine = pick(&p.critical_t1, 0).into_iter().fold(f64::NEG_INFINITY, f64::max);
    out.value("critical_constant", coarse);
    out.value("critical_constant_refined", fine);
    out.check(Check::holds(DICHOTOMY, "beta=1/bounded", coarse.is_finite()));
    out.check(Check::at_most(
        DICHOTOMY,
        "beta=1/constant-stable-under-refinement",
        (fine - coarse).abs() / coarse,
        p.stability_tol,
    ));

    // β > 1: log J grows linearly in t₁ with slope β - 1.
    for (k, &beta) in p.supercritical_betas.iter().enumerate() {
        let logs: Vec<f64> = pick(&p.supercritical_t1, k + 2).iter().map(|v| v.ln()).collect();
        let s = slope(&p.supercritical_t1, &logs);
        out.value(format!("slope_beta_{beta}"), s);
        out.check(Check::at_most(
            DICHOTOMY,
            format!("beta={beta}/log-slope"),
            (s - (beta - 1.0)).abs() / (beta - 1.0),
            p.slope_tol,
        ));
    }
    Ok(())
}

/// Radial test profiles `(name, support radius, ρ ↦ u)`.
fn radial_profiles() -> Vec<(&'static str, f64, Box<dyn Fn(f64) -> f64 + Sync>)> {
    let pi = std::f64::consts::PI;
    vec![
        ("quartic-bump", 0.8, Box::new(|r: f64| poly_bump(r * r / 0.64))),
        ("cosine-square", 0.7, Box::new(move |r: f64| if r < 0.7 { (0.5 * pi * r / 0.7).cos().powi(2) } else { 0.0 })),
        ("smooth-compact", 0.9, Box::new(|r: f64| {
            let q = 1.0 - r * r / 0.81;
            if q > 0.0 { (1.0 - 1.0 / q).exp() } else { 0.0 }
        })),
        ("cubic-cap", 0.5, Box::new(|r: f64| (1.0 - r * r / 0.25).max(0.0).powi(3))),
        ("tall-bump", 0.6, Box::new(|r: f64| 2.0 * poly_bump(r * r / 0.36))),
    ]
}

fn reduction(p: &Params, grid: LogGrid, out: &mut Outcome) -> Result<()> {
    let profiles = radial_profiles();
    let rows = profiles
        .par_iter()
        .map(|(name, radius, f)| {
            let u = GridFunction::from_log_fn(grid, |r, y| f(r.hypot(y))).with_dirichlet();
            let (profile, _) = rearrange(&u)?;
            // The ball must hold the interpolant's support, which ends one lattice radius out.
            let ball = radius + 2.0 * grid.hr().max(grid.hy());
            let w = reduce_to_1d(&profile, ball)?;
            let mut vals = Vec::new();
            for &alpha in &p.reduction_alphas {
                vals.push((alpha, mt_functional(&u, alpha)?, reduced_mt_functional(&w, alpha, ball)?));
            }
            Ok((*name, vals))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new("reduction", &["profile", "alpha", "two_d", "ball_times_one_d", "rel_diff"]);
    for (name, vals) in &rows {
        for &(alpha, two, one) in vals {
            let rel = (two - one).abs() / two.abs();
            table.push(vec![(*name).into(), alpha.into(), two.into(), one.into(), rel.into()]);
            out.check(Check::at_most(REDUCTION, format!("{name}/alpha={alpha:.6}"), rel, p.reduction_tol));
        }
    }
    out.tables.push(table);
    Ok(())
}
