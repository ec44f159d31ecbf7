use cone_mt_core::corpus::{sample_bumps, Bump};
use cone_mt_core::mt_lab::{dirichlet_norm, l2_norm_sq, mt_ratio, scale_map};
use rayon::prelude::*;
use serde::Deserialize;

use super::{full_cone_grid, timed};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{Check, Figure, Outcome, Table};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    factors: Vec<f64>,
    alpha: f64,
    bump: BumpParams,
    norm_tol: f64,
    ratio_tol: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BumpParams {
    center: (f64, f64),
    axes: (f64, f64),
    angle: f64,
    amplitude: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            factors: vec![0.5, 2.0, 3.0],
            alpha: 2.0 * std::f64::consts::PI,
            bump: BumpParams {
                center: (0.05, -0.03),
                axes: (0.4, 0.3),
                angle: 0.5,
                amplitude: 1.0,
            },
            norm_tol: 1e-3,
            ratio_tol: 2e-3,
        }
    }
}

const GROUP: &str = "scaling";

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let p: Params = config.params()?;
    let grid = full_cone_grid(config)?;
    let bump = Bump {
        center: p.bump.center,
        axes: p.bump.axes,
        angle: p.bump.angle,
        amplitude: p.bump.amplitude,
    };
    let mut out = Outcome::default();
    timed(&mut out, GROUP, |out| {
        let u = sample_bumps(grid, &[bump]);
        let (g0, l0, m0) = (dirichlet_norm(&u)?, l2_norm_sq(&u)?, mt_ratio(&u, p.alpha)?);
        let rows = p
            .factors
            .par_iter()
            .map(|&r| {
                let ur = scale_map(&u, r)?;
                Ok((
                    r,
                    dirichlet_norm(&ur)? / g0,
                    l2_norm_sq(&ur)? * r * r / l0,
                    mt_ratio(&ur, p.alpha)? / m0,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut table = Table::new("scale-invariance", &["r", "grad_ratio", "l2_scaled_ratio", "mt_ratio_ratio"]);
        table.push(vec![1.0.into(), 1.0.into(), 1.0.into(), 1.0.into()]);
        for &(r, g, l, m) in &rows {
            table.push(vec![r.into(), g.into(), l.into(), m.into()]);
            let (lo, hi) = (1.0 - p.norm_tol, 1.0 + p.norm_tol);
            out.check(Check::within(GROUP, format!("r={r}/gradient-norm"), g, lo, hi));
            out.check(Check::within(GROUP, format!("r={r}/l2-norm"), l, lo, hi));
            out.check(Check::at_most(GROUP, format!("r={r}/mt-ratio"), (m - 1.0).abs(), p.ratio_tol));
        }
        out.value("mt_ratio", m0);
        out.tables.push(table);
        out.figures.push(Figure::new(
            "scale-invariance",
            "scale-invariance",
            "r",
            &["grad_ratio", "l2_scaled_ratio", "mt_ratio_ratio"],
        ));
        Ok(())
    })?;
    Ok(out)
}
