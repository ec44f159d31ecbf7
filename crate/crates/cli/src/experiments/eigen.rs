use cone_mt_core::cone_domain::{ConeDomain, LogGrid};
use cone_mt_core::cone_operator::DiscreteOperator;
use rayon::prelude::*;
use serde::Deserialize;

use super::{strip_grid, timed};
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::report::{Check, Figure, Outcome, Table};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    /// Number of grids, each halving the spacing of the previous one and
    /// ending at the configured grid.
    levels: usize,
    rel_tol: f64,
    order_min: f64,
    order_max: f64,
    solver_tol: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            levels: 3,
            rel_tol: 5e-3,
            order_min: 1.8,
            order_max: 2.2,
            solver_tol: 1e-9,
        }
    }
}

const GROUP: &str = "eigenvalue";

/// Separable first eigenvalue of the Dirichlet Laplacian on the strip's log box.
fn separable_oracle(domain: &ConeDomain) -> f64 {
    let (r0, r1) = domain.r_interval();
    let (y0, y1) = domain.y_interval();
    let pi = std::f64::consts::PI;
    (pi / (r1 - r0)).powi(2) + (pi / (y1 - y0)).powi(2)
}

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let p: Params = config.params()?;
    let fine = strip_grid(config)?;
    if p.levels < 2 {
        return Err(CliError::Usage("eigen needs at least two refinement levels".into()));
    }
    let mut grids = vec![fine];
    for _ in 1..p.levels {
        let g = grids.last().unwrap();
        if (g.nr() - 1) % 2 != 0 || (g.ny() - 1) % 2 != 0 || g.nr() < 9 || g.ny() < 9 {
            return Err(CliError::Usage(format!(
                "grid {}x{} cannot be coarsened {} times by halving",
                fine.nr(),
                fine.ny(),
                p.levels - 1
            )));
        }
        grids.push(LogGrid::new(*g.domain(), (g.nr() - 1) / 2 + 1, (g.ny() - 1) / 2 + 1)?);
    }
    grids.reverse();
    let mut out = Outcome::default();
    timed(&mut out, GROUP, |out| body(&p, &grids, out))?;
    Ok(out)
}

fn body(p: &Params, grids: &[LogGrid], out: &mut Outcome) -> Result<()> {
    let oracle = separable_oracle(grids[0].domain());
    let lambdas = grids
        .par_iter()
        .map(|g| Ok(DiscreteOperator::new(*g).first_eigenvalue(p.solver_tol)?.lambda1))
        .collect::<Result<Vec<f64>>>()?;
    let mut table = Table::new("eigen", &["nr", "ny", "h", "lambda1", "oracle", "rel_error"]);
    let errors: Vec<f64> = lambdas.iter().map(|l| (l - oracle).abs() / oracle).collect();
    for (g, (l, e)) in grids.iter().zip(lambdas.iter().zip(&errors)) {
        table.push(vec![g.nr().into(), g.ny().into(), g.hr().max(g.hy()).into(), (*l).into(), oracle.into(), (*e).into()]);
    }
    let n = errors.len();
    let order = (errors[n - 2] / errors[n - 1]).log2();
    out.value("lambda1", lambdas[n - 1]);
    out.value("oracle", oracle);
    // Transverse ground state; the r_max → ∞ limit of the continuum value.
    out.value("transverse_limit", (std::f64::consts::PI / 2.0).powi(2));
    out.value("refinement_order", order);
    out.check(Check::at_most(GROUP, "relative-error", errors[n - 1], p.rel_tol));
    out.check(Check::within(GROUP, "refinement-order", order, p.order_min, p.order_max));
    out.tables.push(table);
    out.figures
        .push(Figure::new("eigen-convergence", "eigen", "h", &["rel_error"]).log_x().log_y());
    Ok(())
}
