//! One runner per experiment name. Each returns an [`Outcome`] with its
//! checks grouped by property; no runner touches the file system.

use std::time::Instant;

use cone_mt_core::cone_domain::{ConeDomain, LogGrid};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::report::Outcome;

mod eigen;
mod f5;
mod luxemburg;
mod mellin;
mod mountain_pass;
mod polya_szego;
mod reduction;
mod scaling;
mod sharpness;

/// Check group of the finite-difference gradient gate in `mp-solve`.
pub use mountain_pass::GATE as GRADIENT_GATE;

/// Runs the experiment on the current rayon pool.
pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    match config.experiment {
        Experiment::MellinCheck => mellin::run(config),
        Experiment::MtSharpness => sharpness::run(config),
        Experiment::MtSubcritical => luxemburg::run(config),
        Experiment::OneDReduction => reduction::run(config),
        Experiment::ScaleInvariance => scaling::run(config),
        Experiment::PolyaSzego => polya_szego::run(config),
        Experiment::Eigen => eigen::run(config),
        Experiment::MpSolve => mountain_pass::run(config),
        Experiment::F5Constant => f5::run(config),
    }
}

/// Runs the experiment with `jobs` worker threads for independent parameter points.
pub fn run_with_jobs(config: &ExperimentConfig, jobs: usize) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    pool.install(|| run(config))
}

fn full_cone_grid(config: &ExperimentConfig) -> Result<LogGrid> {
    let g = config.grid()?;
    Ok(LogGrid::new(ConeDomain::full_cone(g.r_max)?, g.nr, g.ny)?)
}

fn strip_grid(config: &ExperimentConfig) -> Result<LogGrid> {
    let g = config.grid()?;
    Ok(LogGrid::new(ConeDomain::bounded_strip(g.r_max)?, g.nr, g.ny)?)
}

/// Runs `f` and records its wall-clock time under `group`.
fn timed<T>(out: &mut Outcome, group: &str, f: impl FnOnce(&mut Outcome) -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let r = f(out);
    out.timings.push((group.to_string(), start.elapsed()));
    r
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_slope_of_a_line() {
        let x = [1.0, 2.0, 4.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.25 * v).collect();
        assert!((slope(&x, &y) + 0.25).abs() < 1e-14);
    }
}
