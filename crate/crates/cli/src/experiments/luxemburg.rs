use cone_mt_core::corpus::{bump_corpus, sample_bumps};
use cone_mt_core::mt_lab::dirichlet_norm;
use cone_mt_core::norms::{luxemburg_norm, ExpSquare};
use cone_mt_core::ALPHA_2;
use rayon::prelude::*;
use serde::Deserialize;

use super::{full_cone_grid, timed};
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::report::{Check, Figure, Outcome, Table};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    corpus_size: usize,
    /// Supports stay within this log-metric distance of the origin.
    reach: f64,
    alphas: Vec<f64>,
    slack: f64,
    scales: Vec<f64>,
    homogeneity_tol: f64,
}

impl Default for Params {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        Self {
            corpus_size: 20,
            reach: 0.8,
            alphas: vec![pi, 2.0 * pi, ALPHA_2],
            slack: 1e-2,
            scales: vec![0.5, 3.0],
            homogeneity_tol: 1e-8,
        }
    }
}

const GROUP: &str = "luxemburg";

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let p: Params = config.params()?;
    if let Some(a) = p.alphas.iter().find(|&&a| !(a > 0.0 && a <= ALPHA_2)) {
        return Err(CliError::Usage(format!("alpha = {a} is outside (0, 4π]")));
    }
    let grid = full_cone_grid(config)?;
    let mut out = Outcome::default();
    timed(&mut out, GROUP, |out| {
        let corpus = bump_corpus(p.corpus_size, p.reach, config.seed);
        let rows = corpus
            .par_iter()
            .enumerate()
            .map(|(i, bumps)| {
                let u = sample_bumps(grid, bumps);
                let grad = dirichlet_norm(&u)?;
                let mut row = Vec::new();
                for &alpha in &p.alphas {
                    let a = ExpSquare::new(alpha)?;
                    let lux = luxemburg_norm(&u, &a)?;
                    let mut homog: f64 = 0.0;
                    for &c in &p.scales {
                        let scaled = luxemburg_norm(&u.scaled(c), &a)?;
                        homog = homog.max((scaled - c * lux).abs() / (c * lux));
                    }
                    row.push((i, alpha, lux, grad, homog));
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut table = Table::new(
            "luxemburg",
            &["function", "alpha", "luxemburg", "grad_norm", "ratio", "homogeneity_error"],
        );
        let mut worst_ratio: f64 = 0.0;
        let mut worst_homog: f64 = 0.0;
        for &(i, alpha, lux, grad, homog) in rows.iter().flatten() {
            let ratio = lux / grad;
            table.push(vec![i.into(), alpha.into(), lux.into(), grad.into(), ratio.into(), homog.into()]);
            out.check(Check::at_most(GROUP, format!("u{i}/alpha={alpha:.6}/bound"), ratio, 1.0 + p.slack));
            out.check(Check::at_most(
                GROUP,
                format!("u{i}/alpha={alpha:.6}/homogeneity"),
                homog,
                p.homogeneity_tol,
            ));
            worst_ratio = worst_ratio.max(ratio);
            worst_homog = worst_homog.max(homog);
        }
        out.value("max_norm_ratio", worst_ratio);
        out.value("max_homogeneity_error", worst_homog);
        out.tables.push(table);
        out.figures
            .push(Figure::new("luxemburg-ratio", "luxemburg", "alpha", &["ratio"]));
        Ok(())
    })?;
    Ok(out)
}
