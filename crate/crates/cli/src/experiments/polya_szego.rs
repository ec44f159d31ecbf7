use cone_mt_core::cone_domain::{integrate, GridFunction, LogGrid};
use cone_mt_core::cone_operator::DiscreteOperator;
use cone_mt_core::corpus::{bump_corpus, sample_bumps};
use cone_mt_core::rearrangement::rearrange;
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
    reach: f64,
    equimeasure_tol: f64,
    /// Required factor between the negative gap excursions on the coarse and fine grid.
    refinement_factor: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            corpus_size: 20,
            reach: 0.6,
            equimeasure_tol: 1e-6,
            refinement_factor: 0.5,
        }
    }
}

const GROUP: &str = "rearrangement";

struct Row {
    index: usize,
    nr: usize,
    energy: f64,
    gap: f64,
    equimeasure: [f64; 3],
}

fn distribution_integrals(u: &GridFunction) -> Result<[f64; 3]> {
    Ok([
        integrate(&u.map(|s| s * s))?,
        integrate(&u.map(|s| s.powi(4)))?,
        integrate(&u.map(|s| (s * s).exp_m1()))?,
    ])
}

fn measure(index: usize, grid: LogGrid, u: &GridFunction) -> Result<Row> {
    let (_, star) = rearrange(u)?;
    let op = DiscreteOperator::new(grid);
    let energy = op.energy_form(u)?;
    let gap = energy - op.energy_form(&star)?;
    let a = distribution_integrals(u)?;
    let b = distribution_integrals(&star)?;
    let mut equimeasure = [0.0; 3];
    for k in 0..3 {
        equimeasure[k] = (a[k] - b[k]).abs() / a[k].abs();
    }
    Ok(Row {
        index,
        nr: grid.nr(),
        energy,
        gap,
        equimeasure,
    })
}

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let p: Params = config.params()?;
    let fine = full_cone_grid(config)?;
    if (fine.nr() - 1) % 2 != 0 || (fine.ny() - 1) % 2 != 0 {
        return Err(CliError::Usage("polya-szego needs odd nr and ny so the grid can be halved".into()));
    }
    let coarse = LogGrid::new(*fine.domain(), (fine.nr() - 1) / 2 + 1, (fine.ny() - 1) / 2 + 1)?;
    let mut out = Outcome::default();
    timed(&mut out, GROUP, |out| {
        let corpus = bump_corpus(p.corpus_size, p.reach, config.seed);
        let rows = corpus
            .par_iter()
            .enumerate()
            .flat_map_iter(|(i, bumps)| [coarse, fine].map(|g| measure(i, g, &sample_bumps(g, bumps))))
            .collect::<Result<Vec<Row>>>()?;

        let mut table = Table::new(
            "polya-szego",
            &["function", "nr", "energy", "gap", "equimeasure_s2", "equimeasure_s4", "equimeasure_exp"],
        );
        let mut excursion = [0.0_f64; 2];
        for r in &rows {
            table.push(vec![
                r.index.into(),
                r.nr.into(),
                r.energy.into(),
                r.gap.into(),
                r.equimeasure[0].into(),
                r.equimeasure[1].into(),
                r.equimeasure[2].into(),
            ]);
            for (label, v) in ["s2", "s4", "exp"].iter().zip(r.equimeasure) {
                out.check(Check::at_most(
                    GROUP,
                    format!("u{}/nr={}/equimeasurable-{label}", r.index, r.nr),
                    v,
                    p.equimeasure_tol,
                ));
            }
            let slot = usize::from(r.nr == fine.nr());
            excursion[slot] = excursion[slot].max(-r.gap);
        }
        out.value("negative_gap_coarse", excursion[0]);
        out.value("negative_gap_fine", excursion[1]);
        // ε_h is the largest negative excursion of the gap (zero if none).
        let (eps_coarse, eps_fine) = (excursion[0].max(0.0), excursion[1].max(0.0));
        out.check(Check::at_most(
            GROUP,
            "gap-excursion-refines",
            eps_fine,
            p.refinement_factor * eps_coarse,
        ));
        out.tables.push(table);
        out.figures.push(Figure::new("polya-szego-gap", "polya-szego", "function", &["gap"]));
        Ok(())
    })?;
    Ok(out)
}
