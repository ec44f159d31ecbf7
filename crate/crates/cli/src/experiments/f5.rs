use cone_mt_core::mt_lab::f5_constant;
use serde::Deserialize;

use super::timed;
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::report::{Check, Figure, Outcome, Table};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    ns: Vec<u64>,
    limit: f64,
    tol: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            ns: vec![1, 10, 100, 1000, 10_000],
            limit: 2.0,
            tol: 1e-3,
        }
    }
}

const GROUP: &str = "f5";

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let p: Params = config.params()?;
    if p.ns.is_empty() {
        return Err(CliError::Usage("f5-constant needs at least one n".into()));
    }
    let mut out = Outcome::default();
    timed(&mut out, GROUP, |out| {
        let mut table = Table::new("f5-constant", &["n", "value", "excess"]);
        let mut last = f64::NAN;
        for &n in &p.ns {
            last = f5_constant(n)?;
            table.push(vec![(n as usize).into(), last.into(), (last - p.limit).into()]);
        }
        let n_last = p.ns[p.ns.len() - 1];
        out.value("value_at_largest_n", last);
        out.check(Check::at_most(
            GROUP,
            format!("n={n_last}/distance-to-limit"),
            (last - p.limit).abs(),
            p.tol,
        ));
        out.check(Check::at_least(GROUP, format!("n={n_last}/at-least-limit"), last, p.limit));
        out.tables.push(table);
        out.figures
            .push(Figure::new("f5-constant", "f5-constant", "n", &["excess"]).log_x().log_y());
        Ok(())
    })?;
    Ok(out)
}
