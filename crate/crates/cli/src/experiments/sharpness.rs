use cone_mt_core::mt_lab::MoserSequence;
use cone_mt_core::ALPHA_2;
use serde::Deserialize;

use super::timed;
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::report::{Check, Figure, Outcome, Table};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    ks: Vec<f64>,
    alpha: f64,
    samples_per_unit: usize,
    gradient_tol: f64,
    l2_drop: f64,
    functional_floor: f64,
    ratio_growth: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            ks: vec![4.0, 8.0, 16.0, 32.0],
            alpha: ALPHA_2,
            samples_per_unit: 40,
            gradient_tol: 2e-3,
            l2_drop: 0.2,
            functional_floor: 0.5,
            ratio_growth: 10.0,
        }
    }
}

const GROUP: &str = "sharpness";

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let p: Params = config.params()?;
    if p.ks.len() < 2 {
        return Err(CliError::Usage("mt-sharpness needs at least two values of k".into()));
    }
    let mut out = Outcome::default();
    timed(&mut out, GROUP, |out| body(&p, out))?;
    Ok(out)
}

fn body(p: &Params, out: &mut Outcome) -> Result<()> {
    let mut table = Table::new(
        "sharpness",
        &["k", "grad_norm", "grad_norm_sampled", "l2_norm_sq", "functional", "ratio"],
    );
    let (mut l2s, mut ratios) = (Vec::new(), Vec::new());
    for &k in &p.ks {
        let s = MoserSequence::new(k)?;
        let grad = s.dirichlet_integral_exact().sqrt();
        let sampled = s.sampled_profile(p.samples_per_unit)?.dirichlet_integral().sqrt();
        let l2 = s.l2_norm_sq_exact();
        let f = s.mt_functional(p.alpha)?;
        let ratio = s.mt_ratio(p.alpha)?;
        table.push(vec![k.into(), grad.into(), sampled.into(), l2.into(), f.into(), ratio.into()]);
        out.check(Check::at_most(GROUP, format!("k={k}/gradient-norm"), (grad - 1.0).abs(), 1e-12));
        out.check(Check::at_most(
            GROUP,
            format!("k={k}/sampled-gradient-norm"),
            (sampled - 1.0).abs(),
            p.gradient_tol,
        ));
        out.check(Check::at_least(GROUP, format!("k={k}/functional"), f, p.functional_floor));
        l2s.push(l2);
        ratios.push(ratio);
    }
    let strictly = |v: &[f64], dec: bool| v.windows(2).all(|w| if dec { w[1] < w[0] } else { w[1] > w[0] });
    out.check(Check::holds(GROUP, "l2-strictly-decreasing", strictly(&l2s, true)));
    let drop = l2s[l2s.len() - 1] / l2s[0];
    out.check(Check::at_most(GROUP, "l2-last-over-first", drop, p.l2_drop));
    out.check(Check::holds(GROUP, "ratio-strictly-increasing", strictly(&ratios, false)));
    let growth = ratios[ratios.len() - 1] / ratios[0];
    out.check(Check::at_least(GROUP, "ratio-last-over-first", growth, p.ratio_growth));
    out.value("ratio_growth", growth);
    out.value("l2_drop", drop);
    out.tables.push(table);
    out.figures
        .push(Figure::new("ratio-vs-k", "sharpness", "k", &["ratio"]).log_x().log_y());
    Ok(())
}
