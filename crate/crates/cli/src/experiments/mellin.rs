use cone_mt_core::corpus::mellin_corpus;
use cone_mt_core::mellin::{
    identity_suite, mellin_transform, plancherel_check, HalfLineFunction, IdentityParams, TauGrid,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Deserialize;

use super::timed;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{Cell, Check, Figure, Outcome, Table};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Params {
    r_max: f64,
    samples: usize,
    gamma: f64,
    shift_p: f64,
    dilation_beta: f64,
    tau_max: f64,
    tau_points: usize,
    identity_tol: f64,
    closed_form_tol: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            r_max: 12.0,
            samples: 4801,
            gamma: 0.5,
            shift_p: 0.5,
            dilation_beta: 2.0,
            tau_max: 40.0,
            tau_points: 4096,
            identity_tol: 1e-5,
            closed_form_tol: 1e-6,
        }
    }
}

const GROUP: &str = "identities";

pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let p: Params = config.params()?;
    let mut out = Outcome::default();
    timed(&mut out, GROUP, |out| body(&p, out))?;
    Ok(out)
}

fn body(p: &Params, out: &mut Outcome) -> Result<()> {
    let tau = TauGrid {
        tau_max: p.tau_max,
        n: p.tau_points,
    };
    let params = IdentityParams {
        shift_p: p.shift_p,
        dilation_beta: p.dilation_beta,
        tau,
    };
    let cases = mellin_corpus();
    let rows = cases
        .par_iter()
        .map(|c| {
            let u = HalfLineFunction::from_log_fn(p.r_max, p.samples, c.f)?;
            let ids = identity_suite(&u, p.gamma, params);
            let (l, r) = plancherel_check(&u, p.gamma, tau);
            Ok((c.name, ids, (l - r).abs() / l))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table = Table::new(
        "identities",
        &["function", "derivative", "power_shift", "log_multiplier", "dilation", "plancherel"],
    );
    for (name, ids, pl) in &rows {
        table.push(vec![
            (*name).into(),
            ids.derivative.into(),
            ids.power_shift.into(),
            ids.log_multiplier.into(),
            ids.dilation.into(),
            (*pl).into(),
        ]);
        for (label, v) in [
            ("derivative", ids.derivative),
            ("power-shift", ids.power_shift),
            ("log-multiplier", ids.log_multiplier),
            ("dilation", ids.dilation),
            ("plancherel", *pl),
        ] {
            out.check(Check::at_most(GROUP, format!("{name}/{label}"), v, p.identity_tol));
        }
    }
    out.tables.push(table);

    // Closed form of the Gaussian e^{-(ln t)²}: √π e^{z²/4}.
    let gauss = HalfLineFunction::from_log_fn(p.r_max, p.samples, |s| (-s * s).exp())?;
    let m = mellin_transform(&gauss, p.gamma, tau);
    let exact: Vec<Complex64> = (0..tau.n)
        .map(|k| (m.z(k) * m.z(k) / 4.0).exp() * std::f64::consts::PI.sqrt())
        .collect();
    let scale = exact.iter().fold(0.0_f64, |a, v| a.max(v.norm()));
    let err = m
        .values
        .iter()
        .zip(&exact)
        .fold(0.0_f64, |a, (x, y)| a.max((x - y).norm()))
        / scale;
    out.value("gaussian_closed_form_error", err);
    out.check(Check::at_most(GROUP, "gaussian-closed-form", err, p.closed_form_tol));
    out.check(Check::holds(GROUP, "gaussian-window-sufficient", !m.truncation_flagged));

    let mut spectrum = Table::new("gaussian-spectrum", &["tau", "re", "im", "exact_re", "exact_im"]);
    for (k, (v, e)) in m.values.iter().zip(&exact).enumerate() {
        spectrum.push(vec![
            Cell::Num(m.tau.point(k)),
            v.re.into(),
            v.im.into(),
            e.re.into(),
            e.im.into(),
        ]);
    }
    out.tables.push(spectrum);
    out.figures
        .push(Figure::new("gaussian-spectrum", "gaussian-spectrum", "tau", &["re", "exact_re"]));
    Ok(())
}
