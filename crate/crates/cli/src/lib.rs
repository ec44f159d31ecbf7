//! Experiment runner: configuration, the experiments themselves, CSV/JSON
//! output and gnuplot script emission.

pub mod config;
pub mod error;
pub mod experiments;
pub mod plots;
pub mod report;

use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{Experiment, ExperimentConfig};
pub use error::{CliError, Result};
pub use report::{Outcome, Summary};

/// JSON schema of the configuration file.
pub const CONFIG_SCHEMA: &str = include_str!("../schema/experiment_config.schema.json");

/// Result of [`execute`].
pub struct Execution {
    pub summary: Summary,
    pub outcome: Outcome,
    pub dir: PathBuf,
    pub scripts: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Diagnostic<'a> {
    experiment: Experiment,
    config: &'a ExperimentConfig,
    error: String,
}

pub const ERROR_FILE: &str = "error.json";

/// Runs the experiment and writes its tables, `summary.json` and plot
/// scripts under `<output root>/<experiment>/`. A numeric failure leaves
/// `error.json` there instead.
pub fn execute(config: &ExperimentConfig, jobs: usize) -> Result<Execution> {
    let config = config.clone().resolved()?;
    let dir = config.output_root().join(config.experiment.name());
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let outcome = match experiments::run_with_jobs(&config, jobs) {
        Ok(o) => o,
        Err(e @ CliError::Usage(_)) => return Err(e),
        Err(e) => {
            write_diagnostic(&dir, &config, &e)?;
            return Err(e);
        }
    };
    let summary = Summary::new(&config, &outcome);
    let path = report::write_outputs(&dir, &summary, &outcome)?;
    let stale = dir.join(ERROR_FILE);
    if stale.exists() {
        std::fs::remove_file(&stale).map_err(|e| CliError::io(&stale, e))?;
    }
    let scripts = plots::emit_plots(&path)?;
    Ok(Execution {
        summary,
        outcome,
        dir,
        scripts,
    })
}

fn write_diagnostic(dir: &Path, config: &ExperimentConfig, e: &CliError) -> Result<()> {
    report::write_json(
        &dir.join(ERROR_FILE),
        &Diagnostic {
            experiment: config.experiment,
            config,
            error: e.to_string(),
        },
    )
}
