use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cone_mt::config::{parse_override, GridConfig};
use cone_mt::{execute, plots, CliError, Experiment, ExperimentConfig, CONFIG_SCHEMA};

const EXPERIMENTS: &str = "Experiments: mellin-check, mt-sharpness, mt-subcritical, one-d-reduction, \
scale-invariance, polya-szego, eigen, mp-solve, f5-constant.\n\
Run one with `cone-mt <experiment> [--config FILE] [options]`.";

#[derive(Parser)]
#[command(name = "cone-mt", version, about = "Moser-Trudinger laboratory on the stretched cone", after_help = EXPERIMENTS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write gnuplot scripts for an existing run summary.
    Plots { summary: PathBuf },
    /// Print the JSON schema of the configuration file.
    Schema,
    #[command(external_subcommand)]
    Run(Vec<String>),
}

/// Options of an experiment run. Flags override the config file; the
/// output directory falls back to `$CONE_MT_OUT`, then `cone-mt-out`.
#[derive(Parser)]
#[command(name = "cone-mt")]
struct RunArgs {
    experiment: Experiment,
    /// JSON configuration; its `experiment` must match.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for independent parameter points.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    r_max: Option<f64>,
    /// Experiment parameter override `key=value`, value read as JSON.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let c = ExperimentConfig::load(path)?;
            if c.experiment != args.experiment {
                return Err(CliError::Usage(format!(
                    "config is for {} but {} was requested",
                    c.experiment, args.experiment
                )));
            }
            c
        }
        None => ExperimentConfig::new(args.experiment),
    };
    if args.nr.is_some() || args.ny.is_some() || args.r_max.is_some() {
        let base = config
            .grid
            .or(args.experiment.default_grid())
            .ok_or_else(|| CliError::Usage(format!("{} takes no grid", args.experiment)))?;
        config.grid = Some(GridConfig {
            nr: args.nr.unwrap_or(base.nr),
            ny: args.ny.unwrap_or(base.ny),
            r_max: args.r_max.unwrap_or(base.r_max),
        });
    }
    if let Some(out) = &args.out {
        config.output_dir = Some(out.clone());
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    for o in &args.overrides {
        let (k, v) = parse_override(o)?;
        config.params.insert(k, v);
    }
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    Ok(config)
}

fn run(words: Vec<String>) -> Result<bool, CliError> {
    let args = match RunArgs::try_parse_from(std::iter::once("cone-mt".to_string()).chain(words)) {
        Ok(a) => a,
        Err(e) => e.exit(),
    };
    let config = build_config(&args)?;
    let exec = execute(&config, args.jobs)?;
    for c in &exec.outcome.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {}/{} = {:.6e}", c.group, c.name, c.value);
    }
    for (group, t) in &exec.outcome.timings {
        eprintln!("time {group}: {:.2} s", t.as_secs_f64());
    }
    eprintln!("wrote {}", exec.dir.display());
    Ok(exec.summary.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Schema => {
            print!("{CONFIG_SCHEMA}");
            Ok(true)
        }
        Command::Plots { summary } => plots::emit_plots(&summary).map(|written| {
            for p in written {
                println!("{}", p.display());
            }
            true
        }),
        Command::Run(words) => run(words),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
