use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::report::{Figure, Summary};

/// gnuplot script for one figure; the data file is referenced relative to
/// the script's directory.
pub fn script(figure: &Figure, data_file: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set datafile columnheaders");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output '{}.png'", figure.name);
    let _ = writeln!(s, "set title '{}'", figure.name);
    let _ = writeln!(s, "set xlabel '{}'", figure.x);
    if figure.log_x {
        let _ = writeln!(s, "set logscale x");
    }
    if figure.log_y {
        let _ = writeln!(s, "set logscale y");
    }
    let _ = writeln!(s, "set key left top");
    let curves: Vec<String> = figure
        .y
        .iter()
        .map(|y| format!("'{data_file}' using '{}':'{}' with linespoints title '{}'", figure.x, y, y))
        .collect();
    let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    s
}

/// Writes one `<figure>.gp` per figure of the summary, next to it. Every
/// referenced CSV must exist.
pub fn emit_plots(summary_path: &Path) -> Result<Vec<PathBuf>> {
    let summary = Summary::load(summary_path)?;
    let dir = summary_path.parent().unwrap_or(Path::new("."));
    let mut written = Vec::new();
    for fig in &summary.figures {
        let data_file = format!("{}.csv", fig.table);
        let data = dir.join(&data_file);
        if !data.is_file() {
            return Err(CliError::File {
                path: data,
                message: format!("data for figure `{}` is missing", fig.name),
            });
        }
        let path = dir.join(format!("{}.gp", fig.name));
        std::fs::write(&path, script(fig, &data_file)).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_is_deterministic_and_references_columns() {
        let f = Figure::new("ratio-vs-k", "sharpness", "k", &["ratio"]).log_x().log_y();
        let a = script(&f, "sharpness.csv");
        assert_eq!(a, script(&f, "sharpness.csv"));
        assert!(a.contains("'sharpness.csv' using 'k':'ratio'"));
        assert!(a.contains("set logscale x") && a.contains("set logscale y"));
    }

    #[test]
    fn corrupted_summary_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("summary.json");
        std::fs::write(&p, "{not json").unwrap();
        match emit_plots(&p) {
            Err(CliError::File { path, .. }) => assert_eq!(path, p),
            other => panic!("{other:?}"),
        }
    }
}
