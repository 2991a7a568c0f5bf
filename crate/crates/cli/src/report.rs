use std::fmt::Write as _;
use std::path::Path;

use arff_core::experiment::{ExperimentKind, Manifest};
use arff_core::io::{read_csv, write_atomic};

use crate::{CliResult, Failure, ReportArgs};

fn runtime(m: impl Into<String>) -> Failure {
    Failure::Runtime(m.into())
}

/// Markdown table of a CSV file, optionally keeping only some columns and
/// the rows passing `keep`.
fn table(
    path: &Path,
    columns: Option<&[&str]>,
    keep: impl Fn(&[String], &[String]) -> bool,
) -> CliResult<String> {
    let (header, rows) = read_csv(path)?;
    let idx: Vec<usize> = match columns {
        Some(cols) => cols
            .iter()
            .map(|c| {
                header
                    .iter()
                    .position(|h| h == c)
                    .ok_or_else(|| runtime(format!("{}: no column {c}", path.display())))
            })
            .collect::<CliResult<_>>()?,
        None => (0..header.len()).collect(),
    };
    let mut s = String::new();
    let line = |cells: Vec<&str>| format!("| {} |\n", cells.join(" | "));
    s += &line(idx.iter().map(|&i| header[i].as_str()).collect());
    s += &line(idx.iter().map(|_| "---").collect());
    for r in rows.iter().filter(|r| keep(&header, r)) {
        let cells: Vec<String> = idx.iter().map(|&i| short(&r[i])).collect();
        s += &line(cells.iter().map(String::as_str).collect());
    }
    Ok(s)
}

/// Four significant digits for non-integer numbers.
fn short(v: &str) -> String {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() && v.contains(['.', 'e']) => {
            if x != 0.0 && !(1e-3..1e4).contains(&x.abs()) {
                format!("{x:.3e}")
            } else {
                format!("{x:.4}")
            }
        }
        _ => v.to_string(),
    }
}

fn column_is(name: &'static str, value: &'static str) -> impl Fn(&[String], &[String]) -> bool {
    move |h, r| h.iter().position(|c| c == name).is_some_and(|i| r[i] == value)
}

pub fn report(a: &ReportArgs) -> CliResult {
    let dir = &a.dir;
    let text = std::fs::read_to_string(dir.join("manifest.json"))
        .map_err(|e| runtime(format!("{}: {e}", dir.join("manifest.json").display())))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| runtime(e.to_string()))?;
    let c = &m.config;
    let mut s = String::new();
    let _ = writeln!(s, "# {}\n", m.kind.name());
    let _ = writeln!(
        s,
        "- scale: {:?}\n- seed: {}\n- realizations: {}\n- code version: {}\n- files: {} ({} timing)\n",
        c.scale,
        c.seed,
        c.realizations,
        m.code_version,
        m.files.len(),
        m.nondeterministic.len()
    );
    match m.kind {
        ExperimentKind::Test6Pretrain => {
            s += "## Validation and test error\n\n";
            s += &table(&dir.join("summary.csv"), None, |_, _| true)?;
        }
        ExperimentKind::ImagePipeline => {
            s += "## Test PSNR (dB)\n\n";
            s += &table(&dir.join("psnr_summary.csv"), None, |_, _| true)?;
        }
        _ => {
            let cols = [
                "variant", "k", "batch_size", "gamma", "init_std", "count", "mean", "std", "bound",
            ];
            s += "## Minimum training error, normal-equation residual\n\n";
            s += &table(
                &dir.join("convergence.csv"),
                Some(&cols),
                column_is("metric", "min_train_err"),
            )?;
            s += "\n## Minimum training error, data residual\n\n";
            s += &table(
                &dir.join("convergence.csv"),
                Some(&cols[..8]),
                column_is("metric", "min_train_data_err"),
            )?;
        }
    }
    print!("{s}");
    if let Some(out) = &a.out {
        write_atomic(out, s.as_bytes())?;
    }
    Ok(())
}
