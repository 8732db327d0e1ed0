//! Result files.
//!
//! * `result.json`: the full [`RunResult`].
//! * `epochs.csv`: `epoch,loss,kappa,decision,wall_ms`.
//! * `table.csv`: `key,mean_f1,std_f1`, one row per sweep or variant run.
//! * `params.txt`: encoder checkpoint.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::encoder::EncoderParams;
use crate::error::{Error, Result};
use crate::harness::{EpochRow, Experiment, RunResult, TableRow};
use crate::scalar::Scalar;

pub const EPOCHS_HEADER: &str = "epoch,loss,kappa,decision,wall_ms";
pub const TABLE_HEADER: &str = "key,mean_f1,std_f1";

pub fn epochs_csv(rows: &[EpochRow]) -> String {
    let mut out = format!("{EPOCHS_HEADER}\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.epoch, r.loss, r.kappa, r.decision, r.wall_ms
        )
        .unwrap();
    }
    out
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut out = format!("{TABLE_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{},{}", r.key, r.mean_f1, r.std_f1).unwrap();
    }
    out
}

pub fn result_json(result: &RunResult) -> String {
    let mut s = serde_json::to_string_pretty(result).expect("result serializes");
    s.push('\n');
    s
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::output(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::output(dir, e))
}

/// Writes `result.json`, `epochs.csv` and, when given, `params.txt` into `dir`.
pub fn write_run<T: Scalar>(
    dir: &Path,
    result: &RunResult,
    params: Option<&EncoderParams<T>>,
) -> Result<()> {
    ensure_dir(dir)?;
    write(&dir.join("result.json"), &result_json(result))?;
    write(&dir.join("epochs.csv"), &epochs_csv(&result.per_epoch))?;
    if let Some(p) = params {
        write(&dir.join("params.txt"), &p.to_text())?;
    }
    Ok(())
}

/// Writes `table.csv` into `dir` and each run's files into `dir/<key>/`.
pub fn write_experiment(dir: &Path, experiment: &Experiment) -> Result<()> {
    ensure_dir(dir)?;
    write(&dir.join("table.csv"), &table_csv(&experiment.rows))?;
    for (row, run) in experiment.rows.iter().zip(&experiment.runs) {
        write_run::<f64>(&dir.join(&row.key), run, None)?;
    }
    Ok(())
}
