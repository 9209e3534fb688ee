//! CSV and JSON files written and read by the CLI.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{AggregateRecord, Summary, TrialRecord, VerifyReport};

pub const RECORD_COLUMNS: [&str; 20] = [
    "experiment",
    "axis_value",
    "estimator",
    "trial",
    "seed",
    "p",
    "r",
    "T",
    "n",
    "n_target",
    "n_unlabeled",
    "epsilon",
    "alpha",
    "support_size",
    "sin_theta",
    "excess_risk",
    "target_accuracy",
    "suppressed_count",
    "wall_ms",
    "status",
];

/// 17 significant digits, so every double reads back bit-exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn csv_bytes<H: AsRef<[u8]>>(header: &[H], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Contract(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.into_inner()
        .map_err(|e| Error::Contract(format!("csv encoding failed: {e}")))
}

pub fn records_csv(records: &[TrialRecord]) -> Result<Vec<u8>> {
    csv_bytes(
        &RECORD_COLUMNS,
        records.iter().map(|r| {
            vec![
                r.experiment.clone(),
                fmt_f64(r.axis_value),
                r.estimator.clone(),
                r.trial.to_string(),
                r.seed.to_string(),
                r.p.to_string(),
                r.r.to_string(),
                r.tasks.to_string(),
                r.n.to_string(),
                r.n_target.to_string(),
                r.n_unlabeled.to_string(),
                fmt_f64(r.epsilon),
                fmt_f64(r.alpha),
                r.support_size.to_string(),
                fmt_f64(r.sin_theta),
                fmt_f64(r.excess_risk),
                fmt_f64(r.target_accuracy),
                r.suppressed_count.to_string(),
                fmt_f64(r.wall_ms),
                r.status.clone(),
            ]
        }),
    )
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    let raw = row.get(i).unwrap_or_default();
    raw.parse().map_err(|_| {
        Error::Config(format!(
            "records line {line}: cannot parse {} value {raw:?}",
            RECORD_COLUMNS[i]
        ))
    })
}

pub fn parse_records(text: &[u8]) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_reader(text);
    let header = rdr
        .headers()
        .map_err(|e| Error::Config(format!("records header: {e}")))?
        .clone();
    if header.iter().ne(RECORD_COLUMNS) {
        return Err(Error::Config(format!(
            "records header must be {}",
            RECORD_COLUMNS.join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| Error::Config(format!("records: {e}")))?;
        let line = row.position().map_or(0, |p| p.line());
        out.push(TrialRecord {
            experiment: field(&row, 0, line)?,
            axis_value: field(&row, 1, line)?,
            estimator: field(&row, 2, line)?,
            trial: field(&row, 3, line)?,
            seed: field(&row, 4, line)?,
            p: field(&row, 5, line)?,
            r: field(&row, 6, line)?,
            tasks: field(&row, 7, line)?,
            n: field(&row, 8, line)?,
            n_target: field(&row, 9, line)?,
            n_unlabeled: field(&row, 10, line)?,
            epsilon: field(&row, 11, line)?,
            alpha: field(&row, 12, line)?,
            support_size: field(&row, 13, line)?,
            sin_theta: field(&row, 14, line)?,
            excess_risk: field(&row, 15, line)?,
            target_accuracy: field(&row, 16, line)?,
            suppressed_count: field(&row, 17, line)?,
            wall_ms: field(&row, 18, line)?,
            status: field(&row, 19, line)?,
        });
    }
    Ok(out)
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    let bytes = std::fs::read(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_records(&bytes)
}

pub fn aggregates_csv(aggs: &[AggregateRecord]) -> Result<Vec<u8>> {
    let mut header: Vec<String> = ["experiment", "axis_value", "estimator", "trial_count", "failed_count"]
        .map(String::from)
        .to_vec();
    for m in ["sin_theta", "excess_risk", "target_accuracy", "suppressed_count"] {
        for s in ["median", "q25", "q75"] {
            header.push(format!("{m}_{s}"));
        }
    }
    let summary = |s: &Summary| [fmt_f64(s.median), fmt_f64(s.q25), fmt_f64(s.q75)];
    csv_bytes(
        &header,
        aggs.iter().map(|a| {
            let mut row = vec![
                a.experiment.clone(),
                fmt_f64(a.axis_value),
                a.estimator.clone(),
                a.trial_count.to_string(),
                a.failed_count.to_string(),
            ];
            for s in [&a.sin_theta, &a.excess_risk, &a.target_accuracy, &a.suppressed_count] {
                row.extend(summary(s));
            }
            row
        }),
    )
}

pub fn verify_csv(report: &VerifyReport) -> Result<Vec<u8>> {
    let header = [
        "instance",
        "p",
        "n",
        "epsilon",
        "mean_norm",
        "gap_standard",
        "gap_adv_l2",
        "gap_adv_linf",
        "dir_standard",
        "dir_adv_l2",
        "dir_adv_linf",
        "max_gap",
        "pass",
    ];
    csv_bytes(
        &header,
        report.rows.iter().map(|r| {
            vec![
                r.instance.to_string(),
                r.p.to_string(),
                r.n.to_string(),
                fmt_f64(r.epsilon),
                fmt_f64(r.mean_norm),
                fmt_f64(r.gap_standard),
                fmt_f64(r.gap_adv_l2),
                fmt_f64(r.gap_adv_linf),
                fmt_f64(r.dir_standard),
                fmt_f64(r.dir_adv_l2),
                fmt_f64(r.dir_adv_linf),
                fmt_f64(r.max_gap()),
                r.passed().to_string(),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_digest: String,
    pub root_seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub record_count: usize,
    pub experiments: Vec<String>,
}
