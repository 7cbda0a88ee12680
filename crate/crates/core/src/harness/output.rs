//! Results CSV, JSON report and raw trace files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiment::{AggregateResult, AggregateRow, ResolvedMethod};
use crate::error::{Error, Result};
use crate::methods::RunTrace;
use crate::smoothness::VerificationReport;

pub const CSV_COLUMNS: [&str; 7] = [
    "method",
    "k",
    "mean_dist2_last",
    "std_dist2_last",
    "mean_dist2_avg",
    "std_dist2_avg",
    "mean_gamma",
];

const RAW_COLUMNS: [&str; 5] = ["k", "gamma", "dist2_last", "dist2_avg", "oracle_calls"];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Slopes {
    pub last: Option<f64>,
    pub avg: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub slopes: BTreeMap<String, Slopes>,
    pub verification: Option<VerificationReport>,
    /// Schedules as actually run, with pilot `C_F` estimates.
    pub methods: Vec<ResolvedMethod>,
}

impl Report {
    pub fn from_result(result: &AggregateResult) -> Self {
        Report {
            config: result.config.clone(),
            slopes: result
                .methods
                .iter()
                .map(|m| {
                    let s = Slopes {
                        last: m.slope_last,
                        avg: m.slope_avg,
                    };
                    (m.method.label.clone(), s)
                })
                .collect(),
            verification: result.verification.clone(),
            methods: result.methods.iter().map(|m| m.method.clone()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WrittenFiles {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub raw: Vec<PathBuf>,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_results_csv(result: &AggregateResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(CSV_COLUMNS).map_err(csv_err(path))?;
    for m in &result.methods {
        for r in &m.rows {
            w.write_record([
                m.method.label.clone(),
                r.k.to_string(),
                format_float(r.mean_dist2_last),
                format_float(r.std_dist2_last),
                format_float(r.mean_dist2_avg),
                format_float(r.std_dist2_avg),
                format_float(r.mean_gamma),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_report(report: &Report, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), report).map_err(|source| {
        Error::Json {
            path: path.to_path_buf(),
            source,
        }
    })
}

pub fn read_report(path: &Path) -> Result<Report> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write_trace_csv(trace: &RunTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(RAW_COLUMNS).map_err(csv_err(path))?;
    for r in &trace.rows {
        w.write_record([
            r.k.to_string(),
            format_float(r.gamma),
            format_float(r.dist2_last),
            format_float(r.dist2_avg),
            r.oracle_calls.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn file_safe(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`, plus
/// `raw/<stem>/<method>_run<r>.csv` when the result carries traces.
pub fn write_results(result: &AggregateResult, dir: &Path, stem: &str) -> Result<WrittenFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    write_results_csv(result, &csv)?;
    write_report(&Report::from_result(result), &json)?;
    let mut raw = Vec::new();
    if let Some(traces) = &result.traces {
        let raw_dir = dir.join("raw").join(stem);
        fs::create_dir_all(&raw_dir).map_err(|e| Error::io(&raw_dir, e))?;
        for (m, runs) in result.methods.iter().zip(traces) {
            for (r, t) in runs.iter().enumerate() {
                let path = raw_dir.join(format!("{}_run{r}.csv", file_safe(&m.method.label)));
                write_trace_csv(t, &path)?;
                raw.push(path);
            }
        }
    }
    Ok(WrittenFiles { csv, json, raw })
}

/// Rows of a results CSV grouped by method, in first-appearance order.
pub fn read_results_csv(path: &Path) -> Result<Vec<(String, Vec<AggregateRow>)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::Fit(format!(
            "{}: expected columns {}, found {}",
            path.display(),
            CSV_COLUMNS.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out: Vec<(String, Vec<AggregateRow>)> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let bad = |col: &str| {
            Error::Fit(format!(
                "{}: row {}: cannot parse `{col}`",
                path.display(),
                line + 2
            ))
        };
        let num = |i: usize| -> Result<f64> { rec[i].parse().map_err(|_| bad(CSV_COLUMNS[i])) };
        let row = AggregateRow {
            k: rec[1].parse().map_err(|_| bad("k"))?,
            mean_dist2_last: num(2)?,
            std_dist2_last: num(3)?,
            mean_dist2_avg: num(4)?,
            std_dist2_avg: num(5)?,
            mean_gamma: num(6)?,
        };
        match out.iter_mut().find(|(m, _)| m == &rec[0]) {
            Some((_, rows)) => rows.push(row),
            None => out.push((rec[0].to_string(), vec![row])),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;
    use crate::harness::experiment::run_experiment;

    const CFG: &str = r#"
iterations = 100
seeds = 2
verify_samples = 50
[problem]
p = 2.0
dimension = 2
[checkpoints]
list = [1, 5, 20, 100]
[[methods]]
kind = "popov"
schedule = { type = "experiment", q = 0.6 }
[[methods]]
kind = "korpelevich"
schedule = { type = "constant", beta = 0.1 }
"#;

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let res = run_experiment(&parse_config(CFG, &[]).unwrap()).unwrap();
        let files = write_results(&res, dir.path(), "results").unwrap();
        let back = read_results_csv(&files.csv).unwrap();
        assert_eq!(back.len(), 2);
        for ((label, rows), m) in back.iter().zip(&res.methods) {
            assert_eq!(label, &m.method.label);
            assert_eq!(rows, &m.rows);
        }
        let text = fs::read_to_string(&files.csv).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        let report = read_report(&files.json).unwrap();
        assert_eq!(report, Report::from_result(&res));
        assert!(report.verification.is_some());
    }

    #[test]
    fn empty_checkpoints_give_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(CFG, &[("checkpoints.list".into(), "[]".into())]).unwrap();
        let res = run_experiment(&cfg).unwrap();
        let files = write_results(&res, dir.path(), "empty").unwrap();
        let text = fs::read_to_string(&files.csv).unwrap();
        assert_eq!(text, format!("{}\n", CSV_COLUMNS.join(",")));
        assert!(read_results_csv(&files.csv).unwrap().is_empty());
    }

    #[test]
    fn raw_traces_written() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(CFG, &[("raw_traces".into(), "true".into())]).unwrap();
        let res = run_experiment(&cfg).unwrap();
        let files = write_results(&res, dir.path(), "results").unwrap();
        assert_eq!(files.raw.len(), 4);
        let text = fs::read_to_string(&files.raw[0]).unwrap();
        assert_eq!(text.lines().count(), 1 + 5);
    }

    #[test]
    fn renamed_column_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(
            &p,
            "method,k,mean_dist2,std_dist2_last,mean_dist2_avg,std_dist2_avg,mean_gamma\n",
        )
        .unwrap();
        assert!(read_results_csv(&p).is_err());
    }

    #[test]
    fn io_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let res = run_experiment(&parse_config(CFG, &[]).unwrap()).unwrap();
        let err = write_results(&res, &blocker.join("sub"), "results").unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }
}
