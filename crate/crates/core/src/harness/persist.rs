//! On-disk layout of a report directory:
//!
//! - `spec.json`: schema version and spec, written before any trial runs
//! - `records.jsonl`: one trial record per line
//! - `summary.json`: schema version, spec, summary
//! - `spec.conf`: the spec as a flat config file
//! - `curve.csv` (speed, fit-alpha) or `block.csv` (block)

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::aggregate::{Report, Summary, SCHEMA_VERSION};
use super::spec::ExperimentSpec;
use super::trial::TrialRecord;

pub const SPEC_FILE: &str = "spec.json";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "spec.conf";
pub const CURVE_FILE: &str = "curve.csv";
pub const BLOCK_FILE: &str = "block.csv";

#[derive(Serialize, Deserialize)]
struct SpecDoc {
    schema_version: u32,
    spec: ExperimentSpec,
}

#[derive(Serialize, Deserialize)]
struct SummaryDoc {
    schema_version: u32,
    spec: ExperimentSpec,
    passed: bool,
    summary: Summary,
}

fn check_version(path: &Path, v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::schema(path, format!("schema version {v}, expected {SCHEMA_VERSION}")));
    }
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary sibling so readers never see half a file.
fn write_atomic(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|()| w.flush()).map_err(|e| Error::io(&tmp, e))?;
    drop(w);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn json_err(e: serde_json::Error) -> std::io::Error {
    std::io::Error::other(e)
}

pub(crate) fn write_spec(path: &Path, spec: &ExperimentSpec) -> Result<()> {
    let doc = SpecDoc {
        schema_version: SCHEMA_VERSION,
        spec: spec.clone(),
    };
    write_atomic(path, |w| serde_json::to_writer_pretty(w, &doc).map_err(json_err))
}

pub(crate) fn read_spec(path: &Path) -> Result<ExperimentSpec> {
    let doc: SpecDoc = serde_json::from_str(&read(path)?).map_err(|e| Error::schema(path, e))?;
    check_version(path, doc.schema_version)?;
    Ok(doc.spec)
}

/// Records from a possibly interrupted file, and the byte length of its
/// intact prefix. Only an unterminated last line may be damaged.
pub(crate) fn read_records_prefix(path: &Path) -> Result<(Vec<TrialRecord>, u64)> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), 0)),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut records = Vec::new();
    let mut valid = 0usize;
    for (lineno, line) in text.split_inclusive('\n').enumerate() {
        let terminated = line.ends_with('\n');
        match serde_json::from_str::<TrialRecord>(line.trim_end()) {
            Ok(r) if terminated => records.push(r),
            Ok(_) => break,
            Err(_) if !terminated => break,
            Err(e) => return Err(Error::schema(path, format!("line {}: {e}", lineno + 1))),
        }
        valid += line.len();
    }
    Ok((records, valid as u64))
}

/// Reads a complete record file.
pub fn load_records(path: &Path) -> Result<Vec<TrialRecord>> {
    let (records, valid) = read_records_prefix(path)?;
    let len = fs::metadata(path).map_err(|e| Error::io(path, e))?.len();
    if valid != len {
        return Err(Error::schema(path, "truncated final record"));
    }
    Ok(records)
}

/// Writes the whole report directory.
pub fn persist_report(report: &Report, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_spec(&dir.join(SPEC_FILE), &report.spec)?;
    write_atomic(&dir.join(RECORDS_FILE), |w| {
        for r in &report.records {
            serde_json::to_writer(&mut *w, r).map_err(json_err)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })?;
    let doc = SummaryDoc {
        schema_version: report.schema_version,
        spec: report.spec.clone(),
        passed: report.passed(),
        summary: report.summary.clone(),
    };
    write_atomic(&dir.join(SUMMARY_FILE), |w| serde_json::to_writer_pretty(w, &doc).map_err(json_err))?;
    let conf = report.spec.to_config();
    write_atomic(&dir.join(CONFIG_FILE), |w| w.write_all(conf.as_bytes()))?;
    match &report.summary {
        Summary::Speed(_) | Summary::FitAlpha(_) => emit_plot_data(report, &dir.join(CURVE_FILE))?,
        Summary::Block(b) => write_atomic(&dir.join(BLOCK_FILE), |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(["t", "position", "hits", "estimate", "se", "target", "error"])?;
            for p in &b.points {
                csv.write_record([
                    p.t.to_string(),
                    p.position.to_string(),
                    p.hits.to_string(),
                    p.estimate.to_string(),
                    p.se.to_string(),
                    b.target.to_string(),
                    p.error.to_string(),
                ])?;
            }
            csv.flush()
        })?,
        _ => {}
    }
    Ok(())
}

/// Reads a report directory back and checks that the stored summary is the
/// one its records produce.
pub fn load_report(dir: &Path) -> Result<Report> {
    let path = dir.join(SUMMARY_FILE);
    let doc: SummaryDoc = serde_json::from_str(&read(&path)?).map_err(|e| Error::schema(&path, e))?;
    check_version(&path, doc.schema_version)?;
    let records = load_records(&dir.join(RECORDS_FILE))?;
    let report = Report::from_records(doc.spec, records)?;
    if report.summary != doc.summary {
        return Err(Error::schema(&path, "summary does not match the records"));
    }
    Ok(report)
}

/// CDF table `s, empirical_cdf, theoretical_cdf[, fitted_cdf]`.
pub fn emit_plot_data(report: &Report, path: &Path) -> Result<()> {
    let curve = report
        .summary
        .curve()
        .ok_or_else(|| Error::Spec(format!("a {} report has no CDF curve", report.spec.kind)))?;
    let fitted = curve.iter().any(|c| c.fitted_cdf.is_some());
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["s", "empirical_cdf", "theoretical_cdf"];
        if fitted {
            header.push("fitted_cdf");
        }
        csv.write_record(&header)?;
        for c in curve {
            let mut row = vec![c.s.to_string(), c.empirical_cdf.to_string(), c.theoretical_cdf.to_string()];
            if let Some(f) = c.fitted_cdf {
                row.push(f.to_string());
            }
            csv.write_record(&row)?;
        }
        csv.flush()
    })
}
