use std::fs::{self, OpenOptions};
use std::io::Write;
use std::num::NonZeroUsize;
use std::path::Path;

use rayon::prelude::*;

use crate::{Error, Result};

use super::aggregate::Report;
use super::persist::{self, RECORDS_FILE, SPEC_FILE};
use super::spec::{ExperimentKind, ExperimentSpec};
use super::trial::{run_trial, TrialRecord};

/// Scheduling knobs. None of them affect a report's content.
#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub workers: usize,
    /// Trials per scheduling chunk; records are flushed once per chunk.
    pub chunk: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: std::thread::available_parallelism().map_or(1, NonZeroUsize::get),
            chunk: 1024,
        }
    }
}

impl RunOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers,
            ..Self::default()
        }
    }
}

/// Runs `indices` chunk by chunk on a pool of `opts.workers` threads,
/// handing each chunk's records to `sink` in index order.
fn run_indices(
    spec: &ExperimentSpec,
    indices: &[u64],
    opts: RunOptions,
    mut sink: impl FnMut(&[TrialRecord]) -> Result<()>,
) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    for chunk in indices.chunks(opts.chunk.max(1)) {
        let records = pool.install(|| {
            chunk
                .par_iter()
                .map(|&i| run_trial(spec, i))
                .collect::<Result<Vec<_>>>()
        })?;
        sink(&records)?;
    }
    Ok(())
}

/// Runs every trial of `spec` and summarizes.
pub fn run_experiment(spec: &ExperimentSpec, opts: RunOptions) -> Result<Report> {
    spec.validate()?;
    let indices: Vec<u64> = (0..spec.n_trials).collect();
    let mut records = Vec::with_capacity(indices.len());
    run_indices(spec, &indices, opts, |chunk| {
        records.extend_from_slice(chunk);
        Ok(())
    })?;
    Report::from_records(spec.clone(), records)
}

fn run_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<Report> {
    if spec.kind != kind {
        return Err(Error::Spec(format!("expected a {kind} spec, got {}", spec.kind)));
    }
    run_experiment(spec, RunOptions::default())
}

pub fn run_speed_experiment(spec: &ExperimentSpec) -> Result<Report> {
    run_kind(spec, ExperimentKind::Speed)
}

pub fn run_coupling_audit(spec: &ExperimentSpec) -> Result<Report> {
    run_kind(spec, ExperimentKind::CouplingAudit)
}

pub fn run_identity_experiment(spec: &ExperimentSpec) -> Result<Report> {
    run_kind(spec, ExperimentKind::Identity)
}

pub fn run_block_experiment(spec: &ExperimentSpec) -> Result<Report> {
    run_kind(spec, ExperimentKind::Block)
}

pub fn run_fit_alpha_experiment(spec: &ExperimentSpec) -> Result<Report> {
    run_kind(spec, ExperimentKind::FitAlpha)
}

/// Runs `spec` with its records streamed to `dir`. Trials already recorded
/// there by an interrupted run of the same spec are kept; only the missing
/// indices are simulated. Ends by persisting the full report.
pub fn run_resumable(spec: &ExperimentSpec, dir: &Path, opts: RunOptions) -> Result<Report> {
    spec.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let spec_path = dir.join(SPEC_FILE);
    if spec_path.exists() {
        let stored = persist::read_spec(&spec_path)?;
        if stored != *spec {
            return Err(Error::schema(&spec_path, "directory holds a different experiment"));
        }
    } else {
        persist::write_spec(&spec_path, spec)?;
    }

    let records_path = dir.join(RECORDS_FILE);
    let (mut records, valid_len) = persist::read_records_prefix(&records_path)?;
    records.retain(|r| r.trial_index < spec.n_trials);
    records.sort_by_key(|r| r.trial_index);
    records.dedup_by_key(|r| r.trial_index);
    if let Some(r) = records.iter().find(|r| r.master_seed != spec.master_seed) {
        return Err(Error::schema(&records_path, format!("trial {} has another seed", r.trial_index)));
    }
    let mut done = vec![false; spec.n_trials as usize];
    for r in &records {
        done[r.trial_index as usize] = true;
    }
    let missing: Vec<u64> = (0..spec.n_trials).filter(|&i| !done[i as usize]).collect();

    if !missing.is_empty() {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&records_path)
            .map_err(|e| Error::io(&records_path, e))?;
        file.set_len(valid_len).map_err(|e| Error::io(&records_path, e))?;
        run_indices(spec, &missing, opts, |chunk| {
            let mut buf = Vec::new();
            for r in chunk {
                serde_json::to_writer(&mut buf, r).map_err(|e| Error::schema(&records_path, e.to_string()))?;
                buf.push(b'\n');
            }
            file.write_all(&buf)
                .and_then(|()| file.flush())
                .map_err(|e| Error::io(&records_path, e))?;
            records.extend_from_slice(chunk);
            Ok(())
        })?;
    }

    let report = Report::from_records(spec.clone(), records)?;
    persist::persist_report(&report, dir)?;
    Ok(report)
}
