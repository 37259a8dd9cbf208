//! Monte Carlo verification suites.
//!
//! A suite expands its configuration into grid cells, runs `m_replicas`
//! replicas per cell on the replica pool, appends each finished record to a
//! JSON-lines file through a single writer, and aggregates the record set
//! into a [`SuiteSummary`]. Each replica draws from its own counter-based
//! stream, so records do not depend on the worker count, and an interrupted
//! run resumes by computing only the missing (cell, index) pairs.

mod config;
mod replica;
mod store;
mod summary;

use std::collections::HashSet;
use std::path::{Path, PathBuf};

pub use config::{
    ContourChoice, ExperimentConfig, MethodOverrides, OutputPaths, Suite, SuiteParams, Thresholds,
    TwSettings,
};
pub use replica::{
    cells, clt_centering, clt_point, clt_stat, multiplier_key, run_replica, xi1_stat, Cell,
    CltKind, MethodDiagnostics, ReplicaRecord, MAX_RESAMPLES, STICKY_TOP,
};
pub use store::{load_records, write_records, RecordWriter};
pub use summary::{
    g2_target, summarize, tw_reference, Check, SuiteSummary, SummaryProvenance, SummaryRow,
    CSV_HEADER,
};

use crate::error::{Error, Result};
use crate::par;

/// Records and summary of one suite run.
#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub records: Vec<ReplicaRecord>,
    pub summary: SuiteSummary,
}

/// Where `run_suite` keeps a copy of the configuration next to the records.
pub fn config_sidecar(records: &Path) -> PathBuf {
    let mut name = records.as_os_str().to_owned();
    name.push(".config.json");
    PathBuf::from(name)
}

/// Runs every missing replica of the suite and summarizes the full record
/// set. Records already present in `output.records` are kept, provided they
/// were produced by the same configuration.
pub fn run_suite(cfg: &ExperimentConfig) -> Result<SuiteRun> {
    cfg.validate()?;
    let grid = cells(cfg);
    let labels: HashSet<&str> = grid.iter().map(|c| c.label.as_str()).collect();
    let mut records = Vec::new();
    if let Some(path) = &cfg.output.records {
        let side = config_sidecar(path);
        if path.exists() {
            if let Ok(text) = std::fs::read_to_string(&side) {
                let previous: ExperimentConfig = serde_json::from_str(&text)?;
                if previous.hash() != cfg.hash() {
                    return Err(Error::Config {
                        field: "output.records".into(),
                        message: format!(
                            "{} holds records of a different configuration",
                            path.display()
                        ),
                    });
                }
            }
            records = load_records(path)?;
            if let Some(r) = records.iter().find(|r| !labels.contains(r.cell.as_str())) {
                return Err(Error::Config {
                    field: "output.records".into(),
                    message: format!("record for unknown cell {}", r.cell),
                });
            }
        }
        std::fs::write(&side, cfg.to_json())
            .map_err(|e| Error::io(format!("writing {}", side.display()), e))?;
    }
    let done: HashSet<(String, u64)> = records
        .iter()
        .map(|r| (r.cell.clone(), r.replica_index))
        .collect();
    let todo: Vec<(usize, u64)> = grid
        .iter()
        .enumerate()
        .flat_map(|(c, cell)| {
            (0..cfg.m_replicas as u64)
                .map(move |i| (c, i))
                .filter(|(_, i)| !done.contains(&(cell.label.clone(), *i)))
        })
        .collect();
    let writer = cfg
        .output
        .records
        .clone()
        .map(RecordWriter::spawn)
        .transpose()?;
    let sink = writer.as_ref().map(RecordWriter::sender);
    let fresh = par::with_threads(cfg.threads, || {
        par::map_items(&todo, |&(c, i)| {
            let rec = run_replica(cfg, &grid[c], i);
            if let Some(tx) = &sink {
                let _ = tx.send(rec.clone());
            }
            rec
        })
    });
    drop(sink);
    if let Some(w) = writer {
        w.finish()?;
    }
    records.extend(fresh);
    let summary = summarize(cfg, &records)?;
    if let Some(path) = &cfg.output.summary {
        summary.write(path)?;
    }
    Ok(SuiteRun { records, summary })
}
