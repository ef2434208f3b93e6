use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Cell, DataSplits, DatasetDescriptor, ExperimentConfig};
use super::report::{emit_specialization_report, emit_sweep_table};
use crate::ensemble::{Ensemble, OracleReport};
use crate::error::{Error, Result};
use crate::parallel;
use crate::trainers::{evaluate, train, TrainConfig, TrainHistory};

/// Everything needed to reproduce and audit one trained cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub cell: Cell,
    pub config: TrainConfig,
    pub dataset: DatasetDescriptor,
    pub probe_size: usize,
    /// Directory relative file paths in `dataset` resolve against.
    pub data_root: PathBuf,
    pub report: OracleReport,
    pub history: TrainHistory,
    /// Training time only; excludes data loading, evaluation and I/O.
    pub wall_clock_seconds: f64,
    pub engine_version: String,
    pub seed: u64,
}

/// A cell that failed, with its diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub cell: Cell,
    pub error: String,
    pub numerical: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    /// Completed cells, ordered by cell coordinates.
    pub records: Vec<RecordWithEnsemble>,
    pub failures: Vec<CellFailure>,
}

impl SweepOutcome {
    pub fn run_records(&self) -> Vec<&RunRecord> {
        self.records.iter().map(|r| &r.record).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RecordWithEnsemble {
    pub record: RunRecord,
    pub ensemble: Ensemble,
}

/// Trains and evaluates one cell on pre-built splits.
pub fn run_cell(
    cell: Cell,
    config: TrainConfig,
    dataset: &DatasetDescriptor,
    probe_size: usize,
    data_root: &Path,
    splits: &DataSplits,
    init: Option<Ensemble>,
) -> Result<RecordWithEnsemble> {
    let started = Instant::now();
    let (ensemble, history) = train(&config, &splits.train, &splits.probe, init)?;
    let wall_clock_seconds = started.elapsed().as_secs_f64();
    let report = evaluate(&ensemble, &splits.test)?;
    log::info!(
        "{}: oracle accuracy {:.4}, oracle loss {:.4}, {:.2}s",
        cell.id(),
        report.oracle_accuracy,
        report.oracle_loss,
        wall_clock_seconds
    );
    Ok(RecordWithEnsemble {
        record: RunRecord {
            cell,
            config,
            dataset: dataset.clone(),
            probe_size,
            data_root: data_root.to_path_buf(),
            report,
            history,
            wall_clock_seconds,
            engine_version: crate::ENGINE_VERSION.to_string(),
            seed: cell.seed,
        },
        ensemble,
    })
}

/// Runs every cell of the sweep. Cell failures are collected, not propagated;
/// an `Err` means the sweep could not start (bad config, unreadable data) or
/// its outputs could not be written.
pub fn run_experiment(config: &ExperimentConfig, data_root: &Path) -> Result<SweepOutcome> {
    config.validate()?;
    parallel::with_jobs(config.jobs, || {
        let seeds = config.replicate_seeds.clone();
        let materialized = parallel::map(&seeds, |&seed| {
            config.dataset.materialize(seed, config.probe_size, data_root)
        });
        let mut splits = BTreeMap::new();
        for (seed, s) in seeds.iter().zip(materialized) {
            splits.insert(*seed, s);
        }
        let cells = config.cells();
        let results = parallel::map(&cells, |cell| {
            let data = splits[&cell.seed].as_ref().map_err(|e| Error::InvalidConfig(format!("data for seed {}: {e}", cell.seed)))?;
            run_cell(*cell, config.cell_config(cell), &config.dataset, config.probe_size, data_root, data, None)
        });
        let mut outcome = SweepOutcome::default();
        for (cell, result) in cells.into_iter().zip(results) {
            match result {
                Ok(r) => outcome.records.push(r),
                Err(e) => {
                    log::error!("{} failed: {e}", cell.id());
                    outcome.failures.push(CellFailure {
                        cell,
                        numerical: e.is_numerical(),
                        error: e.to_string(),
                    });
                }
            }
        }
        outcome.records.sort_by_key(|r| r.record.cell);
        Ok(outcome)
    })
    .and_then(|outcome: SweepOutcome| {
        if let Some(dir) = &config.output_dir {
            let dir = if dir.is_absolute() { dir.clone() } else { data_root.join(dir) };
            persist(&outcome, &dir)?;
        }
        Ok(outcome)
    })
}

/// Retrains a record from its snapshot.
pub fn rerun(record: &RunRecord) -> Result<RecordWithEnsemble> {
    let splits = record.dataset.materialize(record.seed, record.probe_size, &record.data_root)?;
    run_cell(record.cell, record.config.clone(), &record.dataset, record.probe_size, &record.data_root, &splits, None)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Writes `record.json`, `history.csv` and `ensemble.oens` into `dir`.
pub fn write_run_dir(run: &RecordWithEnsemble, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    write(&dir.join("record.json"), &serde_json::to_vec_pretty(&run.record)?)?;
    let mut history = Vec::new();
    run.record.history.write_csv(&mut history)?;
    write(&dir.join("history.csv"), &history)?;
    run.ensemble.save(&dir.join("ensemble.oens"))
}

/// Writes `runs/<cell_id>/{record.json,history.csv,ensemble.oens}`, `sweep.csv`,
/// `specialization.json` and, if any cell failed, `failures.json`.
pub fn persist(outcome: &SweepOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    for r in &outcome.records {
        write_run_dir(r, &dir.join("runs").join(r.record.cell.id()))?;
    }
    let records = outcome.run_records();
    write(&dir.join("sweep.csv"), emit_sweep_table(&records).as_bytes())?;
    let specialization: Vec<_> = records
        .iter()
        .filter(|r| r.cell.k == 1)
        .map(|r| emit_specialization_report(r))
        .collect::<Result<_>>()?;
    write(&dir.join("specialization.json"), &serde_json::to_vec_pretty(&specialization)?)?;
    if !outcome.failures.is_empty() {
        write(&dir.join("failures.json"), &serde_json::to_vec_pretty(&outcome.failures)?)?;
    }
    Ok(())
}
