//! Experiment orchestration: repeated random splits with aggregate
//! statistics, the reweighting ablation, the cell comparison, the
//! feed-forward baseline, correlation analysis and report emission.
//!
//! Independent runs execute in parallel on the global thread pool; results
//! are collected in run order, so reports are deterministic regardless of
//! scheduling. All output files are written atomically (temp file + rename).

mod br;
mod report;
mod stats;

pub use br::BrBaseline;
pub use report::{
    emit_report, CellComparisonEntry, CellComparisonReport, CriterionAggregate, CurveRow,
    ExperimentReport, PerCriterion, ReportFile, ReportFormat, ReweightingReport, RunRecord,
    RunStatus, TimingInfo, SCHEMA_VERSION,
};
pub use stats::{mean, paired_ttest, pearson, sample_std, standard_error, tally_verdicts, TTestResult, Verdict};

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costs::CostKind;
use crate::data::{scale_features, split, Dataset};
use crate::error::{Error, Result};
use crate::model::{select_l2, ModelConfig, RethinkNetModel, TrainConfig, L2_GRID};

/// How the L2 strength is chosen for each run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L2Mode {
    Fixed(f64),
    /// Grid-search 1e-8 ..= 1e-1 with 3-fold cross-validation on the
    /// training portion of every run.
    CrossValidate,
}

impl L2Mode {
    /// Parses the CLI form: a float or the word `cv`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.eq_ignore_ascii_case("cv") {
            return Ok(L2Mode::CrossValidate);
        }
        let v: f64 = text
            .parse()
            .map_err(|_| Error::Config(format!("l2 must be a float or `cv`, got {text:?}")))?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::Config("l2 strength must be finite and >= 0".into()));
        }
        Ok(L2Mode::Fixed(v))
    }
}

fn evaluate_all(
    model: &RethinkNetModel,
    ds: &Dataset,
) -> Result<PerCriterion<Vec<f64>>> {
    PerCriterion::try_from_fn(|kind| Ok(model.evaluate(ds, kind)?.per_iteration))
}

struct SingleRunOutput {
    record: RunRecord,
    wall_clock_secs: f64,
}

fn single_run(
    ds: &Dataset,
    base: &ModelConfig,
    tc: &TrainConfig,
    repeat: usize,
    l2: &L2Mode,
) -> Result<SingleRunOutput> {
    let started = Instant::now();
    let seed = base.seed.wrapping_add(repeat as u64);
    let partition = split(ds, seed)?;
    let train = ds.subset(&partition.train_indices)?;
    let test = ds.subset(&partition.test_indices)?;
    let (train_scaled, scaler) = scale_features(&train)?;
    let test_scaled = scaler.transform(&test)?;

    let mut config = base.clone();
    config.seed = seed;
    config.l2_strength = match l2 {
        L2Mode::Fixed(v) => *v,
        L2Mode::CrossValidate => {
            select_l2(&train_scaled, &L2_GRID, 3, &config, tc)?.best_l2
        }
    };

    let mut model = RethinkNetModel::new(config.clone(), ds.n_features(), ds.n_labels())?;
    let record = match model.fit(&train_scaled, tc) {
        Ok(()) => RunRecord {
            repeat,
            split_seed: seed,
            status: RunStatus::Ok,
            epochs_ran: model.history().len(),
            l2_used: config.l2_strength,
            parameter_count: model.parameter_count(),
            train: Some(evaluate_all(&model, &train_scaled)?),
            test: Some(evaluate_all(&model, &test_scaled)?),
        },
        Err(Error::Divergence { epoch, batch }) => {
            eprintln!(
                "warning: repeat {repeat} (seed {seed}) diverged at epoch {epoch}, batch {batch}; excluded from aggregates"
            );
            RunRecord {
                repeat,
                split_seed: seed,
                status: RunStatus::Diverged {
                    message: format!("non-finite loss at epoch {epoch}, batch {batch}"),
                },
                epochs_ran: model.history().len(),
                l2_used: config.l2_strength,
                parameter_count: model.parameter_count(),
                train: None,
                test: None,
            }
        }
        Err(other) => return Err(other),
    };
    Ok(SingleRunOutput {
        record,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

/// The full repeated-split protocol: for each repeat r, split with seed
/// base+r, scale on the training part, train, and evaluate all four
/// criteria at every rethink iteration on both parts. Diverged runs are
/// recorded but excluded from the aggregates.
pub fn run_experiment(
    ds: &Dataset,
    base: &ModelConfig,
    tc: &TrainConfig,
    repeats: usize,
    l2: &L2Mode,
) -> Result<ExperimentReport> {
    if repeats < 2 {
        return Err(Error::Config("experiments need repeats >= 2".into()));
    }
    base.validate()?;
    tc.validate()?;
    let started = Instant::now();
    let outputs: Vec<SingleRunOutput> = (0..repeats)
        .into_par_iter()
        .map(|r| single_run(ds, base, tc, r, l2))
        .collect::<Result<Vec<_>>>()?;

    let per_run_secs: Vec<f64> = outputs.iter().map(|o| o.wall_clock_secs).collect();
    let runs: Vec<RunRecord> = outputs.into_iter().map(|o| o.record).collect();
    let report = report::assemble_experiment(
        ds.stats(),
        base.clone(),
        tc.clone(),
        repeats,
        runs,
        Some(TimingInfo {
            total_secs: started.elapsed().as_secs_f64(),
            per_run_secs,
        }),
    )?;
    Ok(report)
}

/// Mean train/test values of one criterion per rethink iteration.
pub fn rethink_curve(report: &ExperimentReport, kind: CostKind) -> Vec<CurveRow> {
    let train = report.aggregates_train.get(kind);
    let test = report.aggregates_test.get(kind);
    train
        .per_iteration_mean
        .iter()
        .zip(&test.per_iteration_mean)
        .enumerate()
        .map(|(t, (&train_mean, &test_mean))| CurveRow {
            iteration: t + 1,
            train_mean,
            test_mean,
        })
        .collect()
}

/// Reweighted versus non-reweighted training on identical split seeds, with
/// a paired t-test per criterion on the final test values.
pub fn compare_reweighting(
    ds: &Dataset,
    base: &ModelConfig,
    tc: &TrainConfig,
    repeats: usize,
    l2: &L2Mode,
) -> Result<ReweightingReport> {
    let mut reweighted_config = base.clone();
    reweighted_config.reweighted = true;
    let mut uniform_config = base.clone();
    uniform_config.reweighted = false;

    let reweighted = run_experiment(ds, &reweighted_config, tc, repeats, l2)?;
    let non_reweighted = run_experiment(ds, &uniform_config, tc, repeats, l2)?;
    debug_assert!(reweighted
        .runs
        .iter()
        .zip(&non_reweighted.runs)
        .all(|(a, b)| a.split_seed == b.split_seed));

    // Pair only runs that completed in both arms; seeds are shared by index.
    let ttests = PerCriterion::try_from_fn(|kind| {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (ra, rb) in reweighted.runs.iter().zip(&non_reweighted.runs) {
            if let (Some(ta), Some(tb)) = (&ra.test, &rb.test) {
                a.push(*ta.get(kind).last().expect("B >= 1"));
                b.push(*tb.get(kind).last().expect("B >= 1"));
            }
        }
        paired_ttest(&a, &b)
    })?;

    Ok(ReweightingReport {
        schema_version: SCHEMA_VERSION,
        dataset: ds.stats(),
        repeats,
        reweighted,
        non_reweighted,
        ttests,
    })
}

/// Identical protocol per cell kind, reporting train and test aggregates
/// side by side (the train columns expose overfitting gaps) plus parameter
/// counts. `hidden_overrides` lets the caller match parameter budgets
/// across cells.
pub fn compare_cells(
    ds: &Dataset,
    cells: &[CellKindSpec],
    base: &ModelConfig,
    tc: &TrainConfig,
    repeats: usize,
    l2: &L2Mode,
) -> Result<CellComparisonReport> {
    if cells.is_empty() {
        return Err(Error::Config("cell comparison needs at least one cell".into()));
    }
    let mut entries = Vec::with_capacity(cells.len());
    for spec in cells {
        let mut config = base.clone();
        config.cell = spec.cell;
        if let Some(h) = spec.hidden_dim {
            config.hidden_dim = h;
        }
        let report = run_experiment(ds, &config, tc, repeats, l2)?;
        entries.push(CellComparisonEntry {
            cell: spec.cell,
            hidden_dim: config.hidden_dim,
            parameter_count: report.parameter_count,
            report,
        });
    }
    Ok(CellComparisonReport {
        schema_version: SCHEMA_VERSION,
        dataset: ds.stats(),
        repeats,
        entries,
    })
}

/// A cell to include in [`compare_cells`], with an optional hidden width
/// override for parameter-budget matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellKindSpec {
    pub cell: crate::kernels::CellKind,
    pub hidden_dim: Option<usize>,
}

/// Repeated-split protocol for the feed-forward baseline. Its report has a
/// single "iteration", the network's only output.
pub fn br_baseline(
    ds: &Dataset,
    tc: &TrainConfig,
    repeats: usize,
    hidden_dim: usize,
    l2_strength: f64,
    seed_base: u64,
) -> Result<ExperimentReport> {
    if repeats < 2 {
        return Err(Error::Config("experiments need repeats >= 2".into()));
    }
    let started = Instant::now();
    let outputs: Vec<SingleRunOutput> = (0..repeats)
        .into_par_iter()
        .map(|repeat| -> Result<SingleRunOutput> {
            let run_started = Instant::now();
            let seed = seed_base.wrapping_add(repeat as u64);
            let partition = split(ds, seed)?;
            let train = ds.subset(&partition.train_indices)?;
            let test = ds.subset(&partition.test_indices)?;
            let (train_scaled, scaler) = scale_features(&train)?;
            let test_scaled = scaler.transform(&test)?;
            let mut model =
                BrBaseline::new(ds.n_features(), ds.n_labels(), hidden_dim, l2_strength, seed)?;
            let record = match model.fit(&train_scaled, tc) {
                Ok(()) => {
                    let eval = |part: &Dataset| {
                        PerCriterion::try_from_fn(|kind| Ok(vec![model.evaluate(part, kind)?]))
                    };
                    RunRecord {
                        repeat,
                        split_seed: seed,
                        status: RunStatus::Ok,
                        epochs_ran: model.history().len(),
                        l2_used: l2_strength,
                        parameter_count: model.parameter_count(),
                        train: Some(eval(&train_scaled)?),
                        test: Some(eval(&test_scaled)?),
                    }
                }
                Err(Error::Divergence { epoch, batch }) => {
                    eprintln!(
                        "warning: baseline repeat {repeat} diverged at epoch {epoch}, batch {batch}"
                    );
                    RunRecord {
                        repeat,
                        split_seed: seed,
                        status: RunStatus::Diverged {
                            message: format!("non-finite loss at epoch {epoch}, batch {batch}"),
                        },
                        epochs_ran: model.history().len(),
                        l2_used: l2_strength,
                        parameter_count: model.parameter_count(),
                        train: None,
                        test: None,
                    }
                }
                Err(other) => return Err(other),
            };
            Ok(SingleRunOutput {
                record,
                wall_clock_secs: run_started.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let per_run_secs: Vec<f64> = outputs.iter().map(|o| o.wall_clock_secs).collect();
    let runs: Vec<RunRecord> = outputs.into_iter().map(|o| o.record).collect();
    let mut config = ModelConfig::new(crate::kernels::CellKind::Srn, CostKind::Hamming);
    config.hidden_dim = hidden_dim;
    config.rethink_iterations = 1;
    config.recurrent_dropout = 0.0;
    config.l2_strength = l2_strength;
    config.reweighted = false;
    config.seed = seed_base;
    report::assemble_experiment(
        ds.stats(),
        config,
        tc.clone(),
        repeats,
        runs,
        Some(TimingInfo {
            total_secs: started.elapsed().as_secs_f64(),
            per_run_secs,
        }),
    )
}

/// The normalized memory matrix of a trained label-width simple-cell model
/// next to the empirical label correlation matrix, plus the Pearson
/// correlation between their off-diagonal entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub schema_version: u32,
    pub dataset: crate::data::DatasetStats,
    pub label_names: Vec<String>,
    pub normalized_memory: Vec<Vec<f64>>,
    pub unnormalized_rows: Vec<usize>,
    pub label_correlation: Vec<Vec<f64>>,
    pub offdiagonal_pearson: f64,
}

/// Pearson correlation matrix of the label columns; labels without variance
/// correlate 0 with everything (diagonal stays 1).
pub fn label_correlation_matrix(ds: &Dataset) -> Vec<Vec<f64>> {
    let k = ds.n_labels();
    let columns: Vec<Vec<f64>> = (0..k)
        .map(|j| ds.labels.iter().map(|l| l.get(j) as f64).collect())
        .collect();
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            out[i][j] = if i == j {
                1.0
            } else {
                pearson(&columns[i], &columns[j])
            };
        }
    }
    out
}

pub fn export_correlation_analysis(
    model: &RethinkNetModel,
    ds: &Dataset,
) -> Result<CorrelationReport> {
    let memory = model.extract_memory_matrix()?;
    if ds.n_labels() != model.n_labels() {
        return Err(Error::dimension(
            "correlation analysis labels",
            model.n_labels(),
            ds.n_labels(),
        ));
    }
    let label_correlation = label_correlation_matrix(ds);
    let k = ds.n_labels();
    let mut mem_offdiag = Vec::with_capacity(k * k - k);
    let mut corr_offdiag = Vec::with_capacity(k * k - k);
    for (i, (mem_row, corr_row)) in memory
        .normalized
        .iter()
        .zip(&label_correlation)
        .enumerate()
    {
        for (j, (&m, &c)) in mem_row.iter().zip(corr_row).enumerate() {
            if i != j {
                mem_offdiag.push(m);
                corr_offdiag.push(c);
            }
        }
    }
    Ok(CorrelationReport {
        schema_version: SCHEMA_VERSION,
        dataset: ds.stats(),
        label_names: ds.label_names.clone(),
        normalized_memory: memory.normalized.clone(),
        unnormalized_rows: memory.unnormalized_rows.clone(),
        label_correlation,
        offdiagonal_pearson: pearson(&mem_offdiag, &corr_offdiag),
    })
}

/// Writes `bytes` to `path` via a sibling temp file and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    let tmp_name = format!(".{file_name}.tmp.{}", std::process::id());
    let tmp_path = match dir {
        Some(d) => d.join(&tmp_name),
        None => std::path::PathBuf::from(&tmp_name),
    };
    std::fs::write(&tmp_path, bytes)?;
    std::fs::rename(&tmp_path, path)?;
    Ok(())
}
