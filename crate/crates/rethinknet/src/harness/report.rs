//! Report data structures and their JSON, CSV and markdown renderings.
//!
//! JSON reports are versioned via `schema_version` and, field order being
//! fixed by the struct definitions, serialize byte-identically for identical
//! inputs once timing is stripped (`strip_timing`).

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::costs::{CostFunction, CostKind, Direction};
use crate::data::DatasetStats;
use crate::error::{Error, Result};
use crate::model::{ModelConfig, TrainConfig};

use super::stats::{mean, standard_error, TTestResult};

pub const SCHEMA_VERSION: u32 = 1;

/// One value per evaluation criterion, in the fixed report order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerCriterion<T> {
    pub hamming: T,
    pub rank_loss: T,
    pub f1: T,
    pub accuracy: T,
}

impl<T> PerCriterion<T> {
    pub fn get(&self, kind: CostKind) -> &T {
        match kind {
            CostKind::Hamming => &self.hamming,
            CostKind::RankLoss => &self.rank_loss,
            CostKind::F1 => &self.f1,
            CostKind::Accuracy => &self.accuracy,
        }
    }

    pub fn try_from_fn(mut f: impl FnMut(CostKind) -> Result<T>) -> Result<Self> {
        Ok(PerCriterion {
            hamming: f(CostKind::Hamming)?,
            rank_loss: f(CostKind::RankLoss)?,
            f1: f(CostKind::F1)?,
            accuracy: f(CostKind::Accuracy)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Diverged { message: String },
}

/// Everything recorded about one repeat of the protocol. The train/test
/// vectors hold one value per rethink iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub repeat: usize,
    pub split_seed: u64,
    pub status: RunStatus,
    pub epochs_ran: usize,
    pub l2_used: f64,
    pub parameter_count: usize,
    pub train: Option<PerCriterion<Vec<f64>>>,
    pub test: Option<PerCriterion<Vec<f64>>>,
}

/// Mean and standard error over completed runs, per rethink iteration plus
/// the final iteration's headline values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionAggregate {
    pub per_iteration_mean: Vec<f64>,
    pub per_iteration_ste: Vec<f64>,
    pub final_mean: f64,
    pub final_ste: f64,
}

/// Wall-clock information, kept separate so byte-level reproducibility can
/// be checked on everything else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingInfo {
    pub total_secs: f64,
    pub per_run_secs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub dataset: DatasetStats,
    pub model: ModelConfig,
    pub train_config: TrainConfig,
    pub repeats: usize,
    pub parameter_count: usize,
    pub runs: Vec<RunRecord>,
    /// Indices of runs excluded from the aggregates (diverged).
    pub excluded_runs: Vec<usize>,
    pub aggregates_train: PerCriterion<CriterionAggregate>,
    pub aggregates_test: PerCriterion<CriterionAggregate>,
    pub timing: Option<TimingInfo>,
}

impl ExperimentReport {
    /// Copy with all wall-clock fields removed.
    pub fn strip_timing(&self) -> Self {
        let mut out = self.clone();
        out.timing = None;
        out
    }

    /// Per-run final test values of one criterion, completed runs only.
    pub fn final_test_values(&self, kind: CostKind) -> Vec<f64> {
        self.runs
            .iter()
            .filter_map(|r| r.test.as_ref())
            .map(|t| *t.get(kind).last().expect("B >= 1"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReweightingReport {
    pub schema_version: u32,
    pub dataset: DatasetStats,
    pub repeats: usize,
    pub reweighted: ExperimentReport,
    pub non_reweighted: ExperimentReport,
    /// Paired t-test per criterion on final test values
    /// (first sample = reweighted, second = non-reweighted).
    pub ttests: PerCriterion<TTestResult>,
}

impl ReweightingReport {
    pub fn strip_timing(&self) -> Self {
        let mut out = self.clone();
        out.reweighted = out.reweighted.strip_timing();
        out.non_reweighted = out.non_reweighted.strip_timing();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellComparisonEntry {
    pub cell: crate::kernels::CellKind,
    pub hidden_dim: usize,
    pub parameter_count: usize,
    pub report: ExperimentReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellComparisonReport {
    pub schema_version: u32,
    pub dataset: DatasetStats,
    pub repeats: usize,
    pub entries: Vec<CellComparisonEntry>,
}

impl CellComparisonReport {
    pub fn strip_timing(&self) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            e.report = e.report.strip_timing();
        }
        out
    }
}

/// Row of a rethink curve: one iteration's mean train and test values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub iteration: usize,
    pub train_mean: f64,
    pub test_mean: f64,
}

/// Envelope written to disk, tagged so `report` can re-render any kind.
#[allow(clippy::large_enum_variant)] // transient value, never stored in bulk
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "report_kind", rename_all = "snake_case")]
pub enum ReportFile {
    Experiment(ExperimentReport),
    Reweighting(ReweightingReport),
    Cells(CellComparisonReport),
}

impl ReportFile {
    pub fn strip_timing(&self) -> Self {
        match self {
            ReportFile::Experiment(r) => ReportFile::Experiment(r.strip_timing()),
            ReportFile::Reweighting(r) => ReportFile::Reweighting(r.strip_timing()),
            ReportFile::Cells(r) => ReportFile::Cells(r.strip_timing()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_csv(&self) -> String {
        match self {
            ReportFile::Experiment(r) => experiment_csv(r, None),
            ReportFile::Reweighting(r) => {
                let mut out = experiment_csv(&r.reweighted, Some("reweighted"));
                let body = experiment_csv(&r.non_reweighted, Some("non_reweighted"));
                out.push_str(body.split_once('\n').map(|(_, b)| b).unwrap_or(""));
                out
            }
            ReportFile::Cells(r) => {
                let mut out = String::new();
                for (i, entry) in r.entries.iter().enumerate() {
                    let block = experiment_csv(&entry.report, Some(entry.cell.name()));
                    if i == 0 {
                        out.push_str(&block);
                    } else {
                        out.push_str(block.split_once('\n').map(|(_, b)| b).unwrap_or(""));
                    }
                }
                out
            }
        }
    }

    pub fn to_markdown(&self) -> String {
        match self {
            ReportFile::Experiment(r) => experiment_markdown(r),
            ReportFile::Reweighting(r) => reweighting_markdown(r),
            ReportFile::Cells(r) => cells_markdown(r),
        }
    }
}

/// The formats `emit_report` can write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn parse(text: &str) -> Result<Self> {
        match text.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" | "markdown-table" => Ok(ReportFormat::Markdown),
            other => Err(Error::Config(format!(
                "unknown report format {other:?}; expected json, csv or md"
            ))),
        }
    }
}

/// Renders the report in the requested format and writes it atomically.
pub fn emit_report(report: &ReportFile, format: ReportFormat, path: &Path) -> Result<()> {
    let payload = match format {
        ReportFormat::Json => {
            let mut json = report.to_json()?;
            json.push('\n');
            json
        }
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Markdown => report.to_markdown(),
    };
    super::write_atomic(path, payload.as_bytes())
}

pub(crate) fn assemble_experiment(
    dataset: DatasetStats,
    model: ModelConfig,
    train_config: TrainConfig,
    repeats: usize,
    runs: Vec<RunRecord>,
    timing: Option<TimingInfo>,
) -> Result<ExperimentReport> {
    let excluded_runs: Vec<usize> = runs
        .iter()
        .filter(|r| !matches!(r.status, RunStatus::Ok))
        .map(|r| r.repeat)
        .collect();
    let completed: Vec<&RunRecord> = runs
        .iter()
        .filter(|r| matches!(r.status, RunStatus::Ok))
        .collect();
    if completed.len() < 2 {
        return Err(Error::Size(format!(
            "only {} of {repeats} runs completed; aggregates need at least 2",
            completed.len()
        )));
    }
    let parameter_count = completed[0].parameter_count;

    let aggregate = |pick: fn(&RunRecord) -> &Option<PerCriterion<Vec<f64>>>| {
        PerCriterion::try_from_fn(|kind| {
            let series: Vec<&Vec<f64>> = completed
                .iter()
                .map(|r| pick(r).as_ref().expect("completed run has values").get(kind))
                .collect();
            let b = series[0].len();
            if series.iter().any(|s| s.len() != b) {
                return Err(Error::dimension("aggregate iterations", b, 0usize));
            }
            let mut per_iteration_mean = Vec::with_capacity(b);
            let mut per_iteration_ste = Vec::with_capacity(b);
            for t in 0..b {
                let at_t: Vec<f64> = series.iter().map(|s| s[t]).collect();
                per_iteration_mean.push(mean(&at_t));
                per_iteration_ste.push(standard_error(&at_t));
            }
            Ok(CriterionAggregate {
                final_mean: *per_iteration_mean.last().expect("B >= 1"),
                final_ste: *per_iteration_ste.last().expect("B >= 1"),
                per_iteration_mean,
                per_iteration_ste,
            })
        })
    };

    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        dataset,
        model,
        train_config,
        repeats,
        parameter_count,
        excluded_runs,
        aggregates_train: aggregate(|r| &r.train)?,
        aggregates_test: aggregate(|r| &r.test)?,
        runs,
        timing,
    })
}

fn csv_quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// One row per (run, criterion, iteration) with train and test values.
/// Diverged runs contribute no rows. An optional `arm` column distinguishes
/// the sides of comparison reports.
fn experiment_csv(report: &ExperimentReport, arm: Option<&str>) -> String {
    let mut out = String::new();
    if arm.is_some() {
        out.push_str("arm,run,seed,criterion,iteration,train_value,test_value\n");
    } else {
        out.push_str("run,seed,criterion,iteration,train_value,test_value\n");
    }
    for run in &report.runs {
        let (Some(train), Some(test)) = (&run.train, &run.test) else {
            continue;
        };
        for kind in CostKind::ALL {
            let train_series = train.get(kind);
            let test_series = test.get(kind);
            for t in 0..train_series.len() {
                if let Some(arm) = arm {
                    let _ = write!(out, "{},", csv_quote(arm));
                }
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    run.repeat,
                    run.split_seed,
                    kind.name(),
                    t + 1,
                    train_series[t],
                    test_series[t]
                );
            }
        }
    }
    out
}

fn fmt_mean_ste(mean: f64, ste: f64) -> String {
    format!("{mean:.4} ± {ste:.4}")
}

fn experiment_markdown(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# Experiment: {} ({} runs{})",
        report.dataset.name,
        report.repeats,
        if report.excluded_runs.is_empty() {
            String::new()
        } else {
            format!(", {} excluded", report.excluded_runs.len())
        }
    );
    let _ = writeln!(
        out,
        "\ncell {}, hidden {}, iterations {}, reweighted {}, dropout {}, {} parameters\n",
        report.model.cell,
        report.model.hidden_dim,
        report.model.rethink_iterations,
        report.model.reweighted,
        report.model.recurrent_dropout,
        report.parameter_count
    );
    out.push_str("| criterion | direction | test (mean ± ste) | train (mean ± ste) |\n");
    out.push_str("|---|---|---|---|\n");
    for kind in CostKind::ALL {
        let test = report.aggregates_test.get(kind);
        let train = report.aggregates_train.get(kind);
        let arrow = match CostFunction::new(kind).direction() {
            Direction::LowerBetter => "lower better",
            Direction::HigherBetter => "higher better",
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            kind.name(),
            arrow,
            fmt_mean_ste(test.final_mean, test.final_ste),
            fmt_mean_ste(train.final_mean, train.final_ste)
        );
    }

    let b = report.aggregates_test.hamming.per_iteration_mean.len();
    if b > 1 {
        out.push_str("\n## Test value per rethink iteration\n\n");
        out.push_str("| t |");
        for kind in CostKind::ALL {
            let _ = write!(out, " {} |", kind.name());
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in CostKind::ALL {
            out.push_str("---|");
        }
        out.push('\n');
        for t in 0..b {
            let _ = write!(out, "| {} |", t + 1);
            for kind in CostKind::ALL {
                let _ = write!(
                    out,
                    " {:.4} |",
                    report.aggregates_test.get(kind).per_iteration_mean[t]
                );
            }
            out.push('\n');
        }
    }
    out
}

/// Bolds the best of a row of (mean, ste) cells respecting the criterion
/// direction, mirroring the usual results-table convention.
fn comparison_row(
    kind: CostKind,
    cells: &[(String, f64, f64)], // (column name unused here, mean, ste)
) -> String {
    let cost = CostFunction::new(kind);
    let best = cells
        .iter()
        .map(|(_, m, _)| *m)
        .reduce(|a, b| if cost.is_better(b, a) { b } else { a })
        .expect("at least one column");
    let mut row = format!("| {} |", kind.name());
    for (_, m, s) in cells {
        let text = fmt_mean_ste(*m, *s);
        if *m == best {
            let _ = write!(row, " **{text}** |");
        } else {
            let _ = write!(row, " {text} |");
        }
    }
    row
}

fn reweighting_markdown(report: &ReweightingReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# Reweighting ablation: {} ({} paired runs)\n",
        report.dataset.name, report.repeats
    );
    out.push_str("| criterion | non-reweighted | reweighted | paired t-test p | verdict |\n");
    out.push_str("|---|---|---|---|---|\n");
    for kind in CostKind::ALL {
        let non = report.non_reweighted.aggregates_test.get(kind);
        let rew = report.reweighted.aggregates_test.get(kind);
        let row = comparison_row(
            kind,
            &[
                ("non".into(), non.final_mean, non.final_ste),
                ("rew".into(), rew.final_mean, rew.final_ste),
            ],
        );
        let test = report.ttests.get(kind);
        let _ = writeln!(out, "{row} {:.4} | {:?} |", test.p_value, test.verdict);
    }
    out
}

fn cells_markdown(report: &CellComparisonReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# Cell comparison: {} ({} runs per cell)\n",
        report.dataset.name, report.repeats
    );
    out.push_str("| cell | hidden | parameters |\n|---|---|---|\n");
    for e in &report.entries {
        let _ = writeln!(out, "| {} | {} | {} |", e.cell, e.hidden_dim, e.parameter_count);
    }
    for split_name in ["training", "testing"] {
        let _ = writeln!(out, "\n## {split_name}\n");
        out.push_str("| criterion |");
        for e in &report.entries {
            let _ = write!(out, " {} |", e.cell);
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in &report.entries {
            out.push_str("---|");
        }
        out.push('\n');
        for kind in CostKind::ALL {
            let cells: Vec<(String, f64, f64)> = report
                .entries
                .iter()
                .map(|e| {
                    let agg = if split_name == "training" {
                        e.report.aggregates_train.get(kind)
                    } else {
                        e.report.aggregates_test.get(kind)
                    };
                    (e.cell.name().to_string(), agg.final_mean, agg.final_ste)
                })
                .collect();
            let _ = writeln!(out, "{}", comparison_row(kind, &cells));
        }
    }
    out
}
