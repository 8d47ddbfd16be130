//! Command-line front end: training, evaluation and the experiment protocol.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 training divergence. `RETHINK_THREADS` caps the number of parallel
//! runs (default: all cores).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rethinknet::costs::CostKind;
use rethinknet::data::{self, Dataset, LabelSpec};
use rethinknet::harness::{self, emit_report, CellKindSpec, L2Mode, ReportFile, ReportFormat};
use rethinknet::kernels::CellKind;
use rethinknet::model::{select_l2, ModelFile, RethinkNetModel, TrainConfig, L2_GRID};
use rethinknet::{Error, ModelConfig};

#[derive(Parser)]
#[command(
    name = "rethinknet",
    version,
    about = "Cost-sensitive multi-label classification with an iteratively rethinking recurrent model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FileFormat {
    Arff,
    Native,
}

#[derive(Clone, Copy, ValueEnum)]
enum CostArg {
    Hamming,
    F1,
    Accuracy,
    Rankloss,
}

impl From<CostArg> for CostKind {
    fn from(c: CostArg) -> CostKind {
        match c {
            CostArg::Hamming => CostKind::Hamming,
            CostArg::F1 => CostKind::F1,
            CostArg::Accuracy => CostKind::Accuracy,
            CostArg::Rankloss => CostKind::RankLoss,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CellArg {
    Srn,
    Gru,
    Lstm,
    Irnn,
}

impl From<CellArg> for CellKind {
    fn from(c: CellArg) -> CellKind {
        match c {
            CellArg::Srn => CellKind::Srn,
            CellArg::Gru => CellKind::Gru,
            CellArg::Lstm => CellKind::Lstm,
            CellArg::Irnn => CellKind::Irnn,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// Dataset file to load.
    #[arg(long)]
    data: PathBuf,
    /// File format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FileFormat>,
    /// Label attributes for ARFF files: `last_k:<K>` or `xml:<path>`.
    #[arg(long)]
    labels: Option<String>,
}

impl DataArgs {
    fn load(&self) -> rethinknet::Result<Dataset> {
        let format = self.format.unwrap_or(
            match self.data.extension().and_then(|e| e.to_str()) {
                Some(ext) if ext.eq_ignore_ascii_case("arff") => FileFormat::Arff,
                _ => FileFormat::Native,
            },
        );
        match format {
            FileFormat::Arff => {
                let spec = self.labels.as_deref().ok_or_else(|| {
                    Error::Config("ARFF input needs --labels last_k:<K> or xml:<path>".into())
                })?;
                data::load_arff(&self.data, &LabelSpec::parse(spec)?)
            }
            FileFormat::Native => data::load_native(&self.data),
        }
    }
}

#[derive(Args)]
struct ModelArgs {
    /// Criterion the reweighted loss targets.
    #[arg(long, value_enum, default_value = "f1")]
    cost: CostArg,
    #[arg(long, value_enum, default_value = "lstm")]
    cell: CellArg,
    #[arg(long, default_value_t = 128)]
    hidden: usize,
    /// Rethink iterations B.
    #[arg(long, default_value_t = 3)]
    iters: usize,
    /// Disable the cost-difference loss reweighting.
    #[arg(long)]
    no_reweight: bool,
    /// Use raw cost-difference weights instead of mean-one normalization.
    #[arg(long)]
    raw_weights: bool,
    /// Dropout rate on the recurrent weight matrices.
    #[arg(long, default_value_t = 0.25)]
    dropout: f64,
    /// L2 strength: a float, or `cv` for a 3-fold grid search.
    #[arg(long, default_value = "1e-5")]
    l2: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ModelArgs {
    fn config(&self) -> rethinknet::Result<(ModelConfig, L2Mode)> {
        let l2 = L2Mode::parse(&self.l2)?;
        let mut config = ModelConfig::new(self.cell.into(), self.cost.into());
        config.hidden_dim = self.hidden;
        config.rethink_iterations = self.iters;
        config.recurrent_dropout = self.dropout;
        config.reweighted = !self.no_reweight;
        config.seed = self.seed;
        if self.raw_weights {
            config.weight_norm = rethinknet::WeightNorm::Raw;
        }
        if let L2Mode::Fixed(v) = l2 {
            config.l2_strength = v;
        }
        config.validate()?;
        Ok((config, l2))
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, default_value_t = 1e-4)]
    min_delta: f64,
}

impl TrainArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            max_epochs: self.epochs,
            batch_size: self.batch_size,
            patience: self.patience,
            min_delta: self.min_delta,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one model on a dataset and save it.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a saved model on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Report all four criteria instead of the training criterion only.
        #[arg(long)]
        all_criteria: bool,
        /// Also print the value at every rethink iteration.
        #[arg(long)]
        per_iteration: bool,
    },
    /// Repeated-split protocol with aggregate statistics.
    Experiment {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long)]
        out: PathBuf,
        /// Omit wall-clock fields for byte-reproducible output.
        #[arg(long)]
        no_timing: bool,
    },
    /// Reweighted versus non-reweighted training on paired split seeds.
    AblateReweight {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_timing: bool,
    },
    /// The same protocol once per recurrent cell variant.
    CompareCells {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        train: TrainArgs,
        /// Comma-separated list of cells to compare.
        #[arg(long, default_value = "srn,gru,lstm,irnn", value_delimiter = ',')]
        cells: Vec<CellArg>,
        /// Per-cell hidden width overrides for parameter-budget matching.
        #[arg(long)]
        hidden_srn: Option<usize>,
        #[arg(long)]
        hidden_gru: Option<usize>,
        #[arg(long)]
        hidden_lstm: Option<usize>,
        #[arg(long)]
        hidden_irnn: Option<usize>,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_timing: bool,
    },
    /// Feed-forward baseline with one ReLU hidden layer.
    BaselineBr {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value_t = 128)]
        hidden: usize,
        #[arg(long, default_value_t = 1e-5)]
        l2: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_timing: bool,
    },
    /// Memory matrix versus empirical label correlation of a trained model.
    Correlation {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-render a JSON report as markdown or CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// Output format: md, csv or json.
        #[arg(long)]
        format: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_model(path: &PathBuf) -> rethinknet::Result<(RethinkNetModel, ModelFile)> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text)?;
    let net = RethinkNetModel::from_model_file(file.clone())?;
    Ok((net, file))
}

fn apply_stored_scaler(file: &ModelFile, ds: Dataset) -> rethinknet::Result<Dataset> {
    match &file.scaler {
        Some(scaler) => scaler.transform(&ds),
        None => Ok(ds),
    }
}

fn run(cli: Cli) -> rethinknet::Result<()> {
    match cli.command {
        Command::Train {
            data,
            model,
            train,
            out,
        } => {
            let ds = data.load()?;
            let (mut config, l2) = model.config()?;
            let tc = train.config();
            let (scaled, scaler) = rethinknet::data::scale_features(&ds)?;
            if let L2Mode::CrossValidate = l2 {
                let selection = select_l2(&scaled, &L2_GRID, 3, &config, &tc)?;
                eprintln!("selected l2 = {:e}", selection.best_l2);
                config.l2_strength = selection.best_l2;
            }
            let mut net = RethinkNetModel::new(config, ds.n_features(), ds.n_labels())?;
            net.fit(&scaled, &tc)?;
            let mut file = net.to_model_file();
            file.scaler = Some(scaler);
            harness::write_atomic(&out, serde_json::to_string(&file)?.as_bytes())?;
            let eval = net.evaluate(&scaled, net.config.cost)?;
            println!(
                "trained {} epochs; training {} = {:.4}; model written to {}",
                net.history().len(),
                net.config.cost,
                eval.final_value,
                out.display()
            );
            Ok(())
        }
        Command::Eval {
            model,
            data,
            all_criteria,
            per_iteration,
        } => {
            let (net, file) = load_model(&model)?;
            let ds = apply_stored_scaler(&file, data.load()?)?;
            let kinds: Vec<CostKind> = if all_criteria {
                CostKind::ALL.to_vec()
            } else {
                vec![net.config.cost]
            };
            for kind in kinds {
                let eval = net.evaluate(&ds, kind)?;
                if per_iteration {
                    let series = eval
                        .per_iteration
                        .iter()
                        .map(|v| format!("{v:.4}"))
                        .collect::<Vec<_>>()
                        .join(" ");
                    println!("{kind}: {:.4} (per iteration: {series})", eval.final_value);
                } else {
                    println!("{kind}: {:.4}", eval.final_value);
                }
            }
            Ok(())
        }
        Command::Experiment {
            data,
            model,
            train,
            repeats,
            out,
            no_timing,
        } => {
            let ds = data.load()?;
            let (config, l2) = model.config()?;
            let report = harness::run_experiment(&ds, &config, &train.config(), repeats, &l2)?;
            let mut file = ReportFile::Experiment(report);
            if no_timing {
                file = file.strip_timing();
            }
            emit_report(&file, ReportFormat::Json, &out)?;
            println!("report written to {}", out.display());
            Ok(())
        }
        Command::AblateReweight {
            data,
            model,
            train,
            repeats,
            out,
            no_timing,
        } => {
            let ds = data.load()?;
            let (config, l2) = model.config()?;
            let report = harness::compare_reweighting(&ds, &config, &train.config(), repeats, &l2)?;
            let mut file = ReportFile::Reweighting(report);
            if no_timing {
                file = file.strip_timing();
            }
            emit_report(&file, ReportFormat::Json, &out)?;
            println!("report written to {}", out.display());
            Ok(())
        }
        Command::CompareCells {
            data,
            model,
            train,
            cells,
            hidden_srn,
            hidden_gru,
            hidden_lstm,
            hidden_irnn,
            repeats,
            out,
            no_timing,
        } => {
            let ds = data.load()?;
            let (config, l2) = model.config()?;
            let specs: Vec<CellKindSpec> = cells
                .into_iter()
                .map(|c| {
                    let cell: CellKind = c.into();
                    let hidden_dim = match cell {
                        CellKind::Srn => hidden_srn,
                        CellKind::Gru => hidden_gru,
                        CellKind::Lstm => hidden_lstm,
                        CellKind::Irnn => hidden_irnn,
                    };
                    CellKindSpec { cell, hidden_dim }
                })
                .collect();
            let report =
                harness::compare_cells(&ds, &specs, &config, &train.config(), repeats, &l2)?;
            let mut file = ReportFile::Cells(report);
            if no_timing {
                file = file.strip_timing();
            }
            emit_report(&file, ReportFormat::Json, &out)?;
            println!("report written to {}", out.display());
            Ok(())
        }
        Command::BaselineBr {
            data,
            train,
            hidden,
            l2,
            seed,
            repeats,
            out,
            no_timing,
        } => {
            let ds = data.load()?;
            let report = harness::br_baseline(&ds, &train.config(), repeats, hidden, l2, seed)?;
            let mut file = ReportFile::Experiment(report);
            if no_timing {
                file = file.strip_timing();
            }
            emit_report(&file, ReportFormat::Json, &out)?;
            println!("report written to {}", out.display());
            Ok(())
        }
        Command::Correlation { model, data, out } => {
            let (net, file) = load_model(&model)?;
            let ds = apply_stored_scaler(&file, data.load()?)?;
            let analysis = harness::export_correlation_analysis(&net, &ds)?;
            harness::write_atomic(&out, serde_json::to_string_pretty(&analysis)?.as_bytes())?;
            println!(
                "correlation matrices written to {} (off-diagonal agreement r = {:.3})",
                out.display(),
                analysis.offdiagonal_pearson
            );
            Ok(())
        }
        Command::Report { input, format, out } => {
            let format = ReportFormat::parse(&format)?;
            let file = ReportFile::from_json(&std::fs::read_to_string(&input)?)?;
            match out {
                Some(path) => {
                    emit_report(&file, format, &path)?;
                    println!("written to {}", path.display());
                }
                None => {
                    let rendered = match format {
                        ReportFormat::Json => file.to_json()?,
                        ReportFormat::Csv => file.to_csv(),
                        ReportFormat::Markdown => file.to_markdown(),
                    };
                    print!("{rendered}");
                }
            }
            Ok(())
        }
    }
}

fn init_thread_pool() {
    if let Ok(value) = std::env::var("RETHINK_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
                return;
            }
        }
        eprintln!("warning: ignoring invalid RETHINK_THREADS={value:?}");
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Parse { .. }
        | Error::Schema(_)
        | Error::Size(_)
        | Error::Dimension { .. }
        | Error::Io(_)
        | Error::Json(_) => 3,
        Error::Divergence { .. } => 4,
        Error::State(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_thread_pool();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
