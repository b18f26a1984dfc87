//! The `slicecal` command line: ingest → synthesize → train → predict →
//! evaluate → plot, with seeded, manifest-recorded runs.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use slicecal_core::baselines;
use slicecal_core::curves::{self, CurveError, Outcome, PrecisionCurve, PrecisionVector};
use slicecal_core::eval::{
    self, EceReport, EvalError, MethodOutput, PrecisionReport, UtilityReport,
};
use slicecal_core::recalibrator::{self, TrainError};
use slicecal_core::records::{self, Corpus, PredictionRecord, RecordError};
use slicecal_core::slices::{self, DatasetParams, SliceError, TaskInstance};

use crate::config::{ConfigError, Overrides, RunConfig};
use crate::jsonl::{self, FileError, ModelFile};
use crate::manifest::{self, Manifest};
use crate::report;
use crate::svg;
use crate::synth;

const TRAIN_SALT: u64 = u64::from_le_bytes(*b"train\0\0\0");
const TEST_SALT: u64 = u64::from_le_bytes(*b"test\0\0\0\0");

/// Sweep of few-shot sizes run by `ablate-k`.
pub const ABLATION_KS: [usize; 4] = [5, 10, 20, 30];

/// Toolkit errors, grouped by exit code: usage errors exit 1, data and
/// validation errors exit 2, numerical failures exit 3.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<RecordError> for CliError {
    fn from(e: RecordError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SliceError> for CliError {
    fn from(e: SliceError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<CurveError> for CliError {
    fn from(e: CurveError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFiniteLoss { .. } => CliError::Numerical(e.to_string()),
            TrainError::InvalidBeta { .. }
            | TrainError::NoSteps
            | TrainError::InvalidBatchSize
            | TrainError::InvalidLearningRate { .. }
            | TrainError::InvalidHiddenDim => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "slicecal",
    version,
    about = "Slice-specific confidence calibration: measure per-slice miscalibration, \
             train a few-shot recalibrator, and pick precision-guaranteeing thresholds"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. A `--config` file is applied first,
/// then flags override it.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Path to a `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Few-shot examples per task.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Records per synthesized slice.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Asymmetry coefficient of the training loss.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Number of calibration bins.
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub bin_mode: Option<BinModeArg>,
    /// Target precisions, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub targets: Option<Vec<f64>>,
    /// Abstention costs, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub costs: Option<Vec<f64>>,
    /// Domains held out entirely from training.
    #[arg(long, global = true, value_delimiter = ',')]
    pub holdout_domains: Option<Vec<String>>,
    /// Directory for reports and artifacts.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub train_count: Option<usize>,
    #[arg(long, global = true)]
    pub test_count: Option<usize>,
    /// Training steps.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    #[arg(long, global = true)]
    pub learning_rate: Option<f64>,
    #[arg(long, global = true)]
    pub hidden_dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BinModeArg {
    EqualMass,
    EqualWidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Ten one-hot-featured domains with distinct miscalibration profiles.
    Benchmark,
    /// Two opposed domains whose miscalibration cancels in aggregate.
    Illusion,
    /// A log whose accuracy matches its confidence exactly.
    Calibrated,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a prediction log; print per-domain statistics.
    Ingest {
        #[arg(long)]
        log: PathBuf,
    },
    /// Build train/test task files from a log (test few-shot records are
    /// held out of training).
    Synthesize {
        #[arg(long)]
        log: PathBuf,
    },
    /// Train the few-shot recalibrator on a task file.
    Train {
        #[arg(long)]
        tasks: PathBuf,
        /// Model output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict precision vectors for a task file with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        /// CSV output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Success rate and recall of target-precision thresholds per method.
    EvalPrecision {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Recalibrated ECE per method with pairwise comparisons.
    EvalEce {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Realized abstention utility per method and cost.
    EvalUtility {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Sweep the few-shot set size and report success per k.
    AblateK {
        #[arg(long)]
        log: PathBuf,
    },
    /// Render a reliability diagram and precision curve for a log slice.
    Plot {
        #[arg(long)]
        log: PathBuf,
        /// Restrict to one domain.
        #[arg(long)]
        domain: Option<String>,
        /// SVG output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic prediction log.
    GenLogs {
        #[arg(long, value_enum)]
        kind: SynthKind,
        /// Records per domain (benchmark) or per level (illusion,
        /// calibrated).
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses arguments and runs the selected subcommand.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp
                    | clap::error::ErrorKind::DisplayVersion
                    | clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    let config = build_config(&cli.common)?;
    let out_dir = cli.common.out_dir.clone().unwrap_or_else(|| "out".into());
    match &cli.command {
        Command::Ingest { log } => ingest(log, &config, cli.common.out_dir.as_deref()),
        Command::Synthesize { log } => synthesize(log, &config, &out_dir),
        Command::Train { tasks, out } => train(tasks, out, &config),
        Command::Predict { model, tasks, out } => predict(model, tasks, out),
        Command::EvalPrecision { log, tasks, model } => {
            eval_precision(log, tasks, model, &config, &out_dir)
        }
        Command::EvalEce { log, tasks, model } => eval_ece(log, tasks, model, &config, &out_dir),
        Command::EvalUtility { log, tasks, model } => {
            eval_utility(log, tasks, model, &config, &out_dir)
        }
        Command::AblateK { log } => ablate_k(log, &config, &out_dir),
        Command::Plot { log, domain, out } => plot(log, domain.as_deref(), out, &config),
        Command::GenLogs { kind, size, out } => gen_logs(*kind, *size, out),
    }
}

fn build_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::default();
    if let Some(path) = &common.config {
        config.apply_file(path)?;
    }
    let mut overrides = Overrides::default();
    overrides.set("seed", &common.seed);
    overrides.set("k", &common.k);
    overrides.set("n", &common.n);
    overrides.set("beta", &common.beta);
    overrides.set("bins", &common.bins);
    if let Some(mode) = common.bin_mode {
        overrides.entries.insert(
            "bin_mode",
            match mode {
                BinModeArg::EqualMass => "equal-mass".to_string(),
                BinModeArg::EqualWidth => "equal-width".to_string(),
            },
        );
    }
    overrides.set_list("targets", &common.targets);
    overrides.set_list("costs", &common.costs);
    overrides.set_list("holdout_domains", &common.holdout_domains);
    overrides.set("train_count", &common.train_count);
    overrides.set("test_count", &common.test_count);
    overrides.set("steps", &common.steps);
    overrides.set("batch_size", &common.batch_size);
    overrides.set("learning_rate", &common.learning_rate);
    overrides.set("hidden_dim", &common.hidden_dim);
    overrides.apply(&mut config)?;
    config.validate()?;
    Ok(config)
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

// ─── Subcommands ─────────────────────────────────────────────────────────────

fn ingest(log: &Path, config: &RunConfig, out_dir: Option<&Path>) -> Result<(), CliError> {
    let corpus = jsonl::parse_log(log)?;
    let stats = records::corpus_stats(&corpus)?;
    print!("{}", report::stats_text(&stats));
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        let csv_path = dir.join("corpus_stats.csv");
        write_text(&csv_path, &report::stats_csv(&stats))?;
        let mut m = Manifest::new("ingest", config.to_json());
        m.add_input(log)?;
        m.add_output(&csv_path);
        m.write(&dir.join("ingest.manifest.json"))?;
    }
    Ok(())
}

/// Builds the train/test split of task datasets for a corpus: test tasks
/// first, then training tasks with every test few-shot record held out.
pub fn synthesize_datasets(
    corpus: &Corpus,
    config: &RunConfig,
) -> Result<(Vec<TaskInstance>, Vec<TaskInstance>), CliError> {
    let (train_corpus, test_corpus) = split_corpora(corpus, config)?;
    let test = slices::build_dataset(
        &test_corpus,
        &DatasetParams {
            count: config.test_count,
            n: config.n,
            k: config.k,
        },
        slices::mix_seed(config.seed, TEST_SALT),
        None,
    )?;
    let holdout: BTreeSet<String> = test
        .iter()
        .flat_map(|t| t.fewshot_record_ids.iter().cloned())
        .collect();
    let train = slices::build_dataset(
        &train_corpus,
        &DatasetParams {
            count: config.train_count,
            n: config.n,
            k: config.k,
        },
        slices::mix_seed(config.seed, TRAIN_SALT),
        Some(&holdout),
    )?;
    Ok((train, test))
}

fn split_corpora(corpus: &Corpus, config: &RunConfig) -> Result<(Corpus, Corpus), CliError> {
    if config.holdout_domains.is_empty() {
        Ok((corpus.clone(), corpus.clone()))
    } else {
        Ok(slices::unseen_domain_split(
            corpus,
            &config.holdout_domains,
        )?)
    }
}

fn synthesize(log: &Path, config: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let corpus = jsonl::parse_log(log)?;
    let (train, test) = synthesize_datasets(&corpus, config)?;
    ensure_dir(out_dir)?;
    let train_path = out_dir.join("tasks_train.jsonl");
    let test_path = out_dir.join("tasks_test.jsonl");
    jsonl::write_tasks(&train_path, &train)?;
    jsonl::write_tasks(&test_path, &test)?;

    let holdout_ids: BTreeSet<&str> = test
        .iter()
        .flat_map(|t| t.fewshot_record_ids.iter().map(String::as_str))
        .collect();
    let mut m = Manifest::new("synthesize", config.to_json());
    m.add_input(log)?;
    m.add_output(&train_path);
    m.add_output(&test_path);
    m.inputs.insert(
        "holdout_ids".to_string(),
        format!("sha256:{}", manifest::sha256_ids(holdout_ids)),
    );
    m.write(&out_dir.join("synthesize.manifest.json"))?;
    println!(
        "wrote {} training and {} test tasks to {}",
        train.len(),
        test.len(),
        out_dir.display()
    );
    Ok(())
}

fn train(tasks_path: &Path, out: &Path, config: &RunConfig) -> Result<(), CliError> {
    let tasks = jsonl::read_tasks(tasks_path)?;
    let trained = recalibrator::train(&tasks, &config.train_config())?;
    let model = ModelFile {
        config: config.train_config(),
        params: trained.params,
    };
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    jsonl::write_model(out, &model)?;
    let log_path = out.with_extension("train_log.csv");
    write_text(&log_path, &report::train_log_csv(&trained.loss_log))?;
    let mut m = Manifest::new("train", config.to_json());
    m.add_input(tasks_path)?;
    m.add_output(out);
    m.add_output(&log_path);
    m.write(&out.with_extension("manifest.json"))?;
    let last = trained
        .loss_log
        .last()
        .expect("training ran at least one step");
    println!(
        "trained {} parameters for {} steps; final loss {:.6}",
        model.params.param_count(),
        config.steps,
        last.loss
    );
    Ok(())
}

fn predict(model_path: &Path, tasks_path: &Path, out: &Path) -> Result<(), CliError> {
    let model = jsonl::read_model(model_path)?;
    let tasks = jsonl::read_tasks(tasks_path)?;
    let vectors: Vec<PrecisionVector> = tasks
        .iter()
        .map(|t| model.params.predict(&t.fewshot_features))
        .collect::<Result<_, TrainError>>()?;
    write_text(out, &report::vectors_csv(&vectors))?;
    let mut m = Manifest::new("predict", serde_json::json!({}));
    m.add_input(model_path)?;
    m.add_input(tasks_path)?;
    m.add_output(out);
    m.write(&out.with_extension("manifest.json"))?;
    println!(
        "wrote {} predicted vectors to {}",
        vectors.len(),
        out.display()
    );
    Ok(())
}

/// Everything the eval subcommands share: the corpora, the test tasks, and
/// the per-task method vectors.
struct EvalSetup {
    corpus: Corpus,
    tasks: Vec<TaskInstance>,
    /// Method name → per-task precision vectors, in report order.
    curve_methods: Vec<(&'static str, Vec<PrecisionVector>)>,
    /// Ground-truth vectors (also the oracle method's vectors).
    golds: Vec<PrecisionVector>,
    /// Labeled outcomes of each task's eval records.
    slices: Vec<Vec<Outcome>>,
    /// The training-distribution corpus baselines are fit on.
    train_corpus: Corpus,
}

fn load_eval_setup(
    log: &Path,
    tasks_path: &Path,
    model_path: &Path,
    config: &RunConfig,
) -> Result<EvalSetup, CliError> {
    let corpus = jsonl::parse_log(log)?;
    let tasks = jsonl::read_tasks(tasks_path)?;
    if tasks.is_empty() {
        return Err(CliError::Data(format!(
            "{}: task file is empty",
            tasks_path.display()
        )));
    }
    let model = jsonl::read_model(model_path)?;
    let (train_corpus, _) = split_corpora(&corpus, config)?;

    let sample_avg = baselines::sample_average(&train_corpus)?;
    let domain_avg = baselines::domain_average(&train_corpus)?;

    let mut fsc = Vec::with_capacity(tasks.len());
    let mut empirical = Vec::with_capacity(tasks.len());
    let mut golds = Vec::with_capacity(tasks.len());
    let mut slices_outcomes = Vec::with_capacity(tasks.len());
    for task in &tasks {
        fsc.push(model.params.predict(&task.fewshot_features)?);
        let fewshot = labeled_outcomes(&corpus, &task.fewshot_record_ids)?;
        empirical.push(baselines::empirical(&fewshot)?);
        golds.push(task.target);
        slices_outcomes.push(labeled_outcomes(&corpus, &task.eval_record_ids)?);
    }
    let n_tasks = tasks.len();
    let curve_methods = vec![
        ("sample-avg", vec![sample_avg; n_tasks]),
        ("domain-avg", vec![domain_avg; n_tasks]),
        ("empirical", empirical),
        ("fsc", fsc),
        ("oracle", golds.clone()),
    ];
    Ok(EvalSetup {
        corpus,
        tasks,
        curve_methods,
        golds,
        slices: slices_outcomes,
        train_corpus,
    })
}

fn labeled_outcomes(corpus: &Corpus, ids: &[String]) -> Result<Vec<Outcome>, CliError> {
    Ok(corpus
        .records_by_ids(ids.iter().map(String::as_str))?
        .iter()
        .map(|r| r.outcome())
        .collect())
}

fn slice_refs<'a>(
    corpus: &'a Corpus,
    ids: &[String],
) -> Result<Vec<&'a PredictionRecord>, CliError> {
    Ok(corpus.records_by_ids(ids.iter().map(String::as_str))?)
}

fn eval_precision(
    log: &Path,
    tasks_path: &Path,
    model_path: &Path,
    config: &RunConfig,
    out_dir: &Path,
) -> Result<(), CliError> {
    let setup = load_eval_setup(log, tasks_path, model_path, config)?;
    let mut precision = PrecisionReport::default();
    for (method, vectors) in &setup.curve_methods {
        precision.rows.extend(eval::precision_rows(
            method,
            vectors,
            &setup.golds,
            &setup.slices,
            &config.targets,
        )?);
    }
    ensure_dir(out_dir)?;
    let csv_path = out_dir.join("precision_report.csv");
    let text_path = out_dir.join("precision_report.txt");
    let text = report::precision_report_text(&precision);
    write_text(&csv_path, &report::precision_report_csv(&precision))?;
    write_text(&text_path, &text)?;
    let mut m = Manifest::new("eval-precision", config.to_json());
    m.add_input(log)?;
    m.add_input(tasks_path)?;
    m.add_input(model_path)?;
    m.add_output(&csv_path);
    m.add_output(&text_path);
    for (method, vectors) in &setup.curve_methods {
        let path = out_dir.join(format!("vectors_{method}.csv"));
        write_text(&path, &report::vectors_csv(vectors))?;
        m.add_output(&path);
    }
    m.write(&out_dir.join("eval-precision.manifest.json"))?;
    print!("{text}");
    Ok(())
}

fn probs_samples<'a>(records: &[&'a PredictionRecord]) -> Result<Vec<(&'a [f64], bool)>, CliError> {
    records
        .iter()
        .map(|r| {
            let probs = r.probs.as_deref().ok_or_else(|| {
                CliError::Data(format!(
                    "record {} carries no probability vector, required for temperature scaling",
                    r.id
                ))
            })?;
            Ok((probs, r.correct))
        })
        .collect()
}

fn eval_ece(
    log: &Path,
    tasks_path: &Path,
    model_path: &Path,
    config: &RunConfig,
    out_dir: &Path,
) -> Result<(), CliError> {
    let setup = load_eval_setup(log, tasks_path, model_path, config)?;
    let scheme = config.scheme();

    // TS (all domains): one temperature fit on the training distribution.
    let train_records: Vec<&PredictionRecord> = setup.train_corpus.records().iter().collect();
    let all_samples = probs_samples(&train_records)?;
    let ts_all = curves::fit_temperature_on_grid(&all_samples, scheme, &config.temperature_grid)?;
    let ts_all_t = match ts_all.transform {
        curves::ConfidenceTransform::Temperature { temperature } => temperature,
        _ => unreachable!("fit_temperature returns a temperature transform"),
    };

    let n_tasks = setup.tasks.len();
    let mut eces: Vec<(&'static str, Vec<f64>)> = vec![
        ("base", Vec::with_capacity(n_tasks)),
        ("sample-avg", Vec::with_capacity(n_tasks)),
        ("domain-avg", Vec::with_capacity(n_tasks)),
        ("empirical", Vec::with_capacity(n_tasks)),
        ("ts-fewshot", Vec::with_capacity(n_tasks)),
        ("ts-all", Vec::with_capacity(n_tasks)),
        ("fsc", Vec::with_capacity(n_tasks)),
        ("oracle", Vec::with_capacity(n_tasks)),
    ];
    for (i, task) in setup.tasks.iter().enumerate() {
        let refs = slice_refs(&setup.corpus, &task.eval_record_ids)?;
        let fewshot_refs = slice_refs(&setup.corpus, &task.fewshot_record_ids)?;
        let fewshot_samples = probs_samples(&fewshot_refs)?;
        let ts_few = curves::fit_temperature_on_grid(
            &fewshot_samples,
            config.scheme_for(fewshot_refs.len()),
            &config.temperature_grid,
        )?;
        let ts_few_t = match ts_few.transform {
            curves::ConfidenceTransform::Temperature { temperature } => temperature,
            _ => unreachable!("fit_temperature returns a temperature transform"),
        };
        for (method, values) in &mut eces {
            let output = match *method {
                "base" => MethodOutput::Base,
                "sample-avg" => MethodOutput::Curve(setup.curve_methods[0].1[i]),
                "domain-avg" => MethodOutput::Curve(setup.curve_methods[1].1[i]),
                "empirical" => MethodOutput::Curve(setup.curve_methods[2].1[i]),
                "ts-fewshot" => MethodOutput::Temperature(ts_few_t),
                "ts-all" => MethodOutput::Temperature(ts_all_t),
                "fsc" => MethodOutput::Curve(setup.curve_methods[3].1[i]),
                "oracle" => MethodOutput::Curve(setup.golds[i]),
                _ => unreachable!(),
            };
            values.push(eval::ece_after_recalibration(&output, &refs, scheme)?);
        }
    }

    let fsc_eces = eces
        .iter()
        .find(|(m, _)| *m == "fsc")
        .map(|(_, v)| v.clone())
        .expect("fsc method present");
    let mut ece_report = EceReport {
        reference: "fsc".to_string(),
        rows: Vec::new(),
    };
    for (method, values) in &eces {
        let reference = if *method == "fsc" {
            None
        } else {
            Some(fsc_eces.as_slice())
        };
        ece_report
            .rows
            .push(eval::ece_row(method, values, reference)?);
    }

    ensure_dir(out_dir)?;
    let csv_path = out_dir.join("ece_report.csv");
    let text_path = out_dir.join("ece_report.txt");
    let text = report::ece_report_text(&ece_report);
    write_text(&csv_path, &report::ece_report_csv(&ece_report))?;
    write_text(&text_path, &text)?;
    let mut m = Manifest::new("eval-ece", config.to_json());
    m.add_input(log)?;
    m.add_input(tasks_path)?;
    m.add_input(model_path)?;
    m.add_output(&csv_path);
    m.add_output(&text_path);
    m.write(&out_dir.join("eval-ece.manifest.json"))?;
    print!("{text}");
    Ok(())
}

fn eval_utility(
    log: &Path,
    tasks_path: &Path,
    model_path: &Path,
    config: &RunConfig,
    out_dir: &Path,
) -> Result<(), CliError> {
    let setup = load_eval_setup(log, tasks_path, model_path, config)?;
    let mut utility = UtilityReport::default();
    for &cost in &config.costs {
        let mut per_method: Vec<(&'static str, Vec<f64>)> = Vec::new();
        // Always abstaining realizes exactly -cost on every slice.
        let abstain: Vec<f64> = setup
            .slices
            .iter()
            .map(|slice| eval::realized_utility(2.0, slice, cost))
            .collect::<Result<_, EvalError>>()?;
        per_method.push(("abstain", abstain));
        for (method, vectors) in &setup.curve_methods {
            let mut utilities = Vec::with_capacity(setup.tasks.len());
            for ((vector, slice), task) in vectors.iter().zip(&setup.slices).zip(&setup.tasks) {
                let confidences: Vec<f64> = setup
                    .corpus
                    .records_by_ids(task.eval_record_ids.iter().map(String::as_str))?
                    .iter()
                    .map(|r| r.confidence)
                    .collect();
                let t = eval::utility_optimal_threshold(vector, &confidences, cost)?;
                utilities.push(eval::realized_utility(t, slice, cost)?);
            }
            per_method.push((method, utilities));
        }
        let fsc_utilities = per_method
            .iter()
            .find(|(m, _)| *m == "fsc")
            .map(|(_, v)| v.clone())
            .expect("fsc method present");
        for (method, utilities) in &per_method {
            let reference = if *method == "fsc" {
                None
            } else {
                Some(fsc_utilities.as_slice())
            };
            utility
                .rows
                .push(eval::utility_row(method, cost, utilities, reference)?);
        }
    }
    ensure_dir(out_dir)?;
    let csv_path = out_dir.join("utility_report.csv");
    let text_path = out_dir.join("utility_report.txt");
    let text = report::utility_report_text(&utility);
    write_text(&csv_path, &report::utility_report_csv(&utility))?;
    write_text(&text_path, &text)?;
    let mut m = Manifest::new("eval-utility", config.to_json());
    m.add_input(log)?;
    m.add_input(tasks_path)?;
    m.add_input(model_path)?;
    m.add_output(&csv_path);
    m.add_output(&text_path);
    m.write(&out_dir.join("eval-utility.manifest.json"))?;
    print!("{text}");
    Ok(())
}

fn ablate_k(log: &Path, config: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let corpus = jsonl::parse_log(log)?;
    let mut rows: Vec<(usize, f64, f64, f64)> = Vec::new();
    for k in ABLATION_KS {
        let mut cfg = config.clone();
        cfg.k = k;
        let (train_tasks, test_tasks) = synthesize_datasets(&corpus, &cfg)?;
        let trained = recalibrator::train(&train_tasks, &cfg.train_config())?;
        for &target in &config.targets {
            let mut successes = 0usize;
            let mut recall_sum = 0.0;
            for task in &test_tasks {
                let slice = labeled_outcomes(&corpus, &task.eval_record_ids)?;
                let pred = trained.params.predict(&task.fewshot_features)?;
                if let Some(t) = eval::threshold_for_precision(&pred, target)? {
                    let (ok, recall) = eval::success_and_recall(t, &slice, target)?;
                    if ok {
                        successes += 1;
                    }
                    recall_sum += recall;
                }
            }
            let n = test_tasks.len() as f64;
            rows.push((k, target, successes as f64 / n, recall_sum / n));
        }
    }
    ensure_dir(out_dir)?;
    let csv_path = out_dir.join("ablate_k.csv");
    let text_path = out_dir.join("ablate_k.txt");
    let text = report::ablation_text(&rows);
    write_text(&csv_path, &report::ablation_csv(&rows))?;
    write_text(&text_path, &text)?;
    let mut m = Manifest::new("ablate-k", config.to_json());
    m.add_input(log)?;
    m.add_output(&csv_path);
    m.add_output(&text_path);
    m.write(&out_dir.join("ablate-k.manifest.json"))?;
    print!("{text}");
    Ok(())
}

fn plot(log: &Path, domain: Option<&str>, out: &Path, config: &RunConfig) -> Result<(), CliError> {
    let corpus = jsonl::parse_log(log)?;
    let (outcomes, title) = match domain {
        Some(d) => {
            let outcomes = corpus.domain_outcomes(d).ok_or_else(|| {
                CliError::Data(format!("domain {d} does not exist in the corpus"))
            })?;
            (outcomes, format!("reliability: {d}"))
        }
        None => (corpus.outcomes(), "reliability: all domains".to_string()),
    };
    let curve = curves::CalibrationCurve::from_outcomes(&outcomes, config.scheme())?;
    let diagram = svg::reliability_diagram(&curve, &title);
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    write_text(out, &diagram)?;
    let bins_csv = out.with_extension("csv");
    write_text(&bins_csv, &report::calibration_csv(&curve))?;

    let precision = PrecisionCurve::from_outcomes(&outcomes)?;
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned());
    let base = stem.unwrap_or_else(|| "plot".to_string());
    let parent = out.parent().unwrap_or_else(|| Path::new("."));
    let precision_svg = parent.join(format!("{base}_precision.svg"));
    let precision_csv = parent.join(format!("{base}_precision.csv"));
    write_text(
        &precision_svg,
        &svg::precision_plot(&precision, &title.replace("reliability", "precision")),
    )?;
    write_text(&precision_csv, &report::precision_curve_csv(&precision))?;

    let mut m = Manifest::new("plot", config.to_json());
    m.add_input(log)?;
    for path in [out, &bins_csv, &precision_svg, &precision_csv] {
        m.add_output(path);
    }
    m.write(&parent.join(format!("{base}.manifest.json")))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn gen_logs(kind: SynthKind, size: Option<usize>, out: &Path) -> Result<(), CliError> {
    let (corpus, kind_name, size) = match kind {
        SynthKind::Benchmark => {
            let size = size.unwrap_or(3_000);
            (synth::benchmark_corpus(size), "benchmark", size)
        }
        SynthKind::Illusion => {
            let size = size.unwrap_or(200);
            (synth::illusion_corpus(size), "illusion", size)
        }
        SynthKind::Calibrated => {
            let size = size.unwrap_or(100);
            (synth::calibrated_levels_corpus(size), "calibrated", size)
        }
    };
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            ensure_dir(parent)?;
        }
    }
    jsonl::write_corpus(out, &corpus)?;
    let mut m = Manifest::new(
        "gen-logs",
        serde_json::json!({ "kind": kind_name, "size": size }),
    );
    m.add_output(out);
    m.write(&out.with_extension("manifest.json"))?;
    println!("wrote {} records to {}", corpus.len(), out.display());
    Ok(())
}
