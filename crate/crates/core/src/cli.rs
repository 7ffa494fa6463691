//! Command-line front end. `main.rs` only parses arguments and maps the
//! returned [`CliError`] to an exit status.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    generate_synthetic, simulate_training_distribution, sweep, InstanceLaw, SweepMetric, SyntheticSpec,
    DEFAULT_ALPHAS, DEFAULT_THRESHOLDS,
};
use crate::dataset::{validate, DatasetIndex, Severity};
use crate::error::{Error, FactorError};
use crate::factors::{
    build_table, read_table, write_table, Method, RebalanceConfig, RepeatFactorTable, DEFAULT_ALPHA,
    DEFAULT_THRESHOLD, TABLE_FORMAT,
};
use crate::fixtures::{dataset_from_counts, to_coco_json, UAV_TRAINING, UAV_VALIDATION};
use crate::frequency::compute_frequencies;
use crate::ingest::{parse_coco, parse_yolo, read_class_names, read_index, write_index, INDEX_FORMAT};
use crate::sampling::{plan_epoch_range, write_manifest, SampleMode};
use crate::verify::run_checks;

pub const OUTPUT_DIR_ENV: &str = "RFSKIT_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "rfskit", version, about = "Repeat factor sampling for long-tailed detection datasets")]
pub struct Cli {
    /// Worker threads for parallel stages (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Directory that relative output paths are resolved against
    #[arg(long, global = true, env = OUTPUT_DIR_ENV)]
    pub output_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Class frequency report for a dataset
    Inspect {
        #[command(flatten)]
        input: InputArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compute a repeat-factor table
    Factors {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write epoch manifests, one file per epoch
    Sample {
        /// Dataset or a factors table written by `factors`
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        plan: PlanArgs,
        /// First epoch index to generate
        #[arg(long, default_value_t = 0)]
        start_epoch: u64,
        /// Manifest directory (default: the output directory, else `manifests`)
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Evaluate a grid of alpha and threshold values
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = Method::Eirfs)]
        method: Method,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ALPHAS)]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_THRESHOLDS)]
        thresholds: Vec<f64>,
        #[arg(long, default_value_t = SampleMode::Draw)]
        mode: SampleMode,
        #[arg(long, value_enum, default_value_t = SweepFormat::Tsv)]
        format: SweepFormat,
        /// Metric shown by `--format matrix`
        #[arg(long, value_enum, default_value_t = MetricArg::RareClassShare)]
        metric: MetricArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo comparison of data, theoretical and sampled class distributions
    Simulate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, value_enum, default_value_t = ReportFormat::Tsv)]
        format: ReportFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic long-tailed dataset
    Synth {
        /// Reproduce the per-class counts of a reference split instead
        #[arg(long, value_enum, conflicts_with_all = ["classes", "gamma", "images", "instances", "multi_class"])]
        preset: Option<Preset>,
        #[arg(long, default_value_t = 5)]
        classes: usize,
        #[arg(long, default_value_t = 1.5)]
        gamma: f64,
        #[arg(long, default_value_t = 14_400)]
        images: usize,
        /// `K`, `const:K` or `uniform:MIN:MAX`
        #[arg(long, default_value = "1")]
        instances: InstanceLaw,
        /// Give about half the images a second class
        #[arg(long)]
        multi_class: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = DatasetFormat::Index)]
        format: DatasetFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the built-in invariant checks
    Verify {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// COCO JSON, rfskit index, factors table, or a YOLO label directory
    pub input: PathBuf,
    /// Class-names file for YOLO input (default: `classes.txt` in the directory)
    #[arg(long)]
    pub names: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long, default_value_t = Method::Eirfs)]
    pub method: Method,
    #[arg(long = "t", visible_alias = "threshold", default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Only used by eirfs
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
}

impl ConfigArgs {
    fn config(&self) -> Result<RebalanceConfig, CliError> {
        let cfg = RebalanceConfig::for_method(self.method, self.threshold, self.alpha);
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long, default_value_t = SampleMode::Draw)]
    pub mode: SampleMode,
    /// Draws per epoch in draw mode (default: number of images)
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub epochs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SweepFormat {
    Tsv,
    Matrix,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Tsv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DatasetFormat {
    Index,
    Coco,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    RareClassShare,
    MaxClassFactor,
    EpochInflation,
    L1Shift,
}

impl From<MetricArg> for SweepMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::RareClassShare => SweepMetric::RareClassShare,
            MetricArg::MaxClassFactor => SweepMetric::MaxClassFactor,
            MetricArg::EpochInflation => SweepMetric::EpochInflation,
            MetricArg::L1Shift => SweepMetric::L1Shift,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    UavTrain,
    UavVal,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0} of {1} checks failed")]
    CheckFailed(usize, usize),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::CheckFailed(..) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Internal(_) => "internal",
            CliError::Usage(_) => "usage",
            CliError::Input(_) => "input",
            CliError::CheckFailed(..) => "check",
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Ingest(_) | Error::Format(_) => CliError::Input(e.to_string()),
            Error::Factor(FactorError::Domain { .. }) => CliError::Usage(e.to_string()),
            Error::Factor(_) | Error::Analysis(_) | Error::Sampling(_) => CliError::Input(e.to_string()),
        }
    }
}

fn input_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Internal(format!("{}: {e}", path.display()))
}

/// What an input path turned out to be.
pub enum Loaded {
    Dataset(DatasetIndex),
    Table(RepeatFactorTable),
}

/// Detects the input kind: a directory is YOLO; a file starting with the
/// factors header is a table; a JSON first line tagged as an rfskit index is
/// an index; any other file is parsed as COCO JSON.
pub fn load_input(args: &InputArgs) -> Result<Loaded, CliError> {
    let path = &args.input;
    if path.is_dir() {
        let names_path = args.names.clone().unwrap_or_else(|| path.join("classes.txt"));
        if !names_path.is_file() {
            return Err(CliError::Usage(format!(
                "{} is a YOLO directory; pass --names or add classes.txt",
                path.display()
            )));
        }
        let names = read_class_names(&names_path).map_err(|e| CliError::Input(e.to_string()))?;
        return parse_yolo(path, &names)
            .map(Loaded::Dataset)
            .map_err(|e| CliError::Input(e.to_string()));
    }
    let text = fs::read_to_string(path).map_err(|e| input_err(path, e))?;
    let source = path.display().to_string();
    if text.starts_with(TABLE_FORMAT) {
        return read_table(text.as_bytes())
            .map(Loaded::Table)
            .map_err(|e| input_err(path, e));
    }
    let first = text.lines().next().unwrap_or_default();
    let is_index = serde_json::from_str::<serde_json::Value>(first)
        .ok()
        .and_then(|v| v.get("format").and_then(|f| f.as_str()).map(|f| f == INDEX_FORMAT))
        .unwrap_or(false);
    if is_index {
        return read_index(text.as_bytes(), &source)
            .map(Loaded::Dataset)
            .map_err(|e| CliError::Input(e.to_string()));
    }
    let dataset_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    parse_coco(&text, &dataset_id, &source)
        .map(Loaded::Dataset)
        .map_err(|e| CliError::Input(e.to_string()))
}

fn load_dataset(args: &InputArgs) -> Result<DatasetIndex, CliError> {
    match load_input(args)? {
        Loaded::Dataset(d) => Ok(d),
        Loaded::Table(_) => Err(CliError::Usage(format!(
            "{} is a factors table; this command needs a dataset",
            args.input.display()
        ))),
    }
}

fn table_for(index: &DatasetIndex, config: &RebalanceConfig) -> Result<RepeatFactorTable, CliError> {
    let freqs = compute_frequencies(index).map_err(Error::from)?;
    Ok(build_table(&freqs, index, config).map_err(Error::from)?)
}

struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.dir {
            Some(d) if path.is_relative() => d.join(path),
            _ => path.to_path_buf(),
        }
    }

    /// Writes to `path` (resolved against the output directory) or stdout.
    fn emit(&self, path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
        match path {
            Some(p) => {
                let p = self.resolve(p);
                if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
                }
                fs::write(&p, bytes).map_err(|e| io_err(&p, e))
            }
            None => {
                let mut out = io::stdout().lock();
                match out.write_all(bytes).and_then(|_| out.flush()) {
                    // reader went away, e.g. `| head`
                    Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                    r => r.map_err(|e| CliError::Internal(format!("stdout: {e}"))),
                }
            }
        }
    }
}

fn warn_issues(index: &DatasetIndex) {
    for issue in validate(index) {
        let kind = match issue.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        eprintln!("rfskit: {kind}[validate]: {}: {}", issue.locator, issue.message);
    }
}

fn buffer<F>(f: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), crate::error::FormatError>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(buf)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let out = Output { dir: cli.output_dir };

    match cli.command {
        Command::Inspect { input, output } => {
            let index = load_dataset(&input)?;
            warn_issues(&index);
            let freqs = compute_frequencies(&index).map_err(Error::from)?;
            let bytes = buffer(|b| freqs.write_report(b))?;
            out.emit(output.as_deref(), &bytes)
        }
        Command::Factors { input, config, output } => {
            let config = config.config()?;
            let index = load_dataset(&input)?;
            warn_issues(&index);
            let table = table_for(&index, &config)?;
            let bytes = buffer(|b| write_table(&table, b))?;
            out.emit(output.as_deref(), &bytes)
        }
        Command::Sample {
            input,
            config,
            plan,
            start_epoch,
            out_dir,
        } => {
            let table = match load_input(&input)? {
                Loaded::Table(t) => t,
                Loaded::Dataset(index) => table_for(&index, &config.config()?)?,
            };
            if plan.epochs == 0 {
                return Err(CliError::Usage("--epochs must be at least 1".into()));
            }
            if plan.size == Some(0) {
                return Err(CliError::Usage("--size must be at least 1".into()));
            }
            let end = start_epoch
                .checked_add(plan.epochs)
                .ok_or_else(|| CliError::Usage("epoch range overflows".into()))?;
            let dir = match out_dir {
                Some(d) => out.resolve(&d),
                None => out.dir.clone().unwrap_or_else(|| PathBuf::from("manifests")),
            };
            fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
            let manifests = plan_epoch_range(&table, plan.mode, start_epoch..end, plan.size, plan.seed)
                .map_err(Error::from)?;
            for m in &manifests {
                let path = dir.join(format!("epoch_{:05}.manifest", m.epoch_index));
                let bytes = buffer(|b| write_manifest(m, &table, b))?;
                fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
                eprintln!("rfskit: wrote {} ({} entries)", path.display(), m.len());
            }
            Ok(())
        }
        Command::Sweep {
            input,
            method,
            alphas,
            thresholds,
            mode,
            format,
            metric,
            output,
        } => {
            let index = load_dataset(&input)?;
            let grid = sweep(&index, method, &alphas, &thresholds, mode).map_err(Error::from)?;
            let bytes = match format {
                SweepFormat::Tsv => buffer(|b| grid.write_tsv(b))?,
                SweepFormat::Matrix => buffer(|b| grid.write_matrix(metric.into(), b))?,
                SweepFormat::Json => (grid.to_json() + "\n").into_bytes(),
            };
            out.emit(output.as_deref(), &bytes)
        }
        Command::Simulate {
            input,
            config,
            plan,
            format,
            output,
        } => {
            let config = config.config()?;
            let index = load_dataset(&input)?;
            let freqs = compute_frequencies(&index).map_err(Error::from)?;
            let table = build_table(&freqs, &index, &config).map_err(Error::from)?;
            if plan.epochs == 0 || plan.size == Some(0) {
                return Err(CliError::Usage("--epochs and --size must be at least 1".into()));
            }
            let report =
                simulate_training_distribution(&index, &freqs, &table, plan.mode, plan.epochs, plan.size, plan.seed)
                    .map_err(Error::from)?;
            let bytes = match format {
                ReportFormat::Tsv => buffer(|b| report.write_tsv(b))?,
                ReportFormat::Json => (report.to_json() + "\n").into_bytes(),
            };
            out.emit(output.as_deref(), &bytes)
        }
        Command::Synth {
            preset,
            classes,
            gamma,
            images,
            instances,
            multi_class,
            seed,
            format,
            output,
        } => {
            let index = match preset {
                Some(Preset::UavTrain) => dataset_from_counts(&UAV_TRAINING),
                Some(Preset::UavVal) => dataset_from_counts(&UAV_VALIDATION),
                None => generate_synthetic(&SyntheticSpec {
                    num_classes: classes,
                    gamma,
                    num_images: images,
                    instances,
                    multi_class,
                    seed,
                })
                .map_err(|e| CliError::Usage(e.to_string()))?,
            };
            let bytes = match format {
                DatasetFormat::Index => {
                    let mut buf = Vec::new();
                    write_index(&index, &mut buf).map_err(|e| CliError::Internal(e.to_string()))?;
                    buf
                }
                DatasetFormat::Coco => to_coco_json(&index).into_bytes(),
            };
            out.emit(output.as_deref(), &bytes)
        }
        Command::Verify { json } => {
            let results = run_checks();
            let failed = results.iter().filter(|r| !r.passed).count();
            let text = if json {
                serde_json::to_string_pretty(&results).expect("check results serialise") + "\n"
            } else {
                results
                    .iter()
                    .map(|r| format!("{} {}: {}\n", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail))
                    .collect()
            };
            out.emit(None, text.as_bytes())?;
            if failed > 0 {
                Err(CliError::CheckFailed(failed, results.len()))
            } else {
                Ok(())
            }
        }
    }
}
