//! Batch front end for the `mvlle` binary: `fit`, `eval` and `synth`.
//!
//! [`dispatch`] takes a full argument vector (program name first) and returns
//! the process exit status: 0 on success, 2 on usage errors, 1 on runtime
//! failures. Diagnostics go to stderr; results go to files only.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use mvlle::data::{self, SynthParams};
use mvlle::eval::{self, Metric};
use mvlle::graphs::DEFAULT_EPS_REG;
use mvlle::graphs::{Bandwidth, ConsensusKind, ConsensusSource, ConsensusVariant, KernelSpec};
use mvlle::solver::{
    self, FitConfig, Preprocess, DEFAULT_K, DEFAULT_LAMBDA_C, DEFAULT_MAX_SWEEPS, DEFAULT_TOL,
};
use mvlle::Matrix;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const EMBEDDING_ORIENTATION: &str = "rows are embedding coordinates, columns are samples";
pub const DEFAULT_REPEATS: usize = 30;
pub const DEFAULT_TOP_K: usize = 2;
pub const DEFAULT_TRAIN_RATIO: f64 = 0.5;

#[derive(Debug, Parser)]
#[command(name = "mvlle", version, about = "Multi-view locally linear embedding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit per-view embeddings and write them with a convergence trace.
    Fit(FitArgs),
    /// Score embeddings by 1-NN classification or leave-one-out retrieval.
    Eval(EvalArgs),
    /// Generate a seeded synthetic multi-view dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum KernelArg {
    Gaussian,
    Linear,
    Polynomial,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum VariantArg {
    NormalizedLe,
    UnnormalizedLe,
    Reconstruction,
    HsicCentered,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SourceArg {
    Embedding,
    Input,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PreprocessArg {
    Zscore,
    None,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TaskArg {
    Classify,
    Retrieve,
}

fn parse_bandwidth(s: &str) -> Result<Bandwidth, String> {
    if s.eq_ignore_ascii_case("median") {
        return Ok(Bandwidth::Median);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(Bandwidth::Fixed(v)),
        _ => Err(format!("expected `median` or a positive number, got `{s}`")),
    }
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Key=value file supplying any flag; command-line flags take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Comma-separated view CSV files (rows are samples).
    #[arg(long, value_delimiter = ',', required = true, num_args = 1)]
    views: Vec<PathBuf>,
    /// Optional label file, recorded in the manifest.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Whether view files start with a header row.
    #[arg(long, default_value_t = false, action = clap::ArgAction::Set)]
    header: bool,
    /// Neighbours per sample.
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Comma-separated embedding dimensions; one value applies to every view.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1)]
    dims: Vec<usize>,
    /// Consensus weight.
    #[arg(long, default_value_t = DEFAULT_LAMBDA_C)]
    lambda_c: f64,
    /// Kernel used to build consensus graphs.
    #[arg(long, value_enum, default_value_t = KernelArg::Gaussian)]
    kernel: KernelArg,
    /// Gaussian bandwidth: `median` or a positive number.
    #[arg(long, value_parser = parse_bandwidth, default_value = "median")]
    bandwidth: Bandwidth,
    /// Polynomial kernel degree.
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// Polynomial kernel offset.
    #[arg(long, default_value_t = 1.0)]
    offset: f64,
    /// Consensus matrix construction.
    #[arg(long, value_enum, default_value_t = VariantArg::NormalizedLe)]
    variant: VariantArg,
    /// Build consensus graphs from the current embeddings or the raw views.
    #[arg(long, value_enum, default_value_t = SourceArg::Embedding)]
    source: SourceArg,
    /// Relative objective change that stops the sweeps.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Maximum number of sweeps.
    #[arg(long, default_value_t = DEFAULT_MAX_SWEEPS)]
    max_sweeps: usize,
    /// Exclude the constant eigenvector from embeddings.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    skip_trivial: bool,
    /// LLE local Gram regularization.
    #[arg(long, default_value_t = DEFAULT_EPS_REG)]
    eps_reg: f64,
    /// Per-view feature preprocessing.
    #[arg(long, value_enum, default_value_t = PreprocessArg::Zscore)]
    preprocess: PreprocessArg,
    /// Seed recorded in the manifest.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, required = true)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Key=value file supplying any flag; command-line flags take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Comma-separated embedding CSV files (rows are coordinates, columns samples).
    #[arg(long, value_delimiter = ',', required = true, num_args = 1)]
    embeddings: Vec<PathBuf>,
    /// Label file, one label per sample.
    #[arg(long, required = true)]
    labels: PathBuf,
    /// Evaluation protocol.
    #[arg(long, value_enum, default_value_t = TaskArg::Classify)]
    task: TaskArg,
    /// Training fraction per class for classification.
    #[arg(long, default_value_t = DEFAULT_TRAIN_RATIO)]
    train_ratio: f64,
    /// Number of random splits for classification.
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    repeats: usize,
    /// Seed of the first split; repeat r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Distance [default: l2 for classify, l1 for retrieve].
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    /// Retrieval cutoff.
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
    /// Output directory.
    #[arg(long, required = true)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Key=value file supplying any flag; command-line flags take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Number of samples.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Number of views.
    #[arg(long, default_value_t = 2)]
    views: usize,
    /// Number of classes.
    #[arg(long, default_value_t = 3)]
    classes: usize,
    /// Latent dimension.
    #[arg(long, default_value_t = 2)]
    latent_dim: usize,
    /// Comma-separated feature count per view.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1)]
    view_dims: Vec<usize>,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Comma-separated per-view noise multipliers [default: 1 for every view].
    #[arg(long, value_delimiter = ',', num_args = 1)]
    noise_scale: Option<Vec<f64>>,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, required = true)]
    out: PathBuf,
}

/// Runs one command and returns its exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match parse(&argv) {
        Ok(cli) => cli,
        Err(Usage::Clap(e)) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
        Err(Usage::Config(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("\nFor more information, try '--help'.");
            return 2;
        }
    };
    let outcome = match cli.command {
        Command::Fit(args) => run_fit(args, &argv),
        Command::Eval(args) => run_eval(args),
        Command::Synth(args) => run_synth(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

enum Usage {
    Clap(clap::Error),
    Config(String),
}

impl From<clap::Error> for Usage {
    fn from(e: clap::Error) -> Self {
        Usage::Clap(e)
    }
}

/// Parses `argv`, splicing in `--config` entries for flags not given on the
/// command line.
fn parse(argv: &[OsString]) -> Result<Cli, Usage> {
    let command = Cli::command();
    let position = argv.iter().skip(1).position(|a| {
        a.to_str()
            .is_some_and(|a| command.find_subcommand(a).is_some())
    });
    let Some(position) = position.map(|p| p + 1) else {
        return Ok(Cli::from_arg_matches(&command.try_get_matches_from(argv)?)?);
    };
    let rest: Vec<&str> = argv[position + 1..]
        .iter()
        .filter_map(|a| a.to_str())
        .collect();
    let config = rest.iter().enumerate().find_map(|(i, a)| {
        if *a == "--config" {
            rest.get(i + 1).copied()
        } else {
            a.strip_prefix("--config=")
        }
    });
    let Some(config) = config else {
        return Ok(Cli::from_arg_matches(&command.try_get_matches_from(argv)?)?);
    };
    let config = Path::new(config);
    let entries = read_config(config).map_err(Usage::Config)?;
    let name = argv[position].to_str().expect("matched as UTF-8");
    let known: BTreeSet<String> = command
        .find_subcommand(name)
        .expect("matched subcommand exists")
        .get_arguments()
        .map(|a| a.get_id().to_string())
        .collect();
    let given: BTreeSet<String> = rest
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).replace('-', "_"))
        .collect();
    let mut extra = Vec::new();
    for (key, value) in entries {
        if !known.contains(&key) || key == "config" {
            return Err(Usage::Config(format!(
                "unknown key `{key}` in {}",
                config.display()
            )));
        }
        if !given.contains(&key) {
            extra.push(OsString::from(format!("--{}", key.replace('_', "-"))));
            extra.push(OsString::from(value));
        }
    }
    let mut merged = argv[..=position].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&argv[position + 1..]);
    Ok(Cli::from_arg_matches(
        &command.try_get_matches_from(merged)?,
    )?)
}

/// Reads `key = value` lines; blank lines and `#` comments are skipped and
/// dashes in keys are read as underscores.
fn read_config(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key = value", path.display(), i + 1))?;
        out.insert(key.trim().replace('-', "_"), value.trim().to_string());
    }
    Ok(out)
}

impl FitArgs {
    fn to_config(&self) -> FitConfig {
        let mut cfg = FitConfig::new(self.dims.clone());
        cfg.k = self.k;
        cfg.lambda_c = self.lambda_c;
        cfg.kernel = match self.kernel {
            KernelArg::Gaussian => KernelSpec::Gaussian {
                bandwidth: self.bandwidth,
            },
            KernelArg::Linear => KernelSpec::Linear,
            KernelArg::Polynomial => KernelSpec::Polynomial {
                degree: self.degree,
                offset: self.offset,
            },
        };
        cfg.variant = ConsensusVariant {
            kind: match self.variant {
                VariantArg::NormalizedLe => ConsensusKind::NormalizedLe,
                VariantArg::UnnormalizedLe => ConsensusKind::UnnormalizedLe,
                VariantArg::Reconstruction => ConsensusKind::Reconstruction,
                VariantArg::HsicCentered => ConsensusKind::HsicCentered,
            },
            source: match self.source {
                SourceArg::Embedding => ConsensusSource::Embedding,
                SourceArg::Input => ConsensusSource::Input,
            },
        };
        cfg.tol = self.tol;
        cfg.max_sweeps = self.max_sweeps;
        cfg.skip_trivial = self.skip_trivial;
        cfg.eps_reg = self.eps_reg;
        cfg.preprocess = match self.preprocess {
            PreprocessArg::Zscore => Preprocess::Zscore,
            PreprocessArg::None => Preprocess::None,
        };
        cfg.seed = self.seed;
        cfg
    }
}

#[derive(Debug, Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    argv: Vec<String>,
    config: &'a FitConfig,
    views: Vec<String>,
    labels: Option<String>,
    header: bool,
    inputs: Vec<InputDigest>,
    seed: u64,
    started_unix_seconds: u64,
}

#[derive(Debug, Serialize)]
struct FitSummary {
    converged: bool,
    sweeps: usize,
    objective_final: f64,
}

fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Writes `path` through a temporary file in the same directory and an
/// atomic rename, so readers never observe a partial file.
fn write_atomic(
    path: &Path,
    fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> anyhow::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    {
        let mut writer = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut writer).with_context(|| format!("cannot write {}", path.display()))?;
        writer.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot move result into {}", path.display()))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")
    })
}

fn write_matrix(path: &Path, m: &Matrix, comment: Option<&str>) -> anyhow::Result<()> {
    write_atomic(path, |w| data::write_matrix_csv(w, m, comment))
}

fn lossy(argv: &[OsString]) -> Vec<String> {
    argv.iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect()
}

fn run_fit(args: FitArgs, argv: &[OsString]) -> anyhow::Result<()> {
    let config = args.to_config();
    let dataset = data::load_views(&args.views, args.labels.as_deref(), args.header)?;
    config.validate(dataset.n_samples(), dataset.n_views())?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;

    let mut inputs = Vec::new();
    for path in args.views.iter().chain(args.labels.iter()) {
        inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "fit",
        argv: lossy(argv),
        config: &config,
        views: args.views.iter().map(|p| p.display().to_string()).collect(),
        labels: args.labels.as_ref().map(|p| p.display().to_string()),
        header: args.header,
        inputs,
        seed: config.seed,
        started_unix_seconds: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;

    let result = solver::fit(&dataset, &config)?;
    for (v, u) in result.embeddings.iter().enumerate() {
        write_matrix(
            &args.out.join(format!("embedding_{v}.csv")),
            u,
            Some(EMBEDDING_ORIENTATION),
        )?;
    }
    write_atomic(&args.out.join("convergence.csv"), |w| {
        writeln!(w, "sweep,objective")?;
        for (s, obj) in result.objective_trace.iter().enumerate() {
            writeln!(w, "{s},{obj:.16e}")?;
        }
        Ok(())
    })?;
    write_json(
        &args.out.join("summary.json"),
        &FitSummary {
            converged: result.converged,
            sweeps: result.sweeps,
            objective_final: *result
                .objective_trace
                .last()
                .expect("trace holds the initial objective"),
        },
    )?;
    Ok(())
}

fn run_eval(args: EvalArgs) -> anyhow::Result<()> {
    let mut parts = Vec::with_capacity(args.embeddings.len());
    for path in &args.embeddings {
        parts.push(data::read_matrix_csv(path, false)?);
    }
    let embedding = eval::concat_embeddings(&parts)?;
    let labels = data::read_labels(&args.labels)?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let report = args.out.join("report.json");
    match args.task {
        TaskArg::Classify => {
            let metric = metric(args.metric.unwrap_or(MetricArg::L2));
            let rep = eval::classify_embedding(
                &embedding,
                &labels,
                args.train_ratio,
                args.repeats,
                args.seed,
                metric,
            )?;
            write_json(&report, &rep)
        }
        TaskArg::Retrieve => {
            let metric = metric(args.metric.unwrap_or(MetricArg::L1));
            let rep = eval::retrieve_protocol(&embedding, &labels, args.top_k, metric)?;
            write_json(&report, &rep)
        }
    }
}

fn metric(m: MetricArg) -> Metric {
    match m {
        MetricArg::L1 => Metric::L1,
        MetricArg::L2 => Metric::L2,
    }
}

fn run_synth(args: SynthArgs) -> anyhow::Result<()> {
    if args.view_dims.len() != args.views {
        bail!(
            "--view-dims lists {} widths for {} views",
            args.view_dims.len(),
            args.views
        );
    }
    let mut params = SynthParams::new(
        args.n,
        args.views,
        args.classes,
        args.latent_dim,
        args.view_dims.clone(),
        args.noise,
        args.seed,
    );
    if let Some(scale) = args.noise_scale {
        params = params.with_noise_scale(scale);
    }
    let dataset = data::synth_multiview(&params)?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    for (v, x) in dataset.views().iter().enumerate() {
        write_matrix(&args.out.join(format!("view_{v}.csv")), x, None)?;
    }
    let labels = dataset.labels().expect("synthetic data is labelled");
    write_atomic(&args.out.join("labels.csv"), |w| {
        data::write_labels(w, labels)
    })?;
    Ok(())
}
