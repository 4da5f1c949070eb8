use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use pairclust_core::classifier::{accuracy, build_training_set, train, StepDecay, TrainingSetConfig};
use pairclust_core::metrics::evaluate;
use pairclust_core::pipeline::cluster_observed;
use pairclust_core::synth::{generate_blobs, BlobSpec, ClassSize};
use pairclust_core::{
    original_density, rank_weighted_density, ClusterConfig, Error, FeatureMatrix, FeatureMode, LayerDims,
    MlpClassifier, PowerWeighting, SgdConfig,
};

use crate::error::CliError;
use crate::io;
use crate::model::{read_model, write_model, ModelSidecar, SgdSettings, TrainingStats};
use crate::parallel::{parallel_registry, thread_pool, ParallelClassifier};
use crate::profile::{resolve_k, resolve_power, Profile};
use crate::report::{peak_memory_estimate, ClusterSummary, EvaluationJson, StageTimings};

const MODES: [&str; 3] = ["original", "weighted-neighbor", "combined"];

#[derive(Debug, Parser)]
#[command(name = "pairclust", version, about = "Density-guided pairwise clustering of embeddings")]
pub struct Cli {
    /// Worker threads for the parallel stages; 0 uses every core.
    #[arg(long, global = true, env = "PAIRCLUST_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate labelled synthetic blobs on the unit sphere.
    Gen(GenArgs),
    /// Build the k-NN graph of a feature file.
    Knn(KnnArgs),
    /// Score every sample's neighborhood density.
    Density(DensityArgs),
    /// Train a pair classifier on labelled features.
    Train(TrainArgs),
    /// Cluster features with a trained classifier.
    Cluster(ClusterArgs),
    /// Score an assignment against ground-truth labels.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 50)]
    pub classes: usize,
    /// Samples per class, or the minimum when --per-class-max is set.
    #[arg(long, default_value_t = 20)]
    pub per_class: usize,
    /// Draw each class size uniformly from per-class..=per-class-max.
    #[arg(long)]
    pub per_class_max: Option<usize>,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.05)]
    pub std: f64,
    #[arg(long, default_value_t = 0.0)]
    pub outlier_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_features: PathBuf,
    #[arg(long)]
    pub out_labels: PathBuf,
}

/// Options shared by every command that builds a k-NN graph.
#[derive(Debug, Args)]
pub struct NeighborArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    /// exact, balltree or ivf (approximate).
    #[arg(long, default_value = "exact")]
    pub knn_backend: String,
    /// Use the features as given instead of scaling rows to unit norm.
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Args)]
pub struct KnnArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub neighbors: NeighborArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DensityModeArg {
    RankWeighted,
    Original,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub neighbors: NeighborArgs,
    /// Rank-weighting exponent; 0 reproduces the plain similarity sum.
    #[arg(long)]
    pub power: Option<f64>,
    #[arg(long, value_enum, default_value_t = DensityModeArg::RankWeighted)]
    pub density_mode: DensityModeArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// PCLB file, or one text label per line.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value = "combined", value_parser = MODES)]
    pub mode: String,
    #[command(flatten)]
    pub neighbors: NeighborArgs,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 5e-4)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 2048)]
    pub batch: usize,
    #[arg(long, default_value_t = 60)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// First hidden width; defaults to min(128, 4 x input).
    #[arg(long)]
    pub hidden1: Option<usize>,
    /// Second hidden width; defaults to half the first.
    #[arg(long)]
    pub hidden2: Option<usize>,
    /// Multiply the learning rate by --lr-gamma every this many epochs.
    #[arg(long)]
    pub lr_step: Option<usize>,
    #[arg(long, default_value_t = 0.1, requires = "lr_step")]
    pub lr_gamma: f64,
    /// Rescale weighted-neighbor features to unit norm.
    #[arg(long)]
    pub renorm_context: bool,
    /// Most intra-class pairs drawn per class.
    #[arg(long, default_value_t = 200)]
    pub positive_cap: usize,
    /// Allowed shortfall of negatives relative to positives.
    #[arg(long, default_value_t = 0.1)]
    pub balance_tolerance: f64,
    #[arg(long)]
    pub out_model: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Must match the mode recorded with the model.
    #[arg(long, value_parser = MODES)]
    pub mode: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    #[arg(long)]
    pub power: Option<f64>,
    /// Pairs per classifier call.
    #[arg(long, default_value_t = 2048)]
    pub batch: usize,
    #[arg(long, default_value = "exact")]
    pub knn_backend: String,
    #[arg(long)]
    pub out_assignment: PathBuf,
    #[arg(long)]
    pub out_summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub assignment: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out_report: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Errors are printed to stderr as a single
/// `error_code=... detail=...` line.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = CliError::Usage(e.kind().to_string() + ": " + &e.to_string());
            eprintln!("{}", err.report_line());
            return err.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.report_line());
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let pool = thread_pool(cli.threads)?;
    pool.install(|| match cli.command {
        Command::Gen(a) => gen(a),
        Command::Knn(a) => knn(a),
        Command::Density(a) => density(a),
        Command::Train(a) => train_cmd(a),
        Command::Cluster(a) => cluster_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
    })
}

fn gen(a: GenArgs) -> Result<(), CliError> {
    let samples_per_class = match a.per_class_max {
        Some(max) => ClassSize::Range { min: a.per_class, max },
        None => ClassSize::Fixed(a.per_class),
    };
    let spec = BlobSpec {
        num_classes: a.classes,
        samples_per_class,
        d: a.dim,
        intra_class_std: a.std,
        seed: a.seed,
        outlier_fraction: a.outlier_fraction,
    };
    let (features, labels) = generate_blobs(&spec)?;
    io::write_features(&a.out_features, &features)?;
    io::write_labels(&a.out_labels, &labels)?;
    println!("generated {} samples of dimension {} in {} classes", features.n(), features.d(), a.classes);
    Ok(())
}

fn prepare(features: FeatureMatrix, normalize: bool) -> Result<FeatureMatrix, CliError> {
    Ok(if normalize { features.normalize()? } else { features })
}

fn knn(a: KnnArgs) -> Result<(), CliError> {
    let nb = &a.neighbors;
    let features = prepare(io::read_features(&a.features)?, !nb.no_normalize)?;
    let k = resolve_k(nb.k, nb.profile, None);
    let registry = parallel_registry();
    let graph = registry.get(&nb.knn_backend)?.search(&features, k)?;
    io::write_bytes(&a.out, &io::encode_knn(&graph))?;
    println!("wrote {}-NN graph of {} samples", k, graph.n());
    Ok(())
}

fn density(a: DensityArgs) -> Result<(), CliError> {
    let nb = &a.neighbors;
    let features = prepare(io::read_features(&a.features)?, !nb.no_normalize)?;
    let k = resolve_k(nb.k, nb.profile, None);
    let registry = parallel_registry();
    let graph = registry.get(&nb.knn_backend)?.search(&features, k)?;
    let scores = match a.density_mode {
        DensityModeArg::Original => original_density(&graph),
        DensityModeArg::RankWeighted => {
            let power = resolve_power(a.power, nb.profile);
            rank_weighted_density(&graph, &PowerWeighting::new(k, power)?)?
        }
    };
    io::write_bytes(&a.out, &io::encode_density(&scores))?;
    println!("wrote density of {} samples", scores.len());
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<(), CliError> {
    let mode: FeatureMode = a.mode.parse()?;
    let nb = &a.neighbors;
    let raw = io::read_features(&a.features)?;
    let labels = io::read_labels(&a.labels)?;
    if labels.len() != raw.n() {
        return Err(Error::LengthMismatch { expected: raw.n(), actual: labels.len() }.into());
    }
    let d = raw.d();
    let features = prepare(raw, !nb.no_normalize)?;
    let k = resolve_k(nb.k, nb.profile, None);
    let registry = parallel_registry();
    let backend = registry.get(&nb.knn_backend)?;

    let set_config = TrainingSetConfig {
        mode,
        k,
        balance_tolerance: a.balance_tolerance,
        positive_cap: a.positive_cap,
        renormalize_context: a.renorm_context,
        seed: a.seed,
        ..TrainingSetConfig::default()
    };
    let set = build_training_set(&features, &labels, backend, &set_config)?;
    if !set.balanced {
        warn!(
            "InsufficientNegatives: only {} hard negatives for {} positives even at k = {}; training unbalanced",
            set.negative_count() / 2,
            set.positive_count() / 2,
            set.mining_k
        );
    }
    info!("training set: {} rows ({} positive) at mining k = {}", set.len(), set.positive_count(), set.mining_k);

    let input = mode.input_dim(d);
    let dims = match (a.hidden1, a.hidden2) {
        (None, None) => LayerDims::for_input(input),
        (h1, h2) => {
            let h1 = h1.unwrap_or_else(|| LayerDims::for_input(input).hidden1);
            LayerDims::new(input, h1, h2.unwrap_or((h1 / 2).max(1)))?
        }
    };
    let sgd = SgdConfig {
        learning_rate: a.lr,
        momentum: a.momentum,
        weight_decay: a.weight_decay,
        batch_size: a.batch,
        epochs: a.epochs,
        seed: a.seed,
        step_decay: a.lr_step.map(|every| StepDecay { every, gamma: a.lr_gamma }),
    };
    let mut model = MlpClassifier::new(dims, a.seed);
    let report = train(&mut model, &set, &sgd)?;
    let train_accuracy = accuracy(&model, &set);

    let sidecar = ModelSidecar {
        mode: mode.as_str().to_owned(),
        d,
        k,
        seed: a.seed,
        input_dim: dims.input,
        hidden1: dims.hidden1,
        hidden2: dims.hidden2,
        normalize: !nb.no_normalize,
        renormalize_context: a.renorm_context,
        knn_backend: nb.knn_backend.clone(),
        sgd: SgdSettings {
            learning_rate: a.lr,
            momentum: a.momentum,
            weight_decay: a.weight_decay,
            batch_size: a.batch,
            epochs: a.epochs,
            lr_step: a.lr_step,
            lr_gamma: a.lr_step.map(|_| a.lr_gamma),
        },
        training: TrainingStats {
            rows: set.len(),
            positives: set.positive_count(),
            negatives: set.negative_count(),
            balanced: set.balanced,
            mining_k: set.mining_k,
            train_accuracy,
            loss_trace: report.loss_trace.clone(),
        },
    };
    write_model(&a.out_model, &model, &sidecar)?;
    println!(
        "trained {mode} classifier {}-{}-{}-2 on {} pairs: final loss {:.4}, training accuracy {:.4}",
        dims.input,
        dims.hidden1,
        dims.hidden2,
        set.len(),
        report.loss_trace.last().copied().unwrap_or(f64::NAN),
        train_accuracy
    );
    Ok(())
}

fn cluster_cmd(a: ClusterArgs) -> Result<(), CliError> {
    let (model, sidecar) = read_model(&a.model)?;
    let trained_mode = sidecar.feature_mode()?;
    if let Some(requested) = &a.mode {
        if requested != trained_mode.as_str() {
            return Err(Error::ModelMismatch(format!(
                "model was trained on {trained_mode} features but --mode {requested} was requested"
            ))
            .into());
        }
    }
    let features = io::read_features(&a.features)?;
    if features.d() != sidecar.d {
        return Err(Error::ModelMismatch(format!(
            "model was trained on dimension {} but the features have dimension {}",
            sidecar.d,
            features.d()
        ))
        .into());
    }
    let config = ClusterConfig {
        k: resolve_k(a.k, a.profile, Some(sidecar.k)),
        power: resolve_power(a.power, a.profile),
        mode: trained_mode,
        batch_size: a.batch,
        normalize: sidecar.normalize,
        renormalize_context: sidecar.renormalize_context,
    };
    let registry = parallel_registry();
    let backend = registry.get(&a.knn_backend)?;

    let mut timings = StageTimings::default();
    let mut last = Instant::now();
    let outcome = cluster_observed(&features, &config, &ParallelClassifier(&model), backend, &mut |stage| {
        let now = Instant::now();
        timings.record(stage, now - last);
        last = now;
    })?;

    io::write_text(&a.out_assignment, &io::encode_assignment(&outcome.assignment))?;
    let dims = model.dims();
    let summary = ClusterSummary {
        n: features.n(),
        d: features.d(),
        k: config.k,
        power: config.power,
        mode: trained_mode.as_str().to_owned(),
        knn_backend: a.knn_backend.clone(),
        num_clusters: outcome.assignment.num_clusters(),
        num_singletons: outcome.assignment.num_singletons(),
        pairs_proposed: outcome.pairs_proposed,
        pairs_accepted: outcome.pairs_accepted,
        classifier_batches: outcome.classifier_batches,
        stage_timings_ms: timings,
        peak_memory_estimate_bytes: peak_memory_estimate(
            features.n(),
            features.d(),
            config.k,
            dims.input,
            (dims.hidden1, dims.hidden2),
            config.batch_size,
        ),
    };
    if let Some(path) = &a.out_summary {
        let json =
            serde_json::to_string_pretty(&summary).map_err(|source| CliError::Json { path: path.clone(), source })?;
        io::write_text(path, &format!("{json}\n"))?;
    }
    println!(
        "{} clusters ({} singletons) from {} accepted of {} proposed pairs",
        summary.num_clusters, summary.num_singletons, summary.pairs_accepted, summary.pairs_proposed
    );
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<(), CliError> {
    let assignment = io::read_assignment(&a.assignment)?;
    let labels = io::read_labels(&a.labels)?;
    let report = evaluate(&assignment, &labels)?;
    let json = EvaluationJson::new(&report, assignment.len());
    if let Some(path) = &a.out_report {
        let text =
            serde_json::to_string_pretty(&json).map_err(|source| CliError::Json { path: path.clone(), source })?;
        io::write_text(path, &format!("{text}\n"))?;
    }
    print!("{}", json.table());
    Ok(())
}
