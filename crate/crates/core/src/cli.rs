//! The `ggcn` command-line tool.
//!
//! ```text
//! ggcn synth     --out DIR [--seed S] [--n N --blocks K --p-in P --p-out Q --d0 D --signal S]
//! ggcn split     --dataset-dir DIR --out DIR --task new_nodes|observed_graph [--seed S]
//! ggcn train     --dataset-dir DIR --out DIR --variant ggcn|gcnvae|mlpvae [--split FILE] [training flags]
//! ggcn eval      --dataset-dir DIR --split FILE --checkpoint FILE --out DIR
//! ggcn reproduce --dataset cora|citeseer|pubmed|sbm [--dataset-dir DIR] --out DIR --task T [training flags]
//! ```
//!
//! Every artifact embeds the resolved configuration and seed. Exit status is
//! 0 on success, 2 for invalid flags and 1 for failures at run time.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::data::{load_dataset_with, write_dataset, DatasetBundle, LoadOptions, SbmConfig};
use crate::error::{Error, Result};
use crate::eval::{evaluate, make_newnode_split, make_observed_split, EvalSplit, MetricsDocument, SplitManifest, Task};
use crate::graph::SelfLoops;
use crate::loss::ReconTarget;
use crate::model::ModelVariant;
use crate::train::{train_with, PTilde, TrainConfig};

pub const SPLIT_FILE: &str = "split.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const SYNTH_FILE: &str = "synth.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Parser)]
#[command(name = "ggcn", version, about = "Graph VAE link prediction on growing graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a stochastic-block-model dataset.
    Synth(SynthArgs),
    /// Hold out query pairs and write the training graph.
    Split(SplitArgs),
    /// Train one model and write its checkpoint and loss history.
    Train(TrainArgs),
    /// Score a checkpoint on the test queries of a split.
    Eval(EvalArgs),
    /// Split, train and evaluate all three models on one dataset.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Ggcn,
    Gcnvae,
    Mlpvae,
}

impl From<VariantArg> for ModelVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Ggcn => ModelVariant::GGcn,
            VariantArg::Gcnvae => ModelVariant::GcnVae,
            VariantArg::Mlpvae => ModelVariant::MlpVae,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    #[value(name = "new_nodes", alias = "new-nodes")]
    NewNodes,
    #[value(name = "observed_graph", alias = "observed-graph")]
    ObservedGraph,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::NewNodes => Task::NewNodes,
            TaskArg::ObservedGraph => Task::ObservedGraph,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SelfLoopsArg {
    All,
    #[value(name = "new_only", alias = "new-only")]
    NewOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReconTargetArg {
    All,
    #[value(name = "old_only", alias = "old-only")]
    OldOnly,
}

fn parse_p_tilde(s: &str) -> std::result::Result<PTilde, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_unit(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie strictly between 0 and 1, got {v}"))
    }
}

fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("must lie in [0, 1), got {v}"))
    }
}

fn parse_probability(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("must lie in [0, 1], got {v}"))
    }
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn parse_nonnegative(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be non-negative, got {v}"))
    }
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "sbm")]
    dataset: String,
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    blocks: usize,
    #[arg(long, default_value_t = 0.1, value_parser = parse_probability)]
    p_in: f64,
    #[arg(long, default_value_t = 0.01, value_parser = parse_probability)]
    p_out: f64,
    #[arg(long, default_value_t = 30)]
    d0: usize,
    #[arg(long, default_value_t = 0.9, value_parser = parse_probability)]
    signal: f64,
}

#[derive(Debug, Clone, Args)]
struct SplitFlags {
    #[arg(long, value_enum, default_value = "new_nodes")]
    task: TaskArg,
    /// Share of nodes kept for training in the new-node task.
    #[arg(long, default_value_t = 0.7, value_parser = parse_unit)]
    frac_observed: f64,
    /// Share of edges held out for validation in the observed-graph task.
    #[arg(long, default_value_t = 0.1, value_parser = parse_fraction)]
    val_frac: f64,
    /// Share of edges held out for testing in the observed-graph task.
    #[arg(long, default_value_t = 0.05, value_parser = parse_fraction)]
    test_frac: f64,
}

#[derive(Debug, Args)]
struct DatasetFlags {
    #[arg(long)]
    dataset_dir: PathBuf,
    /// Scale every feature row to sum to one when loading.
    #[arg(long)]
    row_normalize: bool,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[command(flatten)]
    data: DatasetFlags,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    split: SplitFlags,
}

#[derive(Debug, Clone, Args)]
struct ModelFlags {
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    #[arg(long, default_value_t = 400)]
    hidden: usize,
    #[arg(long, default_value_t = 200)]
    latent: usize,
    #[arg(long, default_value_t = 1e-3, value_parser = parse_positive)]
    lr: f64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_nonnegative)]
    beta: f64,
    /// Batches per ordering, seed batch included.
    #[arg(long, default_value_t = 3)]
    num_batches: usize,
    /// `density` or a fixed probability.
    #[arg(long, default_value = "density", value_parser = parse_p_tilde)]
    p_tilde: PTilde,
    #[arg(long, value_enum, default_value = "all")]
    self_loops: SelfLoopsArg,
    #[arg(long, value_enum, default_value = "all")]
    recon_target: ReconTargetArg,
    /// Suppress per-iteration progress lines.
    #[arg(long)]
    quiet: bool,
}

impl ModelFlags {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            hidden_dim: self.hidden,
            latent_dim: self.latent,
            learning_rate: self.lr,
            iterations: self.iterations,
            beta: self.beta,
            num_batches: self.num_batches,
            p_tilde: self.p_tilde,
            self_loops: match self.self_loops {
                SelfLoopsArg::All => SelfLoops::All,
                SelfLoopsArg::NewOnly => SelfLoops::NewOnly,
            },
            recon_target: match self.recon_target {
                ReconTargetArg::All => ReconTarget::All,
                ReconTargetArg::OldOnly => ReconTarget::OldOnly,
            },
            seed,
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DatasetFlags,
    /// Train on the observed graph of this split instead of the whole dataset.
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    variant: VariantArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    model: ModelFlags,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DatasetFlags,
    #[arg(long)]
    split: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// Dataset name; `sbm` generates a synthetic graph when no directory is given.
    #[arg(long)]
    dataset: String,
    #[arg(long)]
    dataset_dir: Option<PathBuf>,
    #[arg(long)]
    row_normalize: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    split: SplitFlags,
    #[command(flatten)]
    model: ModelFlags,
    /// Train the three models one after another instead of concurrently.
    #[arg(long)]
    sequential: bool,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Synth(a) => synth(&a),
        Command::Split(a) => split(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Eval(a) => eval_cmd(&a),
        Command::Reproduce(a) => reproduce(&a),
    };
    match outcome {
        Ok(()) => 0,
        Err(StageError { stage, error }) => {
            eprintln!("ggcn: {stage} failed: {error}");
            1
        }
    }
}

#[derive(Debug)]
struct StageError {
    stage: &'static str,
    error: Error,
}

type StageResult<T> = std::result::Result<T, StageError>;

trait Stage<T> {
    fn stage(self, stage: &'static str) -> StageResult<T>;
}

impl<T> Stage<T> for Result<T> {
    fn stage(self, stage: &'static str) -> StageResult<T> {
        self.map_err(|error| StageError { stage, error })
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

fn load(flags: &DatasetFlags) -> Result<DatasetBundle> {
    load_dataset_with(
        &flags.dataset_dir,
        LoadOptions {
            row_normalize: flags.row_normalize,
        },
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct SynthDocument {
    dataset: String,
    seed: u64,
    sbm: SbmConfig,
    nodes: usize,
    edges: usize,
}

fn synth(a: &SynthArgs) -> StageResult<()> {
    let cfg = SbmConfig {
        n: a.n,
        blocks: a.blocks,
        p_in: a.p_in,
        p_out: a.p_out,
        d0: a.d0,
        signal: a.signal,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut bundle = cfg.generate(&mut rng).stage("synth")?;
    bundle.name = a.dataset.clone();
    create_dir(&a.out).stage("synth")?;
    write_dataset(&bundle, &a.out).stage("synth")?;
    let doc = SynthDocument {
        dataset: a.dataset.clone(),
        seed: a.seed,
        sbm: cfg,
        nodes: bundle.graph.n(),
        edges: bundle.graph.edge_count(),
    };
    write_json(&a.out.join(SYNTH_FILE), &doc).stage("synth")?;
    eprintln!("synth: {} nodes, {} edges -> {}", doc.nodes, doc.edges, a.out.display());
    Ok(())
}

/// Contents of `split.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct SplitDocument {
    pub task: Task,
    pub seed: u64,
    pub frac_observed: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub manifest: SplitManifest,
}

fn make_split(g: &crate::graph::Graph, flags: &SplitFlags, seed: u64) -> Result<EvalSplit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match Task::from(flags.task) {
        Task::NewNodes => make_newnode_split(g, flags.frac_observed, &mut rng),
        Task::ObservedGraph => make_observed_split(g, flags.val_frac, flags.test_frac, &mut rng),
    }
}

fn split_document(split: &EvalSplit, flags: &SplitFlags, seed: u64) -> SplitDocument {
    SplitDocument {
        task: split.task,
        seed,
        frac_observed: flags.frac_observed,
        val_frac: flags.val_frac,
        test_frac: flags.test_frac,
        manifest: split.to_manifest(),
    }
}

/// The training graph as a dataset whose node ids are full-graph ids.
fn training_bundle(bundle: &DatasetBundle, split: &EvalSplit) -> DatasetBundle {
    DatasetBundle {
        name: format!("{}-train", bundle.name),
        graph: split.observed.clone(),
        feature_kind: bundle.feature_kind,
        node_ids: split
            .observed_nodes
            .iter()
            .map(|&v| bundle.node_ids[v].clone())
            .collect(),
        dropped_self_loops: 0,
        dropped_duplicates: 0,
    }
}

fn split(a: &SplitArgs) -> StageResult<()> {
    let bundle = load(&a.data).stage("load dataset")?;
    let split = make_split(&bundle.graph, &a.split, a.seed).stage("split")?;
    let train_dir = a.out.join("train");
    create_dir(&train_dir).stage("split")?;
    write_json(&a.out.join(SPLIT_FILE), &split_document(&split, &a.split, a.seed)).stage("split")?;
    write_dataset(&training_bundle(&bundle, &split), &train_dir).stage("split")?;
    eprintln!(
        "split: {} observed of {} nodes, {} test positives -> {}",
        split.observed_nodes.len(),
        split.n_full(),
        split.test_pos.len(),
        a.out.display()
    );
    Ok(())
}

fn load_split(path: &Path, bundle: &DatasetBundle) -> Result<EvalSplit> {
    let doc: SplitDocument = read_json(path)?;
    EvalSplit::from_manifest(&doc.manifest, bundle.graph.features().clone())
}

fn progress_line(prefix: &str, k: usize, loss: &crate::loss::LossBreakdown) -> String {
    format!(
        "{prefix}iter={k} recon={:.6} kl={:.6} total={:.6}",
        loss.recon, loss.kl, loss.total
    )
}

fn fit(
    g: &crate::graph::Graph,
    variant: ModelVariant,
    cfg: &TrainConfig,
    out: &Path,
    prefix: &str,
    quiet: bool,
) -> Result<Checkpoint> {
    let trained = train_with(g, variant, cfg, |rec, _| {
        if !quiet {
            let line = progress_line(prefix, rec.iteration, &rec.loss);
            let _ = writeln!(std::io::stderr(), "{line}");
        }
        None
    })?;
    create_dir(out)?;
    let ckpt = Checkpoint::new(variant, cfg, &trained.params);
    ckpt.save(&out.join(CHECKPOINT_FILE))?;
    trained.history.save_csv(&out.join(HISTORY_FILE), cfg, variant)?;
    Ok(ckpt)
}

fn train_cmd(a: &TrainArgs) -> StageResult<()> {
    let cfg = a.model.config(a.seed);
    cfg.validate().stage("configure")?;
    let bundle = load(&a.data).stage("load dataset")?;
    let graph = match &a.split {
        Some(path) => load_split(path, &bundle).stage("load split")?.observed,
        None => bundle.graph,
    };
    fit(&graph, a.variant.into(), &cfg, &a.out, "", a.model.quiet).stage("train")?;
    Ok(())
}

fn score(ckpt: &Checkpoint, split: &EvalSplit) -> Result<MetricsDocument> {
    let params = ckpt.params()?;
    let report = evaluate(&params, ckpt.variant, split, ckpt.config.self_loops)?;
    let config = serde_json::to_value(&ckpt.config).map_err(|e| Error::json(Path::new(CHECKPOINT_FILE), e))?;
    Ok(MetricsDocument::new(
        split.task,
        ckpt.variant,
        &report,
        ckpt.config.seed,
        config,
    ))
}

fn eval_cmd(a: &EvalArgs) -> StageResult<()> {
    let bundle = load(&a.data).stage("load dataset")?;
    let split = load_split(&a.split, &bundle).stage("load split")?;
    let ckpt = Checkpoint::load(&a.checkpoint).stage("load checkpoint")?;
    let doc = score(&ckpt, &split).stage("evaluate")?;
    create_dir(&a.out).stage("evaluate")?;
    write_json(&a.out.join(METRICS_FILE), &doc).stage("evaluate")?;
    println!("{} {}: AUC {:.4} AP {:.4}", ckpt.variant, split.task, doc.auc, doc.ap);
    Ok(())
}

/// Published AUC and AP (in percent) for a dataset, task and model.
pub fn reference_scores(dataset: &str, task: Task, variant: ModelVariant) -> Option<(f64, f64)> {
    use ModelVariant::*;
    use Task::*;
    let row = match (dataset.to_ascii_lowercase().as_str(), task) {
        ("cora", NewNodes) => [(83.30, 85.03), (75.12, 76.32), (75.59, 75.64)],
        ("citeseer", NewNodes) => [(89.54, 91.30), (79.36, 82.13), (81.76, 83.67)],
        ("pubmed", NewNodes) => [(87.49, 87.24), (85.52, 85.43), (77.13, 77.24)],
        ("cora", ObservedGraph) => [(94.07, 95.15), (93.15, 94.42), (86.55, 87.21)],
        ("citeseer", ObservedGraph) => [(94.62, 95.93), (93.27, 94.42), (87.13, 89.34)],
        ("pubmed", ObservedGraph) => [(96.96, 97.27), (96.74, 96.94), (79.39, 79.53)],
        _ => return None,
    };
    Some(match variant {
        GGcn => row[0],
        GcnVae => row[1],
        MlpVae => row[2],
    })
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    variant: ModelVariant,
    auc: f64,
    ap: f64,
    reference_auc: Option<f64>,
    reference_ap: Option<f64>,
}

fn reproduce(a: &ReproduceArgs) -> StageResult<()> {
    let cfg = a.model.config(a.seed);
    cfg.validate().stage("configure")?;
    let bundle = match &a.dataset_dir {
        Some(dir) => load_dataset_with(
            dir,
            LoadOptions {
                row_normalize: a.row_normalize,
            },
        )
        .stage("load dataset")?,
        None if a.dataset.eq_ignore_ascii_case("sbm") => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            SbmConfig::default().generate(&mut rng).stage("synth")?
        }
        None => {
            return Err(Error::contract(format!("dataset {:?} needs --dataset-dir", a.dataset))).stage("load dataset")
        }
    };
    let split = make_split(&bundle.graph, &a.split, a.seed).stage("split")?;
    create_dir(&a.out).stage("split")?;
    write_json(&a.out.join(SPLIT_FILE), &split_document(&split, &a.split, a.seed)).stage("split")?;

    let run_one = |variant: ModelVariant| -> StageResult<MetricsDocument> {
        let dir = a.out.join(variant.tag());
        let prefix = format!("{variant} ");
        let ckpt = fit(&split.observed, variant, &cfg, &dir, &prefix, a.model.quiet).stage("train")?;
        let doc = score(&ckpt, &split).stage("evaluate")?;
        write_json(&dir.join(METRICS_FILE), &doc).stage("evaluate")?;
        Ok(doc)
    };
    let docs: Vec<MetricsDocument> = if a.sequential {
        ModelVariant::ALL
            .iter()
            .map(|&v| run_one(v))
            .collect::<StageResult<_>>()?
    } else {
        ModelVariant::ALL
            .par_iter()
            .map(|&v| run_one(v))
            .collect::<StageResult<_>>()?
    };

    let rows: Vec<SummaryRow> = docs
        .iter()
        .map(|d| {
            let r = reference_scores(&a.dataset, split.task, d.variant);
            SummaryRow {
                variant: d.variant,
                auc: d.auc,
                ap: d.ap,
                reference_auc: r.map(|r| r.0),
                reference_ap: r.map(|r| r.1),
            }
        })
        .collect();
    let summary = serde_json::json!({
        "dataset": a.dataset,
        "task": split.task,
        "seed": a.seed,
        "config": cfg,
        "rows": rows,
    });
    write_json(&a.out.join(SUMMARY_FILE), &summary).stage("summarize")?;
    print!("{}", summary_table(&a.dataset, split.task, &rows));
    Ok(())
}

fn summary_table(dataset: &str, task: Task, rows: &[SummaryRow]) -> String {
    let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
    let mut s = format!("{dataset} / {task}\n");
    s += &format!(
        "{:<8} {:>7} {:>7} {:>9} {:>9}\n",
        "model", "AUC", "AP", "ref AUC", "ref AP"
    );
    for r in rows {
        s += &format!(
            "{:<8} {:>7.2} {:>7.2} {:>9} {:>9}\n",
            r.variant.display_name(),
            100.0 * r.auc,
            100.0 * r.ap,
            pct(r.reference_auc),
            pct(r.reference_ap)
        );
    }
    s
}
