//! Command-line interface: `generate`, `detect`, `eval`, `knn`, `batch`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::ac::AcConfig;
use crate::energy::{optimal_energy, optimal_w, score};
use crate::error::{Error, Result};
use crate::eval::{knn_graph, nmi, nonlocal_features, FeatureMatrix, ImageTensor};
use crate::experiment::{batch_detect, run_detect, ScoreValue};
use crate::generators::{
    gen_lfr_style, gen_multiscale, gen_pp, LfrConfig, MultiscaleConfig, OmegaSpec, PpConfig,
};
use crate::graph::{load_edge_list, load_partition, save_edge_list, save_partition, Volumes};
use crate::mbo::{MboConfig, ThresholdRule};
use crate::mcf::McfConfig;
use crate::pipeline::PipelineConfig;
use crate::solver::SolverKind;

#[derive(Parser)]
#[command(
    name = "graphtension",
    version,
    about = "Community detection by discrete surface-tension minimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark graph with a planted partition.
    Generate(GenerateArgs),
    /// Detect communities in an edge-list graph.
    Detect(DetectArgs),
    /// Evaluate a partition against a reference on a graph.
    Eval(EvalArgs),
    /// Build a k-nearest-neighbor graph from feature vectors.
    Knn(KnnArgs),
    /// Run several detection trials with derived seeds.
    Batch(BatchArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Pp,
    Lfr,
    Multiscale,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    Mcf,
    Ac,
    Mbo,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Mcf => SolverKind::Mcf,
            SolverArg::Ac => SolverKind::Ac,
            SolverArg::Mbo => SolverKind::Mbo,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ThresholdArg {
    SigmaWeighted,
    Argmax,
}

impl From<ThresholdArg> for ThresholdRule {
    fn from(t: ThresholdArg) -> Self {
        match t {
            ThresholdArg::SigmaWeighted => ThresholdRule::SigmaWeighted,
            ThresholdArg::Argmax => ThresholdRule::Argmax,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Benchmark family.
    #[arg(long, value_enum)]
    family: Family,
    /// Number of nodes (pp, lfr).
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Planted community count (pp).
    #[arg(long, default_value_t = 4)]
    nhat: usize,
    /// Intra/inter propensity ratio (pp).
    #[arg(long, conflicts_with = "lambda_mix")]
    ratio: Option<f64>,
    /// Interpolation in [0,1] between featureless and separated (pp).
    #[arg(long)]
    lambda_mix: Option<f64>,
    /// Mixing fraction (lfr).
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    /// Block count (multiscale).
    #[arg(long, default_value_t = 6)]
    blocks: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output edge-list path.
    #[arg(long)]
    out: PathBuf,
    /// Optional path for the planted reference partition.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Solver for the pipeline's g-step.
    #[arg(long, value_enum, default_value_t = SolverArg::Mcf)]
    solver: SolverArg,
    /// Expected community count.
    #[arg(long)]
    nhat: usize,
    /// Serial (sequential) update order for mean-curvature flow.
    #[arg(long)]
    serial: bool,
    /// Sweep/iteration cap for mean-curvature flow and Allen-Cahn.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Allen-Cahn interface width.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Allen-Cahn time step (default: spectral estimate).
    #[arg(long)]
    dt: Option<f64>,
    /// Allen-Cahn convex-splitting stabilizer (default: 2.01/epsilon).
    #[arg(long)]
    c: Option<f64>,
    /// Retained Laplacian eigenpairs (default: min(2*nhat, n)).
    #[arg(long)]
    meig: Option<usize>,
    /// Allen-Cahn stopping tolerance on the assignment change.
    #[arg(long)]
    stop_tol: Option<f64>,
    /// MBO diffusion time per round (default: spectral estimate).
    #[arg(long)]
    tau: Option<f64>,
    /// MBO inner step size (default: stability estimate).
    #[arg(long)]
    dt_inner: Option<f64>,
    /// MBO thresholding rule.
    #[arg(long, value_enum, default_value_t = ThresholdArg::SigmaWeighted)]
    threshold_rule: ThresholdArg,
    /// MBO outer rounds.
    #[arg(long)]
    outer_steps: Option<usize>,
    /// Community-count penalty coefficient.
    #[arg(long, default_value_t = 0.1)]
    penalty: f64,
    /// Reset factor applied to infinite affinities before solver steps.
    #[arg(long, default_value_t = 1.1)]
    inf_reset: f64,
    /// EM round cap.
    #[arg(long, default_value_t = 30)]
    em_rounds: usize,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverFlags {
    fn to_pipeline_config(&self) -> PipelineConfig {
        let mut mcf = McfConfig::default();
        if let Some(m) = self.max_iter {
            mcf.max_iters = m;
        }
        mcf.serial = self.serial;

        let mut ac = AcConfig::default();
        if let Some(e) = self.epsilon {
            ac.epsilon = e;
        }
        ac.c = self.c;
        ac.dt = self.dt;
        ac.m_eig = self.meig;
        if let Some(t) = self.stop_tol {
            ac.stop_tol = t;
        }
        if let Some(m) = self.max_iter {
            ac.max_iters = m;
        }

        let mut mbo = MboConfig::default();
        mbo.tau = self.tau;
        mbo.dt_inner = self.dt_inner;
        mbo.m_eig = self.meig;
        mbo.threshold_rule = self.threshold_rule.into();
        if let Some(o) = self.outer_steps {
            mbo.outer_steps = o;
        }

        PipelineConfig {
            n_hat_expected: self.nhat,
            solver: self.solver.into(),
            penalty_coeff: self.penalty,
            inf_reset_factor: self.inf_reset,
            em_max_rounds: self.em_rounds,
            warm_start: true,
            seed: self.seed,
            mcf,
            ac,
            mbo,
        }
    }
}

#[derive(Args)]
struct DetectArgs {
    /// Input edge-list path.
    graph: PathBuf,
    #[command(flatten)]
    flags: SolverFlags,
    /// Reference partition for score/NMI in the result JSON.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Output path for the detected partition.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output path for the result JSON (stdout when omitted).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Input edge-list path.
    graph: PathBuf,
    /// Partition to evaluate.
    #[arg(long)]
    partition: PathBuf,
    /// Reference partition.
    #[arg(long)]
    reference: PathBuf,
    /// Output path for the evaluation JSON (stdout when omitted).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct KnnArgs {
    /// Feature file: one whitespace-separated row per item.
    features: PathBuf,
    /// Neighbors per item.
    #[arg(long)]
    k: usize,
    /// Treat the input as an image raster of this height and build weighted
    /// neighborhood features first (requires --width).
    #[arg(long, requires = "width")]
    height: Option<usize>,
    /// Image width (with --height).
    #[arg(long, requires = "height")]
    width: Option<usize>,
    /// Neighborhood radius for image features.
    #[arg(long, default_value_t = 1)]
    radius: usize,
    /// Output edge-list path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BatchArgs {
    /// Input edge-list path.
    graph: PathBuf,
    #[command(flatten)]
    flags: SolverFlags,
    /// Reference partition for score/NMI in the result JSON.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Number of trials (seeds derived from --seed).
    #[arg(long, default_value_t = 3)]
    trials: usize,
    /// Output path for the JSON array of results (stdout when omitted).
    #[arg(long)]
    json: Option<PathBuf>,
}

fn emit_json<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => {
            std::fs::write(p, text + "\n")?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}")?;
        }
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let planted = match args.family {
        Family::Pp => {
            let omega = if let Some(l) = args.lambda_mix {
                OmegaSpec::Interpolate(l)
            } else {
                OmegaSpec::Ratio(args.ratio.unwrap_or(10.0))
            };
            gen_pp(&PpConfig {
                n: args.n,
                n_hat: args.nhat,
                omega,
                seed: args.seed,
                ..Default::default()
            })?
        }
        Family::Lfr => gen_lfr_style(&LfrConfig {
            n: args.n,
            mu: args.mu,
            seed: args.seed,
            ..Default::default()
        })?,
        Family::Multiscale => gen_multiscale(&MultiscaleConfig {
            n_blocks: args.blocks,
            seed: args.seed,
        })?,
    };
    save_edge_list(&planted.graph, &args.out)?;
    if let Some(ref_path) = args.reference {
        save_partition(&planted.reference, &ref_path)?;
    }
    eprintln!(
        "generated {} nodes, {} edges, {} communities",
        planted.graph.n_nodes(),
        planted.graph.edge_count(),
        planted.reference.n_hat()
    );
    Ok(())
}

fn cmd_detect(args: DetectArgs) -> Result<()> {
    let graph = load_edge_list(&args.graph)?;
    let reference = args.reference.as_deref().map(load_partition).transpose()?;
    let cfg = args.flags.to_pipeline_config();
    let (result, partition) = run_detect(&graph, reference.as_ref(), &cfg)?;
    if let Some(out) = args.out {
        save_partition(&partition, &out)?;
    }
    emit_json(&result, args.json.as_deref())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let graph = load_edge_list(&args.graph)?;
    let partition = load_partition(&args.partition)?;
    let reference = load_partition(&args.reference)?;
    if partition.len() != graph.n_nodes() || reference.len() != graph.n_nodes() {
        return Err(Error::Input(format!(
            "graph has {} nodes but partition/reference label {}/{}",
            graph.n_nodes(),
            partition.len(),
            reference.len()
        )));
    }
    let volumes = Volumes::from_graph(&graph);
    let energy = optimal_energy(&graph, &volumes, &partition);
    let e_ref = optimal_energy(&graph, &volumes, &reference);
    let score_v = match score(energy, e_ref) {
        Ok(v) => ScoreValue::Value(v),
        Err(Error::UndefinedScore) => ScoreValue::Tag("undefined".into()),
        Err(e) => return Err(e),
    };
    let report = serde_json::json!({
        "energy": energy,
        "reference_energy": e_ref,
        "score": score_v,
        "nmi": nmi(&partition, &reference)?,
        "n_communities": partition.nonempty_count(),
        "w_matrix": optimal_w(&graph, &volumes, &partition).to_wire(),
    });
    emit_json(&report, args.json.as_deref())
}

fn load_feature_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            trimmed.split_whitespace().map(str::parse::<f64>).collect();
        match row {
            Ok(r) => rows.push(r),
            Err(e) => {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("bad feature value: {e}"),
                })
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Input("feature file holds no rows".into()));
    }
    Ok(rows)
}

fn cmd_knn(args: KnnArgs) -> Result<()> {
    let rows = load_feature_rows(&args.features)?;
    let features = match (args.height, args.width) {
        (Some(h), Some(w)) => {
            let channels = rows[0].len();
            if rows.len() != h * w {
                return Err(Error::Input(format!(
                    "image raster needs {h} x {w} = {} rows, found {}",
                    h * w,
                    rows.len()
                )));
            }
            let data: Vec<f64> = rows.into_iter().flatten().collect();
            let img = ImageTensor::new(h, w, channels, data)?;
            nonlocal_features(&img, args.radius)
        }
        _ => FeatureMatrix::from_rows(&rows)?,
    };
    let graph = knn_graph(&features, args.k)?;
    save_edge_list(&graph, &args.out)?;
    eprintln!(
        "knn graph: {} nodes, {} edges",
        graph.n_nodes(),
        graph.edge_count()
    );
    Ok(())
}

fn cmd_batch(args: BatchArgs) -> Result<()> {
    let graph = load_edge_list(&args.graph)?;
    let reference = args.reference.as_deref().map(load_partition).transpose()?;
    let cfg = args.flags.to_pipeline_config();
    let results = batch_detect(&graph, reference.as_ref(), &cfg, args.trials)?;
    emit_json(&results, args.json.as_deref())
}

/// Parses `argv` and runs the chosen subcommand.
pub fn run<I, T>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::parse_from(argv);
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Knn(a) => cmd_knn(a),
        Command::Batch(a) => cmd_batch(a),
    }
}
