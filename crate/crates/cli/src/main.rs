//! `gss3d`: plane detection, 3D proposal search, pseudo labels, loss and
//! metric evaluation from the command line.

mod commands;
mod failure;
mod inputs;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use failure::Failure;

#[derive(Parser)]
#[command(name = "gss3d", version, about = "Weakly supervised 3D recognition toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect planar regions by region growing.
    DetectShapes(DetectShapesArgs),
    /// Group planar regions into 3D box proposals.
    Propose(ProposeArgs),
    /// Derive hard pseudo labels from a teacher score matrix.
    PseudoLabel(PseudoLabelArgs),
    /// Evaluate loss terms described by a JSON spec.
    Losses(LossesArgs),
    /// Point-level mIoU.
    EvalSeg(EvalSegArgs),
    /// Average recall and best overlap of proposals.
    EvalProposals(EvalProposalsArgs),
    /// Average precision of scored detections.
    EvalDetections(EvalDetectionsArgs),
    /// Generate a synthetic cuboid scene with ground truth.
    Synth(SynthArgs),
    /// Shape detection, proposal search and optional evaluation per scene.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
pub struct DetectShapesArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// JSON region-growing parameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Neighbours for normal estimation when the cloud has no normals.
    #[arg(long, default_value_t = 12)]
    pub normals_k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ProposeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub regions: PathBuf,
    /// Per-point segmentation scores (CSV) enabling the SG similarity.
    #[arg(long)]
    pub seg: Option<PathBuf>,
    /// JSON array of strategies; defaults to V+F and SZ+V(+SG).
    #[arg(long)]
    pub strategies: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub max_proposals: usize,
    /// Aspect-ratio prior: a table path or `builtin`.
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Task {
    Seg,
    Det,
}

#[derive(Args)]
pub struct PseudoLabelArgs {
    #[arg(long, value_enum)]
    pub task: Task,
    #[arg(long)]
    pub tags: PathBuf,
    #[arg(long)]
    pub scores: PathBuf,
    /// Proposals (required for `det`).
    #[arg(long)]
    pub proposals: Option<PathBuf>,
    #[arg(long, default_value_t = gss3d::pseudolabel::DEFAULT_P1)]
    pub p1: f64,
    #[arg(long, default_value_t = gss3d::pseudolabel::DEFAULT_P2)]
    pub p2: f64,
    #[arg(long, default_value_t = gss3d::pseudolabel::DEFAULT_TAU)]
    pub tau: f64,
    /// Aspect-ratio prior for `det` (path or `builtin`).
    #[arg(long)]
    pub prior: Option<String>,
    /// Cloud for the floor prior in `seg`.
    #[arg(long)]
    pub cloud: Option<PathBuf>,
    /// Floor class for the floor prior in `seg`.
    #[arg(long)]
    pub floor_class: Option<usize>,
    /// Also write the confident proposals per class (`det`).
    #[arg(long)]
    pub r_star: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct LossesArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvalSegArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub num_classes: usize,
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    pub ignore_label: i64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvalProposalsArgs {
    #[arg(long)]
    pub proposals: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pub iou: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvalDetectionsArgs {
    /// Scored boxes (JSON); alternatively pass --logits with --proposals.
    #[arg(long)]
    pub detections: Option<PathBuf>,
    #[arg(long)]
    pub logits: Option<PathBuf>,
    #[arg(long)]
    pub proposals: Option<PathBuf>,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pub iou: f64,
    #[arg(long)]
    pub eleven_point: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SynthArgs {
    /// JSON scene description; defaults are used for missing fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct PipelineArgs {
    /// Input scenes; each gets its own output directory named after the file.
    #[arg(long = "scene", required = true)]
    pub scenes: Vec<PathBuf>,
    #[arg(long)]
    pub config: PathBuf,
    /// Ground-truth boxes, one file per scene in the same order.
    #[arg(long = "gt")]
    pub gt: Vec<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::DetectShapes(a) => commands::shapes::run(&a),
        Command::Propose(a) => commands::propose::run(&a),
        Command::PseudoLabel(a) => commands::pseudo::run(&a),
        Command::Losses(a) => commands::losses::run(&a),
        Command::EvalSeg(a) => commands::eval::seg(&a),
        Command::EvalProposals(a) => commands::eval::proposals(&a),
        Command::EvalDetections(a) => commands::eval::detections(&a),
        Command::Synth(a) => commands::synth::run(&a),
        Command::Pipeline(a) => commands::pipeline::run(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GSS3D_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
