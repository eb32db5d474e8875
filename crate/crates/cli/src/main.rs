use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;

use semgrid::io::{self, RasterContainer};
use semgrid::synth::{synth_sequence, SynthOptions};
use semgrid::*;

mod report;

#[derive(Parser)]
#[command(name = "semgrid", version, about = "Top-view semantic grid maps from LiDAR scans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a scan into the five geometric grid layers.
    Encode(EncodeArgs),
    /// Spherical range image of a scan.
    Project(ProjectArgs),
    /// Per-cell class statistics from per-point predictions.
    SemanticEncode(SemanticArgs),
    /// Sparse or dense ground-truth label grid.
    Groundtruth(GroundTruthArgs),
    /// Per-class IoU and mIoU of predicted label grids.
    Evaluate(EvaluateArgs),
    /// Stack geometric and semantic grids into a fusion input.
    FuseAssemble(AssembleArgs),
    /// Train the per-cell fusion head.
    FuseTrain(TrainArgs),
    /// Label grid from a trained head.
    FusePredict(PredictArgs),
    /// Write a deterministic synthetic labeled sequence.
    SynthScene(SynthArgs),
    /// Export a label grid or a layer as a PPM/PGM image.
    Render(RenderArgs),
}

#[derive(Args)]
struct GridArgs {
    /// Grid as "x_min,y_min,cell,n_x,n_y"; defaults to 1001 × 501 cells of 0.1 m.
    #[arg(long, allow_hyphen_values = true)]
    spec: Option<String>,
}

impl GridArgs {
    fn spec(&self) -> Result<GridSpec> {
        Ok(match &self.spec {
            Some(s) => GridSpec::parse(s)?,
            None => GridSpec::default(),
        })
    }
}

#[derive(Args)]
struct BeamArgs {
    #[arg(long, default_value_t = 2048)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    /// Degrees.
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    fov_up: f64,
    /// Degrees.
    #[arg(long, default_value_t = -25.0, allow_hyphen_values = true)]
    fov_down: f64,
}

impl BeamArgs {
    fn spec(&self) -> Result<RangeImageSpec> {
        Ok(RangeImageSpec::new(self.width, self.height, self.fov_up, self.fov_down)?)
    }
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    scan: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    /// Sensor origin "x,y,z" in the scan frame.
    #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
    origin: String,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long)]
    scan: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    beams: BeamArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Encoding {
    Hist,
    Argmax,
    Sum,
    Mean,
}

#[derive(Args)]
struct SemanticArgs {
    #[arg(long)]
    scan: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    encoding: Encoding,
    #[command(flatten)]
    grid: GridArgs,
    /// Per-point probability table.
    #[arg(long, conflicts_with_all = ["pixel_probs", "synth_eps"])]
    probs: Option<PathBuf>,
    /// Per-pixel probability raster, lifted to the points through the range image.
    #[arg(long, conflicts_with = "synth_eps")]
    pixel_probs: Option<PathBuf>,
    #[command(flatten)]
    beams: BeamArgs,
    /// Synthesize probabilities from --labels with this flip rate.
    #[arg(long)]
    synth_eps: Option<f64>,
    #[arg(long, default_value_t = 4.0)]
    concentration: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Label file; hard predictions when no probabilities are given.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    classmap: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GtMode {
    Sparse,
    Dense,
}

#[derive(Args)]
struct GroundTruthArgs {
    #[arg(long, value_enum)]
    mode: GtMode,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    /// Sparse mode: the scan.
    #[arg(long, required_if_eq("mode", "sparse"))]
    scan: Option<PathBuf>,
    /// Sparse mode: its labels.
    #[arg(long, required_if_eq("mode", "sparse"))]
    labels: Option<PathBuf>,
    /// Dense mode: directory of NNNNNN.bin scans with NNNNNN.label beside them.
    #[arg(long, required_if_eq("mode", "dense"))]
    sequence: Option<PathBuf>,
    #[arg(long, required_if_eq("mode", "dense"))]
    poses: Option<PathBuf>,
    /// Calibration file with a "Tr:" line.
    #[arg(long)]
    calib: Option<PathBuf>,
    /// Index of the scan the grid is built for.
    #[arg(long, default_value_t = 0)]
    reference: usize,
    #[arg(long, default_value_t = 50)]
    window: usize,
    /// Comma-separated class names taken from the reference scan only, or "none".
    #[arg(long, default_value = "pedestrian,two-wheel,vehicle")]
    dynamic_classes: String,
    /// Keep points with lo <= z <= hi in the reference frame, "lo,hi".
    #[arg(long, allow_hyphen_values = true)]
    z_range: Option<String>,
    #[arg(long)]
    classmap: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Predicted label grids; paired in order with --gt.
    #[arg(long, required = true, num_args = 1..)]
    pred: Vec<PathBuf>,
    #[arg(long, required = true, num_args = 1..)]
    gt: Vec<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct AssembleArgs {
    /// Geometric grid map from `encode`.
    #[arg(long)]
    grid: PathBuf,
    /// Semantic grid from `semantic-encode`.
    #[arg(long)]
    semantic: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Fusion inputs; paired in order with --gt.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long, required = true, num_args = 1..)]
    gt: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    /// Train on raw channel values instead of standardized ones.
    #[arg(long)]
    no_normalize: bool,
    /// Write the per-epoch loss, one value per line.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    head: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    scans: usize,
    /// Forward motion per scan, meters.
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    #[arg(long, default_value_t = 0.01)]
    range_noise: f64,
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
    #[command(flatten)]
    beams: BeamArgs,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    input: PathBuf,
    /// Layer to render; defaults to "label" when present, else the first layer.
    #[arg(long)]
    layer: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_floats<const N: usize>(s: &str, what: &str) -> Result<[f64; N]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("bad {what} {s:?}"))?;
    v.try_into().map_err(|_| anyhow::anyhow!("{what} needs {N} comma-separated numbers, got {s:?}"))
}

fn class_map(path: Option<&Path>) -> Result<ClassMap> {
    Ok(match path {
        Some(p) => io::read_class_map(p)?,
        None => ClassMap::default(),
    })
}

fn labeled_scan(scan: &Path, label_path: &Path, map: &ClassMap) -> Result<PointCloud> {
    let cloud = io::read_point_cloud(scan)?;
    let labels = io::read_labels(label_path, map)?;
    ensure!(
        labels.len() == cloud.len(),
        "{} has {} labels for {} points in {}",
        label_path.display(),
        labels.len(),
        cloud.len(),
        scan.display()
    );
    Ok(cloud.with_labels(labels)?)
}

fn read_container<T>(path: &Path) -> Result<T>
where
    T: for<'a> TryFrom<&'a RasterContainer, Error = Error>,
{
    let c = io::read_raster(path)?;
    T::try_from(&c).with_context(|| format!("reading {}", path.display()))
}

fn write_container<T>(path: &Path, value: &T) -> Result<()>
where
    for<'a> RasterContainer: From<&'a T>,
{
    io::write_raster(path, &RasterContainer::from(value))?;
    Ok(())
}

fn encode(a: EncodeArgs) -> Result<()> {
    let cloud = io::read_point_cloud(&a.scan)?;
    let [x, y, z] = parse_floats::<3>(&a.origin, "origin")?;
    let stack = encode_multilayer(&cloud, &a.grid.spec()?, &Vector3::new(x, y, z));
    write_container(&a.out, &stack)
}

fn project(a: ProjectArgs) -> Result<()> {
    let cloud = io::read_point_cloud(&a.scan)?;
    let image = project_to_range_image(&cloud, &a.beams.spec()?);
    if image.skipped() > 0 {
        eprintln!("{} points outside the vertical field of view", image.skipped());
    }
    write_container(&a.out, &image)
}

fn semantic_encode(a: SemanticArgs) -> Result<()> {
    let spec = a.grid.spec()?;
    let mut cloud = io::read_point_cloud(&a.scan)?;
    let map = class_map(a.classmap.as_deref())?;
    if let Some(labels) = &a.labels {
        cloud = labeled_scan(&a.scan, labels, &map)?;
    }
    if let Some(path) = &a.probs {
        let rows = io::read_probabilities(path)?;
        cloud = cloud.with_probabilities(rows)?;
    } else if let Some(path) = &a.pixel_probs {
        let pixels: PixelProbabilities = read_container(path)?;
        let image = project_to_range_image(&cloud, &a.beams.spec()?);
        cloud = lift_pixel_semantics(&image, &pixels, &cloud)?;
    } else if let Some(eps) = a.synth_eps {
        let Some(labels) = cloud.labels() else {
            bail!("--synth-eps needs --labels");
        };
        // unlabeled points draw from a flat distribution
        let truth: Vec<ClassId> = labels.iter().map(|l| l.unwrap_or(ClassId::ALL[0])).collect();
        let mut rows = synth_probabilities(&truth, eps, a.concentration, a.seed)?;
        for (row, l) in rows.iter_mut().zip(labels) {
            if l.is_none() {
                *row = [1.0 / NUM_CLASSES as f64; NUM_CLASSES];
            }
        }
        cloud = cloud.with_probabilities(rows)?;
    }

    match a.encoding {
        Encoding::Hist => write_container(&a.out, &encode_histogram(&cloud, &spec)?),
        Encoding::Argmax => write_container(&a.out, &encode_argmax(&encode_histogram(&cloud, &spec)?)),
        Encoding::Sum | Encoding::Mean => {
            if cloud.probabilities().is_none() {
                bail!("summed and mean encodings need --probs, --pixel-probs or --synth-eps");
            }
            let summed = encode_summed(&cloud, &spec)?;
            match a.encoding {
                Encoding::Sum => write_container(&a.out, &summed),
                _ => write_container(&a.out, &encode_mean(&summed)?),
            }
        }
    }
}

fn parse_dynamic(s: &str) -> Result<Vec<ClassId>> {
    if s.trim() == "none" {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|name| ClassId::from_name(name.trim()).with_context(|| format!("unknown class {name:?}")))
        .collect()
}

fn sequence_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut scans: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "bin"))
        .collect();
    scans.sort();
    ensure!(!scans.is_empty(), "no .bin scans in {}", dir.display());
    Ok(scans)
}

fn groundtruth(a: GroundTruthArgs) -> Result<()> {
    let spec = a.grid.spec()?;
    let map = class_map(a.classmap.as_deref())?;
    let grid = match a.mode {
        GtMode::Sparse => {
            let (Some(scan), Some(labels)) = (&a.scan, &a.labels) else {
                bail!("sparse mode needs --scan and --labels");
            };
            sparse_ground_truth(&labeled_scan(scan, labels, &map)?, &spec)?
        }
        GtMode::Dense => {
            let (Some(dir), Some(poses)) = (&a.sequence, &a.poses) else {
                bail!("dense mode needs --sequence and --poses");
            };
            let calib = a.calib.as_deref().map(io::read_calibration).transpose()?;
            let poses = io::read_poses(poses, calib.as_ref())?;
            let clouds = sequence_files(dir)?
                .iter()
                .map(|scan| labeled_scan(scan, &scan.with_extension("label"), &map))
                .collect::<Result<Vec<_>>>()?;
            let seq = ScanSequence::new(clouds, poses, a.reference)?;
            let options = DenseOptions {
                window: a.window,
                dynamic_classes: parse_dynamic(&a.dynamic_classes)?,
                z_range: a.z_range.as_deref().map(|s| parse_floats::<2>(s, "z range")).transpose()?.map(|[lo, hi]| (lo, hi)),
            };
            dense_ground_truth(&seq, &spec, &options)?
        }
    };
    write_container(&a.out, &grid)
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    ensure!(a.pred.len() == a.gt.len(), "{} predictions for {} ground truths", a.pred.len(), a.gt.len());
    let mut cm = ConfusionMatrix::new();
    for (p, g) in a.pred.iter().zip(&a.gt) {
        let pred: LabelGrid = read_container(p)?;
        let gt: LabelGrid = read_container(g)?;
        cm = accumulate(cm, &pred, &gt).with_context(|| format!("{} vs {}", p.display(), g.display()))?;
    }
    let report = report::Report::new(&cm)?;
    print!("{}", report.table());
    if let Some(path) = &a.json {
        std::fs::write(path, report.json()?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn fuse_assemble(a: AssembleArgs) -> Result<()> {
    let stack: GridMapStack = read_container(&a.grid)?;
    let container = io::read_raster(&a.semantic)?;
    let input = if container.layer("label").is_ok() {
        let labels = LabelGrid::try_from(&container)?;
        assemble_early_fusion_input(&stack, SemanticFeatures::Argmax(&labels))?
    } else {
        let grid = SemanticGrid::try_from(&container)?;
        assemble_early_fusion_input(&stack, SemanticFeatures::Grid(&grid))?
    };
    write_container(&a.out, &input)
}

fn fuse_train(a: TrainArgs) -> Result<()> {
    ensure!(a.input.len() == a.gt.len(), "{} inputs for {} ground truths", a.input.len(), a.gt.len());
    let dataset = a
        .input
        .iter()
        .zip(&a.gt)
        .map(|(i, g)| Ok((read_container::<FusionInput>(i)?, read_container::<LabelGrid>(g)?)))
        .collect::<Result<Vec<_>>>()?;
    let channels = dataset[0].0.channels();
    let mut head = LateFusionHead::init(channels, a.hidden, a.seed);
    if !a.no_normalize {
        let inputs: Vec<&FusionInput> = dataset.iter().map(|(i, _)| i).collect();
        head = head.with_norm(ChannelNorm::fit(&inputs)?);
    }
    let options = TrainOptions { epochs: a.epochs, learning_rate: a.lr };
    let (head, trace) = train(head, &dataset, &options)?;
    if let Some(last) = trace.last() {
        eprintln!("final loss {last:.6} after {} epochs", trace.len());
    }
    if let Some(path) = &a.trace {
        let text: String = trace.iter().map(|l| format!("{l:e}\n")).collect();
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    write_container(&a.out, &head)
}

fn fuse_predict(a: PredictArgs) -> Result<()> {
    let head: LateFusionHead = read_container(&a.head)?;
    let input: FusionInput = read_container(&a.input)?;
    write_container(&a.out, &predict(&head, &input)?)
}

fn synth(a: SynthArgs) -> Result<()> {
    ensure!(a.scans > 0, "--scans must be at least 1");
    let options = SynthOptions {
        seed: a.seed,
        beams: a.beams.spec()?,
        range_noise: a.range_noise,
        dropout: a.dropout,
    };
    let (scans, poses) = synth_sequence(&options, a.scans, a.step)?;
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for (k, scan) in scans.iter().enumerate() {
        let stem = a.out_dir.join(format!("{k:06}"));
        io::write_point_cloud(stem.with_extension("bin"), &scan.cloud)?;
        io::write_labels(stem.with_extension("label"), &scan.raw_labels)?;
    }
    io::write_poses(a.out_dir.join("poses.txt"), &poses)?;
    Ok(())
}

fn render(a: RenderArgs) -> Result<()> {
    let container = io::read_raster(&a.input)?;
    let name = match &a.layer {
        Some(name) => name.clone(),
        None if container.layer("label").is_ok() => "label".to_string(),
        None => match container.layers.first() {
            Some(l) => l.name.clone(),
            None => bail!("{} has no layers", a.input.display()),
        },
    };
    if name == "label" {
        let grid = LabelGrid::try_from(&container)?;
        io::export_label_image(&grid, &a.out)?;
    } else {
        let layer = container.to_grid_layer(&name)?;
        io::export_layer_image(&layer, &a.out)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode(a) => encode(a),
        Command::Project(a) => project(a),
        Command::SemanticEncode(a) => semantic_encode(a),
        Command::Groundtruth(a) => groundtruth(a),
        Command::Evaluate(a) => evaluate(a),
        Command::FuseAssemble(a) => fuse_assemble(a),
        Command::FuseTrain(a) => fuse_train(a),
        Command::FusePredict(a) => fuse_predict(a),
        Command::SynthScene(a) => synth(a),
        Command::Render(a) => render(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
