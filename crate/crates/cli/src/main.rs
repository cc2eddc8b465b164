//! `faceparse`: denoise, flatten, rasterize and re-map face meshes.

mod commands;
mod config;
mod failure;
mod outputs;
mod pipeline;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use faceparse::param::WeightMode;

use crate::config::Config;
use crate::failure::CliResult;

#[derive(Debug, Parser)]
#[command(name = "faceparse", version, about = "3D face parsing through a conformal disk image")]
struct Cli {
    /// `key = value` file with defaults for the flags below
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Seed for commands that draw random numbers
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report topology; optionally close holes and write the result
    Validate {
        mesh: PathBuf,
        /// Write the hole-filled mesh here
        #[arg(long, value_name = "OUT")]
        fill: Option<PathBuf>,
    },
    /// Write a synthetic mesh (and labels, where it has them)
    Fixtures {
        #[arg(value_enum)]
        kind: FixtureKind,
        #[arg(short = 'n', long)]
        resolution: Option<usize>,
        /// Output directory
        #[arg(short, long)]
        out: PathBuf,
        /// File stem (default: the fixture kind)
        #[arg(long)]
        name: Option<String>,
    },
    /// Severe-outlier replacement and iterative local-plane correction
    Denoise {
        mesh: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Trace file (default: OUT with extension `trace`)
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        opts: DenoiseOpts,
    },
    /// Disk parameterization; writes the mapping table
    Param {
        mesh: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        opts: ParamOpts,
        /// Per-corner angle distortion CSV
        #[arg(long, value_name = "CSV")]
        report: Option<PathBuf>,
    },
    /// Render the 4-channel face image (and a label image)
    Raster {
        mesh: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Image width and height
        #[arg(long)]
        size: Option<usize>,
        /// Vertex labels to render into a label image
        #[arg(long, requires = "label_out")]
        labels: Option<PathBuf>,
        #[arg(long, requires = "labels")]
        label_out: Option<PathBuf>,
        /// Also write PREFIX_rgb.png and PREFIX_depth.png
        #[arg(long, value_name = "PREFIX")]
        png: Option<PathBuf>,
    },
    /// Carry a predicted label image back to vertices and faces
    Remap {
        mesh: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Vertex label output
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        faces_out: Option<PathBuf>,
        /// Ground-truth vertex labels to report agreement against
        #[arg(long)]
        gt: Option<PathBuf>,
    },
    /// Per-class IoU and MIoU table
    Metrics {
        /// 2d: `PRED.limg,GT.limg`; 3d: `MESH.obj,PRED_FACES.lbl,GT_FACES.lbl`
        #[arg(required = true)]
        entries: Vec<String>,
        #[arg(long, value_enum, default_value_t = Space::TwoD)]
        space: Space,
        /// In 3d, ground truth files hold vertex labels (faces by majority)
        #[arg(long)]
        gt_per_vertex: bool,
        /// Also print class weights computed from the ground-truth images
        #[arg(long)]
        label_weights: bool,
        #[arg(long)]
        csv: bool,
    },
    /// All stages for one mesh or a manifest of meshes
    Pipeline {
        #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
        mesh: Option<PathBuf>,
        #[arg(long, requires = "mesh")]
        labels: Option<PathBuf>,
        #[arg(long, requires = "mesh")]
        pred: Option<PathBuf>,
        /// Lines of `MESH [LABELS [PRED]]`, relative to the manifest
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        size: Option<usize>,
        /// Skip the denoising stage
        #[arg(long)]
        no_denoise: bool,
        /// Also write PNG previews
        #[arg(long)]
        png: bool,
        #[command(flatten)]
        denoise: DenoiseOpts,
        #[command(flatten)]
        param: ParamOpts,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FixtureKind {
    Plane,
    NoisyPlane,
    SpikePlane,
    PlanarDisk,
    Hemisphere,
    PaintedHemisphere,
    HoledGrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Space {
    #[value(name = "2d")]
    TwoD,
    #[value(name = "3d")]
    ThreeD,
}

#[derive(Args, Clone, Debug, Default)]
pub struct DenoiseOpts {
    /// Severe-outlier distance threshold [default: 3 × median edge length]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Fraction of far neighbours that marks a severe outlier [default: 0.5]
    #[arg(long)]
    pub alpha_a: Option<f64>,
    /// Neighbourhood sizes [default: 8,16,24]
    #[arg(long, value_name = "K1,K2,...")]
    pub k: Option<String>,
    /// Stop when the mean correction step drops below this [default: 1e-4 × bbox diagonal]
    #[arg(long)]
    pub mu: Option<f64>,
    /// Iteration cap [default: 20]
    #[arg(long)]
    pub max_iters: Option<usize>,
}

#[derive(Args, Clone, Debug, Default)]
pub struct ParamOpts {
    /// Keep the harmonic map without the conformality improvement
    #[arg(long)]
    pub no_improve: bool,
    /// Edge weights of the harmonic map [default: cotangent]
    #[arg(long)]
    pub weights: Option<WeightMode>,
}

fn run(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(n) = config.pick(cli.jobs, "jobs")? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(anyhow::Error::from)?;
    }
    let seed = config.pick(cli.seed, "seed")?;
    match cli.command {
        Command::Validate { mesh, fill } => commands::validate(&mesh, fill.as_deref()),
        Command::Fixtures {
            kind,
            resolution,
            out,
            name,
        } => commands::fixtures(kind, resolution, &out, name.as_deref(), seed),
        Command::Denoise {
            mesh,
            out,
            trace,
            opts,
        } => commands::denoise(&mesh, &out, trace.as_deref(), &opts, &config),
        Command::Param {
            mesh,
            out,
            opts,
            report,
        } => commands::param(&mesh, &out, &opts, report.as_deref(), &config),
        Command::Raster {
            mesh,
            map,
            out,
            size,
            labels,
            label_out,
            png,
        } => commands::raster(commands::RasterArgs {
            mesh: &mesh,
            map: &map,
            out: &out,
            size: config.pick(size, "image_size")?,
            labels: labels.as_deref(),
            label_out: label_out.as_deref(),
            png: png.as_deref(),
        }),
        Command::Remap {
            mesh,
            map,
            pred,
            out,
            faces_out,
            gt,
        } => commands::remap(&mesh, &map, &pred, &out, faces_out.as_deref(), gt.as_deref()),
        Command::Metrics {
            entries,
            space,
            gt_per_vertex,
            label_weights,
            csv,
        } => commands::metrics(&entries, space, gt_per_vertex, label_weights, csv),
        Command::Pipeline {
            mesh,
            labels,
            pred,
            manifest,
            out,
            size,
            no_denoise,
            png,
            denoise,
            param,
        } => {
            let settings = pipeline::Settings::resolve(&config, size, no_denoise, png, denoise, param)?;
            let jobs = match (mesh, manifest) {
                (Some(mesh), _) => vec![pipeline::Job { mesh, labels, pred }],
                (None, Some(m)) => pipeline::read_manifest(&m)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            pipeline::run_all(&jobs, &out, &settings)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
