//! All stages for one mesh, or for every line of a manifest.
//!
//! Per mesh `STEM` the output directory receives `STEM_denoised.obj`,
//! `STEM.map`, `STEM.fimg`, and with labels `STEM_gt.limg`; with a prediction
//! also `STEM_pred.lbl`, `STEM_pred_faces.lbl` and `STEM_iou.txt`.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use log::warn;
use rayon::prelude::*;

use faceparse::denoise::denoise;
use faceparse::labels::{extend_labels, faces_from_vertex_labels, format_labels};
use faceparse::mesh::{fill_holes, validate_disk_topology, write_mesh};
use faceparse::metrics::{confusion_2d, confusion_3d, miou};
use faceparse::param::WeightMode;
use faceparse::raster::{
    encode_face_image, encode_label_image, rasterize, rasterize_labels, read_label_image,
    remap_labels,
};

use crate::commands::{describe_param, load, load_labels, parameterize, write_pngs, DEFAULT_IMAGE_SIZE};
use crate::config::Config;
use crate::failure::{CliResult, Failure, StageExt};
use crate::outputs::Outputs;
use crate::table::{render_rows, Row};
use crate::{DenoiseOpts, ParamOpts};

#[derive(Clone, Debug)]
pub struct Settings {
    pub image_size: usize,
    /// `None` skips denoising.
    pub denoise: Option<DenoiseOpts>,
    pub weights: WeightMode,
    pub improve: bool,
    pub png: bool,
    config: Config,
}

impl Settings {
    pub fn resolve(
        config: &Config,
        size: Option<usize>,
        no_denoise: bool,
        png: bool,
        denoise: DenoiseOpts,
        param: ParamOpts,
    ) -> CliResult<Self> {
        let image_size = config.pick(size, "image_size")?.unwrap_or(DEFAULT_IMAGE_SIZE);
        let run_denoise = !no_denoise && config.get::<bool>("denoise")?.unwrap_or(true);
        let (weights, improve) = param.resolve(config)?;
        Ok(Settings {
            image_size,
            denoise: run_denoise.then_some(denoise),
            weights,
            improve,
            png,
            config: config.clone(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct Job {
    pub mesh: PathBuf,
    pub labels: Option<PathBuf>,
    pub pred: Option<PathBuf>,
}

impl Job {
    fn stem(&self) -> String {
        self.mesh
            .file_stem()
            .map_or_else(|| "mesh".to_string(), |s| s.to_string_lossy().into_owned())
    }
}

pub fn read_manifest(path: &Path) -> CliResult<Vec<Job>> {
    let text = fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut jobs = Vec::new();
    let mut stems = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() > 3 {
            return Err(anyhow!("{}:{}: expected `MESH [LABELS [PRED]]`", path.display(), i + 1).into());
        }
        let at = |k: usize| fields.get(k).map(|f| base.join(f));
        let job = Job {
            mesh: base.join(fields[0]),
            labels: at(1),
            pred: at(2),
        };
        if !stems.insert(job.stem()) {
            return Err(anyhow!(
                "{}:{}: another mesh is already named `{}`",
                path.display(),
                i + 1,
                job.stem()
            )
            .into());
        }
        jobs.push(job);
    }
    if jobs.is_empty() {
        return Err(anyhow!("{}: no meshes listed", path.display()).into());
    }
    Ok(jobs)
}

/// Runs every job; summaries are printed in manifest order. The first failing
/// job decides the exit status, the others still run to completion.
pub fn run_all(jobs: &[Job], out: &Path, settings: &Settings) -> CliResult<()> {
    if !out.is_dir() {
        return Err(anyhow!("{}: not a directory", out.display()).into());
    }
    let results: Vec<CliResult<String>> = jobs.par_iter().map(|j| run_job(j, out, settings)).collect();
    let mut first = None;
    for (job, r) in jobs.iter().zip(results) {
        match r {
            Ok(summary) => print!("{summary}"),
            Err(e) => {
                if jobs.len() > 1 {
                    eprintln!("{}: {e}", job.mesh.display());
                }
                first.get_or_insert(e);
            }
        }
    }
    match first {
        None => Ok(()),
        Some(e) if jobs.len() == 1 => Err(e),
        Some(e) => {
            let code = e.exit_code();
            let error = anyhow!("some meshes failed");
            Err(if code == 2 {
                Failure::Usage(error)
            } else {
                Failure::Stage { stage: "pipeline", error }
            })
        }
    }
}

fn run_job(job: &Job, out: &Path, s: &Settings) -> CliResult<String> {
    let stem = job.stem();
    let mut summary = format!("{stem}:\n");
    let mesh = load(&job.mesh)?;
    let labels = match &job.labels {
        Some(p) => Some(load_labels(p, mesh.vertex_count(), "vertices")?),
        None => None,
    };
    let pred = match &job.pred {
        Some(p) => {
            let img = read_label_image(p).stage("load")?;
            if img.width != s.image_size || img.height != s.image_size {
                return Err(anyhow!(
                    "{}: prediction is {}x{}, images are {}x{}",
                    p.display(),
                    img.width,
                    img.height,
                    s.image_size,
                    s.image_size
                )
                .into());
            }
            Some(img)
        }
        None => None,
    };

    let filled = fill_holes(&mesh).stage("fill_holes")?;
    validate_disk_topology(&filled)
        .and_then(|r| r.require_disk())
        .stage("validate")?;
    if filled.vertex_count() > mesh.vertex_count() {
        summary += &format!(
            "  filled holes: {} new vertices\n",
            filled.vertex_count() - mesh.vertex_count()
        );
    }
    let labels = match labels {
        Some(l) => Some(extend_labels(&filled, &l).stage("fill_holes")?),
        None => None,
    };

    let clean = match &s.denoise {
        Some(opts) => {
            let params = opts.resolve(&s.config, &filled)?;
            let (clean, trace) = denoise(&filled, &params).stage("denoise")?;
            summary += &format!(
                "  denoise: {} severe, {} iterations\n",
                trace.severe_count, trace.iterations_run
            );
            clean
        }
        None => filled,
    };

    let p = parameterize(&clean, s.weights, s.improve)?;
    summary += &format!("  param: {}\n", describe_param(&p));
    let n = s.image_size;
    let img = rasterize(&clean, &p.map, n, n).stage("raster")?;

    let file = |suffix: &str| out.join(format!("{stem}{suffix}"));
    let mut outputs = Outputs::new();
    outputs.write(&file("_denoised.obj"), write_mesh(&clean).as_bytes())?;
    outputs.write(&file(".map"), p.map.to_table().as_bytes())?;
    outputs.write(&file(".fimg"), &encode_face_image(&img))?;
    if s.png {
        write_pngs(&mut outputs, &img, &out.join(&stem))?;
    }
    let gt_image = match &labels {
        Some(l) => {
            let g = rasterize_labels(&clean, &p.map, l, n, n).stage("raster")?;
            outputs.write(&file("_gt.limg"), &encode_label_image(&g))?;
            Some(g)
        }
        None => None,
    };

    if let Some(pred) = pred {
        let r = remap_labels(&clean, &p.map, &pred).stage("remap")?;
        outputs.write(&file("_pred.lbl"), format_labels(&r.vertex_labels).as_bytes())?;
        outputs.write(&file("_pred_faces.lbl"), format_labels(&r.face_labels).as_bytes())?;
        summary += &format!("  remap: {} vertices on uncovered pixels\n", r.uncovered_vertices);
        if let (Some(l), Some(g)) = (&labels, &gt_image) {
            let mut rows = Vec::new();
            let conf2 = confusion_2d(&pred, g).map_err(anyhow::Error::from)?;
            let gt_faces = faces_from_vertex_labels(clean.faces(), l);
            let conf3 = confusion_3d(&r.face_labels, &gt_faces, &clean).map_err(anyhow::Error::from)?;
            for (name, conf) in [("2d", conf2), ("3d", conf3)] {
                match miou(&conf) {
                    Ok(report) => rows.push(Row { name: name.into(), report }),
                    Err(e) => warn!("{stem}: {name} IoU skipped: {e}"),
                }
            }
            let table = render_rows(&rows, false, false);
            outputs.write(&file("_iou.txt"), table.as_bytes())?;
            for line in table.lines() {
                summary += &format!("  {line}\n");
            }
        }
    }
    outputs.commit();
    Ok(summary)
}
