//! Single-stage subcommands.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, Context};
use log::info;

use faceparse::denoise::{denoise as run_denoise, DenoiseParams, DenoiseTrace};
use faceparse::fixtures;
use faceparse::labels::{faces_from_vertex_labels, format_labels, read_labels, Label};
use faceparse::mesh::{fill_holes, format_sig9, load_mesh, validate_disk_topology, write_mesh};
use faceparse::metrics::{confusion_2d, confusion_3d, label_weights, miou};
use faceparse::param::{
    align_rotation, angle_distortion, harmonic_disk_map, improve_conformality, DistortionReport,
    Improvement, ParamMap, WeightMode,
};
use faceparse::raster::{
    encode_face_image, encode_label_image, export_depth_png, export_rgb_png, rasterize,
    rasterize_labels, read_label_image, remap_labels, FaceImage, LabelImage,
};
use faceparse::Mesh;

use crate::config::{parse_list, Config};
use crate::failure::{CliResult, StageExt};
use crate::outputs::Outputs;
use crate::table::{render, Row};
use crate::{DenoiseOpts, FixtureKind, ParamOpts, Space};

pub const DEFAULT_IMAGE_SIZE: usize = 256;

pub fn load(path: &Path) -> CliResult<Mesh> {
    load_mesh(path).stage("load")
}

pub fn load_labels(path: &Path, expected: usize, what: &str) -> CliResult<Vec<Label>> {
    let labels = read_labels(path).stage("load")?;
    if labels.len() != expected {
        return Err(anyhow!(
            "{}: {} labels for {expected} {what}",
            path.display(),
            labels.len()
        )
        .into());
    }
    Ok(labels)
}

impl DenoiseOpts {
    pub fn resolve(&self, config: &Config, mesh: &Mesh) -> CliResult<DenoiseParams> {
        let mut p = DenoiseParams::for_mesh(mesh);
        if let Some(v) = config.pick(self.epsilon, "epsilon")? {
            p.epsilon = v;
        }
        if let Some(v) = config.pick(self.alpha_a, "alpha_a")? {
            p.alpha_a = v;
        }
        if let Some(v) = config.pick(self.k.clone(), "k")? {
            p.k_list = parse_list(&v)?;
        }
        if let Some(v) = config.pick(self.mu, "mu")? {
            p.mu = v;
        }
        if let Some(v) = config.pick(self.max_iters, "max_iters")? {
            p.max_iters = v;
        }
        p.validate().map_err(anyhow::Error::from)?;
        Ok(p)
    }
}

impl ParamOpts {
    /// Weight mode and whether to run the improvement step.
    pub fn resolve(&self, config: &Config) -> CliResult<(WeightMode, bool)> {
        let weights = config
            .pick(self.weights, "weights")?
            .unwrap_or(WeightMode::Cotangent);
        let improve = if self.no_improve {
            false
        } else {
            config.get::<bool>("improve")?.unwrap_or(true)
        };
        Ok((weights, improve))
    }
}

pub struct Parameterized {
    pub map: ParamMap,
    pub weights: WeightMode,
    pub improvement: Option<Improvement>,
    pub distortion: DistortionReport,
}

/// Harmonic map, optional improvement, rotation alignment.
pub fn parameterize(mesh: &Mesh, weights: WeightMode, improve: bool) -> CliResult<Parameterized> {
    let harmonic = harmonic_disk_map(mesh, weights).stage("param")?;
    let (map, improvement) = if improve {
        let imp = improve_conformality(mesh, &harmonic.map).stage("param")?;
        (imp.map.clone(), Some(imp))
    } else {
        (harmonic.map, None)
    };
    let map = align_rotation(mesh, &map);
    let distortion = angle_distortion(mesh, &map);
    if distortion.flipped_faces > 0 {
        return Err(crate::failure::Failure::Stage {
            stage: "param",
            error: anyhow!("parameterization folds {} triangles", distortion.flipped_faces),
        });
    }
    Ok(Parameterized {
        map,
        weights: harmonic.weights,
        improvement,
        distortion,
    })
}

pub fn describe_param(p: &Parameterized) -> String {
    let mut s = format!("weights {}", p.weights);
    if let Some(imp) = &p.improvement {
        let _ = write!(
            s,
            ", improvement {} (inner |mu| {:.4e} -> {:.4e})",
            if imp.accepted { "accepted" } else { "rejected" },
            imp.mean_mu_init,
            imp.mean_mu_candidate
        );
    }
    let _ = write!(s, ", mean |angle distortion| {:.4} deg", p.distortion.mean_abs);
    s
}

pub fn trace_text(trace: &DenoiseTrace) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "severe_count {}", trace.severe_count);
    let _ = writeln!(s, "iterations_run {}", trace.iterations_run);
    for (i, m) in trace.mcs_history.iter().enumerate() {
        let _ = writeln!(s, "mcs {} {}", i + 1, format_sig9(*m));
    }
    s
}

pub fn validate(path: &Path, fill: Option<&Path>) -> CliResult<()> {
    let mesh = load(path)?;
    let report = validate_disk_topology(&mesh).stage("validate")?;
    let loops: Vec<String> = report.boundary_loops.iter().map(|l| l.len().to_string()).collect();
    println!(
        "V {} E {} F {} euler {} boundary_loops {} [{}] nonmanifold_edges {}",
        report.vertex_count,
        report.edge_count,
        report.face_count,
        report.euler_characteristic,
        report.boundary_loop_count,
        loops.join(" "),
        report.nonmanifold_edge_count
    );
    let checked = match fill {
        None => report,
        Some(out) => {
            let filled = fill_holes(&mesh).stage("fill_holes")?;
            let r = validate_disk_topology(&filled).stage("validate")?;
            println!(
                "filled: V {} F {} euler {} boundary_loops {}",
                r.vertex_count, r.face_count, r.euler_characteristic, r.boundary_loop_count
            );
            let mut outputs = Outputs::new();
            outputs.write(out, write_mesh(&filled).as_bytes())?;
            if !r.is_disk() {
                // leave the file for inspection, but report the failure
                outputs.commit();
                return r.require_disk().stage("validate");
            }
            outputs.commit();
            r
        }
    };
    checked.require_disk().stage("validate")
}

pub fn fixtures(
    kind: FixtureKind,
    resolution: Option<usize>,
    out: &Path,
    name: Option<&str>,
    seed: Option<u64>,
) -> CliResult<()> {
    let (default_res, min_res) = match kind {
        FixtureKind::Plane | FixtureKind::NoisyPlane => (50, 4),
        FixtureKind::SpikePlane => (9, 4),
        FixtureKind::PlanarDisk => (10, 4),
        FixtureKind::Hemisphere | FixtureKind::PaintedHemisphere => (40, 4),
        FixtureKind::HoledGrid => (11, 5),
    };
    let n = resolution.unwrap_or(default_res);
    if n < min_res {
        return Err(anyhow!("resolution {n} is below {min_res} for this fixture").into());
    }
    let stem = match name {
        Some(s) => s.to_string(),
        None => clap::ValueEnum::to_possible_value(&kind).unwrap().get_name().to_string(),
    };
    if !out.is_dir() {
        return Err(anyhow!("{}: not a directory", out.display()).into());
    }

    let mut labels: Option<(Vec<Label>, Vec<Label>)> = None;
    let mesh = match kind {
        FixtureKind::Plane => fixtures::plane_grid(n, 1.0),
        FixtureKind::NoisyPlane => {
            let seed = seed.context("noisy-plane draws random numbers; pass --seed")?;
            fixtures::noisy_plane(n, 1.0, 0.1, seed)
        }
        FixtureKind::SpikePlane => {
            let (m, spike) = fixtures::spike_plane(n, 1.0, 3.0);
            println!("spike vertex {spike}");
            m
        }
        FixtureKind::PlanarDisk => fixtures::planar_disk(n),
        FixtureKind::Hemisphere => fixtures::hemisphere(n),
        FixtureKind::PaintedHemisphere => {
            let ph = fixtures::painted_hemisphere(n);
            labels = Some((ph.vertex_labels, ph.face_labels));
            ph.mesh
        }
        FixtureKind::HoledGrid => fixtures::holed_grid(n),
    };
    let mut outputs = Outputs::new();
    outputs.write(&out.join(format!("{stem}.obj")), write_mesh(&mesh).as_bytes())?;
    if let Some((v, f)) = labels {
        outputs.write(&out.join(format!("{stem}.lbl")), format_labels(&v).as_bytes())?;
        outputs.write(&out.join(format!("{stem}_faces.lbl")), format_labels(&f).as_bytes())?;
    }
    for p in outputs.commit() {
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub fn denoise(
    path: &Path,
    out: &Path,
    trace_path: Option<&Path>,
    opts: &DenoiseOpts,
    config: &Config,
) -> CliResult<()> {
    let mesh = load(path)?;
    let params = opts.resolve(config, &mesh)?;
    let (clean, trace) = run_denoise(&mesh, &params).stage("denoise")?;
    for (i, m) in trace.mcs_history.iter().enumerate() {
        println!("{} {}", i + 1, format_sig9(*m));
    }
    info!(
        "{} severe vertices replaced, {} iterations",
        trace.severe_count, trace.iterations_run
    );
    let trace_path = trace_path.map_or_else(|| out.with_extension("trace"), Path::to_path_buf);
    let mut outputs = Outputs::new();
    outputs.write(out, write_mesh(&clean).as_bytes())?;
    outputs.write(&trace_path, trace_text(&trace).as_bytes())?;
    outputs.commit();
    Ok(())
}

pub fn distortion_csv(d: &DistortionReport) -> String {
    let mut s = String::from("face_index,corner,delta_degrees\n");
    for (i, delta) in d.per_corner_delta.iter().enumerate() {
        let value = delta.map(format_sig9).unwrap_or_default();
        let _ = writeln!(s, "{},{},{}", i / 3, i % 3, value);
    }
    s
}

pub fn param(
    path: &Path,
    out: &Path,
    opts: &ParamOpts,
    report: Option<&Path>,
    config: &Config,
) -> CliResult<()> {
    let mesh = load(path)?;
    validate_disk_topology(&mesh)
        .and_then(|r| r.require_disk())
        .stage("validate")?;
    let (weights, improve) = opts.resolve(config)?;
    let p = parameterize(&mesh, weights, improve)?;
    println!("{}", describe_param(&p));
    let mut outputs = Outputs::new();
    outputs.write(out, p.map.to_table().as_bytes())?;
    if let Some(r) = report {
        outputs.write(r, distortion_csv(&p.distortion).as_bytes())?;
    }
    outputs.commit();
    Ok(())
}

pub struct RasterArgs<'a> {
    pub mesh: &'a Path,
    pub map: &'a Path,
    pub out: &'a Path,
    pub size: Option<usize>,
    pub labels: Option<&'a Path>,
    pub label_out: Option<&'a Path>,
    pub png: Option<&'a Path>,
}

pub fn write_pngs(outputs: &mut Outputs, img: &FaceImage, prefix: &Path) -> CliResult<()> {
    let with_suffix = |suffix: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(suffix);
        std::path::PathBuf::from(s)
    };
    outputs.write_with(&with_suffix("_rgb.png"), |tmp| Ok(export_rgb_png(img, tmp)?))?;
    outputs.write_with(&with_suffix("_depth.png"), |tmp| Ok(export_depth_png(img, tmp)?))?;
    Ok(())
}

fn load_map(path: &Path, mesh: &Mesh) -> CliResult<ParamMap> {
    let map = ParamMap::read(path).stage("load")?;
    if map.len() != mesh.vertex_count() {
        return Err(anyhow!(
            "{}: {} entries for {} vertices",
            path.display(),
            map.len(),
            mesh.vertex_count()
        )
        .into());
    }
    Ok(map)
}

pub fn raster(a: RasterArgs<'_>) -> CliResult<()> {
    let mesh = load(a.mesh)?;
    let map = load_map(a.map, &mesh)?;
    let size = a.size.unwrap_or(DEFAULT_IMAGE_SIZE);
    let img = rasterize(&mesh, &map, size, size).stage("raster")?;
    let mut outputs = Outputs::new();
    outputs.write(a.out, &encode_face_image(&img))?;
    if let (Some(lp), Some(lo)) = (a.labels, a.label_out) {
        let labels = load_labels(lp, mesh.vertex_count(), "vertices")?;
        let limg = rasterize_labels(&mesh, &map, &labels, size, size).stage("raster")?;
        outputs.write(lo, &encode_label_image(&limg))?;
    }
    if let Some(prefix) = a.png {
        write_pngs(&mut outputs, &img, prefix)?;
    }
    println!("{size}x{size}, {} covered pixels", img.covered_count());
    outputs.commit();
    Ok(())
}

pub fn remap(
    mesh_path: &Path,
    map_path: &Path,
    pred_path: &Path,
    out: &Path,
    faces_out: Option<&Path>,
    gt: Option<&Path>,
) -> CliResult<()> {
    let mesh = load(mesh_path)?;
    let map = load_map(map_path, &mesh)?;
    let pred = read_label_image(pred_path).stage("load")?;
    let r = remap_labels(&mesh, &map, &pred).stage("remap")?;
    println!(
        "{} vertices, {} faces, {} vertices on uncovered pixels",
        r.vertex_labels.len(),
        r.face_labels.len(),
        r.uncovered_vertices
    );
    if let Some(gt) = gt {
        let truth = load_labels(gt, mesh.vertex_count(), "vertices")?;
        let agree = r.vertex_labels.iter().zip(&truth).filter(|(a, b)| a == b).count();
        println!(
            "vertex agreement {agree}/{} ({:.2}%)",
            truth.len(),
            100.0 * agree as f64 / truth.len().max(1) as f64
        );
    }
    let mut outputs = Outputs::new();
    outputs.write(out, format_labels(&r.vertex_labels).as_bytes())?;
    if let Some(f) = faces_out {
        outputs.write(f, format_labels(&r.face_labels).as_bytes())?;
    }
    outputs.commit();
    Ok(())
}

fn entry_name(path: &str) -> String {
    Path::new(path)
        .file_stem()
        .map_or_else(|| path.to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn metrics(
    entries: &[String],
    space: Space,
    gt_per_vertex: bool,
    show_weights: bool,
    csv: bool,
) -> CliResult<()> {
    let mut rows = Vec::new();
    let mut gt_images: Vec<LabelImage> = Vec::new();
    for e in entries {
        let parts: Vec<&str> = e.split(',').collect();
        let report = match (space, parts.as_slice()) {
            (Space::TwoD, [pred, gt]) => {
                let p = read_label_image(pred).stage("load")?;
                let g = read_label_image(gt).stage("load")?;
                let conf = confusion_2d(&p, &g).map_err(anyhow::Error::from)?;
                gt_images.push(g);
                miou(&conf).stage("metrics")?
            }
            (Space::ThreeD, [mesh, pred, gt]) => {
                let m = load(Path::new(mesh))?;
                let p = load_labels(Path::new(pred), m.face_count(), "faces")?;
                let g = if gt_per_vertex {
                    let v = load_labels(Path::new(gt), m.vertex_count(), "vertices")?;
                    faces_from_vertex_labels(m.faces(), &v)
                } else {
                    load_labels(Path::new(gt), m.face_count(), "faces")?
                };
                let conf = confusion_3d(&p, &g, &m).map_err(anyhow::Error::from)?;
                miou(&conf).stage("metrics")?
            }
            (Space::TwoD, _) => return Err(anyhow!("entry `{e}`: expected PRED.limg,GT.limg").into()),
            (Space::ThreeD, _) => {
                return Err(anyhow!("entry `{e}`: expected MESH,PRED_FACES,GT_FACES").into())
            }
        };
        let name = entry_name(parts[parts.len() - 1]);
        rows.push(Row { name, report });
    }
    print!("{}", render(&rows, csv));
    if show_weights {
        if space != Space::TwoD {
            return Err(anyhow!("--label-weights needs 2d label images").into());
        }
        let w = label_weights(&gt_images).map_err(anyhow::Error::from)?;
        let cells: Vec<String> = w.iter().map(|x| format_sig9(*x)).collect();
        println!("label_weights {}", cells.join(" "));
    }
    Ok(())
}
