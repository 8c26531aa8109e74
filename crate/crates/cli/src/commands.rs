use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use serde_json::json;

use gridsight_core::cnn::{self, CnnModel, Label};
use gridsight_core::pipeline::{self, PipelineConfig, Settings};
use gridsight_core::platform::{self, LaserReadings, MassBudget, ThrustParams};
use gridsight_core::proposal::{propose_regions, region_annotations, ProposalRegion};
use gridsight_core::raster::io::{load_image, save_gray, save_mask, save_overlay, Annotation, GREEN, RED};
use gridsight_core::raster::to_gray;
use gridsight_core::structure::confine_transfer_lines;
use gridsight_core::thermal::expose_neighbor_edges;
use gridsight_core::{clearance, synth, Error, Result};

use crate::{Cli, Command, Global};

#[derive(Debug, Args)]
pub struct ThermalArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub center_included: Option<bool>,
    #[arg(long)]
    pub edge_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct StructuresArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub canny_sigma: Option<f64>,
    #[arg(long)]
    pub canny_low: Option<f64>,
    #[arg(long)]
    pub canny_high: Option<f64>,
    #[arg(long)]
    pub hough_votes: Option<u32>,
    #[arg(long)]
    pub gabor_orients: Option<usize>,
    /// Comma-separated wavelengths in pixels.
    #[arg(long)]
    pub gabor_waves: Option<String>,
}

#[derive(Debug, Args)]
pub struct ClearanceArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub meter_per_pixel: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ProposeArgs {
    pub input: PathBuf,
    /// haar or db2
    #[arg(long)]
    pub wavelet: Option<String>,
    #[arg(long)]
    pub emax: Option<f64>,
    #[arg(long)]
    pub max_regions: Option<usize>,
    #[arg(long)]
    pub max_radius: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// JSON list of regions as written by `propose`.
    #[arg(long)]
    pub regions: PathBuf,
    /// Image the regions were proposed on.
    #[arg(long)]
    pub image: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory with one subdirectory of PNG patches per class, optionally
    /// split into train/ and test/.
    #[arg(long, required_unless_present = "synthetic")]
    pub data: Option<PathBuf>,
    /// Train on the generated bars/triangles/noise set (300 train, 150 test).
    #[arg(long, conflicts_with = "data")]
    pub synthetic: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Model file to write; defaults to `<out>/model.bin`.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum PlatformCommand {
    /// Thrust per motor, grams.
    Thrust {
        #[arg(long)]
        weight: f64,
        #[arg(long, default_value_t = 1.1)]
        alpha: f64,
        #[arg(long)]
        motors: u32,
    },
    /// Total mass of a budget CSV (name,unit_weight_g,pieces); the reference
    /// airframe when no file is given.
    Mass {
        #[arg(long)]
        budget: Option<PathBuf>,
    },
    /// Alignment angle of a three-sensor laser array, radians.
    Align {
        #[arg(long)]
        d0: f64,
        #[arg(long)]
        d1: f64,
        #[arg(long)]
        d2: f64,
        #[arg(long)]
        spacing: f64,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Directory of inspection images (sets `input.dir`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Thermal frame or directory (sets `input.thermal`).
    #[arg(long)]
    pub thermal: Option<PathBuf>,
    /// Model file; enables the classify stage.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Patches per split and class for the generated dataset; 0 skips it.
    #[arg(long, default_value_t = 0)]
    pub dataset_per_class: usize,
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

/// Defaults, then the config file, then `--set`, then the global and
/// subcommand flags.
fn build_config(g: &Global, flags: &[(&str, Option<String>)]) -> Result<PipelineConfig> {
    let mut c = match &g.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    for kv in &g.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        c.set(k.trim(), v)?;
    }
    let globals = [
        ("seed", g.seed.map(|v| v.to_string())),
        ("jobs", g.jobs.map(|v| v.to_string())),
        ("output.dir", g.out.as_deref().map(path_str)),
    ];
    for (k, v) in globals.iter().chain(flags) {
        if let Some(v) = v {
            c.set(k, v)?;
        }
    }
    Ok(c)
}

fn out_dir(s: &Settings) -> Result<PathBuf> {
    let d = s.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&d)?;
    Ok(d)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "image".into())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<String> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, &text)?;
    log::info!("wrote {}", path.display());
    Ok(text)
}

fn emit(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    print!("{}", write_json(path, value)?);
    Ok(())
}

fn opt<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Thermal(a) => thermal(g, a),
        Command::Structures(a) => structures(g, a),
        Command::Clearance(a) => clearance_cmd(g, a),
        Command::Propose(a) => propose(g, a),
        Command::Classify(a) => classify(g, a),
        Command::Train(a) => train(g, a),
        Command::Platform(p) => platform_cmd(p),
        Command::Run(a) => run(g, a),
        Command::Synth(a) => synth_cmd(g, a),
        Command::Config => {
            print!("{}", build_config(g, &[])?.to_text());
            Ok(())
        }
    }
}

fn thermal(g: &Global, a: &ThermalArgs) -> Result<()> {
    let c = build_config(
        g,
        &[
            ("thermal.center_included", opt(&a.center_included)),
            ("thermal.edge_threshold", opt(&a.edge_threshold)),
        ],
    )?;
    let s = c.resolve()?;
    let rgb = load_image(&a.input)?;
    let gray = to_gray(&rgb);
    let name = stem(&a.input);
    let (report, mask) = pipeline::thermal_summary(&name, &gray, &s)?;
    let out = out_dir(&s)?;
    save_mask(&mask, out.join(format!("{name}_hotspots.png")))?;
    let exposed = expose_neighbor_edges(&gray, &mask, s.thermal.edge_threshold)?;
    save_gray(&exposed, out.join(format!("{name}_exposed.png")))?;
    let boxes: Vec<Annotation> = report
        .components
        .iter()
        .map(|c| Annotation::Rect { x: c.bbox[0], y: c.bbox[1], w: c.bbox[2], h: c.bbox[3], color: RED })
        .collect();
    let mut shapes = vec![Annotation::Mask { mask, color: RED }];
    shapes.extend(boxes);
    save_overlay(&rgb, &shapes, out.join(format!("{name}_overlay.png")))?;
    emit(&out.join(format!("{name}_thermal.json")), &report)
}

fn structures(g: &Global, a: &StructuresArgs) -> Result<()> {
    let c = build_config(
        g,
        &[
            ("structures.canny_sigma", opt(&a.canny_sigma)),
            ("structures.canny_low", opt(&a.canny_low)),
            ("structures.canny_high", opt(&a.canny_high)),
            ("structures.hough_votes", opt(&a.hough_votes)),
            ("structures.gabor_orients", opt(&a.gabor_orients)),
            ("structures.gabor_waves", a.gabor_waves.clone()),
        ],
    )?;
    let s = c.resolve()?;
    let gray = to_gray(&load_image(&a.input)?);
    let name = stem(&a.input);
    let r = pipeline::detect_structures(&gray, &s)?;
    let out = out_dir(&s)?;
    save_mask(&r.edges, out.join(format!("{name}_edges.png")))?;
    write_json(&out.join(format!("{name}_lines.json")), &r.report.lines)?;
    if let Some(towers) = &r.tower_mask {
        save_mask(towers, out.join(format!("{name}_towers.png")))?;
        let confined = confine_transfer_lines(&r.edges, towers)?;
        save_gray(&confined, out.join(format!("{name}_confined.png")))?;
    }
    emit(&out.join(format!("{name}_structures.json")), &r.report)
}

fn clearance_cmd(g: &Global, a: &ClearanceArgs) -> Result<()> {
    let c = build_config(g, &[("clearance.meter_per_pixel", opt(&a.meter_per_pixel))])?;
    let s = c.resolve()?;
    let rgb = load_image(&a.input)?;
    let name = stem(&a.input);
    let report = clearance::clearance_report(&rgb, &s.clearance)?;
    let out = out_dir(&s)?;
    let mut shapes = vec![Annotation::Mask {
        mask: clearance::green_mask(&rgb, &s.clearance.green),
        color: GREEN,
    }];
    shapes.extend(report.annotations(rgb.dims()));
    save_overlay(&rgb, &shapes, out.join(format!("{name}_clearance.png")))?;
    emit(&out.join(format!("{name}_clearance.json")), &report)
}

fn propose(g: &Global, a: &ProposeArgs) -> Result<()> {
    let c = build_config(
        g,
        &[
            ("proposal.wavelet", a.wavelet.clone()),
            ("proposal.e_max", opt(&a.emax)),
            ("proposal.max_regions", opt(&a.max_regions)),
            ("proposal.max_radius", opt(&a.max_radius)),
        ],
    )?;
    let s = c.resolve()?;
    let rgb = load_image(&a.input)?;
    let name = stem(&a.input);
    let regions = propose_regions(&to_gray(&rgb), &s.proposal)?;
    let out = out_dir(&s)?;
    save_overlay(&rgb, &region_annotations(&regions), out.join(format!("{name}_regions.png")))?;
    emit(&out.join(format!("{name}_regions.json")), &regions)
}

fn classify(g: &Global, a: &ClassifyArgs) -> Result<()> {
    let s = build_config(g, &[])?.resolve()?;
    let model = cnn::load_model(&a.model)?;
    if !a.regions.exists() {
        return Err(Error::MissingFile(a.regions.clone()));
    }
    let regions: Vec<ProposalRegion> = serde_json::from_str(&fs::read_to_string(&a.regions)?)?;
    let rgb = load_image(&a.image)?;
    let survivors = cnn::filter_proposals(&model, &regions, &to_gray(&rgb))?;
    let name = stem(&a.image);
    let out = out_dir(&s)?;
    let kept: Vec<_> = survivors.iter().map(|r| r.region.clone()).collect();
    save_overlay(&rgb, &region_annotations(&kept), out.join(format!("{name}_classified.png")))?;
    emit(&out.join(format!("{name}_classified.json")), &survivors)
}

fn train(g: &Global, a: &TrainArgs) -> Result<()> {
    let c = build_config(g, &[("train.epochs", opt(&a.epochs)), ("train.lr", opt(&a.lr))])?;
    let s = c.resolve()?;
    let data = match &a.data {
        Some(d) => cnn::load_dataset_dir(d)?,
        None => synth::toy_dataset(s.seed, 300, 150),
    };
    let out = out_dir(&s)?;
    let outcome = cnn::train(&CnnModel::new(s.seed), &data, &s.train)?;
    let model_path = a.model_out.clone().unwrap_or_else(|| out.join("model.bin"));
    cnn::save_model(&outcome.model, &model_path)?;
    let test_accuracy = if data.test.is_empty() {
        None
    } else {
        Some(cnn::accuracy(&outcome.model, &data.test)?)
    };
    let summary = json!({
        "model": path_str(&model_path),
        "seed": s.seed,
        "train_samples": data.train.len(),
        "test_samples": data.test.len(),
        "epoch_losses": outcome.epoch_losses,
        "train_accuracy": cnn::accuracy(&outcome.model, &data.train)?,
        "test_accuracy": test_accuracy,
    });
    emit(&out.join("train.json"), &summary)
}

fn platform_cmd(p: &PlatformCommand) -> Result<()> {
    match p {
        PlatformCommand::Thrust { weight, alpha, motors } => {
            let t = platform::thrust_per_motor(&ThrustParams {
                total_weight_g: *weight,
                alpha: *alpha,
                n_motors: *motors,
            })?;
            println!("{t:.2}");
        }
        PlatformCommand::Mass { budget } => {
            let b = match budget {
                Some(path) => {
                    if !path.exists() {
                        return Err(Error::MissingFile(path.clone()));
                    }
                    MassBudget::from_csv(fs::File::open(path)?)?
                }
                None => MassBudget::reference_airframe(),
            };
            println!("{}", platform::total_mass(&b)?);
        }
        PlatformCommand::Align { d0, d1, d2, spacing } => {
            let theta = platform::alignment_angle(&LaserReadings {
                distances_m: [*d0, *d1, *d2],
                spacing_m: *spacing,
            })?;
            println!("{theta:.6}");
        }
    }
    Ok(())
}

fn run(g: &Global, a: &RunArgs) -> Result<()> {
    let mut flags = vec![
        ("input.dir", a.input.as_deref().map(path_str)),
        ("input.thermal", a.thermal.as_deref().map(path_str)),
        ("classify.model", a.model.as_deref().map(path_str)),
    ];
    if a.model.is_some() {
        flags.push(("stages.classify", Some("true".into())));
    }
    let c = build_config(g, &flags)?;
    let report = pipeline::run_pipeline(&c)?;
    let out = out_dir(&c.resolve()?)?;
    let text = report.to_json()?;
    fs::write(out.join("report.json"), &text)?;
    print!("{text}");
    Ok(())
}

fn synth_cmd(g: &Global, a: &SynthArgs) -> Result<()> {
    let s = build_config(g, &[])?.resolve()?;
    let out = out_dir(&s)?;
    let scene = synth::inspection_scene(s.seed);
    gridsight_core::raster::io::save_png(&scene.image, out.join("scene.png"))?;
    let (disc, _) = synth::thermal_disc(160, 120, (80.0, 60.0), 18.0, 0.15, 0.9);
    save_gray(&disc, out.join("thermal.png"))?;
    let comp = synth::proposal_composite(s.seed, 256, 256);
    save_gray(&comp.image, out.join("composite.png"))?;
    let (texture, _) = synth::two_texture(128, 96);
    save_gray(&texture, out.join("texture.png"))?;

    if a.dataset_per_class > 0 {
        let n = a.dataset_per_class * 3;
        let data = synth::toy_dataset(s.seed, n, n);
        for (split, samples) in [("train", &data.train), ("test", &data.test)] {
            for (i, sample) in samples.iter().enumerate() {
                let dir = out.join("dataset").join(split).join(sample.label.name());
                fs::create_dir_all(&dir)?;
                save_gray(&sample.patch, dir.join(format!("{i:04}.png")))?;
            }
        }
    }
    let truth = json!({
        "scene": {
            "meter_per_pixel": scene.meter_per_pixel,
            "expected_distance_m": scene.expected_distance_m,
            "insulators": scene.insulators,
        },
        "composite": comp.objects,
        "labels": Label::ALL,
    });
    emit(&out.join("truth.json"), &truth)?;
    Ok(())
}
