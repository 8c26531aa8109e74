//! Batch inspection: structures → clearance → proposals → classification
//! per image, thermal hotspots per thermal frame, one JSON report.

pub mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{PipelineConfig, Settings, Stages, KEYS};

use crate::clearance::{clearance_report, ClearanceReport};
use crate::cnn::{filter_proposals, load_model, ClassifiedRegion, CnnModel};
use crate::error::{Error, Result};
use crate::proposal::{propose_regions, ProposalRegion};
use crate::raster::io::load_image;
use crate::raster::{to_gray, BitMask, RasterGray, RasterRgb};
use crate::structure::{canny, gabor_pca_towers, hough_lines, HoughLine};
use crate::thermal::{connected_components, extract_hotspots, Component};

pub const SCHEMA: &str = "gridsight/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionReport {
    pub schema: String,
    pub tool_version: String,
    pub config: BTreeMap<String, String>,
    /// One entry per inspection image, ordered by file name.
    pub images: Vec<ImageReport>,
    /// One entry per thermal frame, ordered by file name.
    pub thermal: Vec<ThermalReport>,
}

impl InspectionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuresReport {
    pub edge_pixels: usize,
    pub lines: Vec<HoughLine>,
    /// Share of pixels in the Gabor+PCA tower mask, when computed.
    pub tower_mask_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub structures: Option<StructuresReport>,
    pub clearance: Option<ClearanceReport>,
    pub proposals: Option<Vec<ProposalRegion>>,
    /// Proposals that survived classification.
    pub classified: Option<Vec<ClassifiedRegion>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalReport {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub hotspot_pixels: usize,
    pub components: Vec<Component>,
}

/// PNG and PNM files directly inside `dir`, sorted by path.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        let ext = p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if p.is_file() && matches!(ext.as_deref(), Some("png" | "pgm" | "ppm" | "pnm")) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

pub struct StructuresOutput {
    pub report: StructuresReport,
    pub edges: BitMask,
    pub tower_mask: Option<BitMask>,
}

pub fn detect_structures(gray: &RasterGray, s: &Settings) -> Result<StructuresOutput> {
    let edges = canny(gray, &s.clearance.canny)?;
    let h = &s.clearance.hough;
    let lines = hough_lines(&edges, h.rho_res, h.theta_res, h.effective_min_votes(gray.height()))?;
    let tower_mask = if s.gabor_pca {
        Some(gabor_pca_towers(gray, &s.gabor, None)?.1)
    } else {
        None
    };
    let n = (gray.width() * gray.height()).max(1) as f64;
    Ok(StructuresOutput {
        report: StructuresReport {
            edge_pixels: edges.count(),
            lines,
            tower_mask_fraction: tower_mask.as_ref().map(|m| m.count() as f64 / n),
        },
        edges,
        tower_mask,
    })
}

/// Runs the enabled per-image stages in order.
pub fn inspect_image(name: &str, rgb: &RasterRgb, s: &Settings, model: Option<&CnnModel>) -> Result<ImageReport> {
    let gray = to_gray(rgb);
    let (width, height) = rgb.dims();
    let mut r = ImageReport {
        name: name.to_string(),
        width,
        height,
        structures: None,
        clearance: None,
        proposals: None,
        classified: None,
        notes: Vec::new(),
    };
    if s.stages.structures {
        r.structures = Some(detect_structures(&gray, s)?.report);
    }
    if s.stages.clearance {
        match clearance_report(rgb, &s.clearance) {
            Ok(c) => r.clearance = Some(c),
            Err(Error::NoTowerLine) => r.notes.push("clearance: no vertical tower line found".into()),
            Err(e) => return Err(e),
        }
    }
    if s.stages.propose || s.stages.classify {
        let regions = propose_regions(&gray, &s.proposal)?;
        if let (true, Some(m)) = (s.stages.classify, model) {
            r.classified = Some(filter_proposals(m, &regions, &gray)?);
        }
        r.proposals = Some(regions);
    }
    Ok(r)
}

pub fn thermal_summary(name: &str, gray: &RasterGray, s: &Settings) -> Result<(ThermalReport, BitMask)> {
    let mask = extract_hotspots(gray, &s.thermal)?;
    let report = ThermalReport {
        name: name.to_string(),
        width: gray.width(),
        height: gray.height(),
        hotspot_pixels: mask.count(),
        components: connected_components(&mask),
    };
    Ok((report, mask))
}

/// Loads the model named by the settings when classification is enabled.
pub fn load_stage_model(s: &Settings) -> Result<Option<CnnModel>> {
    if !s.stages.classify {
        return Ok(None);
    }
    let path = s
        .model_path
        .as_ref()
        .ok_or_else(|| Error::Config("stages.classify is on but classify.model is not set".into()))?;
    load_model(path)
        .map(Some)
        .map_err(|e| Error::Config(format!("cannot load model {}: {e}", path.display())))
}

fn thermal_inputs(s: &Settings) -> Result<Vec<PathBuf>> {
    match (&s.thermal_input, s.stages.thermal) {
        (Some(p), true) if p.is_dir() => list_images(p),
        (Some(p), true) => Ok(vec![p.clone()]),
        _ => Ok(Vec::new()),
    }
}

/// Validates everything, then processes the batch on a pool of
/// `settings.jobs` threads. Output order follows file names, not completion.
pub fn run_pipeline(config: &PipelineConfig) -> Result<InspectionReport> {
    let s = config.resolve()?;
    s.check_paths()?;
    let model = load_stage_model(&s)?;
    let images = match &s.input_dir {
        Some(d) => list_images(d)?,
        None => Vec::new(),
    };
    let thermal = thermal_inputs(&s)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(s.jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let (images, thermal) = pool.install(|| {
        let imgs = images
            .par_iter()
            .map(|p| {
                log::info!("inspecting {}", p.display());
                inspect_image(&file_name(p), &load_image(p)?, &s, model.as_ref())
            })
            .collect::<Result<Vec<_>>>();
        let therm = thermal
            .par_iter()
            .map(|p| Ok(thermal_summary(&file_name(p), &to_gray(&load_image(p)?), &s)?.0))
            .collect::<Result<Vec<_>>>();
        (imgs, therm)
    });
    Ok(InspectionReport {
        schema: SCHEMA.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        config: config.entries().clone(),
        images: images?,
        thermal: thermal?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::{save_model, train, Label, TrainConfig};
    use crate::raster::io::{save_gray, save_png};
    use crate::synth;

    fn config_for(dir: &Path) -> PipelineConfig {
        let mut c = PipelineConfig::default();
        c.set("input.dir", dir.to_str().unwrap()).unwrap();
        c.set("structures.gabor_pca", "false").unwrap();
        c
    }

    #[test]
    fn empty_directory_gives_empty_report() {
        let tmp = tempfile::tempdir().unwrap();
        let r = run_pipeline(&config_for(tmp.path())).unwrap();
        assert!(r.images.is_empty() && r.thermal.is_empty());
        assert_eq!(r.schema, SCHEMA);
        assert_eq!(r.config.len(), KEYS.len());
    }

    #[test]
    fn classify_without_model_fails_before_processing() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = config_for(tmp.path());
        c.set("stages.classify", "true").unwrap();
        assert!(matches!(run_pipeline(&c), Err(Error::Config(_))));
        c.set("classify.model", tmp.path().join("missing.bin").to_str().unwrap()).unwrap();
        assert!(matches!(run_pipeline(&c), Err(Error::Config(_))));
    }

    #[test]
    fn thermal_inputs_are_summarised() {
        let tmp = tempfile::tempdir().unwrap();
        let (disc, _) = synth::thermal_disc(64, 48, (30.0, 20.0), 8.0, 0.1, 0.9);
        let p = tmp.path().join("frame.png");
        save_gray(&disc, &p).unwrap();
        let mut c = PipelineConfig::default();
        c.set("input.thermal", p.to_str().unwrap()).unwrap();
        let r = run_pipeline(&c).unwrap();
        assert_eq!(r.thermal.len(), 1);
        assert_eq!(r.thermal[0].components.len(), 1);
    }

    #[test]
    fn end_to_end_scene() {
        let data = synth::toy_dataset(3, 150, 0);
        let cfg = TrainConfig { epochs: 10, ..TrainConfig::default() };
        let model = train(&CnnModel::new(3), &data, &cfg).unwrap().model;
        let tmp = tempfile::tempdir().unwrap();
        let model_path = tmp.path().join("model.bin");
        save_model(&model, &model_path).unwrap();
        let in_dir = tmp.path().join("in");
        std::fs::create_dir(&in_dir).unwrap();
        let scene = synth::inspection_scene(1);
        save_png(&scene.image, in_dir.join("scene.png")).unwrap();

        let mut c = config_for(&in_dir);
        c.set("stages.classify", "true").unwrap();
        c.set("classify.model", model_path.to_str().unwrap()).unwrap();
        c.set("clearance.meter_per_pixel", &scene.meter_per_pixel.to_string()).unwrap();
        c.set("jobs", "2").unwrap();
        let a = run_pipeline(&c).unwrap();
        let img = &a.images[0];
        let clearance = img.clearance.as_ref().expect("clearance report");
        assert!(!clearance.sides.is_empty());
        let survivors = img.classified.as_ref().unwrap();
        let on_bar = |r: &ClassifiedRegion| {
            r.label == Label::Insulator
                && scene.insulators.iter().any(|o| crate::proposal::iou(&o.bbox, &r.region.bbox) >= 0.5)
        };
        assert!(survivors.iter().any(on_bar), "{survivors:?}");
        // survivors keep input order
        let proposals = img.proposals.as_ref().unwrap();
        let mut it = proposals.iter();
        assert!(survivors.iter().all(|s| it.any(|p| *p == s.region)));

        let b = run_pipeline(&c).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }
}
