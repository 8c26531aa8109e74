//! Flat `section.key = value` configuration.
//!
//! Every key has a default; file values and then command-line overrides
//! replace them. The effective map is echoed verbatim into reports.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::clearance::{ClearanceParams, FacadeConfig, GreenThresholds};
use crate::cnn::TrainConfig;
use crate::error::{Error, Result};
use crate::proposal::{ProposalParams, Wavelet};
use crate::structure::{CannyParams, GaborParams, HoughParams, LineFamilies};
use crate::thermal::ThermalParams;

/// `(key, default, description)` for every recognised key.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("seed", "7", "seed for model initialisation and training order"),
    ("jobs", "4", "worker threads for batch processing"),
    ("input.dir", "", "directory of inspection images (PNG/PGM/PPM)"),
    ("input.thermal", "", "thermal image or directory of them"),
    ("output.dir", "out", "directory for PNG and JSON artifacts"),
    ("stages.thermal", "true", "run hotspot extraction on thermal inputs"),
    ("stages.structures", "true", "edges, Hough lines and tower mask"),
    ("stages.clearance", "true", "tower-to-vegetation distances"),
    ("stages.propose", "true", "wavelet region proposals"),
    ("stages.classify", "false", "filter proposals with a trained model"),
    ("thermal.center_included", "true", "include the center pixel in the 3x3 sum"),
    ("thermal.edge_threshold", "0.1", "outline threshold, fraction of max gradient"),
    ("structures.canny_sigma", "1.4", "Gaussian smoothing before Canny"),
    ("structures.canny_low", "0.1", "low hysteresis threshold, fraction of max gradient"),
    ("structures.canny_high", "0.25", "high hysteresis threshold, fraction of max gradient"),
    ("structures.hough_rho_res", "1", "accumulator rho step, pixels"),
    ("structures.hough_theta_res", "1", "accumulator theta step, degrees"),
    ("structures.hough_votes", "auto", "minimum votes per line; auto = 0.3 x image height"),
    ("structures.gabor_pca", "true", "compute the Gabor+PCA tower mask"),
    ("structures.gabor_orients", "6", "Gabor orientations"),
    ("structures.gabor_waves", "4,8,16,32", "Gabor wavelengths, pixels"),
    ("structures.gabor_spatial_weight", "0.125", "weight of the X/Y feature channels"),
    ("clearance.meter_per_pixel", "0.05", "ground sampling distance, meters per pixel"),
    ("clearance.n_points", "5", "facade segments per side (odd)"),
    ("clearance.measure_fraction", "0.5", "position of the measurement along the middle segment"),
    ("clearance.green_gr", "100", "minimum green channel"),
    ("clearance.green_min", "80", "red and blue lower bound"),
    ("clearance.green_max", "150", "red and blue upper bound"),
    ("clearance.tower_merge_px", "12", "vertical lines this close belong to one tower"),
    ("clearance.line_merge_px", "6", "diagonals this close are merged"),
    ("proposal.wavelet", "haar", "haar or db2"),
    ("proposal.e_max", "0.8", "grouping tolerance relative to the seed energy"),
    ("proposal.max_regions", "16", "regions per subband"),
    ("proposal.max_radius", "32", "largest ripple half-width"),
    ("proposal.plateau_eps", "0.001", "entropy change counted as flat"),
    ("proposal.plateau_steps", "3", "flat steps that stop the ripple"),
    ("proposal.min_region_px", "64", "smallest kept box area, pixels"),
    ("proposal.pool_radius", "1", "half-width of the energy pooling box"),
    ("proposal.min_seed_ratio", "0.05", "seeds below this fraction of the peak stop the search"),
    ("classify.model", "", "model file for the classify stage"),
    ("train.epochs", "30", "training epochs"),
    ("train.lr", "0.01", "learning rate"),
    ("train.batch", "16", "mini-batch size"),
    ("train.momentum", "0.9", "momentum coefficient"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    entries: BTreeMap<String, String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            entries: KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self.entries.get_mut(key) {
            Some(slot) => {
                *slot = value.trim().to_string();
                Ok(())
            }
            None => Err(Error::Config(format!("unknown key '{key}'"))),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", n + 1)))?;
            self.set(k.trim(), v).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let mut c = Self::default();
        c.apply_text(&fs::read_to_string(path)?)?;
        Ok(c)
    }

    /// The effective configuration, every key present.
    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    fn raw(&self, key: &str) -> &str {
        self.get(key).unwrap_or_else(|| panic!("key '{key}' missing from the registry"))
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key);
        v.parse()
            .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.raw(key);
        (!v.is_empty()).then(|| PathBuf::from(v))
    }

    /// Typed settings with every module's invariants checked.
    pub fn resolve(&self) -> Result<Settings> {
        let seed: u64 = self.parse("seed")?;
        let jobs: usize = self.parse("jobs")?;
        if jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        let thermal = ThermalParams {
            center_included: self.parse("thermal.center_included")?,
            edge_threshold: self.parse("thermal.edge_threshold")?,
        };
        let canny = CannyParams {
            sigma: self.parse("structures.canny_sigma")?,
            low: self.parse("structures.canny_low")?,
            high: self.parse("structures.canny_high")?,
        };
        let hough = HoughParams {
            rho_res: self.parse("structures.hough_rho_res")?,
            theta_res: self.parse("structures.hough_theta_res")?,
            min_votes: match self.raw("structures.hough_votes") {
                "auto" | "" => None,
                _ => Some(self.parse("structures.hough_votes")?),
            },
        };
        let waves = self
            .raw("structures.gabor_waves")
            .split(',')
            .map(|w| w.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::Config("structures.gabor_waves: expected comma-separated numbers".into()))?;
        let gabor = GaborParams {
            n_orient: self.parse("structures.gabor_orients")?,
            wavelengths: waves,
            spatial_weight: self.parse("structures.gabor_spatial_weight")?,
        };
        let clearance = ClearanceParams {
            canny,
            hough,
            families: LineFamilies::default(),
            facade: FacadeConfig {
                n_points: self.parse("clearance.n_points")?,
                meter_per_pixel: self.parse("clearance.meter_per_pixel")?,
                measure_fraction: self.parse("clearance.measure_fraction")?,
            },
            green: GreenThresholds {
                gr_th: self.parse("clearance.green_gr")?,
                min_th: self.parse("clearance.green_min")?,
                max_th: self.parse("clearance.green_max")?,
            },
            tower_merge_px: self.parse("clearance.tower_merge_px")?,
            line_merge_px: self.parse("clearance.line_merge_px")?,
        };
        let proposal = ProposalParams {
            wavelet: self
                .raw("proposal.wavelet")
                .parse::<Wavelet>()
                .map_err(|e| Error::Config(format!("proposal.wavelet: {e}")))?,
            e_max: self.parse("proposal.e_max")?,
            max_regions: self.parse("proposal.max_regions")?,
            max_radius: self.parse("proposal.max_radius")?,
            entropy_plateau_eps: self.parse("proposal.plateau_eps")?,
            plateau_steps: self.parse("proposal.plateau_steps")?,
            min_region_px: self.parse("proposal.min_region_px")?,
            pool_radius: self.parse("proposal.pool_radius")?,
            min_seed_ratio: self.parse("proposal.min_seed_ratio")?,
        };
        let train = TrainConfig {
            learning_rate: self.parse("train.lr")?,
            epochs: self.parse("train.epochs")?,
            batch_size: self.parse("train.batch")?,
            seed,
            momentum: self.parse("train.momentum")?,
        };
        let s = Settings {
            seed,
            jobs,
            input_dir: self.path("input.dir"),
            thermal_input: self.path("input.thermal"),
            out_dir: self.path("output.dir"),
            stages: Stages {
                thermal: self.parse("stages.thermal")?,
                structures: self.parse("stages.structures")?,
                clearance: self.parse("stages.clearance")?,
                propose: self.parse("stages.propose")?,
                classify: self.parse("stages.classify")?,
            },
            gabor_pca: self.parse("structures.gabor_pca")?,
            thermal,
            gabor,
            clearance,
            proposal,
            model_path: self.path("classify.model"),
            train,
        };
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub thermal: bool,
    pub structures: bool,
    pub clearance: bool,
    pub propose: bool,
    pub classify: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub jobs: usize,
    pub input_dir: Option<PathBuf>,
    pub thermal_input: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub stages: Stages,
    pub gabor_pca: bool,
    pub thermal: ThermalParams,
    pub gabor: GaborParams,
    pub clearance: ClearanceParams,
    pub proposal: ProposalParams,
    pub model_path: Option<PathBuf>,
    pub train: TrainConfig,
}

impl Settings {
    fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        let t = &self.thermal;
        if !(0.0..=1.0).contains(&t.edge_threshold) {
            return Err(Error::Config("thermal.edge_threshold must be in [0, 1]".into()));
        }
        let c = &self.clearance.canny;
        if !(c.sigma > 0.0 && 0.0 <= c.low && c.low <= c.high && c.high <= 1.0) {
            return Err(Error::Config("canny thresholds need 0 <= low <= high <= 1 and sigma > 0".into()));
        }
        let h = &self.clearance.hough;
        if !(h.rho_res > 0.0 && h.theta_res > 0.0) {
            return Err(Error::Config("hough resolutions must be positive".into()));
        }
        let g = &self.gabor;
        if g.n_orient == 0 || g.wavelengths.is_empty() || g.wavelengths.iter().any(|w| !(*w >= 2.0)) {
            return Err(Error::Config("gabor needs at least one orientation and wavelengths >= 2".into()));
        }
        let f = &self.clearance.facade;
        if f.n_points == 0 || f.n_points % 2 == 0 {
            return Err(Error::Config("clearance.n_points must be odd".into()));
        }
        if !(f.meter_per_pixel > 0.0) || !(0.0..=1.0).contains(&f.measure_fraction) {
            return Err(Error::Config("clearance.meter_per_pixel must be positive, measure_fraction in [0, 1]".into()));
        }
        self.clearance.green.validate().map_err(wrap)?;
        self.proposal.validate().map_err(wrap)?;
        self.train.validate().map_err(wrap)?;
        Ok(())
    }

    /// Referenced inputs must exist; the classify stage needs a model.
    pub fn check_paths(&self) -> Result<()> {
        for p in [&self.input_dir, &self.thermal_input].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::MissingFile(p.clone()));
            }
        }
        if self.stages.classify {
            match &self.model_path {
                None => return Err(Error::Config("stages.classify is on but classify.model is not set".into())),
                Some(p) if !p.exists() => {
                    return Err(Error::Config(format!("model file {} does not exist", p.display())))
                }
                _ => {}
            }
        }
        Ok(())
    }
}
