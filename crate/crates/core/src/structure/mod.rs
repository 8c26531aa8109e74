//! Transfer-tower and transfer-line detection.
//!
//! Two independent routes find the towers: Canny edges followed by a Hough
//! line transform, and a Gabor texture bank reduced by PCA. The Canny edge
//! map and the binarized PCA image are then combined to confine the lines.

pub mod canny;
pub mod gabor;
pub mod hough;
pub mod pca;

use serde::{Deserialize, Serialize};

pub use canny::{canny, CannyParams};
pub use gabor::{gabor_bank, GaborFeatureStack, GaborParams};
pub use hough::{filter_lines_by_angle, hough_lines, HoughLine, HoughParams};
pub use pca::{pca_project, PcaProjection};

use crate::error::{Error, Result};
use crate::raster::{BitMask, RasterGray};
use crate::thermal::{bin_of, otsu_threshold, Histogram256};

/// Canny output; single-pixel-wide edges.
pub type EdgeMask = BitMask;

/// Intensity of edge pixels in the confined-lines rendering.
pub const LINE_LEVEL: f64 = 0.25;

/// Angular windows `(center°, half-width°)` for the line families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFamilies {
    pub vertical: (f64, f64),
    pub diagonals: [(f64, f64); 2],
}

impl Default for LineFamilies {
    fn default() -> Self {
        Self {
            vertical: (0.0, 10.0),
            diagonals: [(45.0, 15.0), (135.0, 15.0)],
        }
    }
}

impl LineFamilies {
    pub fn verticals(&self, lines: &[HoughLine]) -> Vec<HoughLine> {
        filter_lines_by_angle(lines, self.vertical.0, self.vertical.1)
    }

    /// Lines in either diagonal window, original order kept.
    pub fn diagonals(&self, lines: &[HoughLine]) -> Vec<HoughLine> {
        lines
            .iter()
            .filter(|l| {
                self.diagonals
                    .iter()
                    .any(|&(c, hw)| hough::angular_distance(l.theta_deg, c) <= hw)
            })
            .copied()
            .collect()
    }
}

/// Binarizes a principal-component image: `Some(t)` keeps pixels above `t`,
/// `None` uses Otsu's level over 256 bins. A flat image yields an empty mask.
pub fn tower_mask(pc_image: &RasterGray, threshold: Option<f64>) -> Result<BitMask> {
    let (w, h) = pc_image.dims();
    match threshold {
        Some(t) => {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidParameter(format!(
                    "tower threshold must be in [0, 1], got {t}"
                )));
            }
            Ok(BitMask::from_fn(w, h, |x, y| pc_image.get(x, y) > t))
        }
        None => match otsu_threshold(&Histogram256::from_normalized(pc_image)) {
            Ok(level) => Ok(BitMask::from_fn(w, h, |x, y| {
                bin_of(pc_image.get(x, y)) > level as usize
            })),
            Err(Error::DegenerateHistogram) => Ok(BitMask::new(w, h)),
            Err(e) => Err(e),
        },
    }
}

/// Tower pixels black (0), remaining edge pixels dark (0.25), background
/// white (1).
pub fn confine_transfer_lines(edges: &EdgeMask, towers: &BitMask) -> Result<RasterGray> {
    if edges.dims() != towers.dims() {
        return Err(Error::DimensionMismatch {
            expected: edges.dims(),
            actual: towers.dims(),
        });
    }
    let (w, h) = edges.dims();
    Ok(RasterGray::from_fn(w, h, |x, y| {
        if towers.get(x, y) {
            0.0
        } else if edges.get(x, y) {
            LINE_LEVEL
        } else {
            1.0
        }
    }))
}

/// Gabor bank → normalization → first principal component → tower mask.
pub fn gabor_pca_towers(img: &RasterGray, params: &GaborParams, threshold: Option<f64>) -> Result<(PcaProjection, BitMask)> {
    let stack = gabor_bank(img, params.n_orient, &params.wavelengths)?;
    let pca = pca_project(&stack.normalized(params.spatial_weight), 1)?;
    let mask = tower_mask(pca.image(), threshold)?;
    Ok((pca, mask))
}
