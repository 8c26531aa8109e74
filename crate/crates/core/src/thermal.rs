//! Hotspot extraction from thermal frames.
//!
//! The frame is pre-summed over each pixel's 3×3 neighborhood, min-max
//! normalized, quantized into 256 bins and split with Otsu's threshold.
//! Pixels in bins above the threshold form the hotspot mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::filter::central_gradients;
use crate::raster::{normalize, BitMask, RasterGray};

/// Relative slack under which two between-class variances count as equal.
const OTSU_TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    /// Include the center pixel in the 3×3 sum (9 terms) or only its
    /// eight neighbors.
    pub center_included: bool,
    /// Edge exposure threshold as a fraction of the maximum gradient.
    pub edge_threshold: f64,
}

impl Default for ThermalParams {
    fn default() -> Self {
        Self {
            center_included: true,
            edge_threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram256 {
    counts: [u64; 256],
}

impl Histogram256 {
    pub fn from_counts(counts: [u64; 256]) -> Self {
        Self { counts }
    }

    /// Quantizes `[0, 1]` intensities into 256 uniform bins.
    pub fn from_normalized(img: &RasterGray) -> Self {
        let mut counts = [0u64; 256];
        for &v in img.data() {
            counts[bin_of(v)] += 1;
        }
        Self { counts }
    }

    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[inline]
pub(crate) fn bin_of(v: f64) -> usize {
    ((v.clamp(0.0, 1.0) * 256.0).floor() as usize).min(255)
}

/// O(x,y) = Σ p(i,j) over the 3×3 block around (x,y), replicate border.
/// With `center_included = false` the center term is left out.
pub fn neighborhood_sum(img: &RasterGray, center_included: bool) -> RasterGray {
    let (w, h) = img.dims();
    RasterGray::from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        let mut acc = 0.0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                if !center_included && dx == 0 && dy == 0 {
                    continue;
                }
                acc += img.get_clamped(x + dx, y + dy);
            }
        }
        acc
    })
}

/// Level `t` maximizing the between-class variance of bins `≤ t` versus
/// bins `> t`. A run of equal maximizers resolves to its midpoint, rounded
/// down.
pub fn otsu_threshold(hist: &Histogram256) -> Result<u8> {
    let counts = hist.counts();
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let total: u64 = counts.iter().sum();
    let weighted: u128 = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| i as u128 * c as u128)
        .sum();

    let mut scores = [f64::NEG_INFINITY; 256];
    let mut n0: u64 = 0;
    let mut s0: u128 = 0;
    for t in 0..256 {
        n0 += counts[t];
        s0 += t as u128 * counts[t] as u128;
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        // N²·σ_B² = (N·S0 − n0·S)² / (n0·n1)
        let diff = total as i128 * s0 as i128 - n0 as i128 * weighted as i128;
        let d = diff as f64;
        scores[t] = d * d / (n0 as f64 * n1 as f64);
    }

    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied = |s: f64| s >= best - OTSU_TIE_EPS * best.abs();
    let start = scores
        .iter()
        .position(|&s| tied(s))
        .expect("at least one valid split exists");
    let mut end = start;
    while end + 1 < 256 && tied(scores[end + 1]) {
        end += 1;
    }
    Ok(((start + end) / 2) as u8)
}

/// Pixels of `img` whose preprocessed intensity falls above Otsu's level.
pub fn extract_hotspots(img: &RasterGray, params: &ThermalParams) -> Result<BitMask> {
    let summed = normalize(&neighborhood_sum(img, params.center_included));
    let hist = Histogram256::from_normalized(&summed);
    let t = otsu_threshold(&hist)? as usize;
    let (w, h) = img.dims();
    Ok(BitMask::from_fn(w, h, |x, y| bin_of(summed.get(x, y)) > t))
}

/// Hotspots at 1.0, outlines of other structures at 0.5, background 0.
///
/// Outline pixels are non-hotspot pixels whose central-difference gradient
/// magnitude reaches `edge_threshold` times the image's maximum gradient.
pub fn expose_neighbor_edges(img: &RasterGray, hotspots: &BitMask, edge_threshold: f64) -> Result<RasterGray> {
    if img.dims() != hotspots.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            actual: hotspots.dims(),
        });
    }
    let (gx, gy) = central_gradients(img);
    let mag: Vec<f64> = gx
        .data()
        .iter()
        .zip(gy.data())
        .map(|(a, b)| a.hypot(*b))
        .collect();
    let max = mag.iter().copied().fold(0.0, f64::max);
    let cut = edge_threshold * max;
    let (w, h) = img.dims();
    Ok(RasterGray::from_fn(w, h, |x, y| {
        if hotspots.get(x, y) {
            1.0
        } else if max > 0.0 && mag[y * w + x] >= cut {
            0.5
        } else {
            0.0
        }
    }))
}

/// 8-connected component of a mask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub pixels: usize,
    /// `[x, y, w, h]`
    pub bbox: [usize; 4],
}

pub fn connected_components(mask: &BitMask) -> Vec<Component> {
    let (w, h) = mask.dims();
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for sy in 0..h {
        for sx in 0..w {
            if !mask.get(sx, sy) || seen[sy * w + sx] {
                continue;
            }
            seen[sy * w + sx] = true;
            stack.push((sx, sy));
            let (mut x0, mut y0, mut x1, mut y1) = (sx, sy, sx, sy);
            let mut pixels = 0;
            while let Some((x, y)) = stack.pop() {
                pixels += 1;
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let nx = x as isize + dx;
                        let ny = y as isize + dy;
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if mask.get(nx, ny) && !seen[ny * w + nx] {
                            seen[ny * w + nx] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
            out.push(Component {
                pixels,
                bbox: [x0, y0, x1 - x0 + 1, y1 - y0 + 1],
            });
        }
    }
    out
}
