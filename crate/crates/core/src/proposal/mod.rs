//! Region proposals from the detail subbands of a one-level wavelet
//! transform.
//!
//! For each of the vertical and horizontal subbands the strongest remaining
//! coefficient seeds a square window that grows until its spectral entropy
//! settles. Coefficients around the seed whose normalized local energy is
//! close to the seed's are grouped, and the group's bounding box becomes a
//! proposal and is suppressed for the following rounds.

pub mod dwt;
pub mod ripple;

use serde::{Deserialize, Serialize};

pub use dwt::{dwt2_level1, idwt2_level1, SubbandSet, Wavelet};
pub use ripple::{group_by_nfc, grow_ripple, nfc, ripple_entropy, salient_pixel, Coord, RippleParams, RippleState};

use crate::error::{Error, Result};
use crate::raster::io::{Annotation, RED, YELLOW};
use crate::raster::{BitMask, RasterGray};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subband {
    Vertical,
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalParams {
    pub wavelet: Wavelet,
    /// Grouping tolerance, relative to the seed's normalized energy.
    pub e_max: f64,
    /// Regions emitted per subband at most.
    pub max_regions: usize,
    pub max_radius: usize,
    pub entropy_plateau_eps: f64,
    pub plateau_steps: usize,
    /// Smallest box area kept, in image pixels.
    pub min_region_px: usize,
    /// Half-width of the box over which coefficient energy is pooled
    /// before grouping.
    pub pool_radius: usize,
    /// Seeds weaker than this fraction of the subband's peak end the search.
    pub min_seed_ratio: f64,
}

impl Default for ProposalParams {
    fn default() -> Self {
        Self {
            wavelet: Wavelet::Haar,
            e_max: 0.8,
            max_regions: 16,
            max_radius: 32,
            entropy_plateau_eps: 1e-3,
            plateau_steps: 3,
            min_region_px: 64,
            pool_radius: 1,
            min_seed_ratio: 0.05,
        }
    }
}

impl ProposalParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.e_max > 0.0) {
            return bad("e_max must be positive");
        }
        if self.max_regions == 0 {
            return bad("max_regions must be at least 1");
        }
        if self.max_radius == 0 || self.plateau_steps == 0 {
            return bad("max_radius and plateau_steps must be at least 1");
        }
        if !(self.entropy_plateau_eps > 0.0) {
            return bad("entropy_plateau_eps must be positive");
        }
        if !(0.0..1.0).contains(&self.min_seed_ratio) {
            return bad("min_seed_ratio must be in [0, 1)");
        }
        Ok(())
    }

    pub fn ripple(&self) -> RippleParams {
        RippleParams {
            max_radius: self.max_radius,
            entropy_plateau_eps: self.entropy_plateau_eps,
            plateau_steps: self.plateau_steps,
        }
    }
}

/// Axis-aligned box `[x, y, w, h]` in image pixels.
pub type BBox = [usize; 4];

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a[0] + a[2]).min(b[0] + b[2]).saturating_sub(a[0].max(b[0]));
    let iy = (a[1] + a[3]).min(b[1] + b[3]).saturating_sub(a[1].max(b[1]));
    let inter = (ix * iy) as f64;
    let union = (a[2] * a[3] + b[2] * b[3]) as f64 - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalRegion {
    pub bbox: BBox,
    pub subband: Subband,
    pub seed: Coord,
    pub entropy: f64,
    pub nfc_seed: f64,
}

pub fn region_annotations(regions: &[ProposalRegion]) -> Vec<Annotation> {
    regions
        .iter()
        .map(|r| Annotation::Rect {
            x: r.bbox[0],
            y: r.bbox[1],
            w: r.bbox[2],
            h: r.bbox[3],
            color: match r.subband {
                Subband::Vertical => RED,
                Subband::Horizontal => YELLOW,
            },
        })
        .collect()
}

/// Root-mean-square of the coefficients in a `(2p+1)²` box, clipped.
fn pooled_energy(detail: &RasterGray, p: usize) -> RasterGray {
    let (w, h) = detail.dims();
    let sq: Vec<f64> = detail.data().iter().map(|v| v * v).collect();
    // summed-area table
    let mut sat = vec![0.0; (w + 1) * (h + 1)];
    for y in 0..h {
        for x in 0..w {
            sat[(y + 1) * (w + 1) + x + 1] =
                sq[y * w + x] + sat[y * (w + 1) + x + 1] + sat[(y + 1) * (w + 1) + x] - sat[y * (w + 1) + x];
        }
    }
    RasterGray::from_fn(w, h, |x, y| {
        let (x0, y0) = (x.saturating_sub(p), y.saturating_sub(p));
        let (x1, y1) = ((x + p + 1).min(w), (y + p + 1).min(h));
        let s = sat[y1 * (w + 1) + x1] - sat[y0 * (w + 1) + x1] - sat[y1 * (w + 1) + x0] + sat[y0 * (w + 1) + x0];
        (s.max(0.0) / ((x1 - x0) * (y1 - y0)) as f64).sqrt()
    })
}

fn propose_in_subband(detail: &RasterGray, which: Subband, dims: (usize, usize), p: &ProposalParams) -> Result<Vec<ProposalRegion>> {
    let (sw, sh) = detail.dims();
    let peak = detail.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (peak * p.min_seed_ratio).max(1e-9);
    let pooled = pooled_energy(detail, p.pool_radius);
    let mut suppressed = BitMask::new(sw, sh);
    let mut out = Vec::new();
    let max_attempts = 4 * p.max_regions;

    for _ in 0..max_attempts {
        if out.len() >= p.max_regions {
            break;
        }
        let seed = match salient_pixel(detail, &suppressed) {
            Ok(s) => s,
            Err(Error::Exhausted) => break,
            Err(e) => return Err(e),
        };
        if detail.get(seed.col, seed.row).abs() <= floor {
            break;
        }
        let ripple = grow_ripple(detail, seed, &p.ripple())?;
        let (r0, c0, rows, cols) = ripple::ripple_window((sw, sh), seed, ripple.radius);
        let window = pooled.crop(c0, r0, cols, rows);
        let norm = window.data().iter().map(|v| v * v).sum::<f64>().sqrt();
        let seed_local = Coord::new(seed.row - r0, seed.col - c0);
        let seed_energy = window.get(seed_local.col, seed_local.row);
        let nfc_seed = if norm > 0.0 { seed_energy / norm } else { 1.0 };
        let relative = window.map(|v| v / seed_energy);
        let excluded = BitMask::from_fn(cols, rows, |x, y| suppressed.get(x + c0, y + r0));
        let group = group_by_nfc(&relative, seed_local, p.e_max, Some(&excluded));

        let (mut rmin, mut rmax, mut cmin, mut cmax) = (usize::MAX, 0, usize::MAX, 0);
        for c in &group {
            rmin = rmin.min(c.row + r0);
            rmax = rmax.max(c.row + r0);
            cmin = cmin.min(c.col + c0);
            cmax = cmax.max(c.col + c0);
        }
        for r in rmin..=rmax {
            for c in cmin..=cmax {
                suppressed.set(c, r, true);
            }
        }
        let x = (2 * cmin).min(dims.0);
        let y = (2 * rmin).min(dims.1);
        let bw = (2 * (cmax + 1)).min(dims.0) - x;
        let bh = (2 * (rmax + 1)).min(dims.1) - y;
        if bw * bh < p.min_region_px {
            continue;
        }
        out.push(ProposalRegion {
            bbox: [x, y, bw, bh],
            subband: which,
            seed,
            entropy: ripple.entropy(),
            nfc_seed,
        });
    }
    Ok(out)
}

/// Proposals from the vertical subband followed by those from the
/// horizontal subband, each in extraction order.
pub fn propose_regions(img: &RasterGray, p: &ProposalParams) -> Result<Vec<ProposalRegion>> {
    p.validate()?;
    let bands = dwt2_level1(img, p.wavelet)?;
    let dims = img.dims();
    let (v, h) = rayon::join(
        || propose_in_subband(&bands.vertical, Subband::Vertical, dims, p),
        || propose_in_subband(&bands.horizontal, Subband::Horizontal, dims, p),
    );
    let mut out = v?;
    out.extend(h?);
    Ok(out)
}
