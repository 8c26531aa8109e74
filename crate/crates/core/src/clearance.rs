//! Vegetation extraction and tree-to-tower clearance measured on a virtual
//! façade of vertical segments hung between two diagonal lines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::io::{Annotation, RED, WHITE, YELLOW};
use crate::raster::{to_gray, BitMask, RasterRgb};
use crate::structure::{canny, hough_lines, CannyParams, EdgeMask, HoughLine, HoughParams, LineFamilies};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreenThresholds {
    pub gr_th: u8,
    pub min_th: u8,
    pub max_th: u8,
}

impl Default for GreenThresholds {
    fn default() -> Self {
        Self {
            gr_th: 100,
            min_th: 80,
            max_th: 150,
        }
    }
}

impl GreenThresholds {
    pub fn validate(&self) -> Result<()> {
        if self.min_th > self.max_th {
            return Err(Error::InvalidParameter(format!(
                "green thresholds need min_th <= max_th, got {} > {}",
                self.min_th, self.max_th
            )));
        }
        Ok(())
    }

    pub fn is_green(&self, [r, g, b]: [u8; 3]) -> bool {
        g > self.gr_th && ((r < self.min_th && b < self.max_th) || (b < self.min_th && r < self.max_th))
    }
}

pub fn green_mask(img: &RasterRgb, t: &GreenThresholds) -> BitMask {
    BitMask::from_fn(img.width(), img.height(), |x, y| t.is_green(img.get(x, y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FacadeConfig {
    /// Odd number of façade segments per side.
    pub n_points: usize,
    pub meter_per_pixel: f64,
    /// Where the horizontal measurement is taken along the middle segment,
    /// 0 at the upper line and 1 at the lower line.
    pub measure_fraction: f64,
}

impl Default for FacadeConfig {
    fn default() -> Self {
        Self {
            n_points: 5,
            meter_per_pixel: 0.05,
            measure_fraction: 0.5,
        }
    }
}

impl FacadeConfig {
    pub fn validate(&self) -> Result<()> {
        check_odd(self.n_points)?;
        if !(self.meter_per_pixel > 0.0 && self.meter_per_pixel.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "meter_per_pixel must be positive, got {}",
                self.meter_per_pixel
            )));
        }
        if !(0.0..=1.0).contains(&self.measure_fraction) {
            return Err(Error::InvalidParameter(format!(
                "measure_fraction must be in [0, 1], got {}",
                self.measure_fraction
            )));
        }
        Ok(())
    }
}

fn check_odd(n: usize) -> Result<()> {
    if n % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "façade point count must be odd, got {n}"
        )));
    }
    Ok(())
}

/// Interior points `C_k = P + k·(Q − P)/(n + 1)`, `k = 1..=n`.
pub fn facade_points(p: (f64, f64), q: (f64, f64), n: usize) -> Result<Vec<(f64, f64)>> {
    check_odd(n)?;
    if p == q {
        return Err(Error::Geometry("façade endpoints coincide".into()));
    }
    let step = ((q.0 - p.0) / (n + 1) as f64, (q.1 - p.1) / (n + 1) as f64);
    Ok((1..=n)
        .map(|k| (p.0 + k as f64 * step.0, p.1 + k as f64 * step.1))
        .collect())
}

/// Vertical façade segment from the upper line (`y0`) to the lower line (`y1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FacadeSegment {
    pub x: f64,
    pub y0: f64,
    pub y1: f64,
}

/// Façade over the upper line's span inside the whole image.
pub fn facade_segments(upper: &HoughLine, lower: &HoughLine, n: usize, dims: (usize, usize)) -> Result<Vec<FacadeSegment>> {
    let (w, h) = dims;
    if w == 0 || h == 0 {
        return Err(Error::InvalidRaster("empty image".into()));
    }
    facade_segments_in(upper, lower, n, (0.0, (w - 1) as f64), (h - 1) as f64)
}

/// Façade over the upper line's span inside `x_range × [0, max_y]`.
fn facade_segments_in(upper: &HoughLine, lower: &HoughLine, n: usize, x_range: (f64, f64), max_y: f64) -> Result<Vec<FacadeSegment>> {
    check_odd(n)?;
    if upper.y_at(0.0).is_none() || lower.y_at(0.0).is_none() {
        return Err(Error::Geometry("façade diagonals must not be vertical".into()));
    }
    let (p, q) = upper
        .clip(x_range.0, 0.0, x_range.1, max_y)
        .ok_or_else(|| Error::Geometry("upper line misses the image".into()))?;
    facade_points(p, q, n)?
        .into_iter()
        .map(|(x, y0)| {
            let y1 = lower
                .y_at(x)
                .ok_or_else(|| Error::Geometry("lower line is vertical".into()))?;
            Ok(FacadeSegment { x, y0, y1 })
        })
        .collect()
}

pub fn clearance_distance(tower_x: f64, middle_segment_x: f64, meter_per_pixel: f64) -> f64 {
    (middle_segment_x - tower_x).abs() * meter_per_pixel
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideReport {
    pub side: Side,
    pub upper: HoughLine,
    pub lower: HoughLine,
    pub segments: Vec<FacadeSegment>,
    /// Row of the horizontal measurement line.
    pub measure_y: f64,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearanceReport {
    pub tower_lines: Vec<HoughLine>,
    /// Mean column of the tower lines at mid-height.
    pub tower_x: f64,
    pub sides: Vec<SideReport>,
    pub green_fraction: f64,
}

impl ClearanceReport {
    /// Red tower and diagonal lines, yellow dotted façade segments, white
    /// dotted measurement lines.
    pub fn annotations(&self, dims: (usize, usize)) -> Vec<Annotation> {
        let (w, h) = (dims.0 as f64 - 1.0, dims.1 as f64 - 1.0);
        let mut out = Vec::new();
        let mut full_line = |l: &HoughLine, color| {
            if let Some((a, b)) = l.clip(0.0, 0.0, w, h) {
                out.push(Annotation::Line {
                    x0: a.0,
                    y0: a.1,
                    x1: b.0,
                    y1: b.1,
                    color,
                    dotted: false,
                });
            }
        };
        for l in &self.tower_lines {
            full_line(l, RED);
        }
        for s in &self.sides {
            full_line(&s.upper, RED);
            full_line(&s.lower, RED);
        }
        for s in &self.sides {
            for seg in &s.segments {
                out.push(Annotation::Line {
                    x0: seg.x,
                    y0: seg.y0,
                    x1: seg.x,
                    y1: seg.y1,
                    color: YELLOW,
                    dotted: true,
                });
            }
            let mid = s.segments[s.segments.len() / 2];
            out.push(Annotation::Line {
                x0: self.tower_x,
                y0: s.measure_y,
                x1: mid.x,
                y1: s.measure_y,
                color: WHITE,
                dotted: true,
            });
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearanceParams {
    pub canny: CannyParams,
    pub hough: HoughParams,
    pub families: LineFamilies,
    pub facade: FacadeConfig,
    pub green: GreenThresholds,
    /// Vertical lines within this many pixels of the strongest one belong to
    /// the same tower.
    pub tower_merge_px: f64,
    /// Diagonals closer than this in ρ (and 3° in θ) are the two borders of
    /// one drawn line and get merged.
    pub line_merge_px: f64,
}

impl Default for ClearanceParams {
    fn default() -> Self {
        Self {
            canny: CannyParams::default(),
            hough: HoughParams::default(),
            families: LineFamilies::default(),
            facade: FacadeConfig::default(),
            green: GreenThresholds::default(),
            tower_merge_px: 12.0,
            line_merge_px: 6.0,
        }
    }
}

const MERGE_THETA_DEG: f64 = 3.0;

/// Greedy vote-weighted merge of near-duplicate lines; input sorted by votes.
fn merge_lines(lines: &[HoughLine], rho_px: f64) -> Vec<HoughLine> {
    let mut groups: Vec<Vec<HoughLine>> = Vec::new();
    for l in lines {
        let hit = groups.iter_mut().find(|g| {
            let lead = g[0];
            (lead.theta_deg - l.theta_deg).abs() <= MERGE_THETA_DEG && (lead.rho - l.rho).abs() <= rho_px
        });
        match hit {
            Some(g) => g.push(*l),
            None => groups.push(vec![*l]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let total: f64 = g.iter().map(|l| l.votes as f64).sum::<f64>().max(1.0);
            let rho = g.iter().map(|l| l.rho * l.votes as f64).sum::<f64>() / total;
            let theta = g.iter().map(|l| l.theta_deg * l.votes as f64).sum::<f64>() / total;
            HoughLine::new(rho, theta, g.iter().map(|l| l.votes).sum())
        })
        .collect()
}

fn side_support(edges: &EdgeMask, line: &HoughLine, tower_x: f64) -> (usize, usize) {
    let (mut left, mut right) = (0, 0);
    for y in 0..edges.height() {
        for x in 0..edges.width() {
            if edges.get(x, y) && line.distance(x as f64, y as f64) <= 1.5 {
                if (x as f64) < tower_x {
                    left += 1;
                } else {
                    right += 1;
                }
            }
        }
    }
    (left, right)
}

/// Canny → Hough → tower and diagonal families → façade per side →
/// clearance at the middle segment, plus the green share of the corridors.
pub fn clearance_report(img: &RasterRgb, params: &ClearanceParams) -> Result<ClearanceReport> {
    params.facade.validate()?;
    params.green.validate()?;
    let (w, h) = img.dims();
    let gray = to_gray(img);
    let edges = canny(&gray, &params.canny)?;
    let lines = hough_lines(
        &edges,
        params.hough.rho_res,
        params.hough.theta_res,
        params.hough.effective_min_votes(h),
    )?;
    let mid_y = (h as f64 - 1.0) / 2.0;

    let verticals = params.families.verticals(&lines);
    let lead = *verticals.first().ok_or(Error::NoTowerLine)?;
    let lead_x = lead.x_at(mid_y).ok_or(Error::NoTowerLine)?;
    let tower_lines: Vec<HoughLine> = verticals
        .into_iter()
        .filter(|l| l.x_at(mid_y).is_some_and(|x| (x - lead_x).abs() <= params.tower_merge_px))
        .collect();
    let tower_x_at = |y: f64| {
        let xs: Vec<f64> = tower_lines.iter().filter_map(|l| l.x_at(y)).collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    };
    let tower_x = tower_x_at(mid_y);

    let diagonals = merge_lines(&params.families.diagonals(&lines), params.line_merge_px);
    let mut per_side: [Vec<HoughLine>; 2] = [Vec::new(), Vec::new()];
    for d in diagonals {
        let (l, r) = side_support(&edges, &d, tower_x);
        if l.max(r) == 0 {
            continue;
        }
        per_side[usize::from(r > l)].push(d);
    }

    let xmax = (w - 1) as f64;
    let ymax = (h - 1) as f64;
    let mut sides = Vec::new();
    let mut corridor = BitMask::new(w, h);
    for (side, cands) in [Side::Left, Side::Right].into_iter().zip(per_side) {
        if cands.len() < 2 {
            log::debug!("{side:?} side has {} diagonal(s), skipped", cands.len());
            continue;
        }
        let x_range = match side {
            Side::Left => (0.0, tower_x.clamp(0.0, xmax)),
            Side::Right => (tower_x.clamp(0.0, xmax), xmax),
        };
        let probe = 0.5 * (x_range.0 + x_range.1);
        let (a, b) = (cands[0], cands[1]);
        let ya = a.y_at(probe).ok_or_else(|| Error::Geometry("vertical diagonal".into()))?;
        let yb = b.y_at(probe).ok_or_else(|| Error::Geometry("vertical diagonal".into()))?;
        let (upper, lower) = if ya <= yb { (a, b) } else { (b, a) };
        let segments = facade_segments_in(&upper, &lower, params.facade.n_points, x_range, ymax)?;
        let middle = segments[(params.facade.n_points + 1) / 2 - 1];
        let measure_y = middle.y0 + params.facade.measure_fraction * (middle.y1 - middle.y0);
        let distance_m = clearance_distance(tower_x_at(measure_y), middle.x, params.facade.meter_per_pixel);

        let (x0, x1) = (x_range.0.ceil() as usize, x_range.1.floor() as usize);
        for x in x0..=x1.min(w - 1) {
            let (Some(yu), Some(yl)) = (upper.y_at(x as f64), lower.y_at(x as f64)) else {
                continue;
            };
            let lo = yu.min(yl).max(0.0).ceil() as usize;
            let hi = yu.max(yl).min(ymax);
            if hi < 0.0 {
                continue;
            }
            for y in lo..=(hi.floor() as usize) {
                corridor.set(x, y, true);
            }
        }
        sides.push(SideReport {
            side,
            upper,
            lower,
            segments,
            measure_y,
            distance_m,
        });
    }

    let corridor_px = corridor.count();
    let green_fraction = if corridor_px == 0 {
        0.0
    } else {
        let green = green_mask(img, &params.green);
        let hits = corridor
            .bits()
            .iter()
            .zip(green.bits())
            .filter(|(c, g)| **c && **g)
            .count();
        hits as f64 / corridor_px as f64
    };

    Ok(ClearanceReport {
        tower_lines,
        tower_x,
        sides,
        green_fraction,
    })
}
