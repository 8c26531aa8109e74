use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::BitMask;

/// Line in normal form `x·cos θ + y·sin θ = ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoughLine {
    pub rho: f64,
    /// Normal angle in degrees, `[0, 180)`. 0° is a vertical line.
    pub theta_deg: f64,
    pub votes: u32,
}

const AXIS_EPS: f64 = 1e-9;

impl HoughLine {
    pub fn new(rho: f64, theta_deg: f64, votes: u32) -> Self {
        let mut l = Self {
            rho,
            theta_deg,
            votes,
        };
        l.canonicalize();
        l
    }

    /// Line `y = intercept + slope·x`.
    pub fn from_slope_intercept(intercept: f64, slope: f64) -> Self {
        let norm = (1.0 + slope * slope).sqrt();
        let theta = (1.0f64).atan2(-slope).to_degrees();
        Self::new(intercept / norm, theta, 0)
    }

    /// Vertical line `x = x0`.
    pub fn vertical(x0: f64) -> Self {
        Self::new(x0, 0.0, 0)
    }

    fn canonicalize(&mut self) {
        let mut t = self.theta_deg.rem_euclid(360.0);
        let mut r = self.rho;
        if t >= 180.0 {
            t -= 180.0;
            r = -r;
        }
        self.theta_deg = t;
        self.rho = r;
    }

    fn cos_sin(&self) -> (f64, f64) {
        let t = self.theta_deg.to_radians();
        (t.cos(), t.sin())
    }

    /// `y` on the line at column `x`; `None` for vertical lines.
    pub fn y_at(&self, x: f64) -> Option<f64> {
        let (c, s) = self.cos_sin();
        (s.abs() > AXIS_EPS).then(|| (self.rho - x * c) / s)
    }

    /// `x` on the line at row `y`; `None` for horizontal lines.
    pub fn x_at(&self, y: f64) -> Option<f64> {
        let (c, s) = self.cos_sin();
        (c.abs() > AXIS_EPS).then(|| (self.rho - y * s) / c)
    }

    /// Perpendicular distance from a point.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let (c, s) = self.cos_sin();
        (x * c + y * s - self.rho).abs()
    }

    /// Segment of the line inside `[x0, x1] × [y0, y1]`, ordered by
    /// increasing `x` (then `y`).
    pub fn clip(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> Option<((f64, f64), (f64, f64))> {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(4);
        let tol = 1e-9;
        let inside = |p: (f64, f64)| {
            p.0 >= x0 - tol && p.0 <= x1 + tol && p.1 >= y0 - tol && p.1 <= y1 + tol
        };
        for x in [x0, x1] {
            if let Some(y) = self.y_at(x) {
                pts.push((x, y));
            }
        }
        for y in [y0, y1] {
            if let Some(x) = self.x_at(y) {
                pts.push((x, y));
            }
        }
        pts.retain(|&p| inside(p));
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pts.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
        match pts.len() {
            0 => None,
            1 => Some((pts[0], pts[0])),
            n => Some((pts[0], pts[n - 1])),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoughParams {
    pub rho_res: f64,
    pub theta_res: f64,
    /// Minimum accumulator count; `None` means 0.3 × image height.
    pub min_votes: Option<u32>,
}

impl Default for HoughParams {
    fn default() -> Self {
        Self {
            rho_res: 1.0,
            theta_res: 1.0,
            min_votes: None,
        }
    }
}

impl HoughParams {
    pub fn effective_min_votes(&self, height: usize) -> u32 {
        self.min_votes
            .unwrap_or_else(|| ((0.3 * height as f64).round() as u32).max(1))
    }
}

/// Vote accumulator over `(θ, ρ)` bins.
pub struct Accumulator {
    pub n_theta: usize,
    pub n_rho: usize,
    pub rho_res: f64,
    pub theta_res: f64,
    /// Half-range of ρ; bin `i` is centered on `i·rho_res − rho_max`.
    pub rho_max: f64,
    pub votes: Vec<u32>,
}

impl Accumulator {
    pub fn rho_of(&self, i: usize) -> f64 {
        i as f64 * self.rho_res - self.rho_max
    }

    pub fn theta_of(&self, t: usize) -> f64 {
        t as f64 * self.theta_res
    }

    #[inline]
    pub fn get(&self, t: usize, r: usize) -> u32 {
        self.votes[t * self.n_rho + r]
    }
}

pub fn accumulate(edges: &BitMask, rho_res: f64, theta_res: f64) -> Result<Accumulator> {
    if !(rho_res > 0.0 && theta_res > 0.0) {
        return Err(Error::InvalidParameter(
            "hough resolutions must be positive".into(),
        ));
    }
    let (w, h) = edges.dims();
    let diag = ((w * w + h * h) as f64).sqrt();
    let steps = (diag / rho_res).ceil();
    let rho_max = steps * rho_res;
    let n_rho = 2 * steps as usize + 1;
    let n_theta = ((180.0 / theta_res).round() as usize).max(1);
    let trig: Vec<(f64, f64)> = (0..n_theta)
        .map(|t| {
            let a = (t as f64 * theta_res).to_radians();
            (a.cos(), a.sin())
        })
        .collect();
    let mut votes = vec![0u32; n_theta * n_rho];
    for y in 0..h {
        for x in 0..w {
            if !edges.get(x, y) {
                continue;
            }
            for (t, &(c, s)) in trig.iter().enumerate() {
                let rho = x as f64 * c + y as f64 * s;
                let r = ((rho + rho_max) / rho_res).round() as usize;
                votes[t * n_rho + r] += 1;
            }
        }
    }
    Ok(Accumulator {
        n_theta,
        n_rho,
        rho_res,
        theta_res,
        rho_max,
        votes,
    })
}

/// Accumulator peaks that dominate their 3×3 `(θ, ρ)` neighborhood, sorted by
/// votes descending. θ wraps at 180° with ρ mirrored.
pub fn hough_lines(edges: &BitMask, rho_res: f64, theta_res: f64, min_votes: u32) -> Result<Vec<HoughLine>> {
    if min_votes < 1 {
        return Err(Error::InvalidParameter("min_votes must be at least 1".into()));
    }
    let acc = accumulate(edges, rho_res, theta_res)?;
    if edges.is_empty() {
        return Ok(Vec::new());
    }
    let (nt, nr) = (acc.n_theta as isize, acc.n_rho as isize);
    let mut lines = Vec::new();
    for t in 0..nt {
        for r in 0..nr {
            let v = acc.get(t as usize, r as usize);
            if v < min_votes {
                continue;
            }
            let here = t * nr + r;
            let mut is_peak = true;
            'nb: for dt in -1..=1 {
                for dr in -1..=1 {
                    if dt == 0 && dr == 0 {
                        continue;
                    }
                    let mut tt = t + dt;
                    let mut rr = r + dr;
                    if tt < 0 || tt >= nt {
                        tt = tt.rem_euclid(nt);
                        rr = nr - 1 - rr;
                    }
                    if rr < 0 || rr >= nr {
                        continue;
                    }
                    let nv = acc.get(tt as usize, rr as usize);
                    let there = tt * nr + rr;
                    if nv > v || (nv == v && there < here) {
                        is_peak = false;
                        break 'nb;
                    }
                }
            }
            if is_peak {
                lines.push(HoughLine {
                    rho: acc.rho_of(r as usize),
                    theta_deg: acc.theta_of(t as usize),
                    votes: v,
                });
            }
        }
    }
    lines.sort_by(|a, b| {
        b.votes
            .cmp(&a.votes)
            .then(a.theta_deg.total_cmp(&b.theta_deg))
            .then(a.rho.total_cmp(&b.rho))
    });
    Ok(lines)
}

/// Angular distance on the 180°-periodic circle of line orientations.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

/// Lines whose θ lies within `half_window` of `center`, order kept.
pub fn filter_lines_by_angle(lines: &[HoughLine], center_deg: f64, half_window_deg: f64) -> Vec<HoughLine> {
    lines
        .iter()
        .filter(|l| angular_distance(l.theta_deg, center_deg) <= half_window_deg)
        .copied()
        .collect()
}
