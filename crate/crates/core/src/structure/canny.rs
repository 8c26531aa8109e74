use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::filter::{central_gradients, gaussian_blur};
use crate::raster::{BitMask, RasterGray};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CannyParams {
    pub sigma: f64,
    /// Hysteresis thresholds as fractions of the maximum gradient magnitude.
    pub low: f64,
    pub high: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            sigma: 1.4,
            low: 0.1,
            high: 0.25,
        }
    }
}

impl CannyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "canny sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(0.0 < self.low && self.low < self.high && self.high <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "canny thresholds must satisfy 0 < low < high <= 1, got low={} high={}",
                self.low, self.high
            )));
        }
        Ok(())
    }
}

/// Neighbor offsets along the gradient for the four quantized directions.
const DIRS: [(isize, isize); 4] = [(1, 0), (1, 1), (0, 1), (-1, 1)];

fn quantize_direction(gx: f64, gy: f64) -> usize {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    (((angle + 22.5) / 45.0).floor() as usize) % 4
}

/// Gaussian smoothing, central-difference gradient, non-maximum suppression
/// over 8 neighbors and hysteresis linking.
///
/// On a flat ridge the pixel further along the gradient wins, so a step
/// edge yields a single line.
pub fn canny(img: &RasterGray, params: &CannyParams) -> Result<BitMask> {
    params.validate()?;
    let (w, h) = img.dims();
    let smoothed = gaussian_blur(img, params.sigma);
    let (gx, gy) = central_gradients(&smoothed);
    let mag: Vec<f64> = gx
        .data()
        .iter()
        .zip(gy.data())
        .map(|(a, b)| a.hypot(*b))
        .collect();
    let max = mag.iter().copied().fold(0.0, f64::max);
    if max <= 1e-12 {
        return Ok(BitMask::new(w, h));
    }
    let at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };

    let mut thin = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let m = mag[y * w + x];
            if m <= 0.0 {
                continue;
            }
            let (dx, dy) = DIRS[quantize_direction(gx.get(x, y), gy.get(x, y))];
            let (xi, yi) = (x as isize, y as isize);
            let ahead = at(xi + dx, yi + dy);
            let behind = at(xi - dx, yi - dy);
            if m > ahead && m >= behind {
                thin[y * w + x] = m;
            }
        }
    }

    let high = params.high * max;
    let low = params.low * max;
    let mut out = BitMask::new(w, h);
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if thin[y * w + x] >= high && !out.get(x, y) {
                out.set(x, y, true);
                stack.push((x, y));
                while let Some((cx, cy)) = stack.pop() {
                    for ny in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
                        for nx in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                            if !out.get(nx, ny) && thin[ny * w + nx] >= low {
                                out.set(nx, ny, true);
                                stack.push((nx, ny));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn blank_image_has_no_edges() {
        let out = canny(&RasterGray::filled(32, 32, 0.5), &CannyParams::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn threshold_order_is_checked() {
        let img = RasterGray::zeros(8, 8);
        for (low, high) in [(0.3, 0.2), (0.0, 0.5), (0.2, 1.5), (0.2, 0.2)] {
            let p = CannyParams { sigma: 1.0, low, high };
            assert!(matches!(canny(&img, &p), Err(Error::InvalidParameter(_))));
        }
        let p = CannyParams { sigma: 0.0, ..CannyParams::default() };
        assert!(canny(&img, &p).is_err());
    }

    #[test]
    fn vertical_step_gives_one_pixel_per_row() {
        let img = RasterGray::from_fn(64, 64, |x, _| if x >= 32 { 1.0 } else { 0.0 });
        let out = canny(&img, &CannyParams::default()).unwrap();
        for y in 0..64 {
            let cols: Vec<usize> = (0..64).filter(|&x| out.get(x, y)).collect();
            assert_eq!(cols.len(), 1, "row {y}: {cols:?}");
            assert!(cols[0] == 31 || cols[0] == 32);
        }
    }

    #[test]
    fn edges_are_thin_across_the_gradient() {
        let (img, _) = synth::thermal_disc(64, 64, (31.3, 30.7), 14.0, 0.1, 0.8);
        let smoothed = gaussian_blur(&img, 1.4);
        let (gx, gy) = central_gradients(&smoothed);
        let out = canny(&img, &CannyParams::default()).unwrap();
        assert!(out.count() > 40);
        for y in 1..63 {
            for x in 1..63 {
                if !out.get(x, y) {
                    continue;
                }
                let (dx, dy) = DIRS[quantize_direction(gx.get(x, y), gy.get(x, y))];
                let a = out.get((x as isize + dx) as usize, (y as isize + dy) as usize);
                let b = out.get((x as isize - dx) as usize, (y as isize - dy) as usize);
                assert!(!(a && b), "run of three edge pixels across ({x},{y})");
            }
        }
    }
}
