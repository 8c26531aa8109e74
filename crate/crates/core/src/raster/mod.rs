//! Image containers and the basic pixel operations shared by every stage.
//!
//! Intensities are `f64` in the nominal range `[0, 1]`; 8-bit data only
//! appears at the I/O boundary ([`io`]). Coordinates are `(x, y)` with `x`
//! the column and `y` the row, data stored row-major.

pub mod filter;
pub mod io;
pub mod spectrum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use spectrum::{dft2d, Spectrum2D};

/// Luminance weights applied by [`to_gray`].
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, PartialEq)]
pub struct RasterGray {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RasterGray {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "expected {} samples for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidRaster(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Panics on zero dimensions.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    #[cfg(test)]
    pub(crate) fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Sample with coordinates clamped into the image (replicate border).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Copy of the `w`×`h` block starting at `(x0, y0)`; the block must lie
    /// inside the image.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Self {
        assert!(x0 + w <= self.width && y0 + h <= self.height);
        Self::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterRgb {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
}

impl RasterRgb {
    pub fn new(width: usize, height: usize, data: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        Self {
            width,
            height,
            data: vec![rgb; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Gray raster rendered at 8 bits, replicated into three channels.
    pub fn from_gray(img: &RasterGray) -> Self {
        let data = img
            .data()
            .iter()
            .map(|&v| {
                let b = to_u8(v);
                [b, b, b]
            })
            .collect();
        Self {
            width: img.width(),
            height: img.height(),
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[[u8; 3]] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        self.data[y * self.width + x] = rgb;
    }
}

/// Per-pixel boolean mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BitMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "expected {} bits for {width}x{height}, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Set pixels as 1.0, clear pixels as 0.0.
    pub fn to_gray(&self) -> RasterGray {
        RasterGray::new(
            self.width.max(1),
            self.height.max(1),
            self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        )
        .expect("mask dimensions are valid")
    }
}

/// Odd-sized correlation kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

impl Kernel2D {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows % 2 == 0 || cols % 2 == 0 {
            return Err(Error::InvalidKernel { rows, cols });
        }
        if weights.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "kernel {rows}x{cols} needs {} weights, got {}",
                rows * cols,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("kernel weights must be finite".into()));
        }
        Ok(Self {
            rows,
            cols,
            weights,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.weights[r * self.cols + c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Border {
    #[default]
    Replicate,
    Zero,
}

/// `(0.299 R + 0.587 G + 0.114 B) / 255` per pixel.
pub fn to_gray(img: &RasterRgb) -> RasterGray {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let data = img
        .data()
        .iter()
        .map(|&[r, g, b]| (wr * r as f64 + wg * g as f64 + wb * b as f64) / 255.0)
        .collect();
    RasterGray {
        width: img.width(),
        height: img.height(),
        data,
    }
}

/// Correlates `img` with `k` (no kernel flip); output has the input's size.
pub fn convolve2d(img: &RasterGray, k: &Kernel2D, border: Border) -> RasterGray {
    let (w, h) = img.dims();
    let ry = (k.rows() / 2) as isize;
    let rx = (k.cols() / 2) as isize;
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for ky in 0..k.rows() {
                let sy = y as isize + ky as isize - ry;
                for kx in 0..k.cols() {
                    let sx = x as isize + kx as isize - rx;
                    let v = match border {
                        Border::Replicate => img.get_clamped(sx, sy),
                        Border::Zero => {
                            if sx < 0 || sy < 0 || sx >= w as isize || sy >= h as isize {
                                continue;
                            }
                            img.get(sx as usize, sy as usize)
                        }
                    };
                    acc += k.at(ky, kx) * v;
                }
            }
            out[y * w + x] = acc;
        }
    }
    RasterGray {
        width: w,
        height: h,
        data: out,
    }
}

/// Min-max rescale to `[0, 1]`; a constant image maps to all zeros.
pub fn normalize(img: &RasterGray) -> RasterGray {
    let (lo, hi) = img.min_max();
    let span = hi - lo;
    if span <= 0.0 {
        return RasterGray::zeros(img.width(), img.height());
    }
    img.map(|v| ((v - lo) / span).clamp(0.0, 1.0))
}

pub(crate) fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Bilinear resample to `out_w`×`out_h` using pixel-center alignment.
pub fn resize_bilinear(img: &RasterGray, out_w: usize, out_h: usize) -> RasterGray {
    let sx = img.width() as f64 / out_w as f64;
    let sy = img.height() as f64 / out_h as f64;
    RasterGray::from_fn(out_w, out_h, |x, y| {
        let fx = ((x as f64 + 0.5) * sx - 0.5).max(0.0);
        let fy = ((y as f64 + 0.5) * sy - 0.5).max(0.0);
        let x0 = fx.floor() as isize;
        let y0 = fy.floor() as isize;
        let ax = fx - x0 as f64;
        let ay = fy - y0 as f64;
        let p00 = img.get_clamped(x0, y0);
        let p10 = img.get_clamped(x0 + 1, y0);
        let p01 = img.get_clamped(x0, y0 + 1);
        let p11 = img.get_clamped(x0 + 1, y0 + 1);
        (1.0 - ay) * ((1.0 - ax) * p00 + ax * p10) + ay * ((1.0 - ax) * p01 + ax * p11)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_gray(rng: &mut ChaCha8Rng, w: usize, h: usize) -> RasterGray {
        RasterGray::from_fn(w, h, |_, _| rng.gen::<f64>())
    }

    #[test]
    fn gray_conversion_examples() {
        let img = RasterRgb::new(3, 1, vec![[255, 255, 255], [0, 0, 0], [255, 0, 0]]).unwrap();
        let g = to_gray(&img);
        assert!((g.get(0, 0) - 1.0).abs() < 1e-12);
        assert_eq!(g.get(1, 0), 0.0);
        assert!((g.get(2, 0) - 0.299).abs() < 1e-12);
    }

    #[test]
    fn raster_rejects_bad_shapes() {
        assert!(RasterGray::new(0, 3, vec![]).is_err());
        assert!(RasterGray::new(2, 2, vec![0.0; 3]).is_err());
        assert!(RasterGray::new(1, 1, vec![f64::NAN]).is_err());
        assert!(RasterRgb::new(2, 1, vec![[0, 0, 0]]).is_err());
    }

    #[test]
    fn even_kernel_is_rejected() {
        assert!(matches!(
            Kernel2D::new(2, 3, vec![0.0; 6]),
            Err(Error::InvalidKernel { rows: 2, cols: 3 })
        ));
        assert!(Kernel2D::new(3, 4, vec![0.0; 12]).is_err());
    }

    #[test]
    fn identity_kernel_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = random_gray(&mut rng, 9, 6);
        let k = Kernel2D::new(1, 1, vec![1.0]).unwrap();
        assert_eq!(convolve2d(&img, &k, Border::Replicate), img);
        assert_eq!(convolve2d(&img, &k, Border::Zero), img);
    }

    #[test]
    fn impulse_response_with_zero_border() {
        let img = RasterGray::from_fn(5, 5, |x, y| if x == 2 && y == 2 { 1.0 } else { 0.0 });
        let k = Kernel2D::new(3, 3, vec![1.0; 9]).unwrap();
        let out = convolve2d(&img, &k, Border::Zero);
        for y in 0..5 {
            for x in 0..5 {
                let inside = (1..=3).contains(&x) && (1..=3).contains(&y);
                assert_eq!(out.get(x, y), if inside { 1.0 } else { 0.0 }, "({x},{y})");
            }
        }
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let img = random_gray(&mut rng, 7, 7);
        let kw: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let k = Kernel2D::new(3, 3, kw.clone()).unwrap();
        for border in [Border::Replicate, Border::Zero] {
            let out = convolve2d(&img, &k, border);
            for y in 0..7i64 {
                for x in 0..7i64 {
                    let mut acc = 0.0;
                    for dy in -1..=1i64 {
                        for dx in -1..=1i64 {
                            let (sx, sy) = (x + dx, y + dy);
                            let v = match border {
                                Border::Zero if !(0..7).contains(&sx) || !(0..7).contains(&sy) => 0.0,
                                _ => {
                                    let cx = sx.clamp(0, 6) as usize;
                                    let cy = sy.clamp(0, 6) as usize;
                                    img.data()[cy * 7 + cx]
                                }
                            };
                            acc += kw[((dy + 1) * 3 + dx + 1) as usize] * v;
                        }
                    }
                    assert!((out.get(x as usize, y as usize) - acc).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn normalize_examples() {
        let c = RasterGray::filled(3, 2, 5.0);
        assert!(normalize(&c).data().iter().all(|&v| v == 0.0));
        let two = RasterGray::new(2, 1, vec![0.0, 9.0]).unwrap();
        assert_eq!(normalize(&two).data(), &[0.0, 1.0]);
        let three = RasterGray::new(3, 1, vec![2.0, 4.0, 6.0]).unwrap();
        assert_eq!(normalize(&three).data(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn bilinear_resize_preserves_constants() {
        let img = RasterGray::filled(13, 7, 0.25);
        let out = resize_bilinear(&img, 64, 64);
        assert!(out.data().iter().all(|&v| (v - 0.25).abs() < 1e-12));
    }

    proptest! {
        #[test]
        fn convolution_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_gray(&mut rng, 8, 5);
            let y = random_gray(&mut rng, 8, 5);
            let k = Kernel2D::new(3, 5, (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
            let combo = RasterGray::from_fn(8, 5, |i, j| a * x.get(i, j) + b * y.get(i, j));
            let lhs = convolve2d(&combo, &k, Border::Replicate);
            let cx = convolve2d(&x, &k, Border::Replicate);
            let cy = convolve2d(&y, &k, Border::Replicate);
            for j in 0..5 {
                for i in 0..8 {
                    let rhs = a * cx.get(i, j) + b * cy.get(i, j);
                    prop_assert!((lhs.get(i, j) - rhs).abs() <= 1e-10);
                }
            }
        }

        #[test]
        fn normalize_is_bounded_and_idempotent(seed in any::<u64>(), gain in 0.1f64..50.0, offset in -10.0f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = random_gray(&mut rng, 6, 6).map(|v| gain * v + offset);
            let n = normalize(&img);
            prop_assert!(n.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
            let nn = normalize(&n);
            for (p, q) in n.data().iter().zip(nn.data()) {
                prop_assert!((p - q).abs() <= 1e-12);
            }
        }
    }
}
