//! Gabor filter bank texture features.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::filter::{fft_correlate, gaussian_blur};
use crate::raster::RasterGray;

/// Envelope width relative to the wavelength (one-octave bandwidth).
const SIGMA_PER_WAVELENGTH: f64 = 0.56;
/// Envelope aspect ratio across the carrier.
const ASPECT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaborParams {
    pub n_orient: usize,
    pub wavelengths: Vec<f64>,
    /// Weight of the X/Y channels relative to unit-variance Gabor channels.
    pub spatial_weight: f64,
}

impl Default for GaborParams {
    fn default() -> Self {
        Self {
            n_orient: 6,
            wavelengths: vec![4.0, 8.0, 16.0, 32.0],
            spatial_weight: 0.125,
        }
    }
}

/// Per-pixel feature vectors, stored channel by channel.
///
/// Channel `w·n_orient + o` holds the smoothed response magnitude for
/// wavelength `w` and orientation `o·180°/n_orient`; the last two channels
/// hold the X and Y coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborFeatureStack {
    width: usize,
    height: usize,
    n_orient: usize,
    wavelengths: Vec<f64>,
    channels: Vec<Vec<f64>>,
}

impl GaborFeatureStack {
    /// Builds a stack from raw channels (used for synthetic feature sets).
    pub fn from_channels(width: usize, height: usize, n_orient: usize, wavelengths: Vec<f64>, channels: Vec<Vec<f64>>) -> Result<Self> {
        if channels.len() != n_orient * wavelengths.len() + 2 {
            return Err(Error::InvalidParameter(format!(
                "expected {} channels, got {}",
                n_orient * wavelengths.len() + 2,
                channels.len()
            )));
        }
        if channels.iter().any(|c| c.len() != width * height) {
            return Err(Error::InvalidParameter("channel length mismatch".into()));
        }
        if channels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("features must be finite".into()));
        }
        Ok(Self {
            width,
            height,
            n_orient,
            wavelengths,
            channels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_gabor(&self) -> usize {
        self.n_orient * self.wavelengths.len()
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.channels[i]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    /// `(orientation°, wavelength)` of a Gabor channel.
    pub fn channel_info(&self, i: usize) -> Option<(f64, f64)> {
        (i < self.n_gabor()).then(|| {
            let o = i % self.n_orient;
            let w = i / self.n_orient;
            (o as f64 * 180.0 / self.n_orient as f64, self.wavelengths[w])
        })
    }

    /// Gabor channels rescaled to unit variance and X/Y scaled by
    /// `spatial_weight`, ready for PCA.
    pub fn normalized(&self, spatial_weight: f64) -> Self {
        let n = (self.width * self.height) as f64;
        let g = self.n_gabor();
        let channels = self
            .channels
            .iter()
            .enumerate()
            .map(|(i, ch)| {
                if i >= g {
                    return ch.iter().map(|v| v * spatial_weight).collect();
                }
                let mean = ch.iter().sum::<f64>() / n;
                let var = ch.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 1e-9 {
                    ch.iter().map(|v| v / sd).collect()
                } else {
                    ch.clone()
                }
            })
            .collect();
        Self {
            channels,
            wavelengths: self.wavelengths.clone(),
            ..*self
        }
    }
}

/// Complex Gabor kernel, zero-mean, scaled so a matched unit-amplitude
/// grating gives a response magnitude of about one half.
pub fn gabor_kernel(wavelength: f64, orientation_deg: f64) -> (Vec<Complex64>, usize) {
    let sigma = SIGMA_PER_WAVELENGTH * wavelength;
    let half = (3.0 * sigma).ceil() as isize;
    let size = (2 * half + 1) as usize;
    let (c, s) = {
        let t = orientation_deg.to_radians();
        (t.cos(), t.sin())
    };
    let mut env = Vec::with_capacity(size * size);
    let mut carrier = Vec::with_capacity(size * size);
    for y in -half..=half {
        for x in -half..=half {
            let (x, y) = (x as f64, y as f64);
            let along = x * c + y * s;
            let across = -x * s + y * c;
            env.push((-(along * along + ASPECT * ASPECT * across * across) / (2.0 * sigma * sigma)).exp());
            carrier.push(Complex64::from_polar(1.0, 2.0 * PI * along / wavelength));
        }
    }
    let env_sum: f64 = env.iter().sum();
    let dc: Complex64 = env.iter().zip(&carrier).map(|(e, k)| e * k).sum::<Complex64>() / env_sum;
    let kernel = env
        .iter()
        .zip(&carrier)
        .map(|(&e, &k)| e * (k - dc) / env_sum)
        .collect();
    (kernel, size)
}

/// Gabor magnitude responses for every orientation × wavelength, each
/// smoothed with a Gaussian of σ = wavelength / 2, plus X and Y in `[0, 1]`.
pub fn gabor_bank(img: &RasterGray, n_orient: usize, wavelengths: &[f64]) -> Result<GaborFeatureStack> {
    if n_orient < 2 {
        return Err(Error::InvalidParameter("need at least two orientations".into()));
    }
    if wavelengths.is_empty() || wavelengths.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidParameter("wavelengths must be positive".into()));
    }
    let (w, h) = img.dims();
    let jobs: Vec<(f64, f64)> = wavelengths
        .iter()
        .flat_map(|&lambda| (0..n_orient).map(move |o| (lambda, o as f64 * 180.0 / n_orient as f64)))
        .collect();
    let mut channels: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(lambda, theta)| {
            let (kernel, size) = gabor_kernel(lambda, theta);
            let response = fft_correlate(img, &kernel, size, size);
            let mag = RasterGray::new(w, h, response.iter().map(|c| c.norm()).collect())
                .expect("dims match input");
            gaussian_blur(&mag, 0.5 * lambda).into_data()
        })
        .collect();
    let sx = if w > 1 { (w - 1) as f64 } else { 1.0 };
    let sy = if h > 1 { (h - 1) as f64 } else { 1.0 };
    channels.push((0..h).flat_map(|_| (0..w).map(move |x| x as f64 / sx)).collect());
    channels.push((0..h).flat_map(|y| (0..w).map(move |_| y as f64 / sy)).collect());
    GaborFeatureStack::from_channels(w, h, n_orient, wavelengths.to_vec(), channels)
}
