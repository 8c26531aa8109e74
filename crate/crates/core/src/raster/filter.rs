//! Smoothing, gradients and FFT-backed correlation for large kernels.

use rustfft::num_complex::Complex64;
use rustfft::FftDirection;

use super::spectrum::fft2_in_place;
use super::RasterGray;

/// Normalized 1D Gaussian taps with radius `ceil(3σ)`.
pub fn gaussian_kernel_1d(sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "sigma must be positive");
    let radius = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Separable Gaussian blur with replicate border.
pub fn gaussian_blur(img: &RasterGray, sigma: f64) -> RasterGray {
    let taps = gaussian_kernel_1d(sigma);
    let r = (taps.len() / 2) as isize;
    let (w, h) = img.dims();
    let rows = RasterGray::from_fn(w, h, |x, y| {
        taps.iter()
            .enumerate()
            .map(|(i, t)| t * img.get_clamped(x as isize + i as isize - r, y as isize))
            .sum()
    });
    RasterGray::from_fn(w, h, |x, y| {
        taps.iter()
            .enumerate()
            .map(|(i, t)| t * rows.get_clamped(x as isize, y as isize + i as isize - r))
            .sum()
    })
}

/// Central-difference gradients `(gx, gy)` with replicate border.
pub fn central_gradients(img: &RasterGray) -> (RasterGray, RasterGray) {
    let (w, h) = img.dims();
    let gx = RasterGray::from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        0.5 * (img.get_clamped(x + 1, y) - img.get_clamped(x - 1, y))
    });
    let gy = RasterGray::from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        0.5 * (img.get_clamped(x, y + 1) - img.get_clamped(x, y - 1))
    });
    (gx, gy)
}

/// Correlates `img` with a complex `rows`×`cols` kernel (both odd) through
/// the FFT, replicate border. Output is row-major, same size as `img`.
pub fn fft_correlate(img: &RasterGray, kernel: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    assert!(rows % 2 == 1 && cols % 2 == 1, "kernel dims must be odd");
    assert_eq!(kernel.len(), rows * cols);
    let (w, h) = img.dims();
    let ry = rows / 2;
    let rx = cols / 2;
    let hp = h + 2 * ry;
    let wp = w + 2 * rx;

    let mut padded: Vec<Complex64> = Vec::with_capacity(hp * wp);
    for py in 0..hp {
        for px in 0..wp {
            let v = img.get_clamped(px as isize - rx as isize, py as isize - ry as isize);
            padded.push(Complex64::new(v, 0.0));
        }
    }

    // Flipped kernel so that circular convolution realizes correlation.
    let mut flipped = vec![Complex64::new(0.0, 0.0); hp * wp];
    for ky in 0..rows {
        let dy = ky as isize - ry as isize;
        let fy = (-dy).rem_euclid(hp as isize) as usize;
        for kx in 0..cols {
            let dx = kx as isize - rx as isize;
            let fx = (-dx).rem_euclid(wp as isize) as usize;
            flipped[fy * wp + fx] = kernel[ky * cols + kx];
        }
    }

    fft2_in_place(&mut padded, hp, wp, FftDirection::Forward);
    fft2_in_place(&mut flipped, hp, wp, FftDirection::Forward);
    for (p, k) in padded.iter_mut().zip(&flipped) {
        *p *= k;
    }
    fft2_in_place(&mut padded, hp, wp, FftDirection::Inverse);
    let scale = 1.0 / (hp * wp) as f64;

    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            out.push(padded[(y + ry) * wp + x + rx] * scale);
        }
    }
    out
}
