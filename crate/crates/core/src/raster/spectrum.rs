//! 2D discrete Fourier transform.
//!
//! Forward transform is unnormalized, `F(u,v) = Σ p(y,x) e^{-2πi(uy/N + vx/M)}`
//! with `N` rows and `M` columns; the inverse divides by `N·M`. No implicit
//! padding: sizes need not be powers of two.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use super::RasterGray;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum2D {
    rows: usize,
    cols: usize,
    coeffs: Vec<Complex64>,
}

impl Spectrum2D {
    /// Panics if `coeffs.len() != rows * cols`.
    pub fn from_coeffs(rows: usize, cols: usize, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), rows * cols, "spectrum size mismatch");
        Self { rows, cols, coeffs }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn at(&self, u: usize, v: usize) -> Complex64 {
        self.coeffs[u * self.cols + v]
    }

    /// Inverse transform (divides by `N·M`).
    pub fn inverse(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        fft2_in_place(&mut buf, self.rows, self.cols, FftDirection::Inverse);
        let scale = 1.0 / (self.rows * self.cols) as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Real part of the inverse transform as a raster.
    pub fn inverse_real(&self) -> RasterGray {
        let data = self.inverse().into_iter().map(|c| c.re).collect();
        RasterGray::new(self.cols, self.rows, data).expect("spectrum dims are positive")
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

pub fn dft2d(img: &RasterGray) -> Spectrum2D {
    dft2d_slice(img.data(), img.height(), img.width())
}

/// Forward DFT of a row-major real block with `rows`×`cols` samples.
pub(crate) fn dft2d_slice(data: &[f64], rows: usize, cols: usize) -> Spectrum2D {
    let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_in_place(&mut buf, rows, cols, FftDirection::Forward);
    Spectrum2D::from_coeffs(rows, cols, buf)
}

/// Unnormalized 2D FFT over a row-major complex buffer.
pub(crate) fn fft2_in_place(buf: &mut [Complex64], rows: usize, cols: usize, dir: FftDirection) {
    debug_assert_eq!(buf.len(), rows * cols);
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        if cols > 1 {
            let fft = planner.plan_fft(cols, dir);
            fft.process(buf);
        }
        if rows > 1 {
            let fft = planner.plan_fft(rows, dir);
            let mut column = vec![Complex64::new(0.0, 0.0); rows];
            for c in 0..cols {
                for r in 0..rows {
                    column[r] = buf[r * cols + c];
                }
                fft.process(&mut column);
                for r in 0..rows {
                    buf[r * cols + c] = column[r];
                }
            }
        }
    });
}
