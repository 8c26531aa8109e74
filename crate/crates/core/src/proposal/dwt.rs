//! Single-level separable 2D wavelet transform with periodized orthogonal
//! filters.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::RasterGray;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wavelet {
    #[default]
    Haar,
    Db2,
}

impl Wavelet {
    /// Analysis low-pass taps.
    pub fn lowpass(self) -> Vec<f64> {
        match self {
            Wavelet::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            Wavelet::Db2 => {
                let s3 = 3f64.sqrt();
                let d = 4.0 * 2f64.sqrt();
                vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
            }
        }
    }

    /// Quadrature mirror of the low-pass: `g[k] = (-1)^k h[L-1-k]`.
    pub fn highpass(self) -> Vec<f64> {
        let h = self.lowpass();
        let l = h.len();
        (0..l)
            .map(|k| if k % 2 == 0 { h[l - 1 - k] } else { -h[l - 1 - k] })
            .collect()
    }
}

impl FromStr for Wavelet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(Wavelet::Haar),
            "db2" => Ok(Wavelet::Db2),
            other => Err(Error::InvalidParameter(format!("unknown wavelet '{other}'"))),
        }
    }
}

/// The four half-resolution outputs of one analysis level.
///
/// `vertical` is low-pass along rows then high-pass along columns,
/// `horizontal` the reverse, `diagonal` high-pass both ways.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub approx: RasterGray,
    pub vertical: RasterGray,
    pub horizontal: RasterGray,
    pub diagonal: RasterGray,
    pub wavelet: Wavelet,
    /// Size of the analysed image.
    pub width: usize,
    pub height: usize,
}

impl SubbandSet {
    pub fn energy(&self) -> f64 {
        [&self.approx, &self.vertical, &self.horizontal, &self.diagonal]
            .iter()
            .flat_map(|b| b.data().iter())
            .map(|v| v * v)
            .sum()
    }
}

/// One periodized analysis step. Odd lengths repeat the last sample first.
fn analyze(x: &[f64], h: &[f64], g: &[f64], lo: &mut [f64], hi: &mut [f64]) {
    let n = x.len() + x.len() % 2;
    let at = |i: usize| x[(i % n).min(x.len() - 1)];
    for i in 0..n / 2 {
        let (mut a, mut d) = (0.0, 0.0);
        for k in 0..h.len() {
            let v = at(2 * i + k);
            a += h[k] * v;
            d += g[k] * v;
        }
        lo[i] = a;
        hi[i] = d;
    }
}

/// Inverse of [`analyze`]; writes `out.len()` samples (the extension is dropped).
fn synthesize(lo: &[f64], hi: &[f64], h: &[f64], g: &[f64], out: &mut [f64]) {
    let n = 2 * lo.len();
    let mut full = vec![0.0; n];
    for i in 0..lo.len() {
        for k in 0..h.len() {
            full[(2 * i + k) % n] += h[k] * lo[i] + g[k] * hi[i];
        }
    }
    out.copy_from_slice(&full[..out.len()]);
}

pub fn dwt2_level1(img: &RasterGray, wavelet: Wavelet) -> Result<SubbandSet> {
    let (w, h) = img.dims();
    if w < 2 || h < 2 {
        return Err(Error::InvalidRaster(format!("need at least 2x2, got {w}x{h}")));
    }
    let (lp, hp) = (wavelet.lowpass(), wavelet.highpass());
    let (hw, hh) = (w.div_ceil(2), h.div_ceil(2));

    // along x for every row
    let mut row_lo = vec![0.0; hw * h];
    let mut row_hi = vec![0.0; hw * h];
    for y in 0..h {
        analyze(
            &img.data()[y * w..(y + 1) * w],
            &lp,
            &hp,
            &mut row_lo[y * hw..(y + 1) * hw],
            &mut row_hi[y * hw..(y + 1) * hw],
        );
    }

    // along y for every column of both halves
    let columns = |src: &[f64]| {
        let mut lo = vec![0.0; hw * hh];
        let mut hi = vec![0.0; hw * hh];
        let mut col = vec![0.0; h];
        let (mut cl, mut ch) = (vec![0.0; hh], vec![0.0; hh]);
        for x in 0..hw {
            for y in 0..h {
                col[y] = src[y * hw + x];
            }
            analyze(&col, &lp, &hp, &mut cl, &mut ch);
            for y in 0..hh {
                lo[y * hw + x] = cl[y];
                hi[y * hw + x] = ch[y];
            }
        }
        (lo, hi)
    };
    let (ll, lh) = columns(&row_lo);
    let (hl, hh_) = columns(&row_hi);
    let band = |d: Vec<f64>| RasterGray::new(hw, hh, d).expect("finite input gives finite coefficients");
    Ok(SubbandSet {
        approx: band(ll),
        vertical: band(lh),
        horizontal: band(hl),
        diagonal: band(hh_),
        wavelet,
        width: w,
        height: h,
    })
}

/// Synthesis bank matching [`dwt2_level1`].
pub fn idwt2_level1(bands: &SubbandSet) -> Result<RasterGray> {
    let (w, h) = (bands.width, bands.height);
    let (hw, hh) = (w.div_ceil(2), h.div_ceil(2));
    for b in [&bands.approx, &bands.vertical, &bands.horizontal, &bands.diagonal] {
        if b.dims() != (hw, hh) {
            return Err(Error::DimensionMismatch {
                expected: (hw, hh),
                actual: b.dims(),
            });
        }
    }
    let (lp, hp) = (bands.wavelet.lowpass(), bands.wavelet.highpass());

    let columns = |lo: &RasterGray, hi: &RasterGray| {
        let mut out = vec![0.0; hw * h];
        let (mut cl, mut ch) = (vec![0.0; hh], vec![0.0; hh]);
        let mut col = vec![0.0; h];
        for x in 0..hw {
            for y in 0..hh {
                cl[y] = lo.get(x, y);
                ch[y] = hi.get(x, y);
            }
            synthesize(&cl, &ch, &lp, &hp, &mut col);
            for y in 0..h {
                out[y * hw + x] = col[y];
            }
        }
        out
    };
    let row_lo = columns(&bands.approx, &bands.vertical);
    let row_hi = columns(&bands.horizontal, &bands.diagonal);

    let mut data = vec![0.0; w * h];
    for y in 0..h {
        synthesize(
            &row_lo[y * hw..(y + 1) * hw],
            &row_hi[y * hw..(y + 1) * hw],
            &lp,
            &hp,
            &mut data[y * w..(y + 1) * w],
        );
    }
    RasterGray::new(w, h, data)
}
