//! Salient-coefficient search, the growing square window and its spectral
//! entropy, and tolerance-based grouping.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::spectrum::dft2d_slice;
use crate::raster::{BitMask, RasterGray, Spectrum2D};

/// Position in a coefficient array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coord {
    pub row: usize,
    pub col: usize,
}

impl Coord {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// Unsuppressed coefficient of largest magnitude; the first in row-major
/// order wins ties.
pub fn salient_pixel(detail: &RasterGray, suppressed: &BitMask) -> Result<Coord> {
    if suppressed.dims() != detail.dims() {
        return Err(Error::DimensionMismatch {
            expected: detail.dims(),
            actual: suppressed.dims(),
        });
    }
    let w = detail.width();
    let mut best: Option<(usize, f64)> = None;
    for (i, (&v, &s)) in detail.data().iter().zip(suppressed.bits()).enumerate() {
        if s {
            continue;
        }
        if best.is_none_or(|(_, m)| v.abs() > m) {
            best = Some((i, v.abs()));
        }
    }
    best.map(|(i, _)| Coord::new(i / w, i % w)).ok_or(Error::Exhausted)
}

/// `|F(u,v)| / sqrt(Σ |F|²)`, laid out like the spectrum.
pub fn nfc(spec: &Spectrum2D) -> Result<Vec<f64>> {
    // energy from the same magnitudes, so a lone coefficient maps to exactly 1
    let mags: Vec<f64> = spec.coeffs().iter().map(|c| c.norm()).collect();
    let energy: f64 = mags.iter().map(|m| m * m).sum();
    if !(energy > 0.0) {
        return Err(Error::ZeroSpectrum);
    }
    let norm = energy.sqrt();
    Ok(mags.into_iter().map(|m| (m / norm).min(1.0)).collect())
}

/// `Σ NFC·ln NFC` with `0·ln 0 = 0`.
pub fn ripple_entropy(nfc_window: &[f64]) -> f64 {
    nfc_window
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RippleParams {
    pub max_radius: usize,
    pub entropy_plateau_eps: f64,
    pub plateau_steps: usize,
}

impl Default for RippleParams {
    fn default() -> Self {
        Self {
            max_radius: 32,
            entropy_plateau_eps: 1e-3,
            plateau_steps: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RippleState {
    pub seed: Coord,
    pub radius: usize,
    /// Entropy at radius 1, 2, …, `radius`.
    pub entropy_trace: Vec<f64>,
}

impl RippleState {
    pub fn entropy(&self) -> f64 {
        self.entropy_trace.last().copied().unwrap_or(0.0)
    }
}

/// Square window of half-width `radius` around `seed`, clipped to the array:
/// `(row0, col0, rows, cols)`.
pub fn ripple_window(dims: (usize, usize), seed: Coord, radius: usize) -> (usize, usize, usize, usize) {
    let (w, h) = dims;
    let r0 = seed.row.saturating_sub(radius);
    let c0 = seed.col.saturating_sub(radius);
    let r1 = (seed.row + radius).min(h - 1);
    let c1 = (seed.col + radius).min(w - 1);
    (r0, c0, r1 - r0 + 1, c1 - c0 + 1)
}

fn window_entropy(detail: &RasterGray, seed: Coord, radius: usize) -> f64 {
    let (r0, c0, rows, cols) = ripple_window(detail.dims(), seed, radius);
    let mut block = Vec::with_capacity(rows * cols);
    for r in r0..r0 + rows {
        for c in c0..c0 + cols {
            block.push(detail.get(c, r));
        }
    }
    match nfc(&dft2d_slice(&block, rows, cols)) {
        Ok(n) => ripple_entropy(&n),
        Err(_) => 0.0,
    }
}

/// Grows the window one coefficient per step until the entropy changes by
/// less than `eps` for `plateau_steps` consecutive steps or `max_radius`
/// is reached. An all-zero window scores 0.
pub fn grow_ripple(detail: &RasterGray, seed: Coord, p: &RippleParams) -> Result<RippleState> {
    if seed.row >= detail.height() || seed.col >= detail.width() {
        return Err(Error::InvalidParameter(format!("seed {seed:?} outside the subband")));
    }
    if p.max_radius == 0 || p.plateau_steps == 0 {
        return Err(Error::InvalidParameter("max_radius and plateau_steps must be at least 1".into()));
    }
    let mut trace = Vec::new();
    let mut flat = 0;
    for r in 1..=p.max_radius {
        let h = window_entropy(detail, seed, r);
        if let Some(&prev) = trace.last() {
            let prev: f64 = prev;
            if (h - prev).abs() < p.entropy_plateau_eps {
                flat += 1;
            } else {
                flat = 0;
            }
        }
        trace.push(h);
        if flat >= p.plateau_steps {
            break;
        }
    }
    Ok(RippleState {
        seed,
        radius: trace.len(),
        entropy_trace: trace,
    })
}

/// 8-connected flood fill from `seed` over `map`, admitting cells with
/// `|map − map[seed]| ≤ e_max` that are not excluded.
pub fn group_by_nfc(map: &RasterGray, seed: Coord, e_max: f64, excluded: Option<&BitMask>) -> Vec<Coord> {
    let (w, h) = map.dims();
    if seed.row >= h || seed.col >= w {
        return Vec::new();
    }
    let target = map.get(seed.col, seed.row);
    let mut seen = BitMask::new(w, h);
    let mut out = Vec::new();
    let mut queue = VecDeque::from([seed]);
    seen.set(seed.col, seed.row, true);
    while let Some(c) = queue.pop_front() {
        out.push(c);
        for r in c.row.saturating_sub(1)..=(c.row + 1).min(h - 1) {
            for k in c.col.saturating_sub(1)..=(c.col + 1).min(w - 1) {
                if seen.get(k, r) {
                    continue;
                }
                seen.set(k, r, true);
                if excluded.is_some_and(|m| m.get(k, r)) {
                    continue;
                }
                if (map.get(k, r) - target).abs() <= e_max {
                    queue.push_back(Coord::new(r, k));
                }
            }
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::dft2d;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rustfft::num_complex::Complex64;

    #[test]
    fn salient_examples() {
        let mut img = RasterGray::zeros(8, 6);
        img.set(5, 3, -2.0);
        assert_eq!(salient_pixel(&img, &BitMask::new(8, 6)).unwrap(), Coord::new(3, 5));

        let mut img = RasterGray::zeros(4, 4);
        img.set(1, 0, 1.0);
        img.set(0, 2, -1.0);
        assert_eq!(salient_pixel(&img, &BitMask::new(4, 4)).unwrap(), Coord::new(0, 1));

        let all = BitMask::from_fn(4, 4, |_, _| true);
        assert!(matches!(salient_pixel(&img, &all), Err(Error::Exhausted)));
    }

    proptest! {
        #[test]
        fn lone_coefficient_has_zero_entropy(re in -1e3f64..1e3, im in -1e3f64..1e3, at in 0usize..9) {
            prop_assume!(re != 0.0 || im != 0.0);
            let mut c = vec![Complex64::new(0.0, 0.0); 9];
            c[at] = Complex64::new(re, im);
            let v = nfc(&Spectrum2D::from_coeffs(3, 3, c)).unwrap();
            prop_assert_eq!(v[at], 1.0);
            prop_assert_eq!(ripple_entropy(&v), 0.0);
        }
    }

    proptest! {
        #[test]
        fn salient_matches_linear_scan(seed in any::<u64>(), density in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = RasterGray::from_fn(9, 7, |_, _| (rng.gen_range(-3i32..=3)) as f64);
            let sup = BitMask::from_fn(9, 7, |_, _| rng.gen_bool(density));
            let mut want = None;
            let mut best = -1.0;
            for r in 0..7 {
                for c in 0..9 {
                    if !sup.get(c, r) && img.get(c, r).abs() > best {
                        best = img.get(c, r).abs();
                        want = Some(Coord::new(r, c));
                    }
                }
            }
            prop_assert_eq!(salient_pixel(&img, &sup).ok(), want);
        }

        #[test]
        fn nfc_is_unit_norm(seed in any::<u64>(), rows in 1usize..8, cols in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let coeffs: Vec<Complex64> = (0..rows * cols)
                .map(|_| Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
                .collect();
            let n = nfc(&Spectrum2D::from_coeffs(rows, cols, coeffs.clone())).unwrap();
            let s: f64 = n.iter().map(|v| v * v).sum();
            prop_assert!((s - 1.0).abs() <= 1e-9);
            prop_assert!(n.iter().all(|v| (0.0..=1.0).contains(v)));
            let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            for (v, c) in n.iter().zip(&coeffs) {
                prop_assert!((v - c.norm() / norm).abs() <= 1e-12);
            }
            let h = ripple_entropy(&n);
            prop_assert!(h <= 0.0);
            let direct: f64 = n.iter().map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 }).sum();
            prop_assert!((h - direct).abs() <= 1e-12);
        }
    }

    #[test]
    fn nfc_examples() {
        let z = Complex64::new(0.0, 0.0);
        let one = Spectrum2D::from_coeffs(2, 2, vec![z, Complex64::new(0.0, -3.0), z, z]);
        assert_eq!(nfc(&one).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
        let flat = Spectrum2D::from_coeffs(2, 2, vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)]);
        assert!(nfc(&flat).unwrap().iter().all(|v| (v - 0.5).abs() < 1e-15));
        assert!(matches!(nfc(&Spectrum2D::from_coeffs(2, 2, vec![z; 4])), Err(Error::ZeroSpectrum)));
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(ripple_entropy(&[1.0, 0.0, 0.0, 0.0]), 0.0);
        assert!((ripple_entropy(&[0.5; 4]) + 1.3863).abs() < 1e-4);
        assert!(ripple_entropy(&[0.6, 0.8]) < 0.0);
    }

    #[test]
    fn impulse_never_plateaus() {
        let mut img = RasterGray::zeros(101, 101);
        img.set(50, 50, 1.0);
        let st = grow_ripple(&img, Coord::new(50, 50), &RippleParams::default()).unwrap();
        assert_eq!(st.radius, 32);
        assert_eq!(st.entropy_trace.len(), 32);
        for (i, h) in st.entropy_trace.iter().enumerate() {
            let side = (2 * (i + 1) + 1) as f64;
            // flat spectrum of side² equal magnitudes
            let want = -side * side.ln();
            assert!((h - want).abs() < 1e-9, "r={}: {h} vs {want}", i + 1);
        }
        assert!(st.entropy_trace.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn constant_field_stops_after_plateau() {
        let img = RasterGray::filled(40, 40, 0.7);
        let p = RippleParams::default();
        let st = grow_ripple(&img, Coord::new(20, 20), &p).unwrap();
        assert_eq!(st.radius, p.plateau_steps + 1);
        assert!(st.entropy_trace.iter().all(|&h| h.abs() < 1e-12));
    }

    #[test]
    fn trace_matches_direct_window_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img = RasterGray::from_fn(30, 20, |x, y| {
            if (10..19).contains(&x) && (6..15).contains(&y) {
                rng.gen_range(-1.0..1.0)
            } else {
                0.0
            }
        });
        let seed = Coord::new(10, 14);
        let st = grow_ripple(&img, seed, &RippleParams { max_radius: 12, ..RippleParams::default() }).unwrap();
        for (i, &h) in st.entropy_trace.iter().enumerate() {
            let r = i + 1;
            let (r0, c0, rows, cols) = ripple_window(img.dims(), seed, r);
            let win = img.crop(c0, r0, cols, rows);
            let direct = ripple_entropy(&nfc(&dft2d(&win)).unwrap());
            assert!((h - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn grouping_examples() {
        let uniform = RasterGray::filled(7, 7, 0.3);
        assert_eq!(group_by_nfc(&uniform, Coord::new(3, 3), 1e-6, None).len(), 49);

        let distinct = RasterGray::from_fn(5, 5, |x, y| (y * 5 + x) as f64 / 100.0);
        assert_eq!(group_by_nfc(&distinct, Coord::new(2, 2), 0.0, None), vec![Coord::new(2, 2)]);

        // two clusters: a 0.1 block on the left, 0.9 elsewhere, plus an
        // isolated 0.1 island that is not connected
        let map = RasterGray::from_fn(10, 8, |x, y| {
            if x < 4 || (x == 8 && y == 6) {
                0.1
            } else {
                0.9
            }
        });
        let got = group_by_nfc(&map, Coord::new(3, 1), 0.2, None);
        let want: Vec<Coord> = (0..8).flat_map(|r| (0..4).map(move |c| Coord::new(r, c))).collect();
        assert_eq!(got, want);
    }
}
