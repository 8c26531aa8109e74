//! Synthetic scenes with known ground truth, used by tests, the acceptance
//! suite and the CLI demo inputs.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clearance::Side;
use crate::cnn::{Label, LabeledDataset, Sample};
use crate::raster::{BitMask, RasterGray, RasterRgb};
use crate::structure::HoughLine;

/// Bright disc on a dark, slightly graded background. Returns the image and
/// the disc mask (`distance ≤ radius`).
pub fn thermal_disc(w: usize, h: usize, center: (f64, f64), radius: f64, bg: f64, fg: f64) -> (RasterGray, BitMask) {
    let inside = |x: usize, y: usize| {
        let dx = x as f64 - center.0;
        let dy = y as f64 - center.1;
        dx * dx + dy * dy <= radius * radius
    };
    let img = RasterGray::from_fn(w, h, |x, y| {
        if inside(x, y) {
            fg
        } else {
            bg + 0.02 * (y as f64 / h as f64)
        }
    });
    (img, BitMask::from_fn(w, h, inside))
}

/// Two separated warm blobs of different temperature.
pub fn thermal_two_components(w: usize, h: usize) -> RasterGray {
    let r = h as f64 / 6.0;
    let blobs = [(w as f64 * 0.25, h as f64 * 0.5, 0.9), (w as f64 * 0.75, h as f64 * 0.45, 0.8)];
    RasterGray::from_fn(w, h, |x, y| {
        for &(cx, cy, v) in &blobs {
            if (x as f64 - cx).hypot(y as f64 - cy) <= r {
                return v;
            }
        }
        0.1 + 0.05 * (x as f64 / w as f64)
    })
}

/// Pixels whose centers lie within half a pixel of `line`.
pub fn line_mask(w: usize, h: usize, line: &HoughLine) -> BitMask {
    BitMask::from_fn(w, h, |x, y| line.distance(x as f64, y as f64) <= 0.5)
}

/// Horizontal stripes on the left half, a checkerboard on the right half.
/// The mask is `true` on the checkerboard side.
pub fn two_texture(w: usize, h: usize) -> (RasterGray, BitMask) {
    let split = w / 2;
    let img = RasterGray::from_fn(w, h, |x, y| {
        if x < split {
            0.5 + 0.4 * (2.0 * PI * y as f64 / 8.0).sin()
        } else if (x / 4 + y / 4) % 2 == 0 {
            0.9
        } else {
            0.1
        }
    });
    (img, BitMask::from_fn(w, h, |x, _| x >= split))
}

/// Pair of dark diagonals leaving the tower towards one image border.
/// The upper line rises away from the tower, the lower line falls.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalPair {
    pub side: Side,
    /// Row where the upper line meets the tower axis.
    pub upper_y0: f64,
    /// Absolute slope of the upper line.
    pub upper_slope: f64,
    pub lower_y0: f64,
    pub lower_slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClearanceSceneSpec {
    pub width: usize,
    pub height: usize,
    pub tower_x: f64,
    pub tower_half_width: f64,
    pub pairs: Vec<DiagonalPair>,
    /// Green discs `(cx, cy, r)`.
    pub trees: Vec<(f64, f64, f64)>,
    pub meter_per_pixel: f64,
}

impl ClearanceSceneSpec {
    /// Tower at x = 200 with a right-hand pair whose middle façade segment
    /// sits at x = 320.
    pub fn example() -> Self {
        Self {
            width: 640,
            height: 480,
            tower_x: 200.0,
            tower_half_width: 3.0,
            pairs: vec![DiagonalPair {
                side: Side::Right,
                upper_y0: 240.0,
                upper_slope: 1.0,
                lower_y0: 300.0,
                lower_slope: 0.7,
            }],
            trees: vec![(330.0, 300.0, 18.0), (420.0, 260.0, 14.0), (100.0, 420.0, 20.0)],
            meter_per_pixel: 0.05,
        }
    }

    /// Random geometry: a right-hand pair always, a left-hand pair half the
    /// time, a handful of trees.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tower_x = rng.gen_range(240.0..400.0);
        let mut pairs = vec![random_pair(&mut rng, Side::Right)];
        if rng.gen_bool(0.5) {
            pairs.push(random_pair(&mut rng, Side::Left));
        }
        let trees = (0..rng.gen_range(2..6))
            .map(|_| (rng.gen_range(20.0..620.0), rng.gen_range(250.0..460.0), rng.gen_range(8.0..20.0)))
            .collect();
        Self {
            width: 640,
            height: 480,
            tower_x,
            tower_half_width: rng.gen_range(2.0..5.0),
            pairs,
            trees,
            meter_per_pixel: rng.gen_range(0.02..0.2),
        }
    }
}

fn random_pair(rng: &mut ChaCha8Rng, side: Side) -> DiagonalPair {
    DiagonalPair {
        side,
        upper_y0: rng.gen_range(200.0..260.0),
        upper_slope: rng.gen_range(0.7..1.2),
        lower_y0: rng.gen_range(280.0..320.0),
        lower_slope: rng.gen_range(0.6..0.9),
    }
}

#[derive(Debug, Clone)]
pub struct ClearanceScene {
    pub image: RasterRgb,
    pub tower_x: f64,
    pub meter_per_pixel: f64,
    /// Distance from the tower axis to the middle of the upper line's span
    /// on each side, in meters.
    pub expected_distance_m: BTreeMap<Side, f64>,
}

pub fn clearance_scene(spec: &ClearanceSceneSpec) -> ClearanceScene {
    let (w, h) = (spec.width, spec.height);
    let lines: Vec<(Side, f64, f64)> = spec
        .pairs
        .iter()
        .flat_map(|p| {
            // signed slope of y against x for each line
            let dir = if p.side == Side::Right { 1.0 } else { -1.0 };
            [(p.side, p.upper_y0, -dir * p.upper_slope), (p.side, p.lower_y0, dir * p.lower_slope)]
        })
        .collect();
    let image = RasterRgb::from_fn(w, h, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let dx = xf - spec.tower_x;
        if dx.abs() <= spec.tower_half_width {
            return [50, 50, 55];
        }
        for &(side, y0, slope) in &lines {
            let outward = if side == Side::Right { dx > 0.0 } else { dx < 0.0 };
            if outward {
                let dist = (yf - (y0 + slope * dx)).abs() / (1.0 + slope * slope).sqrt();
                if dist <= 1.5 {
                    return [40, 40, 40];
                }
            }
        }
        for &(cx, cy, r) in &spec.trees {
            if (xf - cx).hypot(yf - cy) <= r {
                return [30, 130, 40];
            }
        }
        let shade = (10.0 * yf / h as f64) as u8;
        [150 + shade, 140 + shade, 120]
    });

    let expected_distance_m = spec
        .pairs
        .iter()
        .map(|p| {
            let room = match p.side {
                Side::Right => (w - 1) as f64 - spec.tower_x,
                Side::Left => spec.tower_x,
            };
            // the upper line leaves through the top edge or the side border
            let span = (p.upper_y0 / p.upper_slope).min(room);
            (p.side, 0.5 * span * spec.meter_per_pixel)
        })
        .collect();
    ClearanceScene {
        image,
        tower_x: spec.tower_x,
        meter_per_pixel: spec.meter_per_pixel,
        expected_distance_m,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectKind {
    /// Ribbed vertical bar, insulator-like.
    Bar,
    /// Isosceles triangle outline, apex up.
    Triangle,
    /// Patch of strong random texture.
    Noise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedObject {
    pub kind: ObjectKind,
    /// `[x, y, w, h]` in pixels.
    pub bbox: [usize; 4],
    /// Signed intensity step against the background.
    pub contrast: f64,
}

impl PlantedObject {
    /// Fraction of pixel `(px, py)` covered by the shape, 4×4 supersampled,
    /// and the shape intensity offset there.
    fn coverage(&self, px: usize, py: usize) -> f64 {
        let [x, y, w, h] = self.bbox.map(|v| v as f64);
        let mut hits = 0;
        for sy in 0..4 {
            for sx in 0..4 {
                let u = px as f64 + (sx as f64 + 0.5) / 4.0;
                let v = py as f64 + (sy as f64 + 0.5) / 4.0;
                let inside = match self.kind {
                    ObjectKind::Bar | ObjectKind::Noise => u >= x && u <= x + w && v >= y && v <= y + h,
                    ObjectKind::Triangle => {
                        let t = 1.0;
                        let a = (x + w / 2.0, y + t);
                        let b = (x + t, y + h - t);
                        let c = (x + w - t, y + h - t);
                        [(a, b), (b, c), (c, a)]
                            .iter()
                            .any(|&(p, q)| segment_distance((u, v), p, q) <= t)
                    }
                };
                hits += inside as u32;
            }
        }
        hits as f64 / 16.0
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Smooth low-amplitude background with faint sensor noise.
fn background(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Vec<f64> {
    let waves: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            let ang = rng.gen_range(0.0..PI);
            let period = rng.gen_range(40.0..120.0);
            (ang.cos() / period, ang.sin() / period, rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.01..0.03))
        })
        .collect();
    let base = rng.gen_range(0.35..0.55);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let mut v = base;
            for &(fx, fy, ph, amp) in &waves {
                v += amp * (2.0 * PI * (fx * x as f64 + fy * y as f64) + ph).sin();
            }
            out.push(v + 0.01 * normal(rng));
        }
    }
    out
}

/// Paints objects over `base` (row-major, `w` wide) with a light optical
/// blur, unclamped.
fn paint_offsets(base: Vec<f64>, w: usize, h: usize, objects: &[PlantedObject], rng: &mut ChaCha8Rng) -> RasterGray {
    let mut data = base;
    for o in objects {
        let [x0, y0, bw, bh] = o.bbox;
        let phase = rng.gen_range(0.0..5.0);
        let noise: Vec<f64> = (0..(bw + 2) * (bh + 2)).map(|_| normal(rng)).collect();
        for y in y0.saturating_sub(1)..(y0 + bh + 1).min(h) {
            for x in x0.saturating_sub(1)..(x0 + bw + 1).min(w) {
                let cov = o.coverage(x, y);
                if cov == 0.0 {
                    continue;
                }
                let value = match o.kind {
                    ObjectKind::Bar => {
                        // disc stack: intensity ripple with a 5 px period
                        let rib = 0.5 + 0.5 * (2.0 * PI * (y as f64 + phase) / 5.0).cos();
                        o.contrast * (0.6 + 0.4 * rib)
                    }
                    ObjectKind::Triangle => o.contrast,
                    ObjectKind::Noise => {
                        let i = (y + 1 - y0.min(y + 1)) * (bw + 2) + (x + 1 - x0.min(x + 1));
                        o.contrast * noise[i.min(noise.len() - 1)]
                    }
                };
                data[y * w + x] += cov * value;
            }
        }
    }
    let img = RasterGray::new(w, h, data).expect("finite samples");
    crate::raster::filter::gaussian_blur(&img, 0.7)
}

fn paint(base: Vec<f64>, w: usize, h: usize, objects: &[PlantedObject], rng: &mut ChaCha8Rng) -> RasterGray {
    paint_offsets(base, w, h, objects, rng).map(|v| v.clamp(0.0, 1.0))
}

fn random_object(rng: &mut ChaCha8Rng, kind: ObjectKind) -> (usize, usize) {
    match kind {
        ObjectKind::Bar => (rng.gen_range(10..=16), rng.gen_range(36..=60)),
        ObjectKind::Triangle => (rng.gen_range(36..=56), rng.gen_range(30..=48)),
        ObjectKind::Noise => (rng.gen_range(20..=40), rng.gen_range(20..=40)),
    }
}

fn contrast(rng: &mut ChaCha8Rng) -> f64 {
    let c = rng.gen_range(0.3..0.45);
    if rng.gen_bool(0.5) {
        c
    } else {
        -c
    }
}

/// Places boxes of the given sizes without overlap (16 px apart, 8 px from
/// the border). Returns `None` when placement keeps failing.
fn place(rng: &mut ChaCha8Rng, w: usize, h: usize, sizes: &[(usize, usize)]) -> Option<Vec<[usize; 4]>> {
    let mut boxes: Vec<[usize; 4]> = Vec::new();
    for &(bw, bh) in sizes {
        let mut placed = false;
        for _ in 0..500 {
            if bw + 16 > w || bh + 16 > h {
                return None;
            }
            let x = rng.gen_range(8..=w - 8 - bw);
            let y = rng.gen_range(8..=h - 8 - bh);
            let clear = boxes.iter().all(|b| {
                x + bw + 16 <= b[0] || b[0] + b[2] + 16 <= x || y + bh + 16 <= b[1] || b[1] + b[3] + 16 <= y
            });
            if clear {
                boxes.push([x, y, bw, bh]);
                placed = true;
                break;
            }
        }
        if !placed {
            return None;
        }
    }
    Some(boxes)
}

#[derive(Debug, Clone)]
pub struct Composite {
    pub image: RasterGray,
    pub objects: Vec<PlantedObject>,
}

/// Three ribbed bars and two triangle outlines on a textured background.
pub fn proposal_composite(seed: u64, w: usize, h: usize) -> Composite {
    composite_with(seed, w, h, &[ObjectKind::Bar, ObjectKind::Bar, ObjectKind::Bar, ObjectKind::Triangle, ObjectKind::Triangle])
}

/// Arbitrary object mix on a textured background.
pub fn composite_with(seed: u64, w: usize, h: usize, kinds: &[ObjectKind]) -> Composite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes: Vec<(usize, usize)> = kinds.iter().map(|&k| random_object(&mut rng, k)).collect();
    let boxes = place(&mut rng, w, h, &sizes).expect("image too small for the requested objects");
    let objects: Vec<PlantedObject> = kinds
        .iter()
        .zip(boxes)
        .map(|(&kind, bbox)| PlantedObject {
            kind,
            bbox,
            contrast: contrast(&mut rng),
        })
        .collect();
    let base = background(&mut rng, w, h);
    let image = paint(base, w, h, &objects, &mut rng);
    Composite { image, objects }
}

/// A classifier patch: one object of `kind` planted on a fresh background,
/// cropped with a few pixels of random margin and resampled to 64×64.
pub fn toy_patch(kind: ObjectKind, seed: u64) -> RasterGray {
    let comp = composite_with(seed, 96, 96, &[kind]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_c0ffee);
    let [x, y, w, h] = comp.objects[0].bbox;
    let x0 = x.saturating_sub(rng.gen_range(0..=4));
    let y0 = y.saturating_sub(rng.gen_range(0..=4));
    let x1 = (x + w + rng.gen_range(0..=4)).min(96);
    let y1 = (y + h + rng.gen_range(0..=4)).min(96);
    crate::cnn::prepare_patch(&comp.image.crop(x0, y0, x1 - x0, y1 - y0))
}

/// Balanced bars / triangles / noise patches; train and test come from
/// disjoint seed ranges.
pub fn toy_dataset(seed: u64, n_train: usize, n_test: usize) -> LabeledDataset {
    let make = |offset: u64, n: usize| {
        (0..n)
            .map(|i| {
                let label = Label::ALL[i % 3];
                let kind = match label {
                    Label::Insulator => ObjectKind::Bar,
                    Label::Triangle => ObjectKind::Triangle,
                    Label::Other => ObjectKind::Noise,
                };
                let s = seed.wrapping_mul(1_000_003).wrapping_add(offset + i as u64);
                Sample {
                    patch: toy_patch(kind, s),
                    label,
                }
            })
            .collect()
    };
    LabeledDataset {
        train: make(0, n_train),
        test: make(1 << 32, n_test),
    }
}

#[derive(Debug, Clone)]
pub struct InspectionScene {
    pub image: RasterRgb,
    pub meter_per_pixel: f64,
    pub expected_distance_m: BTreeMap<Side, f64>,
    /// Insulator-like bars painted into the sky.
    pub insulators: Vec<PlantedObject>,
}

/// The example clearance scene with two ribbed insulator bars added in the
/// empty upper-left sky.
pub fn inspection_scene(seed: u64) -> InspectionScene {
    let base = clearance_scene(&ClearanceSceneSpec::example());
    let (w, h) = base.image.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let insulators: Vec<PlantedObject> = [(24usize, 24usize), (96, 40)]
        .iter()
        .map(|&(x, y)| {
            let (bw, bh) = random_object(&mut rng, ObjectKind::Bar);
            PlantedObject {
                kind: ObjectKind::Bar,
                bbox: [x + rng.gen_range(0..16), y + rng.gen_range(0..16), bw, bh],
                contrast: -rng.gen_range(0.3..0.45),
            }
        })
        .collect();
    let gray_base: Vec<f64> = vec![0.0; w * h];
    // paint the bars on a zero field, then add the offsets to every channel
    let offsets = paint_offsets(gray_base, w, h, &insulators, &mut rng);
    let image = RasterRgb::from_fn(w, h, |x, y| {
        let d = offsets.get(x, y) * 255.0;
        base.image.get(x, y).map(|c| (c as f64 + d).round().clamp(0.0, 255.0) as u8)
    });
    InspectionScene {
        image,
        meter_per_pixel: base.meter_per_pixel,
        expected_distance_m: base.expected_distance_m,
        insulators,
    }
}
