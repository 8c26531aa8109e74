//! PNG and binary PGM/PPM reading and writing, plus annotation overlays.

use std::path::Path;

use image::{ImageError, ImageFormat, ImageReader};
use serde::{Deserialize, Serialize};

use super::{to_u8, BitMask, RasterGray, RasterRgb};
use crate::error::{Error, Result};

pub const RED: [u8; 3] = [255, 0, 0];
pub const YELLOW: [u8; 3] = [255, 255, 0];
pub const WHITE: [u8; 3] = [255, 255, 255];
pub const GREEN: [u8; 3] = [0, 200, 0];

/// Shape drawn on top of an image by [`render_overlay`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Annotation {
    /// Box outline; `(x, y)` is the top-left pixel.
    Rect {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        color: [u8; 3],
    },
    Line {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
        color: [u8; 3],
        dotted: bool,
    },
    #[serde(skip)]
    Mask { mask: BitMask, color: [u8; 3] },
}

pub fn load_image(path: impl AsRef<Path>) -> Result<RasterRgb> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let reader = ImageReader::open(path)?
        .with_guessed_format()
        .map_err(Error::Io)?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        Some(other) => return Err(Error::UnsupportedFormat(format!("{other:?}"))),
        None => {
            return Err(Error::UnsupportedFormat(format!(
                "unrecognized header in {}",
                path.display()
            )))
        }
    }
    let decoded = reader.decode().map_err(|e| match e {
        ImageError::Unsupported(u) => Error::UnsupportedFormat(u.to_string()),
        other => Error::MalformedImage {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })?;
    let rgb = decoded.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data = rgb.pixels().map(|p| p.0).collect();
    RasterRgb::new(w, h, data)
}

fn format_for(path: &Path) -> Result<ImageFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "png" => Ok(ImageFormat::Png),
        "ppm" | "pgm" | "pnm" => Ok(ImageFormat::Pnm),
        _ => Err(Error::UnsupportedFormat(format!(
            "cannot write {}: use .png, .ppm or .pgm",
            path.display()
        ))),
    }
}

fn write_err(path: &Path, e: ImageError) -> Error {
    match e {
        ImageError::IoError(io) => Error::Io(io),
        other => Error::UnsupportedFormat(format!("{}: {other}", path.display())),
    }
}

/// Writes an RGB raster; the format follows the extension (`.png`, `.ppm`).
pub fn save_png(img: &RasterRgb, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let raw: Vec<u8> = img.data().iter().flatten().copied().collect();
    let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, raw)
        .expect("buffer size matches dimensions");
    buf.save_with_format(path, format)
        .map_err(|e| write_err(path, e))
}

/// Writes a gray raster at 8 bits (`.png` or `.pgm`).
pub fn save_gray(img: &RasterGray, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = format_for(path)?;
    let raw: Vec<u8> = img.data().iter().map(|&v| to_u8(v)).collect();
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, raw)
        .expect("buffer size matches dimensions");
    buf.save_with_format(path, format)
        .map_err(|e| write_err(path, e))
}

pub fn save_mask(mask: &BitMask, path: impl AsRef<Path>) -> Result<()> {
    save_gray(&mask.to_gray(), path)
}

/// Copy of `img` with every annotation painted in order.
pub fn render_overlay(img: &RasterRgb, shapes: &[Annotation]) -> RasterRgb {
    let mut out = img.clone();
    for shape in shapes {
        match shape {
            Annotation::Rect { x, y, w, h, color } => draw_rect(&mut out, *x, *y, *w, *h, *color),
            Annotation::Line {
                x0,
                y0,
                x1,
                y1,
                color,
                dotted,
            } => draw_line(&mut out, (*x0, *y0), (*x1, *y1), *color, *dotted),
            Annotation::Mask { mask, color } => {
                if mask.dims() != out.dims() {
                    continue;
                }
                for yy in 0..out.height() {
                    for xx in 0..out.width() {
                        if mask.get(xx, yy) {
                            out.set(xx, yy, *color);
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn save_overlay(img: &RasterRgb, shapes: &[Annotation], path: impl AsRef<Path>) -> Result<()> {
    save_png(&render_overlay(img, shapes), path)
}

fn draw_rect(img: &mut RasterRgb, x: usize, y: usize, w: usize, h: usize, color: [u8; 3]) {
    if w == 0 || h == 0 || x >= img.width() || y >= img.height() {
        return;
    }
    let x1 = (x + w - 1).min(img.width() - 1);
    let y1 = (y + h - 1).min(img.height() - 1);
    for xx in x..=x1 {
        img.set(xx, y, color);
        img.set(xx, y1, color);
    }
    for yy in y..=y1 {
        img.set(x, yy, color);
        img.set(x1, yy, color);
    }
}

fn draw_line(img: &mut RasterRgb, p0: (f64, f64), p1: (f64, f64), color: [u8; 3], dotted: bool) {
    let (mut x, mut y) = (p0.0.round() as i64, p0.1.round() as i64);
    let (xe, ye) = (p1.0.round() as i64, p1.1.round() as i64);
    let dx = (xe - x).abs();
    let dy = -(ye - y).abs();
    let sx = if x < xe { 1 } else { -1 };
    let sy = if y < ye { 1 } else { -1 };
    let mut err = dx + dy;
    let mut step = 0usize;
    loop {
        let on = !dotted || step % 6 < 3;
        if on && x >= 0 && y >= 0 && (x as usize) < img.width() && (y as usize) < img.height() {
            img.set(x as usize, y as usize, color);
        }
        if x == xe && y == ye {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
        step += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rgb(seed: u64, w: usize, h: usize) -> RasterRgb {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RasterRgb::from_fn(w, h, |_, _| [rng.gen(), rng.gen(), rng.gen()])
    }

    #[test]
    fn png_and_ppm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = random_rgb(3, 17, 9);
        for name in ["a.png", "a.ppm"] {
            let p = dir.path().join(name);
            save_png(&img, &p).unwrap();
            assert_eq!(load_image(&p).unwrap(), img, "{name}");
        }
    }

    #[test]
    fn pgm_round_trip_through_gray() {
        let dir = tempfile::tempdir().unwrap();
        let g = RasterGray::from_fn(5, 4, |x, y| ((x * 4 + y) * 10) as f64 / 255.0);
        let p = dir.path().join("g.pgm");
        save_gray(&g, &p).unwrap();
        let back = load_image(&p).unwrap();
        for y in 0..4 {
            for x in 0..5 {
                let v = ((x * 4 + y) * 10) as u8;
                assert_eq!(back.get(x, y), [v, v, v]);
            }
        }
    }

    #[test]
    fn missing_file_is_reported() {
        let err = load_image("/definitely/not/here.png").unwrap_err();
        assert!(matches!(err, Error::MissingFile(_)));
    }

    #[test]
    fn unsupported_and_malformed_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let junk = dir.path().join("junk.bin");
        std::fs::write(&junk, b"this is not an image at all").unwrap();
        assert!(matches!(load_image(&junk), Err(Error::UnsupportedFormat(_))));

        let bad = dir.path().join("bad.ppm");
        std::fs::write(&bad, b"P6\nxx yy\n255\n").unwrap();
        assert!(matches!(load_image(&bad), Err(Error::MalformedImage { .. })));

        let out = dir.path().join("out.jpg");
        assert!(matches!(
            save_png(&random_rgb(1, 2, 2), &out),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn rect_overlay_recolors_exactly_the_perimeter() {
        let img = RasterRgb::filled(10, 10, [0, 0, 0]);
        let out = render_overlay(
            &img,
            &[Annotation::Rect {
                x: 2,
                y: 3,
                w: 5,
                h: 4,
                color: RED,
            }],
        );
        let mut expected = std::collections::HashSet::new();
        for x in 2..=6 {
            expected.insert((x, 3));
            expected.insert((x, 6));
        }
        for y in 3..=6 {
            expected.insert((2, y));
            expected.insert((6, y));
        }
        for y in 0..10 {
            for x in 0..10 {
                let want = if expected.contains(&(x, y)) { RED } else { [0, 0, 0] };
                assert_eq!(out.get(x, y), want, "({x},{y})");
            }
        }
    }

    #[test]
    fn lines_and_masks_are_drawn() {
        let img = RasterRgb::filled(8, 8, [0, 0, 0]);
        let mask = BitMask::from_fn(8, 8, |x, _| x == 7);
        let out = render_overlay(
            &img,
            &[
                Annotation::Line {
                    x0: 0.0,
                    y0: 0.0,
                    x1: 6.0,
                    y1: 6.0,
                    color: YELLOW,
                    dotted: false,
                },
                Annotation::Mask { mask, color: GREEN },
            ],
        );
        for i in 0..7 {
            assert_eq!(out.get(i, i), YELLOW);
        }
        assert_eq!(out.get(7, 3), GREEN);
        assert_eq!(out.get(1, 0), [0, 0, 0]);
    }
}
