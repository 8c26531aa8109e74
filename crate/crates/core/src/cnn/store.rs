//! Model files and on-disk datasets.
//!
//! Model layout, little-endian: magic `GSCNN1`, architecture code (u8), init
//! seed (u64), tensor count (u32), per tensor its rank (u32) and dims (u32
//! each), then every weight as f64 in tensor order.

use std::fs;
use std::path::{Path, PathBuf};

use super::{Arch, CnnModel, Label, LabeledDataset, Sample};
use crate::error::{Error, Result};
use crate::raster::io::load_image;
use crate::raster::to_gray;

const MAGIC: &[u8; 6] = b"GSCNN1";

pub fn model_to_bytes(m: &CnnModel) -> Vec<u8> {
    let shapes = m.arch.shapes();
    let mut out = Vec::with_capacity(32 + 8 * m.n_params());
    out.extend_from_slice(MAGIC);
    out.push(m.arch.code());
    out.extend_from_slice(&m.seed.to_le_bytes());
    out.extend_from_slice(&(shapes.len() as u32).to_le_bytes());
    for s in &shapes {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        for &d in s {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
    }
    for v in m.params.iter().flatten() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::ModelFormat("truncated".into()));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<CnnModel> {
    let mut r = Reader { buf: bytes };
    if r.take(6).ok() != Some(&MAGIC[..]) {
        return Err(Error::ModelFormat("bad magic".into()));
    }
    let code = r.take(1)?[0];
    let arch = Arch::from_code(code).ok_or_else(|| Error::ModelFormat(format!("unknown architecture code {code}")))?;
    let seed = r.u64()?;
    let expected = arch.shapes();
    let n = r.u32()? as usize;
    if n != expected.len() {
        return Err(Error::ModelFormat(format!("expected {} tensors, found {n}", expected.len())));
    }
    for want in &expected {
        let rank = r.u32()? as usize;
        if rank > 8 {
            return Err(Error::ModelFormat("implausible tensor rank".into()));
        }
        let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if &dims != want {
            return Err(Error::ModelFormat(format!("shape {dims:?} does not match {want:?}")));
        }
    }
    let params = expected
        .iter()
        .map(|s| {
            let len: usize = s.iter().product();
            let raw = r.take(8 * len)?;
            Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    if !r.buf.is_empty() {
        return Err(Error::ModelFormat("trailing bytes".into()));
    }
    Ok(CnnModel { arch, seed, params })
}

pub fn save_model(m: &CnnModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_bytes(m))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CnnModel> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    model_from_bytes(&fs::read(path)?)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<Vec<_>>>()?;
    v.sort();
    Ok(v)
}

fn load_split(dir: &Path) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for label in Label::ALL {
        let class_dir = dir.join(label.name());
        if !class_dir.is_dir() {
            continue;
        }
        for p in sorted_entries(&class_dir)? {
            let is_png = p.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("png"));
            if !is_png {
                continue;
            }
            let patch = super::prepare_patch(&to_gray(&load_image(&p)?));
            out.push(Sample { patch, label });
        }
    }
    Ok(out)
}

/// Reads `<dir>/<class>/*.png`, or `<dir>/train/<class>/*.png` plus
/// `<dir>/test/<class>/*.png` when a `train` subdirectory exists. Class
/// directories are named after the labels; patches of any size are resampled
/// to the network input.
pub fn load_dataset_dir(dir: impl AsRef<Path>) -> Result<LabeledDataset> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let data = if dir.join("train").is_dir() {
        let test_dir = dir.join("test");
        LabeledDataset {
            train: load_split(&dir.join("train"))?,
            test: if test_dir.is_dir() { load_split(&test_dir)? } else { Vec::new() },
        }
    } else {
        LabeledDataset {
            train: load_split(dir)?,
            test: Vec::new(),
        }
    };
    if data.train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(data)
}
