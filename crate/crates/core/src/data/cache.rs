// SPDX-License-Identifier: Apache-2.0

//! Binary window cache.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic   8 bytes  "VARNNWIN"
//! version u32      1
//! w       u32
//! d       u32
//! then three segments in the order train, val, test:
//!   count u64
//!   count records of: t u64, w*d f64 covariates (oldest row first),
//!                     w-1 f64 context targets, f64 target
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{SplitWindows, Splits};
use crate::error::{Error, Result};
use crate::model::WindowInstance;

const MAGIC: &[u8; 8] = b"VARNNWIN";
const VERSION: u32 = 1;

/// Key from the dataset hash and every setting that changes the windows.
pub fn cache_key(dataset_hash: &str, w: usize, stride: usize, splits: &Splits) -> String {
    let mut h = Sha256::new();
    h.update(dataset_hash.as_bytes());
    for v in [w, stride, splits.train.start, splits.train.end, splits.val.start, splits.val.end, splits.test.start, splits.test.end] {
        h.update((v as u64).to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// SHA-256 over the exact bits of a window list, used to prove that
/// compared models saw identical inputs.
pub fn window_fingerprint(windows: &[WindowInstance]) -> String {
    let mut h = Sha256::new();
    h.update((windows.len() as u64).to_le_bytes());
    for win in windows {
        h.update((win.t as u64).to_le_bytes());
        for v in win.xs.iter().flatten().chain(&win.ys_context).chain(std::iter::once(&win.y_target)) {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

fn shape_of(sets: &SplitWindows) -> Result<(usize, usize)> {
    let Some(first) = sets.train.first().or(sets.val.first()).or(sets.test.first()) else {
        return Ok((0, 0));
    };
    let (w, d) = (first.len(), first.current_x().len());
    for win in sets.train.iter().chain(&sets.val).chain(&sets.test) {
        win.validate(d)?;
        if win.len() != w {
            return Err(Error::shape("encode_windows", format!("w = {w}"), win.len()));
        }
    }
    Ok((w, d))
}

pub fn encode_windows(sets: &SplitWindows) -> Result<Vec<u8>> {
    let (w, d) = shape_of(sets)?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    for v in [VERSION, w as u32, d as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for seg in [&sets.train, &sets.val, &sets.test] {
        out.extend_from_slice(&(seg.len() as u64).to_le_bytes());
        for win in seg {
            out.extend_from_slice(&(win.t as u64).to_le_bytes());
            for v in win.xs.iter().flatten().chain(&win.ys_context).chain(std::iter::once(&win.y_target)) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format(format!("window cache truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_windows(bytes: &[u8]) -> Result<SplitWindows> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err(Error::Format("not a window cache (bad magic)".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported window cache version {version}")));
    }
    let (w, d) = (c.u32()? as usize, c.u32()? as usize);
    let mut segments: Vec<Vec<WindowInstance>> = Vec::with_capacity(3);
    for _ in 0..3 {
        let count = c.u64()? as usize;
        let record = 8 * (1 + w * d + w);
        if count.saturating_mul(record) > bytes.len() - c.pos {
            return Err(Error::Format("window cache truncated".into()));
        }
        let mut seg = Vec::with_capacity(count);
        for _ in 0..count {
            let t = c.u64()? as usize;
            let mut xs = Vec::with_capacity(w);
            for _ in 0..w {
                xs.push((0..d).map(|_| c.f64()).collect::<Result<Vec<_>>>()?);
            }
            let ys_context = (0..w.saturating_sub(1)).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
            let y_target = c.f64()?;
            seg.push(WindowInstance { xs, ys_context, y_target, t });
        }
        segments.push(seg);
    }
    if c.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes in window cache", bytes.len() - c.pos)));
    }
    let test = segments.pop().unwrap();
    let val = segments.pop().unwrap();
    let train = segments.pop().unwrap();
    Ok(SplitWindows { train, val, test })
}

fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.varnnwin"))
}

pub fn write_window_cache(dir: &Path, key: &str, sets: &SplitWindows) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = cache_path(dir, key);
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encode_windows(sets)?)?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

/// `Ok(None)` when no entry exists for `key`.
pub fn read_window_cache(dir: &Path, key: &str) -> Result<Option<SplitWindows>> {
    match fs::read(cache_path(dir, key)) {
        Ok(bytes) => decode_windows(&bytes).map(Some),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}
