// SPDX-License-Identifier: Apache-2.0

//! Named parameter tensors and their on-disk layouts.
//!
//! Binary layout (all integers little-endian):
//!
//! ```text
//! b"VARNNPAR"                 magic, 8 bytes
//! u32 version                 currently 1
//! u32 tensor_count
//! repeated tensor_count times:
//!   u32 name_len, name bytes (UTF-8)
//!   u32 rows, u32 cols
//!   rows * cols f64 values, row-major, IEEE-754 little-endian
//! ```
//!
//! JSON layout:
//!
//! ```text
//! {"format": "varnn-params", "version": 1,
//!  "tensors": [{"name": "Wz", "rows": 4, "cols": 3, "values": [...]}, ...]}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Mat;

const MAGIC: &[u8; 8] = b"VARNNPAR";
const VERSION: u32 = 1;

/// A fixed, ordered set of named tensors.
///
/// Gradients and optimizer moments reuse the parameter type itself, so
/// every accumulator is shape-congruent with the parameters by construction.
pub trait Parameters: Clone + Send + Sync {
    fn tensors(&self) -> Vec<(&'static str, &Mat)>;
    fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Mat)>;

    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill(0.0);
        z
    }

    fn fill(&mut self, value: f64) {
        for (_, t) in self.tensors_mut() {
            t.fill(value);
        }
    }

    /// `self += scale * other`.
    fn add_scaled(&mut self, other: &Self, scale: f64) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_scaled(b, scale);
        }
    }

    fn scale(&mut self, factor: f64) {
        for (_, t) in self.tensors_mut() {
            t.as_mut_slice().iter_mut().for_each(|v| *v *= factor);
        }
    }

    fn scalar_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.is_finite())
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        self.tensors()
            .iter()
            .zip(other.tensors())
            .flat_map(|((_, a), (_, b))| a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct JsonTensor {
    name: String,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonParams {
    format: String,
    version: u32,
    tensors: Vec<JsonTensor>,
}

pub fn encode_binary<P: Parameters>(params: &P) -> Vec<u8> {
    let tensors = params.tensors();
    let mut out = Vec::with_capacity(16 + params.scalar_count() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(t.cols() as u32).to_le_bytes());
        for v in t.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Decodes the binary layout into `(name, tensor)` pairs in file order.
pub fn decode_binary(bytes: &[u8]) -> Result<Vec<(String, Mat)>> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(8)? != MAGIC {
        return Err(Error::Format("bad magic, not a parameter file".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported parameter file version {version}")));
    }
    let count = cur.u32()? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = cur.u32()? as usize;
        let name = std::str::from_utf8(cur.take(name_len)?)
            .map_err(|e| Error::Format(format!("tensor name: {e}")))?
            .to_string();
        let rows = cur.u32()? as usize;
        let cols = cur.u32()? as usize;
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let raw: [u8; 8] = cur.take(8)?.try_into().expect("8 bytes");
            values.push(f64::from_le_bytes(raw));
        }
        out.push((name, Mat::from_vec(rows, cols, values)?));
    }
    if cur.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    Ok(out)
}

pub fn encode_json<P: Parameters>(params: &P) -> Result<String> {
    let doc = JsonParams {
        format: "varnn-params".into(),
        version: VERSION,
        tensors: params
            .tensors()
            .into_iter()
            .map(|(name, t)| JsonTensor {
                name: name.to_string(),
                rows: t.rows(),
                cols: t.cols(),
                values: t.as_slice().to_vec(),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn decode_json(text: &str) -> Result<Vec<(String, Mat)>> {
    let doc: JsonParams = serde_json::from_str(text)?;
    if doc.format != "varnn-params" || doc.version != VERSION {
        return Err(Error::Format(format!("unsupported parameter document {} v{}", doc.format, doc.version)));
    }
    doc.tensors
        .into_iter()
        .map(|t| Ok((t.name, Mat::from_vec(t.rows, t.cols, t.values)?)))
        .collect()
}

/// Copies decoded tensors into `params`, requiring identical names, order
/// and shapes.
pub fn load_into<P: Parameters>(params: &mut P, decoded: Vec<(String, Mat)>) -> Result<()> {
    let mut slots = params.tensors_mut();
    if slots.len() != decoded.len() {
        return Err(Error::Format(format!(
            "expected {} tensors, file has {}",
            slots.len(),
            decoded.len()
        )));
    }
    for ((name, slot), (file_name, mat)) in slots.iter_mut().zip(decoded) {
        if *name != file_name || !slot.same_shape(&mat) {
            return Err(Error::Format(format!(
                "tensor {name} {}x{} does not match file tensor {file_name} {}x{}",
                slot.rows(),
                slot.cols(),
                mat.rows(),
                mat.cols()
            )));
        }
        **slot = mat;
    }
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("truncated parameter file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}
