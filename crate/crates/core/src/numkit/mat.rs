// SPDX-License-Identifier: Apache-2.0

use std::ops::{Index, IndexMut};

use super::{all_finite, NoTally, Tally};
use crate::error::{Error, Result};

/// Row-major dense matrix. Entry `(i, j)` lives at `data[i * cols + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting wrong lengths and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Mat::from_vec",
                format!("{} values for {rows}x{cols}", rows * cols),
                data.len(),
            ));
        }
        if !all_finite(&data) {
            return Err(Error::NonFinite("Mat::from_vec"));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::shape("Mat::from_rows", cols, bad.len()));
        }
        Mat::from_vec(rows.len(), cols, rows.concat())
    }

    /// A `len x 1` column.
    pub fn column(values: &[f64]) -> Result<Self> {
        Mat::from_vec(values.len(), 1, values.to_vec())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col_values(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn same_shape(&self, other: &Mat) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Mat, scale: f64) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    /// `self += a * b^T` where `a.len() == rows` and `b.len() == cols`.
    pub fn add_outer(&mut self, a: &[f64], b: &[f64]) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (r, &bj) in row.iter_mut().zip(b) {
                *r += ai * bj;
            }
        }
    }

    /// Copies columns `[start, start + n)` into a new matrix.
    pub fn col_block(&self, start: usize, n: usize) -> Mat {
        assert!(start + n <= self.cols);
        let mut out = Mat::zeros(self.rows, n);
        for i in 0..self.rows {
            out.data[i * n..(i + 1) * n].copy_from_slice(&self.row(i)[start..start + n]);
        }
        out
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// `m * v`.
pub fn matvec(m: &Mat, v: &[f64]) -> Result<Vec<f64>> {
    affine_impl(m, v, None, &mut NoTally, "matvec")
}

/// `m * v + bias`, accumulating along columns before adding the bias.
pub fn affine(m: &Mat, v: &[f64], bias: &[f64]) -> Result<Vec<f64>> {
    affine_impl(m, v, Some(bias), &mut NoTally, "affine")
}

/// [`affine`] that reports `rows * cols` multiplies to `tally`.
pub fn affine_counted<T: Tally>(m: &Mat, v: &[f64], bias: &[f64], tally: &mut T) -> Result<Vec<f64>> {
    affine_impl(m, v, Some(bias), tally, "affine")
}

fn affine_impl<T: Tally>(
    m: &Mat,
    v: &[f64],
    bias: Option<&[f64]>,
    tally: &mut T,
    op: &'static str,
) -> Result<Vec<f64>> {
    if m.cols != v.len() {
        return Err(Error::shape(
            op,
            format!("vector of len {} (matrix is {}x{})", m.cols, m.rows, m.cols),
            format!("len {}", v.len()),
        ));
    }
    if let Some(b) = bias {
        if b.len() != m.rows {
            return Err(Error::shape(op, format!("bias of len {}", m.rows), format!("len {}", b.len())));
        }
    }
    tally.add(m.rows * m.cols);
    let mut out = Vec::with_capacity(m.rows);
    for i in 0..m.rows {
        let mut acc = 0.0;
        for (w, x) in m.row(i).iter().zip(v) {
            acc += w * x;
        }
        if let Some(b) = bias {
            acc += b[i];
        }
        out.push(acc);
    }
    if !all_finite(&out) {
        return Err(Error::NonFinite(op));
    }
    Ok(out)
}

/// `m^T * v`.
pub fn matvec_transposed(m: &Mat, v: &[f64]) -> Result<Vec<f64>> {
    if m.rows != v.len() {
        return Err(Error::shape(
            "matvec_transposed",
            format!("vector of len {} (matrix is {}x{})", m.rows, m.rows, m.cols),
            format!("len {}", v.len()),
        ));
    }
    let mut out = vec![0.0; m.cols];
    for (i, &vi) in v.iter().enumerate() {
        for (o, w) in out.iter_mut().zip(m.row(i)) {
            *o += w * vi;
        }
    }
    if !all_finite(&out) {
        return Err(Error::NonFinite("matvec_transposed"));
    }
    Ok(out)
}
