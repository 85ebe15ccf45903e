//! Dense complex matrices and the matrix permanent.
//!
//! [`permanent`] is Ryser's inclusion–exclusion formula walked in Gray-code
//! order, so consecutive subsets differ by one column and every step updates
//! the row sums in O(n). [`permanent_naive`] sums over all n! permutations and
//! exists as an independent oracle for small matrices.

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default largest dimension accepted by [`permanent`].
pub const DEFAULT_PERMANENT_CAP: usize = 30;

/// Largest dimension accepted by [`permanent_naive`].
pub const NAIVE_PERMANENT_CAP: usize = 9;

/// Dense complex matrix stored row-major.
///
/// The 0×0 matrix is allowed (its permanent is 1); otherwise both dimensions
/// are at least one. All entries are finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if (rows == 0) != (cols == 0) {
            return Err(Error::DimensionMismatch {
                expected: rows,
                got: cols,
            });
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(pos / cols, pos % cols));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// The 0×0 matrix.
    pub fn empty() -> Self {
        Self::zeros(0, 0)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a real matrix from nested rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            if r.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    got: r.len(),
                });
            }
            data.extend(r.iter().map(|&x| Complex64::new(x, 0.0)));
        }
        Self::new(n_rows, n_cols, data)
    }

    pub fn diagonal_matrix(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `max |(M M†)_{ij} - δ_{ij}|`; zero for a unitary matrix.
    pub fn unitarity_defect(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::NotSquare(self.rows, self.cols));
        }
        let gram = self.matmul(&self.adjoint())?;
        gram.max_abs_diff(&Self::identity(self.rows))
    }

    pub fn ensure_unitary(&self, tol: f64) -> Result<()> {
        let defect = self.unitarity_defect()?;
        if defect > tol {
            return Err(Error::NotUnitary(defect));
        }
        Ok(())
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.rows == 0 {
            return Vec::new();
        }
        let mut sv: Vec<f64> = self.to_nalgebra().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }

    pub fn to_json(&self) -> Result<String> {
        if !self.is_square() {
            return Err(Error::NotSquare(self.rows, self.cols));
        }
        let doc = MatrixJson {
            n: self.rows,
            re: self.data.iter().map(|z| z.re).collect(),
            im: self.data.iter().map(|z| z.im).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MatrixJson = serde_json::from_str(text)?;
        if doc.re.len() != doc.n * doc.n || doc.im.len() != doc.n * doc.n {
            return Err(Error::DimensionMismatch {
                expected: doc.n * doc.n,
                got: doc.re.len().max(doc.im.len()),
            });
        }
        let data = doc
            .re
            .iter()
            .zip(&doc.im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        Self::new(doc.n, doc.n, data)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// On-disk matrix format: square, row-major, split real and imaginary parts.
#[derive(Debug, Serialize, Deserialize)]
struct MatrixJson {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Tuning knobs for [`permanent_with`].
#[derive(Clone, Copy, Debug)]
pub struct PermanentOptions {
    /// Dimensions above this are refused.
    pub max_dim: usize,
    /// Number of contiguous Gray-code blocks; blocks > 1 evaluates them on the
    /// rayon pool. The result depends only on this count, never on scheduling.
    pub blocks: usize,
}

impl Default for PermanentOptions {
    fn default() -> Self {
        Self {
            max_dim: DEFAULT_PERMANENT_CAP,
            blocks: 1,
        }
    }
}

/// Permanent by Ryser's formula with Gray-code updates, sequential.
pub fn permanent(m: &ComplexMatrix) -> Result<Complex64> {
    permanent_with(m, &PermanentOptions::default())
}

pub fn permanent_with(m: &ComplexMatrix, opts: &PermanentOptions) -> Result<Complex64> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.rows(), m.cols()));
    }
    let n = m.rows();
    if n > opts.max_dim || n > 62 {
        return Err(Error::ResourceRefused(format!(
            "permanent of dimension {n} exceeds cap {}",
            opts.max_dim.min(62)
        )));
    }
    match n {
        0 => return Ok(Complex64::new(1.0, 0.0)),
        1 => return Ok(m[(0, 0)]),
        _ => {}
    }

    // Column-major copy so that toggling column j reads contiguous memory.
    let columns = m.transpose();
    let columns = columns.as_slice();

    let total: u64 = 1 << n;
    let blocks = (opts.blocks.max(1) as u64).min(total - 1);
    let chunk = (total - 1).div_ceil(blocks);
    let ranges: Vec<(u64, u64)> = (0..blocks)
        .map(|b| (1 + b * chunk, (1 + (b + 1) * chunk).min(total)))
        .filter(|(lo, hi)| lo < hi)
        .collect();

    let partials: Vec<Complex64> = if ranges.len() == 1 {
        vec![ryser_range(columns, n, ranges[0].0, ranges[0].1)]
    } else {
        ranges
            .par_iter()
            .map(|&(lo, hi)| ryser_range(columns, n, lo, hi))
            .collect()
    };
    let sum: Complex64 = partials.into_iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b);
    Ok(if n.is_multiple_of(2) { sum } else { -sum })
}

/// Signed Ryser terms for Gray-code indices `start..end` (`start >= 1`).
///
/// Index `i` selects the column subset `gray(i) = i ^ (i >> 1)`; the term is
/// `(-1)^{|S|} Π_k Σ_{j∈S} a[k][j]`. The caller applies the overall `(-1)^n`.
fn ryser_range(columns: &[Complex64], n: usize, start: u64, end: u64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    let mut sums = vec![zero; n];
    let g0 = start ^ (start >> 1);
    for j in 0..n {
        if (g0 >> j) & 1 == 1 {
            for (s, &c) in sums.iter_mut().zip(&columns[j * n..(j + 1) * n]) {
                *s += c;
            }
        }
    }

    let signed_product = |sums: &[Complex64], gray: u64| {
        let p = sums.iter().fold(Complex64::new(1.0, 0.0), |acc, &s| acc * s);
        if gray.count_ones() % 2 == 1 {
            -p
        } else {
            p
        }
    };

    let mut acc = signed_product(&sums, g0);
    for i in (start + 1)..end {
        let j = i.trailing_zeros() as usize;
        let gray = i ^ (i >> 1);
        let col = &columns[j * n..(j + 1) * n];
        if (gray >> j) & 1 == 1 {
            for (s, &c) in sums.iter_mut().zip(col) {
                *s += c;
            }
        } else {
            for (s, &c) in sums.iter_mut().zip(col) {
                *s -= c;
            }
        }
        acc += signed_product(&sums, gray);
    }
    acc
}

/// Permanent as the direct sum over all n! permutations (n ≤ 9).
pub fn permanent_naive(m: &ComplexMatrix) -> Result<Complex64> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.rows(), m.cols()));
    }
    let n = m.rows();
    if n > NAIVE_PERMANENT_CAP {
        return Err(Error::ResourceRefused(format!(
            "naive permanent of dimension {n} exceeds {NAIVE_PERMANENT_CAP}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        total += perm
            .iter()
            .enumerate()
            .fold(Complex64::new(1.0, 0.0), |acc, (k, &p)| acc * m[(k, p)]);
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(total)
}

/// Restriction of a square matrix to the rows and columns in `keep`, in the
/// order given.
pub fn principal_submatrix(m: &ComplexMatrix, keep: &[usize]) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.rows(), m.cols()));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= m.rows()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            dim: m.rows(),
        });
    }
    Ok(ComplexMatrix::from_fn(keep.len(), keep.len(), |i, j| {
        m[(keep[i], keep[j])]
    }))
}

/// Advances `perm` to the next permutation in lexicographic order; returns
/// false (leaving `perm` sorted ascending) after the last one.
pub(crate) fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        perm.reverse();
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}
