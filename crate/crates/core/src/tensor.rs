//! Dense order-3 tensors, dense matrices and the multilinear primitives.
//!
//! Storage is column-major throughout. A tensor entry `X[i][j][k]` lives at
//! offset `(k * n2 + j) * n1 + i`, and a matrix entry `M[r][c]` at
//! `c * rows + r`. With these conventions the mode-1 unfolding of a tensor is
//! the same buffer read as an `n1 x (n2 * n3)` matrix.
//!
//! Unfolding layouts (column index of entry `X[i][j][k]`):
//!
//! | mode | shape             | column        |
//! |------|-------------------|---------------|
//! | 1    | `n1 x (n2 * n3)`  | `j + n2 * k`  |
//! | 2    | `n2 x (n3 * n1)`  | `k + n3 * i`  |
//! | 3    | `n3 x (n1 * n2)`  | `i + n1 * j`  |

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the three tensor modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    /// 1-based mode number.
    pub fn number(self) -> usize {
        match self {
            Mode::One => 1,
            Mode::Two => 2,
            Mode::Three => 3,
        }
    }

    fn index(self) -> usize {
        self.number() - 1
    }
}

impl TryFrom<usize> for Mode {
    type Error = Error;

    fn try_from(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            _ => Err(Error::arg(format!("mode must be 1, 2 or 3, got {n}"))),
        }
    }
}

/// Dense real matrix in column-major order.
#[derive(Clone, PartialEq)]
pub struct FactorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// `I_cols` stacked over zeros (or truncated when `cols > rows`).
    pub fn padded_identity(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Build from column-major data.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::arg(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(p) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("non-finite matrix entry at offset {p}")));
        }
        Ok(Self { rows, cols, data })
    }

    /// Build from row slices; convenient in tests.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == nc), "ragged rows");
        Self::from_fn(nr, nc, |r, c| rows[r][c])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[c * self.rows + r] = v;
    }

    pub fn col(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn col_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::arg(format!(
                "matmul shape mismatch: {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for c in 0..other.cols {
            let dst = &mut out.data[c * self.rows..(c + 1) * self.rows];
            for k in 0..self.cols {
                let b = other.get(k, c);
                if b == 0.0 {
                    continue;
                }
                for (d, a) in dst.iter_mut().zip(self.col(k)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self^T * other`.
    pub fn t_matmul(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::arg(format!(
                "t_matmul shape mismatch: ({}x{})^T * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.cols, other.cols, |r, c| {
            dot(self.col(r), other.col(c))
        }))
    }

    /// `self * self^T`, exactly symmetric.
    pub fn gram_rows(&self) -> Self {
        let n = self.rows;
        let mut out = Self::zeros(n, n);
        for k in 0..self.cols {
            let col = self.col(k);
            for c in 0..n {
                let b = col[c];
                if b == 0.0 {
                    continue;
                }
                let dst = &mut out.data[c * n..c * n + c + 1];
                for (d, a) in dst.iter_mut().zip(&col[..=c]) {
                    *d += a * b;
                }
            }
        }
        for c in 0..n {
            for r in c + 1..n {
                out.data[c * n + r] = out.data[r * n + c];
            }
        }
        out
    }

    /// `self^T * self`, exactly symmetric.
    pub fn gram_cols(&self) -> Self {
        let n = self.cols;
        let mut out = Self::zeros(n, n);
        for c in 0..n {
            for r in 0..=c {
                let v = dot(self.col(r), self.col(c));
                out.data[c * n + r] = v;
                out.data[r * n + c] = v;
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::arg("matrix shape mismatch in subtraction"));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Keep the first `k` columns.
    pub fn leading_cols(&self, k: usize) -> Self {
        let k = k.min(self.cols);
        Self {
            rows: self.rows,
            cols: k,
            data: self.data[..k * self.rows].to_vec(),
        }
    }

    /// Orthogonal projector onto the column space, `Q Q^T`. Only meaningful
    /// for orthonormal columns.
    pub fn projector(&self) -> Self {
        self.gram_rows()
    }

    /// `max |Q^T Q - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.gram_cols();
        let mut err: f64 = 0.0;
        for c in 0..self.cols {
            for r in 0..self.cols {
                let target = if r == c { 1.0 } else { 0.0 };
                err = err.max((g.get(r, c) - target).abs());
            }
        }
        err
    }
}

impl fmt::Debug for FactorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FactorMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(12) {
            let row: Vec<String> = (0..self.cols.min(8))
                .map(|c| format!("{:+.6e}", self.get(r, c)))
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense order-3 real tensor.
#[derive(Clone, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

/// Tucker core tensor; same representation as any other tensor.
pub type CoreTensor = Tensor3;

impl Tensor3 {
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        Self {
            dims: [n1, n2, n3],
            data: vec![0.0; n1 * n2 * n3],
        }
    }

    pub fn filled(n1: usize, n2: usize, n3: usize, value: f64) -> Self {
        Self {
            dims: [n1, n2, n3],
            data: vec![value; n1 * n2 * n3],
        }
    }

    /// Build from values in canonical order (i fastest, k slowest).
    pub fn from_vec(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::arg(format!("tensor dims must be positive, got {dims:?}")));
        }
        let n = dims[0] * dims[1] * dims[2];
        if data.len() != n {
            return Err(Error::arg(format!(
                "tensor {dims:?} needs {n} values, got {}",
                data.len()
            )));
        }
        if let Some(p) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("non-finite tensor entry at index {p}")));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(
        n1: usize,
        n2: usize,
        n3: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(n1 * n2 * n3);
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    data.push(f(i, j, k));
                }
            }
        }
        Self {
            dims: [n1, n2, n3],
            data,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn dim(&self, mode: Mode) -> usize {
        self.dims[mode.index()]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let o = self.offset(i, j, k);
        self.data[o] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Frontal slice `X[:, :, k]` as an `n1 x n2` matrix.
    pub fn frontal_slice(&self, k: usize) -> FactorMatrix {
        let s = self.dims[0] * self.dims[1];
        FactorMatrix {
            rows: self.dims[0],
            cols: self.dims[1],
            data: self.data[k * s..(k + 1) * s].to_vec(),
        }
    }

    pub fn frontal_slice_data(&self, k: usize) -> &[f64] {
        let s = self.dims[0] * self.dims[1];
        &self.data[k * s..(k + 1) * s]
    }

    pub fn frontal_slice_data_mut(&mut self, k: usize) -> &mut [f64] {
        let s = self.dims[0] * self.dims[1];
        &mut self.data[k * s..(k + 1) * s]
    }

    /// Sum of squared entries.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::arg(format!(
                "tensor dims mismatch: {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(Self {
            dims: self.dims,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// `||self - other||_F^2` without allocating.
    pub fn distance_sq(&self, other: &Self) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::arg(format!(
                "tensor dims mismatch: {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dims: self.dims,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Matricize along `mode`; see the module docs for the column layouts.
    pub fn unfold(&self, mode: Mode) -> FactorMatrix {
        let [n1, n2, n3] = self.dims;
        match mode {
            Mode::One => FactorMatrix {
                rows: n1,
                cols: n2 * n3,
                data: self.data.clone(),
            },
            Mode::Two => {
                let mut out = FactorMatrix::zeros(n2, n3 * n1);
                for k in 0..n3 {
                    for j in 0..n2 {
                        for i in 0..n1 {
                            out.set(j, k + n3 * i, self.get(i, j, k));
                        }
                    }
                }
                out
            }
            Mode::Three => {
                let mut out = FactorMatrix::zeros(n3, n1 * n2);
                for k in 0..n3 {
                    for j in 0..n2 {
                        for i in 0..n1 {
                            out.set(k, i + n1 * j, self.get(i, j, k));
                        }
                    }
                }
                out
            }
        }
    }

    /// Inverse of [`Tensor3::unfold`].
    pub fn fold(m: &FactorMatrix, mode: Mode, dims: [usize; 3]) -> Result<Self> {
        let [n1, n2, n3] = dims;
        let expected = match mode {
            Mode::One => (n1, n2 * n3),
            Mode::Two => (n2, n3 * n1),
            Mode::Three => (n3, n1 * n2),
        };
        if m.shape() != expected {
            return Err(Error::arg(format!(
                "cannot fold {}x{} into {dims:?} along mode {}",
                m.rows,
                m.cols,
                mode.number()
            )));
        }
        Ok(match mode {
            Mode::One => Self {
                dims,
                data: m.data.clone(),
            },
            Mode::Two => Self::from_fn(n1, n2, n3, |i, j, k| m.get(j, k + n3 * i)),
            Mode::Three => Self::from_fn(n1, n2, n3, |i, j, k| m.get(k, i + n1 * j)),
        })
    }

    /// Mode-n product.
    ///
    /// With `contract = true` the factor is applied transposed,
    /// `Y[.., p, ..] = sum_i M[i][p] X[.., i, ..]`, so `M` must have as many
    /// rows as the tensor's extent along `mode`. With `contract = false`,
    /// `Y[.., i, ..] = sum_p M[i][p] X[.., p, ..]` and `M` must have as many
    /// columns as that extent.
    pub fn mode_multiply(&self, m: &FactorMatrix, mode: Mode, contract: bool) -> Result<Self> {
        let n = self.dim(mode);
        let (inner_dim, new_n) = if contract {
            (m.rows, m.cols)
        } else {
            (m.cols, m.rows)
        };
        if inner_dim != n {
            return Err(Error::arg(format!(
                "mode-{} product: tensor extent {n} does not match matrix {}x{} ({})",
                mode.number(),
                m.rows,
                m.cols,
                if contract { "contract" } else { "expand" }
            )));
        }
        let [n1, n2, n3] = self.dims;
        let (inner, outer) = match mode {
            Mode::One => (1, n2 * n3),
            Mode::Two => (n1, n3),
            Mode::Three => (n1 * n2, 1),
        };
        let mut dims = self.dims;
        dims[mode.index()] = new_n;
        let mut out = vec![0.0; inner * new_n * outer];
        for b in 0..outer {
            let src = &self.data[b * inner * n..(b + 1) * inner * n];
            let dst = &mut out[b * inner * new_n..(b + 1) * inner * new_n];
            for q in 0..new_n {
                let d = &mut dst[q * inner..(q + 1) * inner];
                for p in 0..n {
                    let coef = if contract { m.get(p, q) } else { m.get(q, p) };
                    if coef == 0.0 {
                        continue;
                    }
                    let s = &src[p * inner..(p + 1) * inner];
                    for (y, x) in d.iter_mut().zip(s) {
                        *y += coef * x;
                    }
                }
            }
        }
        Ok(Self { dims, data: out })
    }
}

impl fmt::Debug for Tensor3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Tensor3 {:?} (||X||_F = {:.6e})",
            self.dims,
            self.frobenius_norm()
        )
    }
}

/// `X_hat = S x1 U x2 V x3 W`, evaluated as three successive expansions.
pub fn reconstruct_hosvd(
    u: &FactorMatrix,
    v: &FactorMatrix,
    w: &FactorMatrix,
    core: &CoreTensor,
) -> Result<Tensor3> {
    let [m1, m2, m3] = core.dims();
    if u.cols != m1 || v.cols != m2 || w.cols != m3 {
        return Err(Error::arg(format!(
            "factor widths ({}, {}, {}) do not match core dims {:?}",
            u.cols,
            v.cols,
            w.cols,
            core.dims()
        )));
    }
    core.mode_multiply(u, Mode::One, false)?
        .mode_multiply(v, Mode::Two, false)?
        .mode_multiply(w, Mode::Three, false)
}

/// `X_hat[i][j][k] = sum_r U[i][r] V[j][r] W[k][r]`.
pub fn reconstruct_parafac(
    u: &FactorMatrix,
    v: &FactorMatrix,
    w: &FactorMatrix,
) -> Result<Tensor3> {
    let r = u.cols;
    if v.cols != r || w.cols != r {
        return Err(Error::arg(format!(
            "ParaFac factors disagree on rank: {}, {}, {}",
            u.cols, v.cols, w.cols
        )));
    }
    let (n1, n2, n3) = (u.rows, v.rows, w.rows);
    let mut out = Tensor3::zeros(n1, n2, n3);
    for c in 0..r {
        let uc = u.col(c);
        for k in 0..n3 {
            let wk = w.get(k, c);
            if wk == 0.0 {
                continue;
            }
            for j in 0..n2 {
                let s = v.get(j, c) * wk;
                if s == 0.0 {
                    continue;
                }
                let o = (k * n2 + j) * n1;
                for (x, a) in out.data[o..o + n1].iter_mut().zip(uc) {
                    *x += a * s;
                }
            }
        }
    }
    Ok(out)
}
