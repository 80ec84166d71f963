//! Dense real linear algebra for small systems (n, N up to a few hundred).
//!
//! Storage is row-major `f64`. The symmetric eigensolver is cyclic Jacobi and
//! the positive-definite solver is Cholesky; both use fixed tolerances.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Off-diagonal Frobenius norm at which Jacobi stops, relative to `‖S‖_F`.
pub const JACOBI_TOL: f64 = 1e-12;
/// Maximum number of Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Relative asymmetry accepted by [`eigh`].
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Cholesky pivots at or below this fraction of `‖S‖_max` are rejected.
pub const PIVOT_TOL: f64 = 1e-13;

/// Serialized as `{"rows", "cols", "data"}` with `data` in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixData")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixData {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<MatrixData> for Matrix {
    type Error = Error;

    fn try_from(m: MatrixData) -> Result<Self> {
        Matrix::new(m.rows, m.cols, m.data)
    }
}

impl Matrix {
    /// Builds a matrix from row-major entries, rejecting empty shapes and non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyDimension { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "Matrix::new",
                left_rows: rows,
                left_cols: cols,
                right_rows: data.len(),
                right_cols: 1,
            });
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch {
                op: "Matrix::from_rows",
                left_rows: r,
                left_cols: c,
                right_rows: 1,
                right_cols: bad.len(),
            });
        }
        Self::new(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix shape {rows}x{cols}");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `self + shift * I`; panics if not square.
    pub fn add_diagonal(&self, shift: f64) -> Matrix {
        assert!(self.is_square());
        let mut out = self.clone();
        for i in 0..self.rows {
            out[(i, i)] += shift;
        }
        out
    }

    pub fn matvec(&self, v: &Vector) -> Result<Vector> {
        if v.dim() != self.cols {
            return Err(Error::DimensionMismatch {
                op: "matvec",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: v.dim(),
                right_cols: 1,
            });
        }
        let out = (0..self.rows)
            .map(|i| dot(self.row(i), v.as_slice()))
            .collect();
        Ok(Vector(out))
    }

    /// `selfᵀ v` without forming the transpose.
    pub fn tr_matvec(&self, v: &Vector) -> Result<Vector> {
        if v.dim() != self.rows {
            return Err(Error::DimensionMismatch {
                op: "tr_matvec",
                left_rows: self.cols,
                left_cols: self.rows,
                right_rows: v.dim(),
                right_cols: 1,
            });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.as_slice().iter().enumerate() {
            for (o, &r) in out.iter_mut().zip(self.row(i)) {
                *o += r * vi;
            }
        }
        Ok(Vector(out))
    }

    /// Largest `|s_ij - s_ji|`; infinite when not square.
    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyDimension { rows: 0, cols: 1 });
        }
        check_finite(&entries)?;
        Ok(Self(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "empty vector");
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|v| c * v).collect())
    }

    /// Squared Euclidean distance; panics on dimension mismatch.
    pub fn dist_sq(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Eigenvalues in ascending order with eigenvectors as matching columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    /// `Q diag(g) Qᵀ v`.
    pub fn apply_spectral(&self, gains: &[f64], v: &Vector) -> Vector {
        let q = &self.eigenvectors;
        let n = q.rows();
        assert_eq!(gains.len(), n);
        assert_eq!(v.dim(), n);
        let mut coeffs = vec![0.0; n];
        for i in 0..n {
            let row = q.row(i);
            for (c, &qij) in coeffs.iter_mut().zip(row) {
                *c += qij * v[i];
            }
        }
        for (c, g) in coeffs.iter_mut().zip(gains) {
            *c *= g;
        }
        let out = (0..n).map(|i| dot(q.row(i), &coeffs)).collect();
        Vector(out)
    }

    pub fn reconstruct(&self) -> Matrix {
        let q = &self.eigenvectors;
        let n = q.rows();
        Matrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| q[(i, k)] * self.eigenvalues[k] * q[(j, k)])
                .sum()
        })
    }
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: data[index],
        }),
        None => Ok(()),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch {
            op: "matmul",
            left_rows: a.rows,
            left_cols: a.cols,
            right_rows: b.rows,
            right_cols: b.cols,
        });
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &aik) in a.row(i).iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (o, &bkj) in out_row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// `RᵀR`, with the lower triangle copied from the upper so the result is exactly symmetric.
pub fn gram(r: &Matrix) -> Matrix {
    let n = r.cols;
    let mut g = Matrix::zeros(n, n);
    for k in 0..r.rows {
        let row = r.row(k);
        for i in 0..n {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            for j in i..n {
                g.data[i * n + j] += ri * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            g.data[i * n + j] = g.data[j * n + i];
        }
    }
    g
}

fn check_symmetric(s: &Matrix) -> Result<()> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch {
            op: "eigh",
            left_rows: s.rows,
            left_cols: s.cols,
            right_rows: s.cols,
            right_cols: s.rows,
        });
    }
    let asym = s.max_asymmetry();
    if asym > SYMMETRY_TOL * s.max_abs() {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
        });
    }
    Ok(())
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn eigh(s: &Matrix) -> Result<EigenDecomposition> {
    check_symmetric(s)?;
    let n = s.rows;
    let mut work = s.clone();
    let mut vectors = Matrix::identity(n);
    jacobi(&mut work, Some(&mut vectors))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| work[(i, i)].total_cmp(&work[(j, j)]));
    let eigenvalues = order.iter().map(|&i| work[(i, i)]).collect();
    let eigenvectors = Matrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only (ascending); skips eigenvector accumulation.
pub fn eigvalsh(s: &Matrix) -> Result<Vec<f64>> {
    check_symmetric(s)?;
    let mut work = s.clone();
    jacobi(&mut work, None)?;
    let mut values: Vec<f64> = (0..s.rows).map(|i| work[(i, i)]).collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a.data[i * n + j] * a.data[i * n + j];
            }
        }
    }
    sum.sqrt()
}

fn jacobi(a: &mut Matrix, mut vectors: Option<&mut Matrix>) -> Result<()> {
    let n = a.rows;
    // Symmetrize from the upper triangle; the input passed the symmetry check.
    for i in 0..n {
        for j in 0..i {
            a.data[i * n + j] = a.data[j * n + i];
        }
    }
    let threshold = JACOBI_TOL * a.frobenius();
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(a) <= threshold {
            return Ok(());
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.data[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a.data[p * n + p];
                let aqq = a.data[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(a, p, q, c, s);
                if let Some(v) = vectors.as_deref_mut() {
                    rotate_columns(v, p, q, c, s);
                }
            }
        }
    }
    let off_norm = off_diagonal_norm(a);
    if off_norm <= threshold {
        Ok(())
    } else {
        Err(Error::NoConvergence {
            sweeps: JACOBI_MAX_SWEEPS,
            off_norm,
        })
    }
}

/// `a ← Jᵀ a J` for the plane rotation J in the (p, q) plane.
fn rotate(a: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows;
    let app = a.data[p * n + p];
    let aqq = a.data[q * n + q];
    let apq = a.data[p * n + q];
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a.data[k * n + p];
        let akq = a.data[k * n + q];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        a.data[k * n + p] = new_kp;
        a.data[p * n + k] = new_kp;
        a.data[k * n + q] = new_kq;
        a.data[q * n + k] = new_kq;
    }
    a.data[p * n + p] = c * c * app - 2.0 * c * s * apq + s * s * aqq;
    a.data[q * n + q] = s * s * app + 2.0 * c * s * apq + c * c * aqq;
    a.data[p * n + q] = 0.0;
    a.data[q * n + p] = 0.0;
}

fn rotate_columns(v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = v.cols;
    for k in 0..v.rows {
        let vkp = v.data[k * n + p];
        let vkq = v.data[k * n + q];
        v.data[k * n + p] = c * vkp - s * vkq;
        v.data[k * n + q] = s * vkp + c * vkq;
    }
}

/// Solves `S z = rhs` for symmetric positive definite `S` by Cholesky
/// factorization. Only the lower triangle of `S` is read.
pub fn solve_spd(s: &Matrix, rhs: &Vector) -> Result<Vector> {
    let n = s.rows;
    if !s.is_square() || rhs.dim() != n {
        return Err(Error::DimensionMismatch {
            op: "solve_spd",
            left_rows: s.rows,
            left_cols: s.cols,
            right_rows: rhs.dim(),
            right_cols: 1,
        });
    }
    let floor = PIVOT_TOL * s.max_abs();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > floor) {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = v / ljj;
        }
    }
    // L w = rhs, then Lᵀ z = w.
    let mut z = rhs.as_slice().to_vec();
    for i in 0..n {
        let mut v = z[i];
        for k in 0..i {
            v -= l[i * n + k] * z[k];
        }
        z[i] = v / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut v = z[i];
        for k in (i + 1)..n {
            v -= l[k * n + i] * z[k];
        }
        z[i] = v / l[i * n + i];
    }
    Ok(Vector(z))
}
