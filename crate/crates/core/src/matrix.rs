//! Dense symmetric matrices and the positive-definite primitives used by
//! every estimator in the crate.
//!
//! A [`SymMatrix`] keeps the full square in row-major order and mirrors every
//! write, so `get(i, j) == get(j, i)` holds for any value reachable through
//! the public API.

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative pivot floor for the Cholesky factorization, scaled by the largest
/// diagonal entry.
pub const PD_PIVOT_TOL: f64 = 1e-12;

#[derive(Clone, PartialEq, Serialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix needs at least one row");
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = d;
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle (`i <= j`).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Accepts a full row-major square. Entries must agree with their mirror
    /// up to `1e-10` relative to the largest magnitude; the upper triangle is
    /// kept.
    pub fn from_row_major(dim: usize, data: &[f64]) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        let scale = data.iter().fold(1.0_f64, |a, &x| a.max(x.abs()));
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (data[i * dim + j], data[j * dim + i]);
                if !((a - b).abs() <= 1e-10 * scale) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self::from_fn(dim, |i, j| data[i * dim + j]))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut flat = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            flat.extend_from_slice(r);
        }
        Self::from_row_major(dim, &flat)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Row-major view of the full square.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Applies `f` entrywise. `f` must not depend on the index order for the
    /// result to stay symmetric, which holds for any pure scalar map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|x| a * x)
    }

    pub fn add(&self, other: &SymMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(&self, other: &SymMatrix, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_dim(other.dim)?;
        Ok(SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `self + a * I`
    pub fn shift_diag(&self, a: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] += a;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, &x| a.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.mat_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// General (not necessarily symmetric) product, row-major.
    pub fn mat_mul(&self, other: &SymMatrix) -> Result<Vec<f64>> {
        self.check_dim(other.dim)?;
        let p = self.dim;
        let mut out = vec![0.0; p * p];
        for i in 0..p {
            for k in 0..p {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                let orow = &mut out[i * p..(i + 1) * p];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub(crate) fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim != other {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other,
            });
        }
        Ok(())
    }

    /// Largest absolute difference between `self` and its transpose. Always
    /// zero for values built through this API; kept for tests on raw data.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`.
#[derive(Debug, Clone)]
pub struct PdFactor {
    dim: usize,
    lower: Vec<f64>,
    log_det: f64,
}

impl PdFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn l(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Row-major copy of `L`.
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// Solves `L y = b` in place.
    pub fn forward_solve(&self, b: &mut [f64]) {
        let p = self.dim;
        for i in 0..p {
            let mut s = b[i];
            for k in 0..i {
                s -= self.lower[i * p + k] * b[k];
            }
            b[i] = s / self.lower[i * p + i];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn backward_solve(&self, y: &mut [f64]) {
        let p = self.dim;
        for i in (0..p).rev() {
            let mut s = y[i];
            for k in (i + 1)..p {
                s -= self.lower[k * p + i] * y[k];
            }
            y[i] = s / self.lower[i * p + i];
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward_solve(&mut x);
        self.backward_solve(&mut x);
        x
    }

    /// `L z`
    pub fn lower_mul(&self, z: &[f64]) -> Vec<f64> {
        let p = self.dim;
        (0..p)
            .map(|i| (0..=i).map(|k| self.lower[i * p + k] * z[k]).sum())
            .collect()
    }

    pub fn inverse(&self) -> SymMatrix {
        let p = self.dim;
        // L⁻¹ column by column, then A⁻¹ = L⁻ᵀ L⁻¹.
        let mut linv = vec![0.0; p * p];
        for j in 0..p {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            self.forward_solve(&mut e);
            for i in 0..p {
                linv[i * p + j] = e[i];
            }
        }
        SymMatrix::from_fn(p, |i, j| {
            // (L⁻ᵀ L⁻¹)_{ij} = Σ_k L⁻¹_{ki} L⁻¹_{kj}, nonzero only for k ≥ max(i, j)
            (j.max(i)..p)
                .map(|k| linv[k * p + i] * linv[k * p + j])
                .sum()
        })
    }

    pub fn reconstruct(&self) -> SymMatrix {
        let p = self.dim;
        SymMatrix::from_fn(p, |i, j| {
            (0..=i.min(j))
                .map(|k| self.lower[i * p + k] * self.lower[j * p + k])
                .sum()
        })
    }
}

/// Cholesky factorization. A pivot at or below `1e-12 · max diag` rejects the
/// matrix; the reported minor is 1-based.
pub fn cholesky_pd(m: &SymMatrix) -> Result<PdFactor> {
    let p = m.dim();
    let max_diag = m.diag().into_iter().fold(0.0_f64, f64::max);
    if !(max_diag > 0.0) || !max_diag.is_finite() {
        return Err(Error::NotPositiveDefinite { minor: 1 });
    }
    let floor = PD_PIVOT_TOL * max_diag;
    let mut l = vec![0.0; p * p];
    let mut log_det = 0.0;
    for j in 0..p {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l[j * p + k] * l[j * p + k];
        }
        if !(d > floor) {
            return Err(Error::NotPositiveDefinite { minor: j + 1 });
        }
        let djj = d.sqrt();
        l[j * p + j] = djj;
        log_det += 2.0 * djj.ln();
        for i in (j + 1)..p {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = s / djj;
        }
    }
    Ok(PdFactor {
        dim: p,
        lower: l,
        log_det,
    })
}

pub fn invert_pd(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(cholesky_pd(m)?.inverse())
}

/// `ρij = −θij / √(θii θjj)` off the diagonal, ones on it.
pub fn partial_correlation(theta: &SymMatrix) -> Result<SymMatrix> {
    cholesky_pd(theta)?;
    Ok(partial_correlation_unchecked(theta))
}

/// Same as [`partial_correlation`] without the positive-definiteness check.
/// Callers must guarantee a positive diagonal.
pub(crate) fn partial_correlation_unchecked(theta: &SymMatrix) -> SymMatrix {
    let d: Vec<f64> = theta.diag().iter().map(|x| x.sqrt()).collect();
    SymMatrix::from_fn(theta.dim(), |i, j| {
        if i == j {
            1.0
        } else {
            -theta.get(i, j) / (d[i] * d[j])
        }
    })
}

/// Block partition after logically moving row/column `col` to the end.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub col: usize,
    pub m11: SymMatrix,
    pub m12: Vec<f64>,
    pub m22: f64,
}

/// Indices of the remaining rows, in their original order.
pub(crate) fn others(dim: usize, col: usize) -> impl Iterator<Item = usize> + Clone {
    (0..dim).filter(move |&k| k != col)
}

pub fn partition_last(m: &SymMatrix, col: usize) -> Result<Partition> {
    let p = m.dim();
    if col >= p {
        return Err(Error::IndexOutOfRange { index: col, dim: p });
    }
    if p < 2 {
        return Err(Error::InvalidParameter(
            "partition needs at least two rows".into(),
        ));
    }
    let idx: Vec<usize> = others(p, col).collect();
    let m11 = SymMatrix::from_fn(p - 1, |a, b| m.get(idx[a], idx[b]));
    let m12 = idx.iter().map(|&k| m.get(k, col)).collect();
    Ok(Partition {
        col,
        m11,
        m12,
        m22: m.get(col, col),
    })
}

impl Partition {
    /// Inverse of [`partition_last`].
    pub fn reassemble(&self) -> SymMatrix {
        let p = self.m11.dim() + 1;
        let idx: Vec<usize> = others(p, self.col).collect();
        let mut m = SymMatrix::zeros(p);
        for a in 0..(p - 1) {
            for b in a..(p - 1) {
                m.set(idx[a], idx[b], self.m11.get(a, b));
            }
            m.set(idx[a], self.col, self.m12[a]);
        }
        m.set(self.col, self.col, self.m22);
        m
    }
}

/// Eigenvalues in ascending order.
pub fn eigenvalues_sym(m: &SymMatrix) -> Vec<f64> {
    if m.dim() == 1 {
        return vec![m.get(0, 0)];
    }
    let mut ev: Vec<f64> = m.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Row-major n×p observation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DataMatrix {
    pub fn from_row_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::DimensionMismatch {
                expected: nrows * ncols,
                got: data.len(),
            });
        }
        Ok(DataMatrix { nrows, ncols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for r in rows {
            if r.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(DataMatrix {
            nrows: rows.len(),
            ncols,
            data,
        })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let ncols = columns.len();
        let nrows = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().find(|c| c.len() != nrows) {
            return Err(Error::DimensionMismatch {
                expected: nrows,
                got: bad.len(),
            });
        }
        let mut data = vec![0.0; nrows * ncols];
        for (j, c) in columns.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                data[i * ncols + j] = v;
            }
        }
        Ok(DataMatrix { nrows, ncols, data })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.ncols.max(1))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.ncols).map(|j| self.column(j)).collect()
    }

    /// Rows `start..end` as a new matrix.
    pub fn slice_rows(&self, start: usize, end: usize) -> DataMatrix {
        DataMatrix {
            nrows: end - start,
            ncols: self.ncols,
            data: self.data[start * self.ncols..end * self.ncols].to_vec(),
        }
    }

    /// Uncentered scatter `XᵀX`.
    pub fn scatter(&self) -> SymMatrix {
        let p = self.ncols;
        let mut acc = vec![0.0; p * p];
        for r in self.rows() {
            for i in 0..p {
                let ri = r[i];
                for j in i..p {
                    acc[i * p + j] += ri * r[j];
                }
            }
        }
        SymMatrix::from_fn(p, |i, j| acc[i * p + j])
    }

    /// Unbiased sample covariance about the column means.
    pub fn covariance(&self) -> SymMatrix {
        let p = self.ncols;
        let n = self.nrows as f64;
        let means: Vec<f64> = (0..p)
            .map(|j| self.column(j).iter().sum::<f64>() / n)
            .collect();
        let mut acc = vec![0.0; p * p];
        for r in self.rows() {
            for i in 0..p {
                let di = r[i] - means[i];
                for j in i..p {
                    acc[i * p + j] += di * (r[j] - means[j]);
                }
            }
        }
        SymMatrix::from_fn(p, |i, j| acc[i * p + j] / (n - 1.0))
    }
}
