use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Symmetric boolean edge indicator with an empty diagonal.
#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AdjacencyMatrix {
    dim: usize,
    // Upper triangle, row-major over i < j.
    upper: Vec<bool>,
}

impl fmt::Debug for AdjacencyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "AdjacencyMatrix({}x{}, {} edges)", self.dim, self.dim, self.edge_count())?;
        for i in 0..self.dim {
            let row: String = (0..self.dim)
                .map(|j| if self.has_edge(i, j) { '1' } else { '.' })
                .collect();
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}

#[inline]
fn upper_index(dim: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < dim);
    i * dim - i * (i + 1) / 2 + (j - i - 1)
}

impl AdjacencyMatrix {
    pub fn empty(dim: usize) -> Self {
        AdjacencyMatrix {
            dim,
            upper: vec![false; dim * dim.saturating_sub(1) / 2],
        }
    }

    pub fn complete(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| true)
    }

    /// `f(i, j)` is queried once per unordered pair with `i < j`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut a = Self::empty(dim);
        for i in 0..dim {
            for j in (i + 1)..dim {
                a.upper[upper_index(dim, i, j)] = f(i, j);
            }
        }
        a
    }

    /// Edge wherever an off-diagonal entry exceeds `tol` in magnitude.
    pub fn support(m: &SymMatrix, tol: f64) -> Self {
        Self::from_fn(m.dim(), |i, j| m.get(i, j).abs() > tol)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => false,
            std::cmp::Ordering::Less => self.upper[upper_index(self.dim, i, j)],
            std::cmp::Ordering::Greater => self.upper[upper_index(self.dim, j, i)],
        }
    }

    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        if i == j {
            return;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.upper[upper_index(self.dim, a, b)] = present;
    }

    pub fn edge_count(&self) -> usize {
        self.upper.iter().filter(|&&e| e).count()
    }

    /// Edges as `(i, j)` pairs with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                if self.upper[upper_index(self.dim, i, j)] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Upper-triangle decisions in row-major order.
    pub fn upper_triangle(&self) -> &[bool] {
        &self.upper
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
}
