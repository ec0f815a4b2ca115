//! Flat row-major storage for point clouds in R^d.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Points {
    dim: usize,
    coords: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize) -> Self {
        Points { dim, coords: Vec::new() }
    }

    pub fn with_capacity(dim: usize, n: usize) -> Self {
        Points { dim, coords: Vec::with_capacity(dim * n) }
    }

    /// Builds from a flat coordinate buffer whose length must be a multiple of `dim`.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(Error::usage(format!(
                "flat buffer of length {} is not a multiple of dimension {dim}",
                coords.len()
            )));
        }
        Ok(Points { dim, coords })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::usage("point set is empty or zero-dimensional"));
        }
        let mut pts = Points::with_capacity(dim, rows.len());
        for r in rows {
            pts.push(r.as_ref())?;
        }
        Ok(pts)
    }

    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::usage(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.dim
            )));
        }
        self.coords.extend_from_slice(x);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Returns a copy with every point shifted by `z`.
    pub fn translated(&self, z: &[f64]) -> Points {
        assert_eq!(z.len(), self.dim, "translation dimension mismatch");
        let mut coords = self.coords.clone();
        for row in coords.chunks_exact_mut(self.dim) {
            for (c, s) in row.iter_mut().zip(z) {
                *c += s;
            }
        }
        Points { dim: self.dim, coords }
    }

    /// Points reordered so that row `k` of the result is row `perm[k]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Points {
        let mut out = Points::with_capacity(self.dim, perm.len());
        for &k in perm {
            out.coords.extend_from_slice(self.row(k));
        }
        out
    }

    /// Largest Euclidean norm in the set (0 for an empty set).
    pub fn max_norm(&self) -> f64 {
        self.iter().map(norm2).fold(0.0, f64::max)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(|r| r.to_vec()).collect()
    }
}

#[inline]
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
