//! Sparse complex operators tagged with the basis they act on.

use std::collections::BTreeMap;
use std::ops::Range;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::BasisTag;

/// Compressed sparse row matrix with complex entries. Square only.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![C64::new(1.0, 0.0); dim])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self::from_triplets(diag.len(), diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are
    /// summed and exact zeros dropped.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let mut rows: Vec<BTreeMap<usize, C64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in triplets {
            assert!(
                r < dim && c < dim,
                "triplet ({r}, {c}) out of bounds for dim {dim}"
            );
            *rows[r].entry(c).or_insert(C64::new(0.0, 0.0)) += v;
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v != C64::new(0.0, 0.0) {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    #[inline]
    pub fn row_range(&self, row: usize) -> Range<usize> {
        self.row_ptr[row]..self.row_ptr[row + 1]
    }

    #[inline]
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        self.row_range(row)
            .map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.row(row)
            .find(|&(c, _)| c == col)
            .map(|(_, v)| v)
            .unwrap_or_default()
    }

    pub fn max_nnz_per_row(&self) -> usize {
        (0..self.dim)
            .map(|r| self.row_range(r).len())
            .max()
            .unwrap_or(0)
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(r, c, _)| r == c)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (r, c, v * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_triplets(self.dim, self.triplets().chain(other.triplets()))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let trip = (0..self.dim).flat_map(|r| {
            self.row(r)
                .flat_map(move |(k, a)| other.row(k).map(move |(c, b)| (r, c, a * b)))
        });
        Self::from_triplets(self.dim, trip.collect::<Vec<_>>())
    }

    /// Kronecker product `self ⊗ other`; the left factor's index varies slowest.
    pub fn kron(&self, other: &Self) -> Self {
        let d = other.dim;
        let trip = self.triplets().flat_map(|(r1, c1, a)| {
            other
                .triplets()
                .map(move |(r2, c2, b)| (r1 * d + r2, c1 * d + c2, a * b))
        });
        Self::from_triplets(self.dim * d, trip.collect::<Vec<_>>())
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim * self.dim];
        for (r, c, v) in self.triplets() {
            out[r * self.dim + c] = v;
        }
        out
    }

    pub fn from_dense(dim: usize, data: &[C64]) -> Self {
        assert_eq!(data.len(), dim * dim);
        Self::from_triplets(
            dim,
            data.iter().enumerate().map(|(k, &v)| (k / dim, k % dim, v)),
        )
    }
}

/// Sparse operator tagged with its basis.
#[derive(Clone, Debug, PartialEq)]
pub struct QOperator {
    tag: BasisTag,
    matrix: CsrMatrix,
    hermitian: bool,
}

/// Relative tolerance for the Hermiticity flag.
pub const HERMITIAN_TOL: f64 = 1e-12;

impl QOperator {
    pub fn new(tag: BasisTag, matrix: CsrMatrix) -> Result<Self> {
        if matrix.dim() != tag.dim() {
            return Err(Error::InvalidSpace(format!(
                "matrix dimension {} does not match {} (dim {})",
                matrix.dim(),
                tag,
                tag.dim()
            )));
        }
        Ok(Self {
            tag,
            matrix,
            hermitian: false,
        })
    }

    pub fn identity(tag: BasisTag) -> Self {
        Self {
            tag,
            matrix: CsrMatrix::identity(tag.dim()),
            hermitian: true,
        }
    }

    pub fn zeros(tag: BasisTag) -> Self {
        Self {
            tag,
            matrix: CsrMatrix::zeros(tag.dim()),
            hermitian: true,
        }
    }

    /// Marks the operator Hermitian after checking `max|A - A†| < 1e-12 · max|A|`.
    pub fn into_hermitian(mut self) -> Result<Self> {
        let err = self.hermiticity_error();
        if err >= HERMITIAN_TOL {
            return Err(Error::InvalidParameter {
                name: "operator".into(),
                reason: format!("not Hermitian (relative deviation {err:e})"),
            });
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix.get(row, col)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.tag != other.tag {
            return Err(Error::BasisMismatch {
                expected: self.tag,
                found: other.tag,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            tag: self.tag,
            matrix: self.matrix.add(&other.matrix),
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale_real(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            tag: self.tag,
            matrix: self.matrix.matmul(&other.matrix),
            hermitian: false,
        })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            tag: self.tag,
            matrix: self.matrix.scale(s),
            hermitian: self.hermitian && s.im == 0.0,
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            tag: self.tag,
            matrix: self.matrix.adjoint(),
            hermitian: self.hermitian,
        }
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.max_abs()
    }

    /// `max|A - A†|` in units of the largest entry (0 for the zero operator).
    pub fn hermiticity_error(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        self.matrix
            .add(&self.matrix.adjoint().scale(C64::new(-1.0, 0.0)))
            .max_abs()
            / scale
    }

    pub fn apply(&self, ket: &[C64]) -> Result<Vec<C64>> {
        if ket.len() != self.dim() {
            return Err(Error::InvalidSpace(format!(
                "vector of length {} applied to operator on {}",
                ket.len(),
                self.tag
            )));
        }
        Ok(self.matrix.matvec(ket))
    }

    pub fn to_dense(&self) -> Vec<C64> {
        self.matrix.to_dense()
    }
}
