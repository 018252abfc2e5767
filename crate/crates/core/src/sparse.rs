//! Minimal square sparse complex matrix in CSR form.
//!
//! Backs the operator algebra: construction from triplets, linear
//! combinations, products, Kronecker products, adjoints, and matrix-vector
//! application. Sizes here are desk scale (dimension <= 2^14), so the
//! implementations favour clarity over asymptotics.

use num_complex::Complex64;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseMatrix {
    /// Build from (row, col, value) triplets; duplicates are summed and exact
    /// zeros dropped.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Self {
        let mut entries: Vec<(usize, usize, Complex64)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) out of range for dim {dim}");
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_ptr[r + 1] += 1;
                col_idx.push(c);
                values.push(v);
                last = Some((r, c));
            }
        }
        // Prune entries that summed to exactly zero.
        let mut pruned_cols = Vec::with_capacity(col_idx.len());
        let mut pruned_vals = Vec::with_capacity(values.len());
        let mut counts = vec![0usize; dim];
        let mut k = 0;
        for r in 0..dim {
            let n = row_ptr[r + 1];
            for _ in 0..n {
                if values[k] != Complex64::ZERO {
                    pruned_cols.push(col_idx[k]);
                    pruned_vals.push(values[k]);
                    counts[r] += 1;
                }
                k += 1;
            }
        }
        let mut ptr = vec![0usize; dim + 1];
        for r in 0..dim {
            ptr[r + 1] = ptr[r] + counts[r];
        }
        SparseMatrix {
            dim,
            row_ptr: ptr,
            col_idx: pruned_cols,
            values: pruned_vals,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        SparseMatrix {
            dim,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, Complex64::ONE)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// CSR internals: (row_ptr, col_idx, values).
    pub fn parts(&self) -> (&[usize], &[usize], &[Complex64]) {
        (&self.row_ptr, &self.col_idx, &self.values)
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        match self.col_idx[lo..hi].binary_search(&col) {
            Ok(k) => self.values[lo + k],
            Err(_) => Complex64::ZERO,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= factor;
        }
        out
    }

    /// Sum of `coeff * matrix` terms. All matrices must share the dimension.
    pub fn linear_combination(terms: &[(f64, &SparseMatrix)]) -> Self {
        assert!(!terms.is_empty());
        let dim = terms[0].1.dim;
        for &(_, m) in terms {
            assert_eq!(m.dim, dim, "linear combination dimension mismatch");
        }
        let triplets = terms.iter().flat_map(|&(coeff, m)| {
            m.triplets().map(move |(r, c, v)| (r, c, v * coeff))
        });
        Self::from_triplets(dim, triplets)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self::linear_combination(&[(1.0, self), (1.0, rhs)])
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self::linear_combination(&[(1.0, self), (-1.0, rhs)])
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let mut triplets = Vec::new();
        for r in 0..self.dim {
            let mut acc: BTreeMap<usize, Complex64> = BTreeMap::new();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let mid = self.col_idx[k];
                let v = self.values[k];
                for k2 in rhs.row_ptr[mid]..rhs.row_ptr[mid + 1] {
                    *acc.entry(rhs.col_idx[k2]).or_insert(Complex64::ZERO) += v * rhs.values[k2];
                }
            }
            triplets.extend(acc.into_iter().map(|(c, v)| (r, c, v)));
        }
        Self::from_triplets(self.dim, triplets)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    /// Kronecker product; `self` is the leftmost (slowest-varying) factor.
    pub fn kron(&self, rhs: &Self) -> Self {
        let dim = self.dim * rhs.dim;
        let mut triplets = Vec::with_capacity(self.nnz() * rhs.nnz());
        for (ra, ca, va) in self.triplets() {
            for (rb, cb, vb) in rhs.triplets() {
                triplets.push((ra * rhs.dim + rb, ca * rhs.dim + cb, va * vb));
            }
        }
        Self::from_triplets(dim, triplets)
    }

    /// y = A x (overwrites y).
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for r in 0..self.dim {
            let mut acc = Complex64::ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    /// max_{ij} |a_ij - conj(a_ji)|, zero for a Hermitian matrix.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint())
            .values
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(r, c, _)| r == c)
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Dense row-major copy, n^2 entries.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::ZERO; self.dim * self.dim];
        for (r, c, v) in self.triplets() {
            out[r * self.dim + c] = v;
        }
        out
    }
}
