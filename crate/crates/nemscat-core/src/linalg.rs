//! Dense and sparse complex matrix kernels sized for truncated Fock spaces.
//!
//! Everything is square, row-major `Vec<Complex64>`. The master-equation
//! right-hand side only ever multiplies a dense density block by operators
//! with at most a few entries per row, so the sparse type is a plain CSR with
//! accumulate-into products; the dense-dense product exists for tests.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
// Inherent f64 math lives in std; no_std builds get it from the trait.
#[allow(unused_imports)]
use num_traits::Float;

/// Square dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    /// Rank-one projector `|v><w|` from two vectors of matching length.
    pub fn outer(ket: &[C64], bra: &[C64]) -> Self {
        assert_eq!(ket.len(), bra.len());
        let dim = ket.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            let vi = ket[i];
            for j in 0..dim {
                m.data[i * dim + j] = vi * bra[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.data[i * self.dim + j] = value;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(C64::new(0.0, 0.0));
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, c: C64, other: &Self) {
        debug_assert_eq!(self.dim, other.dim);
        for (lhs, rhs) in self.data.iter_mut().zip(other.data.iter()) {
            *lhs += c * rhs;
        }
    }

    /// `self = a + c * b`, overwriting in place.
    pub fn assign_sum_scaled(&mut self, a: &Self, c: f64, b: &Self) {
        debug_assert_eq!(self.dim, a.dim);
        debug_assert_eq!(self.dim, b.dim);
        for ((dst, x), y) in self.data.iter_mut().zip(a.data.iter()).zip(b.data.iter()) {
            *dst = x + c * y;
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.data[j * self.dim + i].conj())
    }

    /// Dense product, `O(n^3)`; fine for the matrix sizes tests use.
    pub fn mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row.iter()) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest `|m[i][j] - conj(m[j][i])|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Largest `|self[i][j] - conj(other[j][i])|`: how far `other` is from
    /// being the adjoint of `self`.
    pub fn adjoint_mismatch(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let d = (self.data[i * n + j] - other.data[j * n + i].conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Sandwich `<bra| M |ket>`.
    pub fn expectation(&self, bra: &[C64], ket: &[C64]) -> C64 {
        debug_assert_eq!(bra.len(), self.dim);
        debug_assert_eq!(ket.len(), self.dim);
        let n = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let mut partial = C64::new(0.0, 0.0);
            for (m, k) in row.iter().zip(ket.iter()) {
                partial += m * k;
            }
            acc += bra[i].conj() * partial;
        }
        acc
    }
}

/// Compressed sparse rows; entries within a row are stored in column order.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    /// Build from `(row, col, value)` triplets; zero values are kept out.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.retain(|&(_, _, v)| v != C64::new(0.0, 0.0));
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut row = 0usize;
        for (r, c, v) in triplets {
            debug_assert!(r < dim && c < dim);
            while row < r {
                row_ptr.push(cols.len());
                row += 1;
            }
            cols.push(c);
            vals.push(v);
        }
        while row < dim {
            row_ptr.push(cols.len());
            row += 1;
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

    pub fn transpose(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.vals.len());
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                triplets.push((self.cols[k], r, self.vals[k]));
            }
        }
        Self::from_triplets(self.dim, triplets)
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m.set(r, self.cols[k], self.vals[k]);
            }
        }
        m
    }

    /// `out += c * (self x dense)`.
    pub fn mul_dense_acc(&self, c: C64, dense: &CMat, out: &mut CMat) {
        debug_assert_eq!(self.dim, dense.dim());
        debug_assert_eq!(self.dim, out.dim());
        let n = self.dim;
        let src = dense.data();
        let dst = out.data_mut();
        for r in 0..n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let factor = c * self.vals[k];
                let col = self.cols[k];
                let src_row = &src[col * n..(col + 1) * n];
                let dst_row = &mut dst[r * n..(r + 1) * n];
                for (d, s) in dst_row.iter_mut().zip(src_row.iter()) {
                    *d += factor * s;
                }
            }
        }
    }

    /// `out += c * (dense x S)` where `self` stores `S` **transposed**.
    ///
    /// Row `j` of the stored transpose lists the entries `(k, S[k][j])` of
    /// column `j` of `S`, so `(dense x S)[i][j] = sum_k dense[i][k] S[k][j]`.
    pub fn dense_mul_transposed_acc(&self, c: C64, dense: &CMat, out: &mut CMat) {
        debug_assert_eq!(self.dim, dense.dim());
        debug_assert_eq!(self.dim, out.dim());
        let n = self.dim;
        let src = dense.data();
        let dst = out.data_mut();
        for i in 0..n {
            let src_row = &src[i * n..(i + 1) * n];
            let dst_row = &mut dst[i * n..(i + 1) * n];
            for j in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in self.row_ptr[j]..self.row_ptr[j + 1] {
                    acc += self.vals[k] * src_row[self.cols[k]];
                }
                dst_row[j] += c * acc;
            }
        }
    }
}

/// Whether `m + shift * I` admits a Cholesky factorization, i.e. whether the
/// smallest eigenvalue of the Hermitian matrix `m` exceeds `-shift`.
pub fn is_positive_semidefinite(m: &CMat, shift: f64) -> bool {
    let n = m.dim();
    let mut l = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut diag = m.at(j, j).re + shift;
        for k in 0..j {
            diag -= l[j * n + k].norm_sqr();
        }
        if !(diag > 0.0) {
            return false;
        }
        let root = diag.sqrt();
        l[j * n + j] = C64::new(root, 0.0);
        for i in (j + 1)..n {
            let mut acc = m.at(i, j);
            for k in 0..j {
                acc -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = acc / root;
        }
    }
    true
}

/// Lower bound on the smallest eigenvalue of Hermitian `m`, via bisection on
/// the Cholesky shift; tight to `tol`.
pub fn min_eigenvalue_bound(m: &CMat, tol: f64) -> f64 {
    let n = m.dim();
    // Gershgorin radius bounds the whole spectrum.
    let mut radius = 0.0f64;
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            row_sum += m.at(i, j).norm();
        }
        radius = radius.max(row_sum);
    }
    let mut lo = -radius;
    let mut hi = radius;
    // Invariant: lambda_min > lo; refine until the bracket closes.
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if is_positive_semidefinite(m, -mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
