//! Dense symmetric linear algebra, column standardization, and
//! sample-covariance utilities shared by every solver.
//!
//! Everything here is sized for dense problems with at most a few hundred
//! columns: row-major storage, Cholesky factorization for solves, and a
//! cyclic Jacobi eigendecomposition when the full spectrum (or just the
//! minimum eigenvalue) is needed.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("zero-norm column {0}")]
    ZeroNormColumn(usize),
    #[error("matrix is not positive-definite (pivot {pivot} = {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("non-finite entry at position {0}")]
    NonFiniteEntry(usize),
    #[error("empty matrix or vector")]
    Empty,
}

/// Dense row-major matrix. Entries are validated finite on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty);
        }
        assert_eq!(data.len(), rows * cols, "entry count must equal rows*cols");
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFiniteEntry(i));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(LinalgError::Empty);
        }
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Matrix::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// d-dimensional identity.
    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m.data[i * d + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// New matrix containing the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    /// First `n` rows as a new matrix.
    pub fn top_rows(&self, n: usize) -> Matrix {
        assert!(n >= 1 && n <= self.rows);
        Matrix { rows: n, cols: self.cols, data: self.data[..n * self.cols].to_vec() }
    }

    /// y = X v
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            out[i] = dot(self.row(i), v);
        }
        out
    }

    /// y = Xᵀ v
    pub fn xt_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let vi = v[i];
            for j in 0..self.cols {
                out[j] += row[j] * vi;
            }
        }
        out
    }

    /// XᵀX as a symmetric matrix.
    pub fn gram(&self) -> SymMatrix {
        let d = self.cols;
        let mut g = SymMatrix::zeros(d);
        for i in 0..self.rows {
            let row = self.row(i);
            for p in 0..d {
                let rp = row[p];
                if rp == 0.0 {
                    continue;
                }
                for q in 0..=p {
                    *g.at_mut(p, q) += rp * row[q];
                }
            }
        }
        g
    }

    /// Squared Euclidean norm of column `j`.
    pub fn col_norm_sq(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.get(i, j) * self.get(i, j)).sum()
    }

    /// Scale column `j` in place by `s`.
    pub fn scale_col(&mut self, j: usize, s: f64) {
        for i in 0..self.rows {
            self.data[i * self.cols + j] *= s;
        }
    }
}

/// Symmetric matrix stored as a packed lower triangle, so symmetry is exact
/// by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    // row-major lower triangle: entry (i,j) with i >= j at i*(i+1)/2 + j
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1);
        Self { dim, data: vec![0.0; dim * (dim + 1) / 2] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut a = Self::zeros(dim);
        for i in 0..dim {
            *a.at_mut(i, i) = 1.0;
        }
        a
    }

    /// Build from a full dense symmetric layout (lower triangle is read).
    pub fn from_dense(dim: usize, dense: &[f64]) -> Self {
        assert_eq!(dense.len(), dim * dim);
        let mut a = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                *a.at_mut(i, j) = dense[i * dim + j];
            }
        }
        a
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[i * (i + 1) / 2 + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        &mut self.data[i * (i + 1) / 2 + j]
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// A + s·I, returned as a new matrix.
    pub fn add_scaled_identity(&self, s: f64) -> SymMatrix {
        let mut out = self.clone();
        for i in 0..self.dim {
            *out.at_mut(i, i) += s;
        }
        out
    }

    /// Scale every entry by `s`.
    pub fn scaled(&self, s: f64) -> SymMatrix {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    /// Entrywise sum; dims must match.
    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    /// y = A v
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in 0..self.dim {
                acc += self.get(i, j) * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// vᵀ A v
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        dot(&self.matvec(v), v)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }
}

/// Lower-triangular Cholesky factor L with A = L Lᵀ.
pub struct CholeskyFactor {
    dim: usize,
    l: Vec<f64>, // packed lower triangle
}

impl CholeskyFactor {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * (i + 1) / 2 + j]
    }

    /// Solve A x = b via forward + back substitution.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.dim);
        let n = self.dim;
        // L y = b
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.at(i, j) * y[j];
            }
            y[i] = acc / self.at(i, i);
        }
        // Lᵀ x = y
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc -= self.at(j, i) * x[j];
            }
            x[i] = acc / self.at(i, i);
        }
        x
    }

    /// y = L v (used to sample correlated Gaussians).
    pub fn l_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += self.at(i, j) * v[j];
            }
            out[i] = acc;
        }
        out
    }
}

/// Cholesky factorization of a positive-definite symmetric matrix.
///
/// A pivot at or below 1e-12 times the largest diagonal entry is treated as a
/// positive-definiteness failure and reported with its index.
pub fn cholesky_factor(a: &SymMatrix) -> Result<CholeskyFactor, LinalgError> {
    let n = a.dim;
    let tol = 1e-12 * a.max_diag().max(0.0);
    let mut l = vec![0.0; n * (n + 1) / 2];
    let at = |l: &[f64], i: usize, j: usize| l[i * (i + 1) / 2 + j];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = a.get(i, j);
            for k in 0..j {
                acc -= at(&l, i, k) * at(&l, j, k);
            }
            if i == j {
                if acc <= tol {
                    return Err(LinalgError::NotPositiveDefinite { pivot: i, value: acc });
                }
                l[i * (i + 1) / 2 + j] = acc.sqrt();
            } else {
                l[i * (i + 1) / 2 + j] = acc / at(&l, j, j);
            }
        }
    }
    Ok(CholeskyFactor { dim: n, l })
}

/// Solve A x = b for positive-definite A, with one step of iterative
/// refinement to tighten the residual.
pub fn cholesky_solve(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    assert_eq!(b.len(), a.dim);
    let f = cholesky_factor(a)?;
    let mut x = f.solve(b);
    let ax = a.matvec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
    let dx = f.solve(&r);
    for (xi, di) in x.iter_mut().zip(&dx) {
        *xi += di;
    }
    Ok(x)
}

/// Column standardization to the convention ‖col_r‖₂² = n (the row count).
///
/// Returns the rescaled matrix and per-column scale factors
/// (original norm / target norm), so a coefficient fitted on the
/// standardized matrix maps back to the original space by dividing by the
/// scale.
pub fn standardize_columns(x: &Matrix) -> Result<(Matrix, Vec<f64>), LinalgError> {
    let n = x.rows() as f64;
    let mut out = x.clone();
    let mut scales = Vec::with_capacity(x.cols());
    for j in 0..x.cols() {
        let norm = x.col_norm_sq(j).sqrt();
        if norm == 0.0 {
            return Err(LinalgError::ZeroNormColumn(j));
        }
        let scale = norm / n.sqrt();
        out.scale_col(j, 1.0 / scale);
        scales.push(scale);
    }
    Ok((out, scales))
}

/// Sample covariance Σ = (1/n) XᵀX.
pub fn sample_covariance(x: &Matrix) -> SymMatrix {
    x.gram().scaled(1.0 / x.rows() as f64)
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns (eigenvalues, eigenvectors); column k of the returned matrix is
/// the eigenvector for eigenvalue k. Eigenvalues are unsorted.
pub fn jacobi_eigen(a: &SymMatrix) -> (Vec<f64>, Matrix) {
    let n = a.dim;
    // dense working copy
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = a.get(i, j);
        }
    }
    let mut v = Matrix::identity(n);
    if n == 1 {
        return (vec![m[0]], v);
    }
    let frob: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-15 * frob.max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m[p * n + q].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= tol {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let eig = (0..n).map(|i| m[i * n + i]).collect();
    (eig, v)
}

/// Minimum eigenvalue of a symmetric matrix (cyclic Jacobi).
pub fn min_eigenvalue(a: &SymMatrix) -> f64 {
    let (eig, _) = jacobi_eigen(a);
    eig.into_iter().fold(f64::INFINITY, f64::min)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn l2_norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn standardize_already_standardized_column() {
        let x = mat(&[&[1.0], &[-1.0]]);
        let (s, scales) = standardize_columns(&x).unwrap();
        assert_eq!(s, x);
        assert!((scales[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn standardize_rescales_to_root_n() {
        // column [3,4]: norm 5, target √2
        let x = mat(&[&[3.0], &[4.0]]);
        let (s, scales) = standardize_columns(&x).unwrap();
        assert!((s.get(0, 0) - 3.0 * 2f64.sqrt() / 5.0).abs() < 1e-12);
        assert!((s.get(1, 0) - 4.0 * 2f64.sqrt() / 5.0).abs() < 1e-12);
        assert!((scales[0] - 5.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((s.col_norm_sq(0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn standardize_rejects_zero_column() {
        let x = mat(&[&[0.0], &[0.0]]);
        assert_eq!(standardize_columns(&x).unwrap_err(), LinalgError::ZeroNormColumn(0));
    }

    #[test]
    fn standardize_is_idempotent() {
        let x = mat(&[&[0.3, -2.0], &[1.4, 0.5], &[-0.7, 3.1]]);
        let (s1, _) = standardize_columns(&x).unwrap();
        let (s2, _) = standardize_columns(&s1).unwrap();
        for (a, b) in s1.data().iter().zip(s2.data()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn covariance_of_orthogonal_design() {
        let x = mat(&[&[1.0, 1.0], &[1.0, -1.0]]);
        let c = sample_covariance(&x);
        assert!((c.get(0, 0) - 1.0).abs() < 1e-15);
        assert!((c.get(1, 1) - 1.0).abs() < 1e-15);
        assert!(c.get(0, 1).abs() < 1e-15);
    }

    #[test]
    fn covariance_unit_diagonal_after_standardization() {
        let x = mat(&[&[2.0, 1.0], &[-1.0, 4.0], &[0.5, -2.0]]);
        let (s, _) = standardize_columns(&x).unwrap();
        let c = sample_covariance(&s);
        assert!((c.get(0, 0) - 1.0).abs() < 1e-12);
        assert!((c.get(1, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn covariance_rank_one() {
        let x = mat(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let c = sample_covariance(&x);
        for i in 0..2 {
            for j in 0..2 {
                assert!((c.get(i, j) - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn cholesky_identity() {
        let x = cholesky_solve(&SymMatrix::identity(2), &[3.0, -1.0]).unwrap();
        assert_eq!(x, vec![3.0, -1.0]);
    }

    #[test]
    fn cholesky_hand_solve() {
        let mut a = SymMatrix::zeros(2);
        *a.at_mut(0, 0) = 2.0;
        *a.at_mut(1, 0) = 1.0;
        *a.at_mut(1, 1) = 2.0;
        let x = cholesky_solve(&a, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_singular() {
        let mut a = SymMatrix::zeros(2);
        *a.at_mut(0, 0) = 1.0;
        *a.at_mut(1, 0) = 1.0;
        *a.at_mut(1, 1) = 1.0;
        match cholesky_solve(&a, &[1.0, 0.0]) {
            Err(LinalgError::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected non-PD error, got {other:?}"),
        }
    }

    #[test]
    fn min_eigenvalue_diagonal() {
        let mut a = SymMatrix::zeros(2);
        *a.at_mut(0, 0) = 1.0;
        *a.at_mut(1, 1) = 3.0;
        assert!((min_eigenvalue(&a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn min_eigenvalue_two_by_two() {
        let mut a = SymMatrix::zeros(2);
        *a.at_mut(0, 0) = 2.0;
        *a.at_mut(1, 0) = 1.0;
        *a.at_mut(1, 1) = 2.0;
        assert!((min_eigenvalue(&a) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn min_eigenvalue_rank_one() {
        let mut a = SymMatrix::zeros(2);
        *a.at_mut(0, 0) = 1.0;
        *a.at_mut(1, 0) = 1.0;
        *a.at_mut(1, 1) = 1.0;
        assert!(min_eigenvalue(&a).abs() < 1e-12);
    }

    #[test]
    fn jacobi_eigenvector_rayleigh_quotient() {
        // random-ish symmetric 5x5; check λ_min against the Rayleigh quotient
        // of its eigenvector
        let d = 5;
        let mut a = SymMatrix::zeros(d);
        let mut s = 42u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for i in 0..d {
            for j in 0..=i {
                *a.at_mut(i, j) = next();
            }
        }
        let (eig, v) = jacobi_eigen(&a);
        let (kmin, &lmin) = eig
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.partial_cmp(y.1).unwrap())
            .unwrap();
        let vec: Vec<f64> = (0..d).map(|i| v.get(i, kmin)).collect();
        let rq = a.quad_form(&vec) / l2_norm_sq(&vec);
        assert!((rq - lmin).abs() <= 1e-8, "rq {rq} vs lmin {lmin}");
    }
}
