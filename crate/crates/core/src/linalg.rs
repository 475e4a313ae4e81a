//! Small dense complex linear algebra.
//!
//! Everything here is sized for per-frequency microphone-array problems (a
//! handful of channels), so the kernels favour accuracy and determinism over
//! blocking or vectorisation: cyclic Jacobi for Hermitian eigenproblems,
//! Cholesky whitening for Hermitian-definite pencils and partially pivoted LU
//! for inverses and determinants.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

/// Relative tolerance used when checking that a matrix is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative pivot threshold (against `trace / dim`) below which a pencil's
/// right-hand side is treated as singular.
pub const PENCIL_SINGULAR_TOL: f64 = 1e-12;
/// Condition estimate above which [`inverse`] refuses to invert.
pub const MAX_CONDITION: f64 = 1e12;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("right-hand matrix of the pencil is numerically singular{}", BinLabel(*.frequency))]
    SingularPencil { frequency: Option<usize> },
    #[error("matrix is singular or too ill-conditioned to invert")]
    SingularMatrix,
    #[error("Jacobi eigenvalue iteration did not converge")]
    NoConvergence,
}

impl LinalgError {
    /// Attaches a frequency-bin index to a singular-pencil error.
    pub fn at_bin(self, bin: usize) -> Self {
        match self {
            LinalgError::SingularPencil { .. } => LinalgError::SingularPencil {
                frequency: Some(bin),
            },
            other => other,
        }
    }
}

struct BinLabel(Option<usize>);

impl fmt::Display for BinLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(bin) => write!(f, " at frequency bin {bin}"),
            None => Ok(()),
        }
    }
}

/// Dense complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for k in 0..dim {
            m[(k, k)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (k, &d) in diag.iter().enumerate() {
            m[(k, k)] = d;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (k, &d) in diag.iter().enumerate() {
            m[(k, k)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Result<Self, LinalgError> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if cols == 0 || rows == 0 {
            return Err(LinalgError::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        let mut m = Self::zeros(rows, cols);
        for (c, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(LinalgError::DimensionMismatch {
                    expected: rows,
                    found: col.len(),
                });
            }
            m.set_column(c, col);
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, values: &[Complex64]) {
        assert_eq!(values.len(), self.rows);
        for (r, &v) in values.iter().enumerate() {
            self[(r, c)] = v;
        }
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        Ok(out)
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                let row = &self.data[r * self.cols..(r + 1) * self.cols];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// `self^H * v`, without forming the conjugate transpose.
    pub fn conj_transpose_mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (r, &x) in v.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * x;
            }
        }
        out
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows * self.cols,
                found: rhs.rows * rhs.cols,
            });
        }
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn one_norm(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn require_square(&self) -> Result<usize, LinalgError> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// A square matrix equal to its own conjugate transpose.
///
/// The constructor checks the Hermitian property to [`HERMITIAN_TOL`] and then
/// symmetrises the entries exactly, so downstream kernels can rely on exact
/// conjugate symmetry and a real diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self, LinalgError> {
        let n = m.require_square()?;
        if !m.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        let scale = m.max_abs();
        for r in 0..n {
            for c in r..n {
                let d = (m[(r, c)] - m[(c, r)].conj()).norm();
                if d > HERMITIAN_TOL * scale {
                    return Err(LinalgError::NotHermitian);
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    /// Averages `m` with its conjugate transpose. Callers guarantee `m` is square.
    pub(crate) fn symmetrized(mut m: ComplexMatrix) -> Self {
        let n = m.rows;
        for r in 0..n {
            m[(r, r)] = Complex64::new(m[(r, r)].re, 0.0);
            for c in r + 1..n {
                let avg = (m[(r, c)] + m[(c, r)].conj()) * 0.5;
                m[(r, c)] = avg;
                m[(c, r)] = avg.conj();
            }
        }
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self(ComplexMatrix::from_real_diagonal(diag))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|k| self.0[(k, k)].re).sum()
    }

    /// `u^H A v`.
    pub fn sesquilinear(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        let av = self.0.mul_vec(v);
        u.iter().zip(&av).map(|(a, b)| a.conj() * b).sum()
    }

    /// `v^H A v`, which is real for a Hermitian `A`.
    pub fn quadratic_form(&self, v: &[Complex64]) -> f64 {
        self.sesquilinear(v, v).re
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

/// Eigenpairs sorted by descending eigenvalue; column `k` of `eigenvectors`
/// belongs to `eigenvalues[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GevdResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl GevdResult {
    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k)
    }
}

/// Rotates each column so that its largest-magnitude entry is real and
/// positive. Ties go to the lowest row index.
pub fn normalize_phase(vectors: &mut ComplexMatrix) {
    for c in 0..vectors.cols() {
        let mut best = 0;
        let mut best_mag = -1.0;
        for r in 0..vectors.rows() {
            let mag = vectors[(r, c)].norm();
            if mag > best_mag {
                best = r;
                best_mag = mag;
            }
        }
        if best_mag <= 0.0 {
            continue;
        }
        let pivot = vectors[(best, c)];
        let rot = pivot.conj() / pivot.norm();
        for r in 0..vectors.rows() {
            vectors[(r, c)] *= rot;
        }
        vectors[(best, c)] = Complex64::new(vectors[(best, c)].re, 0.0);
    }
}

/// Eigendecomposition of a Hermitian matrix with unit-norm eigenvectors.
pub fn hermitian_eig(a: &HermitianMatrix) -> Result<GevdResult, LinalgError> {
    if !a.0.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let (values, mut vectors) = jacobi(&a.0)?;
    let (values, vectors_sorted) = sort_descending(values, &vectors);
    vectors = vectors_sorted;
    normalize_phase(&mut vectors);
    Ok(GevdResult {
        eigenvalues: values,
        eigenvectors: vectors,
    })
}

/// Solves the Hermitian-definite pencil `a v = kappa b v`.
///
/// Eigenvectors are `b`-normalised (`h^H b h = 1`) before the phase is fixed,
/// so the whole set is `b`-orthonormal.
pub fn hermitian_gevd(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<GevdResult, LinalgError> {
    let n = a.dim();
    if b.dim() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: b.dim(),
        });
    }
    if !a.0.is_finite() || !b.0.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let chol = cholesky(b)?;

    // C = L^{-1} A L^{-H}; A is Hermitian so (L^{-1} A)^H = A L^{-H}.
    let y = forward_substitute(&chol, a.as_matrix());
    let c = forward_substitute(&chol, &y.conj_transpose());
    let c = HermitianMatrix::symmetrized(c);

    let (values, u) = jacobi(&c.0)?;
    let (values, u) = sort_descending(values, &u);
    let mut h = back_substitute_conj_transpose(&chol, &u);
    normalize_phase(&mut h);
    Ok(GevdResult {
        eigenvalues: values,
        eigenvectors: h,
    })
}

/// Lower Cholesky factor of a Hermitian positive definite matrix.
fn cholesky(b: &HermitianMatrix) -> Result<ComplexMatrix, LinalgError> {
    let n = b.dim();
    let trace = b.trace();
    let threshold = PENCIL_SINGULAR_TOL * trace / n as f64;
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(LinalgError::SingularPencil { frequency: None });
    }
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = b[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if !(pivot > threshold) {
            return Err(LinalgError::SingularPencil { frequency: None });
        }
        let d = pivot.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = b[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L X = B` for lower-triangular `L`.
fn forward_substitute(l: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let n = l.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        for r in 0..n {
            let mut s = x[(r, c)];
            for k in 0..r {
                s -= l[(r, k)] * x[(k, c)];
            }
            x[(r, c)] = s / l[(r, r)];
        }
    }
    x
}

/// Solves `L^H X = B` for lower-triangular `L`.
fn back_substitute_conj_transpose(l: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let n = l.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        for r in (0..n).rev() {
            let mut s = x[(r, c)];
            for k in r + 1..n {
                s -= l[(k, r)].conj() * x[(k, c)];
            }
            x[(r, c)] = s / l[(r, r)].conj();
        }
    }
    x
}

/// Cyclic complex Jacobi. Returns unsorted eigenvalues and the unitary
/// matrix of eigenvectors.
fn jacobi(input: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix), LinalgError> {
    let n = input.require_square()?;
    let mut a = HermitianMatrix::symmetrized(input.clone()).0;
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }

    // elementwise stopping rule: small eigenvalues keep full relative accuracy
    let floor = f64::MIN_POSITIVE.sqrt() * scale;
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let bound = JACOBI_TOL * (a[(p, p)].re.abs() * a[(q, q)].re.abs()).sqrt();
                let mag = a[(p, q)].norm();
                if mag > bound && mag > floor {
                    rotate(&mut a, &mut v, p, q);
                    rotated = true;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence);
    }
    let values = (0..n).map(|k| a[(k, k)].re).collect();
    Ok((values, v))
}

/// One Jacobi rotation annihilating `a[p][q]`.
///
/// With `a[p][q] = m e^{i phi}`, the rotation is `G = diag(1, e^{-i phi}) R`
/// where `R` is the real Jacobi rotation for `[[a_pp, m], [m, a_qq]]`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag < f64::MIN_POSITIVE {
        return;
    }
    let n = a.rows();
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let g_pp = Complex64::new(c, 0.0);
    let g_pq = Complex64::new(s, 0.0);
    let g_qp = -phase.conj() * s;
    let g_qq = phase.conj() * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
}

fn sort_descending(values: Vec<f64>, vectors: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    // stable: equal eigenvalues keep their original column order
    order.sort_by(|&x, &y| values[y].total_cmp(&values[x]));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let sorted = ComplexMatrix::from_fn(vectors.rows(), vectors.cols(), |r, c| vectors[(r, order[c])]);
    (sorted_values, sorted)
}

struct Lu {
    lu: ComplexMatrix,
    perm: Vec<usize>,
    singular: bool,
}

fn lu_decompose(a: &ComplexMatrix) -> Lu {
    let n = a.rows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut singular = false;
    for k in 0..n {
        let mut pivot_row = k;
        let mut pivot_mag = lu[(k, k)].norm();
        for r in k + 1..n {
            let m = lu[(r, k)].norm();
            if m > pivot_mag {
                pivot_row = r;
                pivot_mag = m;
            }
        }
        if pivot_mag == 0.0 || !pivot_mag.is_finite() {
            singular = true;
            continue;
        }
        if pivot_row != k {
            for c in 0..n {
                let tmp = lu[(k, c)];
                lu[(k, c)] = lu[(pivot_row, c)];
                lu[(pivot_row, c)] = tmp;
            }
            perm.swap(k, pivot_row);
        }
        let pivot = lu[(k, k)];
        for r in k + 1..n {
            let factor = lu[(r, k)] / pivot;
            lu[(r, k)] = factor;
            for c in k + 1..n {
                let u = lu[(k, c)];
                lu[(r, c)] -= factor * u;
            }
        }
    }
    Lu { lu, perm, singular }
}

/// Inverse of a square, reasonably conditioned matrix.
pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let n = a.require_square()?;
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let Lu { lu, perm, singular } = lu_decompose(a);
    if singular {
        return Err(LinalgError::SingularMatrix);
    }
    let mut inv = ComplexMatrix::zeros(n, n);
    for c in 0..n {
        // P A = L U; column c of A^{-1} solves L U x = P e_c
        let mut x: Vec<Complex64> = perm
            .iter()
            .map(|&p| if p == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
            .collect();
        for r in 0..n {
            for k in 0..r {
                let l = lu[(r, k)];
                let xk = x[k];
                x[r] -= l * xk;
            }
        }
        for r in (0..n).rev() {
            for k in r + 1..n {
                let u = lu[(r, k)];
                let xk = x[k];
                x[r] -= u * xk;
            }
            x[r] /= lu[(r, r)];
        }
        inv.set_column(c, &x);
    }
    let cond = a.one_norm() * inv.one_norm();
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(LinalgError::SingularMatrix);
    }
    Ok(inv)
}

/// `log |det A|`, or a flagged negative-infinity sentinel for singular input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogAbsDet {
    pub value: f64,
    pub singular: bool,
}

impl LogAbsDet {
    pub fn is_finite(&self) -> bool {
        !self.singular && self.value.is_finite()
    }
}

pub fn log_abs_det(a: &ComplexMatrix) -> Result<LogAbsDet, LinalgError> {
    let n = a.require_square()?;
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let Lu { lu, singular, .. } = lu_decompose(a);
    if singular {
        return Ok(LogAbsDet {
            value: f64::NEG_INFINITY,
            singular: true,
        });
    }
    let value = (0..n).map(|k| lu[(k, k)].norm().ln()).sum();
    Ok(LogAbsDet {
        value,
        singular: false,
    })
}
