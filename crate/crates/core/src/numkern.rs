//! Dense complex matrices over `faer`: products, adjoints, norms, singular
//! values, Hermitian spectra, unitary functional calculus and spectral
//! rounding to projections.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use faer::prelude::*;
use faer::{Mat, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Double-precision complex scalar.
pub type C64 = faer::c64;

/// Tolerance on `‖U*U − 1‖` accepted as unitary input.
pub const UNITARY_INPUT_TOL: f64 = 1e-8;

/// Default half-width of the forbidden band around 1/2 in
/// [`nearest_projection`].
pub const DEFAULT_PROJECTION_GAP: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("shape mismatch: {op} of {lhs:?} and {rhs:?}")]
    Shape { op: &'static str, lhs: (usize, usize), rhs: (usize, usize) },
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),
    #[error("matrix is not unitary: ‖U*U − 1‖ = {0:.3e}")]
    NotUnitary(f64),
    #[error("matrix is not self-adjoint: ‖X − X*‖ = {0:.3e}")]
    NotSelfAdjoint(f64),
    #[error("eigenvalue {value} lies within {gap} of 1/2")]
    SpectralGap { value: f64, gap: f64 },
    #[error("decomposition failed to converge")]
    NoConvergence,
}

/// Dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix(Mat<C64>);

/// Singular value decomposition `X = U·diag(s)·V*`, values nonincreasing.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

/// Eigendecomposition `H = V·diag(values)·V*` of a Hermitian matrix, values
/// nondecreasing.
#[derive(Clone, Debug)]
pub struct HermEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cis(theta: f64) -> C64 {
    C64::new(theta.cos(), theta.sin())
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix(Mat::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        CMatrix(Mat::identity(n, n))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        CMatrix(Mat::from_fn(rows, cols, f))
    }

    /// Builds a matrix from rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self, NumError> {
        let r = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != cols) {
            return Err(NumError::Shape { op: "from_rows", lhs: (r, cols), rhs: (1, bad.len()) });
        }
        Ok(Self::from_fn(r, cols, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self, NumError> {
        let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|&x| c(x, 0.0)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn real_diag(values: &[f64]) -> Self {
        let v: Vec<C64> = values.iter().map(|&x| c(x, 0.0)).collect();
        Self::diag(&v)
    }

    pub fn scalar(z: C64) -> Self {
        Self::diag(&[z])
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.0[(i, j)] = z;
    }

    pub fn as_faer(&self) -> &Mat<C64> {
        &self.0
    }

    pub fn from_faer(m: Mat<C64>) -> Self {
        CMatrix(m)
    }

    /// Row-major copy of the entries.
    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows()).map(|i| (0..self.cols()).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn adjoint(&self) -> Self {
        CMatrix(self.0.adjoint().to_owned())
    }

    pub fn scale(&self, z: C64) -> Self {
        CMatrix(Mat::from_fn(self.rows(), self.cols(), |i, j| self.0[(i, j)] * z))
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(c(x, 0.0))
    }

    pub fn try_add(&self, o: &CMatrix) -> Result<Self, NumError> {
        self.same_shape("add", o)?;
        Ok(CMatrix(&self.0 + &o.0))
    }

    pub fn try_sub(&self, o: &CMatrix) -> Result<Self, NumError> {
        self.same_shape("sub", o)?;
        Ok(CMatrix(&self.0 - &o.0))
    }

    pub fn try_matmul(&self, o: &CMatrix) -> Result<Self, NumError> {
        if self.cols() != o.rows() {
            return Err(NumError::Shape { op: "matmul", lhs: self.shape(), rhs: o.shape() });
        }
        Ok(CMatrix(&self.0 * &o.0))
    }

    fn same_shape(&self, op: &'static str, o: &CMatrix) -> Result<(), NumError> {
        if self.shape() != o.shape() {
            return Err(NumError::Shape { op, lhs: self.shape(), rhs: o.shape() });
        }
        Ok(())
    }

    /// `1 − self` for a square matrix.
    pub fn one_minus(&self) -> Self {
        &CMatrix::identity(self.rows()) - self
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows().min(self.cols())).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm_l2()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.norm_max()
    }

    /// Largest singular value.
    pub fn opnorm(&self) -> f64 {
        if self.rows() == 0 || self.cols() == 0 || self.max_abs() == 0.0 {
            return 0.0;
        }
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Singular values in nonincreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.rows() == 0 || self.cols() == 0 {
            return Vec::new();
        }
        self.0.singular_values().expect("svd converges")
    }

    pub fn svd(&self) -> Result<Svd, NumError> {
        let d = self.0.svd().map_err(|_| NumError::NoConvergence)?;
        let s = d.S().column_vector().iter().map(|z| z.re).collect();
        Ok(Svd { u: CMatrix(d.U().to_owned()), s, v: CMatrix(d.V().to_owned()) })
    }

    /// Eigendecomposition of the Hermitian part `(X + X*)/2`.
    pub fn herm_eigen(&self) -> Result<HermEigen, NumError> {
        if !self.is_square() {
            return Err(NumError::NotSquare(self.rows(), self.cols()));
        }
        let h = self.hermitian_part();
        let e = h.0.self_adjoint_eigen(Side::Lower).map_err(|_| NumError::NoConvergence)?;
        Ok(HermEigen {
            values: e.S().column_vector().iter().map(|z| z.re).collect(),
            vectors: CMatrix(e.U().to_owned()),
        })
    }

    /// Eigenvalues of the Hermitian part, nondecreasing.
    pub fn herm_eigenvalues(&self) -> Vec<f64> {
        let h = self.hermitian_part();
        h.0.self_adjoint_eigenvalues(Side::Lower).expect("hermitian eigenvalues converge")
    }

    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }

    /// Eigenvalues of a general square matrix.
    pub fn eigenvalues(&self) -> Result<Vec<C64>, NumError> {
        if !self.is_square() {
            return Err(NumError::NotSquare(self.rows(), self.cols()));
        }
        if self.rows() == 0 {
            return Ok(Vec::new());
        }
        self.0.eigenvalues().map_err(|_| NumError::NoConvergence)
    }

    /// `‖X*X − 1‖` and `‖XX* − 1‖`, the larger of the two.
    pub fn unitarity_defect(&self) -> f64 {
        let a = (&self.adjoint() * self).one_minus().opnorm();
        let b = (self * &self.adjoint()).one_minus().opnorm();
        a.max(b)
    }

    /// `‖X − X*‖`.
    pub fn self_adjoint_defect(&self) -> f64 {
        (self - &self.adjoint()).opnorm()
    }

    /// Block-diagonal direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &CMatrix) -> CMatrix {
        let (r1, c1) = self.shape();
        let (r2, c2) = other.shape();
        CMatrix::from_fn(r1 + r2, c1 + c2, |i, j| {
            if i < r1 && j < c1 {
                self.get(i, j)
            } else if i >= r1 && j >= c1 {
                other.get(i - r1, j - c1)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Submatrix on the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> CMatrix {
        CMatrix::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }

    /// Columns `range` as a new matrix.
    pub fn columns(&self, cols: &[usize]) -> CMatrix {
        let all: Vec<usize> = (0..self.rows()).collect();
        self.select(&all, cols)
    }

    /// Scales row `i` by `w[i]`, i.e. `diag(w)·X`.
    pub fn scale_rows(&self, w: &[f64]) -> CMatrix {
        CMatrix::from_fn(self.rows(), self.cols(), |i, j| self.get(i, j) * w[i])
    }

    /// `X·diag(w)`.
    pub fn scale_cols(&self, w: &[f64]) -> CMatrix {
        CMatrix::from_fn(self.rows(), self.cols(), |i, j| self.get(i, j) * w[j])
    }

    /// Operator-norm distance.
    pub fn det(&self) -> C64 {
        self.0.as_ref().determinant()
    }

    pub fn dist(&self, o: &CMatrix) -> f64 {
        (self - o).opnorm()
    }

    pub fn pow(&self, p: u32) -> CMatrix {
        (0..p).fold(CMatrix::identity(self.rows()), |acc, _| &acc * self)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CMatrix{:?}", self.to_rows())
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, o: &CMatrix) -> CMatrix {
        self.try_add(o).expect("shape mismatch in add")
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, o: &CMatrix) -> CMatrix {
        self.try_sub(o).expect("shape mismatch in sub")
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, o: &CMatrix) -> CMatrix {
        self.try_matmul(o).expect("shape mismatch in matmul")
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

/// Largest singular value.
pub fn opnorm(x: &CMatrix) -> f64 {
    x.opnorm()
}

/// Applies `f` to a unitary matrix through its spectral decomposition.
///
/// The eigenbasis is obtained from the Hermitian Cayley transform
/// `H = i(1 + ζ̄U)(1 − ζ̄U)⁻¹`, with `ζ` on the circle in the widest gap of
/// the spectrum, so degenerate eigenvalues still get an orthonormal basis.
pub fn func_calc_unitary(u: &CMatrix, f: impl Fn(C64) -> C64) -> Result<CMatrix, NumError> {
    if !u.is_square() {
        return Err(NumError::NotSquare(u.rows(), u.cols()));
    }
    let n = u.rows();
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let defect = (&u.adjoint() * u).one_minus().opnorm();
    if defect > UNITARY_INPUT_TOL {
        return Err(NumError::NotUnitary(defect));
    }
    let (vectors, spectrum) = unitary_eigen(u)?;
    let fd: Vec<C64> = spectrum.iter().map(|&z| f(z)).collect();
    Ok(&(&vectors * &CMatrix::diag(&fd)) * &vectors.adjoint())
}

/// Orthonormal eigenbasis and eigenvalues of a unitary matrix.
pub fn unitary_eigen(u: &CMatrix) -> Result<(CMatrix, Vec<C64>), NumError> {
    let n = u.rows();
    let mut angles: Vec<f64> = u.eigenvalues()?.iter().map(|z| z.arg()).collect();
    angles.sort_by(|x, y| x.total_cmp(y));
    let mut best = (angles[0] + 2.0 * std::f64::consts::PI - angles[n - 1], angles[n - 1]);
    for w in angles.windows(2) {
        if w[1] - w[0] > best.0 {
            best = (w[1] - w[0], w[0]);
        }
    }
    let zeta = cis(best.1 + best.0 / 2.0);
    let k = u.scale(zeta.conj());
    let one = CMatrix::identity(n);
    let plus = &one + &k;
    let minus = &one - &k;
    let solved = minus.0.partial_piv_lu().solve(&plus.0);
    let h = CMatrix(solved).scale(c(0.0, 1.0));
    let e = h.herm_eigen()?;
    let spectrum = e
        .values
        .iter()
        .map(|&x| {
            let w = (c(x, 0.0) - c(0.0, 1.0)) / (c(x, 0.0) + c(0.0, 1.0));
            zeta * w
        })
        .collect();
    Ok((e.vectors, spectrum))
}

/// Spectral rounding of a self-adjoint matrix to the projection onto the
/// eigenvectors with eigenvalue above 1/2.
pub fn nearest_projection(x: &CMatrix, gap: f64) -> Result<CMatrix, NumError> {
    if !x.is_square() {
        return Err(NumError::NotSquare(x.rows(), x.cols()));
    }
    let defect = x.self_adjoint_defect();
    if defect > 1e-8 {
        return Err(NumError::NotSelfAdjoint(defect));
    }
    let e = x.herm_eigen()?;
    if let Some(&value) = e.values.iter().find(|v| (**v - 0.5).abs() <= gap) {
        return Err(NumError::SpectralGap { value, gap });
    }
    let keep: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] > 0.5).collect();
    let v = e.vectors.columns(&keep);
    Ok(&v * &v.adjoint())
}

/// Orthonormal basis (as columns) of the range of a projection.
pub fn range_basis(p: &CMatrix) -> Result<CMatrix, NumError> {
    let e = p.herm_eigen()?;
    let keep: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] > 0.5).collect();
    Ok(e.vectors.columns(&keep))
}

/// Haar-distributed unitary, deterministic in `seed`.
///
/// A Gaussian matrix is orthonormalized column by column (Gram–Schmidt with
/// reorthogonalization), which is the QR factor with positive diagonal.
pub fn random_unitary(d: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for _ in 0..d {
        let mut v: Vec<C64> = (0..d)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                c(re, im)
            })
            .collect();
        for _ in 0..2 {
            for q in &cols {
                let dot: C64 = q.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= dot * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    CMatrix::from_fn(d, d, |i, j| cols[j][i])
}

/// Gaussian matrix with independent standard complex entries.
pub fn random_gaussian(rows: usize, cols: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        entries.push(c(re, im) / std::f64::consts::SQRT_2);
    }
    CMatrix::from_fn(rows, cols, |i, j| entries[i * cols + j])
}

/// Rotation `[[cos t, −sin t], [sin t, cos t]]` tensored with the identity
/// of size `n`.
pub fn rotation(t: f64, n: usize) -> CMatrix {
    let (s, co) = t.sin_cos();
    CMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, ii) = (i / n, i % n);
        let (bj, jj) = (j / n, j % n);
        if ii != jj {
            return C64::new(0.0, 0.0);
        }
        let v = match (bi, bj) {
            (0, 0) | (1, 1) => co,
            (0, 1) => -s,
            _ => s,
        };
        c(v, 0.0)
    })
}
