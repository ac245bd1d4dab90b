//! Dense complex Hermitian linear algebra and entropic functionals.
//!
//! All entropies are in bits.

mod eig;
mod entropy;

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use entropy::{
    binary_entropy_bits, conditional_entropy, matrix_log2_on_support, purify, relative_entropy,
    von_neumann_entropy,
};

pub type ComplexScalar = Complex64;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigenvalues above this count as support (and towards rank).
pub const SUPPORT_THRESHOLD: f64 = 1e-12;
/// Default floor for logarithms of vanishing eigenvalues.
pub const DEFAULT_CLAMP: f64 = 1e-14;

const HERMITIAN_TOL: f64 = 1e-12;
const DENSITY_TOL: f64 = 1e-10;

/// A finite complex scalar; rejects NaN and infinities.
pub fn complex(re: f64, im: f64) -> Result<ComplexScalar> {
    if re.is_finite() && im.is_finite() {
        Ok(Complex64::new(re, im))
    } else {
        Err(Error::NonFinite)
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    m: CMatrix,
}

impl HermitianOperator {
    /// Validates squareness, finiteness and the Hermitian tolerance
    /// `max |M - M^dagger| <= 1e-12 (1 + max |M|)`. The stored matrix is the
    /// exact Hermitian part of the input.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let asym = hermitian_defect(&m);
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > HERMITIAN_TOL * (1.0 + scale) {
            return Err(Error::NonHermitianInput(asym));
        }
        Ok(Self::from_hermitian_part(&m))
    }

    /// `(M + M^dagger)/2`, without validation.
    pub fn from_hermitian_part(m: &CMatrix) -> Self {
        Self {
            m: (m + m.adjoint()) * c(0.5),
        }
    }

    /// Builds from row-major nested rows of complex entries.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Real symmetric input given row-major.
    pub fn from_real(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| c(entries[i * n + j])))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: CMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: CMatrix::zeros(n, n),
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self {
            m: CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i]) } else { c(0.0) }),
        }
    }

    /// `|v><v|`.
    pub fn projector(v: &CVector) -> Self {
        Self::from_hermitian_part(&(v * v.adjoint()))
    }

    /// `|k><k|` in dimension `n`.
    pub fn basis_projector(n: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        m[(k, k)] = c(1.0);
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Re Tr(self * other)`; exact for Hermitian pairs.
    pub fn inner(&self, other: &HermitianOperator) -> f64 {
        self.m
            .iter()
            .zip(other.m.transpose().iter())
            .map(|(a, b)| (a * b).re)
            .sum()
    }

    /// `K self K^dagger` for any conformable `K`.
    pub fn conjugate_by(&self, k: &CMatrix) -> Result<Self> {
        if k.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot conjugate {}-dim operator by {}x{} matrix",
                self.dim(),
                k.nrows(),
                k.ncols()
            )));
        }
        Ok(Self::from_hermitian_part(&(k * &self.m * k.adjoint())))
    }

    /// Elementwise complex conjugate, equal to the transpose.
    pub fn transpose(&self) -> Self {
        Self {
            m: self.m.map(|z| z.conj()),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { m: &self.m * c(s) }
    }

    /// Spectral decomposition with ascending eigenvalues.
    pub fn eig(&self) -> Spectrum {
        let (eigenvalues, eigenvectors) = eig::hermitian_eigen(&self.m);
        Spectrum {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig().eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eig().eigenvalues.last().expect("non-empty")
    }

    /// Direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &HermitianOperator) -> Self {
        let (a, b) = (self.dim(), other.dim());
        let mut m = CMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.m);
        m.view_mut((a, a), (b, b)).copy_from(&other.m);
        Self { m }
    }
}

fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in j..n {
            worst = worst.max((m[(j, k)] - m[(k, j)].conj()).norm());
        }
    }
    worst
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: Self) -> HermitianOperator {
        HermitianOperator {
            m: &self.m + &rhs.m,
        }
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: Self) -> HermitianOperator {
        HermitianOperator {
            m: &self.m - &rhs.m,
        }
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scale(rhs)
    }
}

/// Eigenvalues (ascending) and the unitary whose columns are eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl Spectrum {
    /// `U f(Lambda) U^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let u = &self.eigenvectors;
        let n = u.nrows();
        let mut scaled = u.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let fj = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        HermitianOperator::from_hermitian_part(&(scaled * u.adjoint()))
    }

    pub fn reconstruct(&self) -> HermitianOperator {
        self.map(|x| x)
    }

    pub fn eigenvector(&self, k: usize) -> CVector {
        self.eigenvectors.column(k).into_owned()
    }
}

/// Full spectral decomposition of a Hermitian matrix.
pub fn herm_eig(m: &HermitianOperator) -> Spectrum {
    m.eig()
}

/// Validated check-and-decompose for raw matrices.
pub fn herm_eig_checked(m: &CMatrix) -> Result<Spectrum> {
    Ok(HermitianOperator::new(m.clone())?.eig())
}

/// Positive semidefinite, unit-trace Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
        }
        let min = op.min_eigenvalue();
        if min < -DENSITY_TOL {
            return Err(Error::InvalidDensity(format!(
                "minimum eigenvalue {min:e} is negative"
            )));
        }
        Ok(Self { op })
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self {
            op: HermitianOperator::identity(n).scale(1.0 / n as f64),
        }
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidDensity(
                "zero or non-finite state vector".into(),
            ));
        }
        Ok(Self {
            op: HermitianOperator::projector(&(psi / c(norm))),
        })
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn into_op(self) -> HermitianOperator {
        self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }
}

/// Kronecker product of Hermitian operators.
pub fn kron(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    HermitianOperator {
        m: a.m.kronecker(&b.m),
    }
}

/// Kronecker product of a list of general matrices.
pub fn kron_all(factors: &[&CMatrix]) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for f in factors {
        out = out.kronecker(*f);
    }
    out
}

/// Trace out every subsystem not listed in `keep` (subsystem order preserved).
pub fn partial_trace(
    m: &HermitianOperator,
    dims: &[usize],
    keep: &[usize],
) -> Result<HermitianOperator> {
    let total: usize = dims.iter().product();
    if total != m.dim() || dims.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dims {dims:?} do not multiply to {}",
            m.dim()
        )));
    }
    if keep.iter().any(|&k| k >= dims.len()) || keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::DimensionMismatch(format!(
            "keep set {keep:?} must be strictly increasing indices below {}",
            dims.len()
        )));
    }
    let kept_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let traced_dim = total / kept_dim;

    // group full indices by the value of their traced-out multi-index
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); traced_dim];
    let mut digits = vec![0usize; dims.len()];
    for full in 0..total {
        let mut rem = full;
        for s in (0..dims.len()).rev() {
            digits[s] = rem % dims[s];
            rem /= dims[s];
        }
        let (mut kept_idx, mut traced_idx) = (0, 0);
        for s in 0..dims.len() {
            if keep.contains(&s) {
                kept_idx = kept_idx * dims[s] + digits[s];
            } else {
                traced_idx = traced_idx * dims[s] + digits[s];
            }
        }
        groups[traced_idx].push((full, kept_idx));
    }

    let mut out = CMatrix::zeros(kept_dim, kept_dim);
    for group in &groups {
        for &(i, ki) in group {
            for &(j, kj) in group {
                out[(ki, kj)] += m.m[(i, j)];
            }
        }
    }
    Ok(HermitianOperator::from_hermitian_part(&out))
}

/// `Tr(A^dagger B)`.
pub fn frob_inner(a: &HermitianOperator, b: &HermitianOperator) -> Result<ComplexScalar> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "frob_inner of {} and {} dimensional operators",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.m.iter().zip(b.m.iter()).map(|(x, y)| x.conj() * y).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> HermitianOperator {
        HermitianOperator::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn identity_and_pauli_spectra() {
        let s = herm_eig(&HermitianOperator::identity(2));
        assert_eq!(s.eigenvalues, vec![1.0, 1.0]);
        let s = herm_eig(&pauli_x());
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_fn(2, 2, |i, j| c((i + 2 * j) as f64));
        assert!(matches!(
            HermitianOperator::new(m),
            Err(Error::NonHermitianInput(_))
        ));
    }

    #[test]
    fn kron_and_inner() {
        let i4 = kron(
            &HermitianOperator::identity(2),
            &HermitianOperator::identity(2),
        );
        assert_eq!(i4, HermitianOperator::identity(4));
        let x = pauli_x();
        assert_eq!(frob_inner(&x, &x).unwrap(), c(2.0));
    }

    #[test]
    fn partial_trace_of_product() {
        let ra = HermitianOperator::from_real(2, &[0.7, 0.2, 0.2, 0.3]).unwrap();
        let rb = HermitianOperator::diag(&[0.25, 0.25, 0.5]);
        let ab = kron(&ra, &rb);
        let back_a = partial_trace(&ab, &[2, 3], &[0]).unwrap();
        let back_b = partial_trace(&ab, &[2, 3], &[1]).unwrap();
        assert!((back_a.matrix() - ra.matrix()).norm() < 1e-15);
        assert!((back_b.matrix() - rb.matrix()).norm() < 1e-15);
        assert!(partial_trace(&ab, &[2, 2], &[0]).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(DensityOperator::new(HermitianOperator::diag(&[1.2, -0.2])).is_err());
        assert!(DensityOperator::new(HermitianOperator::diag(&[0.5, 0.4])).is_err());
        assert!(DensityOperator::new(HermitianOperator::diag(&[0.5, 0.5])).is_ok());
        assert!(complex(f64::NAN, 0.0).is_err());
    }
}
