//! Orthonormal real basis of `d x d` Hermitian matrices and affine
//! parametrisations of the equality-constrained slice of it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianOperator};

/// `E_k` with `Tr(E_j E_k) = δ_jk`: diagonal units, then for each `j < k`
/// the symmetric and antisymmetric off-diagonal pairs.
pub(crate) fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let s = 0.5f64.sqrt();
    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        let mut m = CMatrix::zeros(d, d);
        m[(j, j)] = Complex64::new(1.0, 0.0);
        out.push(m);
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = Complex64::new(s, 0.0);
            m[(k, j)] = Complex64::new(s, 0.0);
            out.push(m);
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = Complex64::new(0.0, s);
            m[(k, j)] = Complex64::new(0.0, -s);
            out.push(m);
        }
    }
    out
}

/// `σ(s) = σ_p + Σ_k s_k N_k` spanning `{σ : Tr(Γ_i σ) = γ_i}`.
#[derive(Debug, Clone)]
pub(crate) struct AffineSlice {
    pub particular: CMatrix,
    pub directions: Vec<CMatrix>,
}

impl AffineSlice {
    pub fn new(d: usize, ops: &[&HermitianOperator], values: &[f64]) -> Result<Self> {
        let basis = hermitian_basis(d);
        let n = basis.len();
        let a = DMatrix::from_fn(ops.len(), n, |i, k| {
            ops[i].inner(&HermitianOperator::from_hermitian_part(&basis[k]))
        });
        let gamma = DVector::from_column_slice(values);
        let eig = SymmetricEigen::new(a.transpose() * &a);
        let max = eig.eigenvalues.amax().max(1e-300);
        let mut coeff = DVector::<f64>::zeros(n);
        let mut directions = Vec::new();
        let atg = a.transpose() * &gamma;
        for k in 0..n {
            let v = eig.eigenvectors.column(k);
            let lam = eig.eigenvalues[k];
            if lam > 1e-12 * max {
                coeff += v * (v.dot(&atg) / lam);
            } else {
                directions.push(v.clone_owned());
            }
        }
        let residual = (&a * &coeff - &gamma).amax();
        if residual > 1e-8 * (1.0 + gamma.amax()) {
            return Err(Error::InfeasibleScenario);
        }
        let combine = |c: &DVector<f64>| {
            basis
                .iter()
                .zip(c.iter())
                .fold(CMatrix::zeros(d, d), |acc, (e, &x)| {
                    acc + e * Complex64::new(x, 0.0)
                })
        };
        Ok(Self {
            particular: combine(&coeff),
            directions: directions.iter().map(combine).collect(),
        })
    }

    pub fn point(&self, s: &[f64]) -> CMatrix {
        self.directions
            .iter()
            .zip(s)
            .fold(self.particular.clone(), |acc, (n, &x)| {
                acc + n * Complex64::new(x, 0.0)
            })
    }
}
