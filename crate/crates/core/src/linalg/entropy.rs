//! Entropic functionals in bits.

use num_complex::Complex64;

use super::{CVector, DensityOperator, HermitianOperator, SUPPORT_THRESHOLD};
use crate::error::{Error, Result};

const NEGATIVE_TOL: f64 = 1e-8;
// a state whose weight outside supp(sigma) exceeds this is a support violation
const SUPPORT_LEAK_TOL: f64 = 1e-10;

fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// `h(q) = -q log2 q - (1-q) log2 (1-q)`; no range check.
pub fn binary_entropy_bits(q: f64) -> f64 {
    -xlog2x(q) - xlog2x(1.0 - q)
}

/// Applies `log2` to eigenvalues above `clamp`; eigenvalues at or below it
/// are mapped to `log2(clamp)`.
pub fn matrix_log2_on_support(m: &HermitianOperator, clamp: f64) -> Result<HermitianOperator> {
    let spec = m.eig();
    if spec.eigenvalues[0] < -NEGATIVE_TOL {
        return Err(Error::NegativeEigenvalue(spec.eigenvalues[0]));
    }
    let floor = clamp.log2();
    Ok(spec.map(|x| if x > clamp { x.log2() } else { floor }))
}

pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    -rho.op()
        .eig()
        .eigenvalues
        .iter()
        .map(|&x| xlog2x(x))
        .sum::<f64>()
}

/// `D(rho || sigma) = Tr rho (log2 rho - log2 sigma)`, or `f64::INFINITY`
/// when the support of `rho` is not contained in that of `sigma`.
pub fn relative_entropy(rho: &HermitianOperator, sigma: &HermitianOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "relative entropy of {} and {} dimensional operators",
            rho.dim(),
            sigma.dim()
        )));
    }
    let rs = rho.eig();
    let ss = sigma.eig();
    for s in [&rs, &ss] {
        if s.eigenvalues[0] < -NEGATIVE_TOL {
            return Err(Error::NegativeEigenvalue(s.eigenvalues[0]));
        }
    }
    let neg_entropy: f64 = rs.eigenvalues.iter().map(|&x| xlog2x(x)).sum();

    let mut cross = 0.0;
    let mut leaked = 0.0;
    for (j, &mu) in ss.eigenvalues.iter().enumerate() {
        let v = ss.eigenvectors.column(j);
        let weight = (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
        if mu > SUPPORT_THRESHOLD {
            cross += weight * mu.log2();
        } else {
            leaked += weight;
        }
    }
    if leaked > SUPPORT_LEAK_TOL {
        return Ok(f64::INFINITY);
    }
    Ok(neg_entropy - cross)
}

/// `H(A|B) = H(AB) - H(B)` for a state on `d_a * d_b`.
pub fn conditional_entropy(rho_ab: &DensityOperator, d_a: usize, d_b: usize) -> Result<f64> {
    if d_a * d_b != rho_ab.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{d_a} x {d_b} does not match state dimension {}",
            rho_ab.dim()
        )));
    }
    let rho_b = super::partial_trace(rho_ab.op(), &[d_a, d_b], &[1])?;
    let h_b = -rho_b
        .eig()
        .eigenvalues
        .iter()
        .map(|&x| xlog2x(x))
        .sum::<f64>();
    Ok(von_neumann_entropy(rho_ab) - h_b)
}

/// `|psi> = sum_j sqrt(lambda_j) |v_j> (x) |j>` over the numerical support;
/// the auxiliary factor is the second (fastest-varying) tensor slot.
pub fn purify(rho: &DensityOperator) -> CVector {
    let spec = rho.op().eig();
    let d = rho.dim();
    let support: Vec<usize> = (0..d)
        .filter(|&j| spec.eigenvalues[j] > SUPPORT_THRESHOLD)
        .collect();
    let r = support.len().max(1);
    let mut psi = CVector::zeros(d * r);
    for (k, &j) in support.iter().enumerate() {
        let amp = spec.eigenvalues[j].sqrt();
        for s in 0..d {
            psi[s * r + k] += spec.eigenvectors[(s, j)] * Complex64::new(amp, 0.0);
        }
    }
    psi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::partial_trace;

    #[test]
    fn log_examples() {
        let l = matrix_log2_on_support(&HermitianOperator::identity(3), 1e-14).unwrap();
        assert!(l.max_abs() < 1e-15);
        let l = matrix_log2_on_support(&HermitianOperator::diag(&[4.0, 1.0]), 1e-14).unwrap();
        assert!((l.matrix()[(0, 0)].re - 2.0).abs() < 1e-14);
        let l = matrix_log2_on_support(&HermitianOperator::diag(&[0.0, 0.5]), 1e-14).unwrap();
        assert!((l.matrix()[(0, 0)].re - 1e-14f64.log2()).abs() < 1e-12);
        assert!(matrix_log2_on_support(&HermitianOperator::diag(&[-0.1, 1.0]), 1e-14).is_err());
    }

    #[test]
    fn entropy_examples() {
        let pure = DensityOperator::new(HermitianOperator::diag(&[1.0, 0.0])).unwrap();
        assert_eq!(von_neumann_entropy(&pure), 0.0);
        assert!((von_neumann_entropy(&DensityOperator::maximally_mixed(2)) - 1.0).abs() < 1e-15);
        let d = DensityOperator::new(HermitianOperator::diag(&[0.9, 0.1])).unwrap();
        assert!((von_neumann_entropy(&d) - 0.4690).abs() < 1e-4);
    }

    #[test]
    fn relative_entropy_examples() {
        let zero = HermitianOperator::diag(&[1.0, 0.0]);
        let one = HermitianOperator::diag(&[0.0, 1.0]);
        let mixed = HermitianOperator::diag(&[0.5, 0.5]);
        assert!(relative_entropy(&zero, &zero).unwrap().abs() < 1e-15);
        assert!((relative_entropy(&zero, &mixed).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(relative_entropy(&zero, &one).unwrap(), f64::INFINITY);
    }

    #[test]
    fn purification_of_diagonal_state() {
        let rho = DensityOperator::new(HermitianOperator::diag(&[0.9, 0.1])).unwrap();
        let psi = purify(&rho);
        assert_eq!(psi.len(), 4);
        let back = partial_trace(&HermitianOperator::projector(&psi), &[2, 2], &[0]).unwrap();
        assert!((back.matrix() - rho.op().matrix()).norm() < 1e-12);
    }
}
