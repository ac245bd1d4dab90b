//! Gauss–Radau rules on `[0, 1]` with the fixed node `t = 1`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Nodes ascending, the last one equal to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * g(t))
            .sum()
    }
}

/// Off-diagonal of the Jacobi matrix of shifted Legendre polynomials.
fn legendre_beta(k: usize) -> f64 {
    let k = k as f64;
    k / (2.0 * (4.0 * k * k - 1.0).sqrt())
}

/// `m`-point Radau rule via Golub–Welsch: the Jacobi matrix is modified so
/// that 1 is an eigenvalue, then nodes are its eigenvalues and weights the
/// squared first components of the normalised eigenvectors.
///
/// # Panics
/// If `m == 0`.
pub fn gauss_radau_rule(m: usize) -> QuadratureRule {
    assert!(m >= 1, "a quadrature rule needs at least one node");
    if m == 1 {
        return QuadratureRule {
            nodes: vec![1.0],
            weights: vec![1.0],
        };
    }
    let tau = 1.0;
    let mut j = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        j[(k, k)] = 0.5;
    }
    for k in 1..m {
        let b = legendre_beta(k);
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }

    // (J_{m-1} - tau I) delta = b_{m-1}^2 e_{m-1}
    let n = m - 1;
    let mut lead = j.view((0, 0), (n, n)).into_owned();
    for k in 0..n {
        lead[(k, k)] -= tau;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = legendre_beta(n).powi(2);
    let delta = lead
        .lu()
        .solve(&rhs)
        .expect("shifted Jacobi matrix is nonsingular for tau outside (0,1)");
    j[(n, n)] = tau + delta[n - 1];

    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // the endpoint is exact by construction; remove rounding
    pairs[m - 1].0 = 1.0;
    QuadratureRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}
