//! Envelope (profile) Cholesky factorisation.
//!
//! Row `i` of the factor is stored from its first structurally nonzero
//! column of the input onwards; fill-in stays inside that envelope, so
//! arrow-shaped Schur complements (many local variables coupled through a few
//! shared ones ordered last) factor in near-linear time.

use nalgebra::{DMatrix, DVector};

pub(crate) struct EnvelopeCholesky {
    l: DMatrix<f64>,
    first: Vec<usize>,
}

impl EnvelopeCholesky {
    /// Factors the symmetric positive definite `m` (only the lower triangle
    /// is read). Returns `None` on a nonpositive pivot.
    pub(crate) fn factor(m: &DMatrix<f64>) -> Option<Self> {
        let n = m.nrows();
        let first: Vec<usize> = (0..n)
            .map(|i| (0..=i).find(|&j| m[(i, j)] != 0.0).unwrap_or(i))
            .collect();
        let mut l = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in first[i]..=i {
                let start = first[i].max(first[j]);
                let mut s = m[(i, j)];
                for k in start..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    l[(i, i)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Some(Self { l, first })
    }

    pub(crate) fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = b.len();
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in self.first[i]..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            y[i] /= self.l[(i, i)];
            let yi = y[i];
            for k in self.first[i]..i {
                y[k] -= self.l[(i, k)] * yi;
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_arrow_system() {
        let n = 6;
        let mut m = DMatrix::<f64>::identity(n, n) * 4.0;
        for i in 0..n - 1 {
            m[(n - 1, i)] = 1.0;
            m[(i, n - 1)] = 1.0;
        }
        m[(1, 0)] = 0.5;
        m[(0, 1)] = 0.5;
        let b = DVector::from_fn(n, |i, _| i as f64 + 1.0);
        let chol = EnvelopeCholesky::factor(&m).unwrap();
        let x = chol.solve(&b);
        assert!((&m * x - b).amax() < 1e-13);
    }

    #[test]
    fn rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(EnvelopeCholesky::factor(&m).is_none());
    }
}
