//! Cyclic Jacobi eigensolver for dense complex Hermitian matrices.
//!
//! The matrix is first split into the connected components of its sparsity
//! graph; each component is diagonalised independently. Block-diagonal inputs
//! (the common case for key-map outputs) therefore cost only the sum of the
//! block costs.

use nalgebra::DMatrix;
use num_complex::Complex64;

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-13;

/// Eigen-decomposition with eigenvalues ascending and eigenvectors as columns.
pub(crate) fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    let mut values = vec![0.0; n];
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);

    for component in components(m) {
        let k = component.len();
        let mut sub = DMatrix::<Complex64>::zeros(k, k);
        for (a, &i) in component.iter().enumerate() {
            for (b, &j) in component.iter().enumerate() {
                sub[(a, b)] = m[(i, j)];
            }
        }
        let (vals, vecs) = jacobi(sub);
        for (a, &i) in component.iter().enumerate() {
            values[i] = vals[a];
            for (b, &j) in component.iter().enumerate() {
                vectors[(j, i)] = vecs[(b, a)];
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    (sorted_values, sorted_vectors)
}

/// Connected components of the graph with an edge wherever `m[j,k] != 0`.
fn components(m: &DMatrix<Complex64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let z = m[(j, k)];
            if z.re != 0.0 || z.im != 0.0 {
                let (rj, rk) = (find(&mut parent, j), find(&mut parent, k));
                if rj != rk {
                    parent[rj.max(rk)] = rj.min(rk);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

fn jacobi(mut a: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = a.nrows();
    let mut v = DMatrix::<Complex64>::identity(n, n);
    if n == 1 {
        return (vec![a[(0, 0)].re], v);
    }
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale == 0.0 {
        return (vec![0.0; n], v);
    }

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    off += a[(p, q)].norm_sqr();
                }
            }
        }
        if off.sqrt() <= OFF_DIAGONAL_TOL * scale {
            break;
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let magnitude = apq.norm();
                if magnitude == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // e^{-i phi} with apq = |apq| e^{i phi}
                let unphase = apq.conj() / magnitude;
                let tau = (aqq - app) / (2.0 * magnitude);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // G = [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
                let g00 = Complex64::new(c, 0.0);
                let g01 = Complex64::new(s, 0.0);
                let g10 = -unphase * s;
                let g11 = unphase * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g00 + akq * g10;
                    a[(k, q)] = akp * g01 + akq * g11;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g00.conj() * apk + g10.conj() * aqk;
                    a[(q, k)] = g01.conj() * apk + g11.conj() * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g00 + vkq * g10;
                    v[(k, q)] = vkp * g01 + vkq * g11;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
            }
        }
    }

    ((0..n).map(|i| a[(i, i)].re).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_block_diagonal_input() {
        let mut m = DMatrix::<Complex64>::zeros(4, 4);
        m[(0, 3)] = Complex64::new(1.0, 0.0);
        m[(3, 0)] = Complex64::new(1.0, 0.0);
        m[(1, 1)] = Complex64::new(2.0, 0.0);
        m[(2, 2)] = Complex64::new(-1.0, 0.0);
        let comps = components(&m);
        assert_eq!(comps, vec![vec![0, 3], vec![1], vec![2]]);
        let (vals, _) = hermitian_eigen(&m);
        assert_eq!(vals.len(), 4);
        for (got, want) in vals.iter().zip([-1.0, -1.0, 1.0, 2.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_two_by_two() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        let (vals, vecs) = hermitian_eigen(&m);
        assert!(vals[0].abs() < 1e-15 && (vals[1] - 2.0).abs() < 1e-15);
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            2,
            vals.iter().map(|&x| Complex64::new(x, 0.0)),
        ));
        let back = &vecs * lam * vecs.adjoint();
        assert!((back - m).iter().all(|z| z.norm() < 1e-14));
    }
}
