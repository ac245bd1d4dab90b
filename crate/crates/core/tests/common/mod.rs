#![allow(dead_code)]

use keyforge::linalg::{CMatrix, CVector, DensityOperator, HermitianOperator};
use keyforge::protocol::{Povm, Scenario};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_matrix(rng: &mut impl Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> HermitianOperator {
    HermitianOperator::from_hermitian_part(&random_matrix(rng, n))
}

pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    random_matrix(rng, n).qr().q()
}

/// Full-rank random state `G G^dagger / Tr`.
pub fn random_density(rng: &mut impl Rng, n: usize) -> DensityOperator {
    let g = random_matrix(rng, n);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::new(HermitianOperator::from_hermitian_part(&(m / c(tr, 0.0)))).unwrap()
}

pub fn random_vector(rng: &mut impl Rng, n: usize) -> CVector {
    let v = CVector::from_fn(n, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let norm = v.norm();
    v / c(norm, 0.0)
}

pub fn pauli_x() -> HermitianOperator {
    HermitianOperator::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
}

/// Projective measurement in the columns of a random unitary.
pub fn random_basis_povm(rng: &mut impl Rng, d: usize) -> Povm {
    Povm::from_basis(&random_unitary(rng, d)).unwrap()
}

/// Two-basis qubit protocol with random bases, fine-grained statistics of a
/// random full-rank state, and key from the first basis.
pub fn random_scenario(rng: &mut impl Rng) -> (Scenario, DensityOperator) {
    let alice = vec![random_basis_povm(rng, 2), random_basis_povm(rng, 2)];
    let bob = vec![random_basis_povm(rng, 2), random_basis_povm(rng, 2)];
    let rho = random_density(rng, 4);
    let constraints = keyforge::protocol::joint_probability_constraints(&alice, &bob, rho.op());
    let mut all = constraints;
    all.push(keyforge::protocol::ObservableConstraint::identity(4));
    let s = Scenario::builder(2, 2)
        .alice_povms(alice)
        .bob_povms(bob)
        .basis_probabilities(vec![0.5, 0.5], vec![0.5, 0.5])
        .keep(vec![(0, 0), (1, 1)])
        .key_map(2, |_, a, _| Some(a))
        .constraints(all)
        .build()
        .unwrap();
    (s, rho)
}

pub fn y_basis() -> Povm {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let u = CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(0.0, h), c(0.0, -h)]);
    Povm::from_basis(&u).unwrap()
}

/// Key from Alice's first basis only, with tomographically complete
/// constraints pinning the feasible set to `rho`.
pub fn tomographic_scenario(rho: &DensityOperator, key_povm: Povm) -> Scenario {
    use keyforge::protocol::{
        joint_probability_constraints, x_basis, z_basis, ObservableConstraint,
    };
    let paulis = [z_basis(), x_basis(), y_basis()];
    let mut constraints = joint_probability_constraints(&paulis, &paulis, rho.op());
    constraints.push(ObservableConstraint::identity(4));
    Scenario::builder(2, 2)
        .alice_povms(vec![key_povm])
        .bob_povms(vec![z_basis()])
        .basis_probabilities(vec![1.0], vec![1.0])
        .keep(vec![(0, 0)])
        .key_map(2, |_, a, _| Some(a))
        .constraints(constraints)
        .build()
        .unwrap()
}
