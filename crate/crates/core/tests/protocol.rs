mod common;

use common::*;
use keyforge::asymptotic::feasible_point;
use keyforge::linalg::*;
use keyforge::protocol::*;
use keyforge::sdp::SolverOptions;
use keyforge::Error;
use proptest::prelude::*;

fn phi_plus_state() -> DensityOperator {
    DensityOperator::pure(&phi_plus()).unwrap()
}

/// `M(ρ) = Σ_{x,y} (K_x ⊗ K_y) ρ (K_x ⊗ K_y)^†`.
fn measure(s: &Scenario, rho: &HermitianOperator) -> HermitianOperator {
    let m = build_measurement_map(s).unwrap();
    let mut out: Option<CMatrix> = None;
    for x in 0..m.alice.len() {
        for y in 0..m.bob.len() {
            let k = m.joint(x, y);
            let term = &k * rho.matrix() * k.adjoint();
            out = Some(match out {
                Some(acc) => acc + term,
                None => term,
            });
        }
    }
    HermitianOperator::from_hermitian_part(&out.unwrap())
}

fn y_basis() -> Povm {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let u = CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(0.0, h), c(0.0, -h)]);
    Povm::from_basis(&u).unwrap()
}

fn six_state() -> Scenario {
    let bases = vec![z_basis(), x_basis(), y_basis()];
    let third = vec![1.0 / 3.0; 3];
    Scenario::builder(2, 2)
        .alice_povms(bases.clone())
        .bob_povms(bases)
        .basis_probabilities(third.clone(), third)
        .keep(vec![(0, 0), (1, 1), (2, 2)])
        .key_map(2, |_, a, _| Some(a))
        .constraint(ObservableConstraint::identity(4))
        .build()
        .unwrap()
}

#[test]
fn bb84_alice_kraus_operator() {
    let s = bb84_scenario(0.0).unwrap();
    let m = build_measurement_map(&s).unwrap();
    let k0 = &m.alice[0];
    // rows ordered as (A, Ã, Ā); the basis probability 1/2 is folded in
    let mut expected = CMatrix::zeros(8, 2);
    let w = c(0.5f64.sqrt(), 0.0);
    expected[(0, 0)] = w; // |0><0| ⊗ |0>_Ã ⊗ |0_0>
    expected[(4 + 1, 1)] = w; // |1><1| ⊗ |0>_Ã ⊗ |1_0>
    assert!((k0 - expected).camax() < 1e-15);
    assert!(m.completeness_defect() < 1e-12);
}

#[test]
fn trivial_povm_measurement_is_an_isometry() {
    let trivial = Povm::new(vec![HermitianOperator::identity(2)]).unwrap();
    let s = Scenario::builder(2, 2)
        .alice_povms(vec![trivial.clone()])
        .bob_povms(vec![trivial])
        .basis_probabilities(vec![1.0], vec![1.0])
        .keep(vec![(0, 0)])
        .key_map(1, |_, _, _| Some(0))
        .constraint(ObservableConstraint::identity(4))
        .build()
        .unwrap();
    let m = build_measurement_map(&s).unwrap();
    let k = m.joint(0, 0);
    assert!((k.adjoint() * &k - CMatrix::identity(4, 4)).camax() < 1e-12);
    let rho = random_density(&mut rng(5), 4);
    assert!((measure(&s, rho.op()).trace() - 1.0).abs() < 1e-12);
    // all pairs kept: Π is the identity and p_pass = 1
    let pi = build_sifting(&s);
    assert!((&pi.matrix - CMatrix::identity(4, 4)).camax() == 0.0);
    assert!((p_pass(&measure(&s, rho.op()), &pi).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn qutrit_two_basis_measurement_is_complete() {
    let mut r = rng(6);
    let bases = vec![random_basis_povm(&mut r, 3), random_basis_povm(&mut r, 3)];
    let s = Scenario::builder(3, 3)
        .alice_povms(bases.clone())
        .bob_povms(bases)
        .basis_probabilities(vec![0.3, 0.7], vec![0.6, 0.4])
        .keep(vec![(0, 0)])
        .key_map(3, |_, a, _| Some(a))
        .constraint(ObservableConstraint::identity(9))
        .build()
        .unwrap();
    assert!(build_measurement_map(&s).unwrap().completeness_defect() < 1e-9);
}

#[test]
fn bb84_sifting_projector() {
    let s = bb84_scenario(0.0).unwrap();
    let pi = build_sifting(&s);
    let p = &pi.matrix;
    assert!((p * p - p).camax() < 1e-12);
    assert!((p.adjoint() - p).camax() == 0.0);
    // |x><x| ⊗ |y><y| weights: only (0,0) and (1,1) survive, each on a quarter of the space
    assert!((p.trace().re - 64.0 / 2.0).abs() < 1e-12);
    let mut r = rng(7);
    for _ in 0..3 {
        let rho = random_density(&mut r, 4);
        let pp = p_pass(&measure(&s, rho.op()), &pi).unwrap();
        assert!((pp - 0.5).abs() < 1e-12);
    }
    assert!(matches!(
        p_pass(&HermitianOperator::identity(3), &pi),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn bb84_key_map_is_an_isometry() {
    let s = bb84_scenario(0.0).unwrap();
    let v = build_keymap(&s).unwrap();
    assert_eq!(v.alphabet, 2);
    let n = v.matrix.ncols();
    assert!((v.matrix.adjoint() * &v.matrix - CMatrix::identity(n, n)).camax() < 1e-12);
    // kept Z round with Alice outcome 1 lands in key value 1
    let r = RegisterDims::of(&s);
    // A and B indices are 0
    let col = |x: usize, a: usize, y: usize, b: usize| {
        (((x * r.a_outcome + a) * r.b) * r.b_basis + y) * r.b_outcome + b
    };
    let j = col(0, 1, 0, 0);
    let row = r.measured() + j; // key register is the leading factor
    assert!((v.matrix[(row, j)] - c(1.0, 0.0)).norm() < 1e-15);
}

#[test]
fn six_state_key_map_is_an_isometry() {
    let v = build_keymap(&six_state()).unwrap();
    let n = v.matrix.ncols();
    assert!((v.matrix.adjoint() * &v.matrix - CMatrix::identity(n, n)).camax() < 1e-12);
}

#[test]
fn undefined_key_map_is_reported() {
    let err = Scenario::builder(2, 2)
        .alice_povms(vec![z_basis(), x_basis()])
        .bob_povms(vec![z_basis(), x_basis()])
        .basis_probabilities(vec![0.5, 0.5], vec![0.5, 0.5])
        .keep(vec![(0, 0), (1, 1)])
        .key_map(2, |x, a, _| if x == 0 { Some(a) } else { None })
        .constraint(ObservableConstraint::identity(4))
        .build()
        .unwrap_err();
    assert!(matches!(err, Error::IncompleteKeyMap { x: 1, .. }));
}

#[test]
fn maps_on_bell_state() {
    let s = bb84_scenario(0.0).unwrap();
    let g = KeyChannel::new(&s).unwrap();
    let out = g.apply(phi_plus_state().op()).unwrap();
    assert!((out.trace() - 0.5).abs() < 1e-12);
    let z = g.pinch(&out).unwrap();
    assert!((z.trace() - out.trace()).abs() < 1e-12);
    let zz = g.pinch(&z).unwrap();
    assert!((zz.matrix() - z.matrix()).camax() < 1e-12);
    // p_pass H(Z^R | E Ã B̃) = 1/2 on Φ+
    let d = relative_entropy(&out, &z).unwrap();
    assert!((d - 0.5).abs() < 1e-8, "{d}");
}

#[test]
fn maps_reject_wrong_dimensions() {
    let g = KeyChannel::new(&bb84_scenario(0.0).unwrap()).unwrap();
    assert!(matches!(
        g.apply(&HermitianOperator::identity(3)),
        Err(Error::DimensionMismatch(_))
    ));
    assert!(matches!(
        apply_z(&HermitianOperator::identity(5), 2),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn source_replacement_for_bb84() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // label j = 2x + a
    let states: Vec<CVector> = [[1.0, 0.0], [0.0, 1.0], [h, h], [h, -h]]
        .iter()
        .map(|v| CVector::from_vec(vec![c(v[0], 0.0), c(v[1], 0.0)]))
        .collect();
    let psi = source_replacement(&states, &[0.25; 4]).unwrap();
    assert!((psi.norm() - 1.0).abs() < 1e-12);

    // (W ⊗ 1)(|Φ+> ⊗ |+>_X) with W |k>|x> = Σ_a <φ_{a,x}|k> |2x + a>
    let mut target = CVector::zeros(8);
    for x in 0..2 {
        for a in 0..2 {
            let j = 2 * x + a;
            for k in 0..2 {
                let amp = states[j][k].conj() * c(0.5, 0.0);
                target[j * 2 + k] += amp;
            }
        }
    }
    let fidelity = (target.adjoint() * &psi)[(0, 0)].norm_sqr();
    assert!((fidelity - 1.0).abs() < 1e-12);

    // Bob's marginal is I/2, and each basis averages to I/2
    let rho_b = partial_trace(&HermitianOperator::projector(&psi), &[4, 2], &[1]).unwrap();
    assert!((rho_b.matrix() - CMatrix::identity(2, 2) * c(0.5, 0.0)).camax() < 1e-12);
    for x in 0..2 {
        let avg = &HermitianOperator::projector(&states[2 * x]).scale(0.5)
            + &HermitianOperator::projector(&states[2 * x + 1]).scale(0.5);
        assert!((avg.matrix() - CMatrix::identity(2, 2) * c(0.5, 0.0)).camax() < 1e-12);
    }
    // Alice's marginal is the Gram matrix of the states
    let rho_a = partial_trace(&HermitianOperator::projector(&psi), &[4, 2], &[0]).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let gram = (states[j].adjoint() * &states[i])[(0, 0)] * c(0.25, 0.0);
            assert!((rho_a.matrix()[(i, j)] - gram).norm() < 1e-12);
        }
    }
}

#[test]
fn source_replacement_of_a_single_state_is_a_product() {
    let phi = random_vector(&mut rng(8), 3);
    let psi = source_replacement(std::slice::from_ref(&phi), &[1.0]).unwrap();
    assert!((psi - phi).norm() < 1e-12);
    assert!(matches!(
        source_replacement(&[CVector::from_vec(vec![c(1.0, 0.0)])], &[0.5]),
        Err(Error::InvalidDistribution(_))
    ));
}

#[test]
fn noclick_extension() {
    let z = extend_noclick(&z_basis());
    assert_eq!(z.len(), 3);
    assert!(
        (z.element(2).matrix() - HermitianOperator::diag(&[0.0, 0.0, 1.0]).matrix()).camax() == 0.0
    );
    let sum = z
        .elements()
        .iter()
        .fold(HermitianOperator::zeros(3), |acc, e| &acc + e);
    assert!((sum.matrix() - CMatrix::identity(3, 3)).camax() == 0.0);
    assert!(z.element(2).min_eigenvalue() >= 0.0);
    assert!((z.element(2).trace() - 1.0).abs() < 1e-15);
}

#[test]
fn efficiency_examples() {
    let z = extend_noclick(&z_basis());
    let same = apply_efficiency(&z, &[1.0, 1.0]).unwrap();
    assert!((same.element(2).matrix() - z.element(2).matrix()).camax() < 1e-15);

    let lossy = apply_efficiency(&z, &[0.9, 1.0]).unwrap();
    let expected = HermitianOperator::diag(&[0.9, 0.0, 0.0]);
    assert!((lossy.element(0).matrix() - expected.matrix()).camax() < 1e-15);
    // completion 1 - Σ η M
    assert!(
        (lossy.element(2).matrix() - HermitianOperator::diag(&[0.1, 0.0, 1.0]).matrix()).camax()
            < 1e-15
    );

    let dead = apply_efficiency(&z, &[0.0, 0.0]).unwrap();
    assert!((dead.element(2).matrix() - CMatrix::identity(3, 3)).camax() == 0.0);
    assert_eq!(
        apply_efficiency(&z, &[1.2, 1.0]).unwrap_err(),
        Error::EfficiencyOutOfRange(1.2)
    );
}

#[test]
fn fidelity_constraint_examples() {
    let psi = phi_plus();
    let werner = |v: f64| {
        &HermitianOperator::projector(&psi).scale(v)
            + &HermitianOperator::identity(4).scale((1.0 - v) / 4.0)
    };
    let c001 = fidelity_constraint(&psi, 0.01).unwrap();
    // overlap (1 + 3v)/4 >= 0.99 exactly when v >= 0.98667
    assert!(c001.satisfied_by(&werner(0.9867), 1e-12));
    assert!(!c001.satisfied_by(&werner(0.986), 1e-12));

    let vacuous = fidelity_constraint(&psi, 1.0).unwrap();
    assert!(vacuous.satisfied_by(&HermitianOperator::diag(&[0.0, 1.0, 0.0, 0.0]), 1e-12));

    let s = Scenario::builder(2, 2)
        .alice_povms(vec![z_basis()])
        .bob_povms(vec![z_basis()])
        .basis_probabilities(vec![1.0], vec![1.0])
        .keep(vec![(0, 0)])
        .key_map(2, |_, a, _| Some(a))
        .constraint(fidelity_constraint(&psi, 0.0).unwrap())
        .constraint(ObservableConstraint::identity(4))
        .build()
        .unwrap();
    let rho = feasible_point(&s, &SolverOptions::default()).unwrap();
    assert!((rho.matrix() - HermitianOperator::projector(&psi).matrix()).camax() < 1e-5);
    assert!(fidelity_constraint(&psi, 1.5).is_err());
}

#[test]
fn bb84_constraint_examples() {
    let fine = bb84_constraints(0.0, 0.0, Granularity::Fine).unwrap();
    let phi = phi_plus_state();
    assert!(fine.iter().all(|c| c.satisfied_by(phi.op(), 1e-12)));
    assert!(fine.iter().any(|c| c.is_identity()));

    // the maximally mixed state has error rate 1/2 in every basis
    let mixed = DensityOperator::maximally_mixed(4);
    let coarse = bb84_constraints(0.5, 0.5, Granularity::Coarse).unwrap();
    assert!(coarse.iter().all(|c| c.satisfied_by(mixed.op(), 1e-12)));
    let coarse = bb84_constraints(0.25, 0.25, Granularity::Coarse).unwrap();
    assert!(!coarse.iter().all(|c| c.satisfied_by(mixed.op(), 1e-12)));

    // swapping the bases (conjugation by H ⊗ H) permutes the constraint values
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let had = CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)]);
    let hh = had.kronecker(&had);
    let fine = bb84_constraints(0.07, 0.07, Granularity::Fine).unwrap();
    let mut values: Vec<f64> = fine.iter().map(|c| c.value).collect();
    let mut swapped: Vec<f64> = fine
        .iter()
        .map(|c| {
            let op = c.op.conjugate_by(&hh).unwrap();
            fine.iter()
                .find(|d| (d.op.matrix() - op.matrix()).camax() < 1e-12)
                .unwrap()
                .value
        })
        .collect();
    values.sort_by(f64::total_cmp);
    swapped.sort_by(f64::total_cmp);
    assert_eq!(values.len(), swapped.len());
    assert!(values
        .iter()
        .zip(&swapped)
        .all(|(a, b)| (a - b).abs() < 1e-12));

    assert_eq!(
        bb84_constraints(0.6, 0.1, Granularity::Fine).unwrap_err(),
        Error::InvalidQber(0.6)
    );
}

#[test]
fn efficiency_scenario_discards_no_click() {
    let mut b = Bb84::new(0.05);
    b.bob_efficiency = Some([[0.9, 1.0], [1.0, 1.0]]);
    let s = b.scenario().unwrap();
    assert_eq!(s.d_b(), 3);
    assert!(s.is_discarded_b(0, 2) && s.is_discarded_b(1, 2));
    let rho = b.honest_state().unwrap();
    assert!(s
        .constraints()
        .iter()
        .all(|c| c.satisfied_by(rho.op(), 1e-10)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_povms_are_valid(seed in any::<u64>(), d in 2usize..5) {
        let mut r = rng(seed);
        let p = random_basis_povm(&mut r, d);
        let sum = p.elements().iter().fold(HermitianOperator::zeros(d), |acc, e| &acc + e);
        prop_assert!((sum.matrix() - CMatrix::identity(d, d)).camax() < 1e-9);
        prop_assert!(p.elements().iter().all(|e| e.min_eigenvalue() > -1e-10));
        let ext = extend_noclick(&p);
        let sum = ext.elements().iter().fold(HermitianOperator::zeros(d + 1), |acc, e| &acc + e);
        prop_assert!((sum.matrix() - CMatrix::identity(d + 1, d + 1)).camax() < 1e-12);
    }

    #[test]
    fn g_is_trace_nonincreasing_and_z_idempotent(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (s, _) = random_scenario(&mut r);
        let g = KeyChannel::new(&s).unwrap();
        let rho = random_density(&mut r, 4);
        let out = g.apply(rho.op()).unwrap();
        prop_assert!(out.trace() <= 1.0 + 1e-9);
        prop_assert!((out.trace() - s.p_pass()).abs() < 1e-10);
        let z = g.pinch(&out).unwrap();
        prop_assert!((z.trace() - out.trace()).abs() < 1e-12);
        prop_assert!((g.pinch(&z).unwrap().matrix() - z.matrix()).camax() < 1e-12);
    }
}
