//! Entanglement-based BB84 with Z (basis 0) and X (basis 1) measurements.

use num_complex::Complex64;

use super::povm::{apply_efficiency, extend_noclick, Povm};
use super::scenario::{ObservableConstraint, Scenario};
use crate::error::{Error, Result};
use crate::linalg::{kron, CMatrix, CVector, DensityOperator, HermitianOperator};

/// Constraint richness for the BB84 constraint generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Granularity {
    /// Only the two error rates (plus normalisation).
    Coarse,
    /// Every joint outcome probability in every basis pair.
    #[default]
    Fine,
}

fn r(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn z_basis() -> Povm {
    Povm::new(vec![
        HermitianOperator::diag(&[1.0, 0.0]),
        HermitianOperator::diag(&[0.0, 1.0]),
    ])
    .expect("computational basis is a POVM")
}

pub fn x_basis() -> Povm {
    let h = 0.5;
    Povm::new(vec![
        HermitianOperator::from_real(2, &[h, h, h, h]).expect("symmetric"),
        HermitianOperator::from_real(2, &[h, -h, -h, h]).expect("symmetric"),
    ])
    .expect("Hadamard basis is a POVM")
}

/// `|Φ+> = (|00> + |11>)/sqrt 2`.
pub fn phi_plus() -> CVector {
    let s = 0.5f64.sqrt();
    CVector::from_vec(vec![r(s), r(0.0), r(0.0), r(s)])
}

/// Bell-diagonal state with Z error rate `qz` and X error rate `qx`.
pub fn bell_diagonal_state(qz: f64, qx: f64) -> Result<DensityOperator> {
    for q in [qz, qx] {
        if !(0.0..=0.5).contains(&q) {
            return Err(Error::InvalidQber(q));
        }
    }
    let s = 0.5f64.sqrt();
    let bell = [
        ([s, 0.0, 0.0, s], (1.0 - qz) * (1.0 - qx)),
        ([s, 0.0, 0.0, -s], (1.0 - qz) * qx),
        ([0.0, s, s, 0.0], qz * (1.0 - qx)),
        ([0.0, s, -s, 0.0], qz * qx),
    ];
    let mut m = CMatrix::zeros(4, 4);
    for (v, w) in bell {
        let v = CVector::from_iterator(4, v.iter().map(|&x| r(x)));
        m += (&v * v.adjoint()) * r(w);
    }
    DensityOperator::new(HermitianOperator::from_hermitian_part(&m))
}

/// Equality constraints fixing every `Tr((M_{a|x} ⊗ N_{b|y}) rho)`.
pub fn joint_probability_constraints(
    povms_a: &[Povm],
    povms_b: &[Povm],
    rho: &HermitianOperator,
) -> Vec<ObservableConstraint> {
    let mut out = Vec::new();
    for pa in povms_a {
        for pb in povms_b {
            for ma in pa.elements() {
                for nb in pb.elements() {
                    let op = kron(ma, nb);
                    let value = op.inner(rho);
                    out.push(ObservableConstraint::equality(op, value));
                }
            }
        }
    }
    out
}

/// Constraint list for error rates `q_z`, `q_x` (normalisation included).
///
/// The fine list reproduces all joint probabilities of the Bell-diagonal
/// state with the given error rates.
pub fn bb84_constraints(
    q_z: f64,
    q_x: f64,
    granularity: Granularity,
) -> Result<Vec<ObservableConstraint>> {
    let rho = bell_diagonal_state(q_z, q_x)?;
    let bases = [z_basis(), x_basis()];
    let mut out = match granularity {
        Granularity::Fine => joint_probability_constraints(&bases, &bases, rho.op()),
        Granularity::Coarse => bases
            .iter()
            .zip([q_z, q_x])
            .map(|(p, q)| {
                let err = &kron(p.element(0), p.element(1)) + &kron(p.element(1), p.element(0));
                ObservableConstraint::equality(err, q)
            })
            .collect(),
    };
    out.push(ObservableConstraint::identity(4));
    Ok(out)
}

/// Builder for BB84 scenarios with optional biased bases and lossy Bob detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Bb84 {
    pub q_z: f64,
    pub q_x: f64,
    pub granularity: Granularity,
    /// Probability of choosing Z, for both parties.
    pub p_z: f64,
    /// Efficiencies `η[y][b]` of Bob's detectors per basis and outcome. Setting
    /// them adds a no-click outcome on a qutrit; no-click rounds are discarded.
    pub bob_efficiency: Option<[[f64; 2]; 2]>,
}

impl Bb84 {
    pub fn new(q: f64) -> Self {
        Self {
            q_z: q,
            q_x: q,
            granularity: Granularity::Fine,
            p_z: 0.5,
            bob_efficiency: None,
        }
    }

    /// The honest state, embedded in Bob's qutrit when detectors are lossy.
    pub fn honest_state(&self) -> Result<DensityOperator> {
        let rho = bell_diagonal_state(self.q_z, self.q_x)?;
        if self.bob_efficiency.is_none() {
            return Ok(rho);
        }
        let mut embed = CMatrix::zeros(6, 4);
        for a in 0..2 {
            for b in 0..2 {
                embed[(a * 3 + b, a * 2 + b)] = r(1.0);
            }
        }
        DensityOperator::new(rho.op().conjugate_by(&embed)?)
    }

    pub fn bob_povms(&self) -> Result<Vec<Povm>> {
        let bases = vec![z_basis(), x_basis()];
        match self.bob_efficiency {
            None => Ok(bases),
            Some(eta) => bases
                .iter()
                .zip(eta)
                .map(|(p, e)| apply_efficiency(&extend_noclick(p), &e))
                .collect(),
        }
    }

    pub fn constraints(&self) -> Result<Vec<ObservableConstraint>> {
        if self.bob_efficiency.is_none() {
            return bb84_constraints(self.q_z, self.q_x, self.granularity);
        }
        let rho = self.honest_state()?;
        let alice = [z_basis(), x_basis()];
        let bob = self.bob_povms()?;
        let mut out = match self.granularity {
            Granularity::Fine => joint_probability_constraints(&alice, &bob, rho.op()),
            Granularity::Coarse => {
                return Err(Error::InvalidDistribution(
                    "lossy detectors require fine-grained constraints".into(),
                ))
            }
        };
        out.push(ObservableConstraint::identity(6));
        Ok(out)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        if !(self.p_z > 0.0 && self.p_z < 1.0) {
            return Err(Error::InvalidDistribution(format!(
                "basis probability {} outside (0,1)",
                self.p_z
            )));
        }
        let d_b = if self.bob_efficiency.is_some() { 3 } else { 2 };
        let probs = vec![self.p_z, 1.0 - self.p_z];
        let mut builder = Scenario::builder(2, d_b)
            .alice_povms(vec![z_basis(), x_basis()])
            .bob_povms(self.bob_povms()?)
            .basis_probabilities(probs.clone(), probs)
            .keep(vec![(0, 0), (1, 1)])
            .key_map(2, |_, a, _| Some(a))
            .constraints(self.constraints()?);
        if self.bob_efficiency.is_some() {
            builder = builder.discard_bob_outcome(0, 2).discard_bob_outcome(1, 2);
        }
        builder.build()
    }
}

/// Standard BB84 scenario at equal error rates with fine constraints.
pub fn bb84_scenario(q: f64) -> Result<Scenario> {
    Bb84::new(q).scenario()
}
