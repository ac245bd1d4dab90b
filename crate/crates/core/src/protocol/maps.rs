//! Measurement, sifting and key-map operators, and their composition `G`.
//!
//! Registers are explicit tensor factors in the order
//! `R ⊗ A ⊗ Ã ⊗ Ā ⊗ B ⊗ B̃ ⊗ B̄`: key register, Alice's system, her basis
//! announcement and outcome, then the same for Bob. Outcome registers are
//! sized by the largest POVM of each party.

use num_complex::Complex64;

use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::linalg::{kron_all, CMatrix, HermitianOperator};

const KRAUS_TOL: f64 = 1e-9;

fn ket(n: usize, k: usize) -> CMatrix {
    let mut v = CMatrix::zeros(n, 1);
    v[(k, 0)] = Complex64::new(1.0, 0.0);
    v
}

fn ketbra(n: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(k, k)] = Complex64::new(1.0, 0.0);
    m
}

/// Factor dimensions of the enlarged space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterDims {
    pub key: usize,
    pub a: usize,
    pub a_basis: usize,
    pub a_outcome: usize,
    pub b: usize,
    pub b_basis: usize,
    pub b_outcome: usize,
}

impl RegisterDims {
    pub fn of(s: &Scenario) -> Self {
        Self {
            key: s.key_alphabet(),
            a: s.d_a(),
            a_basis: s.povms_a().len(),
            a_outcome: s.povms_a().iter().map(|p| p.len()).max().unwrap_or(1),
            b: s.d_b(),
            b_basis: s.povms_b().len(),
            b_outcome: s.povms_b().iter().map(|p| p.len()).max().unwrap_or(1),
        }
    }

    /// Dimension of `A Ã Ā`.
    pub fn alice_out(&self) -> usize {
        self.a * self.a_basis * self.a_outcome
    }

    /// Dimension of `B B̃ B̄`.
    pub fn bob_out(&self) -> usize {
        self.b * self.b_basis * self.b_outcome
    }

    /// Output dimension of the measurement map (no key register).
    pub fn measured(&self) -> usize {
        self.alice_out() * self.bob_out()
    }

    /// Output dimension of `G`, including the key register.
    pub fn full(&self) -> usize {
        self.key * self.measured()
    }
}

/// Kraus operators `K_x = sqrt(p_x) sum_a sqrt(M_{a|x}) ⊗ |x> ⊗ |a>` per basis.
#[derive(Debug, Clone)]
pub struct KrausMeasurement {
    pub alice: Vec<CMatrix>,
    pub bob: Vec<CMatrix>,
}

impl KrausMeasurement {
    /// Joint Kraus operator `K_x^A ⊗ K_y^B`.
    pub fn joint(&self, x: usize, y: usize) -> CMatrix {
        self.alice[x].kronecker(&self.bob[y])
    }

    /// Largest entry of `sum K^dagger K - 1` over both parties.
    pub fn completeness_defect(&self) -> f64 {
        [&self.alice, &self.bob]
            .iter()
            .map(|ks| {
                let d = ks[0].ncols();
                let sum = ks
                    .iter()
                    .fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k);
                (sum - CMatrix::identity(d, d)).camax()
            })
            .fold(0.0, f64::max)
    }
}

fn party_kraus(
    povms: &[super::Povm],
    probs: &[f64],
    n_basis: usize,
    n_outcome: usize,
) -> Vec<CMatrix> {
    povms
        .iter()
        .enumerate()
        .map(|(x, povm)| {
            let d = povm.dim();
            let mut k = CMatrix::zeros(d * n_basis * n_outcome, d);
            for (a, root) in povm.sqrt_elements().iter().enumerate() {
                k += kron_all(&[root.matrix(), &ket(n_basis, x), &ket(n_outcome, a)]);
            }
            k * Complex64::new(probs[x].sqrt(), 0.0)
        })
        .collect()
}

pub fn build_measurement_map(s: &Scenario) -> Result<KrausMeasurement> {
    let r = RegisterDims::of(s);
    let m = KrausMeasurement {
        alice: party_kraus(s.povms_a(), s.probs_a(), r.a_basis, r.a_outcome),
        bob: party_kraus(s.povms_b(), s.probs_b(), r.b_basis, r.b_outcome),
    };
    let defect = m.completeness_defect();
    if defect > KRAUS_TOL {
        return Err(Error::InvalidPovm(format!(
            "measurement map is not trace preserving (defect {defect:e})"
        )));
    }
    Ok(m)
}

/// `Π = sum_{(x,y) kept} |x><x|_Ã ⊗ |y><y|_B̃ ⊗ R_y` where `R_y` projects
/// Bob's outcome register onto the outcomes of basis `y` that are not
/// discarded (identity on the other factors).
#[derive(Debug, Clone)]
pub struct SiftingProjector {
    pub kept: Vec<(usize, usize)>,
    pub matrix: CMatrix,
}

pub fn build_sifting(s: &Scenario) -> SiftingProjector {
    let r = RegisterDims::of(s);
    let n = r.measured();
    let mut matrix = CMatrix::zeros(n, n);
    for &(x, y) in s.kept() {
        let mut retained = CMatrix::identity(r.b_outcome, r.b_outcome);
        for b in (0..r.b_outcome).filter(|&b| s.is_discarded_b(y, b)) {
            retained[(b, b)] = Complex64::new(0.0, 0.0);
        }
        matrix += kron_all(&[
            &CMatrix::identity(r.a, r.a),
            &ketbra(r.a_basis, x),
            &CMatrix::identity(r.a_outcome, r.a_outcome),
            &CMatrix::identity(r.b, r.b),
            &ketbra(r.b_basis, y),
            &retained,
        ]);
    }
    SiftingProjector {
        kept: s.kept().to_vec(),
        matrix,
    }
}

/// `p_pass = Tr(Π σ Π)`.
pub fn p_pass(sigma: &HermitianOperator, pi: &SiftingProjector) -> Result<f64> {
    if sigma.dim() != pi.matrix.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {} against projector of dimension {}",
            sigma.dim(),
            pi.matrix.nrows()
        )));
    }
    Ok(sigma.conjugate_by(&pi.matrix)?.trace())
}

/// `V = sum_{x,a,y} |g(x,a,y)>_R ⊗ |x><x| ⊗ |a><a| ⊗ |y><y|` (identity on
/// `A`, `B`, `B̄`). Triples outside the kept set (removed by `Π` anyway) are
/// sent to key value 0 so that `V` is an isometry on the whole space.
#[derive(Debug, Clone)]
pub struct KeyMapIsometry {
    pub alphabet: usize,
    pub matrix: CMatrix,
}

pub fn build_keymap(s: &Scenario) -> Result<KeyMapIsometry> {
    let r = RegisterDims::of(s);
    let mut v = CMatrix::zeros(r.full(), r.measured());
    for x in 0..r.a_basis {
        for a in 0..r.a_outcome {
            for y in 0..r.b_basis {
                let in_kept = s.kept().contains(&(x, y)) && a < s.povms_a()[x].len();
                let g = if in_kept {
                    s.key(x, a, y).ok_or(Error::IncompleteKeyMap { x, a, y })?
                } else {
                    0
                };
                v += kron_all(&[
                    &ket(r.key, g),
                    &CMatrix::identity(r.a, r.a),
                    &ketbra(r.a_basis, x),
                    &ketbra(r.a_outcome, a),
                    &CMatrix::identity(r.b, r.b),
                    &ketbra(r.b_basis, y),
                    &CMatrix::identity(r.b_outcome, r.b_outcome),
                ]);
            }
        }
    }
    Ok(KeyMapIsometry {
        alphabet: r.key,
        matrix: v,
    })
}

/// The map `G(σ) = V Π M(σ) Π V^dagger`, stored as Kraus operators
/// `V Π (K_x^A ⊗ K_y^B)` over the kept pairs.
#[derive(Debug, Clone)]
pub struct KeyChannel {
    kraus: Vec<CMatrix>,
    dims: RegisterDims,
}

impl KeyChannel {
    pub fn new(s: &Scenario) -> Result<Self> {
        let m = build_measurement_map(s)?;
        let pi = build_sifting(s);
        let v = build_keymap(s)?;
        let vp = &v.matrix * &pi.matrix;
        let kraus = s.kept().iter().map(|&(x, y)| &vp * m.joint(x, y)).collect();
        Ok(Self {
            kraus,
            dims: RegisterDims::of(s),
        })
    }

    pub fn dims(&self) -> RegisterDims {
        self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims.a * self.dims.b
    }

    pub fn output_dim(&self) -> usize {
        self.dims.full()
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `G(ρ)`, subnormalised with trace `p_pass`.
    pub fn apply(&self, rho: &HermitianOperator) -> Result<HermitianOperator> {
        if rho.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "G expects dimension {}, got {}",
                self.input_dim(),
                rho.dim()
            )));
        }
        let n = self.output_dim();
        let mut out = CMatrix::zeros(n, n);
        for k in &self.kraus {
            let kr = k * rho.matrix();
            out += kr * k.adjoint();
        }
        Ok(HermitianOperator::from_hermitian_part(&out))
    }

    /// `G^dagger(Y) = sum L^dagger Y L`.
    pub fn adjoint(&self, y: &HermitianOperator) -> Result<HermitianOperator> {
        if y.dim() != self.output_dim() {
            return Err(Error::DimensionMismatch(format!(
                "G adjoint expects dimension {}, got {}",
                self.output_dim(),
                y.dim()
            )));
        }
        let d = self.input_dim();
        let mut out = CMatrix::zeros(d, d);
        for k in &self.kraus {
            let yk = y.matrix() * k;
            out += k.adjoint() * yk;
        }
        Ok(HermitianOperator::from_hermitian_part(&out))
    }

    /// Pinching on the key register.
    pub fn pinch(&self, sigma: &HermitianOperator) -> Result<HermitianOperator> {
        apply_z(sigma, self.dims.key)
    }
}

/// Pinching `Z(σ) = sum_r (|r><r| ⊗ 1) σ (|r><r| ⊗ 1)` on a leading key
/// register of dimension `key_dim`.
pub fn apply_z(sigma: &HermitianOperator, key_dim: usize) -> Result<HermitianOperator> {
    let n = sigma.dim();
    if key_dim == 0 || n % key_dim != 0 {
        return Err(Error::DimensionMismatch(format!(
            "key register of size {key_dim} does not divide dimension {n}"
        )));
    }
    let block = n / key_dim;
    let mut m = sigma.matrix().clone();
    for i in 0..n {
        for j in 0..n {
            if i / block != j / block {
                m[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    Ok(HermitianOperator::from_hermitian_part(&m))
}
