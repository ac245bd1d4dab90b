use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::povm::Povm;
use crate::error::{Error, Result};
use crate::linalg::{kron, CVector, DensityOperator, HermitianOperator};

const PROB_TOL: f64 = 1e-9;

/// How an observed value constrains `Tr(op * rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintKind {
    Equality,
    /// `lower <= Tr(op rho) <= upper`; either side may be infinite.
    Interval {
        lower: f64,
        upper: f64,
    },
}

/// `Tr(op * rho)` compared against `value` according to `kind`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableConstraint {
    pub op: HermitianOperator,
    pub value: f64,
    pub kind: ConstraintKind,
}

impl ObservableConstraint {
    pub fn equality(op: HermitianOperator, value: f64) -> Self {
        Self {
            op,
            value,
            kind: ConstraintKind::Equality,
        }
    }

    /// `|Tr(op rho) - value| <= half_width`.
    pub fn interval(op: HermitianOperator, value: f64, half_width: f64) -> Result<Self> {
        if !(half_width >= 0.0) {
            return Err(Error::OutOfRange(format!(
                "interval half-width {half_width} must be nonnegative"
            )));
        }
        Ok(Self {
            op,
            value,
            kind: ConstraintKind::Interval {
                lower: value - half_width,
                upper: value + half_width,
            },
        })
    }

    /// `Tr(op rho) >= lower`.
    pub fn at_least(op: HermitianOperator, lower: f64) -> Self {
        Self {
            op,
            value: lower,
            kind: ConstraintKind::Interval {
                lower,
                upper: f64::INFINITY,
            },
        }
    }

    /// Normalisation `Tr(rho) = 1`.
    pub fn identity(dim: usize) -> Self {
        Self::equality(HermitianOperator::identity(dim), 1.0)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, ConstraintKind::Equality)
            && (self.value - 1.0).abs() <= 1e-12
            && (&self.op - &HermitianOperator::identity(self.op.dim())).max_abs() <= 1e-12
    }

    /// Whether `rho` satisfies the constraint within `tol`.
    pub fn satisfied_by(&self, rho: &HermitianOperator, tol: f64) -> bool {
        let v = self.op.inner(rho);
        match self.kind {
            ConstraintKind::Equality => (v - self.value).abs() <= tol,
            ConstraintKind::Interval { lower, upper } => v >= lower - tol && v <= upper + tol,
        }
    }
}

/// The observed frequencies `f` of the operators `ops` satisfy
/// `(p - f)^T covariance^{-1} (p - f) <= radius_sq` with `p_k = Tr(ops_k rho)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidConstraint {
    pub ops: Vec<HermitianOperator>,
    pub center: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub radius_sq: f64,
}

impl EllipsoidConstraint {
    pub fn new(
        ops: Vec<HermitianOperator>,
        center: Vec<f64>,
        covariance: DMatrix<f64>,
        radius_sq: f64,
    ) -> Result<Self> {
        let k = ops.len();
        if k == 0 || center.len() != k || covariance.shape() != (k, k) {
            return Err(Error::DimensionMismatch(format!(
                "ellipsoid with {k} operators, {} centre entries and {:?} covariance",
                center.len(),
                covariance.shape()
            )));
        }
        if !(radius_sq >= 0.0) {
            return Err(Error::OutOfRange(format!(
                "radius {radius_sq} must be nonnegative"
            )));
        }
        let sym = &covariance - covariance.transpose();
        if sym.amax() > 1e-12 * (1.0 + covariance.amax()) {
            return Err(Error::OutOfRange("covariance is not symmetric".into()));
        }
        let min = covariance.clone().symmetric_eigen().eigenvalues.min();
        if min < -1e-12 {
            return Err(Error::OutOfRange(format!(
                "covariance has negative eigenvalue {min:e}"
            )));
        }
        Ok(Self {
            ops,
            center,
            covariance,
            radius_sq,
        })
    }
}

/// Fidelity witness `<psi|rho|psi> >= 1 - eps`.
pub fn fidelity_constraint(psi: &CVector, eps: f64) -> Result<ObservableConstraint> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::OutOfRange(format!(
            "fidelity tolerance {eps} outside [0,1]"
        )));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDensity(format!("state has norm {norm}")));
    }
    Ok(ObservableConstraint::at_least(
        HermitianOperator::projector(psi),
        1.0 - eps,
    ))
}

/// A device-dependent protocol instance on `H_A ⊗ H_B`.
#[derive(Debug, Clone)]
pub struct Scenario {
    d_a: usize,
    d_b: usize,
    povms_a: Vec<Povm>,
    povms_b: Vec<Povm>,
    probs_a: Vec<f64>,
    probs_b: Vec<f64>,
    kept: Vec<(usize, usize)>,
    key_alphabet: usize,
    key_map: BTreeMap<(usize, usize, usize), usize>,
    constraints: Vec<ObservableConstraint>,
    ellipsoids: Vec<EllipsoidConstraint>,
    fixed_state: Option<DensityOperator>,
    key_basis: usize,
    discarded_b: Vec<(usize, usize)>,
}

impl Scenario {
    pub fn builder(d_a: usize, d_b: usize) -> ScenarioBuilder {
        ScenarioBuilder {
            d_a,
            d_b,
            povms_a: Vec::new(),
            povms_b: Vec::new(),
            probs_a: None,
            probs_b: None,
            kept: Vec::new(),
            key_alphabet: 0,
            key_map: BTreeMap::new(),
            constraints: Vec::new(),
            ellipsoids: Vec::new(),
            fixed_state: None,
            key_basis: 0,
            discarded_b: Vec::new(),
        }
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }
    pub fn d_b(&self) -> usize {
        self.d_b
    }
    /// Dimension of the shared state `rho_AB`.
    pub fn dim(&self) -> usize {
        self.d_a * self.d_b
    }
    pub fn povms_a(&self) -> &[Povm] {
        &self.povms_a
    }
    pub fn povms_b(&self) -> &[Povm] {
        &self.povms_b
    }
    pub fn probs_a(&self) -> &[f64] {
        &self.probs_a
    }
    pub fn probs_b(&self) -> &[f64] {
        &self.probs_b
    }
    pub fn kept(&self) -> &[(usize, usize)] {
        &self.kept
    }
    pub fn key_alphabet(&self) -> usize {
        self.key_alphabet
    }
    /// `g(x, a, y)`; `None` outside the kept triples.
    pub fn key(&self, x: usize, a: usize, y: usize) -> Option<usize> {
        self.key_map.get(&(x, a, y)).copied()
    }
    pub fn constraints(&self) -> &[ObservableConstraint] {
        &self.constraints
    }
    pub fn ellipsoids(&self) -> &[EllipsoidConstraint] {
        &self.ellipsoids
    }
    pub fn fixed_state(&self) -> Option<&DensityOperator> {
        self.fixed_state.as_ref()
    }
    /// Alice's basis whose outcome is the raw key for the single-POVM methods.
    pub fn key_basis(&self) -> usize {
        self.key_basis
    }
    /// Bob's `(basis, outcome)` events whose rounds are discarded by `Π`.
    pub fn discarded_b(&self) -> &[(usize, usize)] {
        &self.discarded_b
    }
    pub fn is_discarded_b(&self, y: usize, b: usize) -> bool {
        self.discarded_b.contains(&(y, b))
    }
    /// `1 - sum` of Bob's discarded elements in basis `y`.
    pub fn bob_retained_element(&self, y: usize) -> HermitianOperator {
        let mut c = HermitianOperator::identity(self.d_b);
        for &(yy, b) in &self.discarded_b {
            if yy == y {
                c = &c - self.povms_b[y].element(b);
            }
        }
        c
    }
    /// Index of the normalisation constraint.
    pub fn identity_index(&self) -> Option<usize> {
        self.constraints.iter().position(|c| c.is_identity())
    }

    /// Adds one more constraint, such as a fidelity witness.
    pub fn with_constraint(mut self, c: ObservableConstraint) -> Result<Self> {
        let dim = self.dim();
        if c.op.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "constraint has dimension {} instead of {dim}",
                c.op.dim()
            )));
        }
        self.constraints.push(c);
        Ok(self)
    }

    /// `M_{a|x} ⊗ N_{b|y}`.
    pub fn joint_element(&self, x: usize, a: usize, y: usize, b: usize) -> HermitianOperator {
        kron(self.povms_a[x].element(a), self.povms_b[y].element(b))
    }

    /// Basis-sifting probability `sum_{(x,y) kept} p_x p_y`. It is independent
    /// of the state because every POVM is complete; discarded outcomes are not
    /// subtracted here, so rates normalised by it are per basis-sifted round.
    pub fn p_pass(&self) -> f64 {
        self.kept
            .iter()
            .map(|&(x, y)| self.probs_a[x] * self.probs_b[y])
            .sum()
    }

    /// `H(K | B, X, Y)` per sifted round on `rho`: the conditional entropy of
    /// the raw key given Bob's outcome, averaged over kept basis pairs.
    /// Discarded outcomes carry no key and contribute nothing.
    pub fn error_correction_cost(&self, rho: &HermitianOperator) -> f64 {
        self.error_correction_cost_over(rho, |_| true)
    }

    /// As [`Self::error_correction_cost`], restricted to the kept pairs in
    /// which Alice measured `x`.
    pub fn error_correction_cost_in_basis(&self, rho: &HermitianOperator, x: usize) -> f64 {
        self.error_correction_cost_over(rho, |kx| kx == x)
    }

    fn error_correction_cost_over(
        &self,
        rho: &HermitianOperator,
        include: impl Fn(usize) -> bool,
    ) -> f64 {
        let pass: f64 = self
            .kept
            .iter()
            .filter(|&&(x, _)| include(x))
            .map(|&(x, y)| self.probs_a[x] * self.probs_b[y])
            .sum();
        let mut total = 0.0;
        for &(x, y) in self.kept.iter().filter(|&&(x, _)| include(x)) {
            let weight = self.probs_a[x] * self.probs_b[y] / pass;
            let nb = self.povms_b[y].len();
            let mut joint = vec![vec![0.0; nb]; self.key_alphabet];
            for a in 0..self.povms_a[x].len() {
                let k = self
                    .key(x, a, y)
                    .expect("key map validated on kept triples");
                for (b, cell) in (0..nb).map(|b| (b, self.joint_element(x, a, y, b))) {
                    joint[k][b] += cell.inner(rho).max(0.0);
                }
            }
            let norm: f64 = joint.iter().flatten().sum();
            if norm <= 0.0 {
                continue;
            }
            let mut h = 0.0;
            for b in (0..nb).filter(|&b| !self.is_discarded_b(y, b)) {
                let pb: f64 = joint.iter().map(|row| row[b]).sum::<f64>() / norm;
                for row in &joint {
                    let p = row[b] / norm;
                    if p > 0.0 {
                        h -= p * (p / pb).log2();
                    }
                }
            }
            total += weight * h;
        }
        total
    }
}

pub struct ScenarioBuilder {
    d_a: usize,
    d_b: usize,
    povms_a: Vec<Povm>,
    povms_b: Vec<Povm>,
    probs_a: Option<Vec<f64>>,
    probs_b: Option<Vec<f64>>,
    kept: Vec<(usize, usize)>,
    key_alphabet: usize,
    key_map: BTreeMap<(usize, usize, usize), usize>,
    constraints: Vec<ObservableConstraint>,
    ellipsoids: Vec<EllipsoidConstraint>,
    fixed_state: Option<DensityOperator>,
    key_basis: usize,
    discarded_b: Vec<(usize, usize)>,
}

impl ScenarioBuilder {
    pub fn alice_povms(mut self, povms: Vec<Povm>) -> Self {
        self.povms_a = povms;
        self
    }
    pub fn bob_povms(mut self, povms: Vec<Povm>) -> Self {
        self.povms_b = povms;
        self
    }
    /// Basis-choice probabilities; uniform when not set.
    pub fn basis_probabilities(mut self, alice: Vec<f64>, bob: Vec<f64>) -> Self {
        self.probs_a = Some(alice);
        self.probs_b = Some(bob);
        self
    }
    pub fn keep(mut self, pairs: Vec<(usize, usize)>) -> Self {
        self.kept = pairs;
        self
    }
    /// Key map `g(x, a, y)` evaluated on every kept triple.
    pub fn key_map(
        mut self,
        alphabet: usize,
        g: impl Fn(usize, usize, usize) -> Option<usize>,
    ) -> Self {
        self.key_alphabet = alphabet;
        self.key_map.clear();
        for &(x, y) in &self.kept {
            let outcomes = self.povms_a.get(x).map_or(0, Povm::len);
            for a in 0..outcomes {
                if let Some(k) = g(x, a, y) {
                    self.key_map.insert((x, a, y), k);
                }
            }
        }
        self
    }
    pub fn constraint(mut self, c: ObservableConstraint) -> Self {
        self.constraints.push(c);
        self
    }
    pub fn constraints(mut self, cs: Vec<ObservableConstraint>) -> Self {
        self.constraints.extend(cs);
        self
    }
    pub fn ellipsoid(mut self, e: EllipsoidConstraint) -> Self {
        self.ellipsoids.push(e);
        self
    }
    pub fn fixed_state(mut self, rho: DensityOperator) -> Self {
        self.fixed_state = Some(rho);
        self
    }
    pub fn key_basis(mut self, x: usize) -> Self {
        self.key_basis = x;
        self
    }
    /// Discards rounds in which Bob measured `y` and obtained `b`.
    pub fn discard_bob_outcome(mut self, y: usize, b: usize) -> Self {
        if !self.discarded_b.contains(&(y, b)) {
            self.discarded_b.push((y, b));
        }
        self
    }

    /// Validates dimensions, distributions and key-map completeness, and
    /// appends the normalisation constraint if absent.
    pub fn build(self) -> Result<Scenario> {
        let (d_a, d_b) = (self.d_a, self.d_b);
        if d_a == 0 || d_b == 0 {
            return Err(Error::DimensionMismatch(
                "local dimensions must be positive".into(),
            ));
        }
        if self.povms_a.is_empty() || self.povms_b.is_empty() {
            return Err(Error::InvalidPovm(
                "each party needs at least one POVM".into(),
            ));
        }
        for (who, povms, d) in [("Alice", &self.povms_a, d_a), ("Bob", &self.povms_b, d_b)] {
            if let Some(x) = povms.iter().position(|p| p.dim() != d) {
                return Err(Error::DimensionMismatch(format!(
                    "{who}'s POVM {x} acts on dimension {} instead of {d}",
                    povms[x].dim()
                )));
            }
        }
        let uniform = |n: usize| vec![1.0 / n as f64; n];
        let probs_a = self.probs_a.unwrap_or_else(|| uniform(self.povms_a.len()));
        let probs_b = self.probs_b.unwrap_or_else(|| uniform(self.povms_b.len()));
        for (who, p, n) in [
            ("Alice", &probs_a, self.povms_a.len()),
            ("Bob", &probs_b, self.povms_b.len()),
        ] {
            if p.len() != n
                || p.iter().any(|&v| !(0.0..=1.0).contains(&v))
                || (p.iter().sum::<f64>() - 1.0).abs() > PROB_TOL
            {
                return Err(Error::InvalidDistribution(format!(
                    "{who}'s basis probabilities {p:?} do not form a distribution over {n} bases"
                )));
            }
        }
        if self.kept.is_empty() {
            return Err(Error::InvalidDistribution("no kept basis pairs".into()));
        }
        for &(x, y) in &self.kept {
            if x >= self.povms_a.len() || y >= self.povms_b.len() {
                return Err(Error::DimensionMismatch(format!(
                    "kept pair ({x},{y}) names a missing basis"
                )));
            }
            for a in 0..self.povms_a[x].len() {
                match self.key_map.get(&(x, a, y)) {
                    None => return Err(Error::IncompleteKeyMap { x, a, y }),
                    Some(&k) if k >= self.key_alphabet => {
                        return Err(Error::OutOfRange(format!(
                            "g({x},{a},{y}) = {k} outside alphabet of size {}",
                            self.key_alphabet
                        )))
                    }
                    Some(_) => {}
                }
            }
        }
        if self.key_basis >= self.povms_a.len() {
            return Err(Error::DimensionMismatch(format!(
                "key basis {} names a missing POVM",
                self.key_basis
            )));
        }
        if let Some(&(y, b)) = self
            .discarded_b
            .iter()
            .find(|&&(y, b)| y >= self.povms_b.len() || b >= self.povms_b[y].len())
        {
            return Err(Error::DimensionMismatch(format!(
                "discarded outcome ({y},{b}) names a missing POVM element"
            )));
        }
        let dim = d_a * d_b;
        let mut constraints = self.constraints;
        if let Some(i) = constraints.iter().position(|c| c.op.dim() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "constraint {i} has dimension {} instead of {dim}",
                constraints[i].op.dim()
            )));
        }
        for e in &self.ellipsoids {
            if e.ops.iter().any(|op| op.dim() != dim) {
                return Err(Error::DimensionMismatch(
                    "ellipsoid operator dimension mismatch".into(),
                ));
            }
        }
        if let Some(rho) = &self.fixed_state {
            if rho.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "fixed state has dimension {} instead of {dim}",
                    rho.dim()
                )));
            }
        }
        if !constraints.iter().any(ObservableConstraint::is_identity) {
            constraints.push(ObservableConstraint::identity(dim));
        }
        Ok(Scenario {
            d_a,
            d_b,
            povms_a: self.povms_a,
            povms_b: self.povms_b,
            probs_a,
            probs_b,
            kept: self.kept,
            key_alphabet: self.key_alphabet,
            key_map: self.key_map,
            constraints,
            ellipsoids: self.ellipsoids,
            fixed_state: self.fixed_state,
            key_basis: self.key_basis,
            discarded_b: self.discarded_b,
        })
    }
}
