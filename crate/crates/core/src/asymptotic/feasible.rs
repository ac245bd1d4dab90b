//! Linear programs over the feasible set `S` of a scenario.

use crate::linalg::{CMatrix, HermitianOperator};
use crate::protocol::{ConstraintKind, ObservableConstraint, Scenario};
use crate::sdp::{extract_hermitian, BlockKind, ConeProgram, ConeSolution, SymTerms};

#[derive(Debug, Clone, Copy)]
enum RowRef {
    Equality(usize),
    Interval(usize),
}

/// `min sum_k Tr(C_k ρ_k)` over PSD `ρ_1..ρ_K` whose sum lies in `S`.
/// Ellipsoid constraints are not encoded (the set is only enlarged).
pub(crate) struct FeasibleSetProgram {
    pub program: ConeProgram,
    rows: Vec<RowRef>,
}

impl FeasibleSetProgram {
    pub fn new(scenario: &Scenario, objectives: &[HermitianOperator]) -> Self {
        let d = scenario.dim();
        let k = objectives.len();
        let mut program = ConeProgram::new(vec![BlockKind::Psd(2 * d); k]);
        for (b, c) in objectives.iter().enumerate() {
            program.objective.push_hermitian(b, c.matrix(), 1.0);
        }
        let terms = |op: &CMatrix| {
            let mut t = SymTerms::new();
            for b in 0..k {
                t.push_hermitian(b, op, 1.0);
            }
            t
        };
        let rows = scenario
            .constraints()
            .iter()
            .map(|c| match c.kind {
                ConstraintKind::Equality => {
                    RowRef::Equality(program.add_equality(terms(c.op.matrix()), c.value))
                }
                ConstraintKind::Interval { lower, upper } => {
                    RowRef::Interval(program.add_interval(terms(c.op.matrix()), lower, upper))
                }
            })
            .collect();
        Self { program, rows }
    }

    /// Multipliers in scenario-constraint order.
    pub fn multipliers(&self, sol: &ConeSolution) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match *r {
                RowRef::Equality(i) => sol.y[i],
                RowRef::Interval(i) => sol.y_interval[i],
            })
            .collect()
    }

    /// The Hermitian value of block `k`.
    pub fn block(sol: &ConeSolution, k: usize) -> HermitianOperator {
        let x = sol.x[k].as_psd().expect("feasible-set blocks are PSD");
        HermitianOperator::from_hermitian_part(&extract_hermitian(x))
    }
}

/// Zeroes multipliers whose sign would pair them with an infinite bound.
pub(crate) fn clamp_multipliers(constraints: &[ObservableConstraint], y: &mut [f64]) {
    for (c, v) in constraints.iter().zip(y.iter_mut()) {
        if let ConstraintKind::Interval { lower, upper } = c.kind {
            if (*v > 0.0 && !lower.is_finite()) || (*v < 0.0 && !upper.is_finite()) {
                *v = 0.0;
            }
        }
    }
}

/// `min_{γ ∈ data} γ · y`: equalities contribute `y γ`, intervals the
/// bound selected by the sign of the multiplier.
pub(crate) fn dual_value(constraints: &[ObservableConstraint], y: &[f64]) -> f64 {
    constraints
        .iter()
        .zip(y)
        .map(|(c, &v)| match c.kind {
            ConstraintKind::Equality => v * c.value,
            ConstraintKind::Interval { lower, upper } => {
                if v > 0.0 {
                    v * lower
                } else if v < 0.0 {
                    v * upper
                } else {
                    0.0
                }
            }
        })
        .sum()
}

pub(crate) fn operators(scenario: &Scenario) -> Vec<HermitianOperator> {
    scenario
        .constraints()
        .iter()
        .map(|c| c.op.clone())
        .collect()
}
