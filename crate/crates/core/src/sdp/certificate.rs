//! Post-hoc validation of dual certificates for programs over density operators.

use crate::error::{Error, Result};
use crate::linalg::HermitianOperator;

/// Margin subtracted on top of the measured violation.
pub const RESTORATION_MARGIN: f64 = 1e-12;

fn combination(
    gammas: &[HermitianOperator],
    y: &[f64],
    bound: &HermitianOperator,
) -> Result<HermitianOperator> {
    if gammas.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} operators with {} multipliers",
            gammas.len(),
            y.len()
        )));
    }
    let d = bound.dim();
    let mut acc = HermitianOperator::zeros(d);
    for (g, &yi) in gammas.iter().zip(y) {
        if g.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "constraint operator of dimension {} against bound of dimension {d}",
                g.dim()
            )));
        }
        acc = &acc + &g.scale(yi);
    }
    Ok(acc)
}

/// `lambda_max(sum_i y_i Gamma_i - G)`; nonpositive means `y` is dual
/// feasible for `min Tr(G rho)` over `{rho : Tr(Gamma_i rho) = gamma_i}`.
///
/// Operators are in the Hermitian convention (no transposes).
pub fn verify_dual_feasibility(
    gammas: &[HermitianOperator],
    y: &[f64],
    bound: &HermitianOperator,
) -> Result<f64> {
    let acc = combination(gammas, y, bound)?;
    Ok((&acc - bound).max_eigenvalue())
}

/// A dual point shifted along the identity constraint until exactly feasible.
#[derive(Debug, Clone, PartialEq)]
pub struct RestoredDual {
    pub y: Vec<f64>,
    /// Amount subtracted from the identity multiplier.
    pub shift: f64,
    /// Violation after the shift (nonpositive up to rounding).
    pub violation: f64,
}

/// Decreases the multiplier of the identity operator by
/// `max(0, violation) + 1e-12`, which makes `sum y_i Gamma_i <= G` hold.
pub fn restore_dual_feasibility(
    gammas: &[HermitianOperator],
    identity_index: Option<usize>,
    y: &[f64],
    bound: &HermitianOperator,
) -> Result<RestoredDual> {
    let idx = identity_index.ok_or(Error::IdentityConstraintMissing)?;
    let id = gammas.get(idx).ok_or(Error::IdentityConstraintMissing)?;
    if (id - &HermitianOperator::identity(id.dim())).max_abs() > 1e-12 {
        return Err(Error::IdentityConstraintMissing);
    }
    let violation = verify_dual_feasibility(gammas, y, bound)?;
    let shift = violation.max(0.0) + RESTORATION_MARGIN;
    let mut y = y.to_vec();
    y[idx] -= shift;
    let violation = verify_dual_feasibility(gammas, &y, bound)?;
    Ok(RestoredDual {
        y,
        shift,
        violation,
    })
}
