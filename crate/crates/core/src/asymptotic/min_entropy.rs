//! Min-entropy bounds through Eve's guessing probability.

use super::feasible::{clamp_multipliers, dual_value, operators, FeasibleSetProgram};
use super::hermitian_basis::hermitian_basis;
use crate::error::{Error, Result};
use crate::linalg::{kron, purify, CMatrix, DensityOperator, HermitianOperator};
use crate::protocol::Scenario;
use crate::sdp::{
    restore_dual_feasibility, solve, verify_dual_feasibility, BlockKind, ConeProgram, SolveStatus,
    SolverOptions, SymTerms,
};

/// Certified `H_min(A|E) = -log2 p_guess` and the certificate behind it.
#[derive(Debug, Clone)]
pub struct MinEntropyBound {
    /// Lower bound on the min-entropy (bits).
    pub bound: f64,
    /// Certified upper bound on the guessing probability.
    pub p_guess: f64,
    /// Solver estimate of the guessing probability.
    pub p_guess_estimate: f64,
    pub iterations: usize,
}

fn key_elements(scenario: &Scenario, key_basis: usize) -> Result<Vec<HermitianOperator>> {
    let povm = scenario
        .povms_a()
        .get(key_basis)
        .ok_or_else(|| Error::OutOfRange(format!("key basis {key_basis} does not exist")))?;
    let id_b = HermitianOperator::identity(scenario.d_b());
    Ok(povm.elements().iter().map(|e| kron(e, &id_b)).collect())
}

fn finish(p_guess: f64, estimate: f64, iterations: usize) -> Result<MinEntropyBound> {
    if !p_guess.is_finite() || p_guess <= 0.0 {
        return Err(Error::SolverNotConverged(format!(
            "guessing-probability certificate {p_guess} is unusable"
        )));
    }
    Ok(MinEntropyBound {
        bound: -p_guess.min(1.0).log2(),
        p_guess,
        p_guess_estimate: estimate,
        iterations,
    })
}

/// Min-entropy of Alice's `key_basis` outcome against an Eve holding the
/// purification of `rho` when given, otherwise the worst case over the
/// feasible set of `scenario`.
pub fn hmin_bound(
    scenario: &Scenario,
    key_basis: usize,
    rho: Option<&DensityOperator>,
    solver: &SolverOptions,
) -> Result<MinEntropyBound> {
    let elements = key_elements(scenario, key_basis)?;
    if !scenario.discarded_b().is_empty() {
        return Err(Error::OutOfRange(
            "the min-entropy bound does not support discarded outcomes".into(),
        ));
    }
    match rho {
        Some(r) => hmin_fixed(&elements, r, solver),
        None => hmin_feasible(scenario, &elements, solver),
    }
}

/// `max Σ_a Tr((M_a ⊗ 1) ρ_a)` over decompositions `Σ_a ρ_a ∈ S`.
fn hmin_feasible(
    scenario: &Scenario,
    elements: &[HermitianOperator],
    solver: &SolverOptions,
) -> Result<MinEntropyBound> {
    let objectives: Vec<HermitianOperator> = elements.iter().map(|m| m.scale(-1.0)).collect();
    let fsp = FeasibleSetProgram::new(scenario, &objectives);
    let sol = solve(&fsp.program, solver)?;
    // any finite dual point certifies after restoration, so only hard failures stop here
    match sol.status {
        SolveStatus::Infeasible => return Err(Error::InfeasibleScenario),
        SolveStatus::DualInfeasible => {
            return Err(Error::SolverNotConverged(format!("{:?}", sol.status)))
        }
        _ => {}
    }
    let mut y = fsp.multipliers(&sol);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverNotConverged(
            "non-finite dual multipliers".into(),
        ));
    }
    let gammas = operators(scenario);
    clamp_multipliers(scenario.constraints(), &mut y);
    for c in &objectives {
        y = restore_dual_feasibility(&gammas, scenario.identity_index(), &y, c)?.y;
    }
    for c in &objectives {
        let violation = verify_dual_feasibility(&gammas, &y, c)?;
        if violation > 0.0 {
            return Err(Error::SolverNotConverged(format!(
                "guessing dual still infeasible by {violation:e}"
            )));
        }
    }
    finish(
        -dual_value(scenario.constraints(), &y),
        -sol.primal_objective,
        sol.iterations,
    )
}

/// Purifies `rho`, forms Eve's conditional states `σ_{E|a}` and solves
/// `max Σ_a Tr(Z_a σ_{E|a})` over POVMs `{Z_a}` on `E`. The certificate is
/// `Tr Y` for the dual `Y ⪰ σ_{E|a}`, shifted until that holds exactly.
fn hmin_fixed(
    elements: &[HermitianOperator],
    rho: &DensityOperator,
    solver: &SolverOptions,
) -> Result<MinEntropyBound> {
    let d = rho.dim();
    if elements.first().map(|e| e.dim()) != Some(d) {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {d} against key POVM of dimension {}",
            elements.first().map_or(0, |e| e.dim())
        )));
    }
    let psi = purify(rho);
    let r = psi.len() / d;
    // Ψ[s, e] so that |ψ> = Σ Ψ[s,e] |s>|e>
    let big_psi = CMatrix::from_fn(d, r, |s, e| psi[s * r + e]);
    // σ_{E|a} = Ψ^T M_a^T conj(Ψ)
    let sigmas: Vec<HermitianOperator> = elements
        .iter()
        .map(|m| {
            let s = big_psi.transpose() * m.matrix().transpose() * big_psi.conjugate();
            HermitianOperator::from_hermitian_part(&s)
        })
        .collect();

    let k = sigmas.len();
    let mut program = ConeProgram::new(vec![BlockKind::Psd(2 * r); k]);
    for (b, s) in sigmas.iter().enumerate() {
        program.objective.push_hermitian(b, s.matrix(), -1.0);
    }
    let basis = hermitian_basis(r);
    for e in &basis {
        let mut t = SymTerms::new();
        for b in 0..k {
            t.push_hermitian(b, e, 1.0);
        }
        program.add_equality(t, e.trace().re);
    }
    let sol = solve(&program, solver)?;
    if matches!(
        sol.status,
        SolveStatus::Infeasible | SolveStatus::DualInfeasible
    ) || sol.y.iter().any(|v| !v.is_finite())
    {
        return Err(Error::SolverNotConverged(format!("{:?}", sol.status)));
    }
    // C_a - Σ y_k E_k ⪰ 0 with C_a = -σ_a gives Y = -Σ y_k E_k ⪰ σ_a
    let mut y_op = CMatrix::zeros(r, r);
    for (e, &yk) in basis.iter().zip(&sol.y) {
        y_op -= e * num_complex::Complex64::new(yk, 0.0);
    }
    let mut y_op = HermitianOperator::from_hermitian_part(&y_op);
    let shift = sigmas
        .iter()
        .map(|s| (s - &y_op).max_eigenvalue())
        .fold(0.0, f64::max);
    if shift > 0.0 {
        y_op = &y_op + &HermitianOperator::identity(r).scale(shift * (1.0 + 1e-12) + 1e-15);
    }
    finish(y_op.trace(), -sol.primal_objective, sol.iterations)
}
