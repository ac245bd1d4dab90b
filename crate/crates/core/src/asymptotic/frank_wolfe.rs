//! Frank–Wolfe minimisation of `f_ε` over `S` and the linearisation/duality
//! lower bound at the final iterate.

use super::feasible::{clamp_multipliers, dual_value, operators, FeasibleSetProgram};
use super::objective::{Objective, DEFAULT_PERTURBATION};
use crate::error::{Error, Result};
use crate::linalg::HermitianOperator;
use crate::protocol::Scenario;
use crate::sdp::{
    restore_dual_feasibility, solve, verify_dual_feasibility, SolveStatus, SolverOptions,
};

#[derive(Debug, Clone, PartialEq)]
pub struct FrankWolfeOptions {
    /// Stop once the linear gap `-Tr(Δρ ∇f)` falls below this.
    pub eps_stop: f64,
    pub max_iter: usize,
    pub line_search_tol: f64,
    pub eps_pert: f64,
    pub solver: SolverOptions,
}

impl Default for FrankWolfeOptions {
    fn default() -> Self {
        Self {
            eps_stop: 1e-6,
            max_iter: 300,
            line_search_tol: 1e-6,
            eps_pert: DEFAULT_PERTURBATION,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FrankWolfeState {
    pub rho: HermitianOperator,
    pub value: f64,
    pub gradient: HermitianOperator,
    /// `Tr(Δρ ∇f)` at the final iterate (nonpositive).
    pub linear_gap: f64,
    pub iterations: usize,
    pub eps_pert: f64,
    pub converged: bool,
    /// Objective value after each iteration, starting with `ρ_0`.
    pub history: Vec<f64>,
}

/// Golden-section minimisation of a convex function on `[0, 1]`.
fn golden_section(f: impl Fn(f64) -> Result<f64>, tol: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for t in [0.0, 1.0] {
        let v = f(t)?;
        if v < best.1 {
            best = (t, v);
        }
    }
    Ok(best)
}

/// Solves `min Tr(G σ)` over `σ ∈ S`; returns the minimiser and multipliers.
fn linear_subproblem(
    scenario: &Scenario,
    g: &HermitianOperator,
    opts: &SolverOptions,
) -> Result<(HermitianOperator, Vec<f64>, SolveStatus)> {
    let fp = FeasibleSetProgram::new(scenario, std::slice::from_ref(g));
    let sol = solve(&fp.program, opts)?;
    if sol.status == SolveStatus::Infeasible {
        return Err(Error::InfeasibleScenario);
    }
    Ok((
        FeasibleSetProgram::block(&sol, 0),
        fp.multipliers(&sol),
        sol.status,
    ))
}

/// A point of `S` from a zero-objective solve (interior-point methods land
/// near the analytic centre).
pub fn feasible_point(scenario: &Scenario, opts: &SolverOptions) -> Result<HermitianOperator> {
    let zero = HermitianOperator::zeros(scenario.dim());
    let (rho, _, status) = linear_subproblem(scenario, &zero, opts)?;
    if status != SolveStatus::Optimal {
        return Err(Error::SolverNotConverged(format!(
            "feasibility solve ended with {status:?}"
        )));
    }
    Ok(rho)
}

pub fn frank_wolfe_minimize(
    scenario: &Scenario,
    opts: &FrankWolfeOptions,
) -> Result<FrankWolfeState> {
    let objective = Objective::new(scenario, opts.eps_pert)?;
    let mut rho = feasible_point(scenario, &opts.solver)?;
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let (value, gradient) = objective.value_and_gradient(&rho)?;
        history.push(value);
        let (sigma, _, _) = linear_subproblem(scenario, &gradient, &opts.solver)?;
        let delta = &sigma - &rho;
        let linear_gap = delta.inner(&gradient);
        let done = |converged| FrankWolfeState {
            rho: rho.clone(),
            value,
            gradient: gradient.clone(),
            linear_gap,
            iterations,
            eps_pert: opts.eps_pert,
            converged,
            history: history.clone(),
        };
        if -linear_gap < opts.eps_stop {
            return Ok(done(true));
        }
        if iterations == opts.max_iter {
            return Ok(done(false));
        }
        let (step, best) = golden_section(
            |t| objective.value(&(&rho + &delta.scale(t))),
            opts.line_search_tol,
        )?;
        if step == 0.0 || best > value {
            // no descent along the Frank-Wolfe direction at this resolution
            return Ok(done(false));
        }
        rho = &rho + &delta.scale(step);
        iterations += 1;
    }
}

/// Lower bound `β_ε(ρ) - ζ_ε` on `min_S f` with its certificate data.
#[derive(Debug, Clone, PartialEq)]
pub struct FwCertificate {
    /// `β_ε - ζ_ε`, a lower bound on `min_{ρ∈S} D(G(ρ)||Z(G(ρ)))`.
    pub bound: f64,
    pub beta: f64,
    pub zeta: f64,
    /// Restored multipliers in scenario-constraint order.
    pub y: Vec<f64>,
    /// `λ_max(Σ y_i Γ_i - ∇f)` after restoration (nonpositive).
    pub violation: f64,
    /// Amount the identity multiplier was lowered by.
    pub shift: f64,
    /// `f_ε(ρ)` at the certified point.
    pub value: f64,
}

/// Certifies a lower bound at `state.rho`: solves the dual of the linearised
/// problem, restores exact dual feasibility along the identity constraint,
/// and evaluates `β_ε(ρ) = f_ε(ρ) - Tr(ρ ∇f_ε) + γ·y`.
pub fn certified_bound_fw(
    state: &FrankWolfeState,
    scenario: &Scenario,
    solver: &SolverOptions,
) -> Result<FwCertificate> {
    let objective = Objective::new(scenario, state.eps_pert)?;
    let (value, gradient) = objective.value_and_gradient(&state.rho)?;
    let (_, mut y, _) = linear_subproblem(scenario, &gradient, solver)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverNotConverged(
            "non-finite dual multipliers".into(),
        ));
    }
    let gammas = operators(scenario);
    clamp_multipliers(scenario.constraints(), &mut y);
    let restored = restore_dual_feasibility(&gammas, scenario.identity_index(), &y, &gradient)?;
    let violation = verify_dual_feasibility(&gammas, &restored.y, &gradient)?;
    if violation > 0.0 {
        return Err(Error::SolverNotConverged(format!(
            "dual point still infeasible by {violation:e} after restoration"
        )));
    }
    let beta = value - state.rho.inner(&gradient) + dual_value(scenario.constraints(), &restored.y);
    let zeta = objective.zeta();
    Ok(FwCertificate {
        bound: beta - zeta,
        beta,
        zeta,
        y: restored.y,
        violation,
        shift: restored.shift,
        value,
    })
}
