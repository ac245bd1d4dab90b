//! Gauss–Radau SDP relaxation of `min H(A|E)` over the feasible set.
//!
//! The relaxation is posed as a linear matrix inequality in the variables
//! `ζ_{a,i}` (complex), `η_{a,i}`, `θ_{a,i}` (Hermitian) and the free
//! coordinates `s` of `σ` inside the equality-constrained slice, and solved as
//! the dual side of the interior-point solver. The certified value comes from
//! the primal side after an exact-feasibility correction.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::hermitian_basis::{hermitian_basis, AffineSlice};
use super::quadrature::gauss_radau_rule;
use crate::error::{Error, Result};
use crate::linalg::{kron, CMatrix, HermitianOperator};
use crate::protocol::{ConstraintKind, ObservableConstraint, Scenario};
use crate::sdp::{
    correct_primal, embed_hermitian, solve, BlockKind, BlockValue, ConeProgram, CorrectedPrimal,
    SolveStatus, SolverOptions, SymTerms,
};

const EIG_ROUNDOFF: f64 = 64.0 * f64::EPSILON;
const RETRIES: i32 = 2;
const RETRY_LOOSENING: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaussRadauOptions {
    pub solver: SolverOptions,
    /// Adds `η, θ ⪯ B_i^2 σ` with `B_i = 3/2 max(1/t_i, λ/(1-t_i))`.
    pub norm_bound_lambda: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GaussRadauBound {
    /// Certified lower bound on `H(A|E)` for the key basis (bits), weighted by
    /// the retained fraction when Bob's outcomes are discarded.
    pub bound: f64,
    pub m: usize,
    /// Constant `c_m = Σ_{i<m} w_i / (t_i ln 2)`.
    pub c_m: f64,
    /// The relaxation value at the returned dual iterate (an estimate from above).
    pub estimate: f64,
    /// Feasible `σ` at the optimum.
    pub sigma: HermitianOperator,
    pub status: SolveStatus,
    pub iterations: usize,
    /// `|b - A(X)|_inf` of the corrected certificate.
    pub certificate_residual: f64,
}

/// `c_m` as used for the device-dependent relaxation.
pub fn gauss_radau_constant(m: usize) -> f64 {
    let rule = gauss_radau_rule(m);
    rule.nodes[..m - 1]
        .iter()
        .zip(&rule.weights[..m - 1])
        .map(|(t, w)| w / (t * std::f64::consts::LN_2))
        .sum()
}

/// Accumulates an LMI `C + Σ_j y_j B_j ⪰ 0` with objective `Σ_j o_j y_j`.
struct Lmi {
    blocks: Vec<BlockKind>,
    constant: SymTerms,
    vars: Vec<(SymTerms, f64)>,
}

impl Lmi {
    fn add_block(&mut self, kind: BlockKind) -> usize {
        self.blocks.push(kind);
        self.blocks.len() - 1
    }

    fn new_var(&mut self, objective: f64) -> usize {
        self.vars.push((SymTerms::new(), objective));
        self.vars.len() - 1
    }

    /// Adds the embedding of the Hermitian `k` to the constant (`var = None`)
    /// or to the coefficient of `var`.
    fn add_hermitian(&mut self, var: Option<usize>, block: usize, k: &CMatrix) {
        let t = match var {
            Some(j) => &mut self.vars[j].0,
            None => &mut self.constant,
        };
        t.push_dense(block, &embed_hermitian(k), 1.0);
    }

    fn add_real(&mut self, var: Option<usize>, block: usize, r: usize, c: usize, v: f64) {
        let t = match var {
            Some(j) => &mut self.vars[j].0,
            None => &mut self.constant,
        };
        t.push(block, r, c, v);
    }

    /// `(D): max b^T y, C - Σ y A ⪰ 0` with `A_j = -B_j`, `b_j = -o_j`.
    fn into_program(self) -> ConeProgram {
        let mut p = ConeProgram::new(self.blocks);
        p.objective = self.constant;
        for (b, o) in self.vars {
            p.add_equality(b.scaled(-1.0), -o);
        }
        p
    }
}

fn placed(n: usize, d: usize, row: usize, col: usize, m: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(n, n);
    out.view_mut((row, col), (d, d)).copy_from(m);
    out
}

const FACE_TOL: f64 = 1e-12;

/// Restriction to the common kernel of PSD constraint operators observed with
/// value zero. Every feasible state lives in that subspace, and so do the
/// relaxation variables derived from it, so restricting is exact and restores
/// a strictly feasible interior.
struct FacialReduction {
    basis: Option<CMatrix>,
    full: usize,
}

impl FacialReduction {
    fn new(scenario: &Scenario) -> Self {
        let full = scenario.dim();
        let mut acc = HermitianOperator::zeros(full);
        for c in scenario.constraints() {
            let zero = match c.kind {
                ConstraintKind::Equality => c.value.abs() <= FACE_TOL,
                ConstraintKind::Interval { upper, .. } => upper <= FACE_TOL,
            };
            if zero && c.op.min_eigenvalue() >= -FACE_TOL {
                acc = &acc + &c.op;
            }
        }
        let spec = acc.eig();
        let scale = spec.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let kernel: Vec<usize> = (0..full)
            .filter(|&k| spec.eigenvalues[k] <= FACE_TOL * scale.max(1.0))
            .collect();
        if kernel.len() == full || kernel.is_empty() {
            return Self { basis: None, full };
        }
        let mut v = CMatrix::zeros(full, kernel.len());
        for (j, &k) in kernel.iter().enumerate() {
            v.set_column(j, &spec.eigenvector(k));
        }
        Self {
            basis: Some(v),
            full,
        }
    }

    fn dim(&self) -> usize {
        self.basis.as_ref().map_or(self.full, |v| v.ncols())
    }

    fn restrict(&self, h: &HermitianOperator) -> CMatrix {
        match &self.basis {
            Some(v) => v.adjoint() * h.matrix() * v,
            None => h.matrix().clone(),
        }
    }

    fn lift(&self, h: &CMatrix) -> CMatrix {
        match &self.basis {
            Some(v) => v * h * v.adjoint(),
            None => h.clone(),
        }
    }
}

/// Lower bound on `H(A|E)` for Alice's POVM `key_basis` at quadrature order `m`.
/// When Bob's outcomes are discarded in the paired basis, the bound is on the
/// entropy of the retained rounds weighted by their probability.
fn certificate_scale(c: &CorrectedPrimal) -> f64 {
    c.x.iter()
        .map(|b| match b {
            BlockValue::Psd(m) => m.amax() * m.nrows() as f64,
            BlockValue::Nonneg(v) => v.amax(),
        })
        .fold(1.0, f64::max)
}

pub fn gauss_radau_bound(
    scenario: &Scenario,
    key_basis: usize,
    m: usize,
    opts: &GaussRadauOptions,
) -> Result<GaussRadauBound> {
    if m < 2 {
        return Err(Error::OutOfRange(format!(
            "Gauss-Radau order {m} must be at least 2"
        )));
    }
    if key_basis >= scenario.povms_a().len() {
        return Err(Error::OutOfRange(format!(
            "key basis {key_basis} does not exist"
        )));
    }
    let face = FacialReduction::new(scenario);
    let d = face.dim();
    // Bob's retained element for the basis paired with the key basis
    let retained = scenario
        .kept()
        .iter()
        .find(|&&(x, _)| x == key_basis)
        .map(|&(_, y)| scenario.bob_retained_element(y))
        .unwrap_or_else(|| HermitianOperator::identity(scenario.d_b()));
    let key_ops: Vec<CMatrix> = scenario.povms_a()[key_basis]
        .elements()
        .iter()
        .map(|e| face.restrict(&kron(e, &retained)))
        .collect();
    let weight = face.restrict(&kron(
        &HermitianOperator::identity(scenario.d_a()),
        &retained,
    ));

    let restricted: Vec<(HermitianOperator, &ObservableConstraint)> = scenario
        .constraints()
        .iter()
        .map(|c| {
            (
                HermitianOperator::from_hermitian_part(&face.restrict(&c.op)),
                c,
            )
        })
        .collect();
    let (eq_ops, eq_vals): (Vec<&HermitianOperator>, Vec<f64>) = restricted
        .iter()
        .filter(|(_, c)| c.kind == ConstraintKind::Equality)
        .map(|(op, c)| (op, c.value))
        .unzip();
    let slice = AffineSlice::new(d, &eq_ops, &eq_vals)?;

    let rule = gauss_radau_rule(m);
    let c_m = gauss_radau_constant(m);
    let basis = hermitian_basis(d);
    let one = Complex64::new(1.0, 0.0);
    let imag = Complex64::new(0.0, 1.0);

    let mut lmi = Lmi {
        blocks: Vec::new(),
        constant: SymTerms::new(),
        vars: Vec::new(),
    };
    // blocks that carry σ in their top-left corner, with a scale
    let mut sigma_slots: Vec<(usize, usize, f64)> = Vec::new();

    for i in 0..m - 1 {
        let (t, w) = (rule.nodes[i], rule.weights[i]);
        let kappa = w / (t * std::f64::consts::LN_2);
        let norm_bound = opts
            .norm_bound_lambda
            .map(|lam| 1.5 * (1.0 / t).max(lam / (1.0 - t)));
        for key_op in &key_ops {
            let g1 = lmi.add_block(BlockKind::Psd(4 * d));
            let g2 = lmi.add_block(BlockKind::Psd(4 * d));
            sigma_slots.push((g1, 2 * d, 1.0));
            sigma_slots.push((g2, 2 * d, 1.0));
            let bounds = norm_bound.map(|b| {
                let nb_eta = lmi.add_block(BlockKind::Psd(2 * d));
                let nb_theta = lmi.add_block(BlockKind::Psd(2 * d));
                sigma_slots.push((nb_eta, d, b * b));
                sigma_slots.push((nb_theta, d, b * b));
                (nb_eta, nb_theta)
            });

            for r in 0..d {
                for c in 0..d {
                    let mc = key_op[(c, r)];
                    for (unit, obj) in [(one, 2.0 * mc.re), (imag, -2.0 * mc.im)] {
                        let v = lmi.new_var(kappa * obj);
                        let mut k1 = CMatrix::zeros(2 * d, 2 * d);
                        k1[(r, d + c)] = unit;
                        k1[(d + c, r)] = unit.conj();
                        lmi.add_hermitian(Some(v), g1, &k1);
                        let mut k2 = CMatrix::zeros(2 * d, 2 * d);
                        k2[(d + r, c)] = unit;
                        k2[(c, d + r)] = unit.conj();
                        lmi.add_hermitian(Some(v), g2, &k2);
                    }
                }
            }
            for e in &basis {
                let m_e = (key_op * e).trace().re;
                let v = lmi.new_var(kappa * (1.0 - t) * m_e);
                lmi.add_hermitian(Some(v), g1, &placed(2 * d, d, d, d, e));
                if let Some((nb_eta, _)) = bounds {
                    lmi.add_hermitian(Some(v), nb_eta, &(-e));
                }
            }
            for e in &basis {
                let v = lmi.new_var(kappa * t * (&weight * e).trace().re);
                lmi.add_hermitian(Some(v), g2, &placed(2 * d, d, d, d, e));
                if let Some((_, nb_theta)) = bounds {
                    lmi.add_hermitian(Some(v), nb_theta, &(-e));
                }
            }
        }
    }

    // σ: constant part and free coordinates, shared by every slot
    // c_m Tr(W σ): constant unless rounds are discarded
    let s_vars: Vec<usize> = slice
        .directions
        .iter()
        .map(|n| lmi.new_var(c_m * (&weight * n).trace().re))
        .collect();
    let c_const = c_m * (&weight * &slice.particular).trace().re;
    for &(block, n, scale) in &sigma_slots {
        let p = placed(n, d, 0, 0, &slice.particular) * Complex64::new(scale, 0.0);
        lmi.add_hermitian(None, block, &p);
        for (dir, &v) in slice.directions.iter().zip(&s_vars) {
            let q = placed(n, d, 0, 0, dir) * Complex64::new(scale, 0.0);
            lmi.add_hermitian(Some(v), block, &q);
        }
    }

    // interval constraints: one LP entry per finite side
    let intervals: Vec<(&HermitianOperator, f64, f64)> = restricted
        .iter()
        .filter_map(|(op, c)| match c.kind {
            ConstraintKind::Interval { lower, upper } => Some((op, lower, upper)),
            ConstraintKind::Equality => None,
        })
        .collect();
    let n_lp: usize = intervals
        .iter()
        .map(|(_, l, u)| l.is_finite() as usize + u.is_finite() as usize)
        .sum();
    if n_lp > 0 {
        let lp = lmi.add_block(BlockKind::Nonneg(n_lp));
        let mut k = 0;
        for (op, lower, upper) in intervals {
            let base = op.inner(&HermitianOperator::from_hermitian_part(&slice.particular));
            let slopes: Vec<f64> = slice
                .directions
                .iter()
                .map(|n| op.inner(&HermitianOperator::from_hermitian_part(n)))
                .collect();
            for (bound, sign) in [(lower, 1.0), (upper, -1.0)] {
                if !bound.is_finite() {
                    continue;
                }
                lmi.add_real(None, lp, k, k, sign * (base - bound));
                for (&v, &sl) in s_vars.iter().zip(&slopes) {
                    lmi.add_real(Some(v), lp, k, k, sign * sl);
                }
                k += 1;
            }
        }
    }

    // ellipsoids: [[Σ, p - f], [(p - f)^T, χ²]] ⪰ 0
    for e in scenario.ellipsoids() {
        let k = e.ops.len();
        let blk = lmi.add_block(BlockKind::Psd(k + 1));
        let mut c = DMatrix::<f64>::zeros(k + 1, k + 1);
        c.view_mut((0, 0), (k, k)).copy_from(&e.covariance);
        c[(k, k)] = e.radius_sq;
        let ops: Vec<HermitianOperator> = e
            .ops
            .iter()
            .map(|op| HermitianOperator::from_hermitian_part(&face.restrict(op)))
            .collect();
        for (j, op) in ops.iter().enumerate() {
            let p = op.inner(&HermitianOperator::from_hermitian_part(&slice.particular));
            c[(j, k)] = p - e.center[j];
            c[(k, j)] = p - e.center[j];
        }
        lmi.constant.push_dense(blk, &c, 1.0);
        for (dir, &v) in slice.directions.iter().zip(&s_vars) {
            let dir = HermitianOperator::from_hermitian_part(dir);
            for (j, op) in ops.iter().enumerate() {
                lmi.add_real(Some(v), blk, j, k, op.inner(&dir));
            }
        }
    }

    let s_range = s_vars.first().copied().unwrap_or(lmi.vars.len())..lmi.vars.len();
    let program = lmi.into_program();
    let solver = SolverOptions {
        presolve: false,
        ..opts.solver.clone()
    };
    // a looser tolerance stops further inside the cone, which keeps the
    // corrected certificate PSD at degenerate optima
    let mut attempt = 0;
    let (sol, corrected) = loop {
        let solver = SolverOptions {
            gap_tol: solver.gap_tol * RETRY_LOOSENING.powi(attempt),
            residual_tol: solver.residual_tol * RETRY_LOOSENING.powi(attempt),
            ..solver.clone()
        };
        let sol = solve(&program, &solver)?;
        if matches!(
            sol.status,
            SolveStatus::Infeasible | SolveStatus::DualInfeasible
        ) {
            return Err(Error::InfeasibleScenario);
        }
        let corrected = correct_primal(&program, &sol)?;
        // eigenvalues below zero at the eigensolver's round-off level are accepted
        let in_cone = corrected.min_eigenvalue >= -EIG_ROUNDOFF * certificate_scale(&corrected);
        if in_cone && corrected.objective.is_finite() {
            break (sol, corrected);
        }
        attempt += 1;
        if attempt > RETRIES {
            return Err(Error::SolverNotConverged(format!(
                "Gauss-Radau certificate left the cone (min eigenvalue {:e}, status {:?})",
                corrected.min_eigenvalue, sol.status
            )));
        }
    };
    let s: Vec<f64> = sol.y[s_range].to_vec();
    let sigma = HermitianOperator::from_hermitian_part(&face.lift(&slice.point(&s)));
    Ok(GaussRadauBound {
        bound: c_const - corrected.objective,
        m,
        c_m,
        estimate: c_const - sol.dual_objective,
        sigma,
        status: sol.status,
        iterations: sol.iterations,
        certificate_residual: corrected.residual,
    })
}
