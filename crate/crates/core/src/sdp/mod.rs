//! Dense primal–dual interior-point solver for small block-structured
//! semidefinite and linear programs.
//!
//! Programs are posed in the standard pair
//!
//! ```text
//! (P)  min <C, X>   s.t. <A_i, X> = b_i,  l_j <= <F_j, X> <= u_j,  X ⪰ 0
//! (D)  max b^T y    s.t. C - sum_i y_i A_i = Z ⪰ 0
//! ```
//!
//! where `X` is block diagonal with real symmetric PSD blocks and nonnegative
//! (LP) blocks. Complex Hermitian variables are handled by the real embedding
//! `H ↦ [[Re H, -Im H], [Im H, Re H]]` (see [`embed_hermitian`]).

mod certificate;
mod cholesky;
mod dump;
mod solver;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

pub use certificate::{restore_dual_feasibility, verify_dual_feasibility, RestoredDual};
pub use dump::write_triplets;
pub use solver::{correct_primal, solve, CorrectedPrimal};

/// Shape of one diagonal block of the variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// Real symmetric positive semidefinite `n x n`.
    Psd(usize),
    /// `n` nonnegative scalars (a diagonal block).
    Nonneg(usize),
}

impl BlockKind {
    pub fn dim(&self) -> usize {
        match *self {
            BlockKind::Psd(n) | BlockKind::Nonneg(n) => n,
        }
    }
}

/// A symmetric block-diagonal matrix given by upper-triangle entries
/// `(block, row, col, value)` with `row <= col`; off-diagonal entries stand for
/// both `(row, col)` and `(col, row)`. Duplicates are summed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymTerms {
    pub entries: Vec<(usize, usize, usize, f64)>,
}

impl SymTerms {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` at `(row, col)` and its mirror; order of `row`, `col` is free.
    pub fn push(&mut self, block: usize, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            self.entries
                .push((block, row.min(col), row.max(col), value));
        }
    }

    /// Adds `scale * m` for a dense symmetric matrix `m` on `block`.
    pub fn push_dense(&mut self, block: usize, m: &DMatrix<f64>, scale: f64) {
        for c in 0..m.ncols() {
            for r in 0..=c {
                let v = 0.5 * (m[(r, c)] + m[(c, r)]) * scale;
                self.push(block, r, c, v);
            }
        }
    }

    /// Adds `scale * Tr(h X)` for a Hermitian `h` on a complex-embedded block
    /// (the embedded matrix is scaled by one half so that the inner product
    /// with the embedding of `X` equals `Tr(h X)`).
    pub fn push_hermitian(&mut self, block: usize, h: &CMatrix, scale: f64) {
        self.push_dense(block, &embed_hermitian(h), 0.5 * scale);
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|&(b, r, c, v)| (b, r, c, v * s))
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `lower <= <a, X> <= upper`; either bound may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRow {
    pub a: SymTerms,
    pub lower: f64,
    pub upper: f64,
}

/// A block-structured conic program (see module docs).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConeProgram {
    pub blocks: Vec<BlockKind>,
    pub objective: SymTerms,
    pub equalities: Vec<(SymTerms, f64)>,
    pub intervals: Vec<IntervalRow>,
}

impl ConeProgram {
    pub fn new(blocks: Vec<BlockKind>) -> Self {
        Self {
            blocks,
            ..Self::default()
        }
    }

    /// Appends `<a, X> = b` and returns its index.
    pub fn add_equality(&mut self, a: SymTerms, b: f64) -> usize {
        self.equalities.push((a, b));
        self.equalities.len() - 1
    }

    /// Appends `lower <= <a, X> <= upper` and returns its index.
    pub fn add_interval(&mut self, a: SymTerms, lower: f64, upper: f64) -> usize {
        self.intervals.push(IntervalRow { a, lower, upper });
        self.intervals.len() - 1
    }

    /// Checks block indices, LP diagonality and finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() || self.blocks.iter().any(|b| b.dim() == 0) {
            return Err(Error::IllFormedProgram("blocks must be non-empty".into()));
        }
        let check = |t: &SymTerms, what: &str| -> Result<()> {
            for &(b, r, c, v) in &t.entries {
                let Some(kind) = self.blocks.get(b) else {
                    return Err(Error::IllFormedProgram(format!(
                        "{what}: block {b} does not exist"
                    )));
                };
                if r > c || c >= kind.dim() {
                    return Err(Error::IllFormedProgram(format!(
                        "{what}: entry ({r},{c}) outside block {b} of size {}",
                        kind.dim()
                    )));
                }
                if matches!(kind, BlockKind::Nonneg(_)) && r != c {
                    return Err(Error::IllFormedProgram(format!(
                        "{what}: off-diagonal entry in LP block {b}"
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::IllFormedProgram(format!("{what}: non-finite entry")));
                }
            }
            Ok(())
        };
        check(&self.objective, "objective")?;
        for (i, (a, b)) in self.equalities.iter().enumerate() {
            check(a, &format!("equality {i}"))?;
            if !b.is_finite() {
                return Err(Error::IllFormedProgram(format!(
                    "equality {i}: non-finite rhs"
                )));
            }
        }
        for (i, row) in self.intervals.iter().enumerate() {
            check(&row.a, &format!("interval {i}"))?;
            if row.lower.is_nan() || row.upper.is_nan() || row.lower > row.upper {
                return Err(Error::IllFormedProgram(format!(
                    "interval {i}: bounds [{}, {}]",
                    row.lower, row.upper
                )));
            }
        }
        Ok(())
    }
}

/// Termination state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Primal infeasible (a Farkas ray for the dual was found or the presolve
    /// detected inconsistent equalities).
    Infeasible,
    /// Dual infeasible (primal unbounded).
    DualInfeasible,
    MaxIter,
    NumericalTrouble,
}

/// Value of one variable block.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockValue {
    Psd(DMatrix<f64>),
    Nonneg(DVector<f64>),
}

impl BlockValue {
    pub fn as_psd(&self) -> Option<&DMatrix<f64>> {
        match self {
            BlockValue::Psd(m) => Some(m),
            BlockValue::Nonneg(_) => None,
        }
    }

    pub fn as_nonneg(&self) -> Option<&DVector<f64>> {
        match self {
            BlockValue::Nonneg(v) => Some(v),
            BlockValue::Psd(_) => None,
        }
    }
}

/// Primal and dual iterates with objective values and residuals.
#[derive(Debug, Clone)]
pub struct ConeSolution {
    pub status: SolveStatus,
    /// Primal blocks of the user's program (interval slacks removed).
    pub x: Vec<BlockValue>,
    /// Dual slack blocks.
    pub z: Vec<BlockValue>,
    /// Multipliers of the equality rows.
    pub y: Vec<f64>,
    /// Net multiplier of each interval row (lower-side plus upper-side).
    pub y_interval: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Relative primal residual `|b - A(X)| / (1 + |b|)`.
    pub primal_residual: f64,
    /// Relative dual residual `|C - Z - A^T y| / (1 + |C|)`.
    pub dual_residual: f64,
    /// Relative gap `|pobj - dobj| / (1 + |pobj| + |dobj|)`.
    pub gap: f64,
    pub iterations: usize,
}

/// Solver tolerances and limits.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub gap_tol: f64,
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Remove linearly dependent equality rows before solving.
    pub presolve: bool,
}

/// Environment variable overriding the default gap tolerance.
pub const SOLVER_TOL_ENV: &str = "KEYFORGE_SOLVER_TOL";

impl Default for SolverOptions {
    /// Gap `1e-8`, residuals `1e-9`, 200 iterations; the gap tolerance is
    /// taken from `KEYFORGE_SOLVER_TOL` when that parses as a positive number.
    fn default() -> Self {
        let gap_tol = std::env::var(SOLVER_TOL_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|t| *t > 0.0 && t.is_finite())
            .unwrap_or(1e-8);
        Self {
            gap_tol,
            residual_tol: 1e-9,
            max_iter: 200,
            presolve: true,
        }
    }
}

/// `[[Re H, -Im H], [Im H, Re H]]`.
pub fn embed_hermitian(h: &CMatrix) -> DMatrix<f64> {
    let n = h.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of [`embed_hermitian`], averaging the redundant copies.
pub fn extract_hermitian(x: &DMatrix<f64>) -> CMatrix {
    let n = x.nrows() / 2;
    CMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (x[(i, j)] + x[(i + n, j + n)]);
        let im = 0.5 * (x[(i + n, j)] - x[(i, j + n)]);
        num_complex::Complex64::new(re, im)
    })
}
