//! Decoy-state analysis for weak-coherent-pulse BB84.
//!
//! Yields are bounded by linear programs over `Y_n ∈ [0, 1]` for photon
//! numbers `n <= N`, with the contribution of larger `n` absorbed in a
//! remainder variable bounded by the Poisson tail. Every reported bound is
//! the Lagrangian value of the LP at the solver's multipliers, which is valid
//! for any multipliers because all variables are boxed.

use crate::error::{Error, Result};
use crate::linalg::binary_entropy_bits;
use crate::sdp::{solve, BlockKind, ConeProgram, SolverOptions, SymTerms};

pub const DEFAULT_CUTOFF: usize = 10;
const TAIL_TERMS: usize = 200;
const CONSISTENCY_TOL: f64 = 1e-7;
const ELASTIC_PENALTY: f64 = 1e4;

/// `e^{-μ} μ^n / n!`.
pub fn poisson_pn(mu: f64, n: usize) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::OutOfRange(format!(
            "intensity {mu} must be positive"
        )));
    }
    let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    Ok((n as f64 * mu.ln() - mu - ln_fact).exp())
}

/// `Σ_{n > cutoff} p_n(μ)`, summed directly.
pub fn poisson_tail(mu: f64, cutoff: usize) -> Result<f64> {
    let mut p = poisson_pn(mu, cutoff + 1)?;
    let mut sum = 0.0;
    for n in cutoff + 1..cutoff + 1 + TAIL_TERMS {
        sum += p;
        p *= mu / (n + 1) as f64;
        if p < f64::MIN_POSITIVE {
            break;
        }
    }
    Ok(sum)
}

/// Observed gains and error gains per intensity, signal first.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoyModel {
    pub intensities: Vec<f64>,
    pub gains: Vec<f64>,
    pub error_gains: Vec<f64>,
    pub cutoff: usize,
    /// Gain of an empty (vacuum) decoy pulse, which pins `Y_0`.
    pub vacuum_gain: Option<f64>,
}

impl DecoyModel {
    pub fn new(intensities: Vec<f64>, gains: Vec<f64>, error_gains: Vec<f64>) -> Result<Self> {
        let m = Self {
            intensities,
            gains,
            error_gains,
            cutoff: DEFAULT_CUTOFF,
            vacuum_gain: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_cutoff(mut self, cutoff: usize) -> Result<Self> {
        self.cutoff = cutoff;
        self.validate()?;
        Ok(self)
    }

    pub fn with_vacuum_gain(mut self, gain: f64) -> Result<Self> {
        self.vacuum_gain = Some(gain);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.vacuum_gain {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange(format!("vacuum gain {v} outside [0, 1]")));
            }
        }
        let k = self.intensities.len();
        if k < 2 || self.gains.len() != k || self.error_gains.len() != k {
            return Err(Error::OutOfRange(format!(
                "need at least two intensities with one gain and error gain each, got {k}/{}/{}",
                self.gains.len(),
                self.error_gains.len()
            )));
        }
        if self.cutoff < 2 {
            return Err(Error::OutOfRange(format!(
                "cutoff {} must be at least 2",
                self.cutoff
            )));
        }
        for (i, &mu) in self.intensities.iter().enumerate() {
            if !(mu > 0.0) || !mu.is_finite() {
                return Err(Error::OutOfRange(format!(
                    "intensity {i} = {mu} must be positive"
                )));
            }
            let (g, e) = (self.gains[i], self.error_gains[i]);
            if !(0.0..=1.0).contains(&g) || !(0.0..=1.0).contains(&e) || e > g {
                return Err(Error::OutOfRange(format!(
                    "intensity {i}: need 0 <= error gain {e} <= gain {g} <= 1"
                )));
            }
        }
        Ok(())
    }

    pub fn signal_intensity(&self) -> f64 {
        self.intensities[0]
    }

    pub fn signal_gain(&self) -> f64 {
        self.gains[0]
    }
}

/// `min c^T x` s.t. `A x = b`, `0 <= x <= u`, returning a certified lower
/// bound `b^T y + Σ_j min(0, c_j - (A^T y)_j) u_j`.
struct BoxedLp {
    c: Vec<f64>,
    rows: Vec<(Vec<(usize, f64)>, f64)>,
    upper: Vec<f64>,
}

impl BoxedLp {
    fn solve(&self) -> Result<f64> {
        let n = self.c.len();
        let r = self.rows.len();
        // x, box slacks, then elastic slacks e+ and e- per row; the elastic
        // terms give the program an interior even when the yields are pinned
        let mut p = ConeProgram::new(vec![BlockKind::Nonneg(2 * n + 2 * r)]);
        for (j, &cj) in self.c.iter().enumerate() {
            p.objective.push(0, j, j, cj);
        }
        let (ep, em) = (2 * n, 2 * n + r);
        for (i, (row, rhs)) in self.rows.iter().enumerate() {
            let mut t = SymTerms::new();
            for &(j, v) in row {
                t.push(0, j, j, v);
            }
            t.push(0, ep + i, ep + i, 1.0);
            t.push(0, em + i, em + i, -1.0);
            p.add_equality(t, *rhs);
            p.objective.push(0, ep + i, ep + i, ELASTIC_PENALTY);
            p.objective.push(0, em + i, em + i, ELASTIC_PENALTY);
        }
        for (j, &u) in self.upper.iter().enumerate() {
            let mut t = SymTerms::new();
            t.push(0, j, j, 1.0);
            t.push(0, n + j, n + j, 1.0);
            p.add_equality(t, u);
        }
        // any finite multipliers certify a bound, so a stalled solve is
        // retried with looser tolerances rather than rejected
        let mut sol = None;
        for tol in [1e-13, 1e-11, 1e-9] {
            let opts = SolverOptions {
                gap_tol: tol,
                residual_tol: tol.max(1e-12),
                ..SolverOptions::default()
            };
            let s = solve(&p, &opts)?;
            if s.y.iter().all(|v| v.is_finite())
                && s.x[0]
                    .as_nonneg()
                    .is_some_and(|x| x.iter().all(|v| v.is_finite()))
            {
                sol = Some(s);
                break;
            }
        }
        let sol = sol.ok_or_else(|| {
            Error::SolverNotConverged("decoy LP multipliers are not finite".into())
        })?;
        let x = sol.x[0].as_nonneg().expect("LP block");
        let violation = (0..r).map(|i| x[ep + i] + x[em + i]).fold(0.0, f64::max);
        if violation > CONSISTENCY_TOL {
            return Err(Error::InfeasibleObservations);
        }
        // weak duality for the original rows holds for any multipliers
        let mut bound = 0.0;
        let mut reduced = self.c.clone();
        for ((row, rhs), &y) in self.rows.iter().zip(&sol.y) {
            bound += rhs * y;
            for &(j, v) in row {
                reduced[j] -= v * y;
            }
        }
        for (rc, u) in reduced.iter().zip(&self.upper) {
            bound += rc.min(0.0) * u;
        }
        Ok(bound)
    }
}

/// Single-photon yield lower bound and error-rate upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoyBounds {
    pub y1_lower: f64,
    /// Upper bound on `e_1 Y_1`.
    pub error_yield_upper: f64,
    /// `min(1/2, e1Y1_upper / Y1_lower)`, or `1/2` when `Y1_lower = 0`.
    pub e1_upper: f64,
}

fn probabilities(model: &DecoyModel) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = model.cutoff;
    let mut p = Vec::new();
    let mut tails = Vec::new();
    for &mu in &model.intensities {
        p.push(
            (0..=n)
                .map(|k| poisson_pn(mu, k))
                .collect::<Result<Vec<_>>>()?,
        );
        tails.push(poisson_tail(mu, n)?);
    }
    Ok((p, tails))
}

/// Solves the yield LP (minimise `Y_1`) and the error LP (maximise `e_1 Y_1`).
pub fn decoy_lp_bounds(model: &DecoyModel) -> Result<DecoyBounds> {
    model.validate()?;
    let (p, tails) = probabilities(model)?;
    let n = model.cutoff + 1;
    let k = model.intensities.len();

    // variables: Y_0..Y_N, r_1..r_K
    let mut c = vec![0.0; n + k];
    c[1] = 1.0;
    let mut upper = vec![1.0; n];
    upper.extend(tails.iter().copied());
    let mut rows: Vec<_> = (0..k)
        .map(|i| {
            let mut row: Vec<(usize, f64)> = (0..n).map(|j| (j, p[i][j])).collect();
            row.push((n + i, 1.0));
            (row, model.gains[i])
        })
        .collect();
    if let Some(v) = model.vacuum_gain {
        rows.push((vec![(0, 1.0)], v));
    }
    let y1_lower = BoxedLp { c, rows, upper }.solve()?.clamp(0.0, 1.0);

    // variables: Y_n, b_n, w_n = Y_n - b_n, r_k, r'_k; maximise b_1
    let (yo, bo, wo, ro, eo) = (0, n, 2 * n, 3 * n, 3 * n + k);
    let total = 3 * n + 2 * k;
    let mut c = vec![0.0; total];
    c[bo + 1] = -1.0;
    let mut upper = vec![1.0; 3 * n];
    upper.extend(tails.iter().copied());
    upper.extend(tails.iter().copied());
    let mut rows = Vec::new();
    for i in 0..k {
        let mut row: Vec<(usize, f64)> = (0..n).map(|j| (yo + j, p[i][j])).collect();
        row.push((ro + i, 1.0));
        rows.push((row, model.gains[i]));
        let mut row: Vec<(usize, f64)> = (0..n).map(|j| (bo + j, p[i][j])).collect();
        row.push((eo + i, 1.0));
        rows.push((row, model.error_gains[i]));
    }
    if let Some(v) = model.vacuum_gain {
        rows.push((vec![(yo, 1.0)], v));
    }
    for j in 0..n {
        rows.push((vec![(yo + j, 1.0), (bo + j, -1.0), (wo + j, -1.0)], 0.0));
    }
    let error_yield_upper = (-BoxedLp { c, rows, upper }.solve()?).clamp(0.0, 1.0);
    let e1_upper = if y1_lower > 0.0 {
        (error_yield_upper / y1_lower).min(0.5)
    } else {
        0.5
    };
    Ok(DecoyBounds {
        y1_lower,
        error_yield_upper,
        e1_upper,
    })
}

/// `p_1(μ) Y_1 (1 - h(q_X1)) - Γ_Z f_EC h(Q_Z)`.
pub fn single_photon_rate(
    mu: f64,
    y1_lower: f64,
    q_x1_upper: f64,
    gain_z: f64,
    q_z: f64,
    f_ec: f64,
) -> Result<f64> {
    for (name, v) in [("q_X1", q_x1_upper), ("Q_Z", q_z)] {
        if !(0.0..=0.5).contains(&v) {
            return Err(Error::OutOfRange(format!("{name} = {v} outside [0, 1/2]")));
        }
    }
    if !(0.0..=1.0).contains(&y1_lower) || !(0.0..=1.0).contains(&gain_z) {
        return Err(Error::OutOfRange(
            "yield and gain must lie in [0, 1]".into(),
        ));
    }
    if !(f_ec >= 1.0) {
        return Err(Error::OutOfRange(format!(
            "f_EC = {f_ec} must be at least 1"
        )));
    }
    let p1 = poisson_pn(mu, 1)?;
    Ok(p1 * y1_lower * (1.0 - binary_entropy_bits(q_x1_upper))
        - gain_z * f_ec * binary_entropy_bits(q_z))
}

/// Asymptotic decoy rate with `Y_1` from [`decoy_lp_bounds`] at the signal
/// intensity. `q_x1_upper` defaults to the LP's `e_1` bound when `None`.
pub fn decoy_asymptotic_rate(
    model: &DecoyModel,
    q_x1_upper: Option<f64>,
    q_z: f64,
    f_ec: f64,
) -> Result<f64> {
    let bounds = decoy_lp_bounds(model)?;
    single_photon_rate(
        model.signal_intensity(),
        bounds.y1_lower,
        q_x1_upper.unwrap_or(bounds.e1_upper),
        model.signal_gain(),
        q_z,
        f_ec,
    )
}
