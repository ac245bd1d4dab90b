//! Infeasible primal–dual path following with Nesterov–Todd scaling and a
//! Mehrotra predictor–corrector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::cholesky::EnvelopeCholesky;
use super::{
    BlockKind, BlockValue, ConeProgram, ConeSolution, SolveStatus, SolverOptions, SymTerms,
};
use crate::error::Result;

const STEP_FRACTION: f64 = 0.98;
const PRESOLVE_TOL: f64 = 1e-10;
const DIVERGENCE: f64 = 1e15;

/// One constraint matrix restricted to one block.
struct Part {
    block: usize,
    entries: Vec<(usize, usize, f64)>,
    dense: Option<DMatrix<f64>>,
}

struct Row {
    parts: Vec<Part>,
}

/// Program in pure equality form with interval slacks appended as an LP block.
struct Standard {
    kinds: Vec<BlockKind>,
    c: Vec<BlockValue>,
    rows: Vec<Row>,
    b: Vec<f64>,
}

fn zero_value(kind: BlockKind) -> BlockValue {
    match kind {
        BlockKind::Psd(n) => BlockValue::Psd(DMatrix::zeros(n, n)),
        BlockKind::Nonneg(n) => BlockValue::Nonneg(DVector::zeros(n)),
    }
}

fn identity_value(kind: BlockKind, s: f64) -> BlockValue {
    match kind {
        BlockKind::Psd(n) => BlockValue::Psd(DMatrix::identity(n, n) * s),
        BlockKind::Nonneg(n) => BlockValue::Nonneg(DVector::from_element(n, s)),
    }
}

fn dense_of(terms: &[(usize, usize, f64)], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for &(r, c, v) in terms {
        m[(r, c)] += v;
        if r != c {
            m[(c, r)] += v;
        }
    }
    m
}

fn group(terms: &SymTerms, kinds: &[BlockKind]) -> Vec<Part> {
    let mut sorted = terms.entries.clone();
    sorted.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    let mut parts: Vec<Part> = Vec::new();
    for (b, r, c, v) in sorted {
        match parts.last_mut() {
            Some(p) if p.block == b => match p.entries.last_mut() {
                Some(e) if e.0 == r && e.1 == c => e.2 += v,
                _ => p.entries.push((r, c, v)),
            },
            _ => parts.push(Part {
                block: b,
                entries: vec![(r, c, v)],
                dense: None,
            }),
        }
    }
    for p in &mut parts {
        p.entries.retain(|e| e.2 != 0.0);
        if let BlockKind::Psd(n) = kinds[p.block] {
            p.dense = Some(dense_of(&p.entries, n));
        }
    }
    parts.retain(|p| !p.entries.is_empty());
    parts
}

fn psd_inner(p: &Part, m: &DMatrix<f64>) -> f64 {
    p.entries
        .iter()
        .map(|&(r, c, v)| {
            if r == c {
                v * m[(r, c)]
            } else {
                2.0 * v * m[(r, c)]
            }
        })
        .sum()
}

/// `<A_part, X_block>`.
fn part_inner(p: &Part, x: &BlockValue) -> f64 {
    match x {
        BlockValue::Psd(m) => psd_inner(p, m),
        BlockValue::Nonneg(d) => p.entries.iter().map(|&(r, _, v)| v * d[r]).sum(),
    }
}

fn block_inner(a: &BlockValue, b: &BlockValue) -> f64 {
    match (a, b) {
        (BlockValue::Psd(x), BlockValue::Psd(y)) => x.dot(y),
        (BlockValue::Nonneg(x), BlockValue::Nonneg(y)) => x.dot(y),
        _ => unreachable!("block kinds always match"),
    }
}

fn inner(a: &[BlockValue], b: &[BlockValue]) -> f64 {
    a.iter().zip(b).map(|(x, y)| block_inner(x, y)).sum()
}

fn norm(a: &[BlockValue]) -> f64 {
    inner(a, a).sqrt()
}

fn axpy(target: &mut BlockValue, s: f64, x: &BlockValue) {
    match (target, x) {
        (BlockValue::Psd(t), BlockValue::Psd(x)) => *t += x * s,
        (BlockValue::Nonneg(t), BlockValue::Nonneg(x)) => *t += x * s,
        _ => unreachable!("block kinds always match"),
    }
}

fn sub(a: &[BlockValue], b: &[BlockValue]) -> Vec<BlockValue> {
    let mut out = a.to_vec();
    for (t, x) in out.iter_mut().zip(b) {
        axpy(t, -1.0, x);
    }
    out
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

impl Standard {
    fn compile(p: &ConeProgram) -> (Self, Vec<(Option<usize>, Option<usize>)>) {
        let n_slack: usize = p
            .intervals
            .iter()
            .map(|r| r.lower.is_finite() as usize + r.upper.is_finite() as usize)
            .sum();
        let mut kinds = p.blocks.clone();
        let slack_block = kinds.len();
        if n_slack > 0 {
            kinds.push(BlockKind::Nonneg(n_slack));
        }

        let mut rows: Vec<Row> = Vec::new();
        let mut b = Vec::new();
        for (a, rhs) in &p.equalities {
            rows.push(Row {
                parts: group(a, &kinds),
            });
            b.push(*rhs);
        }
        let mut map = Vec::new();
        let mut slack = 0;
        for row in &p.intervals {
            let mut pair = (None, None);
            for (bound, sign) in [(row.lower, -1.0), (row.upper, 1.0)] {
                if !bound.is_finite() {
                    continue;
                }
                let mut t = row.a.clone();
                t.push(slack_block, slack, slack, sign);
                slack += 1;
                let idx = rows.len();
                rows.push(Row {
                    parts: group(&t, &kinds),
                });
                b.push(bound);
                if sign < 0.0 {
                    pair.0 = Some(idx);
                } else {
                    pair.1 = Some(idx);
                }
            }
            map.push(pair);
        }

        let mut c: Vec<BlockValue> = kinds.iter().map(|&k| zero_value(k)).collect();
        for part in group(&p.objective, &kinds) {
            match &mut c[part.block] {
                BlockValue::Psd(m) => *m += part.dense.as_ref().expect("psd part is dense"),
                BlockValue::Nonneg(v) => {
                    for &(r, _, val) in &part.entries {
                        v[r] += val;
                    }
                }
            }
        }
        (Self { kinds, c, rows, b }, map)
    }

    fn apply_a(&self, x: &[BlockValue]) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|r| {
                r.parts
                    .iter()
                    .map(|p| part_inner(p, &x[p.block]))
                    .sum::<f64>()
            }),
        )
    }

    fn apply_at(&self, y: &DVector<f64>) -> Vec<BlockValue> {
        let mut out: Vec<BlockValue> = self.kinds.iter().map(|&k| zero_value(k)).collect();
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            if yi == 0.0 {
                continue;
            }
            for p in &row.parts {
                match &mut out[p.block] {
                    BlockValue::Psd(m) => *m += p.dense.as_ref().expect("dense") * yi,
                    BlockValue::Nonneg(v) => {
                        for &(r, _, val) in &p.entries {
                            v[r] += val * yi;
                        }
                    }
                }
            }
        }
        out
    }

    fn row_norm(&self, i: usize) -> f64 {
        self.rows[i]
            .parts
            .iter()
            .map(|p| {
                p.entries
                    .iter()
                    .map(|&(r, c, v)| if r == c { v * v } else { 2.0 * v * v })
                    .sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Gram matrix entry `<A_i, A_j>`.
    fn gram(&self, i: usize, j: usize) -> f64 {
        let mut s = 0.0;
        for p in &self.rows[i].parts {
            for q in self.rows[j].parts.iter().filter(|q| q.block == p.block) {
                s += match &q.dense {
                    Some(d) => psd_inner(p, d),
                    None => p
                        .entries
                        .iter()
                        .map(|&(r, _, v)| {
                            q.entries
                                .iter()
                                .filter(|e| e.0 == r)
                                .map(|e| e.2 * v)
                                .sum::<f64>()
                        })
                        .sum(),
                };
            }
        }
        s
    }
}

enum Presolve {
    Keep(Vec<usize>),
    Inconsistent,
}

/// Greedy pivoted Cholesky on the Gram matrix; dependent rows are dropped
/// after checking that their right-hand sides are consistent.
fn presolve(std: &Standard) -> Presolve {
    let m = std.rows.len();
    let g = DMatrix::from_fn(m, m, |i, j| std.gram(i, j));
    let max_diag = (0..m).map(|i| g[(i, i)]).fold(0.0, f64::max);
    let mut l = DMatrix::<f64>::zeros(m, m);
    let mut d: Vec<f64> = (0..m).map(|i| g[(i, i)]).collect();
    let mut chosen: Vec<usize> = Vec::new();
    let mut remaining: Vec<usize> = (0..m).collect();
    loop {
        let Some((pos, &best)) = remaining
            .iter()
            .enumerate()
            .max_by(|a, b| d[*a.1].total_cmp(&d[*b.1]))
        else {
            break;
        };
        if d[best] <= PRESOLVE_TOL * max_diag.max(1e-300) {
            break;
        }
        let k = chosen.len();
        let piv = d[best].sqrt();
        remaining.remove(pos);
        l[(best, k)] = piv;
        for &i in &remaining {
            let mut s = g[(i, best)];
            for t in 0..k {
                s -= l[(i, t)] * l[(best, t)];
            }
            l[(i, k)] = s / piv;
            d[i] -= l[(i, k)] * l[(i, k)];
        }
        chosen.push(best);
    }
    if remaining.is_empty() {
        chosen.sort_unstable();
        return Presolve::Keep(chosen);
    }
    // rows in `remaining` are combinations of `chosen`; check rhs consistency
    let k = chosen.len();
    let gss = DMatrix::from_fn(k, k, |a, b| g[(chosen[a], chosen[b])]);
    let bs = DVector::from_iterator(k, chosen.iter().map(|&i| std.b[i]));
    let chol = gss.cholesky();
    for &dep in &remaining {
        let coeffs = match &chol {
            Some(c) => c.solve(&DVector::from_iterator(
                k,
                chosen.iter().map(|&i| g[(i, dep)]),
            )),
            None => DVector::zeros(k),
        };
        let predicted = coeffs.dot(&bs);
        let scale = 1.0 + std.b[dep].abs() + coeffs.abs().dot(&bs.abs());
        if (predicted - std.b[dep]).abs() > 1e-8 * scale {
            return Presolve::Inconsistent;
        }
    }
    chosen.sort_unstable();
    Presolve::Keep(chosen)
}

/// NT scaling data for one block: `W = R R^T`, `R^T Z R = R^{-1} X R^{-T} = diag(lambda)`.
enum Scaling {
    Psd {
        r: DMatrix<f64>,
        rinv: DMatrix<f64>,
        w: DMatrix<f64>,
        lam: DVector<f64>,
    },
    Lp {
        r: DVector<f64>,
        lam: DVector<f64>,
    },
}

impl Scaling {
    fn new(x: &BlockValue, z: &BlockValue) -> Option<Self> {
        match (x, z) {
            (BlockValue::Psd(x), BlockValue::Psd(z)) => {
                let l = x.clone().cholesky()?.l();
                let linv = l.clone().try_inverse()?;
                let s = l.transpose() * z * &l;
                let eig = SymmetricEigen::new(s);
                if eig.eigenvalues.iter().any(|&v| !(v > 0.0)) {
                    return None;
                }
                let q = eig.eigenvectors;
                let quarter = eig.eigenvalues.map(|v| v.powf(-0.25));
                let r = &l * &q * DMatrix::from_diagonal(&quarter);
                let rinv = DMatrix::from_diagonal(&quarter.map(|v| 1.0 / v)) * q.transpose() * linv;
                let w = &r * r.transpose();
                Some(Scaling::Psd {
                    r,
                    rinv,
                    w,
                    lam: eig.eigenvalues.map(f64::sqrt),
                })
            }
            (BlockValue::Nonneg(x), BlockValue::Nonneg(z)) => {
                if x.iter().chain(z.iter()).any(|&v| !(v > 0.0)) {
                    return None;
                }
                Some(Scaling::Lp {
                    r: x.zip_map(z, |a, b| (a / b).powf(0.25)),
                    lam: x.zip_map(z, |a, b| (a * b).sqrt()),
                })
            }
            _ => unreachable!("block kinds always match"),
        }
    }

    fn lam(&self) -> &DVector<f64> {
        match self {
            Scaling::Psd { lam, .. } | Scaling::Lp { lam, .. } => lam,
        }
    }

    /// `W M W`.
    fn wmw(&self, m: &BlockValue) -> BlockValue {
        match (self, m) {
            (Scaling::Psd { w, .. }, BlockValue::Psd(m)) => {
                let mut out = w * m * w;
                symmetrize(&mut out);
                BlockValue::Psd(out)
            }
            (Scaling::Lp { r, .. }, BlockValue::Nonneg(m)) => {
                BlockValue::Nonneg(m.zip_map(r, |v, r| v * r.powi(4)))
            }
            _ => unreachable!("block kinds always match"),
        }
    }

    /// `R S R^T` with `S_ij = 2 T_ij / (lambda_i + lambda_j)`.
    fn unscale_target(&self, t: &BlockValue) -> BlockValue {
        match (self, t) {
            (Scaling::Psd { r, lam, .. }, BlockValue::Psd(t)) => {
                let n = lam.len();
                let s = DMatrix::from_fn(n, n, |i, j| 2.0 * t[(i, j)] / (lam[i] + lam[j]));
                let mut h = r * s * r.transpose();
                symmetrize(&mut h);
                BlockValue::Psd(h)
            }
            (Scaling::Lp { r, lam }, BlockValue::Nonneg(t)) => {
                BlockValue::Nonneg(DVector::from_fn(lam.len(), |i, _| {
                    r[i] * r[i] * t[i] / lam[i]
                }))
            }
            _ => unreachable!("block kinds always match"),
        }
    }

    /// Scaled primal direction `R^{-1} dX R^{-T}`.
    fn scale_x(&self, dx: &BlockValue) -> BlockValue {
        match (self, dx) {
            (Scaling::Psd { rinv, .. }, BlockValue::Psd(d)) => {
                let mut m = rinv * d * rinv.transpose();
                symmetrize(&mut m);
                BlockValue::Psd(m)
            }
            (Scaling::Lp { r, .. }, BlockValue::Nonneg(d)) => {
                BlockValue::Nonneg(d.zip_map(r, |v, r| v / (r * r)))
            }
            _ => unreachable!("block kinds always match"),
        }
    }

    /// Scaled dual direction `R^T dZ R`.
    fn scale_z(&self, dz: &BlockValue) -> BlockValue {
        match (self, dz) {
            (Scaling::Psd { r, .. }, BlockValue::Psd(d)) => {
                let mut m = r.transpose() * d * r;
                symmetrize(&mut m);
                BlockValue::Psd(m)
            }
            (Scaling::Lp { r, .. }, BlockValue::Nonneg(d)) => {
                BlockValue::Nonneg(d.zip_map(r, |v, r| v * r * r))
            }
            _ => unreachable!("block kinds always match"),
        }
    }
}

/// Largest step `alpha` keeping `diag(lam) + alpha * d` PSD (may be infinite).
fn max_step(lam: &DVector<f64>, d: &BlockValue) -> f64 {
    let min = match d {
        BlockValue::Psd(d) => {
            let n = lam.len();
            let m = DMatrix::from_fn(n, n, |i, j| d[(i, j)] / (lam[i] * lam[j]).sqrt());
            SymmetricEigen::new(m).eigenvalues.min()
        }
        BlockValue::Nonneg(d) => d.zip_map(lam, |v, l| v / l).min(),
    };
    if min < 0.0 {
        -1.0 / min
    } else {
        f64::INFINITY
    }
}

fn min_eigenvalue(v: &BlockValue) -> f64 {
    match v {
        BlockValue::Psd(m) => SymmetricEigen::new(m.clone()).eigenvalues.min(),
        BlockValue::Nonneg(d) => d.min(),
    }
}

struct Directions {
    dx: Vec<BlockValue>,
    dy: DVector<f64>,
    dz: Vec<BlockValue>,
}

/// Solves the program; infeasibility and iteration limits are reported
/// through [`SolveStatus`], never as errors.
pub fn solve(program: &ConeProgram, opts: &SolverOptions) -> Result<ConeSolution> {
    program.validate()?;
    let (full, interval_rows) = Standard::compile(program);
    let n_user = program.blocks.len();

    let kept_rows = if opts.presolve && !full.rows.is_empty() {
        match presolve(&full) {
            Presolve::Keep(rows) => rows,
            Presolve::Inconsistent => {
                return Ok(finish(
                    program,
                    &full,
                    &interval_rows,
                    SolveStatus::Infeasible,
                    full.kinds.iter().map(|&k| zero_value(k)).collect(),
                    full.kinds.iter().map(|&k| zero_value(k)).collect(),
                    DVector::zeros(full.rows.len()),
                    0,
                    n_user,
                ));
            }
        }
    } else {
        (0..full.rows.len()).collect()
    };

    // reduced problem over the independent rows
    let std = Standard {
        kinds: full.kinds.clone(),
        c: full.c.clone(),
        rows: kept_rows
            .iter()
            .map(|&i| Row {
                parts: full.rows[i]
                    .parts
                    .iter()
                    .map(|p| Part {
                        block: p.block,
                        entries: p.entries.clone(),
                        dense: p.dense.clone(),
                    })
                    .collect(),
            })
            .collect(),
        b: kept_rows.iter().map(|&i| full.b[i]).collect(),
    };
    let (status, x, y_red, z, iterations) = iterate(&std, opts);

    let mut y = DVector::zeros(full.rows.len());
    for (k, &i) in kept_rows.iter().enumerate() {
        y[i] = y_red[k];
    }
    Ok(finish(
        program,
        &full,
        &interval_rows,
        status,
        x,
        z,
        y,
        iterations,
        n_user,
    ))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    program: &ConeProgram,
    full: &Standard,
    interval_rows: &[(Option<usize>, Option<usize>)],
    status: SolveStatus,
    x: Vec<BlockValue>,
    z: Vec<BlockValue>,
    y: DVector<f64>,
    iterations: usize,
    n_user: usize,
) -> ConeSolution {
    let b = DVector::from_column_slice(&full.b);
    let pobj = inner(&full.c, &x);
    let dobj = b.dot(&y);
    let rp = (&b - full.apply_a(&x)).norm() / (1.0 + b.norm());
    let rd = norm(&sub(&sub(&full.c, &z), &full.apply_at(&y))) / (1.0 + norm(&full.c));
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
    let n_eq = program.equalities.len();
    let y_interval = interval_rows
        .iter()
        .map(|&(lo, hi)| lo.map_or(0.0, |i| y[i]) + hi.map_or(0.0, |i| y[i]))
        .collect();
    ConeSolution {
        status,
        x: x.into_iter().take(n_user).collect(),
        z: z.into_iter().take(n_user).collect(),
        y: y.iter().take(n_eq).copied().collect(),
        y_interval,
        primal_objective: pobj,
        dual_objective: dobj,
        primal_residual: rp,
        dual_residual: rd,
        gap,
        iterations,
    }
}

fn iterate(
    std: &Standard,
    opts: &SolverOptions,
) -> (
    SolveStatus,
    Vec<BlockValue>,
    DVector<f64>,
    Vec<BlockValue>,
    usize,
) {
    let m = std.rows.len();
    let b = DVector::from_column_slice(&std.b);
    let n_total: usize = std.kinds.iter().map(|k| k.dim()).sum();
    let c_norm = norm(&std.c);
    let b_norm = b.norm();
    let a_norms: Vec<f64> = (0..m).map(|i| std.row_norm(i)).collect();
    let a_max = a_norms.iter().copied().fold(0.0, f64::max);

    let sqrt_n = (n_total as f64).sqrt();
    let xi_p = (0..m)
        .map(|i| sqrt_n * (1.0 + b[i].abs()) / (1.0 + a_norms[i]))
        .fold(10.0f64, f64::max);
    let xi_d = (1.0 + c_norm.max(a_max)) / sqrt_n;
    let xi_d = xi_d.max(10.0);

    let mut x: Vec<BlockValue> = std.kinds.iter().map(|&k| identity_value(k, xi_p)).collect();
    let mut z: Vec<BlockValue> = std.kinds.iter().map(|&k| identity_value(k, xi_d)).collect();
    let mut y = DVector::<f64>::zeros(m);

    // rows touching each block
    let mut touching: Vec<Vec<(usize, usize)>> = vec![Vec::new(); std.kinds.len()];
    for (i, row) in std.rows.iter().enumerate() {
        for (k, p) in row.parts.iter().enumerate() {
            touching[p.block].push((i, k));
        }
    }

    let mut stalls = 0;
    for iter in 0..=opts.max_iter {
        let ax = std.apply_a(&x);
        let rp = &b - &ax;
        let aty = std.apply_at(&y);
        let rd = sub(&sub(&std.c, &z), &aty);
        let pobj = inner(&std.c, &x);
        let dobj = b.dot(&y);
        let prel = rp.norm() / (1.0 + b_norm);
        let drel = norm(&rd) / (1.0 + c_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let mu = inner(&x, &z) / n_total as f64;

        if prel <= opts.residual_tol && drel <= opts.residual_tol && gap <= opts.gap_tol {
            return (SolveStatus::Optimal, x, y, z, iter);
        }

        // Farkas ray for primal infeasibility: b^T y > 0 with -A^T y ⪰ 0
        let y_norm = y.norm();
        if dobj > 1e-6 * y_norm * b_norm.max(1e-300) && y_norm > 0.0 {
            let worst = aty
                .iter()
                .map(|v| min_eigenvalue(&negated(v)))
                .fold(f64::INFINITY, f64::min);
            if worst >= -1e-9 * y_norm * a_max {
                return (SolveStatus::Infeasible, x, y, z, iter);
            }
        }
        // improving ray for the primal (dual infeasibility)
        let x_norm = norm(&x);
        if pobj < -1e-6 * x_norm * c_norm && ax.norm() <= 1e-8 * pobj.abs() {
            return (SolveStatus::DualInfeasible, x, y, z, iter);
        }
        if x_norm > DIVERGENCE || y_norm > DIVERGENCE {
            return (SolveStatus::NumericalTrouble, x, y, z, iter);
        }
        if iter == opts.max_iter {
            return (SolveStatus::MaxIter, x, y, z, iter);
        }

        let scalings: Option<Vec<Scaling>> =
            x.iter().zip(&z).map(|(a, b)| Scaling::new(a, b)).collect();
        let Some(scalings) = scalings else {
            return (SolveStatus::NumericalTrouble, x, y, z, iter);
        };

        // Schur complement M_ij = <A_i, W A_j W>
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (blk, rows) in touching.iter().enumerate() {
            match &scalings[blk] {
                Scaling::Psd { w, .. } => {
                    for &(j, pj) in rows {
                        let aj = std.rows[j].parts[pj].dense.as_ref().expect("dense");
                        let t = w * aj * w;
                        for &(i, pi) in rows {
                            if i >= j {
                                schur[(i, j)] += psd_inner(&std.rows[i].parts[pi], &t);
                            }
                        }
                    }
                }
                Scaling::Lp { r, .. } => {
                    for &(j, pj) in rows {
                        let mut t = DVector::zeros(r.len());
                        for &(k, _, v) in &std.rows[j].parts[pj].entries {
                            t[k] += v * r[k].powi(4);
                        }
                        let t = BlockValue::Nonneg(t);
                        for &(i, pi) in rows {
                            if i >= j {
                                schur[(i, j)] += part_inner(&std.rows[i].parts[pi], &t);
                            }
                        }
                    }
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                schur[(j, i)] = schur[(i, j)];
            }
        }
        let Some(chol) = factor_with_shift(&schur) else {
            return (SolveStatus::NumericalTrouble, x, y, z, iter);
        };

        let wrdw: Vec<BlockValue> = scalings.iter().zip(&rd).map(|(s, r)| s.wmw(r)).collect();
        let direction = |targets: &[BlockValue]| -> Directions {
            let h: Vec<BlockValue> = scalings
                .iter()
                .zip(targets)
                .map(|(s, t)| s.unscale_target(t))
                .collect();
            let rhs = &rp - std.apply_a(&sub(&h, &wrdw));
            let dy = chol.solve(&rhs);
            let dz = sub(&rd, &std.apply_at(&dy));
            let wdzw: Vec<BlockValue> = scalings.iter().zip(&dz).map(|(s, d)| s.wmw(d)).collect();
            let dx = sub(&h, &wdzw);
            Directions { dx, dy, dz }
        };
        let steps = |d: &Directions| -> (f64, f64, Vec<BlockValue>, Vec<BlockValue>) {
            let sx: Vec<BlockValue> = scalings
                .iter()
                .zip(&d.dx)
                .map(|(s, v)| s.scale_x(v))
                .collect();
            let sz: Vec<BlockValue> = scalings
                .iter()
                .zip(&d.dz)
                .map(|(s, v)| s.scale_z(v))
                .collect();
            let ap = scalings
                .iter()
                .zip(&sx)
                .map(|(s, v)| max_step(s.lam(), v))
                .fold(f64::INFINITY, f64::min);
            let ad = scalings
                .iter()
                .zip(&sz)
                .map(|(s, v)| max_step(s.lam(), v))
                .fold(f64::INFINITY, f64::min);
            (ap, ad, sx, sz)
        };

        // predictor: target XZ = 0
        let pred_t: Vec<BlockValue> = scalings
            .iter()
            .map(|s| match s {
                Scaling::Psd { lam, .. } => {
                    BlockValue::Psd(DMatrix::from_diagonal(&lam.map(|l| -l * l)))
                }
                Scaling::Lp { lam, .. } => BlockValue::Nonneg(lam.map(|l| -l * l)),
            })
            .collect();
        let pred = direction(&pred_t);
        let (ap, ad, sx, sz) = steps(&pred);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mut x_aff = x.clone();
        let mut z_aff = z.clone();
        for k in 0..x.len() {
            axpy(&mut x_aff[k], ap, &pred.dx[k]);
            axpy(&mut z_aff[k], ad, &pred.dz[k]);
        }
        let mu_aff = inner(&x_aff, &z_aff) / n_total as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector: sigma mu I - Lambda^2 - sym(dX~ dZ~)
        let corr_t: Vec<BlockValue> = scalings
            .iter()
            .zip(sx.iter().zip(&sz))
            .map(|(s, (dxs, dzs))| match (s, dxs, dzs) {
                (Scaling::Psd { lam, .. }, BlockValue::Psd(a), BlockValue::Psd(bm)) => {
                    let mut t = a * bm;
                    symmetrize(&mut t);
                    let mut out = -t;
                    for i in 0..lam.len() {
                        out[(i, i)] += sigma * mu - lam[i] * lam[i];
                    }
                    BlockValue::Psd(out)
                }
                (Scaling::Lp { lam, .. }, BlockValue::Nonneg(a), BlockValue::Nonneg(bv)) => {
                    BlockValue::Nonneg(DVector::from_fn(lam.len(), |i, _| {
                        sigma * mu - lam[i] * lam[i] - a[i] * bv[i]
                    }))
                }
                _ => unreachable!("block kinds always match"),
            })
            .collect();
        let corr = direction(&corr_t);
        let (ap, ad, _, _) = steps(&corr);
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);

        for k in 0..x.len() {
            axpy(&mut x[k], ap, &corr.dx[k]);
            axpy(&mut z[k], ad, &corr.dz[k]);
            if let BlockValue::Psd(mx) = &mut x[k] {
                symmetrize(mx);
            }
            if let BlockValue::Psd(mz) = &mut z[k] {
                symmetrize(mz);
            }
        }
        y += &corr.dy * ad;

        if ap < 1e-8 && ad < 1e-8 {
            stalls += 1;
            if stalls >= 3 {
                return (SolveStatus::NumericalTrouble, x, y, z, iter + 1);
            }
        } else {
            stalls = 0;
        }
    }
    unreachable!("loop returns at max_iter")
}

fn negated(v: &BlockValue) -> BlockValue {
    match v {
        BlockValue::Psd(m) => BlockValue::Psd(-m),
        BlockValue::Nonneg(d) => BlockValue::Nonneg(-d),
    }
}

fn factor_with_shift(m: &DMatrix<f64>) -> Option<EnvelopeCholesky> {
    if let Some(c) = EnvelopeCholesky::factor(m) {
        return Some(c);
    }
    let n = m.nrows();
    let max_diag = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
    for shift in [1e-14, 1e-12, 1e-10] {
        let mut s = m.clone();
        for i in 0..n {
            s[(i, i)] += shift * max_diag.max(1e-300);
        }
        if let Some(c) = EnvelopeCholesky::factor(&s) {
            return Some(c);
        }
    }
    None
}

/// Primal point moved onto the equality constraints, with its objective.
#[derive(Debug, Clone)]
pub struct CorrectedPrimal {
    pub x: Vec<BlockValue>,
    pub objective: f64,
    /// Smallest eigenvalue over the corrected blocks (negative means the
    /// correction left the cone and the objective is not a valid bound).
    pub min_eigenvalue: f64,
    /// `|b - A(X')|_inf` after the correction.
    pub residual: f64,
}

/// Moves the primal blocks of `sol` onto the equality constraints with the
/// scaled correction `ΔX = X A^*(λ) X`, where `λ` solves
/// `<A_i, X A^*(λ) X> = b_i - <A_i, X>`. Since `X + ΔX = X^{1/2}(I + X^{1/2}
/// A^*(λ) X^{1/2}) X^{1/2}`, a small correction keeps a strictly interior `X`
/// in the cone. When the result is in the cone its objective `<C, X'>`
/// upper-bounds the dual optimum `max b^T y` (weak duality).
///
/// Only programs without interval rows are supported.
pub fn correct_primal(program: &ConeProgram, sol: &ConeSolution) -> Result<CorrectedPrimal> {
    if !program.intervals.is_empty() {
        return Err(crate::error::Error::IllFormedProgram(
            "primal correction needs a program without interval rows".into(),
        ));
    }
    program.validate()?;
    let (std, _) = Standard::compile(program);
    let m = std.rows.len();
    let b = DVector::from_column_slice(&std.b);
    let mut x = sol.x.clone();
    for _ in 0..3 {
        let r = &b - std.apply_a(&x);
        if r.amax() == 0.0 {
            break;
        }
        // X A_j X restricted to the blocks row j touches
        let weighted: Vec<Vec<(usize, BlockValue)>> = std
            .rows
            .iter()
            .map(|row| {
                row.parts
                    .iter()
                    .map(|p| {
                        let v = match &x[p.block] {
                            BlockValue::Psd(xb) => {
                                BlockValue::Psd(xb * p.dense.as_ref().expect("dense") * xb)
                            }
                            BlockValue::Nonneg(xd) => {
                                let mut v = DVector::zeros(xd.len());
                                for &(r, _, val) in &p.entries {
                                    v[r] += val * xd[r] * xd[r];
                                }
                                BlockValue::Nonneg(v)
                            }
                        };
                        (p.block, v)
                    })
                    .collect()
            })
            .collect();
        let mut gram = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let mut s = 0.0;
                for p in &std.rows[i].parts {
                    for (_, w) in weighted[j].iter().filter(|(blk, _)| *blk == p.block) {
                        s += part_inner(p, w);
                    }
                }
                gram[(i, j)] = s;
                gram[(j, i)] = s;
            }
        }
        let chol = factor_with_shift(&gram).ok_or_else(|| {
            crate::error::Error::IllFormedProgram("constraint rows are linearly dependent".into())
        })?;
        let lambda = chol.solve(&r);
        for (j, parts) in weighted.iter().enumerate() {
            for (blk, w) in parts {
                axpy(&mut x[*blk], lambda[j], w);
            }
        }
        for blk in x.iter_mut() {
            if let BlockValue::Psd(mb) = blk {
                symmetrize(mb);
            }
        }
    }
    let residual = (&b - std.apply_a(&x)).amax();
    let min_eig = x.iter().map(min_eigenvalue).fold(f64::INFINITY, f64::min);
    Ok(CorrectedPrimal {
        objective: inner(&std.c, &x),
        x,
        min_eigenvalue: min_eig,
        residual,
    })
}
