//! Executes validated tasks into result rows.

use std::time::Instant;

use keyforge::asymptotic::{asymptotic_key_rate, KeyRateReport, RateMethod};
use keyforge::decoy::{decoy_lp_bounds, single_photon_rate};
use keyforge::finitekey::{
    aep_correction, eat_rate, eur_bb84_key_length, key_length_leftover, leak_ir_bound,
    postselection_lift,
};
use keyforge::Error;

use crate::config::{AsymptoticTask, DecoyTask, FiniteKind, FiniteTask, Task};
use crate::output::{ResultRow, OK, RESIDUAL_LIMIT, UNVALIDATED};

/// Row status for a library error: the error variant's name.
pub fn status_of(e: &Error) -> String {
    let debug = format!("{e:?}");
    debug
        .split(|c: char| !c.is_alphanumeric())
        .next()
        .unwrap_or("Error")
        .to_string()
}

fn closed_form(
    parameter: Option<f64>,
    method: String,
    bound: f64,
    raw: f64,
    clamped: f64,
) -> ResultRow {
    ResultRow {
        parameter,
        method,
        certified_lower_bound: Some(bound),
        raw_rate: Some(raw),
        clamped_rate: Some(clamped),
        certificate_residual: Some(0.0),
        iterations: Some(0),
        runtime_seconds: 0.0,
        status: OK.into(),
    }
}

fn report_row(parameter: Option<f64>, r: &KeyRateReport) -> ResultRow {
    let valid = r.certificate_residual <= RESIDUAL_LIMIT;
    ResultRow {
        parameter,
        method: r.method.into(),
        certified_lower_bound: valid.then_some(r.hae_bound),
        raw_rate: Some(r.rate.raw),
        clamped_rate: Some(r.rate.clamped),
        certificate_residual: Some(r.certificate_residual),
        iterations: Some(r.iterations),
        runtime_seconds: r.runtime_seconds,
        status: if valid { OK } else { UNVALIDATED }.into(),
    }
}

fn asymptotic(parameter: Option<f64>, t: &AsymptoticTask) -> Vec<ResultRow> {
    t.methods
        .iter()
        .map(|m| match asymptotic_key_rate(&t.scenario, m, t.ec) {
            Ok(r) => report_row(parameter, &r),
            Err(e) => ResultRow::failed(parameter, m.name(), status_of(&e)),
        })
        .collect()
}

/// Certified `H(A|E)` per round from the task's first method.
fn entropy_rate(t: &AsymptoticTask) -> Result<f64, String> {
    let method: &RateMethod = &t.methods[0];
    let r = asymptotic_key_rate(&t.scenario, method, t.ec).map_err(|e| status_of(&e))?;
    if r.certificate_residual > RESIDUAL_LIMIT {
        return Err(UNVALIDATED.into());
    }
    Ok(r.hae_bound)
}

fn finite(parameter: Option<f64>, t: &FiniteTask) -> ResultRow {
    let n = t.spec.n as f64;
    let eps = t.params.eps_smooth;
    let outcome: Result<ResultRow, (String, String)> = match &t.kind {
        FiniteKind::Eur => eur_bb84_key_length(&t.spec, &t.params, t.leak)
            .map(|k| {
                closed_form(
                    parameter,
                    "eur".into(),
                    k.hmin_bits / n,
                    k.key.raw / n,
                    k.rate,
                )
            })
            .map_err(|e| ("eur".into(), status_of(&e))),
        FiniteKind::Postselection { d } => {
            let asym = t
                .asymptotic
                .as_ref()
                .expect("postselection needs a scenario");
            let label = format!("postselection:{}", asym.methods[0].name());
            (|| {
                let h = entropy_rate(asym)?;
                let d_a = t.spec.d_a as f64;
                let hmin =
                    aep_correction(t.spec.n, h, 0.0, d_a.log2(), eps).map_err(|e| status_of(&e))?;
                let leak = leak_ir_bound(t.spec.n, t.spec.q_z, eps, t.params.eps_ir, t.leak)
                    .map_err(|e| status_of(&e))?;
                let key = key_length_leftover(hmin, leak, t.params.eps_pa);
                let lift = postselection_lift(key.raw, t.params.eps_sec(), t.spec.n, *d)
                    .map_err(|e| status_of(&e))?;
                Ok(closed_form(
                    parameter,
                    label.clone(),
                    hmin / n,
                    lift.key.raw / n,
                    lift.key.length as f64 / n,
                ))
            })()
            .map_err(|s| (label.clone(), s))
        }
        FiniteKind::Eat { grad_norm, p_omega } => {
            let asym = t.asymptotic.as_ref().expect("eat needs a scenario");
            let label = format!("eat:{}", asym.methods[0].name());
            (|| {
                let h = entropy_rate(asym)?;
                let hmin = eat_rate(t.spec.n, h, t.spec.d_a, *grad_norm, eps, *p_omega)
                    .map_err(|e| status_of(&e))?;
                let leak = leak_ir_bound(t.spec.n, t.spec.q_z, eps, t.params.eps_ir, t.leak)
                    .map_err(|e| status_of(&e))?;
                let key = key_length_leftover(hmin, leak, t.params.eps_pa);
                Ok(closed_form(
                    parameter,
                    label.clone(),
                    hmin / n,
                    key.raw / n,
                    key.length as f64 / n,
                ))
            })()
            .map_err(|s| (label.clone(), s))
        }
    };
    outcome.unwrap_or_else(|(method, status)| ResultRow::failed(parameter, method, status))
}

fn decoy(parameter: Option<f64>, t: &DecoyTask) -> ResultRow {
    let run = || -> keyforge::Result<ResultRow> {
        let b = decoy_lp_bounds(&t.model)?;
        let mu = t.model.signal_intensity();
        let q1 = t.q_x1_upper.unwrap_or(b.e1_upper);
        let secrecy = single_photon_rate(mu, b.y1_lower, q1, 0.0, 0.0, t.f_ec)?;
        let rate = single_photon_rate(mu, b.y1_lower, q1, t.model.signal_gain(), t.q_z, t.f_ec)?;
        Ok(closed_form(
            parameter,
            "decoy".into(),
            secrecy,
            rate,
            rate.max(0.0),
        ))
    };
    run().unwrap_or_else(|e| ResultRow::failed(parameter, "decoy", status_of(&e)))
}

/// Runs one task, timing each row.
pub fn run_task(parameter: Option<f64>, task: &Task) -> Vec<ResultRow> {
    let start = Instant::now();
    let mut rows = match task {
        Task::Asymptotic(t) => return asymptotic(parameter, t),
        Task::Finite(t) => vec![finite(parameter, t)],
        Task::Decoy(t) => vec![decoy(parameter, t)],
    };
    let secs = start.elapsed().as_secs_f64();
    for r in &mut rows {
        r.runtime_seconds = secs;
    }
    rows
}

/// True when every row computed and validated.
pub fn all_ok(rows: &[ResultRow]) -> bool {
    rows.iter().all(ResultRow::is_ok)
}
