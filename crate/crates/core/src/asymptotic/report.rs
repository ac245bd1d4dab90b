//! Key-rate drivers combining an entropy bound with the error-correction term.

use std::time::Instant;

use super::frank_wolfe::{
    certified_bound_fw, feasible_point, frank_wolfe_minimize, FrankWolfeOptions,
};
use super::gauss_radau::{gauss_radau_bound, GaussRadauOptions};
use super::min_entropy::hmin_bound;
use super::rates::{devetak_winter_rate, RatePair};
use crate::error::Result;
use crate::linalg::{binary_entropy_bits, HermitianOperator};
use crate::protocol::Scenario;
use crate::sdp::SolverOptions;

/// Which lower bound on `H(A|E)` to compute.
#[derive(Debug, Clone, PartialEq)]
pub enum RateMethod {
    FrankWolfe(FrankWolfeOptions),
    GaussRadau {
        m: usize,
        options: GaussRadauOptions,
    },
    MinEntropy(SolverOptions),
}

impl RateMethod {
    pub fn name(&self) -> &'static str {
        match self {
            RateMethod::FrankWolfe(_) => "frank_wolfe",
            RateMethod::GaussRadau { .. } => "gauss_radau",
            RateMethod::MinEntropy(_) => "min_entropy",
        }
    }
}

/// Error-correction leakage per sifted round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorCorrection {
    /// `h(Q)` for an observed QBER.
    Qber(f64),
    /// `H(A|B)` evaluated on the state found by the method, over all kept
    /// pairs for Frank–Wolfe and over the key basis for the other methods.
    Fine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyRateReport {
    pub method: &'static str,
    /// Certified lower bound on `H(A|E)` per sifted round (bits).
    pub hae_bound: f64,
    pub error_correction: f64,
    pub rate: RatePair,
    pub certificate_residual: f64,
    pub iterations: usize,
    pub runtime_seconds: f64,
}

/// Devetak–Winter rate from the chosen certified bound.
pub fn asymptotic_key_rate(
    scenario: &Scenario,
    method: &RateMethod,
    ec: ErrorCorrection,
) -> Result<KeyRateReport> {
    let start = Instant::now();
    let key_basis = scenario.key_basis();
    let (hae, state, residual, iterations): (f64, Option<HermitianOperator>, f64, usize) =
        match method {
            RateMethod::FrankWolfe(opts) => {
                let st = frank_wolfe_minimize(scenario, opts)?;
                let cert = certified_bound_fw(&st, scenario, &opts.solver)?;
                let hae = cert.bound / scenario.p_pass();
                (hae, Some(st.rho), cert.violation.abs(), st.iterations)
            }
            RateMethod::GaussRadau { m, options } => {
                let gr = gauss_radau_bound(scenario, key_basis, *m, options)?;
                (
                    gr.bound,
                    Some(gr.sigma),
                    gr.certificate_residual,
                    gr.iterations,
                )
            }
            RateMethod::MinEntropy(solver) => {
                let hm = hmin_bound(scenario, key_basis, scenario.fixed_state(), solver)?;
                let state = scenario.fixed_state().map(|r| r.op().clone());
                (
                    hm.bound,
                    state,
                    (hm.p_guess - hm.p_guess_estimate).abs(),
                    hm.iterations,
                )
            }
        };
    let error_correction = match ec {
        ErrorCorrection::Qber(q) => binary_entropy_bits(q),
        ErrorCorrection::Fine => {
            let rho = match state {
                Some(r) => r,
                None => feasible_point(scenario, &SolverOptions::default())?,
            };
            match method {
                RateMethod::FrankWolfe(_) => scenario.error_correction_cost(&rho),
                _ => scenario.error_correction_cost_in_basis(&rho, key_basis),
            }
        }
    };
    Ok(KeyRateReport {
        method: method.name(),
        hae_bound: hae,
        error_correction,
        rate: devetak_winter_rate(hae, error_correction),
        certificate_residual: residual,
        iterations,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}
