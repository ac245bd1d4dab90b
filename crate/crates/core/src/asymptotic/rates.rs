//! Closed-form rate formulas.

use crate::error::{Error, Result};
use crate::linalg::binary_entropy_bits;

/// A rate before and after clamping at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    pub raw: f64,
    pub clamped: f64,
}

impl RatePair {
    pub fn new(raw: f64) -> Self {
        Self {
            raw,
            clamped: raw.max(0.0),
        }
    }
}

/// `r = H(A|E) - leak`, where `leak` is `h(Q)` or `H(A|B)`.
pub fn devetak_winter_rate(hae_bound: f64, error_correction: f64) -> RatePair {
    RatePair::new(hae_bound - error_correction)
}

/// Device-independent CHSH rate `1 - h(1/2 + 1/2 sqrt((S/2)^2 - 1)) - h(Q)`.
pub fn chsh_di_rate(s: f64, q: f64) -> Result<f64> {
    let tsirelson = 2.0 * 2f64.sqrt();
    if !(2.0..=tsirelson + 1e-12).contains(&s) {
        return Err(Error::SOutOfRange(s));
    }
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::InvalidQber(q));
    }
    let inner = ((s / 2.0).powi(2) - 1.0).max(0.0).sqrt();
    Ok(1.0 - binary_entropy_bits(0.5 + 0.5 * inner) - binary_entropy_bits(q))
}
