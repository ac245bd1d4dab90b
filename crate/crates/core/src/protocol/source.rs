use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CVector;

/// Source-replacement state `sum_j sqrt(p_j) |j>_A ⊗ |phi_j>_B` for a
/// prepare-and-measure source emitting `states[j]` with probability `probs[j]`.
///
/// Alice's register is indexed by the flattened label `j = (a, x)`.
pub fn source_replacement(states: &[CVector], probs: &[f64]) -> Result<CVector> {
    if states.is_empty() || states.len() != probs.len() {
        return Err(Error::InvalidDistribution(format!(
            "{} states with {} probabilities",
            states.len(),
            probs.len()
        )));
    }
    if probs.iter().any(|&p| !(0.0..=1.0).contains(&p))
        || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidDistribution(format!(
            "{probs:?} is not a probability distribution"
        )));
    }
    let d = states[0].len();
    for (j, s) in states.iter().enumerate() {
        if s.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "state {j} has dimension {} instead of {d}",
                s.len()
            )));
        }
        if (s.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "state {j} is not normalised"
            )));
        }
    }
    let n = states.len();
    let mut psi = CVector::zeros(n * d);
    for (j, (s, &p)) in states.iter().zip(probs).enumerate() {
        let amp = Complex64::new(p.sqrt(), 0.0);
        for k in 0..d {
            psi[j * d + k] = s[k] * amp;
        }
    }
    Ok(psi)
}
