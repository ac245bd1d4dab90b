//! Finite-size key-length accounting.
//!
//! All logarithms are base 2 unless a formula says otherwise; only the final
//! key length is floored.

use crate::error::{Error, Result};
use crate::linalg::binary_entropy_bits;

/// Error-correction efficiency used when none is given.
pub const DEFAULT_F_EC: f64 = 1.16;

fn check_prob(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!(
            "{name} = {v} must lie in (0, 1)"
        )))
    }
}

fn check_qber(q: f64) -> Result<()> {
    if (0.0..=0.5).contains(&q) {
        Ok(())
    } else {
        Err(Error::InvalidQber(q))
    }
}

/// Security parameters of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityParams {
    pub eps_pa: f64,
    pub eps_ir: f64,
    pub eps_smooth: f64,
}

impl SecurityParams {
    pub fn new(eps_pa: f64, eps_ir: f64, eps_smooth: f64) -> Result<Self> {
        check_prob("eps_pa", eps_pa)?;
        check_prob("eps_ir", eps_ir)?;
        check_prob("eps_smooth", eps_smooth)?;
        let p = Self {
            eps_pa,
            eps_ir,
            eps_smooth,
        };
        if p.eps_sec() >= 1.0 {
            return Err(Error::OutOfRange(format!(
                "secrecy parameter {} must be below 1",
                p.eps_sec()
            )));
        }
        Ok(p)
    }

    /// Every parameter equal to `eps`.
    pub fn uniform(eps: f64) -> Result<Self> {
        Self::new(eps, eps, eps)
    }

    /// `ε_PA + 2 ε_smooth`.
    pub fn eps_sec(&self) -> f64 {
        self.eps_pa + 2.0 * self.eps_smooth
    }

    pub fn eps_cor(&self) -> f64 {
        self.eps_ir
    }
}

/// Round counts and observed statistics of a finite run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteRunSpec {
    /// Key-generating rounds.
    pub n: u64,
    /// Test rounds, sampled without replacement from the `n + m` sifted rounds.
    pub m: u64,
    pub q_x: f64,
    pub q_z: f64,
    pub d_a: usize,
    /// Per-round dimension entering the postselection penalty.
    pub d: usize,
}

impl FiniteRunSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 || self.m >= self.n {
            return Err(Error::OutOfRange(format!(
                "need 1 <= m < n, got n = {}, m = {}",
                self.n, self.m
            )));
        }
        check_qber(self.q_x)?;
        check_qber(self.q_z)?;
        if self.d_a < 1 || self.d < 1 {
            return Err(Error::OutOfRange("dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// `h(q)` with a range check.
pub fn binary_entropy(q: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&q) {
        Ok(binary_entropy_bits(q))
    } else {
        Err(Error::OutOfRange(format!("probability {q} outside [0, 1]")))
    }
}

fn check_sample(n: f64, m: f64) -> Result<()> {
    if m >= 1.0 && m < n && n.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!(
            "need 1 <= m < n, got n = {n}, m = {m}"
        )))
    }
}

/// `exp(-2 β² n m / (n - m + 1))`.
pub fn serfling_bound(n: f64, m: f64, beta: f64) -> Result<f64> {
    check_sample(n, m)?;
    if !(beta >= 0.0) {
        return Err(Error::OutOfRange(format!(
            "deviation {beta} must be nonnegative"
        )));
    }
    Ok((-2.0 * beta * beta * n * m / (n - m + 1.0)).exp())
}

/// `β = sqrt((n - m + 1) ln(1/ε) / (2 n m))`, the inverse of [`serfling_bound`].
pub fn serfling_deviation(n: f64, m: f64, eps: f64) -> Result<f64> {
    check_sample(n, m)?;
    check_prob("eps", eps)?;
    Ok(((n - m + 1.0) * (1.0 / eps).ln() / (2.0 * n * m)).sqrt())
}

/// `η = sqrt(2^{-H_min}) + sqrt(2^{H_max}) + 1`.
pub fn aep_eta(hmin_single: f64, hmax_single: f64) -> f64 {
    (-hmin_single).exp2().sqrt() + hmax_single.exp2().sqrt() + 1.0
}

/// `δ(ε, η) = 4 log2(η) sqrt(log2(2/ε²))`.
pub fn aep_delta(eps: f64, eta: f64) -> f64 {
    4.0 * eta.log2() * (2.0 / (eps * eps)).log2().sqrt()
}

/// Smallest `n` for which the AEP correction applies: `⌈(8/5) log2(2/ε²)⌉`.
pub fn aep_min_rounds(eps: f64) -> u64 {
    (1.6 * (2.0 / (eps * eps)).log2()).ceil() as u64
}

/// `n H - sqrt(n) δ(ε, η)` with `η` from the single-round min- and
/// max-entropies.
pub fn aep_correction(n: u64, h: f64, hmin_single: f64, hmax_single: f64, eps: f64) -> Result<f64> {
    check_prob("eps", eps)?;
    let required = aep_min_rounds(eps);
    if n < required {
        return Err(Error::TooFewRounds { n, required });
    }
    let nf = n as f64;
    Ok(nf * h - nf.sqrt() * aep_delta(eps, aep_eta(hmin_single, hmax_single)))
}

/// A key length with the unclamped value it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyLength {
    pub raw: f64,
    pub length: u64,
}

impl KeyLength {
    fn from_raw(raw: f64) -> Self {
        let length = if raw.is_finite() && raw > 0.0 {
            raw.floor() as u64
        } else {
            0
        };
        Self { raw, length }
    }
}

/// `ℓ = ⌊H_min^ε - leak - 2 log2(1/(2 ε_PA))⌋`, clamped at zero.
pub fn key_length_leftover(hmin_eps_bits: f64, leak_bits: f64, eps_pa: f64) -> KeyLength {
    KeyLength::from_raw(hmin_eps_bits - leak_bits - 2.0 * (1.0 / (2.0 * eps_pa)).log2())
}

/// Model for the smooth max-entropy `H_max(A|B)` inside the leakage bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeakModel {
    /// `n h(Q) f_EC`.
    Plain { f_ec: f64 },
    /// `n h(Q) + sqrt(n) δ(ε'/2, 2 + sqrt(d_A))`.
    Aep { d_a: usize },
}

impl Default for LeakModel {
    fn default() -> Self {
        LeakModel::Plain { f_ec: DEFAULT_F_EC }
    }
}

/// Leakage of one-way error correction:
/// `H_max + log2(8/ε'² + 2/(2 - ε')) + log2(1/ε_IR)`.
pub fn leak_ir_bound(n: u64, q: f64, eps_prime: f64, eps_ir: f64, model: LeakModel) -> Result<f64> {
    check_qber(q)?;
    check_prob("eps_prime", eps_prime)?;
    check_prob("eps_ir", eps_ir)?;
    let nf = n as f64;
    let hmax = match model {
        LeakModel::Plain { f_ec } => {
            if !(f_ec >= 1.0) {
                return Err(Error::OutOfRange(format!(
                    "f_EC = {f_ec} must be at least 1"
                )));
            }
            nf * binary_entropy_bits(q) * f_ec
        }
        LeakModel::Aep { d_a } => {
            if d_a < 1 {
                return Err(Error::OutOfRange("d_A must be positive".into()));
            }
            let eta = 2.0 + (d_a as f64).sqrt();
            nf * binary_entropy_bits(q) + nf.sqrt() * aep_delta(eps_prime / 2.0, eta)
        }
    };
    let penalty =
        (8.0 / (eps_prime * eps_prime) + 2.0 / (2.0 - eps_prime)).log2() + (1.0 / eps_ir).log2();
    Ok(hmax + penalty)
}

/// Outcome of a finite-size computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteKey {
    pub key: KeyLength,
    /// `ℓ / n`.
    pub rate: f64,
    /// Smooth min-entropy bound that entered the key length.
    pub hmin_bits: f64,
    pub leak_bits: f64,
}

/// Upper bound on the key-round phase error: the test-round X error rate
/// widened by the Serfling deviation for a sample of `m` out of `n + m`.
pub fn phase_error_upper(spec: &FiniteRunSpec, eps_smooth: f64) -> Result<f64> {
    let total = (spec.n + spec.m) as f64;
    let dev = serfling_deviation(total, spec.m as f64, eps_smooth)?;
    Ok((spec.q_x + dev).min(0.5))
}

/// BB84 key length from the uncertainty relation with overlap `c = 1/2`:
/// `H_min^ε(Z|E) >= n (1 - h(Q_X^up))`, then leftover hashing.
pub fn eur_bb84_key_length(
    spec: &FiniteRunSpec,
    params: &SecurityParams,
    leak: LeakModel,
) -> Result<FiniteKey> {
    spec.validate()?;
    let q_up = phase_error_upper(spec, params.eps_smooth)?;
    let hmin = spec.n as f64 * (1.0 - binary_entropy_bits(q_up));
    let leak_bits = leak_ir_bound(spec.n, spec.q_z, params.eps_smooth, params.eps_ir, leak)?;
    let key = key_length_leftover(hmin, leak_bits, params.eps_pa);
    Ok(FiniteKey {
        key,
        rate: key.length as f64 / spec.n as f64,
        hmin_bits: hmin,
        leak_bits,
    })
}

/// Result of lifting a collective-attack key to coherent attacks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostselectionLift {
    pub key: KeyLength,
    pub eps: f64,
    /// `2 (d² - 1) log2(n + 1)`.
    pub penalty: f64,
}

/// `ε 2^{log_factor}`, through the log domain only when the factor itself
/// over- or underflows.
fn scaled_eps(eps: f64, log_factor: f64) -> f64 {
    let factor = log_factor.exp2();
    if factor.is_finite() && factor > 0.0 {
        eps * factor
    } else {
        (log_factor + eps.log2()).exp2()
    }
}

/// `ε' = (n + 1)^{d² - 1} ε` and `ℓ' = ℓ - 2 (d² - 1) log2(n + 1)`.
pub fn postselection_lift(length: f64, eps: f64, n: u64, d: usize) -> Result<PostselectionLift> {
    if d < 1 || n < 1 {
        return Err(Error::OutOfRange(format!(
            "need d >= 1 and n >= 1, got d = {d}, n = {n}"
        )));
    }
    let k = (d * d - 1) as f64;
    let log_n1 = (n as f64 + 1.0).log2();
    let penalty = 2.0 * k * log_n1;
    Ok(PostselectionLift {
        key: KeyLength::from_raw(length - penalty),
        eps: scaled_eps(eps, k * log_n1),
        penalty,
    })
}

/// `c_EAT = 2 (log2(1 + 2 d_A) + ⌈‖∇f‖_∞⌉) sqrt(1 - 2 log2(ε p_Ω))`.
pub fn eat_constant(d_a: usize, grad_norm: f64, eps: f64, p_omega: f64) -> Result<f64> {
    check_prob("eps", eps)?;
    if !(p_omega > 0.0 && p_omega <= 1.0) {
        return Err(Error::OutOfRange(format!(
            "p_Omega = {p_omega} must lie in (0, 1]"
        )));
    }
    if d_a < 1 || !(grad_norm >= 0.0) || !grad_norm.is_finite() {
        return Err(Error::OutOfRange(
            "need d_A >= 1 and a finite gradient norm".into(),
        ));
    }
    Ok(2.0
        * ((1.0 + 2.0 * d_a as f64).log2() + grad_norm.ceil())
        * (1.0 - 2.0 * (eps * p_omega).log2()).sqrt())
}

/// `n h - c_EAT sqrt(n)`.
pub fn eat_rate(n: u64, h: f64, d_a: usize, grad_norm: f64, eps: f64, p_omega: f64) -> Result<f64> {
    let c = eat_constant(d_a, grad_norm, eps, p_omega)?;
    let nf = n as f64;
    Ok(nf * h - c * nf.sqrt())
}
