//! The perturbed objective `f_ε(ρ) = D(G_ε(ρ) || Z(G_ε(ρ)))` and its gradient.

use crate::error::{Error, Result};
use crate::linalg::{HermitianOperator, DEFAULT_CLAMP};
use crate::protocol::{KeyChannel, Scenario};

/// Default white-noise weight mixed into `G`.
pub const DEFAULT_PERTURBATION: f64 = 1e-10;

/// Largest admissible perturbation `1 / (e (d' - 1))`.
pub fn max_perturbation(d_out: usize) -> f64 {
    1.0 / (std::f64::consts::E * (d_out.max(2) - 1) as f64)
}

/// `ζ_ε = 2 ε (d'-1) log2(d' / (ε (d'-1)))`.
pub fn zeta(eps: f64, d_out: usize) -> f64 {
    let k = (d_out.max(2) - 1) as f64;
    2.0 * eps * k * (d_out as f64 / (eps * k)).log2()
}

fn entropy_and_log(sigma: &HermitianOperator, clamp: f64) -> (f64, HermitianOperator) {
    let spec = sigma.eig();
    let h = -spec
        .eigenvalues
        .iter()
        .map(|&x| if x > 0.0 { x * x.log2() } else { 0.0 })
        .sum::<f64>();
    (h, spec.map(|x| x.max(clamp).log2()))
}

/// `f_ε` and its gradient for one scenario, sharing the map `G`.
#[derive(Debug, Clone)]
pub struct Objective {
    channel: KeyChannel,
    eps: f64,
    clamp: f64,
}

impl Objective {
    pub fn new(scenario: &Scenario, eps: f64) -> Result<Self> {
        let channel = KeyChannel::new(scenario)?;
        let d_out = channel.output_dim();
        let max = max_perturbation(d_out);
        if !(eps > 0.0 && eps <= max) {
            return Err(Error::PerturbationOutOfRange { eps, max });
        }
        let clamp = DEFAULT_CLAMP.min(0.5 * eps / d_out as f64);
        Ok(Self {
            channel,
            eps,
            clamp,
        })
    }

    pub fn channel(&self) -> &KeyChannel {
        &self.channel
    }

    pub fn perturbation(&self) -> f64 {
        self.eps
    }

    pub fn output_dim(&self) -> usize {
        self.channel.output_dim()
    }

    /// Correction `ζ_ε` for this map.
    pub fn zeta(&self) -> f64 {
        zeta(self.eps, self.output_dim())
    }

    /// `G_ε(ρ) = (1-ε) G(ρ) + ε 1/d'`.
    pub fn perturbed_map(&self, rho: &HermitianOperator) -> Result<HermitianOperator> {
        let g = self.channel.apply(rho)?;
        let d = self.output_dim();
        Ok(&g.scale(1.0 - self.eps) + &HermitianOperator::identity(d).scale(self.eps / d as f64))
    }

    /// `f_ε(ρ) = H(Z(G_ε)) - H(G_ε)` in bits.
    pub fn value(&self, rho: &HermitianOperator) -> Result<f64> {
        let g = self.perturbed_map(rho)?;
        let zg = self.channel.pinch(&g)?;
        let (h_g, _) = entropy_and_log(&g, self.clamp);
        let (h_zg, _) = entropy_and_log(&zg, self.clamp);
        Ok((h_zg - h_g).max(0.0))
    }

    /// Value and gradient `(1-ε) G^†(log2 G_ε(ρ) - log2 Z(G_ε(ρ)))`.
    ///
    /// The gradient is returned as the Hermitian operator `∇` with
    /// `f(ρ + tΔ) ≈ f(ρ) + t Tr(Δ ∇)`.
    pub fn value_and_gradient(&self, rho: &HermitianOperator) -> Result<(f64, HermitianOperator)> {
        let g = self.perturbed_map(rho)?;
        let zg = self.channel.pinch(&g)?;
        let (h_g, log_g) = entropy_and_log(&g, self.clamp);
        let (h_zg, log_zg) = entropy_and_log(&zg, self.clamp);
        let grad = self
            .channel
            .adjoint(&(&log_g - &log_zg))?
            .scale(1.0 - self.eps);
        Ok(((h_zg - h_g).max(0.0), grad))
    }

    pub fn gradient(&self, rho: &HermitianOperator) -> Result<HermitianOperator> {
        Ok(self.value_and_gradient(rho)?.1)
    }
}

/// `f_ε(ρ)` for `scenario`.
pub fn objective_f(rho: &HermitianOperator, scenario: &Scenario, eps: f64) -> Result<f64> {
    Objective::new(scenario, eps)?.value(rho)
}

/// Gradient of `f_ε` at `ρ` for `scenario`.
pub fn gradient_f(
    rho: &HermitianOperator,
    scenario: &Scenario,
    eps: f64,
) -> Result<HermitianOperator> {
    Objective::new(scenario, eps)?.gradient(rho)
}
