//! Certified lower bounds on the asymptotic key rate.

mod feasible;
mod frank_wolfe;
mod gauss_radau;
mod hermitian_basis;
mod min_entropy;
mod objective;
mod quadrature;
mod rates;
mod report;

pub use frank_wolfe::{
    certified_bound_fw, feasible_point, frank_wolfe_minimize, FrankWolfeOptions, FrankWolfeState,
    FwCertificate,
};
pub use gauss_radau::{
    gauss_radau_bound, gauss_radau_constant, GaussRadauBound, GaussRadauOptions,
};
pub use min_entropy::{hmin_bound, MinEntropyBound};
pub use objective::{
    gradient_f, max_perturbation, objective_f, zeta, Objective, DEFAULT_PERTURBATION,
};
pub use quadrature::{gauss_radau_rule, QuadratureRule};
pub use rates::{chsh_di_rate, devetak_winter_rate, RatePair};
pub use report::{asymptotic_key_rate, ErrorCorrection, KeyRateReport, RateMethod};
