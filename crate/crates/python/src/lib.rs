//! Python bindings: BB84 scenarios, asymptotic rates, finite-size key
//! lengths, decoy bounds and the closed-form helpers.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use keyforge::asymptotic::{
    self as asym, ErrorCorrection, FrankWolfeOptions, GaussRadauOptions, RateMethod,
};
use keyforge::decoy as dec;
use keyforge::finitekey as fk;
use keyforge::protocol::{Bb84, Granularity};
use keyforge::sdp::SolverOptions;

create_exception!(keyforge_py, KeyforgeError, PyException);

fn wrap<T>(r: keyforge::Result<T>) -> PyResult<T> {
    r.map_err(|e| KeyforgeError::new_err(e.to_string()))
}

/// A protocol instance.
#[pyclass(frozen, module = "keyforge_py")]
pub struct Scenario {
    inner: keyforge::protocol::Scenario,
    qber_z: Option<f64>,
}

#[pymethods]
impl Scenario {
    /// BB84 with error rate `q` (and `q_x` in the X basis when given).
    /// `efficiency[basis][outcome]` adds lossy detectors.
    #[staticmethod]
    #[pyo3(signature = (q, q_x=None, p_z=0.5, efficiency=None, coarse=false))]
    fn bb84(
        q: f64,
        q_x: Option<f64>,
        p_z: f64,
        efficiency: Option<[[f64; 2]; 2]>,
        coarse: bool,
    ) -> PyResult<Self> {
        let mut b = Bb84::new(q);
        b.q_x = q_x.unwrap_or(q);
        b.p_z = p_z;
        b.bob_efficiency = efficiency;
        if coarse {
            b.granularity = Granularity::Coarse;
        }
        Ok(Self {
            inner: wrap(b.scenario())?,
            qber_z: Some(q),
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn p_pass(&self) -> f64 {
        self.inner.p_pass()
    }

    #[getter]
    fn num_constraints(&self) -> usize {
        self.inner.constraints().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(d_a={}, d_b={}, constraints={})",
            self.inner.d_a(),
            self.inner.d_b(),
            self.inner.constraints().len()
        )
    }
}

/// Outcome of [`asymptotic_rate`].
#[pyclass(frozen, get_all, module = "keyforge_py")]
pub struct KeyRateReport {
    method: String,
    hae_bound: f64,
    error_correction: f64,
    rate: f64,
    clamped_rate: f64,
    certificate_residual: f64,
    iterations: usize,
    runtime_seconds: f64,
}

#[pymethods]
impl KeyRateReport {
    fn __repr__(&self) -> String {
        format!(
            "KeyRateReport(method={:?}, hae_bound={}, rate={})",
            self.method, self.hae_bound, self.rate
        )
    }
}

/// Certified asymptotic key rate. `method` is `frank_wolfe`, `gauss_radau`
/// or `min_entropy`; error correction uses the scenario QBER unless
/// `fine_error_correction` is set.
#[pyfunction]
#[pyo3(signature = (scenario, method="frank_wolfe", m=8, fine_error_correction=false))]
fn asymptotic_rate(
    py: Python<'_>,
    scenario: &Scenario,
    method: &str,
    m: usize,
    fine_error_correction: bool,
) -> PyResult<KeyRateReport> {
    let method = match method {
        "frank_wolfe" => RateMethod::FrankWolfe(FrankWolfeOptions::default()),
        "gauss_radau" => RateMethod::GaussRadau {
            m,
            options: GaussRadauOptions::default(),
        },
        "min_entropy" => RateMethod::MinEntropy(SolverOptions::default()),
        other => {
            return Err(KeyforgeError::new_err(format!("unknown method {other:?}")));
        }
    };
    let ec = match (fine_error_correction, scenario.qber_z) {
        (false, Some(q)) => ErrorCorrection::Qber(q),
        _ => ErrorCorrection::Fine,
    };
    let inner = &scenario.inner;
    let r = wrap(py.detach(|| asym::asymptotic_key_rate(inner, &method, ec)))?;
    Ok(KeyRateReport {
        method: r.method.into(),
        hae_bound: r.hae_bound,
        error_correction: r.error_correction,
        rate: r.rate.raw,
        clamped_rate: r.rate.clamped,
        certificate_residual: r.certificate_residual,
        iterations: r.iterations,
        runtime_seconds: r.runtime_seconds,
    })
}

/// Gauss–Radau nodes and weights on `(0, 1]`.
#[pyfunction]
fn gauss_radau_rule(m: usize) -> (Vec<f64>, Vec<f64>) {
    let r = asym::gauss_radau_rule(m);
    (r.nodes, r.weights)
}

#[pyfunction]
fn chsh_di_rate(s: f64, q: f64) -> PyResult<f64> {
    wrap(asym::chsh_di_rate(s, q))
}

#[pyfunction]
fn binary_entropy(q: f64) -> PyResult<f64> {
    wrap(fk::binary_entropy(q))
}

#[pyfunction]
fn serfling_bound(n: f64, m: f64, beta: f64) -> PyResult<f64> {
    wrap(fk::serfling_bound(n, m, beta))
}

#[pyfunction]
fn aep_delta(eps: f64, eta: f64) -> f64 {
    fk::aep_delta(eps, eta)
}

#[pyfunction]
#[pyo3(signature = (d_a, grad_norm, eps, p_omega=1.0))]
fn eat_constant(d_a: usize, grad_norm: f64, eps: f64, p_omega: f64) -> PyResult<f64> {
    wrap(fk::eat_constant(d_a, grad_norm, eps, p_omega))
}

/// BB84 key length from the uncertainty relation. Returns
/// `(length, rate, hmin_bits, leak_bits)`.
#[pyfunction]
#[pyo3(signature = (n, m, q_x, q_z, eps=1e-10, f_ec=fk::DEFAULT_F_EC))]
fn eur_bb84_key_length(
    n: u64,
    m: u64,
    q_x: f64,
    q_z: f64,
    eps: f64,
    f_ec: f64,
) -> PyResult<(u64, f64, f64, f64)> {
    let spec = fk::FiniteRunSpec {
        n,
        m,
        q_x,
        q_z,
        d_a: 2,
        d: 4,
    };
    let params = wrap(fk::SecurityParams::uniform(eps))?;
    let k = wrap(fk::eur_bb84_key_length(
        &spec,
        &params,
        fk::LeakModel::Plain { f_ec },
    ))?;
    Ok((k.key.length, k.rate, k.hmin_bits, k.leak_bits))
}

/// Coherent-attack lift of a key length. Returns `(length, eps, penalty)`.
#[pyfunction]
fn postselection_lift(length: f64, eps: f64, n: u64, d: usize) -> PyResult<(u64, f64, f64)> {
    let l = wrap(fk::postselection_lift(length, eps, n, d))?;
    Ok((l.key.length, l.eps, l.penalty))
}

/// Observed decoy-state statistics, signal intensity first.
#[pyclass(frozen, module = "keyforge_py")]
pub struct DecoyModel {
    inner: dec::DecoyModel,
}

#[pymethods]
impl DecoyModel {
    #[new]
    #[pyo3(signature = (intensities, gains, error_gains, vacuum_gain=None, cutoff=None))]
    fn new(
        intensities: Vec<f64>,
        gains: Vec<f64>,
        error_gains: Vec<f64>,
        vacuum_gain: Option<f64>,
        cutoff: Option<usize>,
    ) -> PyResult<Self> {
        let mut inner = wrap(dec::DecoyModel::new(intensities, gains, error_gains))?;
        if let Some(c) = cutoff {
            inner = wrap(inner.with_cutoff(c))?;
        }
        if let Some(v) = vacuum_gain {
            inner = wrap(inner.with_vacuum_gain(v))?;
        }
        Ok(Self { inner })
    }

    /// `(y1_lower, e1_upper)`.
    fn bounds(&self) -> PyResult<(f64, f64)> {
        let b = wrap(dec::decoy_lp_bounds(&self.inner))?;
        Ok((b.y1_lower, b.e1_upper))
    }

    #[pyo3(signature = (q_z, q_x1_upper=None, f_ec=1.0))]
    fn rate(&self, q_z: f64, q_x1_upper: Option<f64>, f_ec: f64) -> PyResult<f64> {
        wrap(dec::decoy_asymptotic_rate(
            &self.inner,
            q_x1_upper,
            q_z,
            f_ec,
        ))
    }
}

/// Registers every class and function on `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("KeyforgeError", m.py().get_type::<KeyforgeError>())?;
    m.add_class::<Scenario>()?;
    m.add_class::<KeyRateReport>()?;
    m.add_class::<DecoyModel>()?;
    m.add_function(wrap_pyfunction!(asymptotic_rate, m)?)?;
    m.add_function(wrap_pyfunction!(gauss_radau_rule, m)?)?;
    m.add_function(wrap_pyfunction!(chsh_di_rate, m)?)?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(serfling_bound, m)?)?;
    m.add_function(wrap_pyfunction!(aep_delta, m)?)?;
    m.add_function(wrap_pyfunction!(eat_constant, m)?)?;
    m.add_function(wrap_pyfunction!(eur_bb84_key_length, m)?)?;
    m.add_function(wrap_pyfunction!(postselection_lift, m)?)?;
    Ok(())
}

#[pymodule]
fn keyforge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
