//! TOML configuration: raw schema, path-aware validation, and conversion to
//! runnable tasks.

use std::fmt;

use keyforge::asymptotic::{ErrorCorrection, FrankWolfeOptions, GaussRadauOptions, RateMethod};
use keyforge::decoy::DecoyModel;
use keyforge::finitekey::{FiniteRunSpec, LeakModel, SecurityParams, DEFAULT_F_EC};
use keyforge::linalg::{CMatrix, CVector, ComplexScalar, HermitianOperator};
use keyforge::protocol::{
    fidelity_constraint, joint_probability_constraints, Bb84, Granularity, ObservableConstraint,
    Povm, Scenario,
};
use keyforge::sdp::SolverOptions;
use serde::Deserialize;

/// Row-major matrix of `[re, im]` pairs.
pub type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: Option<ScenarioSection>,
    pub method: Option<MethodSection>,
    pub finite: Option<FiniteSection>,
    pub decoy: Option<DecoySection>,
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Bb84,
    Custom,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub protocol: Protocol,
    /// BB84: common error rate for both bases.
    pub qber: Option<f64>,
    pub q_z: Option<f64>,
    pub q_x: Option<f64>,
    pub p_z: Option<f64>,
    pub granularity: Option<GranularityName>,
    pub d_a: Option<usize>,
    pub d_b: Option<usize>,
    pub povms_a: Option<Vec<Vec<RawMatrix>>>,
    pub povms_b: Option<Vec<Vec<RawMatrix>>>,
    pub basis_probs_a: Option<Vec<f64>>,
    pub basis_probs_b: Option<Vec<f64>>,
    pub keep: Option<Vec<[usize; 2]>>,
    pub key_basis: Option<usize>,
    /// Honest state whose joint outcome probabilities become constraints.
    pub state: Option<RawMatrix>,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
    pub imperfections: Option<Imperfections>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GranularityName {
    Fine,
    Coarse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKindName {
    #[default]
    Equality,
    AtLeast,
    Interval,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub op: RawMatrix,
    pub value: f64,
    #[serde(default)]
    pub kind: ConstraintKindName,
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Imperfections {
    #[serde(default)]
    pub noclick: bool,
    /// `efficiency[basis][outcome]` of Bob's detectors.
    pub efficiency: Option<[[f64; 2]; 2]>,
    pub fidelity: Option<FidelitySpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelitySpec {
    pub psi: Vec<[f64; 2]>,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    FrankWolfe,
    GaussRadau,
    MinEntropy,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, expecting = "a method name or a list of method names")]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(t) => vec![t.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EcName {
    Qber,
    Fine,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSection {
    pub kind: OneOrMany<MethodKind>,
    pub eps_stop: Option<f64>,
    pub max_iter: Option<usize>,
    pub eps_pert: Option<f64>,
    pub m: Option<usize>,
    pub error_correction: Option<EcName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Framework {
    Eur,
    Postselection,
    Eat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakName {
    Plain,
    Aep,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteSection {
    pub framework: Framework,
    pub n: u64,
    pub m_test: Option<u64>,
    pub eps_pa: Option<f64>,
    pub eps_ir: Option<f64>,
    pub eps_smooth: Option<f64>,
    /// Per-round dimension for the postselection penalty.
    pub d: Option<usize>,
    pub q_x: Option<f64>,
    pub q_z: Option<f64>,
    pub leak: Option<LeakName>,
    pub f_ec: Option<f64>,
    pub grad_norm: Option<f64>,
    pub p_omega: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoySection {
    pub intensities: Vec<f64>,
    pub gains: Vec<f64>,
    pub error_gains: Vec<f64>,
    pub vacuum_gain: Option<f64>,
    pub cutoff: Option<usize>,
    pub q_z: Option<f64>,
    pub q_x1_upper: Option<f64>,
    pub f_ec: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    Asymptotic,
    Finite,
    Decoy,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Dotted path into this document, e.g. `scenario.qber` or `decoy.gains[1]`.
    pub parameter: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub verb: Option<Verb>,
}

/// One problem with the configuration, located by document path.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid(vec![Violation {
            path: path.into(),
            message: message.into(),
        }])
    }
}

/// Parses TOML text into a document tree.
pub fn parse_document(text: &str) -> Result<toml::Value, ConfigError> {
    text.parse::<toml::Table>()
        .map(toml::Value::Table)
        .map_err(|e| {
            let msg = e.message().to_string();
            ConfigError::at("<document>", msg)
        })
}

/// Deserializes a document tree, reporting the path of the first schema error.
pub fn from_document(doc: toml::Value) -> Result<Config, ConfigError> {
    serde_path_to_error::deserialize(doc).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." {
            "<document>".into()
        } else {
            path
        };
        // toml appends the location on later lines; the path already has it
        let msg = e.into_inner().to_string();
        ConfigError::at(path, msg.lines().next().unwrap_or_default().to_string())
    })
}

/// Sets `value` at a dotted path such as `finite.n` or `decoy.gains[0]`.
/// Integers stay integers when the existing entry is one.
pub fn set_path(doc: &mut toml::Value, path: &str, value: f64) -> Result<(), String> {
    let mut node = doc;
    for part in path.split('.') {
        let (key, indices) = split_indices(part)?;
        node = node
            .get_mut(key)
            .ok_or_else(|| format!("no entry `{key}`"))?;
        for i in indices {
            node = node
                .get_mut(i)
                .ok_or_else(|| format!("index {i} out of range in `{part}`"))?;
        }
    }
    *node = match node {
        toml::Value::Integer(_) => toml::Value::Integer(value.round() as i64),
        toml::Value::Float(_) => toml::Value::Float(value),
        other => return Err(format!("entry is a {}, not a number", other.type_str())),
    };
    Ok(())
}

fn split_indices(part: &str) -> Result<(&str, Vec<usize>), String> {
    let (key, mut rest) = match part.find('[') {
        Some(i) => (&part[..i], &part[i..]),
        None => (part, ""),
    };
    let mut idx = Vec::new();
    while !rest.is_empty() {
        let close = rest
            .find(']')
            .filter(|_| rest.starts_with('['))
            .ok_or_else(|| format!("malformed index in `{part}`"))?;
        idx.push(
            rest[1..close]
                .parse()
                .map_err(|_| format!("malformed index in `{part}`"))?,
        );
        rest = &rest[close + 1..];
    }
    Ok((key, idx))
}

/// A fully validated unit of work.
#[derive(Debug, Clone)]
pub enum Task {
    Asymptotic(AsymptoticTask),
    Finite(FiniteTask),
    Decoy(DecoyTask),
}

#[derive(Debug, Clone)]
pub struct AsymptoticTask {
    pub scenario: Scenario,
    pub methods: Vec<RateMethod>,
    pub ec: ErrorCorrection,
}

#[derive(Debug, Clone)]
pub enum FiniteKind {
    Eur,
    Postselection { d: usize },
    Eat { grad_norm: f64, p_omega: f64 },
}

#[derive(Debug, Clone)]
pub struct FiniteTask {
    pub kind: FiniteKind,
    pub spec: FiniteRunSpec,
    pub params: SecurityParams,
    pub leak: LeakModel,
    /// Entropy source for frameworks built on an asymptotic bound.
    pub asymptotic: Option<AsymptoticTask>,
}

#[derive(Debug, Clone)]
pub struct DecoyTask {
    pub model: DecoyModel,
    pub q_z: f64,
    pub q_x1_upper: Option<f64>,
    pub f_ec: f64,
}

/// Collects violations while walking the configuration.
#[derive(Default)]
struct Checker {
    found: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.found.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    fn require<'a, T>(&mut self, v: &'a Option<T>, path: &str) -> Option<&'a T> {
        if v.is_none() {
            self.push(path, "required");
        }
        v.as_ref()
    }

    fn prob(&mut self, v: f64, path: &str, lo: f64, hi: f64) -> f64 {
        if !(lo..=hi).contains(&v) {
            self.push(path, format!("{v} outside [{lo}, {hi}]"));
        }
        v
    }

    fn eps(&mut self, v: f64, path: &str) -> f64 {
        if !(v > 0.0 && v < 1.0) {
            self.push(path, format!("{v} outside (0, 1)"));
        }
        v
    }

    fn lift<T>(&mut self, path: &str, r: keyforge::Result<T>) -> Option<T> {
        match r {
            Ok(t) => Some(t),
            Err(e) => {
                self.push(path, e.to_string());
                None
            }
        }
    }

    fn finish<T>(self, t: Option<T>) -> Result<T, ConfigError> {
        match (self.found.is_empty(), t) {
            (true, Some(t)) => Ok(t),
            (true, None) => Err(ConfigError::at("<document>", "invalid configuration")),
            (false, _) => Err(ConfigError::Invalid(self.found)),
        }
    }
}

fn matrix(ck: &mut Checker, raw: &RawMatrix, path: &str) -> Option<CMatrix> {
    let n = raw.len();
    if n == 0 || raw.iter().any(|row| row.len() != n) {
        ck.push(path, "matrix must be square and nonempty");
        return None;
    }
    if raw.iter().flatten().flatten().any(|x| !x.is_finite()) {
        ck.push(path, "non-finite entry");
        return None;
    }
    Some(CMatrix::from_fn(n, n, |i, j| {
        ComplexScalar::new(raw[i][j][0], raw[i][j][1])
    }))
}

fn hermitian(ck: &mut Checker, raw: &RawMatrix, path: &str) -> Option<HermitianOperator> {
    let m = matrix(ck, raw, path)?;
    ck.lift(path, HermitianOperator::new(m))
}

fn povms(ck: &mut Checker, raw: &[Vec<RawMatrix>], path: &str) -> Option<Vec<Povm>> {
    let mut out = Vec::new();
    let mut ok = true;
    for (i, p) in raw.iter().enumerate() {
        let elems: Vec<_> = p
            .iter()
            .enumerate()
            .map(|(j, m)| hermitian(ck, m, &format!("{path}[{i}][{j}]")))
            .collect();
        match elems.into_iter().collect::<Option<Vec<_>>>() {
            Some(e) => match ck.lift(&format!("{path}[{i}]"), Povm::new(e)) {
                Some(p) => out.push(p),
                None => ok = false,
            },
            None => ok = false,
        }
    }
    ok.then_some(out)
}

fn check_dim(ck: &mut Checker, op: &HermitianOperator, dim: usize, path: &str) -> bool {
    if op.dim() != dim {
        ck.push(path, format!("dimension {} but expected {dim}", op.dim()));
        return false;
    }
    true
}

fn constraint(
    ck: &mut Checker,
    c: &ConstraintSpec,
    dim: usize,
    path: &str,
) -> Option<ObservableConstraint> {
    let op = hermitian(ck, &c.op, &format!("{path}.op"))?;
    if !check_dim(ck, &op, dim, &format!("{path}.op")) {
        return None;
    }
    match c.kind {
        ConstraintKindName::Equality => Some(ObservableConstraint::equality(op, c.value)),
        ConstraintKindName::AtLeast => Some(ObservableConstraint::at_least(op, c.value)),
        ConstraintKindName::Interval => {
            let hw = ck.require(&c.half_width, &format!("{path}.half_width"))?;
            ck.lift(path, ObservableConstraint::interval(op, c.value, *hw))
        }
    }
}

/// BB84 error rates `(q_z, q_x)` from `qber` or the per-basis overrides.
fn bb84_rates(ck: &mut Checker, s: &ScenarioSection) -> (f64, f64) {
    let q = s.qber;
    let q_z = s.q_z.or(q);
    let q_x = s.q_x.or(q);
    if q_z.is_none() || q_x.is_none() {
        ck.push(
            "scenario.qber",
            "required unless both q_z and q_x are given",
        );
    }
    let path = |own: Option<f64>, name: &str| match own {
        Some(_) => format!("scenario.{name}"),
        None => "scenario.qber".to_string(),
    };
    let q_z = ck.prob(q_z.unwrap_or(0.0), &path(s.q_z, "q_z"), 0.0, 0.5);
    let q_x = ck.prob(q_x.unwrap_or(0.0), &path(s.q_x, "q_x"), 0.0, 0.5);
    ck.found.dedup();
    (q_z, q_x)
}

fn scenario(ck: &mut Checker, s: &ScenarioSection) -> Option<Scenario> {
    let imp = s.imperfections.clone().unwrap_or(Imperfections {
        noclick: false,
        efficiency: None,
        fidelity: None,
    });
    let (built, dim) = match s.protocol {
        Protocol::Bb84 => {
            for (name, set) in [
                ("d_a", s.d_a.is_some()),
                ("d_b", s.d_b.is_some()),
                ("povms_a", s.povms_a.is_some()),
                ("povms_b", s.povms_b.is_some()),
                ("basis_probs_a", s.basis_probs_a.is_some()),
                ("basis_probs_b", s.basis_probs_b.is_some()),
                ("keep", s.keep.is_some()),
                ("key_basis", s.key_basis.is_some()),
                ("state", s.state.is_some()),
            ] {
                if set {
                    ck.push(
                        format!("scenario.{name}"),
                        "only valid with protocol = \"custom\"",
                    );
                }
            }
            let (q_z, q_x) = bb84_rates(ck, s);
            let mut b = Bb84::new(q_z);
            b.q_x = q_x;
            b.p_z = ck.prob(s.p_z.unwrap_or(0.5), "scenario.p_z", 0.0, 1.0);
            b.granularity = match s.granularity {
                Some(GranularityName::Coarse) => Granularity::Coarse,
                _ => Granularity::Fine,
            };
            if let Some(eta) = imp.efficiency {
                for (y, row) in eta.iter().enumerate() {
                    for (k, e) in row.iter().enumerate() {
                        ck.prob(
                            *e,
                            &format!("scenario.imperfections.efficiency[{y}][{k}]"),
                            0.0,
                            1.0,
                        );
                    }
                }
            }
            if imp.noclick || imp.efficiency.is_some() {
                b.bob_efficiency = Some(imp.efficiency.unwrap_or([[1.0; 2]; 2]));
            }
            if !ck.found.is_empty() {
                return None;
            }
            let dim = if b.bob_efficiency.is_some() { 6 } else { 4 };
            (ck.lift("scenario", b.scenario()), dim)
        }
        Protocol::Custom => {
            for (name, set) in [
                ("qber", s.qber.is_some()),
                ("q_z", s.q_z.is_some()),
                ("q_x", s.q_x.is_some()),
                ("p_z", s.p_z.is_some()),
                ("granularity", s.granularity.is_some()),
                ("imperfections.noclick", imp.noclick),
                ("imperfections.efficiency", imp.efficiency.is_some()),
            ] {
                if set {
                    ck.push(
                        format!("scenario.{name}"),
                        "only valid with protocol = \"bb84\"",
                    );
                }
            }
            let d_a = *ck.require(&s.d_a, "scenario.d_a")?;
            let d_b = *ck.require(&s.d_b, "scenario.d_b")?;
            let dim = d_a * d_b;
            let pa = povms(ck, ck_req(&s.povms_a), "scenario.povms_a");
            let pb = povms(ck, ck_req(&s.povms_b), "scenario.povms_b");
            ck.require(&s.povms_a, "scenario.povms_a");
            ck.require(&s.povms_b, "scenario.povms_b");
            let keep = ck.require(&s.keep, "scenario.keep").cloned();
            let mut constraints = Vec::new();
            if let (Some(pa), Some(pb)) = (&pa, &pb) {
                for (i, p) in pa.iter().enumerate() {
                    check_dim(ck, p.element(0), d_a, &format!("scenario.povms_a[{i}]"));
                }
                for (i, p) in pb.iter().enumerate() {
                    check_dim(ck, p.element(0), d_b, &format!("scenario.povms_b[{i}]"));
                }
                if let Some(raw) = &s.state {
                    if let Some(rho) = hermitian(ck, raw, "scenario.state") {
                        if check_dim(ck, &rho, dim, "scenario.state") && ck.found.is_empty() {
                            constraints = joint_probability_constraints(pa, pb, &rho);
                        }
                    }
                }
            }
            for (i, c) in s.constraints.iter().enumerate() {
                if let Some(c) = constraint(ck, c, dim, &format!("scenario.constraints[{i}]")) {
                    constraints.push(c);
                }
            }
            let (pa, pb, keep) = (pa?, pb?, keep?);
            let uniform = |n: usize| vec![1.0 / n as f64; n];
            let probs_a = s.basis_probs_a.clone().unwrap_or_else(|| uniform(pa.len()));
            let probs_b = s.basis_probs_b.clone().unwrap_or_else(|| uniform(pb.len()));
            let alphabet = keep
                .iter()
                .filter_map(|[x, _]| pa.get(*x).map(Povm::len))
                .max()
                .unwrap_or(1);
            let kept: Vec<(usize, usize)> = keep.iter().map(|[x, y]| (*x, *y)).collect();
            if !ck.found.is_empty() {
                return None;
            }
            let built = Scenario::builder(d_a, d_b)
                .alice_povms(pa)
                .bob_povms(pb)
                .basis_probabilities(probs_a, probs_b)
                .keep(kept)
                .key_map(alphabet, |_, a, _| Some(a))
                .key_basis(s.key_basis.unwrap_or(0))
                .constraints(constraints)
                .build();
            (ck.lift("scenario", built), dim)
        }
    };
    let mut built = built?;
    if let Some(fid) = &imp.fidelity {
        let path = "scenario.imperfections.fidelity";
        if fid.psi.len() != dim {
            ck.push(
                format!("{path}.psi"),
                format!("length {} but expected {dim}", fid.psi.len()),
            );
            return None;
        }
        let psi = CVector::from_iterator(
            dim,
            fid.psi.iter().map(|[re, im]| ComplexScalar::new(*re, *im)),
        );
        let c = ck.lift(path, fidelity_constraint(&psi, fid.eps))?;
        built = ck.lift("scenario", built.with_constraint(c))?;
    }
    Some(built)
}

/// Avoids a second "required" message: `povms` on an absent list is empty.
fn ck_req(v: &Option<Vec<Vec<RawMatrix>>>) -> &[Vec<RawMatrix>] {
    v.as_deref().unwrap_or(&[])
}

fn methods(ck: &mut Checker, m: &MethodSection) -> Vec<RateMethod> {
    let solver = SolverOptions::default();
    let mut fw = FrankWolfeOptions::default();
    if let Some(e) = m.eps_stop {
        if !(e > 0.0) {
            ck.push("method.eps_stop", "must be positive");
        }
        fw.eps_stop = e;
    }
    if let Some(n) = m.max_iter {
        fw.max_iter = n;
    }
    if let Some(e) = m.eps_pert {
        if !(e > 0.0) {
            ck.push("method.eps_pert", "must be positive");
        }
        fw.eps_pert = e;
    }
    let order = m.m.unwrap_or(8);
    if order < 2 {
        ck.push("method.m", "must be at least 2");
    }
    let kinds = m.kind.to_vec();
    if kinds.is_empty() {
        ck.push("method.kind", "at least one method is required");
    }
    kinds
        .into_iter()
        .map(|k| match k {
            MethodKind::FrankWolfe => RateMethod::FrankWolfe(fw.clone()),
            MethodKind::GaussRadau => RateMethod::GaussRadau {
                m: order,
                options: GaussRadauOptions::default(),
            },
            MethodKind::MinEntropy => RateMethod::MinEntropy(solver.clone()),
        })
        .collect()
}

fn asymptotic(ck: &mut Checker, cfg: &Config) -> Option<AsymptoticTask> {
    let s = ck.require(&cfg.scenario, "scenario");
    let m = ck.require(&cfg.method, "method");
    let (s, m) = (s?, m?);
    let methods = methods(ck, m);
    let ec = match (m.error_correction, s.protocol) {
        (Some(EcName::Fine), _) | (None, Protocol::Custom) => ErrorCorrection::Fine,
        (Some(EcName::Qber), Protocol::Custom) => {
            ck.push(
                "method.error_correction",
                "\"qber\" needs protocol = \"bb84\"",
            );
            ErrorCorrection::Fine
        }
        (_, Protocol::Bb84) => ErrorCorrection::Qber(bb84_rates(&mut Checker::default(), s).0),
    };
    let scenario = scenario(ck, s)?;
    Some(AsymptoticTask {
        scenario,
        methods,
        ec,
    })
}

fn finite(ck: &mut Checker, cfg: &Config) -> Option<FiniteTask> {
    let f = ck.require(&cfg.finite, "finite")?;
    let bb84 = cfg
        .scenario
        .as_ref()
        .filter(|s| s.protocol == Protocol::Bb84)
        .map(|s| bb84_rates(&mut Checker::default(), s));
    let rate =
        |own: Option<f64>, path: &str, pick: fn((f64, f64)) -> f64, ck: &mut Checker| match own
            .or(bb84.map(pick))
        {
            Some(q) => ck.prob(q, path, 0.0, 0.5),
            None => {
                ck.push(path, "required unless the scenario is BB84");
                0.0
            }
        };
    let q_z = rate(f.q_z, "finite.q_z", |r| r.0, ck);
    let q_x = rate(f.q_x, "finite.q_x", |r| r.1, ck);
    let eps_pa = ck.eps(f.eps_pa.unwrap_or(1e-10), "finite.eps_pa");
    let eps_ir = ck.eps(f.eps_ir.unwrap_or(1e-10), "finite.eps_ir");
    let eps_smooth = ck.eps(f.eps_smooth.unwrap_or(1e-10), "finite.eps_smooth");
    let d_a = 2;
    let d = f.d.unwrap_or(4);
    let m_test = match (f.framework, f.m_test) {
        (_, Some(m)) => m,
        (Framework::Eur, None) => {
            ck.push("finite.m_test", "required for framework = \"eur\"");
            1
        }
        (_, None) => 1,
    };
    if f.framework == Framework::Eur && !(m_test >= 1 && m_test < f.n) {
        ck.push("finite.m_test", format!("need 1 <= m_test < n = {}", f.n));
    }
    if f.n < 1 {
        ck.push("finite.n", "must be positive");
    }
    let leak = match f.leak.unwrap_or(LeakName::Plain) {
        LeakName::Plain => {
            let f_ec = f.f_ec.unwrap_or(DEFAULT_F_EC);
            if !(f_ec >= 1.0) {
                ck.push("finite.f_ec", format!("{f_ec} must be at least 1"));
            }
            LeakModel::Plain { f_ec }
        }
        LeakName::Aep => LeakModel::Aep { d_a },
    };
    let kind = match f.framework {
        Framework::Eur => FiniteKind::Eur,
        Framework::Postselection => {
            if d < 2 {
                ck.push("finite.d", "must be at least 2");
            }
            FiniteKind::Postselection { d }
        }
        Framework::Eat => {
            let grad_norm = f.grad_norm.unwrap_or(1.0);
            if !(grad_norm >= 0.0 && grad_norm.is_finite()) {
                ck.push("finite.grad_norm", "must be finite and nonnegative");
            }
            let p_omega = f.p_omega.unwrap_or(1.0);
            if !(p_omega > 0.0 && p_omega <= 1.0) {
                ck.push("finite.p_omega", format!("{p_omega} outside (0, 1]"));
            }
            FiniteKind::Eat { grad_norm, p_omega }
        }
    };
    let asymptotic = match f.framework {
        Framework::Eur => None,
        _ => Some(asymptotic(ck, cfg)?),
    };
    let params = ck.lift("finite", SecurityParams::new(eps_pa, eps_ir, eps_smooth))?;
    Some(FiniteTask {
        kind,
        spec: FiniteRunSpec {
            n: f.n,
            m: m_test,
            q_x,
            q_z,
            d_a,
            d,
        },
        params,
        leak,
        asymptotic,
    })
}

fn decoy(ck: &mut Checker, cfg: &Config) -> Option<DecoyTask> {
    let d = ck.require(&cfg.decoy, "decoy")?;
    let mut model = ck.lift(
        "decoy",
        DecoyModel::new(
            d.intensities.clone(),
            d.gains.clone(),
            d.error_gains.clone(),
        ),
    )?;
    if let Some(c) = d.cutoff {
        model = ck.lift("decoy.cutoff", model.with_cutoff(c))?;
    }
    if let Some(v) = d.vacuum_gain {
        model = ck.lift("decoy.vacuum_gain", model.with_vacuum_gain(v))?;
    }
    // observed signal QBER unless given
    let q_z = d.q_z.unwrap_or_else(|| {
        let (g, e) = (d.gains[0], d.error_gains[0]);
        if g > 0.0 {
            (e / g).min(0.5)
        } else {
            0.0
        }
    });
    ck.prob(q_z, "decoy.q_z", 0.0, 0.5);
    if let Some(q) = d.q_x1_upper {
        ck.prob(q, "decoy.q_x1_upper", 0.0, 0.5);
    }
    let f_ec = d.f_ec.unwrap_or(1.0);
    if !(f_ec >= 1.0) {
        ck.push("decoy.f_ec", format!("{f_ec} must be at least 1"));
    }
    Some(DecoyTask {
        model,
        q_z,
        q_x1_upper: d.q_x1_upper,
        f_ec,
    })
}

/// Validates `cfg` for `verb` and builds the task, reporting every
/// violation found.
pub fn build_task(cfg: &Config, verb: Verb) -> Result<Task, ConfigError> {
    let mut ck = Checker::default();
    let task = match verb {
        Verb::Asymptotic => asymptotic(&mut ck, cfg).map(Task::Asymptotic),
        Verb::Finite => finite(&mut ck, cfg).map(Task::Finite),
        Verb::Decoy => decoy(&mut ck, cfg).map(Task::Decoy),
    };
    ck.finish(task)
}

/// Verb a sweep runs when `sweep.verb` is absent: finite, then decoy, then
/// asymptotic, by which sections are present.
pub fn default_sweep_verb(cfg: &Config) -> Verb {
    if cfg.finite.is_some() {
        Verb::Finite
    } else if cfg.decoy.is_some() {
        Verb::Decoy
    } else {
        Verb::Asymptotic
    }
}

/// Parameter values of a sweep, endpoints included.
pub fn sweep_points(s: &SweepSection) -> Vec<f64> {
    match s.steps {
        0 => Vec::new(),
        1 => vec![s.from],
        n => (0..n)
            .map(|i| s.from + (s.to - s.from) * i as f64 / (n - 1) as f64)
            // twelve significant digits hide binary noise such as 0.024999999999999998
            .map(|v| format!("{v:.11e}").parse().unwrap_or(v))
            .collect(),
    }
}
