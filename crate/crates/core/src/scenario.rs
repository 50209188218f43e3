//! Declarative JSON scenarios and the density-matrix replay that executes their
//! events and answers their queries.

use std::collections::BTreeSet;

use serde::Deserialize;

use crate::composite::{CorrelationMap, FactorizationResult};
use crate::correspondence::{expectation_qm, DensityMatrix};
use crate::dynamics::UnitaryFamily;
use crate::error::{Error, Result};
use crate::interference::interference_report;
use crate::linalg::{
    c, eigh, identity, max_abs_diff, partial_trace, symmetrize, tensor, CMatrix, Keep, RMatrix,
};
use crate::measurement::{run_measurement, spectral_decompose, MeasurementScenario, DEGENERACY_TOL};
use crate::stochastic::{
    csv_histogram, format_real, propagate, sample_distribution, ProbabilityVector,
    StochasticMatrix,
};

pub const SCHEMA_VERSION: u32 = 1;

fn one() -> f64 {
    1.0
}

/// A matrix entry: a real number or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

pub type MatrixSpec = Vec<Vec<Entry>>;

pub fn to_cmatrix(spec: &MatrixSpec) -> Result<CMatrix> {
    let rows = spec.len();
    let cols = spec.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || spec.iter().any(|r| r.len() != cols) {
        return Err(Error::Dimension("matrix rows must be non-empty and of equal length".into()));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| match spec[i][j] {
        Entry::Real(x) => c(x, 0.0),
        Entry::Complex([re, im]) => c(re, im),
    }))
}

fn to_rmatrix(rows: &[Vec<f64>]) -> Result<RMatrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Dimension("matrix rows must be non-empty and of equal length".into()));
    }
    Ok(RMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum SystemSpec {
    #[serde(rename = "rotation2d")]
    Rotation2d {
        #[serde(default = "one")]
        omega: f64,
    },
    #[serde(rename = "exponential2x2")]
    Exponential2x2 {
        #[serde(default = "one")]
        tau: f64,
    },
    #[serde(rename = "constant_hamiltonian")]
    ConstantHamiltonian {
        h: MatrixSpec,
        #[serde(default = "one")]
        hbar: f64,
    },
    #[serde(rename = "piecewise_hamiltonian")]
    PiecewiseHamiltonian {
        breakpoints: Vec<f64>,
        hamiltonians: Vec<MatrixSpec>,
        #[serde(default = "one")]
        hbar: f64,
    },
    #[serde(rename = "sampled_grid")]
    SampledGrid { times: Vec<f64>, unitaries: Vec<MatrixSpec> },
    #[serde(rename = "composite")]
    Composite { factors: Vec<FactorSpec> },
    /// Transition matrices given directly at a list of times.
    #[serde(rename = "stochastic")]
    Stochastic {
        times: Vec<f64>,
        matrices: Vec<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub name: String,
    pub system: SystemSpec,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Configuration(usize),
    Distribution(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventSpec {
    Division {
        time: f64,
        #[serde(default)]
        environment_dim: Option<usize>,
        #[serde(default)]
        e_of: Option<Vec<usize>>,
    },
    Measurement {
        time: f64,
        observable: MatrixSpec,
        #[serde(default)]
        device_dim: Option<usize>,
        #[serde(default)]
        environment_dim: Option<usize>,
        #[serde(default)]
        d_of: Option<Vec<usize>>,
        #[serde(default)]
        e_of: Option<Vec<usize>>,
    },
}

impl EventSpec {
    pub fn time(&self) -> f64 {
        match self {
            EventSpec::Division { time, .. } | EventSpec::Measurement { time, .. } => *time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Probabilities,
    Density,
    Interference,
    Expectation,
    DeviceProbs,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Probabilities => "probabilities",
            Quantity::Density => "density",
            Quantity::Interference => "interference",
            Quantity::Expectation => "expectation",
            Quantity::DeviceProbs => "device_probs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    pub time: f64,
    pub quantity: Quantity,
    /// Monte Carlo draws for `probabilities`; exact values when absent.
    #[serde(default)]
    pub draws: Option<u64>,
    #[serde(default)]
    pub observable: Option<MatrixSpec>,
    #[serde(default)]
    pub t_prime: Option<f64>,
    #[serde(default)]
    pub j0: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_structural")]
    pub structural: f64,
    #[serde(default = "default_dictionary")]
    pub dictionary: f64,
}

fn default_structural() -> f64 {
    1e-10
}

fn default_dictionary() -> f64 {
    1e-12
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            structural: default_structural(),
            dictionary: default_dictionary(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub system: SystemSpec,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub events: Vec<EventSpec>,
    #[serde(default)]
    pub queries: Vec<QuerySpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        if s.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse {
                line: 1,
                message: format!(
                    "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                    s.schema_version
                ),
            });
        }
        if s.events.windows(2).any(|w| w[0].time() > w[1].time()) {
            return Err(Error::Precondition("event times must be non-decreasing".into()));
        }
        if s.events.iter().any(|e| !(e.time() >= 0.0)) {
            return Err(Error::Precondition("event times must be non-negative".into()));
        }
        Ok(s)
    }

    /// Built-in scenarios available by name.
    pub fn preset(name: &str) -> Option<Self> {
        let system = match name {
            "rotation2d" => SystemSpec::Rotation2d { omega: 1.0 },
            "exponential2x2" => SystemSpec::Exponential2x2 { tau: 1.0 },
            _ => return None,
        };
        Some(Self {
            schema_version: SCHEMA_VERSION,
            system,
            initial: Some(InitialSpec::Configuration(0)),
            events: Vec::new(),
            queries: Vec::new(),
            seed: 0,
            tolerances: Tolerances::default(),
        })
    }

    pub fn build(&self) -> Result<Model> {
        build_system(&self.system)
    }

    pub fn initial_distribution(&self, n: usize) -> Result<ProbabilityVector> {
        match &self.initial {
            None => ProbabilityVector::point(n, 0),
            Some(InitialSpec::Configuration(j)) => ProbabilityVector::point(n, *j),
            Some(InitialSpec::Distribution(p)) => {
                if p.len() != n {
                    return Err(Error::Dimension(format!(
                        "initial distribution has {} entries, system has {n}",
                        p.len()
                    )));
                }
                ProbabilityVector::new(p.clone())
            }
        }
    }

    /// Configuration index used where a pure initial condition is needed.
    pub fn initial_configuration(&self) -> usize {
        match &self.initial {
            Some(InitialSpec::Configuration(j)) => *j,
            _ => 0,
        }
    }
}

/// Dynamics described by a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Family {
        family: UnitaryFamily,
        /// Factor names and sizes when built as a product.
        factors: Vec<(String, usize)>,
        /// `tau` when built from the Gaussian-decay preset.
        decay_tau: Option<f64>,
    },
    /// Transition matrices at given times, stored unvalidated so that `verify` can
    /// report on them.
    Stochastic { times: Vec<f64>, matrices: Vec<RMatrix> },
}

impl Model {
    pub fn n(&self) -> usize {
        match self {
            Model::Family { family, .. } => family.n(),
            Model::Stochastic { matrices, .. } => matrices[0].nrows(),
        }
    }
}

fn build_family(spec: &SystemSpec) -> Result<UnitaryFamily> {
    match build_system(spec)? {
        Model::Family { family, .. } => Ok(family),
        Model::Stochastic { .. } => Err(Error::Precondition(
            "composite factors need unitary dynamics".into(),
        )),
    }
}

fn build_system(spec: &SystemSpec) -> Result<Model> {
    let plain = |family| Model::Family {
        family,
        factors: Vec::new(),
        decay_tau: None,
    };
    Ok(match spec {
        SystemSpec::Rotation2d { omega } => plain(UnitaryFamily::rotation_2d(*omega)),
        SystemSpec::Exponential2x2 { tau } => Model::Family {
            family: UnitaryFamily::gaussian_decay_2d(*tau)?,
            factors: Vec::new(),
            decay_tau: Some(*tau),
        },
        SystemSpec::ConstantHamiltonian { h, hbar } => {
            plain(UnitaryFamily::constant_hamiltonian(to_cmatrix(h)?, *hbar)?)
        }
        SystemSpec::PiecewiseHamiltonian {
            breakpoints,
            hamiltonians,
            hbar,
        } => plain(UnitaryFamily::piecewise_constant(
            breakpoints.clone(),
            hamiltonians.iter().map(to_cmatrix).collect::<Result<_>>()?,
            *hbar,
        )?),
        SystemSpec::SampledGrid { times, unitaries } => plain(UnitaryFamily::sampled_grid(
            times.clone(),
            unitaries.iter().map(to_cmatrix).collect::<Result<_>>()?,
        )?),
        SystemSpec::Composite { factors } => {
            let mut names = BTreeSet::new();
            for f in factors {
                if !names.insert(f.name.as_str()) {
                    return Err(Error::Precondition(format!("factor name '{}' is repeated", f.name)));
                }
            }
            let families = factors
                .iter()
                .map(|f| build_family(&f.system))
                .collect::<Result<Vec<_>>>()?;
            let sizes = factors
                .iter()
                .zip(&families)
                .map(|(f, fam)| (f.name.clone(), fam.n()))
                .collect();
            Model::Family {
                family: UnitaryFamily::product(families)?,
                factors: sizes,
                decay_tau: None,
            }
        }
        SystemSpec::Stochastic { times, matrices } => {
            if times.is_empty() || times.len() != matrices.len() {
                return Err(Error::Precondition("stochastic system needs one matrix per time".into()));
            }
            let matrices = matrices.iter().map(|m| to_rmatrix(m)).collect::<Result<Vec<_>>>()?;
            let n = matrices[0].nrows();
            if matrices.iter().any(|m| m.shape() != (n, n)) {
                return Err(Error::Dimension("transition matrices must be square and equal in size".into()));
            }
            Model::Stochastic {
                times: times.clone(),
                matrices,
            }
        }
    })
}

/// Summary of a measurement event, weighted over the pre-measurement state.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub time: f64,
    pub eigenvalues: Vec<f64>,
    pub outcome_probs: ProbabilityVector,
    pub device_probs: ProbabilityVector,
    pub d_of: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub rho: DensityMatrix,
    /// Measurement events applied so far, in order.
    pub measurements: Vec<MeasurementRecord>,
}

/// `Sum_i P_i rho P_i`, through the subject-environment composite and checked
/// against diagonal truncation.
fn divide(rho: &CMatrix, corr: &CorrelationMap) -> Result<CMatrix> {
    let (n, m) = (corr.subject_dim(), corr.environment_dim());
    let w = corr.interaction();
    let env0 = CMatrix::from_fn(m, m, |i, j| c(if i == 0 && j == 0 { 1.0 } else { 0.0 }, 0.0));
    let joint = &w * tensor(rho, &env0) * w.adjoint();
    let reduced = partial_trace(&joint, (n, m), Keep::First)?;
    let truncated = CMatrix::from_diagonal(&rho.diagonal());
    let residual = max_abs_diff(&reduced, &truncated);
    if residual > 1e-12 {
        return Err(Error::Internal(format!(
            "division routes disagree by {residual:.3e}"
        )));
    }
    Ok(reduced)
}

#[allow(clippy::too_many_arguments)]
fn measure(
    rho: &CMatrix,
    time: f64,
    observable: &MatrixSpec,
    device_dim: Option<usize>,
    environment_dim: Option<usize>,
    d_of: &Option<Vec<usize>>,
    e_of: &Option<Vec<usize>>,
) -> Result<(CMatrix, MeasurementRecord)> {
    let n = rho.nrows();
    let obs = spectral_decompose(&to_cmatrix(observable)?, DEGENERACY_TOL)?;
    if obs.n() != n {
        return Err(Error::Dimension("observable does not match the system".into()));
    }
    let k = obs.outcomes();
    let device_dim = device_dim.unwrap_or(k);
    let environment_dim = environment_dim.unwrap_or(k);
    let d_of = d_of.clone().unwrap_or_else(|| (0..k).collect());
    let e_of = e_of.clone().unwrap_or_else(|| (0..k).collect());

    // mix the pure-state runs over the eigen-decomposition of rho
    let (weights, vectors) = eigh(rho);
    let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
    let mut outcome = vec![0.0; k];
    let mut device = vec![0.0; device_dim];
    let mut mixed = CMatrix::zeros(n, n);
    for (j, w) in weights.iter().enumerate() {
        let w = w.max(0.0) / total;
        if w == 0.0 {
            continue;
        }
        let scenario = MeasurementScenario {
            observable: obs.clone(),
            pre_unitary: vectors.clone(),
            initial: j,
            event_time: time,
            device_dim,
            environment_dim,
            d_of: d_of.clone(),
            e_of: e_of.clone(),
            subject_post: UnitaryFamily::stationary(n),
            device_post: UnitaryFamily::stationary(device_dim),
            environment_post: UnitaryFamily::stationary(environment_dim),
        };
        let r = run_measurement(&scenario, time)?;
        for (acc, p) in outcome.iter_mut().zip(r.outcome_probs.as_slice()) {
            *acc += w * p;
        }
        for (acc, p) in device.iter_mut().zip(r.device_probs.as_slice()) {
            *acc += w * p;
        }
        mixed += r.mixed_density.matrix().scale(w);
    }
    let record = MeasurementRecord {
        time,
        eigenvalues: obs.eigenvalues().to_vec(),
        outcome_probs: ProbabilityVector::new(outcome)?,
        device_probs: ProbabilityVector::new(device)?,
        d_of,
    };
    Ok((symmetrize(&mixed), record))
}

/// Replays the events up to and including time `t` on the density matrix of a
/// unitary family.
pub fn replay(scenario: &Scenario, family: &UnitaryFamily, t: f64) -> Result<Snapshot> {
    let n = family.n();
    let p0 = scenario.initial_distribution(n)?;
    let mut rho = DensityMatrix::diagonal(&p0).into_matrix();
    let mut u_last = identity(n);
    let mut measurements = Vec::new();
    let evolve = |rho: &CMatrix, u_last: &CMatrix, to: f64| -> Result<(CMatrix, CMatrix)> {
        let u = family.evaluate(to)?;
        let rel = &u * u_last.adjoint();
        Ok((&rel * rho * rel.adjoint(), u))
    };
    for ev in scenario.events.iter().filter(|e| e.time() <= t) {
        let (evolved, u) = evolve(&rho, &u_last, ev.time())?;
        u_last = u;
        rho = match ev {
            EventSpec::Division {
                environment_dim,
                e_of,
                ..
            } => {
                let corr = match (environment_dim, e_of) {
                    (None, None) => CorrelationMap::identity(n),
                    (m, e) => CorrelationMap::new(
                        m.unwrap_or(n),
                        e.clone().unwrap_or_else(|| (0..n).collect()),
                    )?,
                };
                if corr.subject_dim() != n {
                    return Err(Error::Dimension("division map does not match the system".into()));
                }
                divide(&evolved, &corr)?
            }
            EventSpec::Measurement {
                time,
                observable,
                device_dim,
                environment_dim,
                d_of,
                e_of,
            } => {
                let (after, record) = measure(&evolved, *time, observable, *device_dim, *environment_dim, d_of, e_of)?;
                measurements.push(record);
                after
            }
        };
    }
    let (rho, _) = evolve(&rho, &u_last, t)?;
    Ok(Snapshot {
        rho: DensityMatrix::new(symmetrize(&rho))?,
        measurements,
    })
}

fn density_csv(rho: &CMatrix) -> String {
    let mut out = String::from("row,col,re,im\n");
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            let z = rho[(i, j)];
            out.push_str(&format!("{i},{j},{},{}\n", format_real(z.re), format_real(z.im)));
        }
    }
    out
}

/// One CSV table per query, named `query<k>_<quantity>.csv`.
pub fn run_queries(scenario: &Scenario, seed: u64) -> Result<Vec<(String, String)>> {
    let model = scenario.build()?;
    scenario
        .queries
        .iter()
        .enumerate()
        .map(|(k, q)| {
            let name = format!("query{k}_{}.csv", q.quantity.name());
            let csv = match &model {
                Model::Family { family, .. } => family_query(scenario, family, q, seed.wrapping_add(k as u64))?,
                Model::Stochastic { times, matrices } => {
                    stochastic_query(scenario, times, matrices, q, seed.wrapping_add(k as u64))?
                }
            };
            Ok((name, csv))
        })
        .collect()
}

fn probabilities_csv(p: &ProbabilityVector, draws: Option<u64>, seed: u64) -> Result<String> {
    match draws {
        Some(d) => Ok(csv_histogram(&sample_distribution(p, d, seed)?)),
        None => Ok(p.to_csv()),
    }
}

fn family_query(scenario: &Scenario, family: &UnitaryFamily, q: &QuerySpec, seed: u64) -> Result<String> {
    match q.quantity {
        Quantity::Probabilities => {
            let snap = replay(scenario, family, q.time)?;
            probabilities_csv(&snap.rho.probabilities()?, q.draws, seed)
        }
        Quantity::Density => Ok(density_csv(replay(scenario, family, q.time)?.rho.matrix())),
        Quantity::Expectation => {
            let a = q
                .observable
                .as_ref()
                .ok_or_else(|| Error::Precondition("expectation query needs an observable".into()))?;
            let snap = replay(scenario, family, q.time)?;
            let value = expectation_qm(&to_cmatrix(a)?, &snap.rho)?;
            Ok(format!("time,value\n{},{}\n", format_real(q.time), format_real(value)))
        }
        Quantity::DeviceProbs => {
            let mut snap = replay(scenario, family, q.time)?;
            let record = snap.measurements.pop().ok_or_else(|| {
                Error::Precondition(format!("no measurement precedes t = {}", q.time))
            })?;
            Ok(record.device_probs.to_csv())
        }
        Quantity::Interference => {
            let t_prime = q
                .t_prime
                .ok_or_else(|| Error::Precondition("interference query needs t_prime".into()))?;
            let j0 = q.j0.unwrap_or_else(|| scenario.initial_configuration());
            let r = interference_report(family, j0, q.time, t_prime)?;
            let mut out = String::from("row,col,gamma_actual,gamma_divided,discrepancy\n");
            let n = family.n();
            for i in 0..n {
                for j in 0..n {
                    out.push_str(&format!(
                        "{i},{j},{},{},{}\n",
                        format_real(r.gamma_actual.get(i, j)),
                        format_real(r.gamma_divided[(i, j)]),
                        format_real(r.discrepancy[(i, j)])
                    ));
                }
            }
            Ok(out)
        }
    }
}

fn stochastic_query(
    scenario: &Scenario,
    times: &[f64],
    matrices: &[RMatrix],
    q: &QuerySpec,
    seed: u64,
) -> Result<String> {
    if !scenario.events.is_empty() {
        return Err(Error::Precondition(
            "events need unitary dynamics; this system only lists transition matrices".into(),
        ));
    }
    let k = times.iter().position(|&t| t == q.time).ok_or_else(|| {
        Error::Precondition(format!("no transition matrix is given at t = {}", q.time))
    })?;
    let gamma = StochasticMatrix::new(matrices[k].clone())?;
    let p = propagate(&gamma, &scenario.initial_distribution(gamma.n())?)?;
    match q.quantity {
        Quantity::Probabilities => probabilities_csv(&p, q.draws, seed),
        Quantity::Expectation => {
            let a = q
                .observable
                .as_ref()
                .ok_or_else(|| Error::Precondition("expectation query needs an observable".into()))?;
            let a = to_cmatrix(a)?;
            let value = expectation_qm(&a, &DensityMatrix::diagonal(&p))?;
            Ok(format!("time,value\n{},{}\n", format_real(q.time), format_real(value)))
        }
        other => Err(Error::Precondition(format!(
            "query '{}' needs unitary dynamics",
            other.name()
        ))),
    }
}

/// Factor-wise transition matrices for two-factor composites.
pub fn composite_factorization(model: &Model, t: f64, tol: f64) -> Result<Option<FactorizationResult>> {
    match model {
        Model::Family { family, factors, .. } if factors.len() == 2 => {
            let sys = crate::composite::CompositeSystem::new(factors.clone(), family.clone())?;
            crate::composite::entanglement_factorization_test(&sys, t, tol).map(Some)
        }
        _ => Ok(None),
    }
}

/// Value column of an `index,value` CSV.
pub fn parse_index_value(csv: &str) -> Result<Vec<f64>> {
    csv.lines()
        .skip(1)
        .enumerate()
        .map(|(k, line)| {
            line.split(',')
                .nth(1)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| Error::Parse {
                    line: k + 2,
                    message: format!("malformed row '{line}'"),
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::StochasticMatrix;

    fn rotation_scenario(extra: &str) -> Scenario {
        Scenario::from_json(&format!(
            r#"{{"schema_version": 1, "system": {{"kind": "rotation2d", "omega": 1.0}},
                "initial": {{"configuration": 0}} {extra} }}"#
        ))
        .unwrap()
    }

    #[test]
    fn parsing_rejects_unknown_fields_and_versions() {
        assert!(Scenario::from_json(r#"{"schema_version": 1, "system": {"kind": "rotation2d"}, "extra": 1}"#).is_err());
        assert!(Scenario::from_json(r#"{"schema_version": 2, "system": {"kind": "rotation2d"}}"#).is_err());
        assert!(Scenario::from_json(r#"{"schema_version": 1, "system": {"kind": "rotation2d", "tau": 1}}"#).is_err());
        let err = Scenario::from_json("{\n\"schema_version\": 1,\n\"system\": 3}").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let ok = Scenario::from_json(
            r#"{"schema_version": 1, "system": {"kind": "constant_hamiltonian", "h": [[0, [0, -1]], [[0, 1], 0]]}}"#,
        )
        .unwrap();
        assert_eq!(ok.build().unwrap().n(), 2);
    }

    #[test]
    fn probabilities_follow_the_sinusoidal_column() {
        let s = rotation_scenario(r#", "queries": [{"time": 0.7, "quantity": "probabilities"}]"#);
        let out = run_queries(&s, 0).unwrap();
        let p = parse_index_value(&out[0].1).unwrap();
        let gamma = StochasticMatrix::sinusoidal(0.7);
        assert!((p[0] - gamma.get(0, 0)).abs() < 1e-15 && (p[1] - gamma.get(1, 0)).abs() < 1e-15);
    }

    #[test]
    fn division_event_makes_dynamics_divisible() {
        let s = rotation_scenario(
            r#", "events": [{"kind": "division", "time": 0.4}],
                "queries": [{"time": 1.1, "quantity": "probabilities"}]"#,
        );
        let p = parse_index_value(&run_queries(&s, 0).unwrap()[0].1).unwrap();
        let divided = StochasticMatrix::sinusoidal(0.7).compose(&StochasticMatrix::sinusoidal(0.4)).unwrap();
        assert!((p[0] - divided.get(0, 0)).abs() < 1e-14);
    }

    #[test]
    fn measurement_event_reports_device_probabilities() {
        let s = rotation_scenario(
            r#", "events": [{"kind": "measurement", "time": 0.0, "observable": [[0, 1], [1, 0]]}],
                "queries": [{"time": 0.5, "quantity": "device_probs"}]"#,
        );
        let p = parse_index_value(&run_queries(&s, 0).unwrap()[0].1).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stochastic_systems_answer_listed_times() {
        let s = Scenario::from_json(
            r#"{"schema_version": 1, "system": {"kind": "stochastic", "times": [1.0], "matrices": [[[0.25, 0.5], [0.75, 0.5]]]},
                "initial": {"distribution": [0.5, 0.5]},
                "queries": [{"time": 1.0, "quantity": "probabilities"}]}"#,
        )
        .unwrap();
        let p = parse_index_value(&run_queries(&s, 0).unwrap()[0].1).unwrap();
        assert_eq!(p, vec![0.375, 0.625]);
    }

    #[test]
    fn unordered_events_are_rejected() {
        let text = r#"{"schema_version": 1, "system": {"kind": "rotation2d"},
            "events": [{"kind": "division", "time": 1.0}, {"kind": "division", "time": 0.5}]}"#;
        assert!(Scenario::from_json(text).is_err());
    }
}
