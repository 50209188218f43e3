//! Observables, emergeables, and measurement as a subject-device-environment
//! division event: device Born rule, hybrid transition matrix, collapse, and the
//! uncertainty relation.

use crate::correspondence::{DensityMatrix, StateVector};
use crate::dynamics::UnitaryFamily;
use crate::error::{Error, Result};
use crate::linalg::{
    c, commutator, configuration_projector, eigh, ensure_self_adjoint, ensure_unitary, identity,
    max_abs_diff, permutation_matrix, symmetrize, tensor, tensor_all, trace, CMatrix, Pvm,
    RMatrix, DEFAULT_TOL, I,
};
use crate::stochastic::ProbabilityVector;

/// Default relative tolerance for merging eigenvalues.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Agreement required between the hybrid and brute-force routes.
pub const ROUTE_TOL: f64 = 1e-10;

/// Tolerance for two-route identities that involve no integration.
pub const EXACT_TOL: f64 = 1e-12;

/// A self-adjoint observable with its clustered spectral decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    projectors: Vec<CMatrix>,
    eigenvectors: Vec<CMatrix>,
}

impl Observable {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Distinct eigenvalues, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    /// Orthonormal eigenvectors spanning each eigenspace, as columns.
    pub fn eigenvectors(&self, alpha: usize) -> Result<&CMatrix> {
        self.eigenvectors.get(alpha).ok_or(Error::OutOfRange {
            index: alpha,
            dim: self.eigenvectors.len(),
        })
    }

    pub fn outcomes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn rank(&self, alpha: usize) -> usize {
        self.eigenvectors[alpha].ncols()
    }

    pub fn pvm(&self) -> Result<Pvm> {
        Pvm::new(self.projectors.clone(), DEFAULT_TOL)
    }
}

/// Spectral decomposition with eigenvalues closer than `degeneracy_tol * max(range, 1)`
/// merged into one outcome. Each eigenvector is rephased so that its largest
/// component is real and positive.
pub fn spectral_decompose(m: &CMatrix, degeneracy_tol: f64) -> Result<Observable> {
    ensure_self_adjoint(m, DEFAULT_TOL)?;
    let n = m.nrows();
    let (values, vectors) = eigh(m);
    let range = values[n - 1] - values[0];
    let gap = degeneracy_tol * range.max(1.0);

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for k in 0..n {
        match clusters.last_mut() {
            Some(cl) if values[k] - values[*cl.last().unwrap()] <= gap => cl.push(k),
            _ => clusters.push(vec![k]),
        }
    }

    let mut eigenvalues = Vec::with_capacity(clusters.len());
    let mut projectors = Vec::with_capacity(clusters.len());
    let mut eigenvectors = Vec::with_capacity(clusters.len());
    for cl in &clusters {
        let cols: Vec<_> = cl
            .iter()
            .map(|&k| {
                let v = vectors.column(k).into_owned();
                let big = v.iter().copied().fold(c(0.0, 0.0), |a, z| if z.norm() > a.norm() + 1e-12 { z } else { a });
                v * (big.conj() / big.norm())
            })
            .collect();
        let basis = CMatrix::from_columns(&cols);
        projectors.push(&basis * basis.adjoint());
        eigenvectors.push(basis);
        eigenvalues.push(cl.iter().map(|&k| values[k]).sum::<f64>() / cl.len() as f64);
    }
    let mut rebuilt = CMatrix::zeros(n, n);
    for (a, p) in eigenvalues.iter().zip(&projectors) {
        rebuilt += p.scale(*a);
    }
    let residual = max_abs_diff(&rebuilt, m);
    if residual > 1e-9 * range.max(1.0) {
        return Err(Error::Internal(format!(
            "spectral reconstruction is off by {residual:.3e}"
        )));
    }
    Ok(Observable {
        matrix: m.clone(),
        eigenvalues,
        projectors,
        eigenvectors,
    })
}

/// `dA^H/dt` at `t = 0` by central differences, symmetrized.
pub fn emergeable_velocity(a: &CMatrix, family: &UnitaryFamily, dt: f64) -> Result<CMatrix> {
    if !(dt > 0.0) {
        return Err(Error::Precondition(format!("dt must be positive, got {dt}")));
    }
    if a.nrows() != family.n() {
        return Err(Error::Dimension("variable and family differ in size".into()));
    }
    let heis = |s: f64| -> Result<CMatrix> {
        let u = family.evaluate(s)?;
        Ok(u.adjoint() * a * u)
    };
    Ok(symmetrize(&(heis(dt)? - heis(-dt)?).unscale(2.0 * dt)))
}

/// A subject measured by a device, both recorded by an environment, at
/// `event_time`. Before the event the subject evolves by `pre_unitary` from
/// configuration `initial`; device and environment start in configuration `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementScenario {
    pub observable: Observable,
    pub pre_unitary: CMatrix,
    pub initial: usize,
    pub event_time: f64,
    pub device_dim: usize,
    pub environment_dim: usize,
    pub d_of: Vec<usize>,
    pub e_of: Vec<usize>,
    pub subject_post: UnitaryFamily,
    pub device_post: UnitaryFamily,
    pub environment_post: UnitaryFamily,
}

fn check_injective(map: &[usize], dim: usize, what: &str) -> Result<()> {
    let mut seen = vec![false; dim];
    for &x in map {
        if x >= dim {
            return Err(Error::OutOfRange { index: x, dim });
        }
        if std::mem::replace(&mut seen[x], true) {
            return Err(Error::Precondition(format!("{what} map is not injective")));
        }
    }
    Ok(())
}

fn swap_zero(dim: usize, target: usize) -> CMatrix {
    let mut perm: Vec<usize> = (0..dim).collect();
    perm.swap(0, target);
    permutation_matrix(&perm)
}

impl MeasurementScenario {
    /// Scenario with identity maps, minimal device and environment, and stationary
    /// post-event dynamics apart from the subject's.
    pub fn minimal(observable: Observable, pre_unitary: CMatrix, initial: usize, subject_post: UnitaryFamily) -> Result<Self> {
        let k = observable.outcomes();
        let s = Self {
            observable,
            pre_unitary,
            initial,
            event_time: 0.0,
            device_dim: k,
            environment_dim: k,
            d_of: (0..k).collect(),
            e_of: (0..k).collect(),
            subject_post,
            device_post: UnitaryFamily::stationary(k),
            environment_post: UnitaryFamily::stationary(k),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.observable.n();
        let k = self.observable.outcomes();
        ensure_unitary(&self.pre_unitary, DEFAULT_TOL)?;
        if self.pre_unitary.nrows() != n || self.subject_post.n() != n {
            return Err(Error::Dimension("subject operators do not match the observable".into()));
        }
        if self.initial >= n {
            return Err(Error::OutOfRange { index: self.initial, dim: n });
        }
        if self.d_of.len() != k || self.e_of.len() != k {
            return Err(Error::Dimension(format!("outcome maps need {k} entries")));
        }
        if self.device_post.n() != self.device_dim || self.environment_post.n() != self.environment_dim {
            return Err(Error::Dimension("device or environment family has the wrong size".into()));
        }
        check_injective(&self.d_of, self.device_dim, "device")?;
        check_injective(&self.e_of, self.environment_dim, "environment")
    }

    fn subject_state(&self) -> CMatrix {
        let n = self.pre_unitary.nrows();
        CMatrix::from_iterator(n, 1, self.pre_unitary.column(self.initial).iter().copied())
    }

    fn subject_relative(&self, t: f64) -> Result<CMatrix> {
        if t < self.event_time {
            return Err(Error::Precondition(format!(
                "t = {t} precedes the measurement at {}",
                self.event_time
            )));
        }
        self.subject_post.evaluate(t - self.event_time)
    }

    /// `sum_a P~_a (x) R^D_d(a) (x) R^E_e(a)`.
    pub fn interaction(&self) -> CMatrix {
        let dims = self.observable.n() * self.device_dim * self.environment_dim;
        let mut w = CMatrix::zeros(dims, dims);
        for (a, p) in self.observable.projectors().iter().enumerate() {
            w += tensor_all(
                [
                    p.clone(),
                    swap_zero(self.device_dim, self.d_of[a]),
                    swap_zero(self.environment_dim, self.e_of[a]),
                ]
                .iter(),
            );
        }
        w
    }

    /// Full subject-device-environment wave function at `t >= event_time`, indexed
    /// `(i * D + d) * E + e`.
    pub fn joint_state(&self, t: f64) -> Result<CMatrix> {
        let rel = t - self.event_time;
        let u_s = self.subject_relative(t)?;
        let post = tensor_all([u_s, self.device_post.evaluate(rel)?, self.environment_post.evaluate(rel)?].iter());
        let de = self.device_dim * self.environment_dim;
        let start = tensor(&self.subject_state(), &CMatrix::from_fn(de, 1, |r, _| c(if r == 0 { 1.0 } else { 0.0 }, 0.0)));
        Ok(post * self.interaction() * start)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementResult {
    /// Probability of each outcome, in eigenvalue order.
    pub outcome_probs: ProbabilityVector,
    /// Probability of each device configuration at the measurement.
    pub device_probs: ProbabilityVector,
    /// `Gamma^{SD}_{i, a}(t <- t')`, one column per outcome.
    pub hybrid_matrix: RMatrix,
    pub subject_probs: ProbabilityVector,
    pub conditional_densities: Vec<DensityMatrix>,
    pub mixed_density: DensityMatrix,
    /// Distance between the hybrid-matrix and composite routes to `subject_probs`.
    /// Zero up to rounding for nondegenerate observables. A degenerate outcome
    /// enters the hybrid matrix rank-averaged, while the composite keeps the
    /// projected state, so the two routes differ in general.
    pub brute_force_residual: f64,
}

fn internal(what: &str, residual: f64, tol: f64) -> Result<()> {
    if residual > tol {
        Err(Error::Internal(format!("{what} routes disagree by {residual:.3e}")))
    } else {
        Ok(())
    }
}

pub fn run_measurement(s: &MeasurementScenario, t: f64) -> Result<MeasurementResult> {
    s.validate()?;
    let n = s.observable.n();
    let k = s.observable.outcomes();
    let u = s.subject_relative(t)?;
    let psi = s.subject_state();

    // device Born rule, by projector norm and by eigenvector overlaps
    let mut outcome = vec![0.0; k];
    for (a, p) in s.observable.projectors().iter().enumerate() {
        outcome[a] = (p * &psi).norm_squared();
        let overlaps: f64 = (s.observable.eigenvectors[a].adjoint() * &psi).norm_squared();
        internal("device probability", (outcome[a] - overlaps).abs(), EXACT_TOL)?;
    }
    let outcome_probs = ProbabilityVector::new(outcome.clone())?;

    let at_event = s.joint_state(s.event_time)?;
    let mut device = vec![0.0; s.device_dim];
    for (idx, z) in at_event.iter().enumerate() {
        device[(idx / s.environment_dim) % s.device_dim] += z.norm_sqr();
    }
    for (a, &d) in s.d_of.iter().enumerate() {
        internal("device marginal", (device[d] - outcome[a]).abs(), EXACT_TOL)?;
    }
    let device_probs = ProbabilityVector::new(device)?;

    // hybrid matrix by trace form and by eigenvector moduli
    let mut hybrid = RMatrix::zeros(n, k);
    for a in 0..k {
        let basis = &s.observable.eigenvectors[a];
        let rank = basis.ncols() as f64;
        let moved = &u * basis;
        for i in 0..n {
            let traced = trace(&(u.adjoint() * configuration_projector(n, i) * &u * &s.observable.projectors[a])).re / rank;
            let moduli: f64 = moved.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>() / rank;
            internal("hybrid matrix", (traced - moduli).abs(), EXACT_TOL)?;
            hybrid[(i, a)] = traced;
        }
    }

    let subject: Vec<f64> = (0..n).map(|i| (0..k).map(|a| hybrid[(i, a)] * outcome[a]).sum()).collect();
    let joint = s.joint_state(t)?;
    let de = s.device_dim * s.environment_dim;
    let mut brute = vec![0.0; n];
    for (idx, z) in joint.iter().enumerate() {
        brute[idx / de] += z.norm_sqr();
    }
    let brute_force_residual = subject
        .iter()
        .zip(&brute)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let subject_probs = ProbabilityVector::new(subject)?;

    let conditional_densities = (0..k)
        .map(|a| Ok(collapse(s, a, t)?.density))
        .collect::<Result<Vec<_>>>()?;
    let mut mixture = CMatrix::zeros(n, n);
    let mut weighted = CMatrix::zeros(n, n);
    for a in 0..k {
        mixture += conditional_densities[a].matrix().scale(outcome[a]);
        weighted += s.observable.projectors[a].scale(outcome[a] / s.observable.rank(a) as f64);
    }
    let direct = &u * weighted * u.adjoint();
    internal("mixed density", max_abs_diff(&mixture, &direct), EXACT_TOL)?;
    let mixed_density = DensityMatrix::new(symmetrize(&mixture))?;

    Ok(MeasurementResult {
        outcome_probs,
        device_probs,
        hybrid_matrix: hybrid,
        subject_probs,
        conditional_densities,
        mixed_density,
        brute_force_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Collapsed {
    /// Only present for nondegenerate outcomes.
    pub state: Option<StateVector>,
    pub density: DensityMatrix,
}

/// Conditional state of the subject at `t` given outcome `alpha`.
pub fn collapse(s: &MeasurementScenario, alpha: usize, t: f64) -> Result<Collapsed> {
    let basis = s.observable.eigenvectors(alpha)?;
    let u = s.subject_relative(t)?;
    let rank = basis.ncols();
    let moved = &u * basis;
    let density = DensityMatrix::new(symmetrize(&(&moved * moved.adjoint()).unscale(rank as f64)))?;
    let state = if rank == 1 {
        Some(StateVector::new(moved.column(0).into_owned())?)
    } else {
        None
    };
    Ok(Collapsed { state, density })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

fn spread(x: &CMatrix, rho: &CMatrix) -> f64 {
    let mean = trace(&(x * rho)).re;
    let var = trace(&(x * x * rho)).re - mean * mean;
    if var < 0.0 && var >= -1e-12 {
        0.0
    } else {
        var.sqrt()
    }
}

/// `Delta A Delta B >= |tr(i[A, B] rho)| / 2`.
pub fn uncertainty_check(a: &Observable, b: &Observable, rho: &DensityMatrix) -> Result<UncertaintyCheck> {
    if a.n() != b.n() || a.n() != rho.n() {
        return Err(Error::Dimension("observables and state differ in size".into()));
    }
    let lhs = spread(a.matrix(), rho.matrix()) * spread(b.matrix(), rho.matrix());
    let rhs = 0.5 * trace(&(commutator(a.matrix(), b.matrix()) * I * rho.matrix())).norm();
    Ok(UncertaintyCheck {
        lhs,
        rhs,
        satisfied: lhs >= rhs - 1e-10,
    })
}

/// Observable whose eigenbasis is the configuration basis.
pub fn configuration_observable(values: &[f64]) -> Result<Observable> {
    let d = nalgebra::DVector::from_iterator(values.len(), values.iter().map(|&v| c(v, 0.0)));
    spectral_decompose(&CMatrix::from_diagonal(&d), DEGENERACY_TOL)
}

/// Identity-like check used by tests and the CLI: `sum_a P~_a = 1`.
pub fn completeness_residual(obs: &Observable) -> f64 {
    let sum = obs.projectors().iter().fold(CMatrix::zeros(obs.n(), obs.n()), |acc, p| acc + p);
    max_abs_diff(&sum, &identity(obs.n()))
}
