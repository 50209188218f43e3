//! Subject-environment composites: division events, the Markov chains they produce,
//! decoherence of the subject's density matrix, and factorization tests for two-part
//! transition matrices.

use crate::correspondence::{density_matrix, DensityMatrix, EvolutionOperator};
use crate::dynamics::UnitaryFamily;
use crate::error::{Error, Result};
use crate::linalg::{
    configuration_projector, ensure_unitary, identity, max_abs_diff, max_abs_diff_real,
    modulus_squared, partial_trace, permutation_matrix, tensor, tensor_all, CMatrix, CVector, Keep,
    RMatrix, DEFAULT_TOL,
};
use crate::stochastic::{ProbabilityVector, StochasticMatrix};

/// Agreement required between the composite and the product-form routes.
pub const ROUTE_TOL: f64 = 1e-10;

/// Largest step count and environment size accepted by the brute-force chain.
pub const BRUTE_FORCE_MAX_STEPS: usize = 4;
pub const BRUTE_FORCE_MAX_ENV: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSystem {
    factors: Vec<(String, usize)>,
    family: UnitaryFamily,
}

impl CompositeSystem {
    pub fn new(factors: Vec<(String, usize)>, family: UnitaryFamily) -> Result<Self> {
        let product: usize = factors.iter().map(|(_, d)| d).product();
        if factors.is_empty() || product != family.n() {
            return Err(Error::Dimension(format!(
                "factor dimensions multiply to {product}, family has {}",
                family.n()
            )));
        }
        Ok(Self { factors, family })
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn family(&self) -> &UnitaryFamily {
        &self.family
    }

    pub fn n(&self) -> usize {
        self.family.n()
    }
}

/// Injective assignment of an environment configuration to each subject configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelationMap {
    subject_dim: usize,
    environment_dim: usize,
    e_of: Vec<usize>,
}

impl CorrelationMap {
    pub fn new(environment_dim: usize, e_of: Vec<usize>) -> Result<Self> {
        let subject_dim = e_of.len();
        if subject_dim == 0 || environment_dim < subject_dim {
            return Err(Error::Dimension(format!(
                "environment of size {environment_dim} cannot record {subject_dim} configurations"
            )));
        }
        let mut seen = vec![false; environment_dim];
        for &e in &e_of {
            if e >= environment_dim {
                return Err(Error::OutOfRange { index: e, dim: environment_dim });
            }
            if seen[e] {
                return Err(Error::Precondition(format!(
                    "correlation map is not injective: {e} is used twice"
                )));
            }
            seen[e] = true;
        }
        Ok(Self {
            subject_dim,
            environment_dim,
            e_of,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            subject_dim: n,
            environment_dim: n,
            e_of: (0..n).collect(),
        }
    }

    pub fn subject_dim(&self) -> usize {
        self.subject_dim
    }

    pub fn environment_dim(&self) -> usize {
        self.environment_dim
    }

    pub fn e_of(&self, i: usize) -> usize {
        self.e_of[i]
    }

    /// Permutation unitary exchanging environment configurations `0` and `e(i)`.
    pub fn recorder(&self, i: usize) -> CMatrix {
        let mut perm: Vec<usize> = (0..self.environment_dim).collect();
        perm.swap(0, self.e_of[i]);
        permutation_matrix(&perm)
    }

    /// `sum_i P_i (x) R_e(i)` on the subject-environment product.
    pub fn interaction(&self) -> CMatrix {
        let n = self.subject_dim;
        let mut w = CMatrix::zeros(n * self.environment_dim, n * self.environment_dim);
        for i in 0..n {
            w += tensor(&configuration_projector(n, i), &self.recorder(i));
        }
        w
    }

    fn check_subject(&self, u: &CMatrix) -> Result<()> {
        ensure_unitary(u, DEFAULT_TOL)?;
        if u.nrows() != self.subject_dim {
            return Err(Error::Dimension(format!(
                "subject unitary is {}x{}, correlation map expects {}",
                u.nrows(),
                u.ncols(),
                self.subject_dim
            )));
        }
        Ok(())
    }
}

/// A composite whose subject undergoes a division event at `event_time`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivisionScenario {
    pub system: CompositeSystem,
    pub correlation: CorrelationMap,
    pub event_time: f64,
    pub subject_pre: CMatrix,
    pub subject_post: UnitaryFamily,
    pub environment_post: UnitaryFamily,
}

impl DivisionScenario {
    /// `U^{SE}(t')`.
    pub fn event_unitary(&self) -> CMatrix {
        let m = self.correlation.environment_dim;
        self.correlation.interaction() * tensor(&self.subject_pre, &identity(m))
    }

    /// Joint wave function at `t` for initial configuration `(j, 0)`, indexed `i * M + e`.
    pub fn joint_state(&self, j: usize, t: f64) -> Result<CVector> {
        let n = self.correlation.subject_dim;
        if j >= n {
            return Err(Error::OutOfRange { index: j, dim: n });
        }
        let u = self.system.family.evaluate(t)?;
        Ok(u.column(j * self.correlation.environment_dim).into_owned())
    }

    /// Joint probabilities `p_{(i, e)}(t)` for initial configuration `(j, 0)`.
    pub fn joint_probabilities(&self, j: usize, t: f64) -> Result<Vec<f64>> {
        Ok(self.joint_state(j, t)?.iter().map(|z| z.norm_sqr()).collect())
    }

    /// Subject marginal of [`Self::joint_probabilities`].
    pub fn subject_probabilities(&self, j: usize, t: f64) -> Result<Vec<f64>> {
        let m = self.correlation.environment_dim;
        let joint = self.joint_probabilities(j, t)?;
        Ok(joint.chunks(m).map(|c| c.iter().sum()).collect())
    }
}

/// Composite family that applies `U_S_pre` and the recording interaction by
/// `event_time`, then evolves subject and environment independently.
pub fn build_division_scenario(
    subject_pre: &CMatrix,
    correlation: &CorrelationMap,
    subject_post: UnitaryFamily,
    environment_post: UnitaryFamily,
    event_time: f64,
) -> Result<DivisionScenario> {
    correlation.check_subject(subject_pre)?;
    if subject_post.n() != correlation.subject_dim || environment_post.n() != correlation.environment_dim {
        return Err(Error::Dimension("post-event families do not match the correlation map".into()));
    }
    let m = correlation.environment_dim;
    let event = correlation.interaction() * tensor(subject_pre, &identity(m));
    let after = UnitaryFamily::product(vec![subject_post.clone(), environment_post.clone()])?;
    let family = UnitaryFamily::spliced(event_time, event, after)?;
    let system = CompositeSystem::new(
        vec![
            ("subject".into(), correlation.subject_dim),
            ("environment".into(), m),
        ],
        family,
    )?;
    Ok(DivisionScenario {
        system,
        correlation: correlation.clone(),
        event_time,
        subject_pre: subject_pre.clone(),
        subject_post,
        environment_post,
    })
}

/// `Gamma^S(t)` for `t > t'`, by marginalizing the composite and cross-checked
/// against `Gamma^S(t <- t') Gamma^S(t')`.
pub fn subject_marginal_dynamics(scenario: &DivisionScenario, t: f64) -> Result<StochasticMatrix> {
    if t <= scenario.event_time {
        return Err(Error::Precondition(format!(
            "t = {t} must follow the division event at {}",
            scenario.event_time
        )));
    }
    let n = scenario.correlation.subject_dim;
    let mut brute = RMatrix::zeros(n, n);
    for j in 0..n {
        for (i, p) in scenario.subject_probabilities(j, t)?.into_iter().enumerate() {
            brute[(i, j)] = p;
        }
    }
    let relative = modulus_squared(&scenario.subject_post.evaluate(t - scenario.event_time)?);
    let product = relative * modulus_squared(&scenario.subject_pre);
    let residual = max_abs_diff_real(&brute, &product);
    if residual > ROUTE_TOL {
        return Err(Error::Internal(format!(
            "composite and product-form subject dynamics disagree by {residual:.3e}"
        )));
    }
    StochasticMatrix::new(brute)
}

/// `Gamma^S(k dt) = (Gamma^S)^k` for `k = 1..=n_steps`, with one division event per step.
pub fn markov_chain_emergence(
    subject_step: &CMatrix,
    correlation: &CorrelationMap,
    n_steps: usize,
) -> Result<Vec<StochasticMatrix>> {
    correlation.check_subject(subject_step)?;
    if n_steps == 0 {
        return Err(Error::Precondition("at least one step is required".into()));
    }
    let one = StochasticMatrix::new(modulus_squared(subject_step))?;
    Ok((1..=n_steps as u32).map(|k| one.power(k)).collect())
}

/// The same chain from an explicit composite with a fresh environment factor per
/// step. The state space has `N * M^n` configurations.
pub fn markov_chain_brute_force(
    subject_step: &CMatrix,
    correlation: &CorrelationMap,
    n_steps: usize,
) -> Result<Vec<StochasticMatrix>> {
    correlation.check_subject(subject_step)?;
    let (n, m) = (correlation.subject_dim, correlation.environment_dim);
    if n_steps == 0 || n_steps > BRUTE_FORCE_MAX_STEPS || m > BRUTE_FORCE_MAX_ENV {
        return Err(Error::Precondition(format!(
            "brute force supports 1..={BRUTE_FORCE_MAX_STEPS} steps and at most {BRUTE_FORCE_MAX_ENV} environment configurations"
        )));
    }
    let envs = m.pow(n_steps as u32);
    let id_env = identity(m);
    let step = tensor(subject_step, &identity(envs));
    let mut total = identity(n * envs);
    let mut out = Vec::with_capacity(n_steps);
    for k in 0..n_steps {
        let mut record = CMatrix::zeros(n * envs, n * envs);
        for i in 0..n {
            let mut parts = vec![configuration_projector(n, i)];
            for slot in 0..n_steps {
                parts.push(if slot == k { correlation.recorder(i) } else { id_env.clone() });
            }
            record += tensor_all(parts.iter());
        }
        total = record * &step * total;
        let mut gamma = RMatrix::zeros(n, n);
        for j in 0..n {
            for (row, z) in total.column(j * envs).iter().enumerate() {
                gamma[(row / envs, j)] += z.norm_sqr();
            }
        }
        out.push(StochasticMatrix::new(gamma)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceComparison {
    pub rho_isolated: DensityMatrix,
    pub rho_decohered: DensityMatrix,
    /// Frobenius norm of the off-diagonal part of `rho_isolated`.
    pub coherence_norm_drop: f64,
    /// Distance between the diagonal truncation and the composite partial trace.
    pub partial_trace_residual: f64,
}

pub fn decoherence_compare(
    subject: &CMatrix,
    p0: &ProbabilityVector,
    correlation: &CorrelationMap,
) -> Result<DecoherenceComparison> {
    correlation.check_subject(subject)?;
    let n = correlation.subject_dim;
    let m = correlation.environment_dim;
    if p0.n() != n {
        return Err(Error::Dimension("initial distribution does not match the subject".into()));
    }
    let rho_isolated = density_matrix(&EvolutionOperator::new(subject.clone())?, p0)?;
    let diagonal = CMatrix::from_diagonal(&rho_isolated.matrix().diagonal());
    let rho_decohered = DensityMatrix::new(diagonal)?;

    let event = correlation.interaction() * tensor(subject, &identity(m));
    let mut joint = CMatrix::zeros(n * m, n * m);
    for (j, &p) in p0.as_slice().iter().enumerate() {
        let col = event.column(j * m);
        joint += (col * col.adjoint()).scale(p);
    }
    let reduced = partial_trace(&joint, (n, m), Keep::First)?;
    let partial_trace_residual = max_abs_diff(&reduced, rho_decohered.matrix());
    Ok(DecoherenceComparison {
        coherence_norm_drop: rho_isolated.coherence_norm(),
        rho_isolated,
        rho_decohered,
        partial_trace_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationResult {
    pub factorizable: bool,
    pub best_residual: f64,
    pub gamma_joint: RMatrix,
    pub gamma_first: RMatrix,
    pub gamma_second: RMatrix,
}

/// Compares `|U|^2` on `A x B` with the tensor product of its marginal candidates.
///
/// Each candidate column marginalizes the joint column over the other factor with
/// that factor's initial configuration uniformly distributed.
pub fn factorization_of_unitary(u: &CMatrix, dims: (usize, usize), tol: f64) -> Result<FactorizationResult> {
    let (da, db) = dims;
    if u.nrows() != da * db || u.ncols() != da * db {
        return Err(Error::Dimension(format!(
            "{}x{} matrix does not act on a {da}x{db} product",
            u.nrows(),
            u.ncols()
        )));
    }
    let joint = modulus_squared(u);
    let mut first = RMatrix::zeros(da, da);
    let mut second = RMatrix::zeros(db, db);
    for a in 0..da {
        for b in 0..db {
            for a2 in 0..da {
                for b2 in 0..db {
                    let g = joint[(a * db + b, a2 * db + b2)];
                    first[(a, a2)] += g / db as f64;
                    second[(b, b2)] += g / da as f64;
                }
            }
        }
    }
    let product = first.kronecker(&second);
    let best_residual = max_abs_diff_real(&joint, &product);
    Ok(FactorizationResult {
        factorizable: best_residual <= tol,
        best_residual,
        gamma_joint: joint,
        gamma_first: first,
        gamma_second: second,
    })
}

pub fn entanglement_factorization_test(system: &CompositeSystem, t: f64, tol: f64) -> Result<FactorizationResult> {
    if system.factors.len() != 2 {
        return Err(Error::Precondition(format!(
            "factorization test needs two factors, got {}",
            system.factors.len()
        )));
    }
    let u = system.family.evaluate(t)?;
    factorization_of_unitary(&u, (system.factors[0].1, system.factors[1].1), tol)
}
