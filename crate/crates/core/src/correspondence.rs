//! The dictionary between transition matrices and Hilbert-space objects.
//!
//! A transition matrix `Gamma(t)` is represented by an evolution operator `Theta(t)`
//! through `Gamma_ij = |Theta_ij|^2 = tr(Theta^† P_i Theta P_j)`. Everything else in
//! this module (Kraus sets, density matrices, state vectors, the Heisenberg picture
//! and the two gauge transformations) is derived from that identity.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    self, basis_vector, c, configuration_projector, ensure_self_adjoint, ensure_unitary,
    hermiticity_residual, max_abs_diff_real, modulus_squared, trace, CMatrix, CVector, RMatrix,
    DEFAULT_TOL,
};
use crate::stochastic::{ProbabilityVector, StochasticMatrix};

/// Tolerance for the normalization invariants of this module.
pub const DICTIONARY_TOL: f64 = 1e-12;

/// Floor on density-matrix eigenvalues.
pub const EIGEN_FLOOR: f64 = -1e-10;

/// A square matrix whose columns have unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionOperator {
    theta: CMatrix,
}

impl EvolutionOperator {
    pub fn new(theta: CMatrix) -> Result<Self> {
        linalg::ensure_square(&theta, "evolution operator")?;
        if !linalg::all_finite(&theta) {
            return Err(Error::Precondition("evolution operator has non-finite entries".into()));
        }
        for (j, col) in theta.column_iter().enumerate() {
            let norm_sq = col.norm_squared();
            if (norm_sq - 1.0).abs() > DICTIONARY_TOL {
                return Err(Error::Precondition(format!(
                    "column {j} of the evolution operator has squared norm {norm_sq:.17}"
                )));
            }
        }
        Ok(Self { theta })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            theta: linalg::identity(n),
        }
    }

    pub fn n(&self) -> usize {
        self.theta.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.theta
    }

    pub fn into_matrix(self) -> CMatrix {
        self.theta
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        linalg::is_unitary(&self.theta, tol)
    }

    /// `Psi = Theta e_j`, the state vector for initial configuration `j`.
    pub fn state_vector(&self, j: usize) -> Result<StateVector> {
        if j >= self.n() {
            return Err(Error::OutOfRange { index: j, dim: self.n() });
        }
        StateVector::new(self.theta.column(j).into_owned())
    }
}

/// Kraus operators obeying `sum_b K_b^† K_b = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    operators: Vec<CMatrix>,
}

pub fn kraus_identity_residual(operators: &[CMatrix]) -> f64 {
    let Some(first) = operators.first() else {
        return f64::INFINITY;
    };
    let n = first.ncols();
    let sum = operators
        .iter()
        .fold(CMatrix::zeros(n, n), |acc, k| acc + k.adjoint() * k);
    linalg::max_abs_diff(&sum, &linalg::identity(n))
}

impl KrausSet {
    pub fn new(operators: Vec<CMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::Precondition("a Kraus set needs at least one operator".into()))?;
        let n = linalg::ensure_square(first, "Kraus operator")?;
        if operators.iter().any(|k| k.shape() != (n, n)) {
            return Err(Error::Dimension(format!("every Kraus operator must be {n}x{n}")));
        }
        let residual = kraus_identity_residual(&operators);
        if residual > DICTIONARY_TOL {
            return Err(Error::Precondition(format!(
                "Kraus identity violated (residual {residual:.3e})"
            )));
        }
        Ok(Self { operators })
    }

    pub fn n(&self) -> usize {
        self.operators[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn identity_residual(&self) -> f64 {
        kraus_identity_residual(&self.operators)
    }
}

/// A self-adjoint, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: CMatrix,
}

impl DensityMatrix {
    pub fn new(rho: CMatrix) -> Result<Self> {
        let n = linalg::ensure_square(&rho, "density matrix")?;
        let herm = hermiticity_residual(&rho);
        if herm > DICTIONARY_TOL {
            return Err(Error::NotSelfAdjoint { residual: herm });
        }
        let tr = trace(&rho);
        if (tr - c(1.0, 0.0)).norm() > DICTIONARY_TOL {
            return Err(Error::InvalidProbability(format!(
                "density matrix trace is {tr}, not 1"
            )));
        }
        let (values, _) = linalg::eigh(&rho);
        if let Some(&min) = values.first().filter(|&&v| v < EIGEN_FLOOR) {
            return Err(Error::InvalidProbability(format!(
                "density matrix has eigenvalue {min:.3e} below the floor"
            )));
        }
        debug_assert_eq!(values.len(), n);
        Ok(Self { rho })
    }

    /// `sum_j p_j P_j`.
    pub fn diagonal(p: &ProbabilityVector) -> Self {
        let d = DVector::from_iterator(p.n(), p.as_slice().iter().map(|&x| c(x, 0.0)));
        Self {
            rho: CMatrix::from_diagonal(&d),
        }
    }

    /// The rank-one projector `Psi Psi^†`.
    pub fn pure(psi: &StateVector) -> Self {
        Self {
            rho: psi.vector() * psi.vector().adjoint(),
        }
    }

    pub fn n(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn into_matrix(self) -> CMatrix {
        self.rho
    }

    /// `p_i = tr(P_i rho)`.
    pub fn probabilities(&self) -> Result<ProbabilityVector> {
        ProbabilityVector::new(self.rho.diagonal().iter().map(|z| z.re).collect())
    }

    /// Frobenius norm of the off-diagonal part.
    pub fn coherence_norm(&self) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += self.rho[(i, j)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }
}

/// A unit-norm state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    psi: CVector,
}

impl StateVector {
    pub fn new(psi: CVector) -> Result<Self> {
        if psi.is_empty() {
            return Err(Error::Dimension("state vector must be non-empty".into()));
        }
        let norm_sq = psi.norm_squared();
        if (norm_sq - 1.0).abs() > DICTIONARY_TOL || !norm_sq.is_finite() {
            return Err(Error::Precondition(format!(
                "state vector has squared norm {norm_sq:.17}"
            )));
        }
        Ok(Self { psi })
    }

    pub fn basis(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::OutOfRange { index: i, dim: n });
        }
        Ok(Self {
            psi: basis_vector(n, i),
        })
    }

    pub fn n(&self) -> usize {
        self.psi.len()
    }

    pub fn vector(&self) -> &CVector {
        &self.psi
    }

    pub fn into_vector(self) -> CVector {
        self.psi
    }
}

/// Real phase angles `theta_ij` for a Schur-Hadamard gauge transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMatrix {
    thetas: RMatrix,
}

impl PhaseMatrix {
    pub fn new(thetas: RMatrix) -> Result<Self> {
        if thetas.iter().any(|x| !x.is_finite()) {
            return Err(Error::Precondition("phase angles must be finite".into()));
        }
        Ok(Self { thetas })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            thetas: RMatrix::zeros(n, n),
        }
    }

    pub fn angles(&self) -> &RMatrix {
        &self.thetas
    }

    /// Entrywise `exp(i theta_ij)`.
    pub fn phasors(&self) -> CMatrix {
        self.thetas.map(|t| Complex64::from_polar(1.0, t))
    }
}

/// The canonical representative: `Theta_ij = +sqrt(Gamma_ij)`.
pub fn evolution_from_stochastic(gamma: &StochasticMatrix) -> EvolutionOperator {
    EvolutionOperator {
        theta: gamma.matrix().map(|g| c(g.max(0.0).sqrt(), 0.0)),
    }
}

/// `|Theta_ij|^2`.
pub fn dictionary_modulus(theta: &CMatrix) -> RMatrix {
    modulus_squared(theta)
}

/// `Gamma_ij = tr(Theta^† Q_i Theta R_j)` for arbitrary projector families `Q` (at the
/// final time) and `R` (at the initial time).
pub fn dictionary_with_projectors(theta: &CMatrix, final_: &[CMatrix], initial: &[CMatrix]) -> RMatrix {
    let theta_dag = theta.adjoint();
    RMatrix::from_fn(final_.len(), initial.len(), |i, j| {
        trace(&(&theta_dag * &final_[i] * theta * &initial[j])).re
    })
}

/// `Gamma_ij = tr(Theta^† P_i Theta P_j)` with configuration projectors.
pub fn dictionary_trace(theta: &CMatrix) -> RMatrix {
    let n = theta.nrows();
    let projectors: Vec<CMatrix> = (0..n).map(|i| configuration_projector(n, i)).collect();
    dictionary_with_projectors(theta, &projectors, &projectors)
}

/// Evaluates the dictionary by both the modulus-square and the trace route and
/// cross-checks them.
pub fn stochastic_from_evolution(theta: &EvolutionOperator) -> Result<StochasticMatrix> {
    let modulus = dictionary_modulus(&theta.theta);
    let traced = dictionary_trace(&theta.theta);
    let residual = max_abs_diff_real(&modulus, &traced);
    if residual > DICTIONARY_TOL {
        return Err(Error::Internal(format!(
            "dictionary routes disagree by {residual:.3e}"
        )));
    }
    StochasticMatrix::new(modulus)
}

/// `K_b` shares column `b` with `Theta` and is zero elsewhere.
pub fn kraus_from_evolution(theta: &EvolutionOperator) -> KrausSet {
    let n = theta.n();
    let operators = (0..n)
        .map(|b| {
            let mut k = CMatrix::zeros(n, n);
            k.set_column(b, &theta.theta.column(b));
            k
        })
        .collect();
    KrausSet { operators }
}

/// `Gamma_ij = sum_b tr(K_b^† P_i K_b P_j)`.
pub fn kraus_decomposition(kraus: &KrausSet) -> RMatrix {
    let n = kraus.n();
    let projectors: Vec<CMatrix> = (0..n).map(|i| configuration_projector(n, i)).collect();
    kraus
        .operators
        .iter()
        .fold(RMatrix::zeros(n, n), |acc, k| {
            acc + dictionary_with_projectors(k, &projectors, &projectors)
        })
}

/// `rho(t) = Theta diag(p(0)) Theta^†`.
pub fn density_matrix(theta: &EvolutionOperator, p0: &ProbabilityVector) -> Result<DensityMatrix> {
    if theta.n() != p0.n() {
        return Err(Error::Dimension(format!(
            "evolution operator is {0}x{0} but distribution has {1} entries",
            theta.n(),
            p0.n()
        )));
    }
    let rho = &theta.theta * DensityMatrix::diagonal(p0).rho * theta.theta.adjoint();
    DensityMatrix::new(linalg::symmetrize(&rho))
}

/// `p_i = |Psi_i|^2`.
pub fn born_rule(psi: &StateVector) -> ProbabilityVector {
    ProbabilityVector::new(psi.psi.iter().map(|z| z.norm_sqr()).collect())
        .expect("unit-norm state yields a probability vector")
}

/// `<A> = tr(A rho)` for self-adjoint `A`.
pub fn expectation_qm(a: &CMatrix, rho: &DensityMatrix) -> Result<f64> {
    ensure_self_adjoint(a, DEFAULT_TOL)?;
    if a.nrows() != rho.n() {
        return Err(Error::Dimension(format!(
            "observable is {0}x{0} but density matrix is {1}x{1}",
            a.nrows(),
            rho.n()
        )));
    }
    let value = trace(&(a * &rho.rho));
    if value.im.abs() > DEFAULT_TOL {
        return Err(Error::Internal(format!(
            "expectation value has imaginary part {:.3e}",
            value.im
        )));
    }
    Ok(value.re)
}

/// `A^H = Theta^† A Theta`.
pub fn to_heisenberg(a: &CMatrix, theta: &EvolutionOperator) -> Result<CMatrix> {
    if a.shape() != (theta.n(), theta.n()) {
        return Err(Error::Dimension(format!(
            "matrix is {:?} but evolution operator is {1}x{1}",
            a.shape(),
            theta.n()
        )));
    }
    Ok(theta.theta.adjoint() * a * &theta.theta)
}

/// `Theta -> Theta (.) exp(i theta_ij)`.
pub fn gauge_schur_hadamard(theta: &EvolutionOperator, phases: &PhaseMatrix) -> Result<EvolutionOperator> {
    let theta_new = linalg::schur_hadamard(&theta.theta, &phases.phasors())?;
    Ok(EvolutionOperator { theta: theta_new })
}

/// Hilbert-space objects subject to a unitary gauge transformation.
#[derive(Debug, Clone)]
pub struct GaugeObjects {
    pub rho: DensityMatrix,
    pub psi: Option<StateVector>,
    pub observables: Vec<CMatrix>,
    pub theta: EvolutionOperator,
}

/// The same objects in a transformed frame. The transformed `Theta` generally no
/// longer has unit columns in the configuration basis, so it is kept raw alongside
/// the transformed configuration projectors at both times.
#[derive(Debug, Clone)]
pub struct GaugeFrame {
    pub rho: CMatrix,
    pub psi: Option<CVector>,
    pub observables: Vec<CMatrix>,
    pub theta: CMatrix,
    pub projectors_t: Vec<CMatrix>,
    pub projectors_0: Vec<CMatrix>,
}

impl GaugeFrame {
    /// `p_i(t) = tr(P_i^V(t) rho_V(t))`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.projectors_t
            .iter()
            .map(|p| trace(&(p * &self.rho)).re)
            .collect()
    }

    pub fn expectations(&self) -> Vec<f64> {
        self.observables
            .iter()
            .map(|a| trace(&(a * &self.rho)).re)
            .collect()
    }

    /// The transition matrix evaluated in this frame.
    pub fn gamma(&self) -> RMatrix {
        dictionary_with_projectors(&self.theta, &self.projectors_t, &self.projectors_0)
    }
}

/// `rho -> V rho V^†`, `Psi -> V Psi`, `A -> V A V^†`, `Theta -> V(t) Theta V^†(0)`.
///
/// Configuration projectors are carried along as observables at `t` and at `0`.
pub fn gauge_unitary(objects: &GaugeObjects, v_t: &CMatrix, v_0: &CMatrix) -> Result<GaugeFrame> {
    ensure_unitary(v_t, DEFAULT_TOL)?;
    ensure_unitary(v_0, DEFAULT_TOL)?;
    let n = objects.theta.n();
    if v_t.nrows() != n || v_0.nrows() != n || objects.rho.n() != n {
        return Err(Error::Dimension(format!("gauge unitaries must be {n}x{n}")));
    }
    let conj_t = |a: &CMatrix| v_t * a * v_t.adjoint();
    let conj_0 = |a: &CMatrix| v_0 * a * v_0.adjoint();
    let projectors: Vec<CMatrix> = (0..n).map(|i| configuration_projector(n, i)).collect();
    Ok(GaugeFrame {
        rho: conj_t(&objects.rho.rho),
        psi: objects.psi.as_ref().map(|p| v_t * &p.psi),
        observables: objects.observables.iter().map(conj_t).collect(),
        theta: v_t * &objects.theta.theta * v_0.adjoint(),
        projectors_t: projectors.iter().map(conj_t).collect(),
        projectors_0: projectors.iter().map(conj_0).collect(),
    })
}
