//! Unitary families `U(t)`, their Hamiltonians, and the dynamical equations they
//! satisfy (Schrödinger, von Neumann, Heisenberg, Ehrenfest), together with
//! symmetry classification and Noether conservation checks.

use crate::correspondence::{DensityMatrix, StateVector};
use crate::error::{Error, Result};
use crate::linalg::{
    self, c, commutator, ensure_self_adjoint, ensure_unitary, exp_i_hermitian, identity,
    log_unitary, max_abs, max_abs_diff, rotation, symmetrize, tensor, trace, CMatrix, CVector,
    DEFAULT_TOL, I,
};

/// Default central-difference step for generators.
pub const DEFAULT_DT: f64 = 1e-5;

/// Accepted deviation of integrated norms and traces from one.
pub const DRIFT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    /// `U(t) = exp(-i H t / hbar)`.
    ConstantHamiltonian { h: CMatrix },
    /// `H` is `hamiltonians[k]` on `[breakpoints[k-1], breakpoints[k])`; the first
    /// segment also covers negative times.
    PiecewiseConstantHamiltonian {
        breakpoints: Vec<f64>,
        hamiltonians: Vec<CMatrix>,
    },
    /// `[[cos wt, -sin wt], [sin wt, cos wt]]`.
    Rotation2d { omega: f64 },
    /// Real rotation whose squared moduli give the Gaussian-decay transition matrix
    /// with diagonal `exp(-t^2 / tau^2)`.
    GaussianDecay2d { tau: f64 },
    /// Unitaries sampled on a time grid, joined by geodesics `exp(i s G_k) U_k`.
    SampledGrid {
        times: Vec<f64>,
        unitaries: Vec<CMatrix>,
        generators: Vec<CMatrix>,
    },
    /// Tensor product of independent factor families.
    Product(Vec<UnitaryFamily>),
    /// Reaches `at_event` at `event_time` along the geodesic from the identity, then
    /// continues as `after(t - event_time) * at_event`.
    Spliced {
        event_time: f64,
        at_event: CMatrix,
        generator: CMatrix,
        after: Box<UnitaryFamily>,
    },
}

/// A time-dependent unitary `U(t)` with `U(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryFamily {
    n: usize,
    hbar: f64,
    kind: FamilyKind,
}

fn check_hbar(hbar: f64) -> Result<()> {
    if hbar > 0.0 && hbar.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("hbar must be positive, got {hbar}")))
    }
}

impl UnitaryFamily {
    pub fn constant_hamiltonian(h: CMatrix, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        ensure_self_adjoint(&h, DEFAULT_TOL)?;
        Ok(Self {
            n: h.nrows(),
            hbar,
            kind: FamilyKind::ConstantHamiltonian { h: symmetrize(&h) },
        })
    }

    /// `U(t) = 1` for all `t`.
    pub fn stationary(n: usize) -> Self {
        Self {
            n,
            hbar: 1.0,
            kind: FamilyKind::ConstantHamiltonian { h: CMatrix::zeros(n, n) },
        }
    }

    pub fn piecewise_constant(breakpoints: Vec<f64>, hamiltonians: Vec<CMatrix>, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        if hamiltonians.len() != breakpoints.len() + 1 {
            return Err(Error::Precondition(format!(
                "{} breakpoints need {} Hamiltonians, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                hamiltonians.len()
            )));
        }
        if breakpoints.iter().any(|&b| !(b > 0.0) || !b.is_finite())
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::Precondition(
                "breakpoints must be positive and strictly increasing".into(),
            ));
        }
        let n = hamiltonians[0].nrows();
        for h in &hamiltonians {
            ensure_self_adjoint(h, DEFAULT_TOL)?;
            if h.nrows() != n {
                return Err(Error::Dimension("segment Hamiltonians differ in size".into()));
            }
        }
        Ok(Self {
            n,
            hbar,
            kind: FamilyKind::PiecewiseConstantHamiltonian {
                breakpoints,
                hamiltonians: hamiltonians.iter().map(symmetrize).collect(),
            },
        })
    }

    pub fn rotation_2d(omega: f64) -> Self {
        Self {
            n: 2,
            hbar: 1.0,
            kind: FamilyKind::Rotation2d { omega },
        }
    }

    pub fn gaussian_decay_2d(tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Precondition(format!("tau must be positive, got {tau}")));
        }
        Ok(Self {
            n: 2,
            hbar: 1.0,
            kind: FamilyKind::GaussianDecay2d { tau },
        })
    }

    /// Grid samples must be strictly increasing in time, unitary, and include
    /// `t = 0` with the identity.
    pub fn sampled_grid(times: Vec<f64>, unitaries: Vec<CMatrix>) -> Result<Self> {
        if times.is_empty() || times.len() != unitaries.len() {
            return Err(Error::Precondition("grid needs one unitary per time".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition("grid times must be strictly increasing".into()));
        }
        let n = linalg::ensure_square(&unitaries[0], "grid unitary")?;
        for u in &unitaries {
            if u.nrows() != n {
                return Err(Error::Dimension("grid unitaries differ in size".into()));
            }
            ensure_unitary(u, DEFAULT_TOL)?;
        }
        let zero = times.iter().position(|&t| t == 0.0).ok_or_else(|| {
            Error::Precondition("grid must contain t = 0".into())
        })?;
        if max_abs_diff(&unitaries[zero], &identity(n)) > 1e-12 {
            return Err(Error::Precondition("grid unitary at t = 0 must be the identity".into()));
        }
        let generators = unitaries
            .windows(2)
            .map(|w| log_unitary(&(&w[1] * w[0].adjoint())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            hbar: 1.0,
            kind: FamilyKind::SampledGrid {
                times,
                unitaries,
                generators,
            },
        })
    }

    pub fn product(factors: Vec<UnitaryFamily>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Precondition("product needs at least one factor".into()));
        }
        let n = factors.iter().map(|f| f.n).product();
        let hbar = factors[0].hbar;
        Ok(Self {
            n,
            hbar,
            kind: FamilyKind::Product(factors),
        })
    }

    pub fn spliced(event_time: f64, at_event: CMatrix, after: UnitaryFamily) -> Result<Self> {
        if !(event_time > 0.0) {
            return Err(Error::Precondition("event time must be positive".into()));
        }
        ensure_unitary(&at_event, DEFAULT_TOL)?;
        if at_event.nrows() != after.n {
            return Err(Error::Dimension("post-event family has the wrong dimension".into()));
        }
        let generator = log_unitary(&at_event)?;
        Ok(Self {
            n: after.n,
            hbar: after.hbar,
            kind: FamilyKind::Spliced {
                event_time,
                at_event,
                generator,
                after: Box::new(after),
            },
        })
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        self.hbar = hbar;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    /// Time interval on which the family is defined.
    pub fn domain(&self) -> (f64, f64) {
        match &self.kind {
            FamilyKind::SampledGrid { times, .. } => (times[0], times[times.len() - 1]),
            FamilyKind::Product(fs) => fs.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |acc, f| {
                let (a, b) = f.domain();
                (acc.0.max(a), acc.1.min(b))
            }),
            FamilyKind::Spliced { event_time, after, .. } => {
                let (_, b) = after.domain();
                (f64::NEG_INFINITY, event_time + b)
            }
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Times at which the generator may jump, in ascending order.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = match &self.kind {
            FamilyKind::PiecewiseConstantHamiltonian { breakpoints, .. } => breakpoints.clone(),
            FamilyKind::SampledGrid { times, .. } => times[1..times.len() - 1].to_vec(),
            FamilyKind::Product(fs) => fs.iter().flat_map(|f| f.breakpoints()).collect(),
            FamilyKind::Spliced { event_time, after, .. } => std::iter::once(*event_time)
                .chain(after.breakpoints().into_iter().map(|b| b + event_time))
                .collect(),
            _ => Vec::new(),
        };
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// `U(t)`.
    pub fn evaluate(&self, t: f64) -> Result<CMatrix> {
        let (start, end) = self.domain();
        if !t.is_finite() || t < start || t > end {
            return Err(Error::OutsideDomain { t, start, end });
        }
        let hbar = self.hbar;
        let u = match &self.kind {
            FamilyKind::ConstantHamiltonian { h } => exp_i_hermitian(h, t / hbar),
            FamilyKind::PiecewiseConstantHamiltonian {
                breakpoints,
                hamiltonians,
            } => {
                let mut u = identity(self.n);
                let mut from = 0.0;
                for (k, h) in hamiltonians.iter().enumerate() {
                    let until = breakpoints.get(k).copied().unwrap_or(f64::INFINITY);
                    if t < until || k == hamiltonians.len() - 1 {
                        u = exp_i_hermitian(h, (t - from) / hbar) * u;
                        break;
                    }
                    u = exp_i_hermitian(h, (until - from) / hbar) * u;
                    from = until;
                }
                u
            }
            FamilyKind::Rotation2d { omega } => rotation(omega * t),
            FamilyKind::GaussianDecay2d { tau } => {
                let x = t / tau;
                let tan = x.signum() * (x * x).exp_m1().sqrt();
                rotation(tan.atan())
            }
            FamilyKind::SampledGrid {
                times,
                unitaries,
                generators,
            } => {
                if let Some(k) = times.iter().position(|&s| s == t) {
                    unitaries[k].clone()
                } else {
                    let k = times.partition_point(|&s| s <= t) - 1;
                    let s = (t - times[k]) / (times[k + 1] - times[k]);
                    exp_i_hermitian(&generators[k], -s) * &unitaries[k]
                }
            }
            FamilyKind::Product(factors) => {
                let mut u = identity(1);
                for f in factors {
                    u = tensor(&u, &f.evaluate(t)?);
                }
                u
            }
            FamilyKind::Spliced {
                event_time,
                at_event,
                generator,
                after,
            } => {
                if t >= *event_time {
                    after.evaluate(t - event_time)? * at_event
                } else if t == 0.0 {
                    identity(self.n)
                } else {
                    exp_i_hermitian(generator, -t / event_time)
                }
            }
        };
        Ok(u)
    }
}

/// A self-adjoint generator with its `hbar` scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    h: CMatrix,
    hbar: f64,
}

impl Hamiltonian {
    pub fn new(h: CMatrix, hbar: f64) -> Result<Self> {
        check_hbar(hbar)?;
        ensure_self_adjoint(&h, DEFAULT_TOL)?;
        Ok(Self { h, hbar })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            h: CMatrix::zeros(n, n),
            hbar: 1.0,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }
}

/// Source of `H(t)` for the integrators. Implementations must not keep mutable
/// state between calls.
pub trait HamiltonianProvider {
    fn dim(&self) -> usize;
    fn hamiltonian_at(&self, t: f64) -> Result<Hamiltonian>;

    /// Times where `H(t)` may be discontinuous. Integrators never step across them.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// `H(t)` as seen from inside `segment`, which matters only at its ends.
    fn hamiltonian_on(&self, t: f64, segment: (f64, f64)) -> Result<Hamiltonian> {
        let _ = segment;
        self.hamiltonian_at(t)
    }
}

impl HamiltonianProvider for Hamiltonian {
    fn dim(&self) -> usize {
        self.n()
    }

    fn hamiltonian_at(&self, _t: f64) -> Result<Hamiltonian> {
        Ok(self.clone())
    }
}

/// `H(t)` estimated from a unitary family by central differences.
#[derive(Debug, Clone, Copy)]
pub struct FiniteDifferenceGenerator<'a> {
    pub family: &'a UnitaryFamily,
    pub dt: f64,
}

impl HamiltonianProvider for FiniteDifferenceGenerator<'_> {
    fn dim(&self) -> usize {
        self.family.n()
    }

    fn hamiltonian_at(&self, t: f64) -> Result<Hamiltonian> {
        Ok(hamiltonian_from_family(self.family, t, self.dt)?.hamiltonian)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.family.breakpoints()
    }

    fn hamiltonian_on(&self, t: f64, segment: (f64, f64)) -> Result<Hamiltonian> {
        Ok(hamiltonian_within(self.family, t, self.dt, segment)?.hamiltonian)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorEstimate {
    pub hamiltonian: Hamiltonian,
    /// `max |H_raw - (H_raw + H_raw^†) / 2|` before symmetrization.
    pub symmetrization_residual: f64,
}

/// `H(t) = i hbar (dU/dt) U^†(t)` with a central difference, then symmetrized.
pub fn hamiltonian_from_family(family: &UnitaryFamily, t: f64, dt: f64) -> Result<GeneratorEstimate> {
    if !(dt > 0.0) {
        return Err(Error::Precondition(format!("dt must be positive, got {dt}")));
    }
    let forward = family.evaluate(t + dt)?;
    let backward = family.evaluate(t - dt)?;
    let here = family.evaluate(t)?;
    let derivative = (forward - backward).unscale(2.0 * dt);
    let raw = derivative * here.adjoint() * c(0.0, family.hbar());
    let h = symmetrize(&raw);
    let symmetrization_residual = max_abs_diff(&raw, &h);
    Ok(GeneratorEstimate {
        hamiltonian: Hamiltonian {
            h,
            hbar: family.hbar(),
        },
        symmetrization_residual,
    })
}

/// Like [`hamiltonian_from_family`], but switches to a second-order one-sided
/// stencil when the central one would leave `segment` or the family's domain.
pub fn hamiltonian_within(family: &UnitaryFamily, t: f64, dt: f64, segment: (f64, f64)) -> Result<GeneratorEstimate> {
    if !(dt > 0.0) {
        return Err(Error::Precondition(format!("dt must be positive, got {dt}")));
    }
    let (start, end) = family.domain();
    let (lo, hi) = (segment.0.max(start), segment.1.min(end));
    if t - dt >= lo && t + dt <= hi {
        return hamiltonian_from_family(family, t, dt);
    }
    let here = family.evaluate(t)?;
    let derivative = if t + 2.0 * dt <= hi {
        (family.evaluate(t + dt)? * c(4.0, 0.0) - family.evaluate(t + 2.0 * dt)? - &here * c(3.0, 0.0))
            .unscale(2.0 * dt)
    } else if t - 2.0 * dt >= lo {
        (&here * c(3.0, 0.0) - family.evaluate(t - dt)? * c(4.0, 0.0) + family.evaluate(t - 2.0 * dt)?)
            .unscale(2.0 * dt)
    } else {
        return Err(Error::Precondition(format!(
            "segment [{lo}, {hi}] is too short for dt = {dt}"
        )));
    };
    let raw = derivative * here.adjoint() * c(0.0, family.hbar());
    let h = symmetrize(&raw);
    let symmetrization_residual = max_abs_diff(&raw, &h);
    Ok(GeneratorEstimate {
        hamiltonian: Hamiltonian {
            h,
            hbar: family.hbar(),
        },
        symmetrization_residual,
    })
}

/// A state after numerical integration with its norm or trace drift before
/// renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Integrated<T> {
    pub state: T,
    pub drift: f64,
}

// Splits [0, t_final] at the provider's breakpoints and spreads the steps over the
// pieces in proportion to their length.
fn rk4<F>(provider: &dyn HamiltonianProvider, y0: CMatrix, t_final: f64, steps: usize, rhs: F) -> Result<CMatrix>
where
    F: Fn(&Hamiltonian, &CMatrix) -> CMatrix,
{
    if steps == 0 {
        return Err(Error::Precondition("at least one integration step is required".into()));
    }
    if !t_final.is_finite() {
        return Err(Error::Precondition(format!("final time must be finite, got {t_final}")));
    }
    let (lo, hi) = (t_final.min(0.0), t_final.max(0.0));
    let mut knots = vec![0.0];
    let mut inner: Vec<f64> = provider.breakpoints().into_iter().filter(|&b| b > lo && b < hi).collect();
    if t_final < 0.0 {
        inner.reverse();
    }
    knots.extend(inner);
    knots.push(t_final);

    let mut y = y0;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let segment = (a.min(b), a.max(b));
        let pieces = ((steps as f64 * (b - a) / t_final).round() as usize).max(1);
        let h = (b - a) / pieces as f64;
        let at = |t: f64, y: &CMatrix| -> Result<CMatrix> {
            Ok(rhs(&provider.hamiltonian_on(t.clamp(segment.0, segment.1), segment)?, y))
        };
        for k in 0..pieces {
            let t = a + k as f64 * h;
            let k1 = at(t, &y)?;
            let k2 = at(t + h / 2.0, &(&y + &k1 * c(h / 2.0, 0.0)))?;
            let k3 = at(t + h / 2.0, &(&y + &k2 * c(h / 2.0, 0.0)))?;
            let k4 = at(if k + 1 == pieces { b } else { t + h }, &(&y + &k3 * c(h, 0.0)))?;
            y += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0);
        }
    }
    Ok(y)
}

/// Integrates `i hbar dPsi/dt = H(t) Psi` from `0` to `t_final` with classical RK4.
pub fn integrate_schrodinger(
    provider: &dyn HamiltonianProvider,
    psi0: &StateVector,
    t_final: f64,
    steps: usize,
) -> Result<Integrated<StateVector>> {
    if psi0.n() != provider.dim() {
        return Err(Error::Dimension("state and Hamiltonian differ in size".into()));
    }
    let y0 = CMatrix::from_column_slice(psi0.n(), 1, psi0.vector().as_slice());
    let y = rk4(provider, y0, t_final, steps, |h, y| h.matrix() * y * c(0.0, -1.0 / h.hbar()))?;
    let v: CVector = y.column(0).into_owned();
    let norm = v.norm();
    let drift = (norm - 1.0).abs();
    Ok(Integrated {
        state: StateVector::new(v.unscale(norm))?,
        drift,
    })
}

/// Integrates `i hbar drho/dt = [H(t), rho]` from `0` to `t_final` with classical RK4.
pub fn integrate_von_neumann(
    provider: &dyn HamiltonianProvider,
    rho0: &DensityMatrix,
    t_final: f64,
    steps: usize,
) -> Result<Integrated<DensityMatrix>> {
    if rho0.n() != provider.dim() {
        return Err(Error::Dimension("density matrix and Hamiltonian differ in size".into()));
    }
    let y = rk4(provider, rho0.matrix().clone(), t_final, steps, |h, rho| {
        commutator(h.matrix(), rho) * c(0.0, -1.0 / h.hbar())
    })?;
    let y = symmetrize(&y);
    let tr = trace(&y).re;
    let drift = (tr - 1.0).abs();
    Ok(Integrated {
        state: DensityMatrix::new(y.unscale(tr))?,
        drift,
    })
}

fn expectation_at(a: &CMatrix, family: &UnitaryFamily, rho0: &DensityMatrix, t: f64) -> Result<f64> {
    let u = family.evaluate(t)?;
    Ok(trace(&(a * &u * rho0.matrix() * u.adjoint())).re)
}

/// `|d<A>/dt - (i / hbar) tr([H, A] rho)|` at `t` for a time-independent `A`.
pub fn ehrenfest_check(
    a: &CMatrix,
    family: &UnitaryFamily,
    rho0: &DensityMatrix,
    t: f64,
    dt: f64,
) -> Result<f64> {
    ensure_self_adjoint(a, DEFAULT_TOL)?;
    if a.nrows() != family.n() || rho0.n() != family.n() {
        return Err(Error::Dimension("observable, state and family differ in size".into()));
    }
    let fd = (expectation_at(a, family, rho0, t + dt)? - expectation_at(a, family, rho0, t - dt)?)
        / (2.0 * dt);
    let h = hamiltonian_from_family(family, t, dt)?.hamiltonian;
    let u = family.evaluate(t)?;
    let rho_t = &u * rho0.matrix() * u.adjoint();
    let predicted = (trace(&(commutator(h.matrix(), a) * rho_t)) * I / h.hbar()).re;
    Ok((fd - predicted).abs())
}

/// `max |dA^H/dt - (i / hbar)[H^H, A^H]|` at `t` for a time-independent `A`.
pub fn heisenberg_eom_check(a: &CMatrix, family: &UnitaryFamily, t: f64, dt: f64) -> Result<f64> {
    if a.nrows() != family.n() {
        return Err(Error::Dimension("observable and family differ in size".into()));
    }
    let heis = |s: f64| -> Result<CMatrix> {
        let u = family.evaluate(s)?;
        Ok(u.adjoint() * a * u)
    };
    let fd = (heis(t + dt)? - heis(t - dt)?).unscale(2.0 * dt);
    let h = hamiltonian_from_family(family, t, dt)?.hamiltonian;
    let u = family.evaluate(t)?;
    let h_heis = u.adjoint() * h.matrix() * &u;
    let predicted = commutator(&h_heis, &heis(t)?) * (I / h.hbar());
    Ok(max_abs(&(fd - predicted)))
}

/// `V H V^† - i hbar V dV^†/dt`: the Hamiltonian of the family after the unitary
/// gauge transformation `U -> V(t) U V^†(0)`.
pub fn gauge_transformed_hamiltonian<F>(family: &UnitaryFamily, v_of_t: F, t: f64, dt: f64) -> Result<CMatrix>
where
    F: Fn(f64) -> Result<CMatrix>,
{
    let h = hamiltonian_from_family(family, t, dt)?.hamiltonian;
    let v = v_of_t(t)?;
    let dv_dag = (v_of_t(t + dt)?.adjoint() - v_of_t(t - dt)?.adjoint()).unscale(2.0 * dt);
    Ok(&v * h.matrix() * v.adjoint() - &v * dv_dag * c(0.0, h.hbar()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryClass {
    UnitarySymmetry,
    AntiUnitarySymmetry,
    PhaseSymmetry,
    None,
}

/// Classifies `V` against the family at the sampled times.
///
/// `V` is a dynamical symmetry when `|(V U V^†)_ij|^2 = |U_ij|^2` at every time. It is
/// reported as a unitary symmetry if `V U V^† = U`, as an anti-unitary symmetry if
/// `V U V^† = conj(U)`, and as a phase symmetry otherwise.
pub fn classify_symmetry(v: &CMatrix, family: &UnitaryFamily, times: &[f64]) -> Result<SymmetryClass> {
    ensure_unitary(v, DEFAULT_TOL)?;
    if v.nrows() != family.n() {
        return Err(Error::Dimension("symmetry and family differ in size".into()));
    }
    let (mut unitary, mut anti) = (true, true);
    for &t in times {
        let u = family.evaluate(t)?;
        let w = v * &u * v.adjoint();
        let moduli = w
            .iter()
            .zip(u.iter())
            .all(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs() <= DEFAULT_TOL);
        if !moduli {
            return Ok(SymmetryClass::None);
        }
        unitary &= max_abs_diff(&w, &u) <= DEFAULT_TOL;
        anti &= max_abs_diff(&w, &u.map(|z| z.conj())) <= DEFAULT_TOL;
    }
    Ok(if unitary {
        SymmetryClass::UnitarySymmetry
    } else if anti {
        SymmetryClass::AntiUnitarySymmetry
    } else {
        SymmetryClass::PhaseSymmetry
    })
}

/// `max_t |<G(t)> - <G(0)>|` with `<G(t)> = tr(G U(t) rho(0) U^†(t))`.
pub fn noether_check(g: &CMatrix, family: &UnitaryFamily, rho0: &DensityMatrix, times: &[f64]) -> Result<f64> {
    ensure_self_adjoint(g, DEFAULT_TOL)?;
    if g.nrows() != family.n() || rho0.n() != family.n() {
        return Err(Error::Dimension("generator, state and family differ in size".into()));
    }
    let initial = trace(&(g * rho0.matrix())).re;
    times.iter().try_fold(0.0f64, |acc, &t| {
        Ok(acc.max((expectation_at(g, family, rho0, t)? - initial).abs()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_real_rows, is_unitary, permutation_matrix};
    use crate::random::{self, rng_from_seed};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn pauli_y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    fn z() -> CMatrix {
        from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    fn all_kinds() -> Vec<UnitaryFamily> {
        let mut rng = rng_from_seed(44);
        let h = random::hermitian(3, &mut rng);
        let h2 = random::hermitian(3, &mut rng);
        let grid_h = random::hermitian(2, &mut rng);
        let times: Vec<f64> = (-2..=24).map(|k| k as f64 * 0.05).collect();
        let grid: Vec<CMatrix> = times.iter().map(|&t| exp_i_hermitian(&grid_h, t)).collect();
        vec![
            UnitaryFamily::constant_hamiltonian(h.clone(), 1.0).unwrap(),
            UnitaryFamily::piecewise_constant(vec![0.4], vec![h, h2], 1.0).unwrap(),
            UnitaryFamily::rotation_2d(1.3),
            UnitaryFamily::gaussian_decay_2d(0.8).unwrap(),
            UnitaryFamily::sampled_grid(times, grid).unwrap(),
            UnitaryFamily::product(vec![
                UnitaryFamily::rotation_2d(0.5),
                UnitaryFamily::constant_hamiltonian(random::hermitian(2, &mut rng), 1.0).unwrap(),
            ])
            .unwrap(),
        ]
    }

    #[test]
    fn round_trip_through_breakpoints() {
        let mut rng = rng_from_seed(45);
        let mut kinds = all_kinds();
        let after = UnitaryFamily::constant_hamiltonian(random::hermitian(3, &mut rng), 1.0).unwrap();
        kinds.push(UnitaryFamily::spliced(0.45, random::unitary(3, &mut rng), after).unwrap());
        for fam in kinds {
            let psi0 = StateVector::new(random::state(fam.n(), &mut rng)).unwrap();
            let gen = FiniteDifferenceGenerator { family: &fam, dt: DEFAULT_DT };
            let out = integrate_schrodinger(&gen, &psi0, 1.0, 1000).unwrap();
            let exact = fam.evaluate(1.0).unwrap() * psi0.vector();
            let err = (out.state.vector() - exact).camax();
            assert!(err < 1e-6, "{:?}: {err:.3e}", fam.kind());
        }
    }

    #[test]
    fn one_sided_stencil_at_a_jump() {
        let a = from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let b = pauli_y();
        let fam = UnitaryFamily::piecewise_constant(vec![0.5], vec![a.clone(), b.clone()], 1.0).unwrap();
        let left = hamiltonian_within(&fam, 0.5, 1e-5, (0.0, 0.5)).unwrap();
        let right = hamiltonian_within(&fam, 0.5, 1e-5, (0.5, 1.0)).unwrap();
        assert!(max_abs_diff(left.hamiltonian.matrix(), &a) < 1e-8);
        assert!(max_abs_diff(right.hamiltonian.matrix(), &b) < 1e-8);
        assert_eq!(fam.breakpoints(), vec![0.5]);
    }

    #[test]
    fn every_kind_starts_at_identity_and_stays_unitary() {
        for fam in all_kinds() {
            assert!(max_abs_diff(&fam.evaluate(0.0).unwrap(), &identity(fam.n())) < 1e-12);
            for t in [0.1, 0.37, 0.9] {
                assert!(is_unitary(&fam.evaluate(t).unwrap(), 1e-10), "{:?}", fam.kind());
            }
        }
    }

    #[test]
    fn evaluate_examples() {
        let fam = UnitaryFamily::rotation_2d(2.0);
        assert!(max_abs_diff(&fam.evaluate(0.3).unwrap(), &rotation(0.6)) < 1e-16);

        let fam = UnitaryFamily::constant_hamiltonian(z(), 1.0).unwrap();
        assert!(max_abs_diff(&fam.evaluate(PI).unwrap(), &identity(2).scale(-1.0)) < 1e-14);

        let fam = UnitaryFamily::gaussian_decay_2d(0.7).unwrap();
        let t: f64 = 0.5;
        let u = fam.evaluate(t).unwrap();
        assert!((u[(0, 0)].norm_sqr() - (-(t * t) / 0.49).exp()).abs() < 1e-14);

        let times = vec![0.0, 1.0];
        let fam = UnitaryFamily::sampled_grid(times, vec![identity(2), rotation(0.2)]).unwrap();
        assert!(matches!(fam.evaluate(1.5), Err(Error::OutsideDomain { .. })));
        assert!(max_abs_diff(&fam.evaluate(0.5).unwrap(), &rotation(0.1)) < 1e-14);
    }

    #[test]
    fn grid_validation() {
        assert!(UnitaryFamily::sampled_grid(vec![0.5, 1.0], vec![identity(2), identity(2)]).is_err());
        assert!(UnitaryFamily::sampled_grid(vec![0.0, 1.0], vec![rotation(0.1), identity(2)]).is_err());
        assert!(UnitaryFamily::sampled_grid(vec![0.0, 0.0], vec![identity(2), identity(2)]).is_err());
    }

    #[test]
    fn rotation_generator_is_hbar_omega_y() {
        for hbar in [1.0, 0.5] {
            let fam = UnitaryFamily::rotation_2d(1.0).with_hbar(hbar).unwrap();
            let est = hamiltonian_from_family(&fam, 0.4, DEFAULT_DT).unwrap();
            assert!(max_abs_diff(est.hamiltonian.matrix(), &pauli_y().scale(hbar)) < 1e-9);
        }
    }

    #[test]
    fn constant_generator_recovered() {
        let h = random::hermitian(3, &mut rng_from_seed(2));
        let fam = UnitaryFamily::constant_hamiltonian(h.clone(), 1.0).unwrap();
        let coarse = hamiltonian_from_family(&fam, 0.2, 1e-2).unwrap();
        let fine = hamiltonian_from_family(&fam, 0.2, 1e-3).unwrap();
        let e_coarse = max_abs_diff(coarse.hamiltonian.matrix(), &h);
        let e_fine = max_abs_diff(fine.hamiltonian.matrix(), &h);
        // second-order: a tenfold smaller step shrinks the error about a hundredfold
        assert!(e_fine < e_coarse / 50.0, "{e_coarse} {e_fine}");
        let at_zero = hamiltonian_from_family(&fam, 0.0, 1e-5).unwrap();
        assert!(at_zero.symmetrization_residual < 1e-8);
        assert!(hamiltonian_from_family(&fam, 0.0, 0.0).is_err());
    }

    #[test]
    fn schrodinger_examples() {
        let psi0 = StateVector::basis(2, 0).unwrap();
        let still = integrate_schrodinger(&Hamiltonian::zero(2), &psi0, 1.0, 10).unwrap();
        assert_eq!(still.state, psi0);

        let fam = UnitaryFamily::rotation_2d(1.0);
        let gen = FiniteDifferenceGenerator { family: &fam, dt: DEFAULT_DT };
        let out = integrate_schrodinger(&gen, &psi0, FRAC_PI_2, 1000).unwrap();
        assert!((out.state.vector()[1] - c(1.0, 0.0)).norm() < 1e-6);
        assert!(out.drift < DRIFT_TOL);
        assert!(integrate_schrodinger(&gen, &psi0, 1.0, 0).is_err());
    }

    #[test]
    fn von_neumann_examples() {
        let mixed = DensityMatrix::new(identity(2).scale(0.5)).unwrap();
        let h = Hamiltonian::new(random::hermitian(2, &mut rng_from_seed(8)), 1.0).unwrap();
        let out = integrate_von_neumann(&h, &mixed, 1.0, 100).unwrap();
        assert!(max_abs_diff(out.state.matrix(), mixed.matrix()) < 1e-14);

        let fam = UnitaryFamily::rotation_2d(1.0);
        let gen = FiniteDifferenceGenerator { family: &fam, dt: DEFAULT_DT };
        let rho0 = DensityMatrix::new(from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]])).unwrap();
        let out = integrate_von_neumann(&gen, &rho0, FRAC_PI_4, 1000).unwrap();
        // R(pi/4) diag(1,0) R(pi/4)^T = (1/2)[[1, 1], [1, 1]]
        let expected = CMatrix::from_element(2, 2, c(0.5, 0.0));
        assert!(max_abs_diff(out.state.matrix(), &expected) < 1e-6);
        assert!(out.drift < DRIFT_TOL);

        let psi0 = StateVector::basis(2, 0).unwrap();
        let pure = integrate_schrodinger(&gen, &psi0, 0.7, 1000).unwrap().state;
        let rho = integrate_von_neumann(&gen, &DensityMatrix::pure(&psi0), 0.7, 1000).unwrap().state;
        assert!(max_abs_diff(rho.matrix(), DensityMatrix::pure(&pure).matrix()) < 1e-6);
    }

    #[test]
    fn ehrenfest_and_heisenberg_examples() {
        let h = random::hermitian(3, &mut rng_from_seed(31));
        let fam = UnitaryFamily::constant_hamiltonian(h.clone(), 1.0).unwrap();
        let rho0 = DensityMatrix::new(random::density(3, &mut rng_from_seed(32))).unwrap();
        // A commuting with H is conserved
        let a = &h * &h;
        assert!(ehrenfest_check(&a, &fam, &rho0, 0.3, 1e-4).unwrap() < 1e-10);

        let rot = UnitaryFamily::rotation_2d(1.0);
        let rho = DensityMatrix::new(from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]])).unwrap();
        assert!(ehrenfest_check(&z(), &rot, &rho, 0.4, 1e-4).unwrap() < 1e-6);
        assert!(heisenberg_eom_check(&z(), &rot, 0.4, 1e-4).unwrap() < 1e-6);
        assert!(heisenberg_eom_check(&a, &fam, 0.3, 1e-4).unwrap() < 1e-6);
    }

    #[test]
    fn heisenberg_gauge_removes_the_hamiltonian() {
        let fam = UnitaryFamily::constant_hamiltonian(random::hermitian(3, &mut rng_from_seed(4)), 1.0).unwrap();
        let h_v = gauge_transformed_hamiltonian(&fam, |s| Ok(fam.evaluate(s)?.adjoint()), 0.6, 1e-5).unwrap();
        assert!(max_abs(&h_v) < 1e-6);
    }

    #[test]
    fn symmetry_examples() {
        let rot = UnitaryFamily::rotation_2d(0.9);
        let times = [0.1, 0.5, 1.3, 2.0];
        assert_eq!(
            classify_symmetry(&identity(2), &rot, &times).unwrap(),
            SymmetryClass::UnitarySymmetry
        );
        let swap = permutation_matrix(&[1, 0]);
        assert_eq!(classify_symmetry(&swap, &rot, &times).unwrap(), SymmetryClass::PhaseSymmetry);
        // Z R Z^† = R^T, which differs from conj(R) = R for a real rotation
        assert_eq!(classify_symmetry(&z(), &rot, &times).unwrap(), SymmetryClass::PhaseSymmetry);
        // Y commutes with its own exponential
        assert_eq!(
            classify_symmetry(&pauli_y(), &rot, &times).unwrap(),
            SymmetryClass::UnitarySymmetry
        );
        // complex conjugation symmetry: diagonal H with V = swap sends exp(-iHt) to conj
        let fam = UnitaryFamily::constant_hamiltonian(from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]), 1.0).unwrap();
        assert_eq!(
            classify_symmetry(&swap, &fam, &times).unwrap(),
            SymmetryClass::AntiUnitarySymmetry
        );
        let hadamard = rotation(FRAC_PI_4);
        assert_eq!(classify_symmetry(&hadamard, &rot, &times).unwrap(), SymmetryClass::UnitarySymmetry);
        let generic = random::unitary(2, &mut rng_from_seed(3));
        assert_eq!(classify_symmetry(&generic, &fam, &times).unwrap(), SymmetryClass::None);
        assert!(classify_symmetry(&identity(2).scale(2.0), &rot, &times).is_err());
    }

    #[test]
    fn noether_examples() {
        let rot = UnitaryFamily::rotation_2d(1.0);
        let rho = DensityMatrix::new(from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]])).unwrap();
        let times: Vec<f64> = (0..100).map(|k| k as f64 * 0.05).collect();
        assert!(noether_check(&identity(2), &rot, &rho, &times).unwrap() < 1e-14);
        assert!(noether_check(&pauli_y(), &rot, &rho, &times).unwrap() < 1e-12);
        let dev = noether_check(&z(), &rot, &rho, &times).unwrap();
        let closed = times.iter().map(|t| ((2.0 * t).cos() - 1.0).abs()).fold(0.0, f64::max);
        assert!((dev - closed).abs() < 1e-12);
    }
}
