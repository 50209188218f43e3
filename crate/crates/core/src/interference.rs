//! Indivisibility of unistochastic dynamics: relative evolution operators and the
//! interference discrepancy `Gamma(t) - Gamma(t <- t') Gamma(t')`.

use nalgebra::DVector;

use crate::dynamics::UnitaryFamily;
use crate::error::{Error, Result};
use crate::linalg::{ensure_unitary, max_abs_diff, modulus_squared, CMatrix, RMatrix, DEFAULT_TOL};
use crate::stochastic::{format_real, StochasticMatrix};

/// Cross-check tolerance between the two discrepancy routes.
pub const ROUTE_TOL: f64 = 1e-12;

/// Profile entries at or below this are reported as division events.
pub const DIVISION_THRESHOLD: f64 = 1e-10;

/// `U(t <- t') = U(t) U^†(t')`.
pub fn relative_evolution(family: &UnitaryFamily, t: f64, t_prime: f64) -> Result<CMatrix> {
    let u_t = family.evaluate(t)?;
    let u_tp = family.evaluate(t_prime)?;
    let rel = &u_t * u_tp.adjoint();
    let residual = max_abs_diff(&(&rel * &u_tp), &u_t);
    if residual > ROUTE_TOL {
        return Err(Error::Internal(format!(
            "composition law violated by {residual:.3e}"
        )));
    }
    Ok(rel)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceReport {
    pub t: f64,
    pub t_prime: f64,
    pub j0: usize,
    pub gamma_actual: StochasticMatrix,
    /// `Gamma(t <- t') Gamma(t')`, the divisible candidate.
    pub gamma_divided: RMatrix,
    /// `gamma_actual - gamma_divided`.
    pub discrepancy: RMatrix,
    /// Column `j0` of the discrepancy from the explicit `k != l` cross-term sum.
    pub cross_terms: DVector<f64>,
    /// Largest entry of column `j0`.
    pub max_abs_discrepancy: f64,
    /// Largest entry over all initial configurations.
    pub max_abs_all: f64,
}

/// `sum_{k != l} conj(U_ik Psi_k) U_il Psi_l` for each row `i`.
pub fn cross_term_sum(u_rel: &CMatrix, psi: &[num_complex::Complex64]) -> DVector<f64> {
    let n = u_rel.nrows();
    DVector::from_fn(n, |i, _| {
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for k in 0..n {
            let a = (u_rel[(i, k)] * psi[k]).conj();
            for l in 0..n {
                if k != l {
                    acc += a * u_rel[(i, l)] * psi[l];
                }
            }
        }
        acc.re
    })
}

/// Discrepancy report from the relative operator `U(t <- t')` and `U(t')`.
pub fn report_from_operators(
    u_rel: &CMatrix,
    u_tprime: &CMatrix,
    j0: usize,
    t: f64,
    t_prime: f64,
) -> Result<InterferenceReport> {
    ensure_unitary(u_rel, DEFAULT_TOL)?;
    ensure_unitary(u_tprime, DEFAULT_TOL)?;
    let n = u_rel.nrows();
    if u_tprime.nrows() != n {
        return Err(Error::Dimension("relative and initial operators differ in size".into()));
    }
    if j0 >= n {
        return Err(Error::OutOfRange { index: j0, dim: n });
    }
    let u_t = u_rel * u_tprime;
    let gamma_actual = StochasticMatrix::new(modulus_squared(&u_t))?;
    let gamma_divided = modulus_squared(u_rel) * modulus_squared(u_tprime);
    let discrepancy = gamma_actual.matrix() - &gamma_divided;

    let psi: Vec<_> = u_tprime.column(j0).iter().copied().collect();
    let cross_terms = cross_term_sum(u_rel, &psi);
    let column = discrepancy.column(j0);
    let residual = (column - &cross_terms).amax();
    if residual > ROUTE_TOL {
        return Err(Error::Internal(format!(
            "discrepancy routes disagree by {residual:.3e}"
        )));
    }
    Ok(InterferenceReport {
        t,
        t_prime,
        j0,
        max_abs_discrepancy: column.amax(),
        max_abs_all: discrepancy.amax(),
        gamma_actual,
        gamma_divided,
        discrepancy,
        cross_terms,
    })
}

pub fn interference_report(family: &UnitaryFamily, j0: usize, t: f64, t_prime: f64) -> Result<InterferenceReport> {
    if j0 >= family.n() {
        return Err(Error::OutOfRange { index: j0, dim: family.n() });
    }
    let u_rel = relative_evolution(family, t, t_prime)?;
    let u_tp = family.evaluate(t_prime)?;
    report_from_operators(&u_rel, &u_tp, j0, t, t_prime)
}

/// `Gamma(t) - Gamma(t <- t') Gamma(t')` for dynamics known only through its
/// transition matrices.
pub fn stochastic_discrepancy(
    gamma_t: &StochasticMatrix,
    gamma_relative: &StochasticMatrix,
    gamma_tprime: &StochasticMatrix,
) -> Result<RMatrix> {
    let divided = gamma_relative.compose(gamma_tprime)?;
    if divided.n() != gamma_t.n() {
        return Err(Error::Dimension("transition matrices differ in size".into()));
    }
    Ok(gamma_t.matrix() - divided.matrix())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileEntry {
    pub t_prime: f64,
    pub max_abs_discrepancy: f64,
    pub division_event: bool,
}

/// Sweeps the discrepancy for initial configuration `j0` over intermediate times.
pub fn divisibility_profile(family: &UnitaryFamily, j0: usize, t: f64, grid: &[f64]) -> Result<Vec<ProfileEntry>> {
    grid.iter()
        .map(|&t_prime| {
            let r = interference_report(family, j0, t, t_prime)?;
            Ok(ProfileEntry {
                t_prime,
                max_abs_discrepancy: r.max_abs_discrepancy,
                division_event: r.max_abs_discrepancy <= DIVISION_THRESHOLD,
            })
        })
        .collect()
}

pub fn profile_csv(entries: &[ProfileEntry]) -> String {
    let mut out = String::from("t_prime,max_abs_discrepancy\n");
    for e in entries {
        out.push_str(&format!("{},{}\n", format_real(e.t_prime), format_real(e.max_abs_discrepancy)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correspondence::{gauge_schur_hadamard, EvolutionOperator, PhaseMatrix};
    use crate::linalg::{exp_i_hermitian, identity, max_abs_diff_real, permutation_matrix, rotation};
    use crate::random::{self, rng_from_seed};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    // For the rotation family with j0 = 0 the discrepancy column is
    // (-1/2, 1/2) sin 2w(t - t') sin 2wt'.
    fn rotation_oracle(omega: f64, t: f64, t_prime: f64) -> f64 {
        0.5 * ((2.0 * omega * (t - t_prime)).sin() * (2.0 * omega * t_prime).sin()).abs()
    }

    #[test]
    fn relative_evolution_examples() {
        let rot = UnitaryFamily::rotation_2d(1.7);
        assert!(max_abs_diff(&relative_evolution(&rot, 0.4, 0.4).unwrap(), &identity(2)) < 1e-15);
        let rel = relative_evolution(&rot, 0.9, 0.3).unwrap();
        assert!(max_abs_diff(&rel, &rotation(1.7 * 0.6)) < 1e-14);
    }

    #[test]
    fn rotation_quarter_example() {
        let rot = UnitaryFamily::rotation_2d(1.0);
        let r = interference_report(&rot, 0, FRAC_PI_2, FRAC_PI_4).unwrap();
        let flip = RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(max_abs_diff_real(r.gamma_actual.matrix(), &flip) < 1e-15);
        assert!(max_abs_diff_real(&r.gamma_divided, &RMatrix::from_element(2, 2, 0.5)) < 1e-15);
        assert!((r.max_abs_discrepancy - 0.5).abs() < 1e-15);
        assert!(r.discrepancy.column(0).sum().abs() < 1e-12);
    }

    #[test]
    fn start_time_and_permutations_have_no_discrepancy() {
        let fam = UnitaryFamily::constant_hamiltonian(random::hermitian(4, &mut rng_from_seed(5)), 1.0).unwrap();
        assert!(interference_report(&fam, 2, 1.3, 0.0).unwrap().max_abs_all < 1e-15);

        let times = vec![0.0, 1.0, 2.0, 3.0];
        let perms = [vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1], vec![0, 2, 1]];
        let grid = UnitaryFamily::sampled_grid(times.clone(), perms.iter().map(|p| permutation_matrix(p)).collect()).unwrap();
        for &t in &times {
            for &tp in &times {
                assert!(interference_report(&grid, 1, t, tp).unwrap().max_abs_all < 1e-12);
            }
        }
        assert!(matches!(interference_report(&grid, 3, 1.0, 0.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn rotation_profile_matches_closed_form() {
        let omega = 0.8;
        let t = 2.1;
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * t / 40.0).collect();
        let profile = divisibility_profile(&UnitaryFamily::rotation_2d(omega), 0, t, &grid).unwrap();
        assert!(profile[0].division_event && profile[0].max_abs_discrepancy == 0.0);
        for e in &profile {
            assert!((e.max_abs_discrepancy - rotation_oracle(omega, t, e.t_prime)).abs() < 1e-14);
        }
        let csv = profile_csv(&profile);
        assert!(csv.starts_with("t_prime,max_abs_discrepancy\n"));
        assert_eq!(csv.lines().count(), 42);
    }

    #[test]
    fn stochastic_discrepancy_matches_report() {
        let rot = UnitaryFamily::rotation_2d(1.0);
        let r = interference_report(&rot, 0, 1.1, 0.4).unwrap();
        let d = stochastic_discrepancy(
            &StochasticMatrix::sinusoidal(1.1),
            &StochasticMatrix::sinusoidal(0.7),
            &StochasticMatrix::sinusoidal(0.4),
        )
        .unwrap();
        assert!(max_abs_diff_real(&d, &r.discrepancy) < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn routes_agree_for_random_families(seed in any::<u64>(), n in 2usize..=8, t in 0.0f64..3.0, s in 0.0f64..1.0) {
            let mut rng = rng_from_seed(seed);
            let fam = UnitaryFamily::constant_hamiltonian(random::hermitian(n, &mut rng), 1.0).unwrap();
            for j0 in 0..n {
                let r = interference_report(&fam, j0, t, s * t).unwrap();
                let divided = StochasticMatrix::new(r.gamma_divided.clone());
                prop_assert!(divided.is_ok());
                for col in r.discrepancy.column_iter() {
                    prop_assert!(col.sum().abs() < 1e-12);
                }
            }
        }

        #[test]
        fn composition_law_on_random_grids(seed in any::<u64>(), n in 2usize..=5) {
            let mut rng = rng_from_seed(seed);
            let h = random::hermitian(n, &mut rng);
            let times: Vec<f64> = (0..6).map(|k| k as f64 * 0.3).collect();
            let us: Vec<CMatrix> = times.iter().map(|&t| exp_i_hermitian(&h, t) * if t == 0.0 { identity(n) } else { random::unitary(n, &mut rng) }).collect();
            let fam = UnitaryFamily::sampled_grid(times, us).unwrap();
            prop_assert!(relative_evolution(&fam, 1.37, 0.41).is_ok());
        }

        #[test]
        fn divided_candidate_ignores_relative_phases(seed in any::<u64>(), n in 2usize..=5) {
            let mut rng = rng_from_seed(seed);
            let u_rel = random::unitary(n, &mut rng);
            let u_tp = random::unitary(n, &mut rng);
            let phases = PhaseMatrix::new(random::phases(n, n, &mut rng)).unwrap();
            let gauged = gauge_schur_hadamard(&EvolutionOperator::new(u_rel.clone()).unwrap(), &phases).unwrap();
            let a = report_from_operators(&u_rel, &u_tp, 0, 1.0, 0.5).unwrap();
            let b = modulus_squared(gauged.matrix()) * modulus_squared(&u_tp);
            prop_assert!(max_abs_diff_real(&a.gamma_divided, &b) < 1e-12);
        }
    }
}
