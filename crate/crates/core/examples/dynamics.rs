// Hamiltonians read off a unitary family, re-integrated with RK4, and the
// Heisenberg-picture checks; then symmetries and a conserved quantity.

use std::error::Error;

use stochastic_quantum::correspondence::{DensityMatrix, StateVector};
use stochastic_quantum::dynamics::{
    classify_symmetry, ehrenfest_check, hamiltonian_from_family, heisenberg_eom_check,
    integrate_schrodinger, integrate_von_neumann, noether_check, FiniteDifferenceGenerator,
    UnitaryFamily, DEFAULT_DT,
};
use stochastic_quantum::linalg::{c, from_real_rows, max_abs_diff, CMatrix};
use stochastic_quantum::random::{self, rng_from_seed};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut rng = rng_from_seed(5);
    let h1 = random::hermitian(3, &mut rng);
    let h2 = random::hermitian(3, &mut rng);
    let family = UnitaryFamily::piecewise_constant(vec![0.4], vec![h1.clone(), h2], 1.0)?;

    let est = hamiltonian_from_family(&family, 0.2, DEFAULT_DT)?;
    println!("H(0.2) recovered to {:.2e}", max_abs_diff(est.hamiltonian.matrix(), &h1));

    let psi0 = StateVector::new(random::state(3, &mut rng))?;
    let generator = FiniteDifferenceGenerator { family: &family, dt: DEFAULT_DT };
    let out = integrate_schrodinger(&generator, &psi0, 1.0, 1000)?;
    let exact = family.evaluate(1.0)? * psi0.vector();
    println!(
        "RK4 through the jump at t=0.4: error {:.2e}, norm drift {:.2e}",
        (out.state.vector() - exact).camax(),
        out.drift
    );

    let rho0 = DensityMatrix::new(random::density(3, &mut rng))?;
    let rho = integrate_von_neumann(&generator, &rho0, 1.0, 1000)?;
    println!("von Neumann trace drift {:.2e}", rho.drift);

    let a = random::hermitian(3, &mut rng);
    println!("Ehrenfest residual at t=0.7:  {:.2e}", ehrenfest_check(&a, &family, &rho0, 0.7, 1e-4)?);
    println!("Heisenberg residual at t=0.7: {:.2e}", heisenberg_eom_check(&a, &family, 0.7, 1e-4)?);

    let rotation = UnitaryFamily::rotation_2d(1.0);
    let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
    let sigma_y = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
    let flip = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let z = from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]);
    println!("sigma_y vs rotation: {:?}", classify_symmetry(&sigma_y, &rotation, &times)?);
    println!("sigma_x vs rotation: {:?}", classify_symmetry(&flip, &rotation, &times)?);
    println!("sigma_z vs rotation: {:?}", classify_symmetry(&z, &rotation, &times)?);

    let rho2 = DensityMatrix::new(random::density(2, &mut rng))?;
    println!("<sigma_y> drift under rotation: {:.2e}", noether_check(&sigma_y, &rotation, &rho2, &times)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
