// A measuring device records a subject observable; the device obeys the Born
// rule, the subject's later statistics follow the hybrid transition matrix, and
// a repeated measurement agrees with the first.

use std::error::Error;

use stochastic_quantum::correspondence::DensityMatrix;
use stochastic_quantum::dynamics::UnitaryFamily;
use stochastic_quantum::linalg::{c, from_real_rows, identity, CMatrix};
use stochastic_quantum::measurement::{
    collapse, run_measurement, spectral_decompose, uncertainty_check, MeasurementScenario, DEGENERACY_TOL,
};
use stochastic_quantum::random::{self, rng_from_seed};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let sigma_x = spectral_decompose(&from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]), DEGENERACY_TOL)?;
    let s = MeasurementScenario::minimal(sigma_x.clone(), identity(2), 0, UnitaryFamily::rotation_2d(1.0))?;
    let r = run_measurement(&s, 0.8)?;
    println!("eigenvalues {:?}", sigma_x.eigenvalues());
    println!("device probabilities {:?}", r.device_probs.as_slice());
    println!("hybrid matrix =\n{:.6}", r.hybrid_matrix);
    println!("subject probabilities {:?} (composite gap {:.2e})", r.subject_probs.as_slice(), r.brute_force_residual);

    let up = collapse(&s, 1, s.event_time)?;
    if let Some(state) = &up.state {
        println!("collapsed on +1: {:.6}", state.vector().transpose());
    }
    let again = (sigma_x.projectors()[1].clone() * up.density.matrix()).trace().re;
    println!("repeat gives +1 with probability {again:.12}");

    let mut rng = rng_from_seed(1);
    let sigma_y = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
    let y = spectral_decompose(&sigma_y, DEGENERACY_TOL)?;
    let rho = DensityMatrix::new(random::density(2, &mut rng))?;
    let u = uncertainty_check(&sigma_x, &y, &rho)?;
    println!("Delta X Delta Y = {:.4} >= {:.4}: {}", u.lhs, u.rhs, u.satisfied);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
