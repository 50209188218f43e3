// Non-unitary evolution operators become unitary on a larger configuration
// space: by realification, and by the N^3 Stinespring construction.

use std::error::Error;

use stochastic_quantum::correspondence::{kraus_from_evolution, stochastic_from_evolution, EvolutionOperator, KrausSet};
use stochastic_quantum::dilation::{realify, stinespring_dilate};
use stochastic_quantum::linalg::{c, identity, max_abs_diff_real, unitarity_residual, CMatrix};
use stochastic_quantum::random::{self, rng_from_seed};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let theta = EvolutionOperator::new(random::unitary(2, &mut rng_from_seed(3)))?;
    let real = realify(&theta)?;
    println!(
        "realified: {}x{} real matrix, Gamma gap {:.2e}",
        real.evolution().nrows(),
        real.evolution().ncols(),
        max_abs_diff_real(real.gamma()?.matrix(), stochastic_from_evolution(&theta)?.matrix())
    );

    let g: f64 = 0.36;
    let damping = KrausSet::new(vec![
        CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c((1.0 - g).sqrt(), 0.0)]),
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(g.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
    ])?;
    let lifted = stinespring_dilate(&damping)?;
    println!(
        "amplitude damping on 8 configurations: unitarity {:.2e}, Gamma gap {:.2e}",
        unitarity_residual(&lifted.unitary_out),
        lifted.residual
    );
    println!("Gamma =\n{:.4}", lifted.system()?.gamma()?.matrix());

    let generic = EvolutionOperator::new(random::unit_column_matrix(3, &mut rng_from_seed(4)))?;
    let lifted = stinespring_dilate(&kraus_from_evolution(&generic))?;
    println!("non-unitary 3x3 Theta lifted to 27x27, Gamma gap {:.2e}", lifted.residual);

    let trivial = stinespring_dilate(&kraus_from_evolution(&EvolutionOperator::identity(2)))?;
    println!("identity lifts to identity: {}", trivial.unitary_out == identity(8));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
