// Whether a composite transition matrix factorizes into subsystem matrices.

use std::error::Error;
use std::f64::consts::FRAC_PI_4;

use stochastic_quantum::composite::{entanglement_factorization_test, factorization_of_unitary, CompositeSystem};
use stochastic_quantum::dynamics::UnitaryFamily;
use stochastic_quantum::linalg::{from_real_rows, tensor, rotation};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let swap = from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
    ]);
    let entangling = CompositeSystem::new(
        vec![("a".into(), 2), ("b".into(), 2)],
        UnitaryFamily::constant_hamiltonian(swap, 1.0)?,
    )?;
    let r = entanglement_factorization_test(&entangling, FRAC_PI_4, 1e-10)?;
    println!("exp(-i t SWAP) at t = pi/4: factorizable {}, residual {:.4}", r.factorizable, r.best_residual);
    println!("joint Gamma =\n{:.4}", r.gamma_joint);

    let product = tensor(&rotation(0.3), &rotation(1.1));
    let r = factorization_of_unitary(&product, (2, 2), 1e-10)?;
    println!("independent rotations: factorizable {}, residual {:.2e}", r.factorizable, r.best_residual);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
