// Gauge freedom: rephasing Theta entrywise or rotating every object by unitaries
// leaves transition probabilities and expectation values alone.

use std::error::Error;

use stochastic_quantum::correspondence::{
    density_matrix, dictionary_modulus, expectation_qm, gauge_schur_hadamard, gauge_unitary,
    EvolutionOperator, GaugeObjects, PhaseMatrix,
};
use stochastic_quantum::linalg::max_abs_diff_real;
use stochastic_quantum::random::{self, rng_from_seed};
use stochastic_quantum::stochastic::ProbabilityVector;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut rng = rng_from_seed(11);
    let n = 4;
    let theta = EvolutionOperator::new(random::unitary(n, &mut rng))?;
    let gamma = dictionary_modulus(theta.matrix());

    let phases = PhaseMatrix::new(random::phases(n, n, &mut rng))?;
    let rephased = gauge_schur_hadamard(&theta, &phases)?;
    println!(
        "Schur-Hadamard gauge: Gamma moves by {:.2e}, Theta moves by {:.2}",
        max_abs_diff_real(&dictionary_modulus(rephased.matrix()), &gamma),
        (rephased.matrix() - theta.matrix()).norm()
    );

    let p0 = ProbabilityVector::new(random::probability(n, &mut rng))?;
    let rho = density_matrix(&theta, &p0)?;
    let a = random::hermitian(n, &mut rng);
    let objects = GaugeObjects {
        rho: rho.clone(),
        psi: None,
        observables: vec![a.clone()],
        theta,
    };
    let frame = gauge_unitary(&objects, &random::unitary(n, &mut rng), &random::unitary(n, &mut rng))?;
    println!("unitary gauge: Gamma moves by {:.2e}", max_abs_diff_real(&frame.gamma(), &gamma));
    println!("<A> before {:.12}, after {:.12}", expectation_qm(&a, &rho)?, frame.expectations()[0]);
    let before = rho.probabilities()?;
    for (i, p) in frame.probabilities().iter().enumerate() {
        println!("p_{i}: {:.12} -> {:.12}", before.as_slice()[i], p);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
