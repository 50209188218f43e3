// Recording the subject in an environment removes the off-diagonal part of its
// reduced density matrix.

use std::error::Error;

use stochastic_quantum::composite::{decoherence_compare, CorrelationMap};
use stochastic_quantum::random::{self, rng_from_seed};
use stochastic_quantum::stochastic::ProbabilityVector;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut rng = rng_from_seed(17);
    let u = random::unitary(3, &mut rng);
    let p0 = ProbabilityVector::new(vec![0.6, 0.3, 0.1])?;
    let cmp = decoherence_compare(&u, &p0, &CorrelationMap::new(4, vec![1, 3, 0])?)?;

    println!("isolated rho =\n{:.4}", cmp.rho_isolated.matrix());
    println!("after recording =\n{:.4}", cmp.rho_decohered.matrix());
    println!("coherence removed: {:.4}", cmp.coherence_norm_drop);
    println!("partial trace vs diagonal truncation: {:.2e}", cmp.partial_trace_residual);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
