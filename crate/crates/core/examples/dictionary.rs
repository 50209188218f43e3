// Evolution operator to transition matrix, two ways, plus the Kraus set and the
// density matrix it induces.

use std::error::Error;

use stochastic_quantum::correspondence::{
    born_rule, density_matrix, dictionary_modulus, dictionary_trace, kraus_decomposition,
    kraus_from_evolution, stochastic_from_evolution, EvolutionOperator,
};
use stochastic_quantum::linalg::max_abs_diff_real;
use stochastic_quantum::random::{self, rng_from_seed};
use stochastic_quantum::stochastic::{propagate, ProbabilityVector};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut rng = rng_from_seed(2024);
    let theta = EvolutionOperator::new(random::unitary(3, &mut rng))?;

    let gamma = stochastic_from_evolution(&theta)?;
    let trace_form = dictionary_trace(theta.matrix());
    let gap = max_abs_diff_real(&trace_form, &dictionary_modulus(theta.matrix()));
    println!("Gamma =\n{:.6}", gamma.matrix());
    println!("trace form vs |Theta_ij|^2: {gap:.2e}");
    println!("doubly stochastic: {}", gamma.is_doubly_stochastic(1e-12));

    let kraus = kraus_from_evolution(&theta);
    println!(
        "{} Kraus operators, identity residual {:.2e}, decomposition gap {:.2e}",
        kraus.len(),
        kraus.identity_residual(),
        max_abs_diff_real(&kraus_decomposition(&kraus), gamma.matrix())
    );

    let p0 = ProbabilityVector::new(vec![0.5, 0.3, 0.2])?;
    let rho = density_matrix(&theta, &p0)?;
    let p_t = propagate(&gamma, &p0)?;
    println!("p(t) from Gamma:       {:?}", p_t.as_slice());
    println!("p(t) from diag(rho):   {:?}", rho.probabilities()?.as_slice());
    println!("coherences |offdiag|:  {:.4}", rho.coherence_norm());

    let psi = theta.state_vector(0)?;
    println!("Born rule from column 0: {:?}", born_rule(&psi).as_slice());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
