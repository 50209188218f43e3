// A subject recorded by an environment at t' forgets its phases: the subject
// dynamics divides at t', and repeated recording gives a Markov chain.

use std::error::Error;

use stochastic_quantum::composite::{
    build_division_scenario, markov_chain_brute_force, markov_chain_emergence, subject_marginal_dynamics,
    CorrelationMap,
};
use stochastic_quantum::dynamics::UnitaryFamily;
use stochastic_quantum::interference::interference_report;
use stochastic_quantum::linalg::{max_abs_diff_real, rotation};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let t_prime = 0.6;
    let t = 1.5;
    let corr = CorrelationMap::identity(2);
    let pre = rotation(t_prime);
    let scenario = build_division_scenario(
        &pre,
        &corr,
        UnitaryFamily::rotation_2d(1.0),
        UnitaryFamily::stationary(2),
        t_prime,
    )?;

    let with_event = subject_marginal_dynamics(&scenario, t)?;
    let isolated = interference_report(&UnitaryFamily::rotation_2d(1.0), 0, t, t_prime)?;
    println!("subject Gamma(t) after a division event =\n{:.6}", with_event.matrix());
    println!("isolated Gamma(t) =\n{:.6}", isolated.gamma_actual.matrix());
    println!("isolated discrepancy at t': {:.4}", isolated.max_abs_all);

    // three recorders, three steps
    let corr = CorrelationMap::new(3, vec![2, 0, 1])?;
    let step = stochastic_quantum::random::unitary(3, &mut stochastic_quantum::random::rng_from_seed(9));
    let chain = markov_chain_emergence(&step, &corr, 3)?;
    let brute = markov_chain_brute_force(&step, &corr, 3)?;
    for (k, (a, b)) in chain.iter().zip(&brute).enumerate() {
        println!("step {}: (Gamma^S)^n vs fresh-environment composite {:.2e}", k + 1, max_abs_diff_real(a.matrix(), b.matrix()));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
