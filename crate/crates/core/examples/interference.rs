// Unistochastic dynamics is indivisible: Gamma(t) differs from
// Gamma(t <- t') Gamma(t') by the cross terms of the wave function.

use std::error::Error;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use stochastic_quantum::dynamics::UnitaryFamily;
use stochastic_quantum::interference::{divisibility_profile, interference_report, profile_csv};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let family = UnitaryFamily::rotation_2d(1.0);

    let r = interference_report(&family, 0, FRAC_PI_2, FRAC_PI_4)?;
    println!("Gamma(t) =\n{:.6}", r.gamma_actual.matrix());
    println!("Gamma(t <- t') Gamma(t') =\n{:.6}", r.gamma_divided);
    println!("cross terms for j0 = 0: {:?}", r.cross_terms.as_slice());
    println!("max |discrepancy| = {}", r.max_abs_discrepancy);

    // vanishes where Gamma(t') is a permutation: t' = 0 and t' = t
    let grid: Vec<f64> = (0..=8).map(|k| FRAC_PI_2 * k as f64 / 8.0).collect();
    let profile = divisibility_profile(&family, 0, FRAC_PI_2, &grid)?;
    print!("{}", profile_csv(&profile));
    let events: Vec<f64> = profile.iter().filter(|e| e.division_event).map(|e| e.t_prime).collect();
    println!("division events at {events:?}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
