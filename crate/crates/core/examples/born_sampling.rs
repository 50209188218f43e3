// Sampling configurations from a transition matrix column reproduces the Born
// probabilities, and a seed fixes every draw.

use std::error::Error;

use stochastic_quantum::stochastic::{csv_histogram, sample_distribution, StochasticMatrix};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let gamma = StochasticMatrix::sinusoidal(0.7);
    let p = gamma.column(0)?;
    let draws = 100_000;
    let counts = sample_distribution(&p, draws, 42)?;
    for (i, (&k, &pi)) in counts.iter().zip(p.as_slice()).enumerate() {
        let sigma = (draws as f64 * pi * (1.0 - pi)).sqrt();
        println!("config {i}: {k} draws, expected {:.1}, {:.2} sigma", draws as f64 * pi, (k as f64 - draws as f64 * pi) / sigma);
    }
    assert_eq!(counts, sample_distribution(&p, draws, 42)?);
    print!("{}", csv_histogram(&counts));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
