// Scenario files drive the command line; the same queries are available as a
// library call.

use std::error::Error;

use stochastic_quantum::scenario::{run_queries, Scenario};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/division.json");
    let scenario = Scenario::from_json(&std::fs::read_to_string(path)?)?;
    for (name, csv) in run_queries(&scenario, scenario.seed)? {
        println!("# {name}\n{csv}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
