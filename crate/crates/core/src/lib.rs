//! Hilbert-space representations of generalized stochastic systems.
//!
//! A system with `N` configurations and transition matrix `Gamma(t)` is encoded by
//! an evolution operator `Theta(t)` with `Gamma_ij = |Theta_ij|^2`. The modules cover
//! that dictionary and its gauge freedom ([`correspondence`]), unitary families and
//! their Hamiltonians ([`dynamics`]), the interference terms that make unitary
//! dynamics indivisible ([`interference`]), division events in composite systems
//! ([`composite`]), measurement by a device ([`measurement`]) and unitary dilations
//! of non-unitary evolution ([`dilation`]). [`scenario`] and [`cli`] drive all of it
//! from JSON files through the `sqc` binary.
//!
//! Configuration indices start at `0`.
//!
//! ```
//! use stochastic_quantum::correspondence::{stochastic_from_evolution, EvolutionOperator};
//! use stochastic_quantum::linalg::rotation;
//!
//! let theta = EvolutionOperator::new(rotation(std::f64::consts::FRAC_PI_4)).unwrap();
//! let gamma = stochastic_from_evolution(&theta).unwrap();
//! assert!((gamma.get(0, 1) - 0.5).abs() < 1e-15);
//! ```

pub mod error;
pub mod linalg;
pub mod random;
pub mod stochastic;
pub mod correspondence;
pub mod dynamics;
pub mod interference;
pub mod composite;
pub mod measurement;
pub mod dilation;
pub mod scenario;
pub mod cli;
