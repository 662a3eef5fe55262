//! Ontological models of qubits and qutrits over complex projective space.
//!
//! An ontological model assigns every quantum pure state `|ψ⟩` a probability
//! density over a space of ontic states `λ` and decides measurement outcomes
//! deterministically from `λ`. This crate implements four such density
//! families, all of which depend on `λ` only through the overlap
//! `t = |⟨λ|ψ⟩|²`:
//!
//!  - **ks-qubit**: the Kochen–Specker qubit model, weight `max(t - 1/2, 0)`.
//!  - **marble-world**: the same model seen on the real 2-sphere, with a
//!    cosine density on a hemisphere.
//!  - **linear-trace**: weight `max(t - Δ, 0)` on `CP^{d-1}`.
//!  - **uniform-embedded**: a flat density on `t ≥ Δ` inside a space one
//!    dimension larger than the system.
//!
//! Outcomes are assigned to the closest central element of a measurement
//! context. On top of that the crate provides collapse and Bayesian updates,
//! the faithful/unfaithful split behind the model's contextuality, and seeded
//! Monte Carlo estimators that give bit-identical tallies for a fixed seed.
//!
//! The crate is `no_std` and only needs `alloc`. Parallel execution is plugged
//! in through [`engine::Executor`]; [`engine::Sequential`] is the built-in one.
//!
//! ```
//! use ontolab_core::{engine::{Engine, Sequential}, model::ModelSpec, projective::{Context, PureState}};
//! use num_complex::Complex64;
//!
//! let model = ModelSpec::ks_qubit();
//! let theta = core::f64::consts::PI / 6.0;
//! let psi = PureState::new(&[Complex64::new(theta.cos(), 0.0), Complex64::new(theta.sin(), 0.0)]).unwrap();
//! let context = Context::computational(2, 2).unwrap();
//! let engine = Engine::new(7, Sequential);
//! let probs = engine.estimate_outcome_probs(&model, &psi, &context, 20_000).unwrap();
//! assert!((probs[0].mean - 0.75).abs() < 5.0 * probs[0].std_error);
//! ```
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod engine;
pub mod error;
pub mod measurement;
pub mod model;
pub mod projective;
pub mod quadrature;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;
