//! Spectral reconstruction of mixed second derivatives on the periodic square
//! `[0, 2π)²`, with the supporting Fourier and real-variable numerics and two
//! fat-Cantor counterexample constructions.
//!
//! The modules build on each other in order: [`grid`] holds samples,
//! [`fourier`] moves them to coefficient space, [`calculus`] provides
//! differences and primitives, [`pathology`] builds the counterexamples,
//! [`verify`] runs the end-to-end pipeline, and [`cli`] drives it all.

pub mod calculus;
pub mod cli;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod pathology;
pub mod verify;

pub use error::{Error, Result};
