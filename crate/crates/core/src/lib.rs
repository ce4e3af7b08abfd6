//! Conjugate and time operators of the harmonic oscillator, computed on
//! finite truncations of the Fock space `l2(N)`.

pub mod ccr;
pub mod cli;
pub mod conjugates;
pub mod dd;
pub mod error;
pub mod evolution;
pub mod fock;
pub mod hermite;
pub mod operators;
pub mod opfunc;
pub mod rng;
pub mod weight;

pub use error::{Error, Result};
