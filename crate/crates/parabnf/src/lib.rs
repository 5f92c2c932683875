//! Numerical toolkit for paradifferential calculus, paralinearization,
//! reduction to constant coefficients, small divisors and Birkhoff normal
//! form steps for fully nonlinear Schrödinger equations on the circle,
//! together with a pseudospectral integrator.

pub mod error;
pub mod evolve;
pub mod harness;
pub mod model;
pub mod paralin;
pub mod quantize;
pub mod reduce;
pub mod resonance;
pub mod spectral_core;
pub mod stats;
pub mod sym_calculus;
pub mod symbol_algebra;

pub use error::{Error, Result};
pub use model::{Monomial, Nonlinearity, PotentialParams};
pub use spectral_core::{FourierField, PairField, C64};
