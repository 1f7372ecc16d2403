//! Numerics for the multi-species mean-field spin model: pressure
//! functionals and their maxima, exact finite-size laws, limit theorems and
//! parameter estimation from samples.

pub mod error;
pub mod exact;
pub mod forward;
pub mod inverse;
pub mod limits;
pub mod model;
pub mod scalar;

pub use error::{Error, ErrorKind, Result};
pub use model::{
    hamiltonian, hamiltonian_density, magnetization, validate_model, Configuration, FiniteMeasure,
    MagnetizationVector, ModelParams, ModelSpec, SiteMeasure, ValidatedModel,
};
pub use scalar::Real;

/// Double-precision model coefficients.
pub type Params = ModelParams<f64>;
/// Single-precision model coefficients.
pub type ParamsF32 = ModelParams<f32>;
