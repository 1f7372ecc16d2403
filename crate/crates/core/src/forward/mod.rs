//! Forward problem: pressure functionals, mean-field fixed points, maxima
//! classification and the thermodynamic pressure.

mod classify;
mod pressure;
mod solver;

pub use classify::{
    classify_maximum, hessian_f, hessian_fbar, Functional, HomogeneousForm, MaximumClassification,
    Monomial,
};
pub use pressure::{cw_phase_scan, pressure_limit, pressure_limit_with, PhaseRow, PressureResult};
pub use solver::{solve_fixed_points, SolverOptions, StationaryPoint};

use nalgebra::DMatrix;

use crate::error::Result;
use crate::model::{MagnetizationVector, ValidatedModel};
use crate::scalar;

/// `𝓘(x) = ½((1+x)ln(1+x) + (1-x)ln(1-x))`.
pub fn entropy_i(x: f64) -> Result<f64> {
    scalar::entropy_i(x)
}

pub fn functional_fbar(model: &ValidatedModel, x: &MagnetizationVector) -> Result<f64> {
    model.params().fbar(x.as_slice())
}

pub fn functional_f(model: &ValidatedModel, x: &MagnetizationVector) -> Result<f64> {
    model.params().f(x.as_slice())
}

pub fn mean_field_map(model: &ValidatedModel, x: &MagnetizationVector) -> Result<MagnetizationVector> {
    model.params().mean_field_map(x.as_slice()).map(MagnetizationVector)
}

/// Reduced interaction matrix `J` as a dense matrix.
pub fn coupling_matrix(model: &ValidatedModel) -> DMatrix<f64> {
    let n = model.n();
    DMatrix::from_fn(n, n, |l, s| model.coupling(l, s))
}

/// `A = D_α J D_α` with `D_α = diag(√α)`.
pub fn scaled_coupling(model: &ValidatedModel) -> DMatrix<f64> {
    let a = model.alpha();
    let n = model.n();
    DMatrix::from_fn(n, n, |l, s| a[l].sqrt() * model.coupling(l, s) * a[s].sqrt())
}

/// Positive definiteness of `D_α J D_α` (equivalently of `J`).
pub fn has_positive_definite_coupling(model: &ValidatedModel) -> bool {
    scaled_coupling(model).cholesky().is_some()
}
