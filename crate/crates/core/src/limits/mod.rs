//! Limit theorems for the spin sums: susceptibilities, the covariance of the
//! Gaussian limit, higher-order laws at degenerate maxima and delta mixtures.

mod law;

pub use law::{
    build_limit_law, delta_mixture, ks_distance, law_cdf_1d, law_density, log_normalizer, LimitLaw,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{hessian_f, hessian_fbar, scaled_coupling, MaximumClassification};
use crate::model::{MagnetizationVector, ValidatedModel};

const DEGENERACY_TOL: f64 = 1e-12;
const MAX_CONDITION: f64 = 1e10;

/// `χ = (1 - μ²) / (1 - J(1 - μ²))` for the Curie-Weiss model.
pub fn susceptibility_cw(j: f64, mu: f64) -> Result<f64> {
    let p = 1.0 - mu * mu;
    let denom = 1.0 - j * p;
    if denom <= DEGENERACY_TOL {
        return Err(Error::DegenerateMaximum(denom));
    }
    Ok(p / denom)
}

/// Response matrix `χ_ls = ∂μ_l/∂h_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SusceptibilityMatrix {
    pub chi: Vec<Vec<f64>>,
}

impl SusceptibilityMatrix {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self { chi: to_rows(m) }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        from_rows(&self.chi)
    }
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub(crate) fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Variance of the tilted single-site measure at each species' effective
/// field; equals `1 - μ_l²` at a fixed point with `±1` spins.
fn site_variances(model: &ValidatedModel, mu: &[f64]) -> Vec<f64> {
    if model.is_binary() {
        return mu.iter().map(|m| 1.0 - m * m).collect();
    }
    let params = model.params();
    params
        .effective_field(mu)
        .iter()
        .map(|&y| params.tilted_cumulants(y, 2)[1])
        .collect()
}

/// Solves `χ = P(I + J Λ χ)`, i.e. `χ = (I - P J Λ)^{-1} P`.
pub fn susceptibility_matrix(model: &ValidatedModel, mu: &MagnetizationVector) -> Result<SusceptibilityMatrix> {
    mu.check_for(model)?;
    let n = model.n();
    let a = model.alpha();
    let p = site_variances(model, mu.as_slice());
    let system = DMatrix::from_fn(n, n, |l, s| {
        let v = p[l] * model.coupling(l, s) * a[s];
        if l == s {
            1.0 - v
        } else {
            -v
        }
    });
    let cond = condition_number(&system);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularSystem(cond));
    }
    let rhs = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(p));
    let chi = system.lu().solve(&rhs).ok_or(Error::SingularSystem(f64::INFINITY))?;
    Ok(SusceptibilityMatrix::from_matrix(&chi))
}

/// `diag(√α)`.
fn sqrt_alpha(model: &ValidatedModel) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        model.n(),
        model.alpha().iter().map(|a| a.sqrt()),
    ))
}

/// Covariance `χ̃ = -H̃_f^{-1} - A^{-1}` of the Gaussian limit at a type-1
/// maximum, with `A = D J D`, `H̃_f = D^{-1} H_f D^{-1}`, `D = diag(√α)`.
pub fn covariance_tilde(
    model: &ValidatedModel,
    mu: &MagnetizationVector,
    classification: &MaximumClassification,
) -> Result<DMatrix<f64>> {
    if classification.k != 1 {
        return Err(Error::NotK1(classification.k));
    }
    mu.check_for(model)?;
    let a = scaled_coupling(model);
    let a_inv = a.clone().cholesky().ok_or(Error::NonPositiveDefiniteA)?.inverse();
    let d = sqrt_alpha(model);
    let d_inv = d.clone().try_inverse().expect("alpha is positive");
    let h_tilde = &d_inv * hessian_f(model.params(), mu.as_slice()) * &d_inv;
    let h_inv = h_tilde.try_inverse().ok_or(Error::SingularSystem(f64::INFINITY))?;
    let cov = -h_inv - a_inv;
    finish_covariance(cov)
}

/// Same covariance through the entropic functional: `D (-H_f̄)^{-1} D`.
///
/// Valid for any symmetric `J`; coincides with [`covariance_tilde`] when
/// `J` is positive definite.
pub fn covariance_entropic(model: &ValidatedModel, mu: &MagnetizationVector) -> Result<DMatrix<f64>> {
    mu.check_for(model)?;
    if !model.is_binary() {
        return Err(Error::UnsupportedMeasure);
    }
    let d = sqrt_alpha(model);
    let neg_h = -hessian_fbar(model.params(), mu.as_slice());
    let inv = neg_h.try_inverse().ok_or(Error::SingularSystem(f64::INFINITY))?;
    finish_covariance(&d * inv * &d)
}

fn finish_covariance(cov: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (&cov + cov.transpose()) * 0.5;
    if sym.iter().any(|v| !v.is_finite()) || sym.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefiniteResult);
    }
    Ok(sym)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{classify_maximum, pressure_limit};
    use crate::model::ModelSpec;

    fn reference() -> ValidatedModel {
        ModelSpec {
            n: 2,
            alpha: vec![0.5, 0.5],
            j: vec![vec![1.0, 0.5], vec![0.5, 1.0]],
            h: vec![0.2, -0.1],
            measure: None,
        }
        .validate()
        .unwrap()
    }

    #[test]
    fn cw_susceptibility_examples() {
        assert_eq!(susceptibility_cw(1e-300, 0.0).unwrap(), 1.0);
        assert!((susceptibility_cw(0.5, 0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(susceptibility_cw(1.0, 0.0), Err(Error::DegenerateMaximum(_))));
    }

    #[test]
    fn one_species_matrix_reduces_to_closed_form() {
        let m = ModelSpec::curie_weiss(0.7, 0.3).validate().unwrap();
        let r = pressure_limit(&m).unwrap();
        let mu = r.maxima[0].point.x.clone();
        let chi = susceptibility_matrix(&m, &mu).unwrap();
        let closed = susceptibility_cw(0.7, mu.0[0]).unwrap();
        assert!((chi.chi[0][0] - closed).abs() < 1e-12);
    }

    #[test]
    fn covariance_routes_agree() {
        let m = reference();
        let r = pressure_limit(&m).unwrap();
        let c = &r.maxima[0];
        let mu = &c.point.x;
        let a = covariance_tilde(&m, mu, c).unwrap();
        let b = covariance_entropic(&m, mu).unwrap();
        assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn covariance_requires_type_one() {
        let m = ModelSpec::curie_weiss(1.0, 0.0).validate().unwrap();
        let r = pressure_limit(&m).unwrap();
        let c = classify_maximum(&m, &r.maxima[0].point).unwrap();
        assert!(matches!(covariance_tilde(&m, &c.point.x, &c), Err(Error::NotK1(2))));
    }
}
