use nalgebra::DMatrix;
use quadrature::double_exponential;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::{covariance_entropic, covariance_tilde, to_rows};
use crate::error::{Error, Result};
use crate::exact::DiscreteLaw;
use crate::forward::{pressure_limit, Functional, HomogeneousForm, MaximumClassification};
use crate::model::{MagnetizationVector, ValidatedModel};

/// `ln` of the tail level below which the integrand is treated as zero.
const LN_TAIL: f64 = -36.841_361_487_904_734; // ln(1e-16)
const QUAD_REL_TOL: f64 = 1e-12;
const WEIGHT_TOL: f64 = 1e-12;

/// Limiting distribution of a rescaled spin sum or of the magnetization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitLaw {
    Gaussian {
        cov: Vec<Vec<f64>>,
    },
    /// Density `exp(F(x) - log_normalizer)` with `F` homogeneous of degree `2k`.
    HigherOrder {
        k: usize,
        #[serde(rename = "coeffs")]
        form: HomogeneousForm,
        log_normalizer: f64,
    },
    DeltaMixture {
        points: Vec<MagnetizationVector>,
        weights: Vec<f64>,
    },
}

impl LimitLaw {
    pub fn dim(&self) -> usize {
        match self {
            LimitLaw::Gaussian { cov } => cov.len(),
            LimitLaw::HigherOrder { form, .. } => form.n,
            LimitLaw::DeltaMixture { points, .. } => points.first().map_or(0, MagnetizationVector::len),
        }
    }
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, scale: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    double_exponential::integrate(f, a, b, QUAD_REL_TOL * scale).integral
}

/// Half-width beyond which `exp(c x^d) < 1e-16`.
fn tail_radius(c: f64, degree: usize) -> f64 {
    (LN_TAIL / c).powf(1.0 / degree as f64)
}

fn one_dim_coeff(form: &HomogeneousForm) -> Result<f64> {
    let c = form.terms.iter().map(|t| t.coeff).sum::<f64>();
    if !(c < 0.0) || form.degree % 2 != 0 {
        return Err(Error::Unnormalized(format!("form {c}·x^{} is not integrable", form.degree)));
    }
    Ok(c)
}

/// `ln ∫ exp(F(x)) dx` for a negative definite homogeneous form `F` of even
/// degree in one or two variables.
///
/// One variable: quadrature on `[-R, R]` with `R` set by the `1e-16` tail
/// level. Two variables: the radial integral is done in closed form,
/// `∫ exp(F) = Γ(2/d)/d · ∫_0^{2π} (-F(cos θ, sin θ))^{-2/d} dθ`, and the
/// angular one by quadrature.
pub fn log_normalizer(form: &HomogeneousForm) -> Result<f64> {
    let d = form.degree;
    match form.n {
        1 => {
            let c = one_dim_coeff(form)?;
            let r = tail_radius(c, d);
            let reference = 2.0 * gamma(1.0 / d as f64) / d as f64 * (-c).powf(-1.0 / d as f64);
            let value = integrate(|x| (c * x.powi(d as i32)).exp(), -r, r, reference);
            Ok(value.ln())
        }
        2 => {
            let e = -2.0 / d as f64;
            let angular = |t: f64| -form.evaluate(&[t.cos(), t.sin()]);
            let samples = 720;
            let min = (0..samples)
                .map(|i| angular(std::f64::consts::TAU * i as f64 / samples as f64))
                .fold(f64::INFINITY, f64::min);
            if !(min > 0.0) {
                return Err(Error::Unnormalized("form is not negative on the unit circle".into()));
            }
            let scale = std::f64::consts::TAU * min.powf(e);
            let value = integrate(|t| angular(t).powf(e), 0.0, std::f64::consts::TAU, scale);
            Ok((gamma(2.0 / d as f64) / d as f64 * value).ln())
        }
        n => Err(Error::UnsupportedDegeneracy(format!(
            "normalizing a degree-{d} form in {n} variables is not supported"
        ))),
    }
}

/// Limit law of the rescaled sums `(S_l - N_l μ_l) / N_l^{1-1/2k}` at a
/// classified maximum.
///
/// Unconditioned laws require the maximum to be the unique global one;
/// `conditioned` refers to conditioning the magnetization on a small ball
/// around the maximum.
pub fn build_limit_law(
    model: &ValidatedModel,
    classification: &MaximumClassification,
    conditioned: bool,
) -> Result<LimitLaw> {
    if !conditioned {
        let global = pressure_limit(model)?;
        if global.maxima.len() != 1 {
            return Err(Error::NonUniqueMaximum(global.maxima.len()));
        }
    }
    let mu = &classification.point.x;
    if classification.k == 1 {
        let cov = match classification.functional {
            Functional::Gaussian => covariance_tilde(model, mu, classification)?,
            Functional::Entropic => covariance_entropic(model, mu)?,
        };
        return Ok(LimitLaw::Gaussian { cov: to_rows(&cov) });
    }
    let form = rescaled_leading_form(model, classification)?;
    let log_normalizer = log_normalizer(&form)?;
    Ok(LimitLaw::HigherOrder { k: classification.k, form, log_normalizer })
}

/// `f_{2k}(x / α^{1/2k})`.
fn rescaled_leading_form(model: &ValidatedModel, c: &MaximumClassification) -> Result<HomogeneousForm> {
    let form = match (&c.form, c.functional) {
        (Some(f), Functional::Gaussian) => f,
        _ => {
            return Err(Error::UnsupportedDegeneracy(
                "higher-order laws need the leading form of f".into(),
            ))
        }
    };
    let exponent = -1.0 / (2 * c.k) as f64;
    let scales: Vec<f64> = model.alpha().iter().map(|a| a.powf(exponent)).collect();
    Ok(form.rescaled(&scales))
}

/// Limit law of the magnetization: point masses at the global maxima of
/// maximal type.
///
/// Weights: one species `b_p ∝ (-λ_p)^{-1/2k*}`; several species
/// `b_p ∝ ∫ exp(f_{2k*}(x / α^{1/2k*})) dx`, which for `k* = 1` is
/// `∝ det(-H̃_p)^{-1/2}`.
pub fn delta_mixture(model: &ValidatedModel, maxima: &[MaximumClassification]) -> Result<LimitLaw> {
    let k_star = maxima
        .iter()
        .map(|c| c.k)
        .max()
        .ok_or_else(|| Error::InvalidOptions("no maxima given".into()))?;
    let top: Vec<&MaximumClassification> = maxima.iter().filter(|c| c.k == k_star).collect();
    let log_b = top
        .iter()
        .map(|c| log_mixture_weight(model, c, k_star))
        .collect::<Result<Vec<f64>>>()?;
    let max = log_b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = log_b.iter().map(|b| (b - max).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(LimitLaw::DeltaMixture {
        points: top.iter().map(|c| c.point.x.clone()).collect(),
        weights: raw.iter().map(|w| w / total).collect(),
    })
}

fn log_mixture_weight(model: &ValidatedModel, c: &MaximumClassification, k_star: usize) -> Result<f64> {
    if model.n() == 1 {
        let lambda = c
            .strength
            .ok_or_else(|| Error::UnsupportedDegeneracy("missing strength".into()))?;
        return Ok(-(-lambda).ln() / (2 * k_star) as f64);
    }
    if k_star >= 2 {
        return log_normalizer(&rescaled_leading_form(model, c)?);
    }
    let h = c.hessian_matrix();
    let log_det = |m: DMatrix<f64>| -> Result<f64> {
        let chol = m.cholesky().ok_or(Error::NotAMaximum("Hessian not negative definite".into()))?;
        Ok(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
    };
    match c.functional {
        Functional::Gaussian => {
            let d_inv = DMatrix::from_fn(model.n(), model.n(), |i, j| {
                if i == j {
                    1.0 / model.alpha()[i].sqrt()
                } else {
                    0.0
                }
            });
            Ok(-0.5 * log_det(-(&d_inv * h * &d_inv))?)
        }
        Functional::Entropic => {
            // det(-H_f) ∝ det(-H_f̄) Π (1 - μ_l²) up to a factor shared by all maxima.
            let p: f64 = c.point.x.0.iter().map(|m| (1.0 - m * m).ln()).sum();
            Ok(-0.5 * (log_det(-h)? + p))
        }
    }
}

fn check_dim(law: &LimitLaw, got: usize) -> Result<()> {
    if law.dim() != got {
        return Err(Error::DimensionMismatch { expected: law.dim(), got });
    }
    Ok(())
}

pub fn law_density(law: &LimitLaw, x: &[f64]) -> Result<f64> {
    check_dim(law, x.len())?;
    match law {
        LimitLaw::Gaussian { cov } => {
            let n = cov.len();
            let m = DMatrix::from_fn(n, n, |i, j| cov[i][j]);
            let chol = m.cholesky().ok_or_else(|| Error::Unnormalized("covariance not positive definite".into()))?;
            let z = chol.l().solve_lower_triangular(&nalgebra::DVector::from_column_slice(x)).expect("triangular");
            let log_det: f64 = chol.l().diagonal().iter().map(|v| v.ln()).sum();
            let log_norm = 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det;
            Ok((-0.5 * z.norm_squared() - log_norm).exp())
        }
        LimitLaw::HigherOrder { form, log_normalizer, .. } => {
            if !log_normalizer.is_finite() {
                return Err(Error::Unnormalized("infinite normalizer".into()));
            }
            Ok((form.evaluate(x) - log_normalizer).exp())
        }
        LimitLaw::DeltaMixture { .. } => Err(Error::NoDensity),
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL || weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Unnormalized(format!("mixture weights sum to {total}")));
    }
    Ok(())
}

/// Distribution function of a one-dimensional law.
pub fn law_cdf_1d(law: &LimitLaw, x: f64) -> Result<f64> {
    cdf_impl(law, x, false)
}

/// `lim_{y↑x} F(y)`; differs from the cdf only at atoms.
fn cdf_left(law: &LimitLaw, x: f64) -> Result<f64> {
    cdf_impl(law, x, true)
}

fn cdf_impl(law: &LimitLaw, x: f64, left: bool) -> Result<f64> {
    check_dim(law, 1)?;
    match law {
        LimitLaw::Gaussian { cov } => {
            let sigma = cov[0][0].sqrt();
            if !(sigma > 0.0) {
                return Err(Error::Unnormalized("variance must be positive".into()));
            }
            Ok(0.5 * libm::erfc(-x / (sigma * std::f64::consts::SQRT_2)))
        }
        LimitLaw::HigherOrder { form, log_normalizer, .. } => {
            let c = one_dim_coeff(form)?;
            let d = form.degree as i32;
            let r = tail_radius(c, form.degree);
            let density = |t: f64| (c * t.powi(d) - log_normalizer).exp();
            if x <= 0.0 {
                Ok(integrate(density, -r, x, 1.0))
            } else {
                Ok(1.0 - integrate(density, x, r, 1.0))
            }
        }
        LimitLaw::DeltaMixture { points, weights } => {
            check_weights(weights)?;
            Ok(points
                .iter()
                .zip(weights)
                .filter(|(p, _)| if left { p.0[0] < x } else { p.0[0] <= x })
                .map(|(_, w)| w)
                .sum())
        }
    }
}

/// Kolmogorov-Smirnov distance between a one-dimensional discrete law and a
/// limit law: the supremum of `|F_emp - F|`, evaluated on both sides of every
/// support point.
pub fn ks_distance(empirical: &DiscreteLaw, law: &LimitLaw) -> Result<f64> {
    if empirical.n() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: empirical.n() });
    }
    check_dim(law, 1)?;
    let total = empirical.total();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Unnormalized(format!("empirical law has mass {total}")));
    }
    let mut order: Vec<usize> = (0..empirical.len()).collect();
    order.sort_by(|&a, &b| empirical.points[a][0].total_cmp(&empirical.points[b][0]));
    let mut cumulative = Vec::with_capacity(order.len());
    let mut acc = 0.0;
    for &i in &order {
        acc += empirical.probabilities[i];
        cumulative.push(acc);
    }
    let gaps = order
        .par_iter()
        .enumerate()
        .map(|(pos, &i)| {
            let x = empirical.points[i][0];
            let before = if pos == 0 { 0.0 } else { cumulative[pos - 1] };
            let f = law_cdf_1d(law, x)?;
            let f_left = cdf_left(law, x)?;
            Ok((cumulative[pos] - f).abs().max((before - f_left).abs()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}
