use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::solver::StationaryPoint;
use crate::error::{Error, Result};
use crate::model::{ModelParams, ValidatedModel};
use crate::scalar::factorial_f64;

const VANISH_TOL: f64 = 1e-9;
const PROBE_RADIUS: f64 = 1e-4;
const PROBE_RANDOM_DIRECTIONS: usize = 64;
const SPHERE_SAMPLES: usize = 1000;
const MAX_ORDER_1D: usize = 8;
const RNG_SEED: u64 = 0x5eed_f00d;

/// Which pressure functional a classification was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// `f`, from the Gaussian transform; requires `J` positive definite.
    Gaussian,
    /// `f̄`, the entropic functional.
    Entropic,
}

/// One term `coeff · Π v_a^{e_a}` of a homogeneous polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

/// Homogeneous polynomial in `n` variables, stored by monomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousForm {
    pub n: usize,
    pub degree: usize,
    pub terms: Vec<Monomial>,
}

impl HomogeneousForm {
    /// The form `v ↦ Σ_l c_l (B v)_l^d / d!`, expanded into monomials.
    pub fn from_power_sums(degree: usize, c: &[f64], b: &DMatrix<f64>) -> Self {
        let n = b.ncols();
        let terms = exponent_tuples(n, degree)
            .into_iter()
            .map(|e| {
                let denom: f64 = e.iter().map(|&k| factorial_f64(k as usize)).product();
                let coeff: f64 = c
                    .iter()
                    .enumerate()
                    .map(|(l, &cl)| {
                        let prod: f64 = e
                            .iter()
                            .enumerate()
                            .map(|(a, &k)| b[(l, a)].powi(k as i32))
                            .product();
                        cl * prod
                    })
                    .sum::<f64>()
                    / denom;
                Monomial { exponents: e, coeff }
            })
            .collect();
        Self { n, degree, terms }
    }

    /// The one-variable form `c·x^degree`.
    pub fn monomial_1d(degree: usize, coeff: f64) -> Self {
        Self {
            n: 1,
            degree,
            terms: vec![Monomial { exponents: vec![degree as u32], coeff }],
        }
    }

    pub fn evaluate(&self, v: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.exponents
                    .iter()
                    .zip(v)
                    .fold(t.coeff, |acc, (&e, &x)| acc * x.powi(e as i32))
            })
            .sum()
    }

    /// The form `v ↦ F(s ∘ v)` for per-variable scales `s`.
    pub fn rescaled(&self, scales: &[f64]) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Monomial {
                exponents: t.exponents.clone(),
                coeff: t
                    .exponents
                    .iter()
                    .zip(scales)
                    .fold(t.coeff, |acc, (&e, &s)| acc * s.powi(e as i32)),
            })
            .collect();
        Self { n: self.n, degree: self.degree, terms }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).fold(0.0, f64::max)
    }
}

/// All exponent vectors of length `n` summing to `degree`, in lexicographic
/// order (descending on the first variable).
fn exponent_tuples(n: usize, degree: usize) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![degree as u32]];
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut rest in exponent_tuples(n - 1, degree - first) {
            rest.insert(0, first as u32);
            out.push(rest);
        }
    }
    out
}

/// Local maximum with its homogeneous type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximumClassification {
    pub point: StationaryPoint,
    /// Type: the leading nonvanishing term of the expansion has degree `2k`.
    pub k: usize,
    /// One species: the `2k`-th derivative `λ` of `f`.
    pub strength: Option<f64>,
    pub hessian: Vec<Vec<f64>>,
    /// Leading form `f_{2k}` for `k ≥ 2`.
    pub form: Option<HomogeneousForm>,
    pub functional: Functional,
    pub is_global: bool,
}

impl MaximumClassification {
    pub fn hessian_matrix(&self) -> DMatrix<f64> {
        let n = self.hessian.len();
        DMatrix::from_fn(n, n, |i, j| self.hessian[i][j])
    }
}

/// Hessian of `f`: `ΛJΛ(P J Λ - I)` with `P = diag(κ₂(y))`.
pub fn hessian_f(params: &ModelParams<f64>, x: &[f64]) -> DMatrix<f64> {
    let n = params.n;
    let y = params.effective_field(x);
    let kappa2: Vec<f64> = y.iter().map(|&t| params.tilted_cumulants(t, 2)[1]).collect();
    // B = J Λ
    let b = DMatrix::from_fn(n, n, |l, a| params.coupling(l, a) * params.alpha[a]);
    let lam_j_lam = DMatrix::from_fn(n, n, |a, c| params.alpha[a] * b[(a, c)]);
    let mut h = -lam_j_lam;
    for a in 0..n {
        for c in 0..n {
            h[(a, c)] += (0..n).map(|l| params.alpha[l] * kappa2[l] * b[(l, a)] * b[(l, c)]).sum::<f64>();
        }
    }
    h
}

/// Hessian of `f̄`: `ΛJΛ - diag(α_l / (1 - x_l²))`.
pub fn hessian_fbar(params: &ModelParams<f64>, x: &[f64]) -> DMatrix<f64> {
    let n = params.n;
    DMatrix::from_fn(n, n, |l, s| {
        let q = params.alpha[l] * params.coupling(l, s) * params.alpha[s];
        if l == s {
            q - params.alpha[l] / (1.0 - x[l] * x[l])
        } else {
            q
        }
    })
}

/// `d^k/dx^k 𝓘(x)` for `k ≥ 2`.
fn entropy_derivative(x: f64, k: usize) -> f64 {
    let p = (k - 1) as i32;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    0.5 * factorial_f64(k - 2) * ((1.0 - x).powi(-p) + sign * (1.0 + x).powi(-p))
}

/// Degree-`k` Taylor term (`k ≥ 3`) of the chosen functional at `x`.
fn taylor_form(params: &ModelParams<f64>, functional: Functional, x: &[f64], k: usize) -> HomogeneousForm {
    let n = params.n;
    match functional {
        Functional::Gaussian => {
            let y = params.effective_field(x);
            let c: Vec<f64> = (0..n).map(|l| params.alpha[l] * params.tilted_cumulants(y[l], k)[k - 1]).collect();
            let b = DMatrix::from_fn(n, n, |l, a| params.coupling(l, a) * params.alpha[a]);
            HomogeneousForm::from_power_sums(k, &c, &b)
        }
        Functional::Entropic => {
            let c: Vec<f64> = (0..n).map(|l| -params.alpha[l] * entropy_derivative(x[l], k)).collect();
            HomogeneousForm::from_power_sums(k, &c, &DMatrix::identity(n, n))
        }
    }
}

fn functional_value(params: &ModelParams<f64>, functional: Functional, x: &[f64]) -> Option<f64> {
    match functional {
        Functional::Gaussian => params.f(x).ok(),
        Functional::Entropic => params.fbar(x).ok(),
    }
}

fn unit_sphere_samples(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|a| a / norm).collect();
            }
        })
        .collect()
}

/// Rejects points with an ascent direction on a small probe sphere.
fn probe_local_max(params: &ModelParams<f64>, functional: Functional, x: &[f64]) -> Result<()> {
    let n = x.len();
    let centre = functional_value(params, functional, x)
        .ok_or_else(|| Error::NotAMaximum("functional undefined at the point".into()))?;
    let tol = 1e-13 * centre.abs().max(1.0);
    let mut directions = Vec::new();
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sign;
            directions.push(e);
        }
    }
    if n > 1 {
        directions.extend(unit_sphere_samples(n, PROBE_RANDOM_DIRECTIONS, RNG_SEED));
    }
    for u in &directions {
        let probe: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + PROBE_RADIUS * b).collect();
        if let Some(v) = functional_value(params, functional, &probe) {
            if v > centre + tol {
                return Err(Error::NotAMaximum(format!(
                    "ascent of {:e} along direction {u:?}",
                    v - centre
                )));
            }
        }
    }
    Ok(())
}

/// Type, strength and leading form of a local maximum of the pressure functional.
///
/// One species: derivatives of `f` up to order 8; the first nonvanishing one
/// decides. Several species: type 1 when the Hessian is negative definite,
/// type 2 when the Hessian and cubic term vanish and the quartic term is
/// negative on the unit sphere; anything else is rejected.
pub fn classify_maximum(model: &ValidatedModel, point: &StationaryPoint) -> Result<MaximumClassification> {
    point.x.check_for(model)?;
    let params = model.params();
    let x = point.x.as_slice();
    let n = model.n();

    if n == 1 {
        probe_local_max(params, Functional::Gaussian, x)?;
        let j = params.coupling(0, 0);
        let y = params.effective_field(x)[0];
        let kappa = params.tilted_cumulants(y, MAX_ORDER_1D);
        let hessian = -j + j * j * kappa[1];
        for order in 2..=MAX_ORDER_1D {
            let d = if order == 2 { hessian } else { j.powi(order as i32) * kappa[order - 1] };
            if d.abs() <= VANISH_TOL {
                continue;
            }
            if order % 2 == 1 || d > 0.0 {
                return Err(Error::NotAMaximum(format!("derivative of order {order} is {d:e}")));
            }
            let k = order / 2;
            return Ok(MaximumClassification {
                point: point.clone(),
                k,
                strength: Some(d),
                hessian: vec![vec![hessian]],
                form: (k >= 2).then(|| HomogeneousForm::monomial_1d(order, d / factorial_f64(order))),
                functional: Functional::Gaussian,
                is_global: false,
            });
        }
        return Err(Error::UnsupportedDegeneracy(format!(
            "derivatives up to order {MAX_ORDER_1D} vanish"
        )));
    }

    let functional = if model.is_binary() && !super::has_positive_definite_coupling(model) {
        Functional::Entropic
    } else {
        Functional::Gaussian
    };
    probe_local_max(params, functional, x)?;
    let h = match functional {
        Functional::Gaussian => hessian_f(params, x),
        Functional::Entropic => hessian_fbar(params, x),
    };
    let hessian: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| h[(i, j)]).collect()).collect();
    let eig = h.clone().symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let base = MaximumClassification {
        point: point.clone(),
        k: 1,
        strength: None,
        hessian,
        form: None,
        functional,
        is_global: false,
    };
    if lambda_max < -VANISH_TOL {
        return Ok(base);
    }
    if lambda_max > VANISH_TOL {
        return Err(Error::NotAMaximum(format!("Hessian eigenvalue {lambda_max:e} > 0")));
    }
    if h.amax() > VANISH_TOL {
        return Err(Error::UnsupportedDegeneracy(
            "Hessian is singular but nonzero; mixed homogeneity is not supported".into(),
        ));
    }
    let cubic = taylor_form(params, functional, x, 3);
    if cubic.max_abs_coeff() > VANISH_TOL {
        return Err(Error::NotAMaximum("nonvanishing cubic term".into()));
    }
    let quartic = taylor_form(params, functional, x, 4);
    let positive = unit_sphere_samples(n, SPHERE_SAMPLES, RNG_SEED ^ 1)
        .iter()
        .map(|u| quartic.evaluate(u))
        .find(|&v| !(v < -1e-12));
    if let Some(v) = positive {
        return Err(Error::UnsupportedDegeneracy(format!(
            "quartic term is not negative definite (sampled value {v:e})"
        )));
    }
    Ok(MaximumClassification { k: 2, form: Some(quartic), ..base })
}
