//! Estimation of couplings and fields from equilibrium moments by inverting
//! the mean-field equations and the susceptibility relation.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{log_partition_params, ExactMoments, MagLattice, SampleSet, DEFAULT_LATTICE_CAP};
use crate::limits::{condition_number, SusceptibilityMatrix};
use crate::model::{check_alpha, FiniteMeasure, ModelParams};
use crate::scalar::{atanh, pairwise_sum, pairwise_sum_by};

const SATURATION: f64 = 1.0 - 1e-12;
const VARIANCE_FLOOR: f64 = 1e-15;
const MAX_CONDITION: f64 = 1e10;
const ROW_CHUNK: usize = 4096;

/// Sample averages of `m_l` and `m_l m_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMoments {
    pub mean: Vec<f64>,
    pub second: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    /// Number of rows averaged; `None` for exact Gibbs moments.
    pub sample_count: Option<usize>,
}

impl EmpiricalMoments {
    pub fn n(&self) -> usize {
        self.mean.len()
    }

    /// `⟨m_l m_s⟩ - ⟨m_l⟩⟨m_s⟩`.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..n)
            .map(|l| (0..n).map(|s| self.second[l][s] - self.mean[l] * self.mean[s]).collect())
            .collect()
    }
}

impl From<&ExactMoments> for EmpiricalMoments {
    fn from(m: &ExactMoments) -> Self {
        Self { mean: m.mean.clone(), second: m.second.clone(), sizes: m.sizes.clone(), sample_count: None }
    }
}

/// Mean of `f(row)` over `0..len`: chunks reduced in parallel, then combined
/// in index order.
fn row_mean<F: Fn(usize) -> f64 + Sync>(len: usize, f: F) -> f64 {
    let chunks: Vec<f64> = (0..len.div_ceil(ROW_CHUNK))
        .into_par_iter()
        .map(|c| pairwise_sum_by(c * ROW_CHUNK..((c + 1) * ROW_CHUNK).min(len), &f))
        .collect();
    pairwise_sum(&chunks) / len as f64
}

/// Plain (uncorrected) sample means of the magnetizations and their products.
pub fn estimate_moments(samples: &SampleSet) -> Result<EmpiricalMoments> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::EmptySample(format!("{m} rows, need at least 2")));
    }
    let n = samples.n();
    let sizes = samples.sizes();
    let mag = |r: usize, l: usize| samples.rows()[r][l] as f64 / sizes[l] as f64;
    let mean: Vec<f64> = (0..n).map(|l| row_mean(m, |r| mag(r, l))).collect();
    let mut second = vec![vec![0.0; n]; n];
    for l in 0..n {
        for s in l..n {
            let v = row_mean(m, |r| mag(r, l) * mag(r, s));
            second[l][s] = v;
            second[s][l] = v;
        }
    }
    Ok(EmpiricalMoments { mean, second, sizes: sizes.to_vec(), sample_count: Some(m) })
}

/// `χ̂_ls = N_s (⟨m_l m_s⟩ - ⟨m_l⟩⟨m_s⟩)`.
pub fn empirical_susceptibility(moments: &EmpiricalMoments) -> Result<SusceptibilityMatrix> {
    let cov = moments.covariance();
    let n = moments.n();
    if (0..n).all(|l| cov[l][l] <= VARIANCE_FLOOR) {
        return Err(Error::ZeroVariance);
    }
    Ok(SusceptibilityMatrix {
        chi: (0..n)
            .map(|l| (0..n).map(|s| moments.sizes[s] as f64 * cov[l][s]).collect())
            .collect(),
    })
}

/// Numerical health of an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Condition number of `χ̂`.
    pub chi_condition: f64,
    /// Smallest per-species variance of the magnetization; absent when only
    /// a susceptibility was given.
    pub min_variance: Option<f64>,
    /// Largest `|⟨m_l⟩|`; `atanh` diverges as this approaches 1.
    pub max_abs_mean: f64,
    /// Largest entry of `|X - Xᵀ|/2` removed by symmetrizing the coupling estimate.
    pub asymmetry: f64,
    pub sample_count: Option<usize>,
}

/// Fitted couplings and fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseEstimate {
    #[serde(rename = "J")]
    pub j_hat: Vec<Vec<f64>>,
    #[serde(rename = "h")]
    pub h_hat: Vec<f64>,
    pub chi: SusceptibilityMatrix,
    pub diagnostics: Diagnostics,
    /// Log-likelihood of the sample at the estimate; absent when no sample
    /// was given or the lattice is too large to enumerate.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub log_likelihood: Option<f64>,
}

fn check_means(mean: &[f64]) -> Result<()> {
    match mean.iter().find(|m| !(m.abs() < SATURATION)) {
        Some(&m) => Err(Error::MagnetizationSaturated(m)),
        None => Ok(()),
    }
}

/// One species: `J = 1/(1-⟨m⟩²) - 1/(N Var m)`, `h = atanh⟨m⟩ - J⟨m⟩`.
pub fn invert_cw(moments: &EmpiricalMoments) -> Result<InverseEstimate> {
    if moments.n() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: moments.n() });
    }
    let mean = moments.mean[0];
    check_means(&moments.mean)?;
    let var = moments.second[0][0] - mean * mean;
    if !(var > VARIANCE_FLOOR) {
        return Err(Error::ZeroVariance);
    }
    let chi = moments.sizes[0] as f64 * var;
    let j = 1.0 / (1.0 - mean * mean) - 1.0 / chi;
    let h = atanh(mean) - j * mean;
    Ok(InverseEstimate {
        j_hat: vec![vec![j]],
        h_hat: vec![h],
        chi: SusceptibilityMatrix { chi: vec![vec![chi]] },
        diagnostics: Diagnostics {
            chi_condition: 1.0,
            min_variance: Some(var),
            max_abs_mean: mean.abs(),
            asymmetry: 0.0,
            sample_count: moments.sample_count,
        },
        log_likelihood: None,
    })
}

/// Several species: `J = (P^{-1} - χ̂^{-1}) Λ^{-1}` symmetrized, with
/// `P = diag(1 - ⟨m_l⟩²)` and `Λ = diag(α)`; then
/// `h_l = atanh⟨m_l⟩ - Σ_s α_s J_ls ⟨m_s⟩`.
pub fn invert_multi(moments: &EmpiricalMoments, alpha: &[f64]) -> Result<InverseEstimate> {
    let chi = empirical_susceptibility(moments)?;
    let cov = moments.covariance();
    let min_variance = (0..moments.n()).map(|l| cov[l][l]).fold(f64::INFINITY, f64::min);
    let mut est = invert_from_susceptibility(&moments.mean, &chi, alpha)?;
    est.diagnostics.min_variance = Some(min_variance);
    est.diagnostics.sample_count = moments.sample_count;
    Ok(est)
}

/// The inversion formulas applied to given means and susceptibility; the
/// exact inverse of the forward susceptibility relation.
pub fn invert_from_susceptibility(
    mean: &[f64],
    chi: &SusceptibilityMatrix,
    alpha: &[f64],
) -> Result<InverseEstimate> {
    let n = mean.len();
    if alpha.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: alpha.len() });
    }
    if chi.chi.len() != n || chi.chi.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: chi.chi.len() });
    }
    check_alpha(alpha)?;
    check_means(mean)?;
    let chi_m = chi.matrix();
    let cond = condition_number(&chi_m);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularChi(cond));
    }
    let chi_inv = chi_m.clone().lu().try_inverse().ok_or(Error::SingularChi(f64::INFINITY))?;
    let x = DMatrix::from_fn(n, n, |l, s| {
        let p_inv = if l == s { 1.0 / (1.0 - mean[l] * mean[l]) } else { 0.0 };
        (p_inv - chi_inv[(l, s)]) / alpha[s]
    });
    let j = (&x + x.transpose()) * 0.5;
    let asymmetry = ((&x - x.transpose()) * 0.5).amax();
    let h: Vec<f64> = (0..n)
        .map(|l| atanh(mean[l]) - (0..n).map(|s| alpha[s] * j[(l, s)] * mean[s]).sum::<f64>())
        .collect();
    Ok(InverseEstimate {
        j_hat: (0..n).map(|l| (0..n).map(|s| j[(l, s)]).collect()).collect(),
        h_hat: h,
        chi: chi.clone(),
        diagnostics: Diagnostics {
            chi_condition: cond,
            min_variance: None,
            max_abs_mean: mean.iter().fold(0.0, |a: f64, m| a.max(m.abs())),
            asymmetry,
            sample_count: None,
        },
        log_likelihood: None,
    })
}

fn invert_dispatch(moments: &EmpiricalMoments, alpha: &[f64]) -> Result<InverseEstimate> {
    if moments.n() == 1 {
        check_alpha(alpha)?;
        invert_cw(moments)
    } else {
        invert_multi(moments, alpha)
    }
}

/// Estimate from the rows whose magnetization lies in the closed ball
/// `|m - center| ≤ radius`.
pub fn invert_conditioned(
    samples: &SampleSet,
    center: &[f64],
    radius: f64,
    alpha: &[f64],
) -> Result<InverseEstimate> {
    let restricted = samples.restricted_to_ball(center, radius)?;
    if restricted.len() < 2 {
        return Err(Error::EmptyCondition);
    }
    invert_dispatch(&estimate_moments(&restricted)?, alpha)
}

/// Maximum-likelihood fit. Stationarity of the likelihood is moment
/// matching, so this is [`estimate_moments`] followed by the inversion, with
/// the log-likelihood at the estimate attached.
pub fn mle_fit(samples: &SampleSet, alpha: &[f64]) -> Result<InverseEstimate> {
    let moments = estimate_moments(samples)?;
    let mut est = invert_dispatch(&moments, alpha)?;
    est.log_likelihood = log_likelihood(samples, alpha, &est.j_hat, &est.h_hat)?;
    Ok(est)
}

/// `Σ_rows [N g(m) - N ln 2 - ln Z_N]` for raw parameters; `None` when the
/// lattice exceeds the enumeration cap.
pub fn log_likelihood(samples: &SampleSet, alpha: &[f64], j: &[Vec<f64>], h: &[f64]) -> Result<Option<f64>> {
    let params = ModelParams::from_parts(alpha, j, h, &FiniteMeasure::default());
    let lattice = match MagLattice::for_alpha(alpha, samples.sizes(), DEFAULT_LATTICE_CAP) {
        Ok(l) => l,
        Err(Error::LatticeTooLarge { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let ln_z = log_partition_params(&params, &lattice)?;
    let total = lattice.total() as f64;
    let per_row = (0..samples.len())
        .map(|r| Ok(total * params.g(&samples.magnetization(r))?))
        .collect::<Result<Vec<f64>>>()?;
    let m = samples.len() as f64;
    Ok(Some(pairwise_sum(&per_row) - m * (total * std::f64::consts::LN_2 + ln_z)))
}
