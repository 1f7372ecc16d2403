//! Exact finite-size computations by enumeration of the magnetization lattice.
//!
//! Only the `±1` single-site measure is supported: the counting of
//! configurations per lattice point is binomial.

mod lattice;
mod sample;
mod sums;

pub use lattice::{check_sizes, log_count, MagLattice, DEFAULT_LATTICE_CAP};
pub use sample::{exact_sample, exact_sample_with_lattice, materialize_configuration, SampleSet};
pub use sums::{normalized_sum_law, DiscreteLaw};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{ModelParams, ValidatedModel};
use crate::scalar::{log_sum_exp, pairwise_sum_by};
use lattice::WeightKernel;

const CHUNK: usize = 1 << 14;

/// `ln Σ_i exp(w(i))` over `0..len`, reduced in fixed-size chunks that are
/// combined in index order, so the result does not depend on the thread count.
fn chunked_log_sum_exp<F: Fn(usize) -> f64 + Sync>(len: usize, w: F) -> f64 {
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(len);
            let values: Vec<f64> = (start..end).map(&w).collect();
            log_sum_exp(&values)
        })
        .collect();
    log_sum_exp(&partial)
}

/// `ln Z_N`, including the `2^{-N}` normalization of the product measure.
pub fn log_partition(model: &ValidatedModel, sizes: &[usize]) -> Result<f64> {
    let lattice = MagLattice::new(model, sizes)?;
    log_partition_on(model, &lattice)
}

pub fn log_partition_on(model: &ValidatedModel, lattice: &MagLattice) -> Result<f64> {
    log_partition_params(model.params(), lattice)
}

/// `ln Z_N` for raw coefficients that need not pass model validation.
pub fn log_partition_params(params: &ModelParams<f64>, lattice: &MagLattice) -> Result<f64> {
    let kernel = WeightKernel::from_params(params, lattice)?;
    Ok(chunked_log_sum_exp(lattice.len(), |i| kernel.log_weight(i)))
}

/// `p_N = ln Z_N / N`.
pub fn finite_pressure(model: &ValidatedModel, sizes: &[usize]) -> Result<f64> {
    let total: usize = sizes.iter().sum();
    Ok(log_partition(model, sizes)? / total as f64)
}

/// Exact law of the magnetization vector under the Boltzmann-Gibbs measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationLaw {
    pub lattice: MagLattice,
    /// Normalized log-probabilities, indexed like the lattice.
    pub log_weights: Vec<f64>,
    pub log_partition: f64,
}

impl MagnetizationLaw {
    pub fn probability(&self, index: usize) -> f64 {
        self.log_weights[index].exp()
    }

    /// `ln Σ p`; zero up to rounding.
    pub fn log_total(&self) -> f64 {
        chunked_log_sum_exp(self.log_weights.len(), |i| self.log_weights[i])
    }

    /// Total probability of the lattice points satisfying `keep`.
    pub fn mass_where<F: Fn(&[f64]) -> bool + Sync>(&self, keep: F) -> f64 {
        let len = self.log_weights.len();
        let term = |i: usize| {
            if keep(&self.lattice.magnetization(i)) {
                self.probability(i)
            } else {
                0.0
            }
        };
        pairwise_sum_by(0..len, &term)
    }

    /// Probability of the closed Euclidean ball `|m - center| ≤ radius`.
    pub fn mass_within(&self, center: &[f64], radius: f64) -> f64 {
        self.mass_where(|m| euclidean(m, center) <= radius)
    }

    /// CSV with one row per lattice point: `m_1, ..., m_n, probability`.
    pub fn to_csv(&self) -> String {
        let n = self.lattice.n();
        let mut out = String::new();
        let header: Vec<String> = (1..=n).map(|l| format!("m_{l}")).collect();
        out.push_str(&header.join(","));
        out.push_str(",probability\n");
        for i in 0..self.log_weights.len() {
            for v in self.lattice.magnetization(i) {
                out.push_str(&format!("{v:.16e},"));
            }
            out.push_str(&format!("{:.16e}\n", self.probability(i)));
        }
        out
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn magnetization_law(model: &ValidatedModel, sizes: &[usize]) -> Result<MagnetizationLaw> {
    let lattice = MagLattice::new(model, sizes)?;
    magnetization_law_on(model, &lattice)
}

pub fn magnetization_law_on(model: &ValidatedModel, lattice: &MagLattice) -> Result<MagnetizationLaw> {
    let kernel = WeightKernel::new(model, lattice)?;
    let raw: Vec<f64> = (0..lattice.len()).into_par_iter().map(|i| kernel.log_weight(i)).collect();
    let log_partition = chunked_log_sum_exp(raw.len(), |i| raw[i]);
    let log_weights = raw.into_iter().map(|w| w - log_partition).collect();
    Ok(MagnetizationLaw { lattice: lattice.clone(), log_weights, log_partition })
}

/// First and second moments of the magnetization under the Gibbs state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactMoments {
    pub mean: Vec<f64>,
    /// `⟨m_l m_s⟩`.
    pub second: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
}

impl ExactMoments {
    /// `⟨m_l m_s⟩ - ⟨m_l⟩⟨m_s⟩`.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let n = self.mean.len();
        (0..n)
            .map(|l| (0..n).map(|s| self.second[l][s] - self.mean[l] * self.mean[s]).collect())
            .collect()
    }
}

pub fn exact_moments(model: &ValidatedModel, sizes: &[usize]) -> Result<ExactMoments> {
    Ok(moments_of_law(&magnetization_law(model, sizes)?))
}

/// Moments of a magnetization law.
///
/// Each point is summed together with its mirror image `-m`, so symmetric
/// laws give exactly vanishing odd moments.
pub fn moments_of_law(law: &MagnetizationLaw) -> ExactMoments {
    let lat = &law.lattice;
    let n = lat.n();
    let len = law.log_weights.len();
    let half = len.div_ceil(2);
    let paired = |obs: &dyn Fn(&[f64]) -> f64| {
        let term = |i: usize| {
            let j = lat.mirror(i);
            let a = law.probability(i) * obs(&lat.magnetization(i));
            if j == i {
                a
            } else {
                a + law.probability(j) * obs(&lat.magnetization(j))
            }
        };
        pairwise_sum_by(0..half, &term)
    };
    let mean: Vec<f64> = (0..n).map(|l| paired(&|m| m[l])).collect();
    let mut second = vec![vec![0.0; n]; n];
    for l in 0..n {
        for s in l..n {
            let v = paired(&|m| m[l] * m[s]);
            second[l][s] = v;
            second[s][l] = v;
        }
    }
    ExactMoments { mean, second, sizes: lat.sizes().to_vec() }
}
