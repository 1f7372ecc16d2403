use serde::{Deserialize, Serialize};

use super::{euclidean, magnetization_law};
use crate::error::{Error, Result};
use crate::model::{MagnetizationVector, ValidatedModel};
use crate::scalar::{log_sum_exp, pairwise_sum_by};

/// Finite law on `ℝ^n`: support points with probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaw {
    pub points: Vec<Vec<f64>>,
    pub probabilities: Vec<f64>,
}

impl DiscreteLaw {
    pub fn n(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total(&self) -> f64 {
        pairwise_sum_by(0..self.len(), &|i| self.probabilities[i])
    }

    pub fn expectation<F: Fn(&[f64]) -> f64>(&self, obs: F) -> f64 {
        pairwise_sum_by(0..self.len(), &|i| self.probabilities[i] * obs(&self.points[i]))
    }

    pub fn mean(&self) -> Vec<f64> {
        (0..self.n()).map(|l| self.expectation(|x| x[l])).collect()
    }

    /// Centered second moments.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let mean = self.mean();
        let n = self.n();
        (0..n)
            .map(|l| {
                (0..n)
                    .map(|s| self.expectation(|x| (x[l] - mean[l]) * (x[s] - mean[s])))
                    .collect()
            })
            .collect()
    }

    pub fn variance(&self) -> Result<f64> {
        if self.n() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.n() });
        }
        Ok(self.covariance()[0][0])
    }

    /// CSV with one row per support point: `x_1, ..., x_n, probability`.
    pub fn to_csv(&self) -> String {
        let n = self.n();
        let mut out: String = (1..=n).map(|l| format!("x_{l},")).collect();
        out.push_str("probability\n");
        for (p, w) in self.points.iter().zip(&self.probabilities) {
            for v in p {
                out.push_str(&format!("{v:.16e},"));
            }
            out.push_str(&format!("{w:.16e}\n"));
        }
        out
    }
}

/// Exact law of `(S_l - N_l μ_l) / N_l^{1 - 1/2k}`, optionally conditioned on
/// the magnetization lying in the closed ball `|m - μ| ≤ radius`.
pub fn normalized_sum_law(
    model: &ValidatedModel,
    sizes: &[usize],
    center: &MagnetizationVector,
    k: usize,
    condition_ball: Option<f64>,
) -> Result<DiscreteLaw> {
    if center.len() != model.n() {
        return Err(Error::DimensionMismatch { expected: model.n(), got: center.len() });
    }
    if k == 0 {
        return Err(Error::InvalidOptions("type k must be at least 1".into()));
    }
    let law = magnetization_law(model, sizes)?;
    let lattice = &law.lattice;
    let mu = center.as_slice();
    let keep: Vec<usize> = (0..law.log_weights.len())
        .filter(|&i| match condition_ball {
            Some(r) => euclidean(&lattice.magnetization(i), mu) <= r,
            None => true,
        })
        .collect();
    let restricted: Vec<f64> = keep.iter().map(|&i| law.log_weights[i]).collect();
    let lz = log_sum_exp(&restricted);
    if !lz.is_finite() {
        return Err(Error::EmptyCondition);
    }
    let exponent = 1.0 - 1.0 / (2 * k) as f64;
    let scale: Vec<f64> = sizes.iter().map(|&s| (s as f64).powf(exponent)).collect();
    let points = keep
        .iter()
        .map(|&i| {
            lattice
                .sums(i)
                .iter()
                .enumerate()
                .map(|(l, &s)| (s as f64 - sizes[l] as f64 * mu[l]) / scale[l])
                .collect()
        })
        .collect();
    let probabilities = restricted.iter().map(|&w| (w - lz).exp()).collect();
    Ok(DiscreteLaw { points, probabilities })
}
