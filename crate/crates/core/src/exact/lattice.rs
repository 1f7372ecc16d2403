use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, ValidatedModel};
use crate::scalar::{ln_binomial, ln_binomial_row};

/// Default bound on the number of lattice points an exact computation may visit.
pub const DEFAULT_LATTICE_CAP: u64 = 100_000_000;

const SIZE_TOL: f64 = 1e-12;

/// Magnetization lattice `{-1, -1 + 2/N_l, ..., 1}` per species.
///
/// Points are indexed in mixed radix with the last species varying fastest,
/// so index order is lexicographic in the magnetization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MagLattice {
    sizes: Vec<usize>,
}

impl MagLattice {
    /// Lattice for `sizes`, which must satisfy `N_l = α_l N` exactly.
    pub fn new(model: &ValidatedModel, sizes: &[usize]) -> Result<Self> {
        Self::with_cap(model, sizes, DEFAULT_LATTICE_CAP)
    }

    pub fn with_cap(model: &ValidatedModel, sizes: &[usize], cap: u64) -> Result<Self> {
        Self::for_alpha(model.alpha(), sizes, cap)
    }

    pub fn for_alpha(alpha: &[f64], sizes: &[usize], cap: u64) -> Result<Self> {
        check_sizes(alpha, sizes)?;
        let lattice = Self { sizes: sizes.to_vec() };
        let points = lattice.volume();
        if points > cap as u128 {
            return Err(Error::LatticeTooLarge { points, cap });
        }
        Ok(lattice)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n(&self) -> usize {
        self.sizes.len()
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// `Π (N_l + 1)`.
    pub fn volume(&self) -> u128 {
        self.sizes.iter().map(|&s| s as u128 + 1).product()
    }

    /// Number of points; only valid once the cap check has passed.
    pub fn len(&self) -> usize {
        self.volume() as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Up-spin counts `k_l` of the point at `index`.
    pub fn counts(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.n()];
        for l in (0..self.n()).rev() {
            let radix = self.sizes[l] + 1;
            out[l] = index % radix;
            index /= radix;
        }
        out
    }

    pub fn index_of(&self, counts: &[usize]) -> usize {
        counts
            .iter()
            .zip(&self.sizes)
            .fold(0, |acc, (&k, &s)| acc * (s + 1) + k)
    }

    /// Spin sums `S_l = 2k_l - N_l`.
    pub fn sums(&self, index: usize) -> Vec<i64> {
        self.counts(index)
            .iter()
            .zip(&self.sizes)
            .map(|(&k, &s)| 2 * k as i64 - s as i64)
            .collect()
    }

    pub fn magnetization(&self, index: usize) -> Vec<f64> {
        self.sums(index)
            .iter()
            .zip(&self.sizes)
            .map(|(&sum, &s)| sum as f64 / s as f64)
            .collect()
    }

    /// Index of the point `-m`.
    pub fn mirror(&self, index: usize) -> usize {
        self.len() - 1 - index
    }
}

/// Checks `N_l / N = α_l` for every species.
pub fn check_sizes(alpha: &[f64], sizes: &[usize]) -> Result<()> {
    let incompatible = || Error::IncompatibleSizes { sizes: sizes.to_vec(), alpha: alpha.to_vec() };
    if sizes.len() != alpha.len() || sizes.contains(&0) {
        return Err(incompatible());
    }
    let total = sizes.iter().sum::<usize>() as f64;
    if sizes.iter().zip(alpha).any(|(&s, &a)| (s as f64 / total - a).abs() > SIZE_TOL) {
        return Err(incompatible());
    }
    Ok(())
}

/// `ln A`, the log number of `±1` configurations of `size` spins with
/// magnetization `m`, i.e. `ln C(size, size(1+m)/2)`.
pub fn log_count(size: usize, m: f64) -> Result<f64> {
    let up = size as f64 * (1.0 + m) / 2.0;
    let k = up.round();
    if size == 0 || !(k >= 0.0 && k <= size as f64) || (up - k).abs() > 1e-9 * (size as f64).max(1.0) {
        return Err(Error::OffLattice { size, m });
    }
    Ok(ln_binomial(size as u64, k as u64))
}

/// Unnormalized log-weights of lattice points for a binary model.
pub(crate) struct WeightKernel<'a> {
    lattice: &'a MagLattice,
    ln_binom: Vec<Vec<f64>>,
    j: Vec<f64>,
    h: Vec<f64>,
    total: f64,
}

impl<'a> WeightKernel<'a> {
    pub fn new(model: &ValidatedModel, lattice: &'a MagLattice) -> Result<Self> {
        Self::from_params(model.params(), lattice)
    }

    /// Kernel for unvalidated coefficients, e.g. fitted couplings.
    pub fn from_params(params: &ModelParams<f64>, lattice: &'a MagLattice) -> Result<Self> {
        if !params.is_binary() {
            return Err(Error::UnsupportedMeasure);
        }
        if lattice.n() != params.n {
            return Err(Error::DimensionMismatch { expected: params.n, got: lattice.n() });
        }
        Ok(Self {
            lattice,
            ln_binom: lattice.sizes().iter().map(|&s| ln_binomial_row(s as u64)).collect(),
            j: params.j.clone(),
            h: params.h.clone(),
            total: lattice.total() as f64,
        })
    }

    /// `Σ ln C(N_l,k_l) + (½ Σ J_ls S_l S_s)/N + Σ h_l S_l - N ln 2`.
    pub fn log_weight(&self, index: usize) -> f64 {
        let n = self.h.len();
        let counts = self.lattice.counts(index);
        let sums: Vec<f64> = counts
            .iter()
            .zip(self.lattice.sizes())
            .map(|(&k, &s)| (2 * k) as f64 - s as f64)
            .collect();
        let mut quad = 0.0;
        for l in 0..n {
            let row: f64 = (0..n).map(|s| self.j[l * n + s] * sums[s]).sum();
            quad += sums[l] * row;
        }
        let linear: f64 = (0..n).map(|l| self.h[l] * sums[l]).sum();
        let entropy: f64 = (0..n).map(|l| self.ln_binom[l][counts[l]]).sum();
        entropy + 0.5 * quad / self.total + linear - self.total * std::f64::consts::LN_2
    }
}
