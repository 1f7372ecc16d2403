//! Model definition: species geometry, couplings, fields and the single-site measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{self, Real};

const ALPHA_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;
const WEIGHT_TOL: f64 = 1e-12;

/// Single-spin distribution with finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMeasure {
    /// `[location, weight]` pairs.
    pub atoms: Vec<[f64; 2]>,
}

impl FiniteMeasure {
    pub fn new(atoms: Vec<[f64; 2]>) -> Result<Self> {
        let measure = Self { atoms };
        measure.validate()?;
        Ok(measure)
    }

    /// The symmetric `±1` measure with weights `½, ½`.
    pub fn symmetric_binary() -> Self {
        Self {
            atoms: vec![[-1.0, 0.5], [1.0, 0.5]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.len() < 2 {
            return Err(Error::DegenerateMeasure);
        }
        let mut total = 0.0;
        for (i, &[loc, w]) in self.atoms.iter().enumerate() {
            if !loc.is_finite() || !w.is_finite() {
                return Err(Error::InvalidMeasure(format!("atom {i} is not finite")));
            }
            if w <= 0.0 {
                return Err(Error::InvalidMeasure(format!("atom {i} has weight {w} <= 0")));
            }
            total += w;
            if self.atoms[..i].iter().any(|a| a[0] == loc) {
                return Err(Error::InvalidMeasure(format!("duplicate location {loc}")));
            }
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(())
    }

    pub fn is_symmetric_binary(&self) -> bool {
        let mut atoms = self.atoms.clone();
        atoms.sort_by(|a, b| a[0].total_cmp(&b[0]));
        atoms.len() == 2 && atoms[0] == [-1.0, 0.5] && atoms[1] == [1.0, 0.5]
    }

    pub fn support_min(&self) -> f64 {
        self.atoms.iter().map(|a| a[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn support_max(&self) -> f64 {
        self.atoms.iter().map(|a| a[0]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, value: f64) -> bool {
        self.atoms.iter().any(|a| a[0] == value)
    }
}

impl Default for FiniteMeasure {
    fn default() -> Self {
        Self::symmetric_binary()
    }
}

/// Model description as read from a JSON config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub n: usize,
    pub alpha: Vec<f64>,
    #[serde(rename = "J")]
    pub j: Vec<Vec<f64>>,
    pub h: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<FiniteMeasure>,
}

impl ModelSpec {
    /// One-species Curie-Weiss model with `±1` spins.
    pub fn curie_weiss(j: f64, h: f64) -> Self {
        Self {
            n: 1,
            alpha: vec![1.0],
            j: vec![vec![j]],
            h: vec![h],
            measure: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(self) -> Result<ValidatedModel> {
        validate_model(self)
    }

    fn check_structure(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidModel("species count must be positive".into()));
        }
        if self.alpha.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.alpha.len() });
        }
        if self.h.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.h.len() });
        }
        if self.j.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.j.len() });
        }
        for row in &self.j {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
        }
        let finite = self.alpha.iter().chain(&self.h).chain(self.j.iter().flatten());
        if finite.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }
        check_alpha(&self.alpha)?;
        for l in 0..n {
            for s in (l + 1)..n {
                let (a, b) = (self.j[l][s], self.j[s][l]);
                if (a - b).abs() > SYMMETRY_TOL {
                    return Err(Error::NonSymmetricJ { row: l, col: s, a, b });
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: &[f64]) -> Result<()> {
    if let Some(a) = alpha.iter().find(|&&a| !(a > 0.0)) {
        return Err(Error::BadAlpha(format!("entry {a} is not positive")));
    }
    let total: f64 = alpha.iter().sum();
    if (total - 1.0).abs() > ALPHA_TOL {
        return Err(Error::BadAlpha(format!("entries sum to {total}")));
    }
    Ok(())
}

/// Checks every structural invariant and wraps the spec.
pub fn validate_model(spec: ModelSpec) -> Result<ValidatedModel> {
    spec.check_structure()?;
    let measure = spec.measure.clone().unwrap_or_default();
    measure.validate()?;
    for l in 0..spec.n {
        let d = spec.j[l][l];
        if !(d > 0.0) {
            return Err(Error::NonPositiveDiagonal { index: l, value: d });
        }
    }
    let params = ModelParams::from_parts(&spec.alpha, &spec.j, &spec.h, &measure);
    Ok(ValidatedModel { spec, measure, params })
}

/// A model whose invariants have been checked. Immutable.
#[derive(Debug, Clone)]
pub struct ValidatedModel {
    spec: ModelSpec,
    measure: FiniteMeasure,
    params: ModelParams<f64>,
}

impl ValidatedModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn alpha(&self) -> &[f64] {
        &self.spec.alpha
    }

    pub fn h(&self) -> &[f64] {
        &self.spec.h
    }

    pub fn coupling(&self, l: usize, s: usize) -> f64 {
        self.spec.j[l][s]
    }

    pub fn measure(&self) -> &FiniteMeasure {
        &self.measure
    }

    pub fn is_binary(&self) -> bool {
        self.measure.is_symmetric_binary()
    }

    pub fn params(&self) -> &ModelParams<f64> {
        &self.params
    }

    /// Model parameters converted to another scalar type.
    pub fn params_as<T: Real>(&self) -> ModelParams<T> {
        self.params.cast()
    }

    /// Same model with a different field vector.
    pub fn with_field(&self, h: &[f64]) -> Result<ValidatedModel> {
        let mut spec = self.spec.clone();
        spec.h = h.to_vec();
        validate_model(spec)
    }

    /// Same model with species relabelled: new species `i` is old species `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<ValidatedModel> {
        let n = self.n();
        if perm.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: perm.len() });
        }
        let spec = ModelSpec {
            n,
            alpha: perm.iter().map(|&p| self.spec.alpha[p]).collect(),
            j: perm
                .iter()
                .map(|&p| perm.iter().map(|&q| self.spec.j[p][q]).collect())
                .collect(),
            h: perm.iter().map(|&p| self.spec.h[p]).collect(),
            measure: self.spec.measure.clone(),
        };
        validate_model(spec)
    }
}

/// Single-site measure in the representation used by the kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum SiteMeasure<T> {
    /// `±1` with equal weights: log-MGF is `ln cosh`.
    Binary,
    /// Locations with log-weights.
    Atoms { locations: Vec<T>, log_weights: Vec<T> },
}

/// Raw model coefficients over a generic scalar.
///
/// No invariants are enforced here; [`ValidatedModel`] is the checked entry
/// point. Inverse estimates use this type directly because a fitted diagonal
/// coupling may be non-positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub n: usize,
    pub alpha: Vec<T>,
    /// Row-major `n × n`.
    pub j: Vec<T>,
    pub h: Vec<T>,
    pub site: SiteMeasure<T>,
}

impl ModelParams<f64> {
    pub fn from_parts(alpha: &[f64], j: &[Vec<f64>], h: &[f64], measure: &FiniteMeasure) -> Self {
        let site = if measure.is_symmetric_binary() {
            SiteMeasure::Binary
        } else {
            SiteMeasure::Atoms {
                locations: measure.atoms.iter().map(|a| a[0]).collect(),
                log_weights: measure.atoms.iter().map(|a| a[1].ln()).collect(),
            }
        };
        Self {
            n: alpha.len(),
            alpha: alpha.to_vec(),
            j: j.iter().flatten().copied().collect(),
            h: h.to_vec(),
            site,
        }
    }

    pub fn cast<T: Real>(&self) -> ModelParams<T> {
        let conv = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        ModelParams {
            n: self.n,
            alpha: conv(&self.alpha),
            j: conv(&self.j),
            h: conv(&self.h),
            site: match &self.site {
                SiteMeasure::Binary => SiteMeasure::Binary,
                SiteMeasure::Atoms { locations, log_weights } => SiteMeasure::Atoms {
                    locations: conv(locations),
                    log_weights: conv(log_weights),
                },
            },
        }
    }
}

impl<T: Real> ModelParams<T> {
    #[inline]
    pub fn coupling(&self, l: usize, s: usize) -> T {
        self.j[l * self.n + s]
    }

    pub fn is_binary(&self) -> bool {
        matches!(self.site, SiteMeasure::Binary)
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        Ok(())
    }

    /// `½⟨J̃x,x⟩ = ½ Σ α_l α_s J_ls x_l x_s`.
    pub fn quadratic(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for l in 0..self.n {
            let mut row = T::zero();
            for s in 0..self.n {
                row = row + self.alpha[s] * self.coupling(l, s) * x[s];
            }
            acc = acc + self.alpha[l] * x[l] * row;
        }
        T::lit(0.5) * acc
    }

    /// `g(x) = ½⟨J̃x,x⟩ + ⟨h̃,x⟩`, so that `H_N = -N g(m)`.
    pub fn g(&self, x: &[T]) -> Result<T> {
        self.check_dim(x)?;
        let linear = (0..self.n).fold(T::zero(), |acc, l| acc + self.alpha[l] * self.h[l] * x[l]);
        Ok(self.quadratic(x) + linear)
    }

    /// Effective field `y_l = Σ_s α_s J_ls x_s + h_l`.
    pub fn effective_field(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|l| {
                (0..self.n).fold(self.h[l], |acc, s| acc + self.alpha[s] * self.coupling(l, s) * x[s])
            })
            .collect()
    }

    /// `ln ∫ exp(s t) dρ(s)`.
    pub fn log_mgf(&self, t: T) -> T {
        match &self.site {
            SiteMeasure::Binary => scalar::ln_cosh(t),
            SiteMeasure::Atoms { locations, log_weights } => {
                let terms: Vec<T> =
                    locations.iter().zip(log_weights).map(|(&s, &w)| w + s * t).collect();
                scalar::log_sum_exp(&terms)
            }
        }
    }

    /// Mean of the tilted measure `ρ_t(ds) ∝ exp(s t) ρ(ds)`.
    pub fn tilted_mean(&self, t: T) -> T {
        match &self.site {
            SiteMeasure::Binary => t.tanh(),
            SiteMeasure::Atoms { .. } => self.tilted_cumulants(t, 1)[0],
        }
    }

    /// Cumulants `κ_1..κ_order` of the tilted measure, i.e. the derivatives
    /// of the log-MGF at `t`.
    pub fn tilted_cumulants(&self, t: T, order: usize) -> Vec<T> {
        match &self.site {
            SiteMeasure::Binary => scalar::ln_cosh_derivatives(t, order),
            SiteMeasure::Atoms { locations, log_weights } => {
                let tilted: Vec<T> =
                    locations.iter().zip(log_weights).map(|(&s, &w)| w + s * t).collect();
                scalar::cumulants_from_log_weights(locations, &tilted, order)
            }
        }
    }

    /// Pressure functional from the Gaussian transform:
    /// `f(x) = -½⟨J̃x,x⟩ + Σ α_l ln ∫ exp(s y_l) dρ(s)`.
    pub fn f(&self, x: &[T]) -> Result<T> {
        self.check_dim(x)?;
        let y = self.effective_field(x);
        let entropic = (0..self.n).fold(T::zero(), |acc, l| acc + self.alpha[l] * self.log_mgf(y[l]));
        Ok(entropic - self.quadratic(x))
    }

    /// Gradient of `f`: `Λ J Λ (κ_1(y) - x)` with `Λ = diag(α)`.
    pub fn grad_f(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x)?;
        let y = self.effective_field(x);
        let gap: Vec<T> = (0..self.n).map(|l| self.tilted_mean(y[l]) - x[l]).collect();
        Ok((0..self.n)
            .map(|a| {
                let inner = (0..self.n)
                    .fold(T::zero(), |acc, l| acc + self.coupling(a, l) * self.alpha[l] * gap[l]);
                self.alpha[a] * inner
            })
            .collect())
    }

    /// Entropic functional `f̄(x) = g(x) - Σ α_l 𝓘(x_l)`; binary measure only.
    pub fn fbar(&self, x: &[T]) -> Result<T> {
        if !self.is_binary() {
            return Err(Error::UnsupportedMeasure);
        }
        let g = self.g(x)?;
        let mut entropy = T::zero();
        for l in 0..self.n {
            entropy = entropy + self.alpha[l] * scalar::entropy_i(x[l])?;
        }
        Ok(g - entropy)
    }

    /// Right-hand side of the mean-field equations.
    pub fn mean_field_map(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x)?;
        Ok(self.effective_field(x).into_iter().map(|y| self.tilted_mean(y)).collect())
    }
}

/// Order parameter: one magnetization per species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MagnetizationVector(pub Vec<f64>);

impl MagnetizationVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks dimension and that every component lies in the support hull.
    pub fn check_for(&self, model: &ValidatedModel) -> Result<()> {
        if self.len() != model.n() {
            return Err(Error::DimensionMismatch { expected: model.n(), got: self.len() });
        }
        let (lo, hi) = (model.measure().support_min(), model.measure().support_max());
        if let Some(v) = self.0.iter().find(|&&v| !(v >= lo && v <= hi)) {
            return Err(Error::DomainError(format!("magnetization {v} outside [{lo}, {hi}]")));
        }
        Ok(())
    }
}

impl From<Vec<f64>> for MagnetizationVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Spin configuration with contiguous species blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    spins: Vec<f64>,
    partition: Vec<usize>,
}

impl Configuration {
    pub fn new(model: &ValidatedModel, spins: Vec<f64>, partition: Vec<usize>) -> Result<Self> {
        if partition.len() != model.n() {
            return Err(Error::DimensionMismatch { expected: model.n(), got: partition.len() });
        }
        let total: usize = partition.iter().sum();
        if total != spins.len() {
            return Err(Error::InvalidConfiguration(format!(
                "partition covers {total} sites but there are {} spins",
                spins.len()
            )));
        }
        if partition.iter().any(|&p| p == 0) {
            return Err(Error::InvalidConfiguration("empty species block".into()));
        }
        let n_total = total as f64;
        for (l, (&size, &a)) in partition.iter().zip(model.alpha()).enumerate() {
            if (size as f64 / n_total - a).abs() > 1.0 / n_total {
                return Err(Error::InvalidConfiguration(format!(
                    "block {l} has {size} of {total} sites, inconsistent with alpha={a}"
                )));
            }
        }
        if let Some(s) = spins.iter().find(|&&s| !model.measure().contains(s)) {
            return Err(Error::InvalidConfiguration(format!("spin value {s} not in the support")));
        }
        Ok(Self { spins, partition })
    }

    pub fn spins(&self) -> &[f64] {
        &self.spins
    }

    pub fn partition(&self) -> &[usize] {
        &self.partition
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    /// Species index of every site.
    pub fn species_of(&self) -> Vec<usize> {
        self.partition
            .iter()
            .enumerate()
            .flat_map(|(l, &size)| std::iter::repeat_n(l, size))
            .collect()
    }
}

/// `g(m)`; the Hamiltonian of any configuration with magnetization `m` is `-N g(m)`.
pub fn hamiltonian_density(model: &ValidatedModel, m: &MagnetizationVector) -> Result<f64> {
    model.params().g(m.as_slice())
}

/// Per-species average spin.
pub fn magnetization(config: &Configuration) -> MagnetizationVector {
    let mut out = Vec::with_capacity(config.partition.len());
    let mut start = 0;
    for &size in &config.partition {
        let block = &config.spins[start..start + size];
        out.push(block.iter().sum::<f64>() / size as f64);
        start += size;
    }
    MagnetizationVector(out)
}

/// `H_N(σ) = -N g(m(σ))`, with `α` taken from the model.
pub fn hamiltonian(model: &ValidatedModel, config: &Configuration) -> Result<f64> {
    let m = magnetization(config);
    Ok(-(config.len() as f64) * hamiltonian_density(model, &m)?)
}
