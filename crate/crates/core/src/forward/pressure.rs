use serde::{Deserialize, Serialize};

use super::classify::{classify_maximum, MaximumClassification};
use super::solver::{solve_fixed_points, SolverOptions, StationaryPoint};
use crate::error::{Error, Result};
use crate::model::{ModelSpec, ValidatedModel};

/// Stationary points whose value is this close to the maximum count as global maxima.
const TIE_TOL: f64 = 1e-10;

/// Thermodynamic limit of the pressure with its maximizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureResult {
    pub limit_value: f64,
    /// Global maximizers, lexicographically sorted.
    pub maxima: Vec<MaximumClassification>,
    /// `|max f - max f̄|` over the stationary points; only when both
    /// functionals are available (`±1` spins, `J` positive definite).
    pub method_agreement: Option<f64>,
}

/// The value used to rank stationary points: `f̄` for `±1` spins, `f` otherwise.
pub(crate) fn objective(point: &StationaryPoint) -> f64 {
    point.fbar_value.unwrap_or(point.f_value)
}

/// Global maximizers among the points, in their original order.
pub(crate) fn global_maximizers(points: &[StationaryPoint]) -> Vec<StationaryPoint> {
    let best = points.iter().map(objective).fold(f64::NEG_INFINITY, f64::max);
    points
        .iter()
        .filter(|p| objective(p) >= best - TIE_TOL)
        .cloned()
        .collect()
}

pub fn pressure_limit(model: &ValidatedModel) -> Result<PressureResult> {
    pressure_limit_with(model, &SolverOptions::default())
}

pub fn pressure_limit_with(model: &ValidatedModel, opts: &SolverOptions) -> Result<PressureResult> {
    let points = solve_fixed_points(model, opts)?;
    let limit_value = points.iter().map(objective).fold(f64::NEG_INFINITY, f64::max);
    let maxima = global_maximizers(&points)
        .iter()
        .map(|p| {
            let mut c = classify_maximum(model, p)?;
            c.is_global = true;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let method_agreement = (model.is_binary() && super::has_positive_definite_coupling(model)).then(|| {
        let max_f = points.iter().map(|p| p.f_value).fold(f64::NEG_INFINITY, f64::max);
        (max_f - limit_value).abs()
    });
    Ok(PressureResult { limit_value, maxima, method_agreement })
}

/// One row of a Curie-Weiss coupling scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    #[serde(rename = "J")]
    pub j: f64,
    /// Largest global maximizer.
    pub magnetization: f64,
    pub pressure: f64,
    /// `∂p/∂J = ½μ²`.
    pub dp_dj: f64,
    /// Three-point second difference of the pressure on the (possibly
    /// nonuniform) grid; absent at the ends.
    pub second_difference: Option<f64>,
}

/// Magnetization, pressure and its derivatives along a grid of couplings.
pub fn cw_phase_scan(j_grid: &[f64], h: f64) -> Result<Vec<PhaseRow>> {
    if j_grid.iter().any(|&j| !(j > 0.0 && j.is_finite())) {
        return Err(Error::InvalidModel("couplings must be positive and finite".into()));
    }
    if j_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidModel("coupling grid must be strictly increasing".into()));
    }
    let mut rows = Vec::with_capacity(j_grid.len());
    for &j in j_grid {
        let model = ModelSpec::curie_weiss(j, h).validate()?;
        let points = solve_fixed_points(&model, &SolverOptions::default())?;
        let pressure = points.iter().map(objective).fold(f64::NEG_INFINITY, f64::max);
        let mu = global_maximizers(&points)
            .iter()
            .map(|p| p.x.0[0])
            .fold(f64::NEG_INFINITY, f64::max);
        rows.push(PhaseRow {
            j,
            magnetization: mu,
            pressure,
            dp_dj: 0.5 * mu * mu,
            second_difference: None,
        });
    }
    for i in 1..rows.len().saturating_sub(1) {
        let (a, b, c) = (&rows[i - 1], &rows[i], &rows[i + 1]);
        let left = (b.pressure - a.pressure) / (b.j - a.j);
        let right = (c.pressure - b.pressure) / (c.j - b.j);
        rows[i].second_difference = Some(2.0 * (right - left) / (c.j - a.j));
    }
    Ok(rows)
}
