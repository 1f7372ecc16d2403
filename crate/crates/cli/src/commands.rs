use std::fmt::Write as _;
use std::path::Path;

use meanfield_core::exact::{exact_sample, finite_pressure, normalized_sum_law, DiscreteLaw, SampleSet};
use meanfield_core::forward::{cw_phase_scan, pressure_limit_with, solve_fixed_points, MaximumClassification, PressureResult, StationaryPoint};
use meanfield_core::inverse::{invert_conditioned, mle_fit, InverseEstimate};
use meanfield_core::limits::{build_limit_law, delta_mixture, ks_distance, LimitLaw};
use meanfield_core::{Error, Result};
use serde::Serialize;

use crate::config::{missing, RunConfig};

/// Lower-bound constant of the counting estimate.
const COUNT_CONSTANT: f64 = 3.0;

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct SolveReport {
    fixed_points: Vec<StationaryPoint>,
    pressure: PressureResult,
}

pub fn solve(cfg: &RunConfig) -> Result<String> {
    let model = cfg.model()?;
    let fixed_points = solve_fixed_points(&model, &cfg.solver)?;
    let pressure = pressure_limit_with(&model, &cfg.solver)?;
    to_json(&SolveReport { fixed_points, pressure })
}

/// `p_N` along the size ladder with the two-sided bounds around the limit.
pub fn pressure(cfg: &RunConfig) -> Result<String> {
    let model = cfg.model()?;
    let ladder = cfg.ladder.as_ref().ok_or_else(|| missing("ladder"))?;
    let limit = pressure_limit_with(&model, &cfg.solver)?.limit_value;
    let n = model.n();
    let mut out = String::from("N,");
    for l in 1..=n {
        let _ = write!(out, "N_{l},");
    }
    out.push_str("p_N,lower,upper,limit\n");
    for sizes in ladder {
        let p = finite_pressure(&model, sizes)?;
        let total = sizes.iter().sum::<usize>() as f64;
        let half_log: f64 = sizes.iter().map(|&s| 0.5 * (s as f64).ln()).sum();
        let lower = limit - (COUNT_CONSTANT.ln() + half_log) / total;
        let upper = limit + sizes.iter().map(|&s| (s as f64 + 1.0).ln()).sum::<f64>() / total;
        let _ = write!(out, "{},", total as usize);
        for s in sizes {
            let _ = write!(out, "{s},");
        }
        let _ = writeln!(out, "{p:.16e},{lower:.16e},{upper:.16e},{limit:.16e}");
    }
    Ok(out)
}

pub fn sample(cfg: &RunConfig, seed: Option<u64>) -> Result<String> {
    let model = cfg.model()?;
    let seed = seed.or(cfg.seed).ok_or_else(|| missing("seed"))?;
    let m = cfg.samples.ok_or_else(|| missing("samples"))?;
    Ok(exact_sample(&model, cfg.sizes()?, m, seed)?.to_csv())
}

#[derive(Serialize)]
struct Comparison {
    /// Conditioning radius of the exact law, if any.
    ball_radius: Option<f64>,
    ks: Option<f64>,
    /// Covariance of the exact rescaled sums.
    exact_covariance: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct MaximumReport {
    center: Vec<f64>,
    k: usize,
    strength: Option<f64>,
    law: LimitLaw,
    comparison: Option<Comparison>,
}

#[derive(Serialize)]
struct LimitsReport {
    limit_value: f64,
    maxima: Vec<MaximumReport>,
    /// Law of the magnetization when the maximum is not unique.
    magnetization_law: Option<LimitLaw>,
}

/// Half the smallest distance between two maxima.
fn separation_radius(maxima: &[MaximumClassification]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in maxima.iter().enumerate() {
        for b in &maxima[i + 1..] {
            let d: f64 = a.point.x.0.iter().zip(&b.point.x.0).map(|(x, y)| (x - y) * (x - y)).sum();
            best = best.min(d.sqrt());
        }
    }
    0.5 * best
}

pub fn limits(cfg: &RunConfig) -> Result<String> {
    let model = cfg.model()?;
    let pressure = pressure_limit_with(&model, &cfg.solver)?;
    let unique = pressure.maxima.len() == 1;
    let radius = if unique { None } else { Some(cfg.ball_radius.unwrap_or_else(|| separation_radius(&pressure.maxima))) };
    let mut exact_laws: Vec<DiscreteLaw> = Vec::new();
    let mut maxima = Vec::new();
    for c in &pressure.maxima {
        let law = build_limit_law(&model, c, !unique)?;
        let comparison = match &cfg.sizes {
            Some(sizes) => {
                let exact = normalized_sum_law(&model, sizes, &c.point.x, c.k, radius)?;
                let ks = if model.n() == 1 { Some(ks_distance(&exact, &law)?) } else { None };
                let exact_covariance = exact.covariance();
                exact_laws.push(exact);
                Some(Comparison { ball_radius: radius, ks, exact_covariance })
            }
            None => None,
        };
        maxima.push(MaximumReport { center: c.point.x.0.clone(), k: c.k, strength: c.strength, law, comparison });
    }
    let magnetization_law = if unique { None } else { Some(delta_mixture(&model, &pressure.maxima)?) };
    if let Some(path) = &cfg.law_csv {
        std::fs::write(path, laws_csv(&exact_laws, model.n()))?;
    }
    to_json(&LimitsReport { limit_value: pressure.limit_value, maxima, magnetization_law })
}

fn laws_csv(laws: &[DiscreteLaw], n: usize) -> String {
    let mut out = String::from("maximum,");
    for l in 1..=n {
        let _ = write!(out, "x_{l},");
    }
    out.push_str("probability\n");
    for (i, law) in laws.iter().enumerate() {
        for (p, w) in law.points.iter().zip(&law.probabilities) {
            let _ = write!(out, "{i},");
            for v in p {
                let _ = write!(out, "{v:.16e},");
            }
            let _ = writeln!(out, "{w:.16e}");
        }
    }
    out
}

/// Parses `c_1,...,c_n,radius`.
pub fn parse_ball(text: &str, n: usize) -> Result<(Vec<f64>, f64)> {
    let values = text
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("--ball: {e}"))))
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != n + 1 {
        return Err(Error::Parse(format!("--ball needs {} numbers, got {}", n + 1, values.len())));
    }
    Ok((values[..n].to_vec(), values[n]))
}

pub fn invert_estimate(cfg: &RunConfig, samples: &SampleSet, ball: Option<&str>) -> Result<InverseEstimate> {
    let model = cfg.model()?;
    match ball {
        Some(text) => {
            let (center, radius) = parse_ball(text, model.n())?;
            invert_conditioned(samples, &center, radius, model.alpha())
        }
        None => mle_fit(samples, model.alpha()),
    }
}

pub fn invert(cfg: &RunConfig, sample_path: &Path, ball: Option<&str>) -> Result<String> {
    let samples = SampleSet::read_csv(sample_path)?;
    to_json(&invert_estimate(cfg, &samples, ball)?)
}

pub fn phase(cfg: &RunConfig) -> Result<String> {
    let grid = cfg.j_grid.as_ref().ok_or_else(|| missing("j_grid"))?;
    let rows = cw_phase_scan(grid, cfg.field)?;
    let mut out = String::from("J,magnetization,pressure,dp_dJ,second_difference\n");
    for r in rows {
        let second = r.second_difference.map(|v| format!("{v:.16e}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{second}",
            r.j, r.magnetization, r.pressure, r.dp_dj
        );
    }
    Ok(out)
}
