use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MagnetizationVector, ModelParams, ValidatedModel};

const MAX_STARTS: usize = 10_000_000;

/// Multistart options for [`solve_fixed_points`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Starting points per axis.
    pub grid_points: usize,
    /// Fraction of the support half-width covered by the start grid.
    pub grid_half_width: f64,
    /// Damping `θ` of `x ← (1-θ)x + θ·map(x)`.
    pub damping: f64,
    pub max_iterations: usize,
    /// Required sup-norm residual `‖x - map(x)‖∞`.
    pub tolerance: f64,
    pub dedup_radius: f64,
    pub newton_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_points: 11,
            grid_half_width: 0.99,
            damping: 0.7,
            max_iterations: 10_000,
            tolerance: 1e-12,
            dedup_radius: 1e-8,
            newton_iterations: 200,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidOptions(msg.to_string()));
        if self.grid_points == 0 {
            return bad("grid_points must be positive");
        }
        if !(self.grid_half_width > 0.0 && self.grid_half_width < 1.0) {
            return bad("grid_half_width must lie in (0, 1)");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if !(self.tolerance > 0.0) || !(self.dedup_radius > 0.0) {
            return bad("tolerance and dedup_radius must be positive");
        }
        Ok(())
    }
}

/// A solution of the mean-field equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryPoint {
    pub x: MagnetizationVector,
    /// `‖x - map(x)‖∞`.
    pub residual: f64,
    pub f_value: f64,
    /// `f̄(x)`; present only for the binary measure.
    pub fbar_value: Option<f64>,
}

/// All distinct fixed points reached from a regular start grid, sorted
/// lexicographically.
pub fn solve_fixed_points(model: &ValidatedModel, opts: &SolverOptions) -> Result<Vec<StationaryPoint>> {
    opts.validate()?;
    let n = model.n();
    let starts = start_count(opts.grid_points, n)?;
    let lo = model.measure().support_min();
    let hi = model.measure().support_max();
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo) * opts.grid_half_width;
    let k = opts.grid_points;
    let axis: Vec<f64> = (0..k)
        .map(|i| {
            if k == 1 {
                center
            } else {
                // Integer numerator keeps the grid exactly symmetric about the center.
                center + half * ((2 * i) as f64 - (k - 1) as f64) / (k - 1) as f64
            }
        })
        .collect();

    let params = model.params();
    let runs: Vec<Option<Vec<f64>>> = (0..starts)
        .into_par_iter()
        .map(|idx| {
            let mut rem = idx;
            let start: Vec<f64> = (0..n)
                .map(|_| {
                    let c = axis[rem % k];
                    rem /= k;
                    c
                })
                .collect();
            run_start(params, start, opts, lo, hi)
        })
        .collect();

    let converged: Vec<Vec<f64>> = runs.into_iter().flatten().collect();
    if converged.is_empty() {
        return Err(Error::NoConvergence { starts });
    }
    let mut kept = merge_roots(params, converged, opts);
    kept.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    kept.into_iter()
        .map(|x| {
            let residual = residual(params, &x);
            let f_value = params.f(&x)?;
            let fbar_value = if params.is_binary() { Some(params.fbar(&x)?) } else { None };
            Ok(StationaryPoint { x: MagnetizationVector(x), residual, f_value, fbar_value })
        })
        .collect()
}

/// Groups converged points into roots by single linkage and returns one
/// representative per group: the member closest to the group mean.
///
/// Two points are linked when they lie within the dedup radius, or when
/// they are close and the residual stays below tolerance along the segment
/// joining them. The second rule catches multiple roots (e.g. at a critical
/// coupling), which double precision only locates to about the cube root of
/// machine epsilon.
fn merge_roots(params: &ModelParams<f64>, converged: Vec<Vec<f64>>, opts: &SolverOptions) -> Vec<Vec<f64>> {
    let mut points: Vec<Vec<f64>> = Vec::new();
    for x in converged {
        if !points.iter().any(|y| sup_dist(&x, y) <= opts.dedup_radius) {
            points.push(x);
        }
    }
    let linked = |a: &[f64], b: &[f64]| {
        let d = sup_dist(a, b);
        if d <= opts.dedup_radius {
            return true;
        }
        if d > 1e3 * opts.dedup_radius {
            return false;
        }
        (1..8).all(|i| {
            let t = i as f64 / 8.0;
            let mid: Vec<f64> = a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect();
            residual(params, &mid) <= opts.tolerance
        })
    };
    let mut label: Vec<usize> = (0..points.len()).collect();
    fn find(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..points.len() {
        for j in 0..i {
            let (ri, rj) = (find(&mut label, i), find(&mut label, j));
            if ri != rj && linked(&points[i], &points[j]) {
                let (lo, hi) = (ri.min(rj), ri.max(rj));
                label[hi] = lo;
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..points.len() {
        let root = find(&mut label, i);
        match groups.iter_mut().find(|(r, _)| *r == root) {
            Some((_, members)) => members.push(i),
            None => groups.push((root, vec![i])),
        }
    }
    groups
        .into_iter()
        .map(|(_, members)| {
            let n = points[members[0]].len();
            let mean: Vec<f64> = (0..n)
                .map(|a| members.iter().map(|&m| points[m][a]).sum::<f64>() / members.len() as f64)
                .collect();
            let best = members
                .iter()
                .copied()
                .min_by(|&p, &q| sup_dist(&points[p], &mean).total_cmp(&sup_dist(&points[q], &mean)))
                .expect("non-empty group");
            points[best].clone()
        })
        .collect()
}

fn start_count(per_axis: usize, n: usize) -> Result<usize> {
    let mut total: usize = 1;
    for _ in 0..n {
        total = total.checked_mul(per_axis).filter(|&t| t <= MAX_STARTS).ok_or_else(|| {
            Error::InvalidOptions(format!("{per_axis}^{n} starts exceeds {MAX_STARTS}"))
        })?;
    }
    Ok(total)
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

pub(crate) fn residual(params: &ModelParams<f64>, x: &[f64]) -> f64 {
    match params.mean_field_map(x) {
        Ok(m) => sup_dist(x, &m),
        Err(_) => f64::INFINITY,
    }
}

fn run_start(
    params: &ModelParams<f64>,
    mut x: Vec<f64>,
    opts: &SolverOptions,
    lo: f64,
    hi: f64,
) -> Option<Vec<f64>> {
    let theta = opts.damping;
    for _ in 0..opts.max_iterations {
        let m = params.mean_field_map(&x).ok()?;
        if sup_dist(&x, &m) <= opts.tolerance {
            break;
        }
        for (xi, mi) in x.iter_mut().zip(&m) {
            *xi = (1.0 - theta) * *xi + theta * mi;
        }
    }
    let x = newton_polish(params, x, opts.newton_iterations, lo, hi);
    let r = residual(params, &x);
    (r <= opts.tolerance && x.iter().all(|v| v.is_finite())).then_some(x)
}

/// Jacobian of `x - map(x)`: `I - diag(κ₂(y)) J Λ`.
fn jacobian(params: &ModelParams<f64>, x: &[f64]) -> DMatrix<f64> {
    let n = params.n;
    let y = params.effective_field(x);
    let kappa2: Vec<f64> = y.iter().map(|&t| params.tilted_cumulants(t, 2)[1]).collect();
    DMatrix::from_fn(n, n, |l, s| {
        let d = kappa2[l] * params.alpha[s] * params.coupling(l, s);
        if l == s {
            1.0 - d
        } else {
            -d
        }
    })
}

/// Newton iteration on `x - map(x) = 0`.
///
/// Near a multiple root Newton converges linearly with a constant step
/// ratio `r`; the multiplicity `1/(1-r)` is then estimated and a scaled step
/// is tried, which restores fast convergence at critical points.
fn newton_polish(params: &ModelParams<f64>, mut x: Vec<f64>, iterations: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut r = residual(params, &x);
    let mut prev_step: Option<f64> = None;
    let mut prev_ratio: Option<f64> = None;
    for _ in 0..iterations {
        if r == 0.0 {
            break;
        }
        let m = match params.mean_field_map(&x) {
            Ok(m) => m,
            Err(_) => break,
        };
        let rhs = DVector::from_iterator(x.len(), x.iter().zip(&m).map(|(a, b)| a - b));
        let delta = match jacobian(params, &x).lu().solve(&rhs) {
            Some(d) if d.iter().all(|v| v.is_finite()) => d,
            _ => break,
        };
        let step = delta.amax();
        let inside = |v: &[f64]| v.iter().all(|&c| c > lo && c < hi);
        let shifted = |scale: f64| -> Vec<f64> {
            x.iter().zip(delta.iter()).map(|(a, d)| a - scale * d).collect()
        };
        let mut candidate = shifted(1.0);
        let mut cand_r = if inside(&candidate) { residual(params, &candidate) } else { f64::INFINITY };

        let ratio = prev_step.map(|p| step / p);
        if let (Some(rt), Some(pr)) = (ratio, prev_ratio) {
            if rt > 0.3 && rt < 0.97 && (rt - pr).abs() < 0.05 {
                let mult = (1.0 / (1.0 - rt)).round();
                if mult >= 2.0 {
                    let trial = shifted(mult);
                    if inside(&trial) {
                        let trial_r = residual(params, &trial);
                        if trial_r < cand_r {
                            candidate = trial;
                            cand_r = trial_r;
                        }
                    }
                }
            }
        }
        if !(cand_r <= r) {
            break;
        }
        x = candidate;
        r = cand_r;
        prev_ratio = ratio;
        prev_step = Some(step);
        let scale = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if step <= 1e-17 * scale {
            break;
        }
    }
    x
}
