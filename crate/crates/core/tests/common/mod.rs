#![allow(dead_code)]

use meanfield_core::{ModelSpec, ValidatedModel};

pub fn cw(j: f64, h: f64) -> ValidatedModel {
    ModelSpec::curie_weiss(j, h).validate().unwrap()
}

pub fn two_species(alpha: [f64; 2], j: [[f64; 2]; 2], h: [f64; 2]) -> ValidatedModel {
    ModelSpec {
        n: 2,
        alpha: alpha.to_vec(),
        j: j.iter().map(|r| r.to_vec()).collect(),
        h: h.to_vec(),
        measure: None,
    }
    .validate()
    .unwrap()
}

/// α = (½, ½), J = [[1, ½], [½, 1]], h = (0.2, -0.1).
pub fn reference() -> ValidatedModel {
    two_species([0.5, 0.5], [[1.0, 0.5], [0.5, 1.0]], [0.2, -0.1])
}

/// `ln Z_N` by summing over every `±1` configuration, species assigned to
/// consecutive blocks of spins.
pub fn brute_force_log_partition(model: &ValidatedModel, sizes: &[usize]) -> f64 {
    let total: usize = sizes.iter().sum();
    assert!(total <= 20);
    let species: Vec<usize> = sizes.iter().enumerate().flat_map(|(l, &s)| std::iter::repeat(l).take(s)).collect();
    let n = model.n();
    let mut exponents = Vec::with_capacity(1 << total);
    for bits in 0u32..(1 << total) {
        let mut sums = vec![0.0; n];
        for (i, &l) in species.iter().enumerate() {
            sums[l] += if bits >> i & 1 == 1 { 1.0 } else { -1.0 };
        }
        let mut e = 0.0;
        for l in 0..n {
            for s in 0..n {
                e += 0.5 * model.coupling(l, s) * sums[l] * sums[s] / total as f64;
            }
            e += model.h()[l] * sums[l];
        }
        exponents.push(e);
    }
    let max = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exponents.iter().map(|e| (e - max).exp()).sum();
    max + sum.ln() - total as f64 * std::f64::consts::LN_2
}

/// Positive root of `tanh(J x) = x` for `J > 1` by bisection.
pub fn bisect_mu0(j: f64) -> f64 {
    let (mut lo, mut hi) = (1e-9, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (j * mid).tanh() - mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
