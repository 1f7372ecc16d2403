//! Scalar kernels shared by every module, generic over the floating point type.

use std::fmt::Debug;
use std::ops::Range;

use num_traits::{Float, FloatConst, FromPrimitive};

use crate::error::{Error, Result};

/// Floating point scalar accepted by the generic kernels.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `ln cosh(x)` without overflow and with full relative precision near zero.
pub fn ln_cosh<T: Real>(x: T) -> T {
    let a = x.abs();
    if a < T::one() {
        let s = (a * T::lit(0.5)).sinh();
        (T::lit(2.0) * s * s).ln_1p()
    } else {
        a + (-(a + a)).exp().ln_1p() - T::LN_2()
    }
}

/// Binary entropy deficit `½((1+x)ln(1+x) + (1-x)ln(1-x))` on `[-1, 1]`,
/// with `0·ln 0 = 0`.
pub fn entropy_i<T: Real>(x: T) -> Result<T> {
    let a = x.abs();
    if !(a <= T::one()) {
        return Err(Error::DomainError(format!(
            "entropy argument {:?} outside [-1, 1]",
            x
        )));
    }
    if a == T::one() {
        return Ok(T::LN_2());
    }
    let half = T::lit(0.5);
    Ok(half * ((T::one() + a) * a.ln_1p() + (T::one() - a) * (-a).ln_1p()))
}

/// Inverse hyperbolic tangent via `ln1p`, accurate near zero.
pub fn atanh<T: Real>(x: T) -> T {
    T::lit(0.5) * ((x + x) / (T::one() - x)).ln_1p()
}

/// Sum of `f(i)` over `range` by recursive halving.
///
/// The combination order depends only on the range, so results are
/// reproducible regardless of how callers split work.
pub fn pairwise_sum_by<T: Real, F: Fn(usize) -> T>(range: Range<usize>, f: &F) -> T {
    const LEAF: usize = 16;
    let len = range.end - range.start;
    if len <= LEAF {
        let mut acc = T::zero();
        for i in range {
            acc = acc + f(i);
        }
        return acc;
    }
    let mid = range.start + len / 2;
    pairwise_sum_by(range.start..mid, f) + pairwise_sum_by(mid..range.end, f)
}

pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    pairwise_sum_by(0..xs.len(), &|i| xs[i])
}

/// `ln Σ exp(xs)` with a max shift and pairwise accumulation.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return max;
    }
    max + pairwise_sum_by(0..xs.len(), &|i| (xs[i] - max).exp()).ln()
}

/// Natural log of the binomial coefficient `C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    assert!(k <= n, "ln_binomial requires k <= n");
    if k == 0 || k == n {
        return 0.0;
    }
    let ln_gamma = statrs::function::gamma::ln_gamma;
    // Commutative sum keeps C(n,k) and C(n,n-k) bit-identical.
    ln_gamma(n as f64 + 1.0) - (ln_gamma(k as f64 + 1.0) + ln_gamma((n - k) as f64 + 1.0))
}

/// `ln C(n, k)` for every `k = 0..=n`.
pub fn ln_binomial_row(n: u64) -> Vec<f64> {
    (0..=n).map(|k| ln_binomial(n, k)).collect()
}

/// Cumulants `κ_1..κ_order` of a finite distribution given by log-weights.
///
/// Works from central moments, which avoids the cancellation of the raw
/// moment recursion when the distribution is concentrated.
pub fn cumulants_from_log_weights<T: Real>(
    locations: &[T],
    log_weights: &[T],
    order: usize,
) -> Vec<T> {
    let lz = log_sum_exp(log_weights);
    let probs: Vec<T> = log_weights.iter().map(|&w| (w - lz).exp()).collect();
    let mean = locations
        .iter()
        .zip(&probs)
        .fold(T::zero(), |acc, (&s, &p)| acc + p * s);
    // central[j] = E[(s - mean)^j]
    let mut central = vec![T::zero(); order + 1];
    central[0] = T::one();
    for (&s, &p) in locations.iter().zip(&probs) {
        let d = s - mean;
        let mut pow = T::one();
        for c in central.iter_mut().skip(1) {
            pow = pow * d;
            *c = *c + p * pow;
        }
    }
    if order >= 1 {
        central[1] = T::zero();
    }
    let mut kappa = vec![T::zero(); order + 1];
    for n in 2..=order {
        let mut acc = central[n];
        for i in 2..=n.saturating_sub(2) {
            acc = acc - T::lit(binomial_f64(n - 1, i - 1)) * kappa[i] * central[n - i];
        }
        kappa[n] = acc;
    }
    if order >= 1 {
        kappa[1] = mean;
    }
    kappa.remove(0);
    kappa
}

pub(crate) fn binomial_f64(n: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

pub(crate) fn factorial_f64(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Derivatives `d^k/dt^k ln cosh(t)` for `k = 1..=order`.
///
/// Each derivative is a polynomial in `τ = tanh t`; differentiating uses
/// `dτ/dt = 1 - τ²`.
pub fn ln_cosh_derivatives<T: Real>(t: T, order: usize) -> Vec<T> {
    let tau = t.tanh();
    // sech² computed directly to avoid the cancellation in 1 - τ².
    let sech2 = {
        let c = t.cosh();
        if c.is_finite() {
            T::one() / (c * c)
        } else {
            T::zero()
        }
    };
    // Polynomial coefficients in τ, lowest degree first. Start with P_1 = τ.
    let mut poly: Vec<f64> = vec![0.0, 1.0];
    let mut out = Vec::with_capacity(order);
    for _ in 0..order {
        out.push(poly.clone());
        // P' · (1 - τ²)
        let deriv: Vec<f64> = poly
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| c * i as f64)
            .collect();
        let mut next = vec![0.0; deriv.len() + 2];
        for (i, &c) in deriv.iter().enumerate() {
            next[i] += c;
            next[i + 2] -= c;
        }
        poly = next;
    }
    out.iter()
        .enumerate()
        .map(|(idx, p)| {
            if idx == 0 {
                return tau;
            }
            // Every P_k for k >= 2 carries a factor (1 - τ²); divide it out
            // and multiply by the accurately computed sech².
            let q = divide_one_minus_tau2(p);
            let mut acc = T::zero();
            for &c in q.iter().rev() {
                acc = acc * tau + T::lit(c);
            }
            acc * sech2
        })
        .collect()
}

/// Exact polynomial division of `p(τ)` by `1 - τ²`.
fn divide_one_minus_tau2(p: &[f64]) -> Vec<f64> {
    // p = (1 - τ²) q  =>  q_i = p_i + q_{i-2}
    let deg = p.len().saturating_sub(3);
    let mut q = vec![0.0; deg + 1];
    for i in 0..=deg {
        q[i] = p[i] + if i >= 2 { q[i - 2] } else { 0.0 };
    }
    q
}
