//! Low-noise characterization for symmetric parameters `p_i = p_d`:
//! the series expansion of the capacity, the exact two-variable rate
//! function `f(delta_1, delta_2, p)`, its analytic Taylor coefficients,
//! and the sign map of the common quadratic coefficient.
//!
//! The input family is parametrized by the probabilities of the four
//! three-symbol pattern classes; stationarity and bit-symmetry leave two
//! free variables, written as deviations `delta_1, delta_2` of the
//! all-equal and tail-equal pattern probabilities from their i.u.d.
//! value 1/4.

use crate::lower::second_term;
use crate::math::{entropy2, pow_with_complement, LN_2};
use crate::state::ChannelParams;
use crate::{Error, Result};

/// Truncated series value `1 - sum_{k=1}^K 2^{-(k+1)} R(p; k)` with
/// `R(p; k) = h2(1/2 + (1-2p)^k / 2)`.
#[derive(Debug, Clone, Copy)]
pub struct ExpansionResult {
    pub p_id: f64,
    pub value: f64,
    /// Terms summed.
    pub k_used: usize,
    /// Exact bound on the dropped tail, `2^-(K+1)`.
    pub tail_bound: f64,
}

/// `R(p; k)`: binary entropy of the k-step same-state probability.
/// The complement of the argument is formed from `1 - (1-2p)^k` directly
/// to keep precision when the argument sits near 1.
pub fn series_term(p_id: f64, k: u32) -> f64 {
    let (t, omt) = pow_with_complement(1.0 - 2.0 * p_id, k);
    entropy2(0.5 + 0.5 * t, 0.5 * omt)
}

/// Series expansion of the capacity at symmetric low noise.
pub fn expansion(p_id: f64, tol: f64) -> Result<ExpansionResult> {
    if !(0.0..=0.5).contains(&p_id) || p_id.is_nan() {
        return Err(Error::InvalidProbability(p_id));
    }
    assert!(tol > 0.0);
    let mut k = 0usize;
    let mut sum = 0.0;
    loop {
        k += 1;
        sum += 0.5f64.powi(k as i32 + 1) * series_term(p_id, k as u32);
        let tail = 0.5f64.powi(k as i32 + 1);
        if tail < tol || k >= 4096 {
            return Ok(ExpansionResult {
                p_id,
                value: 1.0 - sum,
                k_used: k,
                tail_bound: tail,
            });
        }
    }
}

/// A point of the two-variable Taylor expansion together with the
/// Lagrange-remainder parameter `c`.
#[derive(Debug, Clone, Copy)]
pub struct TaylorPoint {
    pub delta1: f64,
    pub delta2: f64,
    pub c: f64,
}

impl TaylorPoint {
    /// Validates the feasibility constraints inherited from the input
    /// distribution: `1/4 >= delta1 + 2 delta2`, both deltas `>= -1/4`,
    /// and `c` in `[0, 1]`.
    pub fn new(delta1: f64, delta2: f64, c: f64) -> Result<Self> {
        let slack = 1e-12;
        if delta1 + 2.0 * delta2 > 0.25 + slack || delta1 < -0.25 - slack || delta2 < -0.25 - slack
        {
            return Err(Error::InfeasiblePoint(format!(
                "deltas ({delta1}, {delta2}) leave the input simplex"
            )));
        }
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::InfeasiblePoint(format!("c = {c} outside [0, 1]")));
        }
        Ok(Self { delta1, delta2, c })
    }
}

/// Exact rate function
/// `f(d1, d2) = H(Y_n | Y_{n-1}) - lim_n H(Y_n | Y^{n-1}, X_0^n)` for the
/// two-parameter stationary bit-symmetric input family, for general
/// channel parameters.
///
/// With `kappa = p_i p_d / (p_i + p_d)`, the first term is
/// `h2((1 - 2 kappa) p_1 + (1 - 4 kappa) p_2 + 2 kappa)`; the second is
/// the series of [`second_term`] at flip probability
/// `alpha = 1 - p_1 - p_2`.
pub fn rate_function_f(delta1: f64, delta2: f64, params: ChannelParams, tol: f64) -> Result<f64> {
    TaylorPoint::new(delta1, delta2, 1.0)?;
    params.require_nondegenerate()?;
    let p1 = delta1 + 0.25;
    let p2 = delta2 + 0.25;
    let kappa = params.p_i() * params.p_d() / params.sum();
    let arg = (1.0 - 2.0 * kappa) * p1 + (1.0 - 4.0 * kappa) * p2 + 2.0 * kappa;
    let first = entropy2(arg, 1.0 - arg);
    let alpha = (1.0 - p1 - p2).clamp(0.0, 1.0);
    let (second, _) = second_term(params, alpha, tol)?;
    Ok(first - second)
}

/// The five second-order coefficients of the expansion of `f` about the
/// i.u.d. point, evaluated at `(c d1, c d2)`.
#[derive(Debug, Clone, Copy)]
pub struct TaylorCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub b20: f64,
    pub b11: f64,
    pub b02: f64,
}

/// Exact first- and second-order coefficients at symmetric noise `p_id`.
///
/// `A_1 = (1-p) log2((2-p)/(2+p)) - sum (k-3) 2^-k R(p;k)` and `A_2`
/// swaps the prefactor for `1-2p`. Each `B` combines a closed first part
/// with denominator `1 - (p/2 + r)^2` and the common series
/// `(1/2) sum q^{k-3} [(q-1)^2 k^2 + (q^2+2q-3) k + 2] R(p;k)`, where
/// `q = 1/2 + c(d1+d2)` and `r = 2(1-p) c d1 + 2(1-2p) c d2`.
pub fn taylor_coefficients(p_id: f64, point: TaylorPoint, tol: f64) -> Result<TaylorCoefficients> {
    if !(0.0..=0.5).contains(&p_id) || p_id.is_nan() {
        return Err(Error::InvalidProbability(p_id));
    }
    TaylorPoint::new(point.delta1, point.delta2, point.c)?;
    let p = p_id;
    let q = 0.5 + point.c * (point.delta1 + point.delta2);
    if q >= 1.0 {
        return Err(Error::InfeasiblePoint(format!(
            "q = {q} reaches the excluded extreme point"
        )));
    }
    let r =
        2.0 * (1.0 - p) * point.c * point.delta1 + 2.0 * (1.0 - 2.0 * p) * point.c * point.delta2;
    let w = 0.5 * p + r;
    let denom = (1.0 - w * w) * LN_2;
    if denom <= 0.0 {
        return Err(Error::InfeasiblePoint(format!(
            "first-part denominator vanishes at offset {w}"
        )));
    }

    let log_ratio = ((2.0 - p) / (2.0 + p)).ln() / LN_2;
    let s_a = a_series(p, tol);
    let a1 = (1.0 - p) * log_ratio - s_a;
    let a2 = (1.0 - 2.0 * p) * log_ratio - s_a;

    let s_b = b_series(p, q, BTruncation::Tolerance(tol));
    let b20 = 2.0 * (1.0 - p) * (1.0 - p) / denom + s_b;
    let b02 = 2.0 * (1.0 - 2.0 * p) * (1.0 - 2.0 * p) / denom + s_b;
    let b11 = 2.0 * (1.0 - p) * (1.0 - 2.0 * p) / denom + s_b;
    Ok(TaylorCoefficients {
        a1,
        a2,
        b20,
        b11,
        b02,
    })
}

/// `sum_{k>=1} (k-3) 2^-k R(p;k)`; the tail past `K` is below
/// `(K+2) 2^-K` since `R <= 1`.
fn a_series(p: f64, tol: f64) -> f64 {
    let mut sum = 0.0;
    let mut k = 0u32;
    loop {
        k += 1;
        sum += (f64::from(k) - 3.0) * 0.5f64.powi(k as i32) * series_term(p, k);
        let tail = (f64::from(k) + 2.0) * 0.5f64.powi(k as i32);
        if (tail < tol && k >= 8) || k >= 6000 {
            return sum;
        }
    }
}

enum BTruncation {
    Tolerance(f64),
    /// Fixed-term cap used by the sign map.
    MaxTerms(usize),
}

/// The shared series of the `B` coefficients in the cancellation-free form
/// `2 q^{k-1} - 4(k-1)(1-q) q^{k-2} + (k-1)(k-2)(1-q)^2 q^{k-3}`,
/// halved and weighted by `R(p;k)`. For tolerance-driven truncation the
/// tail is majorized by `eps^{k-3} P_2(k)` with `eps` just above `q`.
fn b_series(p: f64, q: f64, trunc: BTruncation) -> f64 {
    let omq = 1.0 - q;
    let bracket = |k: u32| -> f64 {
        let kf = f64::from(k);
        let mut t = 2.0 * q.powi(k as i32 - 1);
        if k >= 2 {
            t -= 4.0 * (kf - 1.0) * omq * q.powi(k as i32 - 2);
        }
        if k >= 3 {
            t += (kf - 1.0) * (kf - 2.0) * omq * omq * q.powi(k as i32 - 3);
        }
        t
    };
    let max_k = match trunc {
        BTruncation::Tolerance(_) => 2_000_000,
        BTruncation::MaxTerms(m) => m,
    };
    let eps = (q + 1e-12).min(1.0 - 1e-15);
    let p2 = |k: f64| (q - 1.0) * (q - 1.0) * k * k + (q * q + 2.0 * q - 3.0).abs() * k + 2.0;
    let mut sum = 0.0;
    let mut k = 0u32;
    loop {
        k += 1;
        sum += 0.5 * bracket(k) * series_term(p, k);
        if k as usize >= max_k {
            return sum;
        }
        if let BTruncation::Tolerance(tol) = trunc {
            if k >= 8 {
                let kf = f64::from(k);
                let m_next = eps.powi(k as i32 - 2) * p2(kf + 1.0);
                let rho = eps * p2(kf + 2.0) / p2(kf + 1.0);
                if rho < 1.0 && 0.5 * m_next / (1.0 - rho) < tol {
                    return sum;
                }
            }
        }
    }
}

/// One entry of the sign map of the common quadratic coefficient
/// `B = b_1 + b_2` evaluated with `c = 1`.
#[derive(Debug, Clone, Copy)]
pub struct BSignPoint {
    pub p_id: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub b_value: f64,
    pub sign: i8,
}

/// Evaluates the sign of `B` over a grid of feasible
/// `(p_id, delta1, delta2)` points with the series capped at `k_max`
/// terms. Infeasible grid combinations are skipped.
pub fn b_sign_map(
    p_values: &[f64],
    delta1_values: &[f64],
    delta2_values: &[f64],
    k_max: usize,
) -> Vec<BSignPoint> {
    let mut out = Vec::new();
    for &p in p_values {
        if !(0.0..=0.5).contains(&p) {
            continue;
        }
        for &d1 in delta1_values {
            for &d2 in delta2_values {
                let Ok(point) = TaylorPoint::new(d1, d2, 1.0) else {
                    continue;
                };
                let q = 0.5 + d1 + d2;
                let r = 2.0 * (1.0 - p) * d1 + 2.0 * (1.0 - 2.0 * p) * d2;
                let w = 0.5 * p + r;
                let denom = (1.0 - w * w) * LN_2;
                if q >= 1.0 || denom <= 0.0 {
                    continue;
                }
                let b1 = 2.0 * (1.0 - p) * (1.0 - 2.0 * p) / denom;
                let b2 = b_series(p, q, BTruncation::MaxTerms(k_max));
                let b = b1 + b2;
                out.push(BSignPoint {
                    p_id: p,
                    delta1: point.delta1,
                    delta2: point.delta2,
                    b_value: b,
                    sign: if b > 0.0 {
                        1
                    } else if b < 0.0 {
                        -1
                    } else {
                        0
                    },
                });
            }
        }
    }
    out
}
