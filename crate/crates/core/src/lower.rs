//! Closed-form achievable-rate lower bound for stationary bit-symmetric
//! first-order Markov inputs, maximized over the flip probability, plus
//! the genie-erasure upper bound used as the prior reference.
//!
//! The bound is the difference of two entropy terms. The first keeps one
//! past output plus a two-step-old input/state pair as context and has a
//! closed form in the flip probability `alpha`. The second is the exact
//! limit of the conditional output entropy given the full input, a
//! geometrically weighted series over the conditional state entropies
//! `H(Z_n | Z_{n-k})`.

use crate::math::entropy2;
use crate::state::{cond_state_entropy, ChannelParams};
use crate::{Error, Result};

/// Stationary bit-symmetric first-order Markov input: uniform marginal,
/// each symbol flips the previous one with probability `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovInput {
    alpha: f64,
}

impl MarkovInput {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
            return Err(Error::InvalidProbability(alpha));
        }
        Ok(Self { alpha })
    }

    /// The i.u.d. input, `alpha = 1/2`.
    pub fn iud() -> Self {
        Self { alpha: 0.5 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Result of the univariate maximization over the flip probability.
#[derive(Debug, Clone, Copy)]
pub struct LowerBoundResult {
    /// The bound in bits, `term1 - term2` at `alpha_opt`.
    pub value: f64,
    pub alpha_opt: f64,
    pub term1: f64,
    pub term2: f64,
    /// Series terms used by the second-term evaluation at the optimum.
    pub series_terms_used: usize,
}

/// First entropy term `H(Y_n | Y_{n-1}, X_{n-2}, Z_{n-2})` in closed form.
///
/// The three contexts left after one output and a two-step-old pair are
/// weighted by their stationary probabilities; the conditional output
/// distributions reduce to the displayed arguments `alpha - alpha p_i`,
/// `A_1` and `A_2`.
pub fn first_term(params: ChannelParams, alpha: f64) -> Result<f64> {
    params.require_nondegenerate()?;
    if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
        return Err(Error::InvalidProbability(alpha));
    }
    let (p_i, p_d) = (params.p_i(), params.p_d());
    let s = params.sum();
    let a = alpha;
    let d1 = 1.0 - a * p_d;
    let n1 = 1.0 - a - 2.0 * a * p_d + a * p_d * p_d + 3.0 * a * a * p_d - 2.0 * a * a * p_d * p_d
        + a * p_i * p_d
        - a * a * p_i * p_d;
    let d2 = 1.0 + a * p_i - a;
    let n2 = 1.0 + 2.0 * a * p_i - 2.0 * a - a * p_i * p_i - 2.0 * a * a * p_i
        + a * a
        + a * a * p_i * p_i
        - a * p_d * p_i
        + 2.0 * a * a * p_i * p_d;
    let a1 = clamp_unit(n1 / d1, d1)?;
    let a2 = clamp_unit(n2 / d2, d2)?;
    Ok(a * p_d / s * h2(a - a * p_i) + p_i * d1 / s * h2(a1) + p_d * d2 / s * h2(a2))
}

fn h2(x: f64) -> f64 {
    entropy2(x, 1.0 - x)
}

/// The exact quotients live in [0, 1]; rounding can push them out by the
/// cancellation error of the numerator, about machine epsilon divided by
/// the denominator. Clamp within that margin, reject anything larger.
fn clamp_unit(x: f64, denom: f64) -> Result<f64> {
    let slack = (1e-14 / denom.abs().max(1e-12)).max(1e-12);
    if !(-slack..=1.0 + slack).contains(&x) {
        return Err(Error::InvalidProbability(x));
    }
    Ok(x.clamp(0.0, 1.0))
}

/// Second entropy term `lim_n H(Y_n | Y^{n-1}, X_0^n)`:
/// `sum_{k>=1} alpha^2 (1-alpha)^{k-1} H(Z_n | Z_{n-k})`, truncated once
/// the exact geometric tail bound `alpha (1-alpha)^K` drops below `tol`.
/// Returns the value and the number of series terms used.
pub fn second_term(params: ChannelParams, alpha: f64, tol: f64) -> Result<(f64, usize)> {
    params.require_nondegenerate()?;
    if !(0.0..=1.0).contains(&alpha) || alpha.is_nan() {
        return Err(Error::InvalidProbability(alpha));
    }
    assert!(tol > 0.0, "series tolerance must be positive");
    if alpha == 0.0 {
        return Ok((0.0, 0));
    }
    let mut total = 0.0;
    let mut weight = alpha * alpha; // alpha^2 (1-alpha)^{k-1}
    let mut k = 0usize;
    loop {
        k += 1;
        total += weight * cond_state_entropy(params, k as u32)?;
        // tail after k terms: sum_{j>k} alpha^2 (1-alpha)^{j-1} * [<= 1]
        let tail = alpha * (1.0 - alpha).powi(k as i32);
        if tail < tol || k >= 100_000_000 {
            return Ok((total, k));
        }
        weight *= 1.0 - alpha;
    }
}

/// The lower bound: maximizes `first_term - second_term` over the flip
/// probability by a 1e-3 grid scan refined with golden-section search.
pub fn lower_bound(params: ChannelParams, tol: f64) -> Result<LowerBoundResult> {
    params.require_nondegenerate()?;
    let objective = |alpha: f64| -> Result<f64> {
        Ok(first_term(params, alpha)? - second_term(params, alpha, tol)?.0)
    };
    let mut best_alpha = 0.0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=1000 {
        let alpha = i as f64 / 1000.0;
        let v = objective(alpha)?;
        if v > best {
            best = v;
            best_alpha = alpha;
        }
    }
    // The objective is smooth but not proven unimodal; the grid stage
    // brackets the global maximum and golden-section polishes it.
    let mut lo = (best_alpha - 1e-3).max(0.0);
    let mut hi = (best_alpha + 1e-3).min(1.0);
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = objective(c)?;
    let mut fd = objective(d)?;
    while hi - lo > 1e-8 {
        if fc < fd {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = objective(d)?;
        } else {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = objective(c)?;
        }
    }
    let alpha_opt = 0.5 * (lo + hi);
    let term1 = first_term(params, alpha_opt)?;
    let (term2, terms) = second_term(params, alpha_opt, tol)?;
    Ok(LowerBoundResult {
        value: term1 - term2,
        alpha_opt,
        term1,
        term2,
        series_terms_used: terms,
    })
}

/// The bound evaluated at the i.u.d. input (`alpha = 1/2`), the
/// unoptimized reference curve.
pub fn iud_lower_bound(params: ChannelParams, tol: f64) -> Result<f64> {
    Ok(first_term(params, 0.5)? - second_term(params, 0.5, tol)?.0)
}

/// Genie-erasure upper bound `1 - p_i p_d / (p_i + p_d)`.
pub fn genie_erasure(params: ChannelParams) -> Result<f64> {
    params.require_nondegenerate()?;
    Ok(1.0 - params.p_i() * params.p_d() / params.sum())
}
