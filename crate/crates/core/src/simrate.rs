//! Monte Carlo estimation of the output and conditional entropy rates by
//! the scaled forward recursion on the channel trellis.
//!
//! Each sample draws a Markov input path and a state path, forms the
//! output, and accumulates `-(1/n) log2 p(y^n)` (four trellis states:
//! previous input times state) or `-(1/n) log2 p(y^n | x)` (two states).
//! Forward weights are renormalized every step and the log-normalizers
//! summed, so no per-state log storage is needed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lower::MarkovInput;
use crate::math::KahanSum;
use crate::state::{one_step_matrix, stationary_distribution, ChannelParams};
use crate::{Error, Result};

/// Which entropy rate a [`RateEstimate`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateQuantity {
    /// `H(Y^n)/n`.
    OutputEntropy,
    /// `H(Y^n | X_0^n)/n`.
    ConditionalEntropy,
    /// Their paired difference, the information rate.
    InfoRate,
}

/// Sample mean and normal-approximation 95% confidence half-width of a
/// per-path rate statistic.
#[derive(Debug, Clone, Copy)]
pub struct RateEstimate {
    pub n: usize,
    pub samples: usize,
    pub mean: f64,
    pub half_width: f64,
    pub quantity: RateQuantity,
}

const MIN_PATH_LEN: usize = 1_000;

/// Estimates `lim H(Y^n)/n` for a Markov input.
pub fn estimate_output_entropy_rate(
    params: ChannelParams,
    input: MarkovInput,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<RateEstimate> {
    estimate(params, input, n, samples, seed, RateQuantity::OutputEntropy)
}

/// Estimates `lim H(Y^n | X_0^n)/n` for a Markov input.
pub fn estimate_conditional_entropy_rate(
    params: ChannelParams,
    input: MarkovInput,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<RateEstimate> {
    estimate(
        params,
        input,
        n,
        samples,
        seed,
        RateQuantity::ConditionalEntropy,
    )
}

/// Estimates the information rate as the paired difference of the two
/// entropy-rate statistics on common sample paths.
pub fn estimate_info_rate(
    params: ChannelParams,
    input: MarkovInput,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<RateEstimate> {
    estimate(params, input, n, samples, seed, RateQuantity::InfoRate)
}

fn estimate(
    params: ChannelParams,
    input: MarkovInput,
    n: usize,
    samples: usize,
    seed: u64,
    quantity: RateQuantity,
) -> Result<RateEstimate> {
    params.require_nondegenerate()?;
    if n < MIN_PATH_LEN {
        return Err(Error::SizeGuard(format!(
            "path length {n} below the Monte Carlo minimum {MIN_PATH_LEN}"
        )));
    }
    if samples == 0 {
        return Err(Error::SizeGuard("at least one sample required".into()));
    }
    let values = crate::parallel::map_indexed(samples, |i| {
        let (hy, hyx) = simulate_pair(params, input.alpha(), n, derive_seed(seed, i as u64));
        match quantity {
            RateQuantity::OutputEntropy => hy,
            RateQuantity::ConditionalEntropy => hyx,
            RateQuantity::InfoRate => hy - hyx,
        }
    });
    let mut acc = KahanSum::default();
    for &v in &values {
        acc.add(v);
    }
    let mean = acc.value() / samples as f64;
    let half_width = if samples >= 2 {
        let mut var = KahanSum::default();
        for &v in &values {
            var.add((v - mean) * (v - mean));
        }
        let sd = (var.value() / (samples as f64 - 1.0)).sqrt();
        1.96 * sd / (samples as f64).sqrt()
    } else {
        0.0
    };
    Ok(RateEstimate {
        n,
        samples,
        mean,
        half_width,
        quantity,
    })
}

/// SplitMix64 step; derives per-sample seeds from the master seed.
fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws one `(x, z, y)` realization streamingly and returns
/// `(-(1/n) log2 p(y^n), -(1/n) log2 p(y^n | x))` from the two forward
/// recursions run in the same pass.
fn simulate_pair(params: ChannelParams, alpha: f64, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = one_step_matrix(params);
    let init = stationary_distribution(params).expect("nondegenerate params");
    let pz = [init.p0, init.p1];
    let px_flip = alpha;

    // realized path state
    let mut x_prev: usize = usize::from(rng.random::<f64>() < 0.5);
    let mut z_cur: usize;
    let mut x_cur: usize;

    // unconditional forward weights w[x][z], conditional weights v[z]
    let mut w = [[0.0f64; 2]; 2];
    let mut v = [0.0f64; 2];
    let mut log_y = KahanSum::default();
    let mut log_yx = KahanSum::default();

    // step 1: draw X_1, Z_1, emit y_1
    x_cur = x_prev ^ usize::from(rng.random::<f64>() < px_flip);
    z_cur = usize::from(rng.random::<f64>() >= pz[0]);
    let y = if z_cur == 0 { x_cur } else { x_prev };
    for x1 in 0..2 {
        for z1 in 0..2 {
            // average over the unobserved X_0
            let mut acc = 0.0;
            for x0 in 0..2 {
                let flip = if x1 == x0 { 1.0 - px_flip } else { px_flip };
                let emit = if z1 == 0 { x1 } else { x0 };
                if emit == y {
                    acc += 0.5 * flip;
                }
            }
            w[x1][z1] = acc * pz[z1];
        }
    }
    let x_path_prev = x_prev; // X_0 for the conditional recursion
    for z1 in 0..2 {
        let emit = if z1 == 0 { x_cur } else { x_path_prev };
        v[z1] = if emit == y { pz[z1] } else { 0.0 };
    }
    normalize4(&mut w, &mut log_y);
    normalize2(&mut v, &mut log_yx);
    x_prev = x_cur;

    for _ in 1..n {
        // advance the realized path
        x_cur = x_prev ^ usize::from(rng.random::<f64>() < px_flip);
        let flip_prob = if z_cur == 0 {
            params.p_i()
        } else {
            params.p_d()
        };
        z_cur ^= usize::from(rng.random::<f64>() < flip_prob);
        let y = if z_cur == 0 { x_cur } else { x_prev };

        // unconditional recursion over (x_i, z_i)
        let mut wn = [[0.0f64; 2]; 2];
        for x in 0..2 {
            for z in 0..2 {
                let mut acc = 0.0;
                for xp in 0..2 {
                    let emit = if z == 0 { x } else { xp };
                    if emit != y {
                        continue;
                    }
                    let flip = if x == xp { 1.0 - px_flip } else { px_flip };
                    acc += flip * (w[xp][0] * m.entry(z, 0) + w[xp][1] * m.entry(z, 1));
                }
                wn[x][z] = acc;
            }
        }
        w = wn;
        normalize4(&mut w, &mut log_y);

        // conditional recursion over z_i with the realized inputs
        let mut vn = [0.0f64; 2];
        for z in 0..2 {
            let emit = if z == 0 { x_cur } else { x_prev };
            if emit == y {
                vn[z] = v[0] * m.entry(z, 0) + v[1] * m.entry(z, 1);
            }
        }
        v = vn;
        normalize2(&mut v, &mut log_yx);

        x_prev = x_cur;
    }

    (-log_y.value() / n as f64, -log_yx.value() / n as f64)
}

fn normalize4(w: &mut [[f64; 2]; 2], acc: &mut KahanSum) {
    let c = w[0][0] + w[0][1] + w[1][0] + w[1][1];
    debug_assert!(c > 0.0, "observed path must have positive probability");
    acc.add(c.log2());
    for row in w.iter_mut() {
        for e in row.iter_mut() {
            *e /= c;
        }
    }
}

fn normalize2(v: &mut [f64; 2], acc: &mut KahanSum) {
    let c = v[0] + v[1];
    debug_assert!(c > 0.0, "observed path must have positive probability");
    acc.add(c.log2());
    v[0] /= c;
    v[1] /= c;
}

/// Exact `log2 p(y^n)` for a Markov input by the same forward recursion,
/// exposed for validation of the sampler against brute-force enumeration.
pub fn output_log2_prob(params: ChannelParams, input: MarkovInput, y: &[u8]) -> Result<f64> {
    params.require_nondegenerate()?;
    assert!(!y.is_empty());
    let m = one_step_matrix(params);
    let init = stationary_distribution(params)?;
    let pz = [init.p0, init.p1];
    let alpha = input.alpha();
    let mut total = 0.0f64;
    // w[x][z] joint with the emitted prefix
    let mut w = [[0.0f64; 2]; 2];
    for x1 in 0..2 {
        for z1 in 0..2 {
            let mut acc = 0.0;
            for x0 in 0..2 {
                let flip = if x1 == x0 { 1.0 - alpha } else { alpha };
                let emit = if z1 == 0 { x1 } else { x0 };
                if emit == usize::from(y[0]) {
                    acc += 0.5 * flip;
                }
            }
            w[x1][z1] = acc * pz[z1];
        }
    }
    let mut ks = KahanSum::default();
    normalize4(&mut w, &mut ks);
    total += ks.value();
    for &yi in &y[1..] {
        let mut wn = [[0.0f64; 2]; 2];
        for x in 0..2 {
            for z in 0..2 {
                let mut acc = 0.0;
                for xp in 0..2 {
                    let emit = if z == 0 { x } else { xp };
                    if emit != usize::from(yi) {
                        continue;
                    }
                    let flip = if x == xp { 1.0 - alpha } else { alpha };
                    acc += flip * (w[xp][0] * m.entry(z, 0) + w[xp][1] * m.entry(z, 1));
                }
                wn[x][z] = acc;
            }
        }
        w = wn;
        let mut ks = KahanSum::default();
        normalize4(&mut w, &mut ks);
        total += ks.value();
    }
    Ok(total)
}

/// Exact `log2 p(y^n | x_0^n)` by the two-state forward recursion.
pub fn conditional_log2_prob(params: ChannelParams, x: &[u8], y: &[u8]) -> Result<f64> {
    params.require_nondegenerate()?;
    assert_eq!(x.len(), y.len() + 1);
    assert!(!y.is_empty());
    let m = one_step_matrix(params);
    let init = stationary_distribution(params)?;
    let mut v = [0.0f64; 2];
    for z in 0..2 {
        let emit = x[1 - z];
        v[z] = if emit == y[0] {
            if z == 0 {
                init.p0
            } else {
                init.p1
            }
        } else {
            0.0
        };
    }
    let mut total = 0.0;
    let c = v[0] + v[1];
    if c <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    total += c.log2();
    v[0] /= c;
    v[1] /= c;
    for i in 1..y.len() {
        let mut vn = [0.0f64; 2];
        for z in 0..2 {
            let emit = x[i + 1 - z];
            if emit == y[i] {
                vn[z] = v[0] * m.entry(z, 0) + v[1] * m.entry(z, 1);
            }
        }
        let c = vn[0] + vn[1];
        if c <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += c.log2();
        v = [vn[0] / c, vn[1] / c];
    }
    Ok(total)
}
