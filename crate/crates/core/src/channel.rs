//! Exact finite-block law of the DID channel `Y_i = X_{i-Z_i}`, channel
//! sampling, and executable checks of the structural properties the rest
//! of the crate relies on: Kolmogorov consistency, shift-stationarity of
//! the law, and bit-symmetry.
//!
//! Inputs are blocks `X_0..X_n`; outputs are blocks `Y_1..Y_n`. The state
//! `Z_1` always starts from its stationary distribution. For this channel
//! the input look-back is one symbol and the look-ahead zero, which is
//! what ties output block `Y^n` to input block `X_0^n`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::info::BlockDistribution;
use crate::math::complement;
use crate::state::{
    one_step_matrix, sample_state_path_with, stationary_distribution, ChannelParams, StateDist,
};
use crate::{Error, Result};

/// Enumeration guard for full law tables (memory is `2^(2n+1)` floats).
const MAX_TABLE_N: usize = 12;

/// Exact distribution of `Y^n` given the packed input block `x = X_0..X_n`,
/// computed by a forward recursion over the state bit jointly for every
/// output block.
pub fn channel_law(params: ChannelParams, x: u64, n: usize) -> Result<BlockDistribution> {
    params.require_nondegenerate()?;
    assert!(n >= 1, "output block length must be at least 1");
    if n > MAX_TABLE_N {
        return Err(Error::SizeGuard(format!(
            "channel law enumeration capped at n = {MAX_TABLE_N}, got {n}"
        )));
    }
    if x >> (n + 1) != 0 {
        return Err(Error::LengthMismatch {
            block: x,
            len: n + 1,
        });
    }
    let init = stationary_distribution(params)?;
    Ok(law_forward(params, init, x, n))
}

fn law_forward(params: ChannelParams, init: StateDist, x: u64, n: usize) -> BlockDistribution {
    let m = one_step_matrix(params);
    let xbit = |i: usize| ((x >> i) & 1) as u8;
    // f[y][z]: probability of emitting prefix y with current state z.
    let mut f = vec![[0.0f64; 2]; 1];
    for i in 1..=n {
        let mut g = vec![[0.0f64; 2]; 1 << i];
        for (ypre, fz) in f.iter().enumerate() {
            for z in 0..2usize {
                let w = if i == 1 {
                    if z == 0 {
                        init.p0
                    } else {
                        init.p1
                    }
                } else {
                    fz[0] * m.entry(z, 0) + fz[1] * m.entry(z, 1)
                };
                if w == 0.0 {
                    continue;
                }
                let yi = if z == 0 { xbit(i) } else { xbit(i - 1) };
                g[ypre | (usize::from(yi) << (i - 1))][z] += w;
            }
        }
        f = g;
    }
    let probs = f.iter().map(|fz| fz[0] + fz[1]).collect();
    BlockDistribution::new(n, probs).expect("forward recursion preserves normalization")
}

/// Full channel law table for block length `n`: one output distribution
/// per input block.
#[derive(Debug, Clone)]
pub struct ChannelLawTable {
    n: usize,
    rows: Vec<BlockDistribution>,
}

impl ChannelLawTable {
    pub fn build(params: ChannelParams, n: usize) -> Result<Self> {
        let rows = (0..1u64 << (n + 1))
            .map(|x| channel_law(params, x, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, rows })
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn row(&self, x: u64) -> &BlockDistribution {
        &self.rows[x as usize]
    }

    pub fn prob(&self, x: u64, y: u64) -> f64 {
        self.rows[x as usize].prob(y)
    }
}

/// One realization of the channel: inputs, state path, and outputs.
#[derive(Debug, Clone)]
pub struct ChannelTraceSample {
    /// `X_0..X_n`.
    pub x: Vec<u8>,
    /// `Z_1..Z_n`.
    pub z: Vec<u8>,
    /// `Y_1..Y_n` with `y[i] = x[i+1-z[i]]`.
    pub y: Vec<u8>,
}

/// Passes an input block through the channel with the stationary state
/// initialization. Deterministic for a fixed seed.
pub fn sample_channel(params: ChannelParams, x: &[u8], seed: u64) -> Result<ChannelTraceSample> {
    let init = stationary_distribution(params)?;
    sample_channel_with_init(params, x, init, seed)
}

/// Same as [`sample_channel`] with an explicit `Z_1` distribution, for
/// experiments away from the stationary initialization.
pub fn sample_channel_with_init(
    params: ChannelParams,
    x: &[u8],
    init: StateDist,
    seed: u64,
) -> Result<ChannelTraceSample> {
    assert!(x.len() >= 2, "input must cover X_0..X_n with n >= 1");
    let n = x.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = sample_state_path_with(params, init, n, &mut rng)?;
    let y = apply_state_path(x, &z);
    Ok(ChannelTraceSample {
        x: x.to_vec(),
        z,
        y,
    })
}

/// The defining relation `y_i = x_{i - z_i}` applied along a state path.
pub fn apply_state_path(x: &[u8], z: &[u8]) -> Vec<u8> {
    debug_assert_eq!(x.len(), z.len() + 1);
    z.iter()
        .enumerate()
        .map(|(idx, &zi)| x[idx + 1 - usize::from(zi)])
        .collect()
}

/// Outcome of the consistency check: summing the length-`(n+1)` law over
/// the last output symbol must reproduce the length-`n` law for every
/// input extension.
#[derive(Debug, Clone, Copy)]
pub struct ConsistencyReport {
    pub n_max: usize,
    pub max_violation: f64,
}

pub fn check_consistency(params: ChannelParams, n_max: usize) -> Result<ConsistencyReport> {
    assert!(n_max >= 2, "consistency check needs n_max >= 2");
    let mut max_violation = 0.0f64;
    for n in 1..n_max {
        let short = ChannelLawTable::build(params, n)?;
        let long = ChannelLawTable::build(params, n + 1)?;
        for x_long in 0..1u64 << (n + 2) {
            let x_short = x_long & ((1 << (n + 1)) - 1);
            for y in 0..1u64 << n {
                let summed = long.prob(x_long, y) + long.prob(x_long, y | (1 << n));
                max_violation = max_violation.max((summed - short.prob(x_short, y)).abs());
            }
        }
    }
    Ok(ConsistencyReport {
        n_max,
        max_violation,
    })
}

/// Outcome of the shift and complement identities on the law:
/// `P(Y_{k+1}^{n+k} = y | [x~, x]) = P(Y^n = y | x)` for every prefix
/// `x~`, and `P(y | x) = P(!y | !x)`.
#[derive(Debug, Clone, Copy)]
pub struct StructuralReport {
    pub shift_violation: f64,
    pub negation_violation: f64,
}

pub fn check_stationarity_and_bitsymmetry(
    params: ChannelParams,
    n_max: usize,
    k_max: usize,
) -> Result<StructuralReport> {
    assert!(n_max >= 2 && k_max >= 1);
    let mut shift = 0.0f64;
    let mut negation = 0.0f64;
    for n in 1..=n_max {
        let base = ChannelLawTable::build(params, n)?;
        for x in 0..1u64 << (n + 1) {
            let xc = complement(x, n + 1);
            for y in 0..1u64 << n {
                let yc = complement(y, n);
                negation = negation.max((base.prob(x, y) - base.prob(xc, yc)).abs());
            }
        }
        for k in 1..=k_max {
            let long = ChannelLawTable::build(params, n + k)?;
            for x_long in 0..1u64 << (n + k + 1) {
                let x_suffix = x_long >> k;
                for y in 0..1u64 << n {
                    // Marginalize the first k outputs of the longer law.
                    let mut marginal = 0.0;
                    for y_pre in 0..1u64 << k {
                        marginal += long.prob(x_long, y_pre | (y << k));
                    }
                    shift = shift.max((marginal - base.prob(x_suffix, y)).abs());
                }
            }
        }
    }
    Ok(StructuralReport {
        shift_violation: shift,
        negation_violation: negation,
    })
}

/// Brute-force law by enumerating all state paths; the oracle that the
/// forward recursion is tested against.
pub fn channel_law_bruteforce(
    params: ChannelParams,
    x: u64,
    n: usize,
) -> Result<BlockDistribution> {
    params.require_nondegenerate()?;
    if n > MAX_TABLE_N {
        return Err(Error::SizeGuard(format!(
            "brute force capped at {MAX_TABLE_N}"
        )));
    }
    let init = stationary_distribution(params)?;
    let m = one_step_matrix(params);
    let xbit = |i: usize| ((x >> i) & 1) as u8;
    let mut probs = vec![0.0f64; 1 << n];
    for zpath in 0..1u64 << n {
        let zbit = |i: usize| ((zpath >> i) & 1) as usize;
        let mut w = if zbit(0) == 0 { init.p0 } else { init.p1 };
        for i in 1..n {
            w *= m.entry(zbit(i), zbit(i - 1));
        }
        if w == 0.0 {
            continue;
        }
        let mut y = 0usize;
        for i in 1..=n {
            let zi = zbit(i - 1);
            let yi = if zi == 0 { xbit(i) } else { xbit(i - 1) };
            y |= usize::from(yi) << (i - 1);
        }
        probs[y] += w;
    }
    BlockDistribution::new(n, probs)
}
