//! Distributions over binary blocks, entropy and mutual-information
//! primitives, the linear stationarity constraints, input symmetrization,
//! and the finite-dimensional verification constructions.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::math::{complement, entropy_bits, xlg};
use crate::state::ChannelParams;
use crate::{Error, Result};

/// Largest per-entry negative mass that is clamped to zero instead of
/// rejected.
const NEGATIVE_CLAMP: f64 = 1e-14;
/// Normalization slack accepted by [`BlockDistribution::new`].
const SUM_TOL: f64 = 1e-10;

/// A probability vector over binary blocks of a fixed length.
///
/// Blocks are packed words: bit `i` is the symbol at time offset `i`,
/// least significant bit earliest.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDistribution {
    len: usize,
    probs: Vec<f64>,
}

impl BlockDistribution {
    /// Validates and normalizes a probability vector. Entries within
    /// `-1e-14` of zero are clamped and the vector renormalized; anything
    /// more negative, or a total off 1 by more than `1e-10`, is an error.
    pub fn new(len: usize, mut probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1usize << len {
            return Err(Error::InvalidDistribution(format!(
                "expected 2^{len} entries, got {}",
                probs.len()
            )));
        }
        for p in probs.iter_mut() {
            if *p < 0.0 {
                if *p < -NEGATIVE_CLAMP {
                    return Err(Error::InvalidDistribution(format!(
                        "negative probability {p}"
                    )));
                }
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("total mass {sum}")));
        }
        for p in probs.iter_mut() {
            *p /= sum;
        }
        Ok(Self { len, probs })
    }

    /// Uniform distribution over all `2^len` blocks.
    pub fn uniform(len: usize) -> Self {
        let n = 1usize << len;
        Self {
            len,
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// Point mass on one block.
    pub fn point_mass(len: usize, block: u64) -> Result<Self> {
        if block >> len != 0 {
            return Err(Error::LengthMismatch { block, len });
        }
        let mut probs = vec![0.0; 1usize << len];
        probs[block as usize] = 1.0;
        Ok(Self { len, probs })
    }

    /// Marginal of the stationary bit-symmetric Markov input with flip
    /// probability `alpha`: uniform first bit, each later bit flips the
    /// previous one with probability `alpha`.
    pub fn from_markov_flip(len: usize, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidProbability(alpha));
        }
        let n = 1usize << len;
        let mut probs = vec![0.0; n];
        for (block, p) in probs.iter_mut().enumerate() {
            let mut pr = 0.5;
            for i in 1..len {
                let flip = ((block >> i) ^ (block >> (i - 1))) & 1 == 1;
                pr *= if flip { alpha } else { 1.0 - alpha };
            }
            *p = pr;
        }
        Ok(Self { len, probs })
    }

    /// Block length in symbols.
    pub fn block_len(&self) -> usize {
        self.len
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, block: u64) -> f64 {
        self.probs[block as usize]
    }

    /// Marginal over the first `m` symbols (the low `m` bits).
    pub fn prefix_marginal(&self, m: usize) -> BlockDistribution {
        assert!(m <= self.len);
        let mut probs = vec![0.0; 1usize << m];
        let mask = (1usize << m) - 1;
        for (block, &p) in self.probs.iter().enumerate() {
            probs[block & mask] += p;
        }
        BlockDistribution { len: m, probs }
    }
}

/// Binary entropy `h2(x) = -x log2 x - (1-x) log2(1-x)`.
///
/// Accepts arguments within `1e-12` of `[0, 1]` (clamped); anything
/// further out is a domain error.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&x) || x.is_nan() {
        return Err(Error::InvalidProbability(x));
    }
    let x = x.clamp(0.0, 1.0);
    Ok(xlg(x) + xlg(1.0 - x))
}

/// Shannon entropy of a block distribution in bits.
pub fn entropy(d: &BlockDistribution) -> f64 {
    entropy_bits(&d.probs)
}

/// Conditional entropy `H(suffix | prefix)` of a joint block distribution,
/// where the prefix is the first `split` symbols: `H(joint) - H(prefix)`.
pub fn cond_entropy(joint: &BlockDistribution, split: usize) -> Result<f64> {
    if split == 0 || split >= joint.len {
        return Err(Error::InvalidSplit {
            split,
            len: joint.len,
        });
    }
    Ok(entropy(joint) - entropy(&joint.prefix_marginal(split)))
}

/// Exact `I(X_0^n; Y^n)` for an input distribution over blocks `X_0..X_n`
/// by full enumeration of the channel law. Guarded to `n <= 10`.
pub fn mutual_information_bruteforce(
    params: ChannelParams,
    input: &BlockDistribution,
) -> Result<f64> {
    let n = input
        .block_len()
        .checked_sub(1)
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::SizeGuard("input must cover X_0..X_n with n >= 1".into()))?;
    if n > 10 {
        return Err(Error::SizeGuard(format!(
            "mutual information enumeration capped at n = 10, got {n}"
        )));
    }
    let mut p_y = vec![0.0; 1usize << n];
    let mut h_y_given_x = 0.0;
    for x in 0..1u64 << (n + 1) {
        let px = input.prob(x);
        if px == 0.0 {
            continue;
        }
        let law = crate::channel::channel_law(params, x, n)?;
        h_y_given_x += px * entropy(&law);
        for (y, &p) in law.probs().iter().enumerate() {
            p_y[y] += px * p;
        }
    }
    Ok(entropy_bits(&p_y) - h_y_given_x)
}

/// Averages a distribution with its bit-complement image:
/// `out(x) = (in(x) + in(!x)) / 2`. Idempotent; the output is
/// bit-symmetric and inherits stationarity.
pub fn symmetrize(input: &BlockDistribution) -> BlockDistribution {
    let len = input.len;
    let probs = (0..input.probs.len())
        .map(|x| 0.5 * (input.probs[x] + input.probs[complement(x as u64, len) as usize]))
        .collect();
    BlockDistribution { len, probs }
}

/// Linear equality constraints on a block distribution, stored as a dense
/// matrix with one row per equation.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    block_len: usize,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    pub stationarity: bool,
    pub bit_symmetry: bool,
    pub unity_sum: bool,
}

impl ConstraintSystem {
    /// The stationarity equations of a length-`m` block distribution:
    /// `P(V_1^{m-1} = v) = P(V_2^m = v)` for every `(m-1)`-block `v`
    /// except all-ones, which is implied by the others and dropped to keep
    /// the system reproducible.
    pub fn stationarity(m: usize) -> Self {
        assert!(m >= 2, "stationarity constraints need block length >= 2");
        let size = 1usize << m;
        let half = 1usize << (m - 1);
        let mut rows = Vec::with_capacity(half - 1);
        for v in 0..half - 1 {
            let mut row = vec![0.0; size];
            // P(V_1^{m-1} = v): low m-1 bits equal v, last symbol free.
            row[v] += 1.0;
            row[v + half] += 1.0;
            // P(V_2^m = v): high m-1 bits equal v, first symbol free.
            row[v << 1] -= 1.0;
            row[(v << 1) | 1] -= 1.0;
            rows.push(row);
        }
        let n = rows.len();
        Self {
            block_len: m,
            rows,
            rhs: vec![0.0; n],
            stationarity: true,
            bit_symmetry: false,
            unity_sum: false,
        }
    }

    /// Appends the all-ones unity-sum row with right-hand side 1.
    pub fn with_unity_sum(mut self) -> Self {
        self.rows.push(vec![1.0; 1usize << self.block_len]);
        self.rhs.push(1.0);
        self.unity_sum = true;
        self
    }

    /// Appends one `p(x) = p(!x)` row per complement pair.
    pub fn with_bit_symmetry(mut self) -> Self {
        let size = 1usize << self.block_len;
        for x in 0..size {
            let xc = complement(x as u64, self.block_len) as usize;
            if x < xc {
                let mut row = vec![0.0; size];
                row[x] = 1.0;
                row[xc] = -1.0;
                self.rows.push(row);
                self.rhs.push(0.0);
            }
        }
        self.bit_symmetry = true;
        self
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Largest absolute violation of the equations by a probability vector.
    pub fn residual(&self, probs: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, &b)| {
                let lhs: f64 = row.iter().zip(probs).map(|(r, p)| r * p).sum();
                (lhs - b).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_satisfied(&self, d: &BlockDistribution, tol: f64) -> bool {
        self.residual(d.probs()) <= tol
    }

    /// Numeric rank of the constraint matrix.
    pub fn rank(&self) -> usize {
        crate::linalg::rank(&self.rows, 1e-9)
    }
}

/// Shorthand for [`ConstraintSystem::stationarity`].
pub fn stationarity_constraints(m: usize) -> ConstraintSystem {
    ConstraintSystem::stationarity(m)
}

/// The shift-average of a block-i.i.d. measure: independent length-`s`
/// blocks drawn from `base` are concatenated, the measure is averaged over
/// the `s` cyclic shift offsets, and the length-`m` marginal is returned.
/// The result satisfies every stationarity equation of its length.
pub fn feinstein_shift_average(base: &BlockDistribution, m: usize) -> Result<BlockDistribution> {
    assert!(m >= 1, "marginal length must be at least 1");
    let s = base.block_len();
    let blocks = (s + m - 1).div_ceil(s); // covers offsets 0..s-1 of an m-window
    let total_bits = s * blocks;
    if total_bits > 26 {
        return Err(Error::SizeGuard(format!(
            "shift-average enumeration needs {total_bits} bits"
        )));
    }
    let mut out = vec![0.0; 1usize << m];
    let mask = (1u64 << m) - 1;
    let mut stack = vec![(0u64, 1.0f64, 0usize)];
    while let Some((word, pr, filled)) = stack.pop() {
        if filled == blocks {
            for k in 0..s {
                out[((word >> k) & mask) as usize] += pr / s as f64;
            }
            continue;
        }
        for b in 0..1u64 << s {
            let pb = base.prob(b);
            if pb > 0.0 {
                stack.push((word | (b << (filled * s)), pr * pb, filled + 1));
            }
        }
    }
    BlockDistribution::new(m, out)
}

/// Result of a randomized verification suite.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub trials: usize,
    /// Most negative margin seen (negative values are violations).
    pub min_margin: f64,
    pub violations: usize,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Mutual-information superadditivity under independent inputs: for random
/// `X_1` independent of `X_2` and a random joint conditional of
/// `(Y_1, Y_2)` given `(X_1, X_2)`, checks
/// `I(X_1, X_2; Y_1, Y_2) >= I(X_1; Y_1) + I(X_2; Y_2) - 1e-10` by exact
/// enumeration in every trial.
pub fn check_superadditivity(trials: usize, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_margin = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..trials {
        let nx1 = 1usize << rng.random_range(1..=3u32);
        let nx2 = 1usize << rng.random_range(1..=3u32);
        let ny1 = 1usize << rng.random_range(1..=3u32);
        let ny2 = 1usize << rng.random_range(1..=3u32);
        let px1 = random_simplex(nx1, &mut rng);
        let px2 = random_simplex(nx2, &mut rng);
        // joint[(x1,x2)][(y1,y2)]
        let cond: Vec<Vec<f64>> = (0..nx1 * nx2)
            .map(|_| random_simplex(ny1 * ny2, &mut rng))
            .collect();
        let margin = superadditivity_margin(&px1, &px2, &cond, ny1, ny2);
        min_margin = min_margin.min(margin);
        if margin < -1e-10 {
            violations += 1;
        }
    }
    CheckReport {
        trials,
        min_margin,
        violations,
    }
}

fn random_simplex(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>().max(1e-12)).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// `I(X1,X2;Y1,Y2) - I(X1;Y1) - I(X2;Y2)` from exact joints.
fn superadditivity_margin(
    px1: &[f64],
    px2: &[f64],
    cond: &[Vec<f64>],
    ny1: usize,
    ny2: usize,
) -> f64 {
    let (nx1, nx2) = (px1.len(), px2.len());
    let mut joint = vec![vec![0.0; ny1 * ny2]; nx1 * nx2];
    for x1 in 0..nx1 {
        for x2 in 0..nx2 {
            let xi = x1 * nx2 + x2;
            for yi in 0..ny1 * ny2 {
                joint[xi][yi] = px1[x1] * px2[x2] * cond[xi][yi];
            }
        }
    }
    let i_joint = mutual_information_tabular(&joint);
    // Marginal channels.
    let mut ch1 = vec![vec![0.0; ny1]; nx1];
    let mut ch2 = vec![vec![0.0; ny2]; nx2];
    for x1 in 0..nx1 {
        for x2 in 0..nx2 {
            let xi = x1 * nx2 + x2;
            for y1 in 0..ny1 {
                for y2 in 0..ny2 {
                    let p = joint[xi][y1 * ny2 + y2];
                    ch1[x1][y1] += p;
                    ch2[x2][y2] += p;
                }
            }
        }
    }
    i_joint - mutual_information_tabular(&ch1) - mutual_information_tabular(&ch2)
}

/// Mutual information of a joint table `p[x][y]` in bits.
pub(crate) fn mutual_information_tabular(joint: &[Vec<f64>]) -> f64 {
    let ny = joint[0].len();
    let mut py = vec![0.0; ny];
    let mut h_joint = 0.0;
    let mut h_x = 0.0;
    for row in joint {
        let px: f64 = row.iter().sum();
        h_x += xlg(px);
        for (y, &p) in row.iter().enumerate() {
            py[y] += p;
            h_joint += xlg(p);
        }
    }
    h_x + entropy_bits(&py) - h_joint
}

/// Symmetrization never loses rate: for random inputs over `X_0^n`,
/// checks `I(symmetrize(Q)) >= I(Q) - 1e-10` under the channel law by
/// exact enumeration.
pub fn check_symmetrization_gain(
    params: ChannelParams,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_margin = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..trials {
        let q = BlockDistribution::new(n + 1, random_simplex(1usize << (n + 1), &mut rng))?;
        let i_q = mutual_information_bruteforce(params, &q)?;
        let i_sym = mutual_information_bruteforce(params, &symmetrize(&q))?;
        let margin = i_sym - i_q;
        min_margin = min_margin.min(margin);
        if margin < -1e-10 {
            violations += 1;
        }
    }
    Ok(CheckReport {
        trials,
        min_margin,
        violations,
    })
}

/// Shift-averages of random block-i.i.d. measures always satisfy the full
/// stationarity equation set; reports the largest residual as a margin
/// against `1e-12`.
pub fn check_feinstein_stationarity(trials: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut violations = 0;
    for _ in 0..trials {
        let s = rng.random_range(2..=4usize);
        let m = rng.random_range(2..=4usize);
        let base = BlockDistribution::new(s, random_simplex(1usize << s, &mut rng))?;
        let avg = feinstein_shift_average(&base, m)?;
        let residual = stationarity_constraints(m).residual(avg.probs());
        worst = worst.max(residual);
        if residual > 1e-12 {
            violations += 1;
        }
    }
    Ok(CheckReport {
        trials,
        min_margin: -worst,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const H2_02: f64 = 0.7219280948873623;

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert!((binary_entropy(0.2).unwrap() - H2_02).abs() < 1e-15);
        assert!(binary_entropy(1.2).is_err());
        assert!(binary_entropy(-1e-3).is_err());
        // 1e-12 slack is clamped, not rejected.
        assert_eq!(binary_entropy(1.0 + 1e-13).unwrap(), 0.0);
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&BlockDistribution::uniform(3)) - 3.0).abs() < 1e-12);
        assert_eq!(entropy(&BlockDistribution::point_mass(3, 5).unwrap()), 0.0);
        // Product of a uniform bit and an h2(0.2)-biased bit.
        let d = BlockDistribution::new(2, vec![0.4, 0.4, 0.1, 0.1]).unwrap();
        assert!((entropy(&d) - (1.0 + H2_02)).abs() < 1e-12);
        assert!((cond_entropy(&d, 1).unwrap() - H2_02).abs() < 1e-12);
        assert!(matches!(
            cond_entropy(&d, 2),
            Err(Error::InvalidSplit { .. })
        ));
        assert!(cond_entropy(&d, 0).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(BlockDistribution::new(2, vec![0.5, 0.5]).is_err());
        assert!(BlockDistribution::new(1, vec![0.7, 0.2]).is_err());
        assert!(BlockDistribution::new(1, vec![1.1, -0.1]).is_err());
        // Tiny negatives clamp and renormalize.
        let d = BlockDistribution::new(1, vec![1.0, -0.5e-14]).unwrap();
        assert_eq!(d.prob(1), 0.0);
        assert_eq!(d.prob(0), 1.0);
    }

    #[test]
    fn symmetrize_examples() {
        let d = BlockDistribution::point_mass(3, 0).unwrap();
        let s = symmetrize(&d);
        assert_eq!(s.prob(0), 0.5);
        assert_eq!(s.prob(7), 0.5);
        let again = symmetrize(&s);
        assert_eq!(again.probs(), s.probs());
    }

    #[test]
    fn stationarity_rows_match_worked_example() {
        // m = 2: one row expressing P(V_1 = 0) = P(V_2 = 0), i.e. a
        // +/-1 pair on the mixed blocks 01 and 10 and zeros elsewhere.
        let sys = stationarity_constraints(2);
        assert_eq!(sys.num_rows(), 1);
        let row = &sys.rows()[0];
        assert_eq!(row[0], 0.0);
        assert_eq!(row[3], 0.0);
        assert_eq!(row[1] * row[2], -1.0);
        assert_eq!(row[1].abs(), 1.0);
    }

    #[test]
    fn stationarity_examples() {
        // Any i.i.d. product distribution is stationary.
        let sys = stationarity_constraints(3);
        assert_eq!(sys.num_rows(), 3);
        let q = 0.3f64;
        let probs: Vec<f64> = (0..8u64)
            .map(|b| {
                (0..3)
                    .map(|i| if (b >> i) & 1 == 1 { q } else { 1.0 - q })
                    .product()
            })
            .collect();
        assert!(sys.residual(&probs) < 1e-12);

        // A shift-asymmetric distribution violates at least one row.
        let sys = stationarity_constraints(4);
        assert_eq!(sys.num_rows(), 7);
        let d = BlockDistribution::point_mass(4, 0b0001).unwrap();
        assert!(sys.residual(d.probs()) > 0.1);
    }

    #[test]
    fn stationarity_rank_is_full() {
        for m in 2..=5 {
            let sys = stationarity_constraints(m);
            assert_eq!(sys.num_rows(), (1 << (m - 1)) - 1);
            assert_eq!(sys.rank(), sys.num_rows());
        }
    }

    #[test]
    fn feinstein_examples() {
        let base = BlockDistribution::uniform(2);
        let avg = feinstein_shift_average(&base, 3).unwrap();
        for &p in avg.probs() {
            assert!((p - 0.125).abs() < 1e-12);
        }
        // Point mass on the block 01 (bit 0 = 0, bit 1 = 1), m = 1:
        // offsets see 0 and 1 equally often.
        let base = BlockDistribution::point_mass(2, 0b10).unwrap();
        let avg = feinstein_shift_average(&base, 1).unwrap();
        assert!((avg.prob(0) - 0.5).abs() < 1e-12);
        assert!((avg.prob(1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn superadditivity_identity_and_useless_channels() {
        // Identity channels: Y_k = X_k, margin exactly 0.
        let px1 = vec![0.3, 0.7];
        let px2 = vec![0.6, 0.4];
        let mut cond = vec![vec![0.0; 4]; 4];
        for x1 in 0..2 {
            for x2 in 0..2 {
                cond[x1 * 2 + x2][x1 * 2 + x2] = 1.0;
            }
        }
        let m = superadditivity_margin(&px1, &px2, &cond, 2, 2);
        assert!(m.abs() < 1e-12);

        // Outputs independent of inputs: all informations vanish.
        let cond = vec![vec![0.25; 4]; 4];
        let m = superadditivity_margin(&px1, &px2, &cond, 2, 2);
        assert!(m.abs() < 1e-12);
    }

    #[test]
    fn superadditivity_random_trials() {
        let report = check_superadditivity(200, 2024);
        assert_eq!(report.violations, 0, "min margin {}", report.min_margin);
    }

    proptest! {
        #[test]
        fn symmetrize_idempotent_and_mass_preserving(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = BlockDistribution::new(3, random_simplex(8, &mut rng)).unwrap();
            let s = symmetrize(&d);
            let total: f64 = s.probs().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for x in 0..8u64 {
                prop_assert!((s.prob(x) - s.prob(complement(x, 3))).abs() < 1e-15);
                prop_assert!((symmetrize(&s).prob(x) - s.prob(x)).abs() < 1e-15);
            }
        }

        #[test]
        fn cond_entropy_is_nonnegative(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = BlockDistribution::new(4, random_simplex(16, &mut rng)).unwrap();
            for split in 1..4usize {
                prop_assert!(cond_entropy(&d, split).unwrap() >= -1e-10);
            }
        }

        #[test]
        fn shift_average_is_stationary(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = BlockDistribution::new(3, random_simplex(8, &mut rng)).unwrap();
            let avg = feinstein_shift_average(&base, 4).unwrap();
            prop_assert!(stationarity_constraints(4).residual(avg.probs()) < 1e-12);
        }
    }
}
