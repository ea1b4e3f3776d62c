//! The binary first-order Markov state process `{Z_i}` driving the channel:
//! transition structure, stationary initialization, the closed-form k-step
//! transition matrix, and conditional state entropies.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::math::{entropy2, pow_with_complement};
use crate::{Error, Result};

/// Insertion and deletion probabilities of the channel.
///
/// `p_i = P(Z_n = 1 | Z_{n-1} = 0)` and `p_d = P(Z_n = 0 | Z_{n-1} = 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    p_i: f64,
    p_d: f64,
}

impl ChannelParams {
    /// Validates that both probabilities lie in `[0, 1]`.
    pub fn new(p_i: f64, p_d: f64) -> Result<Self> {
        for p in [p_i, p_d] {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(Error::InvalidProbability(p));
            }
        }
        Ok(Self { p_i, p_d })
    }

    /// Symmetric parameters `p_i = p_d = p_id`.
    pub fn symmetric(p_id: f64) -> Result<Self> {
        Self::new(p_id, p_id)
    }

    pub fn p_i(&self) -> f64 {
        self.p_i
    }

    pub fn p_d(&self) -> f64 {
        self.p_d
    }

    pub(crate) fn sum(&self) -> f64 {
        self.p_i + self.p_d
    }

    /// Errors out for `p_i + p_d = 0`, where the stationary distribution
    /// and every quantity dividing by the sum are undefined.
    pub(crate) fn require_nondegenerate(&self) -> Result<()> {
        if self.sum() == 0.0 {
            Err(Error::DegenerateParams)
        } else {
            Ok(())
        }
    }
}

/// Column-stochastic 2x2 matrix of state transition probabilities;
/// `entry(a, b) = P(Z_n = a | Z_{n-k} = b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    e: [[f64; 2]; 2],
}

impl TransitionMatrix {
    pub fn entry(&self, a: usize, b: usize) -> f64 {
        self.e[a][b]
    }

    /// Column `b`: the distribution of `Z_n` given `Z_{n-k} = b`.
    pub fn column(&self, b: usize) -> [f64; 2] {
        [self.e[0][b], self.e[1][b]]
    }

    pub fn mul(&self, rhs: &TransitionMatrix) -> TransitionMatrix {
        let mut e = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                e[a][b] = self.e[a][0] * rhs.e[0][b] + self.e[a][1] * rhs.e[1][b];
            }
        }
        TransitionMatrix { e }
    }
}

/// Marginal distribution of a single state bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDist {
    pub p0: f64,
    pub p1: f64,
}

/// Stationary state distribution `(p_d, p_i) / (p_i + p_d)`.
pub fn stationary_distribution(params: ChannelParams) -> Result<StateDist> {
    params.require_nondegenerate()?;
    let s = params.sum();
    Ok(StateDist {
        p0: params.p_d / s,
        p1: params.p_i / s,
    })
}

/// One-step transition matrix `[[1-p_i, p_d], [p_i, 1-p_d]]`.
pub fn one_step_matrix(params: ChannelParams) -> TransitionMatrix {
    TransitionMatrix {
        e: [
            [1.0 - params.p_i, params.p_d],
            [params.p_i, 1.0 - params.p_d],
        ],
    }
}

/// Closed-form k-step transition matrix.
///
/// With `s = p_i + p_d` and `t = (1 - s)^k`, the entries are
/// `[[p_d + p_i t, p_d - p_d t], [p_i - p_i t, p_i + p_d t]] / s`,
/// equal to the k-fold product of the one-step matrix.
pub fn k_step_matrix(params: ChannelParams, k: u32) -> Result<TransitionMatrix> {
    params.require_nondegenerate()?;
    assert!(k >= 1, "k-step matrix needs k >= 1");
    let (p_i, p_d) = (params.p_i, params.p_d);
    let s = params.sum();
    let (t, omt) = pow_with_complement(1.0 - s, k);
    Ok(TransitionMatrix {
        e: [
            [(p_d + p_i * t) / s, (p_d * omt) / s],
            [(p_i * omt) / s, (p_i + p_d * t) / s],
        ],
    })
}

/// Conditional state entropy `H(Z_n | Z_{n-k})` in bits, averaging the
/// column entropies of the k-step matrix under the stationary law:
/// `(p_d/s) h2((p_d + p_i t)/s) + (p_i/s) h2((p_i + p_d t)/s)`.
pub fn cond_state_entropy(params: ChannelParams, k: u32) -> Result<f64> {
    params.require_nondegenerate()?;
    assert!(k >= 1, "conditional state entropy needs k >= 1");
    let (p_i, p_d) = (params.p_i, params.p_d);
    let s = params.sum();
    let (t, omt) = pow_with_complement(1.0 - s, k);
    // Column complements written without forming 1 - (..)/s.
    let h0 = entropy2((p_d + p_i * t) / s, p_i * omt / s);
    let h1 = entropy2((p_i + p_d * t) / s, p_d * omt / s);
    Ok(p_d / s * h0 + p_i / s * h1)
}

/// Samples a state path `Z_1..Z_n`: `Z_1` from the stationary distribution,
/// then one-step transitions. Deterministic for a fixed seed.
pub fn sample_state_path(params: ChannelParams, n: usize, seed: u64) -> Result<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_state_path_with(params, stationary_distribution(params)?, n, &mut rng)
}

/// Same as [`sample_state_path`] but with an explicit `Z_1` distribution
/// and caller-owned generator.
pub fn sample_state_path_with(
    params: ChannelParams,
    init: StateDist,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<u8>> {
    assert!(n >= 1, "path length must be at least 1");
    let mut z = Vec::with_capacity(n);
    let mut cur = u8::from(rng.random::<f64>() >= init.p0);
    z.push(cur);
    for _ in 1..n {
        let flip_prob = if cur == 0 { params.p_i } else { params.p_d };
        if rng.random::<f64>() < flip_prob {
            cur ^= 1;
        }
        z.push(cur);
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const H2_02: f64 = 0.7219280948873623; // -(0.2 log2 0.2 + 0.8 log2 0.8)

    fn params(p_i: f64, p_d: f64) -> ChannelParams {
        ChannelParams::new(p_i, p_d).unwrap()
    }

    #[test]
    fn stationary_examples() {
        let d = stationary_distribution(params(0.3, 0.1)).unwrap();
        assert!((d.p0 - 0.25).abs() < 1e-15);
        assert!((d.p1 - 0.75).abs() < 1e-15);
        let d = stationary_distribution(params(0.2, 0.2)).unwrap();
        assert!((d.p0 - 0.5).abs() < 1e-15);
        assert!(matches!(
            stationary_distribution(params(0.0, 0.0)),
            Err(Error::DegenerateParams)
        ));
    }

    #[test]
    fn params_validation() {
        assert!(ChannelParams::new(-0.1, 0.5).is_err());
        assert!(ChannelParams::new(0.1, 1.5).is_err());
        assert!(ChannelParams::new(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn k_step_examples() {
        let m = k_step_matrix(params(0.5, 0.5), 3).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!((m.entry(a, b) - 0.5).abs() < 1e-15);
            }
        }

        // k = 2 against explicit multiplication of [[0.8, 0.3], [0.2, 0.7]].
        let one = one_step_matrix(params(0.2, 0.3));
        assert!((one.entry(0, 0) - 0.8).abs() < 1e-15);
        assert!((one.entry(0, 1) - 0.3).abs() < 1e-15);
        assert!((one.entry(1, 0) - 0.2).abs() < 1e-15);
        assert!((one.entry(1, 1) - 0.7).abs() < 1e-15);
        let sq = one.mul(&one);
        let m = k_step_matrix(params(0.2, 0.3), 2).unwrap();
        assert!((m.entry(0, 0) - 0.70).abs() < 1e-12);
        assert!((m.entry(0, 1) - 0.45).abs() < 1e-12);
        for a in 0..2 {
            for b in 0..2 {
                assert!((m.entry(a, b) - sq.entry(a, b)).abs() < 1e-12);
            }
        }

        let m = k_step_matrix(params(0.2, 0.3), 1).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert!((m.entry(a, b) - one.entry(a, b)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cond_entropy_examples() {
        assert!((cond_state_entropy(params(0.5, 0.5), 1).unwrap() - 1.0).abs() < 1e-15);
        // At k = 1 the symmetric case reduces to h2(p_i); cross-check against
        // the column entropies of the one-step matrix.
        let p = params(0.2, 0.2);
        let v = cond_state_entropy(p, 1).unwrap();
        assert!((v - H2_02).abs() < 1e-15);
        let pi = stationary_distribution(p).unwrap();
        let m = one_step_matrix(p);
        let direct = pi.p0 * entropy2(m.entry(0, 0), m.entry(1, 0))
            + pi.p1 * entropy2(m.entry(0, 1), m.entry(1, 1));
        assert!((v - direct).abs() < 1e-15);
        // Mixing: k large approaches the stationary entropy h2(0.25).
        let v = cond_state_entropy(params(0.3, 0.1), 400).unwrap();
        assert!((v - entropy2(0.25, 0.75)).abs() < 1e-12);
    }

    #[test]
    fn sampler_guards_and_determinism() {
        assert!(matches!(
            sample_state_path(params(0.0, 0.0), 5, 1),
            Err(Error::DegenerateParams)
        ));
        let a = sample_state_path(params(0.2, 0.2), 64, 7).unwrap();
        let b = sample_state_path(params(0.2, 0.2), 64, 7).unwrap();
        assert_eq!(a, b);
        // p_i = p_d = 1: deterministic alternation after Z_1.
        let z = sample_state_path(params(1.0, 1.0), 16, 3).unwrap();
        for i in 1..z.len() {
            assert_eq!(z[i], z[i - 1] ^ 1);
        }
    }

    #[test]
    fn sampler_concentration() {
        // Fraction of ones within 3 sigma of 1/2; the Markov-chain CLT
        // variance is pi0*pi1*(1+l)/(1-l)/n with l = 1 - p_i - p_d.
        let n = 1_000_000;
        let z = sample_state_path(params(0.2, 0.2), n, 42).unwrap();
        let ones = z.iter().map(|&b| u32::from(b)).sum::<u32>() as f64;
        let frac = ones / n as f64;
        let sigma = (0.25 * (1.6 / 0.4) / n as f64).sqrt();
        assert!(
            (frac - 0.5).abs() < 3.0 * sigma,
            "frac = {frac}, sigma = {sigma}"
        );
    }

    proptest! {
        #[test]
        fn k_step_equals_repeated_product(
            p_i in 0.01f64..0.99,
            p_d in 0.01f64..0.99,
            k in 1u32..=20,
        ) {
            let p = params(p_i, p_d);
            let one = one_step_matrix(p);
            let mut acc = one;
            for _ in 1..k {
                acc = one.mul(&acc);
            }
            let closed = k_step_matrix(p, k).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    prop_assert!((acc.entry(a, b) - closed.entry(a, b)).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn stationary_is_fixed_point(p_i in 0.001f64..1.0, p_d in 0.001f64..1.0) {
            let p = params(p_i, p_d);
            let d = stationary_distribution(p).unwrap();
            let m = one_step_matrix(p);
            let q0 = m.entry(0, 0) * d.p0 + m.entry(0, 1) * d.p1;
            let q1 = m.entry(1, 0) * d.p0 + m.entry(1, 1) * d.p1;
            prop_assert!((q0 - d.p0).abs() < 1e-12);
            prop_assert!((q1 - d.p1).abs() < 1e-12);
            prop_assert!((d.p0 + d.p1 - 1.0).abs() < 1e-12);
        }

        #[test]
        fn cond_entropy_bounded_by_stationary(
            p_i in 0.01f64..0.99,
            p_d in 0.01f64..0.99,
            k in 1u32..=50,
        ) {
            let p = params(p_i, p_d);
            let s = p_i + p_d;
            let h_stat = entropy2(p_d / s, p_i / s);
            let h = cond_state_entropy(p, k).unwrap();
            prop_assert!(h <= h_stat + 1e-12);
        }

        #[test]
        fn cond_entropy_mixes_to_stationary(p_i in 0.01f64..0.95, p_d in 0.01f64..0.95) {
            // Restrict to |1 - p_i - p_d| <= 0.9 so k = 200 has mixed.
            prop_assume!((1.0 - p_i - p_d).abs() <= 0.9);
            let p = params(p_i, p_d);
            let s = p_i + p_d;
            let h_stat = entropy2(p_d / s, p_i / s);
            let h = cond_state_entropy(p, 200).unwrap();
            prop_assert!((h - h_stat).abs() < 1e-9);
        }
    }
}
