//! Scalar helpers shared across modules. Entropies are in bits; internal
//! logs are natural with a single conversion constant.

pub(crate) const LN_2: f64 = std::f64::consts::LN_2;

/// `-x log2 x` with the `0 log 0 = 0` convention.
#[inline]
pub(crate) fn xlg(x: f64) -> f64 {
    if x > 0.0 {
        -x * (x.ln() / LN_2)
    } else {
        0.0
    }
}

/// Binary entropy of the pair `(p, q)` with `p + q = 1`, both parts given
/// explicitly so callers can supply a complement computed without
/// cancellation when `p` is near 1.
#[inline]
pub(crate) fn entropy2(p: f64, q: f64) -> f64 {
    xlg(p) + xlg(q)
}

/// Shannon entropy in bits of a probability vector.
pub(crate) fn entropy_bits(probs: &[f64]) -> f64 {
    probs.iter().map(|&p| xlg(p)).sum()
}

/// `(base^k, 1 - base^k)`, the complement evaluated stably for `base`
/// near 1 where direct subtraction loses digits. `base - 1` is exact for
/// `base > 1/2`, so `ln_1p` keeps full relative precision there.
pub(crate) fn pow_with_complement(base: f64, k: u32) -> (f64, f64) {
    let t = base.powi(k as i32);
    let omt = if base > 0.5 {
        -f64::exp_m1(f64::from(k) * f64::ln_1p(base - 1.0))
    } else if base > 0.0 {
        -f64::exp_m1(f64::from(k) * base.ln())
    } else {
        1.0 - t
    };
    (t, omt)
}

/// Compensated accumulator for order-independent reductions.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

/// Complement of a packed `len`-bit block.
#[inline]
pub(crate) fn complement(block: u64, len: usize) -> u64 {
    block ^ ((1u64 << len) - 1)
}
