//! Capacity bounds for the dependent insertion-deletion (DID) write channel.
//!
//! The channel maps a binary input sequence to `Y_i = X_{i-Z_i}`, where
//! `{Z_i}` is a binary first-order Markov state with 0→1 probability `p_i`
//! (an insertion: the head re-writes the previous bit) and 1→0 probability
//! `p_d` (a deletion: the head skips a bit). Insertions and deletions are
//! paired, so the output neither grows nor shrinks; the noise is pure
//! synchronization jitter.
//!
//! The crate computes, for given `(p_i, p_d)`:
//!
//! * a closed-form achievable-rate lower bound over stationary bit-symmetric
//!   first-order Markov inputs, maximized over the flip probability
//!   ([`lower`]),
//! * a family of upper bounds obtained by window-`L` conditioning, each a
//!   concave maximization over stationary block distributions ([`upper`]),
//! * a low-noise series characterization with its Taylor coefficients
//!   ([`lownoise`]),
//! * Monte Carlo estimates of the output and conditional entropy rates via
//!   the scaled forward recursion on the channel trellis ([`simrate`]),
//! * executable verification of the channel's structural properties:
//!   consistency, shift-stationarity, bit-symmetry, the symmetrization
//!   inequality, mutual-information superadditivity, and the shift-average
//!   construction of stationary block distributions ([`channel`], [`info`]).
//!
//! All public entropies and rates are in bits. Probability vectors over
//! length-`m` binary blocks are indexed by packed words: bit `i` of the
//! index is the symbol at time offset `i`, least significant bit earliest.

#![allow(clippy::needless_range_loop)]

pub mod channel;
mod error;
pub mod info;
mod linalg;
pub mod lower;
pub mod lownoise;
mod lp;
mod math;
pub mod parallel;
pub mod simrate;
pub mod state;
pub mod upper;

pub use error::{Error, Result};
pub use info::{BlockDistribution, ConstraintSystem};
pub use lower::{LowerBoundResult, MarkovInput};
pub use simrate::{RateEstimate, RateQuantity};
pub use state::ChannelParams;
pub use upper::{BoundResult, UpperBoundProblem};
