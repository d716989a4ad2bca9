//! A laboratory for boolean hardness reductions between two ways of
//! combining a function over tuples: the *direct product* `f^k`, which
//! concatenates `f` over a `k`-tuple of inputs, and the *XOR form*
//! `f^{⊕k}`, which outputs the parity of `f` over the tuple.
//!
//! The crate has three layers:
//!
//! * exact combinatorial primitives over truth tables ([`boolfn`]),
//!   with all probabilities kept as arbitrary-precision rationals;
//! * randomized algorithms treated as pure `(input, tape) -> output`
//!   rules, with exact (enumerated) and Monte-Carlo success
//!   measurement, planted adversaries with exactly known advantage
//!   ([`oracles`]), and a list-decoder for the Hadamard code
//!   ([`gldecode`]);
//! * the reductions themselves: direct product to XOR ([`dp2xor`]),
//!   XOR back to direct product ([`xor2dp`]), and counting bounds on
//!   how many functions an oracle can simultaneously approximate
//!   ([`bounds`]).
//!
//! Everything is deterministic given a seed: Monte-Carlo tapes are
//! derived per trial by counter-based expansion, so results do not
//! depend on worker count or scheduling.

pub mod bits;
pub mod boolfn;
pub mod bounds;
pub mod dp2xor;
pub mod frac;
pub mod gldecode;
pub mod oracles;
pub mod seeding;
pub mod xor2dp;

#[cfg(doctest)]
mod book;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An input string or table index does not match the declared arity.
    #[error("arity mismatch: expected {expected} bits, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    /// Two objects that must share a length do not.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    /// An exact enumeration would exceed the configured iteration cap.
    #[error("enumeration of {needed} states exceeds cap {cap}")]
    CapExceeded { needed: u128, cap: u64 },
    /// A requested plant or construction cannot be realized exactly.
    #[error("infeasible target: {0}")]
    Infeasible(String),
    /// Degenerate parameters (zero-length domain, empty list, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// A randomized search ran out of attempts.
    #[error("sampling budget exhausted after finding {achieved} members")]
    BudgetExhausted { achieved: usize },
    /// Structurally inconsistent caller-supplied data.
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    /// A serialized artifact failed validation.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Iteration budget for exact enumerations.
///
/// Exact operations refuse to start when the product space they would
/// walk exceeds this bound, so accidental exponential blowups surface
/// as errors instead of hangs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumCap(pub u64);

impl Default for EnumCap {
    fn default() -> Self {
        EnumCap(1 << 28)
    }
}

impl EnumCap {
    /// Errors if `needed` states exceed the cap.
    pub fn check(self, needed: u128) -> Result<()> {
        if needed > self.0 as u128 {
            Err(Error::CapExceeded { needed, cap: self.0 })
        } else {
            Ok(())
        }
    }
}
