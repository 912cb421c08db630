//! Experimental number theory for families of integer polynomials.
//!
//! The crate is organised around one pipeline: integer polynomials with
//! positive leading coefficients are drawn from congruence-constrained
//! coefficient boxes ([`polyff`]), their local root counts feed exact
//! Euler-factor models ([`model`]) and truncated singular series
//! ([`series`]), prime-value statistics are measured against those
//! predictions ([`counting`]), and the same box machinery drives
//! local-global experiments for diagonal conics ([`conic`]) and
//! Chatelet-type equations ([`chatelet`]). [`arith`] supplies the shared
//! integer toolbox (primality, factorization, quadratic symbols,
//! two-squares representations).
//!
//! Everything is deterministic: sampling is seeded, shard boundaries are
//! fixed, and floating-point reductions are folded in shard order, so a
//! given (input, seed) pair reproduces byte-identical results regardless
//! of thread count. The `parallel` feature (on by default) executes
//! shards on rayon; without it the same shards run sequentially.

pub mod arith;
pub mod budget;
pub mod chatelet;
pub mod conic;
pub mod counting;
pub mod error;
pub mod exec;
pub mod model;
pub mod polyff;
pub mod series;

pub use budget::Budget;
pub use error::{Error, Result};
