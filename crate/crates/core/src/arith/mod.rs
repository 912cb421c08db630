//! Integer arithmetic toolbox shared by every pipeline: primality,
//! factorization, quadratic and Hilbert symbols, modular square roots,
//! two-squares representations, and the von Mangoldt function.
//!
//! Everything here is pure and safe to call concurrently.

mod factor;
mod mangoldt;
mod primality;
mod repr;
mod sieve;
mod symbols;

pub use factor::{factorize, gcd, prime_divisors_signed, Factorization};
pub use mangoldt::{mangoldt, mangoldt_truncated};
pub use primality::{is_prime, is_prime_big, mod_mul, mod_pow, Primality};
pub use repr::{cornacchia, two_squares};
pub use sieve::PrimeSieve;
pub use symbols::{crt, hilbert, inverse_mod, relevant_places, sqrt_mod, symbol, Place};

/// Primality of a signed value with a "probable" marker for values that
/// exceed the deterministic range (negative numbers and 0/1 are not prime).
pub fn is_prime_i128(v: i128) -> (bool, bool) {
    if v < 2 {
        return (false, false);
    }
    if let Ok(small) = u64::try_from(v) {
        (is_prime(small), false)
    } else {
        let verdict = is_prime_big(&num_bigint::BigUint::from(v as u128));
        (verdict.is_prime(), verdict.is_probable())
    }
}
