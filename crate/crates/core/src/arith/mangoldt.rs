//! Von Mangoldt function and its Moebius-truncated approximation.

use super::factor::factorize;
use super::primality::is_prime;
use crate::{Budget, Result};

/// Von Mangoldt: log p when n = p^k (k >= 1), 0 otherwise (including n <= 1).
pub fn mangoldt(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if is_prime(n) {
        return (n as f64).ln();
    }
    // A proper prime power p^k (k >= 2) is a perfect k-th power of a prime.
    for k in 2..=63u32 {
        let r = nth_root(n, k);
        if r < 2 {
            break;
        }
        if checked_pow(r, k) == Some(n) && is_prime(r) {
            return (r as f64).ln();
        }
    }
    0.0
}

/// Truncated von Mangoldt: -sum of mu(d) log d over divisors d <= z of n.
/// Defined as 0 for n <= 0; agrees with [`mangoldt`] once z >= n.
pub fn mangoldt_truncated(n: i64, z: u64, budget: &Budget) -> Result<f64> {
    if n <= 0 {
        return Ok(0.0);
    }
    let f = factorize(n as u64, budget)?;
    let mut sum = 0.0f64;
    // Only squarefree divisors contribute; n has few distinct primes.
    let mut divisors = f.squarefree_divisors();
    divisors.sort_unstable_by_key(|&(d, _)| d);
    for (d, mu) in divisors {
        if d > z {
            continue;
        }
        sum -= mu as f64 * (d as f64).ln();
    }
    Ok(sum)
}

fn nth_root(n: u64, k: u32) -> u64 {
    let mut r = (n as f64).powf(1.0 / k as f64).round() as u64;
    while checked_pow(r, k).map_or(true, |v| v > n) {
        r -= 1;
    }
    while checked_pow(r + 1, k).map_or(false, |v| v <= n) {
        r += 1;
    }
    r
}

fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}
