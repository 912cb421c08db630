//! Representations by the forms x^2 + d y^2.

use super::factor::factorize;
use super::primality::is_prime;
use super::symbols::sqrt_mod;
use crate::{Budget, Error, Result};

/// Solve x^2 + d y^2 = p for a prime p and d >= 1 (Cornacchia's descent).
/// Returns nonnegative (x, y); None when no representation exists.
pub fn cornacchia(d: u64, p: u64) -> Option<(u64, u64)> {
    debug_assert!(d >= 1 && is_prime(p));
    if p == 2 {
        return match d {
            1 => Some((1, 1)),
            2 => Some((0, 1)),
            _ => None,
        };
    }
    if d == p {
        return Some((0, 1));
    }
    if d > p {
        return None; // y >= 1 already overshoots, and x^2 = p is impossible
    }
    // Root of t^2 = -d (mod p), lifted into (p/2, p).
    let t0 = sqrt_mod(-(d as i128), p)?;
    let mut r0 = p;
    let mut r1 = t0.max(p - t0);
    let bound = p.isqrt();
    while r1 > bound {
        let r2 = r0 % r1;
        r0 = r1;
        r1 = r2;
    }
    if r1 == 0 {
        return None;
    }
    let rem = p - r1 * r1;
    if rem % d != 0 {
        return None;
    }
    let y2 = rem / d;
    let y = y2.isqrt();
    if y * y != y2 {
        return None;
    }
    debug_assert_eq!(r1 as u128 * r1 as u128 + d as u128 * y as u128 * y as u128, p as u128);
    Some((r1, y))
}

/// Write n as a sum of two squares, or decide none exists.
///
/// Criterion: every prime p = 3 (mod 4) must divide n to an even power.
/// The witness is assembled by composing prime representations with the
/// Gaussian-integer product (a,b)*(c,e) = (ac - be, ae + bc).
pub fn two_squares(n: u64, budget: &Budget) -> Result<Option<(u64, u64)>> {
    if n == 0 {
        return Ok(Some((0, 0)));
    }
    let f = factorize(n, budget)?;
    let mut x: i128 = 1;
    let mut y: i128 = 0;
    let mut scale: u64 = 1;
    for &(p, e) in &f.factors {
        match p % 4 {
            3 => {
                if e % 2 == 1 {
                    return Ok(None);
                }
                scale *= p.pow(e / 2);
            }
            _ => {
                let (a, b) = if p == 2 {
                    (1u64, 1u64)
                } else {
                    cornacchia(1, p).ok_or_else(|| {
                        Error::Internal(format!("prime {p} = 1 mod 4 must split as two squares"))
                    })?
                };
                for _ in 0..e {
                    let (nx, ny) = (x * a as i128 - y * b as i128, x * b as i128 + y * a as i128);
                    x = nx;
                    y = ny;
                }
            }
        }
    }
    let (x, y) = (x.unsigned_abs() as u64 * scale, y.unsigned_abs() as u64 * scale);
    debug_assert_eq!(x as u128 * x as u128 + y as u128 * y as u128, n as u128);
    Ok(Some((x.max(y), x.min(y))))
}
