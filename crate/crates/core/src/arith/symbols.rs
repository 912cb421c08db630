//! Quadratic symbols, modular square roots, CRT, and Hilbert symbols.

use serde::{Deserialize, Serialize};

use super::primality::{is_prime, mod_mul, mod_pow};
use crate::{Error, Result};

/// Quadratic symbol (a|b) for b >= 1, completely multiplicative in b.
///
/// For odd prime p it is the Legendre symbol; the prime 2 carries the
/// parity convention (a|2) = 1 for odd a and 0 for even a (not the
/// Kronecker symbol). In particular (a|b) = 0 iff a and b share a factor,
/// and (a|1) = 1.
pub fn symbol(a: i128, b: u128) -> i32 {
    assert!(b >= 1, "symbol(a, b) requires b >= 1");
    let twos = b.trailing_zeros();
    let odd = b >> twos;
    if twos > 0 && a % 2 == 0 {
        return 0;
    }
    jacobi_odd(a, odd)
}

/// Jacobi symbol for odd n >= 1 (binary algorithm; handles negative a).
fn jacobi_odd(a: i128, n: u128) -> i32 {
    debug_assert!(n % 2 == 1);
    let mut n = n;
    let mut sign = 1i32;
    // Pull out the sign: (-1|n) = (-1)^((n-1)/2), then continue with |a|.
    let mut a = if a < 0 {
        if n % 4 == 3 {
            sign = -sign;
        }
        a.unsigned_abs() % n
    } else {
        (a as u128) % n
    };
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

/// Square root of `a` modulo the prime `p` (Tonelli-Shanks), smallest of
/// the two roots. None when `a` is a non-residue.
pub fn sqrt_mod(a: i128, p: u64) -> Option<u64> {
    let a = a.rem_euclid(p as i128) as u64;
    if p == 2 {
        return Some(a & 1);
    }
    if a == 0 {
        return Some(0);
    }
    if mod_pow(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    let root = if p % 4 == 3 {
        mod_pow(a, (p + 1) / 4, p)
    } else {
        tonelli_shanks(a, p)
    };
    debug_assert_eq!(mod_mul(root, root, p), a);
    Some(root.min(p - root))
}

fn tonelli_shanks(a: u64, p: u64) -> u64 {
    // p - 1 = q * 2^s with q odd
    let s = (p - 1).trailing_zeros();
    let q = (p - 1) >> s;
    // any quadratic non-residue serves as the generator
    let mut z = 2u64;
    while mod_pow(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = mod_pow(z, q, p);
    let mut t = mod_pow(a, q, p);
    let mut r = mod_pow(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mod_mul(t2, t2, p);
            i += 1;
        }
        let b = mod_pow(c, 1 << (m - i - 1), p);
        m = i;
        c = mod_mul(b, b, p);
        t = mod_mul(t, c, p);
        r = mod_mul(r, b, p);
    }
    r
}

/// Chinese remainder: the unique `x mod prod(m_i)` with `x = r_i mod m_i`.
/// Moduli must be pairwise coprime and >= 1.
pub fn crt(congruences: &[(i128, u128)]) -> Result<(u128, u128)> {
    let mut x = 0u128;
    let mut modulus = 1u128;
    for &(r, m) in congruences {
        if m == 0 {
            return Err(Error::InvalidInput("crt modulus 0".into()));
        }
        if gcd_u128(modulus, m) != 1 {
            return Err(Error::InvalidInput(format!(
                "crt moduli not pairwise coprime: gcd({modulus}, {m}) > 1"
            )));
        }
        let r = r.rem_euclid(m as i128) as u128;
        // solve x + modulus * k = r (mod m)
        let k = mod_mul_u128(
            (r + m - x % m) % m,
            mod_inverse(modulus % m, m).ok_or_else(|| Error::Internal("crt inverse".into()))?,
            m,
        );
        x = x
            .checked_add(
                modulus.checked_mul(k).ok_or_else(|| Error::Overflow("crt combine".into()))?,
            )
            .ok_or_else(|| Error::Overflow("crt combine".into()))?;
        modulus =
            modulus.checked_mul(m).ok_or_else(|| Error::Overflow("crt modulus product".into()))?;
    }
    Ok((x % modulus, modulus))
}

fn gcd_u128(a: u128, b: u128) -> u128 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn mod_mul_u128(a: u128, b: u128, m: u128) -> u128 {
    // Schoolbook split; moduli here stay far below 2^64 but keep it safe.
    if let (Some(prod), true) = (a.checked_mul(b), m > 0) {
        return prod % m;
    }
    let mut acc = 0u128;
    let mut a = a % m;
    let mut b = b;
    while b > 0 {
        if b & 1 == 1 {
            acc = (acc + a) % m;
        }
        a = (a << 1) % m;
        b >>= 1;
    }
    acc
}

fn mod_inverse(a: u128, m: u128) -> Option<u128> {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u128)
}

/// Inverse of `a` modulo `m >= 1`, or None when gcd(a, m) > 1.
pub fn inverse_mod(a: i128, m: u128) -> Option<u128> {
    if m == 0 {
        return None;
    }
    mod_inverse(a.rem_euclid(m as i128) as u128, m)
}

/// A place of the rationals: a finite prime or the real place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Place {
    /// The archimedean (real) place.
    Infinity,
    /// A finite prime (2 included).
    Prime(u64),
}

impl std::fmt::Display for Place {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Place::Infinity => write!(f, "infinity"),
            Place::Prime(p) => write!(f, "{p}"),
        }
    }
}

/// Hilbert symbol (a, b)_v for nonzero integers: +1 iff a x^2 + b y^2 = z^2
/// has a nontrivial solution over the completion at `v`.
pub fn hilbert(a: i128, b: i128, place: Place) -> Result<i32> {
    if a == 0 || b == 0 {
        return Err(Error::InvalidInput("hilbert symbol needs nonzero entries".into()));
    }
    match place {
        Place::Infinity => Ok(if a < 0 && b < 0 { -1 } else { 1 }),
        Place::Prime(2) => Ok(hilbert_at_two(a, b)),
        Place::Prime(p) => {
            if !is_prime(p) {
                return Err(Error::InvalidInput(format!("hilbert place {p} is not prime")));
            }
            Ok(hilbert_at_odd(a, b, p))
        }
    }
}

fn val_and_unit(mut a: i128, p: i128) -> (u32, i128) {
    let mut v = 0;
    while a % p == 0 {
        a /= p;
        v += 1;
    }
    (v, a)
}

fn hilbert_at_odd(a: i128, b: i128, p: u64) -> i32 {
    // (a,b)_p = (-1)^(alpha*beta*eps(p)) (u|p)^beta (w|p)^alpha
    let (alpha, u) = val_and_unit(a, p as i128);
    let (beta, w) = val_and_unit(b, p as i128);
    let eps = ((p - 1) / 2) % 2; // 1 iff p = 3 mod 4
    let mut sign = if (alpha as u64) * (beta as u64) * eps % 2 == 1 { -1 } else { 1 };
    if beta % 2 == 1 && jacobi_odd(u, p as u128) == -1 {
        sign = -sign;
    }
    if alpha % 2 == 1 && jacobi_odd(w, p as u128) == -1 {
        sign = -sign;
    }
    sign
}

fn hilbert_at_two(a: i128, b: i128) -> i32 {
    let (alpha, u) = val_and_unit(a, 2);
    let (beta, w) = val_and_unit(b, 2);
    let eps = |x: i128| (x.rem_euclid(4) == 3) as u32; // (x-1)/2 mod 2
    let omega = |x: i128| {
        let r = x.rem_euclid(8);
        (r == 3 || r == 5) as u32 // (x^2-1)/8 mod 2
    };
    let e = eps(u) * eps(w) + alpha % 2 * omega(w) + beta % 2 * omega(u);
    if e % 2 == 1 {
        -1
    } else {
        1
    }
}

/// All places where a diagonal form with the given nonzero coefficients
/// can fail to be isotropic: infinity, 2, and the primes of the entries.
pub fn relevant_places(prime_divisors: impl IntoIterator<Item = u64>) -> Vec<Place> {
    let mut places = vec![Place::Infinity, Place::Prime(2)];
    for p in prime_divisors {
        if p != 2 && !places.contains(&Place::Prime(p)) {
            places.push(Place::Prime(p));
        }
    }
    places
}

#[cfg(test)]
mod tests {
    use super::*;

    fn legendre_oracle(a: i128, p: u64) -> i32 {
        // count solutions of x^2 = a (mod p)
        let a = a.rem_euclid(p as i128) as u64;
        let count = (0..p).filter(|&x| mod_mul(x, x, p) == a).count();
        match count {
            0 => -1,
            1 => {
                assert_eq!(a, 0);
                0
            }
            _ => 1,
        }
    }

    #[test]
    fn symbol_matches_legendre_oracle_on_odd_primes() {
        for p in [3u64, 5, 7, 11, 13, 17, 19, 23] {
            for a in -30i128..30 {
                assert_eq!(symbol(a, p as u128), legendre_oracle(a, p), "a={a} p={p}");
            }
        }
    }

    #[test]
    fn convention_at_two() {
        assert_eq!(symbol(3, 2), 1);
        assert_eq!(symbol(4, 2), 0);
        assert_eq!(symbol(7, 2), 1);
        assert_eq!(symbol(-5, 2), 1);
        assert_eq!(symbol(0, 1), 1); // empty product
        assert_eq!(symbol(10, 6), 0); // shares the factor 2
    }

    #[test]
    fn multiplicative_in_lower_entry() {
        for a in -20i128..20 {
            for b1 in 1u128..30 {
                for b2 in 1u128..30 {
                    assert_eq!(
                        symbol(a, b1 * b2),
                        symbol(a, b1) * symbol(a, b2),
                        "a={a} b1={b1} b2={b2}"
                    );
                }
            }
        }
    }

    #[test]
    fn quadratic_reciprocity_exhaustive_to_200() {
        // (a|b)(b|a) = (-1)^((a-1)(b-1)/4) for odd coprime positive a, b.
        for a in (3i128..=199).step_by(2) {
            for b in (3i128..=199).step_by(2) {
                if gcd_u128(a as u128, b as u128) != 1 {
                    continue;
                }
                let lhs = symbol(a, b as u128) * symbol(b, a as u128);
                let rhs = if (a % 4 == 3) && (b % 4 == 3) { -1 } else { 1 };
                assert_eq!(lhs, rhs, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn sqrt_mod_agrees_with_search() {
        for p in [2u64, 3, 5, 7, 13, 17, 97, 101, 65537, 99991] {
            for a in 0..p.min(60) {
                let got = sqrt_mod(a as i128, p);
                let want = (0..p).find(|&x| mod_mul(x, x, p) == a % p);
                assert_eq!(got.is_some(), want.is_some(), "a={a} p={p}");
                if let Some(r) = got {
                    assert_eq!(mod_mul(r, r, p), a % p);
                }
            }
        }
        assert_eq!(sqrt_mod(0, 97), Some(0));
        assert_eq!(sqrt_mod(-1, 13), Some(5));
        assert_eq!(sqrt_mod(-1, 7), None);
    }

    #[test]
    fn crt_combines_and_rejects() {
        let (x, m) = crt(&[(2, 3), (3, 5), (2, 7)]).unwrap();
        assert_eq!(m, 105);
        assert_eq!(x, 23);
        let (x, m) = crt(&[(-1, 8), (1, 3)]).unwrap();
        assert_eq!(m, 24);
        assert_eq!(x % 8, 7);
        assert_eq!(x % 3, 1);
        assert!(crt(&[(0, 4), (1, 6)]).is_err());
    }

    #[test]
    fn hilbert_known_values() {
        // x^2 + y^2 + z^2 = 0 has no nontrivial 2-adic solution
        assert_eq!(hilbert(-1, -1, Place::Prime(2)).unwrap(), -1);
        assert_eq!(hilbert(-1, -1, Place::Infinity).unwrap(), -1);
        assert_eq!(hilbert(1, -1, Place::Prime(2)).unwrap(), 1);
        assert_eq!(hilbert(2, 5, Place::Prime(5)).unwrap(), -1); // 2 is not a QR mod 5
        assert_eq!(hilbert(2, 7, Place::Prime(7)).unwrap(), 1); // 2 is a QR mod 7
        assert_eq!(hilbert(-1, 5, Place::Prime(5)).unwrap(), 1); // -1 is a QR mod 5
    }

    #[test]
    fn inverse_mod_small_cases() {
        assert_eq!(inverse_mod(3, 7), Some(5));
        assert_eq!(inverse_mod(-3, 7), Some(2));
        assert_eq!(inverse_mod(4, 8), None);
        assert_eq!(inverse_mod(1, 1), Some(0));
        for m in 1u128..40 {
            for a in -20i128..20 {
                if let Some(inv) = inverse_mod(a, m) {
                    assert_eq!((a.rem_euclid(m as i128) as u128 * inv) % m, 1 % m);
                }
            }
        }
    }

    #[test]
    fn hilbert_is_symmetric_and_bilinear_at_every_place() {
        let places = [Place::Infinity, Place::Prime(2), Place::Prime(3), Place::Prime(5), Place::Prime(7)];
        let entries = [-10i128, -7, -5, -4, -3, -2, -1, 1, 2, 3, 4, 5, 6, 7, 9, 10];
        for &v in &places {
            for &a in &entries {
                for &b in &entries {
                    let ab = hilbert(a, b, v).unwrap();
                    assert_eq!(ab, hilbert(b, a, v).unwrap());
                    // (a, b)(a, c) = (a, bc) when bc stays in range
                    for &c in &entries {
                        let rhs = hilbert(a, b * c, v).unwrap();
                        assert_eq!(ab * hilbert(a, c, v).unwrap(), rhs, "a={a} b={b} c={c} v={v:?}");
                    }
                }
            }
        }
    }
}
