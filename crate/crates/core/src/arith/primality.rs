//! Primality testing: deterministic below 2^64, probable-prime above.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Miller-Rabin witnesses making the test deterministic for all n < 2^64
/// (the first twelve primes cover well beyond that range).
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

pub fn mod_mul(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn mod_pow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mod_mul(acc, base, m);
        }
        base = mod_mul(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic primality for `n < 2^64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_WITNESSES {
        let mut x = mod_pow(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mod_mul(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Outcome of a primality check that may exceed the deterministic range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Primality {
    Composite,
    /// Proven prime (inside the deterministic u64 range).
    Prime,
    /// Passed a strong base-2 test plus a strong Lucas test; not proven.
    ProbablePrime,
}

impl Primality {
    pub fn is_prime(self) -> bool {
        !matches!(self, Primality::Composite)
    }
    pub fn is_probable(self) -> bool {
        matches!(self, Primality::ProbablePrime)
    }
}

/// Primality for arbitrary-size integers. Values fitting in u64 get the
/// deterministic answer; larger values get a Baillie-PSW-style verdict
/// tagged [`Primality::ProbablePrime`].
pub fn is_prime_big(n: &BigUint) -> Primality {
    if let Some(small) = n.to_u64() {
        return if is_prime(small) { Primality::Prime } else { Primality::Composite };
    }
    for p in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53] {
        if (n % p).is_zero() {
            return Primality::Composite;
        }
    }
    if !strong_probable_prime_base2(n) {
        return Primality::Composite;
    }
    if n.sqrt().pow(2) == *n {
        return Primality::Composite;
    }
    if strong_lucas_probable_prime(n) {
        Primality::ProbablePrime
    } else {
        Primality::Composite
    }
}

fn strong_probable_prime_base2(n: &BigUint) -> bool {
    let one = BigUint::one();
    let nm1 = n - &one;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    let mut x = BigUint::from(2u32).modpow(&d, n);
    if x == one || x == nm1 {
        return true;
    }
    for _ in 1..s {
        x = x.modpow(&BigUint::from(2u32), n);
        if x == nm1 {
            return true;
        }
    }
    false
}

/// Strong Lucas test with Selfridge's parameter choice: first
/// D in 5, -7, 9, -11, ... with (D|n) = -1, P = 1, Q = (1-D)/4.
fn strong_lucas_probable_prime(n: &BigUint) -> bool {
    let n_int = BigInt::from(n.clone());
    let mut d = BigInt::from(5);
    loop {
        match jacobi_big(&d, &n_int) {
            0 => return false, // shares a factor with n
            -1 => break,
            _ => {}
        }
        d = if d.is_positive() { -(d + BigInt::from(2)) } else { -(d - BigInt::from(2)) };
    }
    let q = (BigInt::one() - &d) / 4;

    // n + 1 = k * 2^s with k odd.
    let np1 = n + BigUint::one();
    let s = np1.trailing_zeros().unwrap_or(0);
    let k = &np1 >> s;

    // Binary chain for U_k, V_k (P = 1), tracking Q^j alongside.
    let to_mod = |x: &BigInt| -> BigInt { x.mod_floor(&n_int) };
    let half = {
        // inverse of 2 mod n (n is odd here)
        let two_inv = (&n_int + BigInt::one()) / BigInt::from(2);
        let modulus = n_int.clone();
        move |x: &BigInt| -> BigInt { (x * &two_inv).mod_floor(&modulus) }
    };
    let mut u = BigInt::zero();
    let mut v = BigInt::from(2);
    let mut qk = BigInt::one();
    let bits = k.bits();
    for i in (0..bits).rev() {
        // double: (U, V, Q^j) -> (U*V, V^2 - 2Q^j, Q^(2j))
        let u2 = to_mod(&(&u * &v));
        let v2 = to_mod(&(&v * &v - BigInt::from(2) * &qk));
        qk = to_mod(&(&qk * &qk));
        u = u2;
        v = v2;
        if k.bit(i) {
            // step: U' = (U + V)/2, V' = (D*U + V)/2, Q^j *= Q
            let un = half(&to_mod(&(&u + &v)));
            let vn = half(&to_mod(&(&d * &u + &v)));
            qk = to_mod(&(&qk * &q));
            u = un;
            v = vn;
        }
    }
    if u.is_zero() || v.is_zero() {
        return true;
    }
    for _ in 1..s {
        v = to_mod(&(&v * &v - BigInt::from(2) * &qk));
        if v.is_zero() {
            return true;
        }
        qk = to_mod(&(&qk * &qk));
    }
    false
}

/// Jacobi symbol (a|n) for odd positive n (standard +-1/0 convention).
fn jacobi_big(a: &BigInt, n: &BigInt) -> i32 {
    let mut a = a.mod_floor(n);
    let mut n = n.clone();
    let mut sign = 1i32;
    while !a.is_zero() {
        while a.is_even() {
            a /= 2;
            let r = (&n % 8u32).to_u32().unwrap();
            if r == 3 || r == 5 {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if (&a % 4u32).to_u32().unwrap() == 3 && (&n % 4u32).to_u32().unwrap() == 3 {
            sign = -sign;
        }
        a = a.mod_floor(&n);
    }
    if n.is_one() {
        sign
    } else {
        0
    }
}
