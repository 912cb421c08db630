//! Truncated singular series and Euler-product density constants.
//!
//! The truncated singular series attaches to a polynomial tuple the finite
//! Euler product over primes up to `log x`, with the congruence prefactor
//! `M^{n-1}/phi(M)^n` and the coprimality indicator at the anchor. Density
//! constants truncate the infinite products at a prime `L` and carry a
//! rigorous two-sided tail interval instead of a bare float.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{factorize, gcd, is_prime, PrimeSieve};
use crate::model::{c_ell, ratio_string, Rational};
use crate::polyff::{is_schinzel, z_count, PolyTuple};
use crate::{Budget, Error, Result};

/// Largest supported truncation prime (bounds sieve memory).
pub const MAX_TRUNCATION: u64 = 10_000_000;

/// A truncated singular series value.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesValue {
    /// Float image of `exact`.
    pub value: f64,
    /// The exact value: indicator times prefactor times prime product.
    #[serde(with = "crate::series::ratio_serde")]
    pub exact: Rational,
    /// The Euler product over `ell <= log x`, `ell` not dividing `M`.
    #[serde(with = "crate::series::ratio_serde")]
    pub prime_product: Rational,
    /// Natural log of the `x` that produced the cutoff.
    pub cutoff: f64,
    pub x: f64,
    /// Primes the product ranged over (ascending).
    pub primes_used: Vec<u64>,
    pub anchor: i64,
    pub modulus: u64,
    /// True when `gcd(M, prod_i P_i(anchor)) = 1`.
    pub gcd_indicator: bool,
}

pub(crate) mod ratio_serde {
    use super::*;
    use serde::Deserialize;

    pub fn serialize<S: serde::Serializer>(
        r: &Rational,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&ratio_string(r))
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse_ratio(&text).ok_or_else(|| {
            serde::de::Error::custom(format!("expected an integer or \"p/q\", got {text:?}"))
        })
    }

    fn parse_ratio(text: &str) -> Option<Rational> {
        use num_bigint::BigInt;
        let (num, den) = match text.split_once('/') {
            Some((n, d)) => (n, d),
            None => (text, "1"),
        };
        let num: BigInt = num.parse().ok()?;
        let den: BigInt = den.parse().ok()?;
        if den == BigInt::from(0) {
            return None;
        }
        Some(Rational::new(num, den))
    }
}

/// Euler totient from a factorization.
fn phi(m: u64, budget: &Budget) -> Result<u64> {
    let mut out = m;
    for p in factorize(m, budget)?.distinct_primes() {
        out = out / p * (p - 1);
    }
    Ok(out)
}

/// The truncated singular series of `tuple` at `x`, over the progression
/// `anchor mod modulus`.
///
/// Zero when the anchor values share a factor with the modulus; otherwise
/// `M^{n-1}/phi(M)^n` times the product over primes `ell <= log x` not
/// dividing `M` of `(1 - Z(ell)/ell) / (1 - 1/ell)^n`, computed exactly.
pub fn singular_series(
    tuple: &PolyTuple,
    x: f64,
    anchor: i64,
    modulus: u64,
    budget: &Budget,
) -> Result<SeriesValue> {
    if !(x >= 3.0) {
        return Err(Error::InvalidInput(format!("x must be at least 3, got {x}")));
    }
    if modulus == 0 {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    let cutoff = x.ln();
    let n = tuple.len() as u32;

    // gcd(M, prod P_i(anchor)) via the product mod M
    let m0 = anchor.rem_euclid(modulus as i64) as u64;
    let prod_mod = tuple
        .polys()
        .iter()
        .fold(1u64, |acc, p| ((acc as u128 * p.eval_mod(m0, modulus) as u128) % modulus.max(1) as u128) as u64);
    let gcd_indicator = modulus == 1 || gcd(modulus, prod_mod) == 1;

    if !gcd_indicator {
        return Ok(SeriesValue {
            value: 0.0,
            exact: Rational::zero(),
            prime_product: Rational::one(),
            cutoff,
            x,
            primes_used: Vec::new(),
            anchor: m0 as i64,
            modulus,
            gcd_indicator,
        });
    }

    let mut prime_product = Rational::one();
    let mut primes_used = Vec::new();
    let mut ell = 2u64;
    while (ell as f64) <= cutoff {
        if is_prime(ell) && modulus % ell != 0 {
            let z = z_count(tuple, ell).count;
            // (1 - Z/ell)/(1 - 1/ell)^n = (ell - Z) ell^{n-1} / (ell-1)^n
            let num = BigInt::from(ell - z) * BigInt::from(ell).pow(n - 1);
            let den = BigInt::from(ell - 1).pow(n);
            prime_product *= Rational::new(num, den);
            primes_used.push(ell);
        }
        ell += 1;
    }

    let prefactor = Rational::new(
        BigInt::from(modulus).pow(n - 1),
        BigInt::from(phi(modulus, budget)?).pow(n),
    );
    let exact = prefactor * &prime_product;
    let value = exact.to_f64().unwrap_or(f64::NAN);
    Ok(SeriesValue {
        value,
        exact,
        prime_product,
        cutoff,
        x,
        primes_used,
        anchor: m0 as i64,
        modulus,
        gcd_indicator,
    })
}

/// Scaled positivity diagnostic for the singular series.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesFloorDiag {
    pub series: SeriesValue,
    /// `series * (log log x)^(d - n)`; bounded away from zero as x grows.
    pub scaled: f64,
    pub exponent: i64,
}

/// Compute the series and rescale by `(log log x)^(d-n)`.
///
/// Requires a Schinzel tuple whose anchor passes the gcd condition; a
/// nonpositive series for such input would contradict the positivity the
/// scaling is based on, so it is reported as an internal error.
pub fn series_floor_diag(
    tuple: &PolyTuple,
    x: f64,
    anchor: i64,
    modulus: u64,
    budget: &Budget,
) -> Result<SeriesFloorDiag> {
    let verdict = is_schinzel(tuple, budget)?;
    if !verdict.is_ok() {
        return Err(Error::InvalidInput(format!(
            "requires a Schinzel tuple; screen failed with {verdict:?}"
        )));
    }
    let series = singular_series(tuple, x, anchor, modulus, budget)?;
    if !series.gcd_indicator {
        return Err(Error::InvalidInput(
            "anchor values share a factor with the modulus".into(),
        ));
    }
    if !series.exact.is_positive() {
        return Err(Error::Internal(format!(
            "singular series {} is nonpositive for a Schinzel tuple",
            ratio_string(&series.exact)
        )));
    }
    let exponent = tuple.total_degree() as i64 - tuple.len() as i64;
    let scaled = series.value * x.ln().ln().powi(exponent as i32);
    Ok(SeriesFloorDiag { series, scaled, exponent })
}

/// A truncated Euler product with a rigorous interval for its limit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DensityConstant {
    /// Product over primes up to `truncation`.
    pub value: f64,
    pub truncation: u64,
    /// The infinite product lies in `[tail_low, tail_high]`.
    pub tail_low: f64,
    pub tail_high: f64,
}

impl DensityConstant {
    pub fn interval_contains(&self, v: f64) -> bool {
        self.tail_low <= v && v <= self.tail_high
    }
}

fn validate_truncation(limit: u64, min_needed: u64) -> Result<u64> {
    if limit < min_needed {
        return Err(Error::InvalidInput(format!("truncation prime must be at least {min_needed}")));
    }
    if limit > MAX_TRUNCATION {
        return Err(Error::InvalidInput(format!("truncation above {MAX_TRUNCATION} unsupported")));
    }
    Ok(limit)
}

/// `1 - p^{-e}` in f64, exact 1.0 once the power underflows.
fn one_minus_inv_pow(p: u64, e: u64) -> f64 {
    if e as f64 * (p as f64).ln() > 700.0 {
        1.0
    } else {
        1.0 - (p as f64).powi(-(e as i32))
    }
}

/// Tail factor interval for `prod_{ell > L} (1 - c_ell)` given that each
/// late factor is at least `(1 - ell^{-(dmin+1)})^n`:
/// the product lies in `[1 - n L^{-dmin}/dmin, 1]`.
fn tail_interval(n: u32, dmin: u32, limit: u64) -> (f64, f64) {
    let low = 1.0 - n as f64 / (dmin as f64 * (limit as f64).powi(dmin as i32));
    (low.max(0.0), 1.0)
}

/// Density of Schinzel tuples among box members: the truncated product of
/// `(1 - c_ell)` over primes `ell <= limit` not dividing `modulus`.
pub fn schinzel_density(degrees: &[u32], modulus: u64, limit: u64) -> Result<DensityConstant> {
    if degrees.is_empty() || degrees.iter().any(|&d| d == 0) {
        return Err(Error::InvalidInput("degrees must be positive".into()));
    }
    if modulus == 0 {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    let d: u64 = degrees.iter().map(|&x| x as u64).sum();
    let limit = validate_truncation(limit, d.max(2))?;
    let sieve = PrimeSieve::new(limit);
    let mut value = 1.0f64;
    for ell in sieve.primes() {
        if modulus % ell == 0 {
            continue;
        }
        if ell <= d {
            // small primes: exact alternating sum
            let c = c_ell(ell, degrees);
            value *= (Rational::one() - c).to_f64().unwrap();
        } else {
            // closed form: 1 - c = prod_i (1 - ell^{-(d_i+1)})
            for &di in degrees {
                value *= one_minus_inv_pow(ell, di as u64 + 1);
            }
        }
    }
    let dmin = *degrees.iter().min().unwrap();
    let (lo, hi) = tail_interval(degrees.len() as u32, dmin, limit);
    Ok(DensityConstant {
        value,
        truncation: limit,
        tail_low: value * lo,
        tail_high: value * hi,
    })
}

/// The odd-prime product `prod_{3 <= p <= L} (1 - p^{-min(p, d+1)})`.
pub fn odd_prime_product(d: u32, limit: u64) -> Result<DensityConstant> {
    if d < 2 {
        return Err(Error::InvalidInput("degree must be at least 2".into()));
    }
    let limit = validate_truncation(limit, 3)?;
    let sieve = PrimeSieve::new(limit);
    let mut value = 1.0f64;
    for p in sieve.primes().skip(1) {
        value *= one_minus_inv_pow(p, p.min(d as u64 + 1));
    }
    // late factors are (1 - p^{-(d+1)}): same tail shape with n = 1
    let (lo, hi) = tail_interval(1, d, limit);
    Ok(DensityConstant {
        value,
        truncation: limit,
        tail_low: value * lo,
        tail_high: value * hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyff::IntPoly;

    fn tuple(polys: &[&[i64]]) -> PolyTuple {
        PolyTuple::new(polys.iter().map(|c| IntPoly::new(c.to_vec()).unwrap()).collect())
            .unwrap()
    }

    fn rat(p: i64, q: i64) -> Rational {
        Rational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn identity_tuple_has_unit_series() {
        let b = Budget::default();
        for x in [3.0, 100.0, 1e6] {
            let s = singular_series(&tuple(&[&[0, 1]]), x, 0, 1, &b).unwrap();
            assert_eq!(s.exact, Rational::one());
            assert!(s.gcd_indicator);
        }
    }

    #[test]
    fn quadratic_example_is_exact() {
        let b = Budget::default();
        let s = singular_series(&tuple(&[&[1, 0, 1]]), 10f64.exp(), 0, 1, &b).unwrap();
        assert_eq!(s.primes_used, vec![2, 3, 5, 7]);
        assert_eq!(s.exact, rat(21, 16));
        assert!((s.value - 1.3125).abs() < 1e-12);
    }

    #[test]
    fn gcd_indicator_and_fixed_divisor_zero() {
        let b = Budget::default();
        // anchor value even, modulus even
        let s = singular_series(&tuple(&[&[2, 1]]), 100.0, 0, 2, &b).unwrap();
        assert!(!s.gcd_indicator);
        assert_eq!(s.exact, Rational::zero());
        assert_eq!(s.value, 0.0);
        // always-even polynomial: indicator passes (M=1) but ell=2 kills it
        let s = singular_series(&tuple(&[&[2, 1, 1]]), 100.0, 0, 1, &b).unwrap();
        assert!(s.gcd_indicator);
        assert_eq!(s.exact, Rational::zero());
    }

    #[test]
    fn congruence_prefactor() {
        let b = Budget::default();
        // odd numbers: M = 2, n0 = 1; prefactor 2^0/phi(2)^1 = 1 and all
        // odd-prime factors cancel, so the series is 1
        let s = singular_series(&tuple(&[&[0, 1]]), 1e4, 1, 2, &b).unwrap();
        assert_eq!(s.exact, Rational::one());
        assert!(s.primes_used.iter().all(|&l| l % 2 == 1));
    }

    #[test]
    fn linear_series_matches_direct_form() {
        use rand::Rng;
        let b = Budget::default();
        let x = 1e5f64; // primes up to 11
        for trial in 0..100u64 {
            let mut rng = crate::exec::stream_rng(31, trial);
            let (a, bb) = loop {
                let a = rng.gen_range(-60i64..=60);
                let bb = rng.gen_range(1i64..=60);
                if gcd(a.unsigned_abs(), bb as u64) == 1 {
                    break (a, bb);
                }
            };
            let s = singular_series(&tuple(&[&[a, bb]]), x, 0, 1, &b).unwrap();
            let mut expect = Rational::one();
            for ell in [2i64, 3, 5, 7, 11] {
                if bb % ell == 0 {
                    expect *= rat(ell, ell - 1);
                }
            }
            assert_eq!(s.exact, expect, "a={a} b={bb}");
            assert!(s.exact.is_positive());
        }
    }

    #[test]
    fn floor_diag_scales_and_guards() {
        let b = Budget::default();
        let d = series_floor_diag(&tuple(&[&[0, 1]]), 100.0, 0, 1, &b).unwrap();
        assert_eq!(d.exponent, 0);
        assert!((d.scaled - 1.0).abs() < 1e-12);

        let d = series_floor_diag(&tuple(&[&[1, 0, 1]]), 10f64.exp(), 0, 1, &b).unwrap();
        assert_eq!(d.exponent, 1);
        let expect = 1.3125 * 10f64.ln();
        assert!((d.scaled - expect).abs() < 1e-9, "{} vs {expect}", d.scaled);

        // non-Schinzel input refused
        assert!(matches!(
            series_floor_diag(&tuple(&[&[2, 1, 1]]), 100.0, 0, 1, &b),
            Err(Error::InvalidInput(_))
        ));
        // gcd failure refused
        assert!(matches!(
            series_floor_diag(&tuple(&[&[2, 1]]), 100.0, 0, 2, &b),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn density_reaches_basel_constant() {
        let c = schinzel_density(&[1], 1, 100_000).unwrap();
        let basel = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
        assert!((c.value - basel).abs() < 1e-4, "{} vs {basel}", c.value);
        assert!(c.interval_contains(basel));
        // partial product example: L = 2, d = 2
        let c2 = schinzel_density(&[2], 1, 2).unwrap();
        assert!((c2.value - 0.75).abs() < 1e-15);
        let refined = schinzel_density(&[2], 1, 1_000_000).unwrap();
        assert!(c2.interval_contains(refined.value), "{c2:?} vs {}", refined.value);
    }

    #[test]
    fn density_interval_nests() {
        use rand::Rng;
        for trial in 0..12u64 {
            let mut rng = crate::exec::stream_rng(77, trial);
            let n = rng.gen_range(1..=2usize);
            let degrees: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=3)).collect();
            let modulus = rng.gen_range(1u64..=6);
            let small = schinzel_density(&degrees, modulus, 500).unwrap();
            let large = schinzel_density(&degrees, modulus, 50_000).unwrap();
            assert!(
                small.interval_contains(large.value),
                "{degrees:?} M={modulus}: {small:?} vs {}",
                large.value
            );
            assert!(small.tail_high - small.tail_low >= large.tail_high - large.tail_low);
        }
    }

    #[test]
    fn odd_prime_product_reference_values() {
        let d2 = odd_prime_product(2, 1_000_000).unwrap();
        assert!((d2.value - 0.95).abs() < 5e-3, "{}", d2.value);
        let big = odd_prime_product(60, 1_000_000).unwrap();
        assert!((big.value - 0.962).abs() < 1e-3, "{}", big.value);
        // monotone increasing in d at fixed truncation
        let mut last = 0.0;
        for d in 2..=8 {
            let v = odd_prime_product(d, 10_000).unwrap().value;
            assert!(v > last, "d={d}: {v} <= {last}");
            last = v;
        }
        assert!(odd_prime_product(1, 100).is_err());
    }
}
