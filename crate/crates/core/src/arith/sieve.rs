//! Smallest-prime-factor sieve for bulk primality / von Mangoldt lookups.

/// Sieve of smallest prime factors up to an inclusive limit.
pub struct PrimeSieve {
    spf: Vec<u32>,
}

impl PrimeSieve {
    /// Build the sieve for values `0..=limit` (limit < 2^32).
    pub fn new(limit: u64) -> Self {
        assert!(limit < u32::MAX as u64, "sieve limit too large");
        let n = limit as usize + 1;
        let mut spf = vec![0u32; n.max(2)];
        for i in 2..n {
            if spf[i] == 0 {
                let mut j = i;
                while j < n {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        PrimeSieve { spf }
    }

    pub fn limit(&self) -> u64 {
        self.spf.len() as u64 - 1
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && self.spf[n as usize] as u64 == n
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        (2..self.spf.len() as u64).filter(move |&n| self.is_prime(n))
    }

    /// Von Mangoldt value: log p when n is a power of the prime p, else 0.
    pub fn mangoldt(&self, n: u64) -> f64 {
        if n < 2 {
            return 0.0;
        }
        let p = self.spf[n as usize] as u64;
        let mut m = n;
        while m % p == 0 {
            m /= p;
        }
        if m == 1 {
            (p as f64).ln()
        } else {
            0.0
        }
    }

    /// Table of von Mangoldt values for indices `0..=limit`.
    pub fn mangoldt_table(&self) -> Vec<f64> {
        (0..self.spf.len() as u64).map(|n| self.mangoldt(n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::primality::is_prime;

    #[test]
    fn sieve_agrees_with_miller_rabin() {
        let sieve = PrimeSieve::new(20_000);
        for n in 0..=20_000u64 {
            assert_eq!(sieve.is_prime(n), is_prime(n), "n={n}");
        }
    }

    #[test]
    fn mangoldt_values() {
        let sieve = PrimeSieve::new(100);
        assert_eq!(sieve.mangoldt(1), 0.0);
        assert_eq!(sieve.mangoldt(7), 7f64.ln());
        assert_eq!(sieve.mangoldt(8), 2f64.ln());
        assert_eq!(sieve.mangoldt(81), 3f64.ln());
        assert_eq!(sieve.mangoldt(12), 0.0);
    }
}
