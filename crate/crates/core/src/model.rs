//! Exact-rational Bernoulli model of the Euler factor `1 - Z/ell`.
//!
//! A tuple of uniformly random polynomials over F_ell of bounded degrees
//! induces Bernoulli variables "the value product at m is nonzero"; the
//! Euler factor is their arithmetic mean. This module computes the model's
//! closed forms (`g_factor`, `c_ell`, `gamma`, `joint_prob`) and verifies
//! them against exhaustive enumeration of the coefficient space. Every
//! quantity is an exact rational; floating point is deliberately absent.

use num_bigint::{BigInt, BigUint};
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::arith::is_prime;
use crate::exec::{self, SHARD_SIZE};
use crate::{Budget, Error, Result};

/// Exact rational scalar used throughout the model.
pub type Rational = BigRational;

/// Render a rational as `p/q` (bare `p` when the denominator is 1).
pub fn ratio_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn serialize_ratio<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&ratio_string(r))
}

fn serialize_ratio_grid<S: Serializer>(
    grid: &[Vec<Rational>],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<String>> =
        grid.iter().map(|row| row.iter().map(ratio_string).collect()).collect();
    rows.serialize(s)
}

fn rat(num: BigInt, den: BigInt) -> Rational {
    Rational::new(num, den)
}

fn pow_int(base: u64, exp: u32) -> BigInt {
    BigInt::from(base).pow(exp)
}

fn choose(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    BigInt::from(binomial(BigUint::from(n), BigUint::from(k)))
}

/// The sampling space: tuples of polynomials over F_ell with
/// `deg(P_i) <= degrees[i]`, uniform measure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OmegaSpec {
    ell: u64,
    degrees: Vec<u32>,
}

impl OmegaSpec {
    pub fn new(ell: u64, degrees: Vec<u32>) -> Result<Self> {
        if !is_prime(ell) {
            return Err(Error::InvalidInput(format!("{ell} is not prime")));
        }
        if degrees.is_empty() || degrees.iter().any(|&d| d == 0) {
            return Err(Error::InvalidInput("degrees must be a nonempty list of positive integers".into()));
        }
        if degrees.iter().any(|&d| d >= 32) {
            return Err(Error::InvalidInput("degrees above 31 are not supported".into()));
        }
        Ok(OmegaSpec { ell, degrees })
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn tuple_len(&self) -> usize {
        self.degrees.len()
    }

    pub fn total_degree(&self) -> u64 {
        self.degrees.iter().map(|&d| d as u64).sum()
    }

    /// Number of coefficient slots, `sum(d_i + 1)`.
    fn slot_count(&self) -> u32 {
        self.degrees.iter().map(|&d| d + 1).sum()
    }

    /// `ell^(d+n)`, the number of tuples.
    pub fn space_size(&self) -> Option<u128> {
        let mut size: u128 = 1;
        for _ in 0..self.slot_count() {
            size = size.checked_mul(self.ell as u128)?;
        }
        Some(size)
    }

    fn checked_size(&self, budget: &Budget) -> Result<u128> {
        let size = self
            .space_size()
            .ok_or_else(|| Error::Overflow("coefficient space exceeds 128-bit indexing".into()))?;
        if size > budget.enum_tuples {
            return Err(Error::BudgetExceeded(format!(
                "space has {size} tuples, budget allows {}",
                budget.enum_tuples
            )));
        }
        Ok(size)
    }

    /// Value table of the tuple with the given index: `values[i][m]` is
    /// `P_i(m)` in F_ell, indices in base-`ell` digit order, constant
    /// term in the least significant digit.
    fn value_table(&self, index: u128, values: &mut Vec<Vec<u64>>) {
        let ell = self.ell;
        values.clear();
        let mut rest = index;
        for &d in &self.degrees {
            let mut coeffs = [0u64; 32];
            let e = d as usize + 1;
            for c in coeffs.iter_mut().take(e) {
                *c = (rest % ell as u128) as u64;
                rest /= ell as u128;
            }
            let row = (0..ell)
                .map(|m| {
                    let mut acc = 0u64;
                    for &c in coeffs[..e].iter().rev() {
                        acc = (acc * m + c) % ell;
                    }
                    acc
                })
                .collect();
            values.push(row);
        }
    }
}

/// `G_ell(d, s)`: the expectation of a product of `s` of the single-
/// polynomial Bernoulli variables, `sum_{r=0..s} C(s,r)(-1)^r
/// ell^{-min(r, d+1)}`.
pub fn g_factor(ell: u64, d: u32, s: u32) -> Rational {
    let e = d + 1;
    let mut num = BigInt::zero();
    for r in 0..=s {
        let term = choose(s as u64, r as u64) * pow_int(ell, e - e.min(r));
        if r % 2 == 0 {
            num += term;
        } else {
            num -= term;
        }
    }
    rat(num, pow_int(ell, e))
}

/// Probability that a random tuple vanishes somewhere in every residue
/// class, i.e. that the root count of the value product is `ell`.
pub fn c_ell(ell: u64, degrees: &[u32]) -> Rational {
    let mut sum = Rational::zero();
    for s in 0..=ell {
        let mut term = rat(choose(ell, s), BigInt::one());
        for &d in degrees {
            term *= g_factor(ell, d, s as u32);
        }
        if s % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    sum
}

/// The second-moment Euler factor `1 - 1/ell + ell^{n-1}/(ell-1)^n`.
pub fn gamma(ell: u64, n: u32) -> Rational {
    assert!(n >= 1 && ell >= 2);
    let one = Rational::one();
    let inv_ell = rat(BigInt::one(), BigInt::from(ell));
    let tail = rat(pow_int(ell, n - 1), BigInt::from(ell - 1).pow(n));
    one - inv_ell + tail
}

/// Probability of the exact vanishing pattern `pattern` (indexed by the
/// residues of F_ell; `true` means the value product at that residue is
/// nonzero). The subset sum collapses by cardinality because the factors
/// depend only on the subset size.
pub fn joint_prob(spec: &OmegaSpec, pattern: &[bool]) -> Result<Rational> {
    let ell = spec.ell;
    if pattern.len() != ell as usize {
        return Err(Error::InvalidInput(format!("pattern must have length {ell}")));
    }
    let w = pattern.iter().filter(|&&b| b).count() as u64;
    let mut sum = Rational::zero();
    for s in w..=ell {
        let mut term = rat(choose(ell - w, s - w), BigInt::one());
        for &d in &spec.degrees {
            term *= g_factor(ell, d, s as u32);
        }
        if (s - w) % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    Ok(sum)
}

/// Closed-form Euler-factor data for one prime.
#[derive(Debug, Clone, Serialize)]
pub struct EulerFactorTable {
    pub ell: u64,
    /// `g[k][s] = G_ell(degrees[k], s)` for `s = 0..=ell`.
    #[serde(serialize_with = "serialize_ratio_grid")]
    pub g: Vec<Vec<Rational>>,
    #[serde(serialize_with = "serialize_ratio")]
    pub c: Rational,
    #[serde(serialize_with = "serialize_ratio")]
    pub gamma_n: Rational,
}

impl EulerFactorTable {
    pub fn build(spec: &OmegaSpec) -> Self {
        let ell = spec.ell;
        let g = spec
            .degrees
            .iter()
            .map(|&d| (0..=ell as u32).map(|s| g_factor(ell, d, s)).collect())
            .collect();
        let c = c_ell(ell, &spec.degrees);
        let gamma_n = gamma(ell, spec.degrees.len() as u32);
        debug_assert!(!c.is_negative() && c <= Rational::one());
        debug_assert!(gamma_n.is_positive());
        EulerFactorTable { ell, g, c, gamma_n }
    }
}

/// One exhaustive-vs-closed-form comparison.
#[derive(Debug, Clone, Serialize)]
pub struct MomentCheck {
    pub name: &'static str,
    #[serde(serialize_with = "serialize_ratio")]
    pub exhaustive: Rational,
    #[serde(serialize_with = "serialize_ratio")]
    pub closed_form: Rational,
    pub exact_match: bool,
}

/// Report of the model's moment identities over one space.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub spec: OmegaSpec,
    pub space_size: u128,
    pub fixed_residue: u64,
    pub checks: Vec<MomentCheck>,
}

impl MomentReport {
    pub fn all_match(&self) -> bool {
        self.checks.iter().all(|c| c.exact_match)
    }
}

#[derive(Clone, Copy, Default)]
struct MomentAcc {
    /// sum of (ell - Z) over all tuples
    sum: u128,
    /// sum of (ell - Z)^2
    sum_sq: u128,
    /// sum of (ell - Z) over tuples whose value product is nonzero at the
    /// fixed residue
    cond_sum: u128,
}

/// Verify the model's first moment, second moment, and conditioned mean
/// by exhaustive enumeration, conditioning at residue `m = 1`.
pub fn verify_moments(spec: &OmegaSpec, budget: &Budget) -> Result<MomentReport> {
    verify_moments_at(spec, 1, budget)
}

/// As [`verify_moments`] with an explicit conditioning point; the closed
/// form does not depend on it, and the report shows the residue used.
pub fn verify_moments_at(spec: &OmegaSpec, m: u64, budget: &Budget) -> Result<MomentReport> {
    let size = spec.checked_size(budget)?;
    let ell = spec.ell;
    let m0 = m % ell;

    let acc = exec::map_fold(
        size,
        SHARD_SIZE,
        |(lo, hi)| {
            let mut part = MomentAcc::default();
            let mut values = Vec::new();
            for index in lo..hi {
                spec.value_table(index, &mut values);
                let nonzero = (0..ell)
                    .filter(|&r| values.iter().all(|row| row[r as usize] != 0))
                    .count() as u128;
                part.sum += nonzero;
                part.sum_sq += nonzero * nonzero;
                if values.iter().all(|row| row[m0 as usize] != 0) {
                    part.cond_sum += nonzero;
                }
            }
            part
        },
        MomentAcc::default(),
        |mut a, p| {
            a.sum += p.sum;
            a.sum_sq += p.sum_sq;
            a.cond_sum += p.cond_sum;
            a
        },
    );

    let n = spec.degrees.len() as u32;
    let norm = |total: u128, ell_power: u32| {
        rat(BigInt::from(total), BigInt::from(size) * pow_int(ell, ell_power))
    };
    let one = Rational::one();
    let inv_ell = rat(BigInt::one(), BigInt::from(ell));
    let y = &one - &inv_ell; // 1 - 1/ell

    let first = MomentCheck::compare("first_moment", norm(acc.sum, 1), y.pow(n as i32));
    let second_closed = y.pow(2 * n as i32)
        * (&y + &inv_ell * y.pow(n as i32).recip());
    let second =
        MomentCheck::compare("second_moment", norm(acc.sum_sq, 2), second_closed.clone());
    let conditioned =
        MomentCheck::compare("conditioned_mean", norm(acc.cond_sum, 1), second_closed);

    Ok(MomentReport {
        spec: spec.clone(),
        space_size: size,
        fixed_residue: m0,
        checks: vec![first, second, conditioned],
    })
}

impl MomentCheck {
    fn compare(name: &'static str, exhaustive: Rational, closed_form: Rational) -> Self {
        let exact_match = exhaustive == closed_form;
        MomentCheck { name, exhaustive, closed_form, exact_match }
    }
}

/// Exhaustive tuple counts per vanishing pattern. Entry `b` counts the
/// tuples whose value product is nonzero exactly at the residues in the
/// bitmask `b` (bit `m` set means nonzero at residue `m`).
pub fn exhaustive_joint_counts(spec: &OmegaSpec, budget: &Budget) -> Result<Vec<u128>> {
    let size = spec.checked_size(budget)?;
    let ell = spec.ell;
    if ell > 20 {
        return Err(Error::BudgetExceeded(format!("2^{ell} patterns is too many to tabulate")));
    }
    Ok(exec::map_fold(
        size,
        SHARD_SIZE,
        |(lo, hi)| {
            let mut counts = vec![0u128; 1 << ell];
            let mut values = Vec::new();
            for index in lo..hi {
                spec.value_table(index, &mut values);
                let mut mask = 0usize;
                for r in 0..ell {
                    if values.iter().all(|row| row[r as usize] != 0) {
                        mask |= 1 << r;
                    }
                }
                counts[mask] += 1;
            }
            counts
        },
        vec![0u128; 1 << ell],
        |mut a, p| {
            for (t, s) in a.iter_mut().zip(p) {
                *t += s;
            }
            a
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational {
        rat(BigInt::from(p), BigInt::from(q))
    }

    fn spec(ell: u64, degrees: &[u32]) -> OmegaSpec {
        OmegaSpec::new(ell, degrees.to_vec()).unwrap()
    }

    #[test]
    fn g_factor_small_cases() {
        assert_eq!(g_factor(3, 1, 3), r(2, 9));
        for ell in [2u64, 3, 5, 7] {
            for d in 1..=4u32 {
                assert_eq!(g_factor(ell, d, 0), Rational::one());
                for s in 0..=d + 1 {
                    let y = r(ell as i64 - 1, ell as i64);
                    assert_eq!(g_factor(ell, d, s), y.pow(s as i32), "ell={ell} d={d} s={s}");
                }
            }
        }
    }

    #[test]
    fn c_ell_single_polynomial_values() {
        for ell in [2u64, 3, 5, 7, 11, 13] {
            for d in 1..=6u32 {
                let c = c_ell(ell, &[d]);
                let expect = if ell <= d as u64 + 1 {
                    rat(BigInt::one(), pow_int(ell, ell as u32))
                } else {
                    rat(BigInt::one(), pow_int(ell, d + 1))
                };
                assert_eq!(c, expect, "ell={ell} d={d}");
            }
        }
    }

    #[test]
    fn one_minus_c_factors_for_large_ell() {
        for (ell, degrees) in [(5u64, vec![1u32, 2]), (7, vec![2, 2]), (11, vec![1, 1, 2])] {
            assert!(ell > degrees.iter().map(|&d| d as u64).sum::<u64>());
            let mut expect = Rational::one();
            for &d in &degrees {
                expect *= Rational::one() - rat(BigInt::one(), pow_int(ell, d + 1));
            }
            assert_eq!(Rational::one() - c_ell(ell, &degrees), expect);
        }
    }

    #[test]
    fn c_ell_matches_brute_force_count() {
        let budget = Budget::default();
        for ell in [2u64, 3, 5] {
            for degrees in [vec![1u32], vec![2], vec![1, 1], vec![1, 2], vec![2, 2]] {
                let sp = spec(ell, &degrees);
                let counts = exhaustive_joint_counts(&sp, &budget).unwrap();
                // pattern 0 = vanishing at every residue
                let size = sp.space_size().unwrap();
                let c = rat(BigInt::from(counts[0]), BigInt::from(size));
                assert_eq!(c, c_ell(ell, &degrees), "ell={ell} {degrees:?}");
            }
        }
    }

    #[test]
    fn gamma_values_and_bounds() {
        assert_eq!(gamma(3, 1), r(7, 6));
        assert_eq!(gamma(2, 1), r(3, 2));
        assert_eq!(gamma(5, 2), r(4, 5) + r(5, 16));
        for ell in (2..=100u64).filter(|&l| is_prime(l)) {
            for n in 1..=4u32 {
                let g = gamma(ell, n);
                assert!(g >= Rational::one(), "gamma({ell},{n}) < 1");
                let slack = rat(
                    BigInt::from(n) * pow_int(2, n + 1),
                    BigInt::from(ell) * BigInt::from(ell - 1),
                );
                assert!(g <= Rational::one() + slack, "gamma({ell},{n}) above bound");
            }
        }
    }

    #[test]
    fn joint_prob_total_mass_and_counts() {
        let budget = Budget::default();
        for (ell, degrees) in [(3u64, vec![1u32, 1]), (2, vec![2]), (3, vec![1]), (5, vec![1])] {
            let sp = spec(ell, &degrees);
            let counts = exhaustive_joint_counts(&sp, &budget).unwrap();
            let size = sp.space_size().unwrap();
            let mut mass = Rational::zero();
            for mask in 0..(1usize << ell) {
                let pattern: Vec<bool> = (0..ell).map(|m| mask >> m & 1 == 1).collect();
                let p = joint_prob(&sp, &pattern).unwrap();
                assert_eq!(
                    p,
                    rat(BigInt::from(counts[mask]), BigInt::from(size)),
                    "ell={ell} {degrees:?} mask={mask:b}"
                );
                mass += p;
            }
            assert_eq!(mass, Rational::one());
            let all_zero = vec![false; ell as usize];
            assert_eq!(joint_prob(&sp, &all_zero).unwrap(), c_ell(ell, &degrees));
        }
    }

    #[test]
    fn joint_prob_rejects_wrong_length() {
        let sp = spec(3, &[1]);
        assert!(joint_prob(&sp, &[true, false]).is_err());
    }

    #[test]
    fn moment_identities_hold_exactly() {
        let budget = Budget::default();
        let report = verify_moments(&spec(3, &[1]), &budget).unwrap();
        assert!(report.all_match());
        assert_eq!(report.checks[1].exhaustive, r(14, 27));
        assert_eq!(report.checks[1].closed_form, r(14, 27));

        let report = verify_moments(&spec(2, &[1]), &budget).unwrap();
        assert_eq!(report.checks[0].exhaustive, r(1, 2));

        let report = verify_moments(&spec(3, &[1, 1]), &budget).unwrap();
        assert!(report.all_match());

        // conditioning point is immaterial
        for m in 0..5 {
            assert!(verify_moments_at(&spec(3, &[1, 2]), m, &budget).unwrap().all_match());
        }
    }

    #[test]
    fn moment_budget_is_enforced() {
        let tiny = Budget { factor_steps: 1000, enum_tuples: 10 };
        // 3^2 = 9 tuples squeak under the budget; 3^4 = 81 do not.
        assert!(verify_moments(&spec(3, &[1]), &tiny).is_ok());
        assert!(matches!(
            verify_moments(&spec(3, &[1, 1]), &tiny),
            Err(Error::BudgetExceeded(_))
        ));
    }

    // Independence of the single-polynomial variables on subsets of size
    // s <= d+1: exhaustive product expectation equals (1 - 1/ell)^s.
    #[test]
    fn single_poly_products_are_independent() {
        for ell in [3u64, 5] {
            for d in 1..=2u32 {
                let e = d as usize + 1;
                let space = (ell as u128).pow(e as u32);
                for mask in 0..(1u32 << ell) {
                    let subset: Vec<u64> = (0..ell).filter(|&m| mask >> m & 1 == 1).collect();
                    if subset.is_empty() || subset.len() > d as usize + 1 {
                        continue;
                    }
                    let mut hits = 0u128;
                    for idx in 0..space {
                        let mut rest = idx;
                        let mut coeffs = vec![0u64; e];
                        for c in coeffs.iter_mut() {
                            *c = (rest % ell as u128) as u64;
                            rest /= ell as u128;
                        }
                        let all_nonzero = subset.iter().all(|&m| {
                            coeffs.iter().rev().fold(0u64, |acc, &c| (acc * m + c) % ell) != 0
                        });
                        if all_nonzero {
                            hits += 1;
                        }
                    }
                    let got = rat(BigInt::from(hits), BigInt::from(space));
                    let expect = r(ell as i64 - 1, ell as i64).pow(subset.len() as i32);
                    assert_eq!(got, expect, "ell={ell} d={d} subset={subset:?}");
                }
            }
        }
    }

    // Pairwise independence of the tuple variables, and the subset-product
    // law E[prod X_m] = prod_k G(d_k, s), checked from the joint counts.
    #[test]
    fn tuple_variables_pairwise_independent_and_subset_law() {
        let budget = Budget::default();
        for degrees in [vec![1u32, 1], vec![1, 2]] {
            let ell = 3u64;
            let sp = spec(ell, &degrees);
            let counts = exhaustive_joint_counts(&sp, &budget).unwrap();
            let size = BigInt::from(sp.space_size().unwrap());
            let subset_mean = |subset_mask: usize| {
                let hits: u128 = (0..counts.len())
                    .filter(|mask| mask & subset_mask == subset_mask)
                    .map(|mask| counts[mask])
                    .sum();
                rat(BigInt::from(hits), size.clone())
            };
            // pairwise: E[X_k X_m] = E[X_k] E[X_m]
            for k in 0..ell as usize {
                for m in 0..k {
                    let lhs = subset_mean(1 << k | 1 << m);
                    let rhs = subset_mean(1 << k) * subset_mean(1 << m);
                    assert_eq!(lhs, rhs, "covariance at ({k},{m})");
                }
            }
            // full subset law
            for mask in 0..(1usize << ell) {
                let s = mask.count_ones();
                let mut expect = Rational::one();
                for &d in &degrees {
                    expect *= g_factor(ell, d, s);
                }
                assert_eq!(subset_mean(mask), expect, "subset law at {mask:b}");
            }
        }
    }

    #[test]
    fn euler_table_is_consistent() {
        let sp = spec(5, &[1, 2]);
        let table = EulerFactorTable::build(&sp);
        assert_eq!(table.g[0][2], g_factor(5, 1, 2));
        assert_eq!(table.g[1][5], g_factor(5, 2, 5));
        assert_eq!(table.c, c_ell(5, &[1, 2]));
        assert_eq!(table.gamma_n, gamma(5, 2));
        assert_eq!(ratio_string(&r(19, 32)), "19/32");
        assert_eq!(ratio_string(&r(3, 1)), "3");
    }
}
