//! Diagonal conics attached to prime triples: local solvability, the
//! symbol-product indicator for global points, admissible residue
//! profiles, an explicit point search by descent, fiber scans over a
//! polynomial family, and the exact counting identity that splits the
//! solvable-fiber count into a main term and character sums.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{
    crt, factorize, hilbert, inverse_mod, is_prime, is_prime_i128, relevant_places, sqrt_mod,
    symbol, Place,
};
use crate::polyff::IntPoly;
use crate::{Budget, Error, Result};

/// Largest admissible group total: the indicator enumerates 2^n subset
/// triples, so desk-scale instances keep n small.
const MAX_GROUP_TOTAL: usize = 20;

/// Coefficient cap for the descent solver: guarantees every intermediate
/// quantity that must be factored stays inside `u64`.
const DESCENT_COEFF_LIMIT: i128 = 4_000_000_000_000_000_000;

/// A diagonal conic `a1 p1 x^2 + a2 p2 y^2 + a3 p3 z^2 = 0` where each
/// `p_i` is a product of `n_i` distinct primes, none dividing `2 a1 a2 a3`,
/// and `a1 a2 a3` is squarefree. The first two groups are nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawConicSpec", into = "RawConicSpec")]
pub struct ConicSpec {
    base: [i64; 3],
    primes: [Vec<u64>; 3],
}

#[derive(Serialize, Deserialize)]
struct RawConicSpec {
    base: [i64; 3],
    primes: [Vec<u64>; 3],
}

impl From<ConicSpec> for RawConicSpec {
    fn from(spec: ConicSpec) -> Self {
        RawConicSpec { base: spec.base, primes: spec.primes }
    }
}

impl TryFrom<RawConicSpec> for ConicSpec {
    type Error = Error;

    fn try_from(raw: RawConicSpec) -> Result<Self> {
        ConicSpec::new(raw.base, raw.primes, &Budget::default())
    }
}

impl ConicSpec {
    pub fn new(base: [i64; 3], primes: [Vec<u64>; 3], budget: &Budget) -> Result<Self> {
        if base.iter().any(|&a| a == 0) {
            return Err(Error::InvalidInput("conic base coefficients must be nonzero".into()));
        }
        let product = base.iter().map(|&a| a as i128).product::<i128>().unsigned_abs();
        let product = u64::try_from(product)
            .map_err(|_| Error::Overflow("conic base product exceeds u64".into()))?;
        if !factorize(product, budget)?.is_squarefree() {
            return Err(Error::InvalidInput(format!(
                "base product {product} is not squarefree"
            )));
        }
        if primes[0].is_empty() || primes[1].is_empty() {
            return Err(Error::InvalidInput(
                "the first two prime groups must be nonempty".into(),
            ));
        }
        let total: usize = primes.iter().map(Vec::len).sum();
        if total > MAX_GROUP_TOTAL {
            return Err(Error::InvalidInput(format!(
                "{total} primes exceed the supported group total {MAX_GROUP_TOTAL}"
            )));
        }
        let mut seen = Vec::with_capacity(total);
        for p in primes.iter().flatten().copied() {
            if !is_prime(p) {
                return Err(Error::InvalidInput(format!("group entry {p} is not prime")));
            }
            if p == 2 || product % p == 0 {
                return Err(Error::Hypothesis(format!(
                    "prime {p} divides twice the base product"
                )));
            }
            if seen.contains(&p) {
                return Err(Error::InvalidInput(format!("prime {p} repeats across groups")));
            }
            seen.push(p);
        }
        Ok(ConicSpec { base, primes })
    }

    pub fn base(&self) -> [i64; 3] {
        self.base
    }

    pub fn primes(&self) -> &[Vec<u64>; 3] {
        &self.primes
    }

    pub fn group_sizes(&self) -> [usize; 3] {
        [self.primes[0].len(), self.primes[1].len(), self.primes[2].len()]
    }

    pub fn group_total(&self) -> u32 {
        self.primes.iter().map(Vec::len).sum::<usize>() as u32
    }

    /// Product of the primes in group `i` (1 for an empty group).
    pub fn group_product(&self, i: usize) -> Result<i128> {
        let mut acc: i128 = 1;
        for &p in &self.primes[i] {
            acc = acc
                .checked_mul(p as i128)
                .ok_or_else(|| Error::Overflow("prime group product".into()))?;
        }
        Ok(acc)
    }

    /// The three conic coefficients `a_i * p_i`.
    pub fn coefficients(&self) -> Result<[i128; 3]> {
        let mut out = [0i128; 3];
        for i in 0..3 {
            out[i] = (self.base[i] as i128)
                .checked_mul(self.group_product(i)?)
                .ok_or_else(|| Error::Overflow("conic coefficient".into()))?;
        }
        Ok(out)
    }

    pub fn has_mixed_signs(&self) -> bool {
        self.base.iter().any(|&a| a > 0) && self.base.iter().any(|&a| a < 0)
    }

    /// Odd primes dividing the base product (the fixed bad places besides 2).
    pub fn base_primes(&self, budget: &Budget) -> Result<Vec<u64>> {
        let product = self.base.iter().map(|&a| a as i128).product::<i128>().unsigned_abs();
        let f = factorize(product as u64, budget)?;
        Ok(f.distinct_primes().filter(|&p| p != 2).collect())
    }
}

/// Whether `a x^2 + b y^2 + c z^2 = 0` has a nontrivial solution over the
/// completion at `place`.
pub fn local_solvable(a: i128, b: i128, c: i128, place: Place) -> Result<bool> {
    if a == 0 || b == 0 || c == 0 {
        return Err(Error::InvalidInput("local solvability needs nonzero coefficients".into()));
    }
    let ac = a.checked_mul(c).ok_or_else(|| Error::Overflow("coefficient product".into()))?;
    let bc = b.checked_mul(c).ok_or_else(|| Error::Overflow("coefficient product".into()))?;
    Ok(hilbert(-ac, -bc, place)? == 1)
}

/// The per-prime quadratic symbols governing solvability: entry `(i, j)`
/// is the symbol of `-a_{i'} a_{i''} p_{i'} p_{i''}` at the j-th prime of
/// group i, where `{i, i', i''} = {1, 2, 3}`.
pub fn symbol_grid(spec: &ConicSpec) -> Result<[Vec<i32>; 3]> {
    let coeffs = spec.coefficients()?;
    let mut grid: [Vec<i32>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for i in 0..3 {
        let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
        let numerator = coeffs[i1]
            .checked_mul(coeffs[i2])
            .map(|v| -v)
            .ok_or_else(|| Error::Overflow("symbol numerator".into()))?;
        for &p in &spec.primes[i] {
            let s = symbol(numerator, p as u128);
            if s == 0 {
                return Err(Error::Internal(format!(
                    "degenerate symbol at {p}: numerator shares a factor"
                )));
            }
            grid[i].push(s);
        }
    }
    Ok(grid)
}

/// Indicator of global solvability as a normalized symbol product: exactly
/// 1 when the conic has a rational point and 0 otherwise.
///
/// Valid under the hypotheses of the underlying criterion: mixed base
/// signs, pairwise distinct group primes coprime to twice the base
/// product (both enforced by `ConicSpec`), and local solvability at every
/// prime dividing twice the base product (checked here; a violation is
/// reported as a hypothesis error, not as 0).
///
/// The value is assembled in exact integer arithmetic two ways — the
/// product `prod (1 + s_ij) / 2^n` and the subset-triple expansion
/// `(2 + sum') / 2^n` — and the two must agree exactly.
pub fn q_indicator(spec: &ConicSpec, budget: &Budget) -> Result<u8> {
    if !spec.has_mixed_signs() {
        return Err(Error::Hypothesis(
            "base coefficients all share a sign: no real point".into(),
        ));
    }
    let coeffs = spec.coefficients()?;
    let mut bad_places = vec![Place::Prime(2)];
    bad_places.extend(spec.base_primes(budget)?.into_iter().map(Place::Prime));
    for place in bad_places {
        if !local_solvable(coeffs[0], coeffs[1], coeffs[2], place)? {
            return Err(Error::Hypothesis(format!(
                "conic has no point over the completion at {place}"
            )));
        }
    }
    let grid = symbol_grid(spec)?;
    let n = spec.group_total();

    // Product form: prod (1 + s_ij) is 2^n when all symbols are +1, else 0.
    let product: i64 = grid.iter().flatten().map(|&s| 1 + s as i64).product();

    // Subset-triple expansion, excluding the empty and the full triple.
    let sizes = spec.group_sizes();
    let full = [(1u32 << sizes[0]) - 1, (1u32 << sizes[1]) - 1, (1u32 << sizes[2]) - 1];
    let mut sum = 0i64;
    for m1 in 0..=full[0] {
        for m2 in 0..=full[1] {
            for m3 in 0..=full[2] {
                let masks = [m1, m2, m3];
                if masks == [0, 0, 0] || masks == full {
                    continue;
                }
                sum += subset_symbol(&grid, masks) as i64;
            }
        }
    }

    // The full-triple term is +1 by the product formula (all other places
    // were just checked to be unobstructed), which is what makes the two
    // forms line up; a mismatch means an arithmetic bug.
    let full_term = subset_symbol(&grid, full);
    if full_term != 1 {
        return Err(Error::Internal(
            "odd number of obstructed places despite clean fixed places".into(),
        ));
    }
    if product != 2 + sum {
        return Err(Error::Internal(format!(
            "indicator forms disagree: product {product} vs expansion {}",
            2 + sum
        )));
    }
    match product {
        0 => Ok(0),
        p if p == 1i64 << n => Ok(1),
        p => Err(Error::Internal(format!("indicator product {p} is not 0 or 2^{n}"))),
    }
}

/// Product of the grid symbols selected by per-group bitmasks.
fn subset_symbol(grid: &[Vec<i32>; 3], masks: [u32; 3]) -> i32 {
    let mut acc = 1i32;
    for i in 0..3 {
        for (j, &s) in grid[i].iter().enumerate() {
            if masks[i] >> j & 1 == 1 {
                acc *= s;
            }
        }
    }
    acc
}

/// Sign `(-1)^((p-1)/2 * (q-1)/2)` relating the two orders of a quadratic
/// symbol flip for odd `p`, `q`.
pub fn reciprocity_sign(p: u64, q: u64) -> i32 {
    assert!(p % 2 == 1 && q % 2 == 1, "reciprocity sign needs odd entries");
    if p % 4 == 3 && q % 4 == 3 {
        -1
    } else {
        1
    }
}

/// Residue classes, one per group slot, such that any choice of distinct
/// primes in these classes yields a conic solvable at every prime
/// dividing twice the base product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NuProfile {
    pub modulus: u64,
    pub residues: [Vec<u64>; 3],
}

/// Builds the admissible residue profile for squarefree mixed-sign base
/// coefficients and group sizes `(n1, n2, n3)` with `n1, n2 >= 1`.
///
/// All slots carry residue 1 except the first slot of each of the first
/// two groups, which absorb the congruence conditions at the odd base
/// primes together with a class mod 8 picked so the symbol at 2 is clean.
pub fn nu_profile(base: [i64; 3], sizes: [usize; 3], budget: &Budget) -> Result<NuProfile> {
    if base.iter().any(|&a| a == 0) {
        return Err(Error::InvalidInput("base coefficients must be nonzero".into()));
    }
    if sizes[0] == 0 || sizes[1] == 0 {
        return Err(Error::InvalidInput("the first two groups must be nonempty".into()));
    }
    let product = base.iter().map(|&a| a as i128).product::<i128>().unsigned_abs();
    let product = u64::try_from(product)
        .map_err(|_| Error::Overflow("base product exceeds u64".into()))?;
    if !factorize(product, budget)?.is_squarefree() {
        return Err(Error::InvalidInput(format!("base product {product} is not squarefree")));
    }
    let modulus = product
        .checked_mul(8)
        .ok_or_else(|| Error::Overflow("profile modulus".into()))?;

    let [a1, a2, a3] = base.map(|a| a as i128);
    // Class mod 8 for the two special slots, chosen by which of the two
    // driving products is even and whether the symbol at 2 already
    // cooperates. `nu` rides with group 1, `mu` with group 2.
    let (mu, nu) = if hilbert(-a1 * a3, -a2 * a3, Place::Prime(2))? == 1 {
        (1, 1)
    } else if (a1 * a3) % 2 == 0 {
        (5, 1)
    } else if (a2 * a3) % 2 == 0 {
        (1, 5)
    } else {
        (-1, 1)
    };

    let odd = |a: i128| {
        let m = a.unsigned_abs() as u128;
        m >> m.trailing_zeros()
    };
    let inv = |v: i128, m: u128| -> Result<i128> {
        Ok(inverse_mod(v, m)
            .ok_or_else(|| Error::Internal("profile congruence is not invertible".into()))?
            as i128)
    };

    let first1 = crt(&[
        (1, odd(a1)),
        (inv(-a1 * a3, odd(a2))?, odd(a2)),
        (inv(-a1 * a2, odd(a3))?, odd(a3)),
        (nu, 8),
    ])?;
    let first2 = crt(&[
        (inv(-a2 * a3, odd(a1))?, odd(a1)),
        (1, odd(a2)),
        (1, odd(a3)),
        (mu, 8),
    ])?;
    // With an even base product the odd-part congruences plus the mod-8
    // class have natural modulus 4|a1*a2*a3|; the residue below is then a
    // representative of the finer class mod 8|a1*a2*a3|.
    debug_assert_eq!(first1.1, first2.1);
    debug_assert_eq!(modulus % (first1.1 as u64), 0);

    let mut residues: [Vec<u64>; 3] =
        [vec![1; sizes[0]], vec![1; sizes[1]], vec![1; sizes[2]]];
    residues[0][0] = first1.0 as u64;
    residues[1][0] = first2.0 as u64;
    for class in residues.iter().flatten() {
        debug_assert_eq!(crate::arith::gcd(*class, modulus), 1);
    }
    Ok(NuProfile { modulus, residues })
}

/// Checks the profile's guarantee on `tuples` concrete instances: fill
/// each slot with primes from its class (scanning upward, all distinct)
/// and confirm the resulting conic is solvable at every prime dividing
/// twice the base product.
pub fn validate_nu_profile(
    base: [i64; 3],
    profile: &NuProfile,
    tuples: usize,
    budget: &Budget,
) -> Result<()> {
    let slots: Vec<(usize, u64)> = profile
        .residues
        .iter()
        .enumerate()
        .flat_map(|(i, group)| group.iter().map(move |&r| (i, r)))
        .collect();
    let per_slot = tuples + slots.len();
    let pools: Vec<Vec<u64>> = slots
        .iter()
        .map(|&(_, class)| primes_in_class(class, profile.modulus, per_slot))
        .collect::<Result<_>>()?;
    for s in 0..tuples {
        let mut primes: [Vec<u64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for (slot, (&(group, _), pool)) in slots.iter().zip(&pools).enumerate() {
            primes[group].push(pool[s + slot]);
        }
        let spec = ConicSpec::new(base, primes, budget)?;
        let coeffs = spec.coefficients()?;
        let mut places = vec![Place::Prime(2)];
        places.extend(spec.base_primes(budget)?.into_iter().map(Place::Prime));
        for place in places {
            if !local_solvable(coeffs[0], coeffs[1], coeffs[2], place)? {
                return Err(Error::Internal(format!(
                    "profile tuple {s} is obstructed at {place}"
                )));
            }
        }
    }
    Ok(())
}

/// First `count` primes congruent to `class` mod `modulus`, ascending.
fn primes_in_class(class: u64, modulus: u64, count: usize) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(count);
    let mut candidate = if class == 1 { 1 + modulus } else { class };
    // Dirichlet guarantees enough primes; the cap only bounds a bad call.
    for _ in 0..50_000_000u64 {
        if out.len() == count {
            return Ok(out);
        }
        if is_prime(candidate) {
            out.push(candidate);
        }
        candidate = candidate
            .checked_add(modulus)
            .ok_or_else(|| Error::Overflow("prime class scan".into()))?;
    }
    Err(Error::BudgetExceeded("prime class scan exhausted".into()))
}

/// A primitive projective point on a diagonal conic, coordinates
/// normalized componentwise nonnegative (valid because the form is
/// diagonal: signs can be flipped independently).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct ProjectivePoint {
    x: i128,
    y: i128,
    z: i128,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    x: String,
    y: String,
    z: String,
}

impl From<ProjectivePoint> for RawPoint {
    fn from(p: ProjectivePoint) -> Self {
        RawPoint { x: p.x.to_string(), y: p.y.to_string(), z: p.z.to_string() }
    }
}

impl TryFrom<RawPoint> for ProjectivePoint {
    type Error = Error;

    fn try_from(raw: RawPoint) -> Result<Self> {
        let parse = |s: &str| {
            s.parse::<i128>()
                .map_err(|_| Error::InvalidInput(format!("bad point coordinate {s:?}")))
        };
        ProjectivePoint::new(parse(&raw.x)?, parse(&raw.y)?, parse(&raw.z)?)
    }
}

impl ProjectivePoint {
    /// Normalizes to the canonical representative: primitive, all
    /// coordinates nonnegative.
    pub fn new(x: i128, y: i128, z: i128) -> Result<Self> {
        if x == 0 && y == 0 && z == 0 {
            return Err(Error::InvalidInput("projective point cannot be zero".into()));
        }
        let g = gcd_i128(gcd_i128(x, y), z);
        Ok(ProjectivePoint { x: (x / g).abs(), y: (y / g).abs(), z: (z / g).abs() })
    }

    pub fn coords(&self) -> (i128, i128, i128) {
        (self.x, self.y, self.z)
    }

    /// Exact check of `a x^2 + b y^2 + c z^2 = 0` in big-integer arithmetic.
    pub fn verifies(&self, a: i128, b: i128, c: i128) -> bool {
        let term = |k: i128, v: i128| BigInt::from(k) * BigInt::from(v) * BigInt::from(v);
        (term(a, self.x) + term(b, self.y) + term(c, self.z)).is_zero()
    }
}

impl std::fmt::Display for ProjectivePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({} : {} : {})", self.x, self.y, self.z)
    }
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Result of a rational-point search: either an explicit verified point
/// or the first place (in the order infinity, 2, ascending odd primes)
/// where the conic is locally obstructed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConicOutcome {
    Point(ProjectivePoint),
    Obstruction(Place),
}

impl ConicOutcome {
    pub fn point(&self) -> Option<&ProjectivePoint> {
        match self {
            ConicOutcome::Point(p) => Some(p),
            ConicOutcome::Obstruction(_) => None,
        }
    }
}

/// Solves `a x^2 + b y^2 + c z^2 = 0` in coprime integers or reports a
/// local obstruction. Complete for nonzero coefficients within the
/// descent range; the returned point is verified and size-reduced.
pub fn solve_conic(a: i128, b: i128, c: i128, budget: &Budget) -> Result<ConicOutcome> {
    if a == 0 || b == 0 || c == 0 {
        return Err(Error::InvalidInput("conic coefficients must be nonzero".into()));
    }
    a.checked_mul(b)
        .and_then(|ab| ab.checked_mul(c))
        .ok_or_else(|| Error::Overflow("conic coefficient product".into()))?;

    // Reduce to squarefree, pairwise coprime coefficients, recording how
    // to map a point of the reduced conic back to the original one.
    let (red, transforms) = reduce_coefficients([a, b, c], budget)?;
    let [ra, rb, rc] = red;

    for place in ordered_places(red, budget)? {
        if !local_solvable(ra, rb, rc, place)? {
            return Ok(ConicOutcome::Obstruction(place));
        }
    }

    let big_a = -ra * rc;
    let big_b = -rb * rc;
    if big_a.abs() > DESCENT_COEFF_LIMIT || big_b.abs() > DESCENT_COEFF_LIMIT {
        return Err(Error::Overflow("conic coefficients exceed the descent range".into()));
    }
    let (x, y, z) = descend(big_a, big_b, budget)?;
    // A x^2 + B y^2 = Z^2 with Z = c z; c is squarefree so it divides Z.
    let (q, r) = num_integer::Integer::div_rem(&z, &BigInt::from(rc));
    if !r.is_zero() {
        return Err(Error::Internal("descent solution not divisible by the z-coefficient".into()));
    }
    let mut point = [x, y, q];
    debug_assert!(verify_big(&point, red));

    for &(coord, factor) in transforms.iter().rev() {
        point[coord] *= BigInt::from(factor);
    }
    if !verify_big(&point, [a, b, c]) {
        return Err(Error::Internal("descent point fails the original equation".into()));
    }
    let point = reduce_point(point, [a, b, c]);
    let as_i128 = |v: &BigInt| {
        v.to_i128().ok_or_else(|| Error::Overflow("point coordinate exceeds i128".into()))
    };
    let point =
        ProjectivePoint::new(as_i128(&point[0])?, as_i128(&point[1])?, as_i128(&point[2])?)?;
    if !point.verifies(a, b, c) {
        return Err(Error::Internal("solver produced a non-point".into()));
    }
    Ok(ConicOutcome::Point(point))
}

/// Squarefree pairwise-coprime reduction. Each transform `(i, f)` means:
/// to map a point of the reduced conic back one step, multiply coordinate
/// `i` by `f`.
fn reduce_coefficients(
    mut coeffs: [i128; 3],
    budget: &Budget,
) -> Result<([i128; 3], Vec<(usize, u64)>)> {
    let mut transforms = Vec::new();
    loop {
        let g = gcd_i128(gcd_i128(coeffs[0], coeffs[1]), coeffs[2]);
        for v in coeffs.iter_mut() {
            *v /= g;
        }
        let mut factorizations = Vec::with_capacity(3);
        for &v in &coeffs {
            let m = u64::try_from(v.unsigned_abs())
                .map_err(|_| Error::Overflow("coefficient exceeds factoring range".into()))?;
            factorizations.push(factorize(m, budget)?);
        }
        // Strip square parts: a s^2 x^2 = a (s x)^2, so the other two
        // coordinates pick up the factor s on the way back.
        if let Some(i) = (0..3).find(|&i| factorizations[i].square_part() > 1) {
            let s = factorizations[i].square_part();
            coeffs[i] /= (s as i128) * (s as i128);
            transforms.push(((i + 1) % 3, s));
            transforms.push(((i + 2) % 3, s));
            continue;
        }
        // Remove a prime shared by exactly two coefficients: divide both,
        // multiply the third; the third coordinate gains the factor p.
        let shared = (0..3).find_map(|i| {
            let j = (i + 1) % 3;
            factorizations[i]
                .distinct_primes()
                .find(|&p| coeffs[j].unsigned_abs() % (p as u128) == 0)
                .map(|p| (i, j, p))
        });
        match shared {
            Some((i, j, p)) => {
                let k = 3 - i - j;
                coeffs[i] /= p as i128;
                coeffs[j] /= p as i128;
                coeffs[k] = coeffs[k]
                    .checked_mul(p as i128)
                    .ok_or_else(|| Error::Overflow("coefficient reduction".into()))?;
                transforms.push((k, p));
            }
            None => return Ok((coeffs, transforms)),
        }
    }
}

/// Places to test, in deterministic order: infinity, 2, then the odd
/// primes of the coefficient product ascending.
fn ordered_places(coeffs: [i128; 3], budget: &Budget) -> Result<Vec<Place>> {
    let product = coeffs.iter().product::<i128>().unsigned_abs();
    let product = u64::try_from(product)
        .map_err(|_| Error::Overflow("coefficient product exceeds u64".into()))?;
    Ok(relevant_places(factorize(product, budget)?.distinct_primes()))
}

/// Lagrange descent for `A x^2 + B y^2 = z^2` with `A`, `B` squarefree
/// (shared factors allowed). Assumes solvability has been established.
fn descend(a: i128, b: i128, budget: &Budget) -> Result<(BigInt, BigInt, BigInt)> {
    if a.abs() > b.abs() {
        let (x, y, z) = descend(b, a, budget)?;
        return Ok((y, x, z));
    }
    if a == 1 {
        return Ok((BigInt::from(1), BigInt::from(0), BigInt::from(1)));
    }
    if b == 1 {
        return Ok((BigInt::from(0), BigInt::from(1), BigInt::from(1)));
    }
    if b.abs() == 1 {
        // a = b = -1 is anisotropic over the reals.
        return Err(Error::Internal("descent reached an unsolvable base form".into()));
    }

    // Square root of A modulo |B| via its prime factors.
    let modulus = b.unsigned_abs() as u64;
    let factors = factorize(modulus, budget)?;
    debug_assert!(factors.is_squarefree());
    let mut congruences = Vec::new();
    for p in factors.distinct_primes() {
        let root = sqrt_mod(a, p)
            .ok_or_else(|| Error::Internal(format!("descent: no square root mod {p}")))?;
        congruences.push((root as i128, p as u128));
    }
    let (t, m) = crt(&congruences)?;
    let t = (t as i128).min(m as i128 - t as i128);
    debug_assert!(2 * t.abs() <= b.abs());

    let w = (t * t - a) / b;
    debug_assert_eq!((t * t - a) % b, 0);
    if w == 0 {
        return Err(Error::Internal("descent hit an exact square coefficient".into()));
    }
    let fw = factorize(w.unsigned_abs() as u64, budget)?;
    let square = fw.square_part() as i128;
    let stripped = w.signum() * fw.squarefree_part() as i128;

    let (x1, y1, z1) = descend(a, stripped, budget)?;
    // (z1^2 - A x1^2)(t^2 - A) = (z1 t + A x1)^2 - A (z1 + t x1)^2, and the
    // left side is (stripped * y1^2)(B * stripped * square^2).
    let (t, a) = (BigInt::from(t), BigInt::from(a));
    let u = &z1 * &t + &a * &x1;
    let v = &z1 + &t * &x1;
    let y = BigInt::from(stripped) * BigInt::from(square) * y1;
    Ok((v, y, u))
}

fn verify_big(point: &[BigInt; 3], coeffs: [i128; 3]) -> bool {
    point
        .iter()
        .zip(coeffs)
        .map(|(v, k)| BigInt::from(k) * v * v)
        .sum::<BigInt>()
        .is_zero()
}

/// Deterministic size reduction: repeatedly reflect across small
/// directions while the key (max coordinate, then the coordinate triple)
/// strictly decreases.
fn reduce_point(point: [BigInt; 3], coeffs: [i128; 3]) -> [BigInt; 3] {
    let normalize = |mut p: [BigInt; 3]| {
        let g = p.iter().fold(BigInt::zero(), |acc, v| num_integer::gcd(acc, v.abs()));
        if !g.is_zero() {
            for v in p.iter_mut() {
                *v = &*v / &g;
                *v = v.abs();
            }
        }
        p
    };
    let key = |p: &[BigInt; 3]| {
        let m = p.iter().max().cloned().unwrap_or_default();
        (m, p[0].clone(), p[1].clone(), p[2].clone())
    };
    let ks = coeffs.map(BigInt::from);
    let mut current = normalize(point);
    for _ in 0..96 {
        let mut best: Option<([BigInt; 3], _)> = None;
        let current_key = key(&current);
        for dx in -2i64..=2 {
            for dy in -2i64..=2 {
                for dz in -2i64..=2 {
                    if (dx, dy, dz) == (0, 0, 0) {
                        continue;
                    }
                    let dir = [BigInt::from(dx), BigInt::from(dy), BigInt::from(dz)];
                    let s: BigInt = dir.iter().zip(&ks).map(|(d, k)| k * d * d).sum();
                    if s.is_zero() {
                        continue;
                    }
                    let t: BigInt =
                        dir.iter().zip(&ks).zip(&current).map(|((d, k), p)| k * d * p).sum();
                    let reflected = [
                        &s * &current[0] - BigInt::from(2) * &t * &dir[0],
                        &s * &current[1] - BigInt::from(2) * &t * &dir[1],
                        &s * &current[2] - BigInt::from(2) * &t * &dir[2],
                    ];
                    if reflected.iter().all(BigInt::is_zero) {
                        continue;
                    }
                    let candidate = normalize(reflected);
                    let candidate_key = key(&candidate);
                    if candidate_key < current_key
                        && best.as_ref().is_none_or(|(_, k)| candidate_key < *k)
                    {
                        best = Some((candidate, candidate_key));
                    }
                }
            }
        }
        match best {
            Some((next, _)) => current = next,
            None => break,
        }
    }
    current
}

/// Why a fiber of the bundle scan was passed over or accepted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "detail")]
pub enum AttemptStatus {
    /// Some polynomial value at this input is not prime.
    CompositeValue,
    /// Two polynomial values coincide (the fiber is excluded exactly).
    RepeatedValue,
    /// A value divides twice the base product, voiding the criterion.
    BasePrimeCollision,
    /// The conic fails local solvability at a fixed place.
    LocalObstruction(String),
    /// Every hypothesis holds but the symbol indicator vanishes.
    NoRationalPoint,
    /// A rational point was found.
    Solved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleAttempt {
    pub m: u64,
    pub status: AttemptStatus,
}

/// A solved fiber: the input, the conic coefficients, and the point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolvedFiber {
    pub m: u64,
    pub coefficients: [String; 3],
    pub point: ProjectivePoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleReport {
    pub base: [i64; 3],
    pub anchor: u64,
    pub modulus: u64,
    pub m_bound: u64,
    pub seed: u64,
    pub attempts: Vec<BundleAttempt>,
    pub fiber: Option<SolvedFiber>,
    pub probable_prime_used: bool,
}

/// Scans inputs `m = anchor (mod modulus)` up to `m_bound` for a fiber of
/// the conic bundle with all polynomial values prime and a rational
/// point, recording the outcome of every attempt. The scan is ascending,
/// so a returned fiber is the smallest solvable one.
pub fn bundle_search(
    base: [i64; 3],
    groups: &[Vec<IntPoly>; 3],
    anchor: u64,
    modulus: u64,
    m_bound: u64,
    seed: u64,
    budget: &Budget,
) -> Result<BundleReport> {
    if modulus == 0 {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    if groups[0].is_empty() || groups[1].is_empty() {
        return Err(Error::InvalidInput("the first two polynomial groups must be nonempty".into()));
    }
    if !(base.iter().any(|&a| a > 0) && base.iter().any(|&a| a < 0)) {
        return Err(Error::Hypothesis(
            "base coefficients all share a sign: no fiber has a real point".into(),
        ));
    }
    let mut report = BundleReport {
        base,
        anchor: anchor % modulus,
        modulus,
        m_bound,
        seed,
        attempts: Vec::new(),
        fiber: None,
        probable_prime_used: false,
    };
    let mut m = first_in_progression(anchor, modulus);
    while m <= m_bound {
        let status = attempt_fiber(base, groups, m, budget, &mut report)?;
        let solved = status == AttemptStatus::Solved;
        report.attempts.push(BundleAttempt { m, status });
        if solved {
            break;
        }
        m += modulus;
    }
    Ok(report)
}

fn first_in_progression(anchor: u64, modulus: u64) -> u64 {
    let r = anchor % modulus;
    if r == 0 {
        modulus
    } else {
        r
    }
}

fn attempt_fiber(
    base: [i64; 3],
    groups: &[Vec<IntPoly>; 3],
    m: u64,
    budget: &Budget,
    report: &mut BundleReport,
) -> Result<AttemptStatus> {
    let m_signed = i64::try_from(m).map_err(|_| Error::Overflow("scan input".into()))?;
    let mut primes: [Vec<u64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut all = Vec::new();
    for (i, group) in groups.iter().enumerate() {
        for poly in group {
            let value = poly.eval(m_signed)?;
            let (prime, probable) = is_prime_i128(value);
            if !prime {
                return Ok(AttemptStatus::CompositeValue);
            }
            report.probable_prime_used |= probable;
            let value = u64::try_from(value)
                .map_err(|_| Error::Overflow(format!("prime value at m = {m} exceeds u64")))?;
            primes[i].push(value);
            all.push(value);
        }
    }
    all.sort_unstable();
    if all.windows(2).any(|w| w[0] == w[1]) {
        return Ok(AttemptStatus::RepeatedValue);
    }
    let spec = match ConicSpec::new(base, primes, budget) {
        Ok(spec) => spec,
        Err(Error::Hypothesis(_)) => return Ok(AttemptStatus::BasePrimeCollision),
        Err(e) => return Err(e),
    };
    match q_indicator(&spec, budget) {
        Ok(0) => Ok(AttemptStatus::NoRationalPoint),
        Ok(_) => {
            let [a, b, c] = spec.coefficients()?;
            match solve_conic(a, b, c, budget)? {
                ConicOutcome::Point(point) => {
                    report.fiber = Some(SolvedFiber {
                        m,
                        coefficients: [a.to_string(), b.to_string(), c.to_string()],
                        point,
                    });
                    Ok(AttemptStatus::Solved)
                }
                ConicOutcome::Obstruction(place) => Err(Error::Internal(format!(
                    "indicator 1 but obstruction at {place} for m = {m}"
                ))),
            }
        }
        Err(Error::Hypothesis(detail)) => Ok(AttemptStatus::LocalObstruction(detail)),
        Err(e) => Err(e),
    }
}

/// One character sum in the identity decomposition, keyed by the subset
/// triple (1-based indices into each group) that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterSum {
    pub subsets: [Vec<u8>; 3],
    pub value: f64,
}

/// The exact decomposition of the solvable-fiber count over a scan range:
/// `C = theta / 2^(n-1) + (sum of character sums) / 2^n`, checked both as
/// an integer identity fiber by fiber and as the aggregated floats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub x: f64,
    pub group_total: u32,
    pub members: Vec<u64>,
    pub excluded: Vec<(u64, String)>,
    pub solvable_weight: f64,
    pub theta: f64,
    pub character_sums: Vec<CharacterSum>,
    pub reconstructed: f64,
    pub max_residual: f64,
    pub structural_checks: u64,
    pub identity_holds: bool,
    pub probable_prime_used: bool,
}

/// Verifies the counting identity on all fibers up to `x` in the given
/// progression: weights each prime fiber by the product of logs of its
/// values, splits the solvable count into the main term plus character
/// sums, and checks fiber by fiber that the signed symbol expansion
/// reproduces the solvability indicator exactly in integers.
pub fn identity_check(
    base: [i64; 3],
    groups: &[Vec<IntPoly>; 3],
    x: f64,
    anchor: u64,
    modulus: u64,
    budget: &Budget,
) -> Result<IdentityReport> {
    if modulus == 0 {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    if !x.is_finite() || x < 1.0 {
        return Err(Error::InvalidInput("identity scan needs x >= 1".into()));
    }
    if groups[0].is_empty() || groups[1].is_empty() {
        return Err(Error::InvalidInput("the first two polynomial groups must be nonempty".into()));
    }
    let sizes =
        [groups[0].len() as u32, groups[1].len() as u32, groups[2].len() as u32];
    let n: u32 = sizes.iter().sum();
    if n as usize > MAX_GROUP_TOTAL {
        return Err(Error::InvalidInput("too many polynomials for the identity scan".into()));
    }
    let full = [(1u32 << sizes[0]) - 1, (1u32 << sizes[1]) - 1, (1u32 << sizes[2]) - 1];
    let triples: Vec<[u32; 3]> = mask_triples(full);

    let mut report = IdentityReport {
        x,
        group_total: n,
        members: Vec::new(),
        excluded: Vec::new(),
        solvable_weight: 0.0,
        theta: 0.0,
        character_sums: triples
            .iter()
            .map(|&masks| CharacterSum { subsets: subset_labels(masks, sizes), value: 0.0 })
            .collect(),
        reconstructed: 0.0,
        max_residual: 0.0,
        structural_checks: 0,
        identity_holds: true,
        probable_prime_used: false,
    };

    let mut m = first_in_progression(anchor, modulus);
    while (m as f64) <= x {
        scan_identity_fiber(base, groups, m, &triples, budget, &mut report)?;
        m += modulus;
    }

    let weight = 0.5f64.powi(n as i32);
    report.reconstructed = 2.0 * weight * report.theta
        + weight * report.character_sums.iter().map(|t| t.value).sum::<f64>();
    report.max_residual = (report.solvable_weight - report.reconstructed).abs();
    Ok(report)
}

/// All subset triples except the empty and the full one, in mask order.
fn mask_triples(full: [u32; 3]) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for m1 in 0..=full[0] {
        for m2 in 0..=full[1] {
            for m3 in 0..=full[2] {
                let masks = [m1, m2, m3];
                if masks != [0, 0, 0] && masks != full {
                    out.push(masks);
                }
            }
        }
    }
    out
}

fn subset_labels(masks: [u32; 3], sizes: [u32; 3]) -> [Vec<u8>; 3] {
    let mut out: [Vec<u8>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for i in 0..3 {
        for j in 0..sizes[i] {
            if masks[i] >> j & 1 == 1 {
                out[i].push(j as u8 + 1);
            }
        }
    }
    out
}

fn scan_identity_fiber(
    base: [i64; 3],
    groups: &[Vec<IntPoly>; 3],
    m: u64,
    triples: &[[u32; 3]],
    budget: &Budget,
    report: &mut IdentityReport,
) -> Result<()> {
    let m_signed = i64::try_from(m).map_err(|_| Error::Overflow("scan input".into()))?;
    let mut primes: [Vec<u64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut all = Vec::new();
    for (i, group) in groups.iter().enumerate() {
        for poly in group {
            let value = poly.eval(m_signed)?;
            let (prime, probable) = is_prime_i128(value);
            if !prime {
                return Ok(());
            }
            report.probable_prime_used |= probable;
            let value = u64::try_from(value)
                .map_err(|_| Error::Overflow(format!("prime value at m = {m} exceeds u64")))?;
            primes[i].push(value);
            all.push(value);
        }
    }
    let mut sorted = all.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        report.excluded.push((m, "repeated prime value".into()));
        return Ok(());
    }
    let spec = match ConicSpec::new(base, primes, budget) {
        Ok(spec) => spec,
        Err(Error::Hypothesis(detail)) => {
            report.excluded.push((m, detail));
            return Ok(());
        }
        Err(e) => return Err(e),
    };

    let weight: f64 = all.iter().map(|&v| (v as f64).ln()).product();
    let coeffs = spec.coefficients()?;
    // The expansion identity presumes the fiber conic is solvable at the
    // fixed places (infinity, 2, and the primes dividing the base product);
    // the subset symbols only probe the group primes. A fiber that fails a
    // fixed place sits outside those hypotheses, so it is excluded rather
    // than counted as a violation.
    let mut fixed_places = vec![Place::Infinity, Place::Prime(2)];
    fixed_places.extend(spec.base_primes(budget)?.into_iter().map(Place::Prime));
    for place in fixed_places {
        if !local_solvable(coeffs[0], coeffs[1], coeffs[2], place)? {
            report
                .excluded
                .push((m, format!("local obstruction at fixed place {place}")));
            return Ok(());
        }
    }
    let mut solvable = true;
    for place in ordered_places(coeffs, budget)? {
        if !local_solvable(coeffs[0], coeffs[1], coeffs[2], place)? {
            solvable = false;
            break;
        }
    }

    let grid = symbol_grid(&spec)?;
    let mut expansion = 2i64;
    let mut contributions = Vec::with_capacity(triples.len());
    for &masks in triples {
        let s = subset_symbol(&grid, masks);
        expansion += s as i64;
        contributions.push(s as f64 * weight);
    }
    let expected = if solvable { 1i64 << report.group_total } else { 0 };
    if expansion != expected {
        report.identity_holds = false;
        report.excluded.push((m, format!(
            "symbol expansion {expansion} disagrees with solvability {expected}"
        )));
        return Ok(());
    }
    for (slot, contribution) in contributions.into_iter().enumerate() {
        report.character_sums[slot].value += contribution;
    }
    report.structural_checks += 1;
    report.members.push(m);
    report.theta += weight;
    if solvable {
        report.solvable_weight += weight;
    }
    Ok(())
}
