//! Integer polynomials, tuples, local root counts, and the
//! congruence-constrained coefficient boxes the experiments sweep.
//!
//! A box fixes degrees `d_1..d_n`, a height bound `H`, a modulus `M`, and
//! residue polynomials `Q_i`; its members are the tuples `(P_1,...,P_n)`
//! with `deg P_i = d_i`, every coefficient in `[-H, H]` (leading
//! coefficient in `[1, H]`), and `P_i = Q_i (mod M)` coefficientwise.
//! Members are indexed lexicographically by the concatenated coefficient
//! vector, which gives sampling and enumeration a deterministic order and
//! lets sweeps split into contiguous index ranges.

use num_bigint::BigInt;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{factorize, gcd, is_prime};
use crate::{Budget, Error, Result};

/// Integer polynomial, coefficients stored constant term first.
/// The leading coefficient is nonzero (nonzero constants are allowed;
/// the zero polynomial is not representable).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntPoly {
    coeffs: Vec<i64>,
}

impl IntPoly {
    pub fn new(coeffs: Vec<i64>) -> Result<Self> {
        match coeffs.last() {
            None => Err(Error::InvalidInput("polynomial needs at least one coefficient".into())),
            Some(0) => {
                Err(Error::InvalidInput("leading coefficient must be nonzero".into()))
            }
            Some(_) => Ok(IntPoly { coeffs }),
        }
    }

    /// The monomial t.
    pub fn t() -> Self {
        IntPoly { coeffs: vec![0, 1] }
    }

    /// t + c.
    pub fn t_plus(c: i64) -> Self {
        IntPoly { coeffs: vec![c, 1] }
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> i64 {
        *self.coeffs.last().unwrap()
    }

    /// Height: the largest coefficient in absolute value.
    pub fn height(&self) -> u64 {
        self.coeffs.iter().map(|c| c.unsigned_abs()).max().unwrap()
    }

    /// Gcd of all coefficients (positive).
    pub fn content(&self) -> u64 {
        self.coeffs.iter().fold(0u64, |g, &c| gcd(g, c.unsigned_abs()))
    }

    /// Exact evaluation by Horner's rule in 128-bit arithmetic.
    pub fn eval(&self, m: i64) -> Result<i128> {
        let mut acc: i128 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = acc
                .checked_mul(m as i128)
                .and_then(|v| v.checked_add(c as i128))
                .ok_or_else(|| Error::Overflow(format!("eval of {self} at {m}")))?;
        }
        Ok(acc)
    }

    /// Exact evaluation with no range limit.
    pub fn eval_big(&self, m: i64) -> BigInt {
        let mut acc = BigInt::from(0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * m + c;
        }
        acc
    }

    /// Evaluation of the mod-`modulus` reduction at `m`.
    pub fn eval_mod(&self, m: u64, modulus: u64) -> u64 {
        debug_assert!(modulus >= 1);
        let m = m % modulus;
        let mut acc: u64 = 0;
        for &c in self.coeffs.iter().rev() {
            let c = c.rem_euclid(modulus as i64) as u64;
            acc = ((acc as u128 * m as u128 + c as u128) % modulus as u128) as u64;
        }
        acc
    }
}

impl std::fmt::Display for IntPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (j, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 && self.coeffs.len() > 1 {
                continue;
            }
            let sign = if first {
                if c < 0 {
                    "-"
                } else {
                    ""
                }
            } else if c < 0 {
                " - "
            } else {
                " + "
            };
            let a = c.unsigned_abs();
            match j {
                0 => write!(f, "{sign}{a}")?,
                _ => {
                    if a == 1 {
                        write!(f, "{sign}t")?;
                    } else {
                        write!(f, "{sign}{a}t")?;
                    }
                    if j > 1 {
                        write!(f, "^{j}")?;
                    }
                }
            }
            first = false;
        }
        Ok(())
    }
}

// Coefficient strings, constant term first: t^2 + 1 <-> ["1", "0", "1"].
impl Serialize for IntPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.coeffs.iter().map(|c| c.to_string()))
    }
}

impl<'de> Deserialize<'de> for IntPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        let coeffs = raw
            .iter()
            .map(|s| s.parse::<i64>().map_err(|e| D::Error::custom(format!("coefficient {s}: {e}"))))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        IntPoly::new(coeffs).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// An ordered tuple of integer polynomials.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolyTuple {
    polys: Vec<IntPoly>,
}

impl PolyTuple {
    pub fn new(polys: Vec<IntPoly>) -> Result<Self> {
        if polys.is_empty() {
            return Err(Error::InvalidInput("empty polynomial tuple".into()));
        }
        Ok(PolyTuple { polys })
    }

    pub fn single(poly: IntPoly) -> Self {
        PolyTuple { polys: vec![poly] }
    }

    pub fn polys(&self) -> &[IntPoly] {
        &self.polys
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Height of the tuple: max height of its entries.
    pub fn height(&self) -> u64 {
        self.polys.iter().map(IntPoly::height).max().unwrap()
    }

    /// Sum of the degrees.
    pub fn total_degree(&self) -> usize {
        self.polys.iter().map(IntPoly::degree).sum()
    }

    pub fn eval_all(&self, m: i64) -> Result<Vec<i128>> {
        self.polys.iter().map(|p| p.eval(m)).collect()
    }
}

impl std::fmt::Display for PolyTuple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.polys.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// Number of roots of the product `P_1 ... P_n` modulo the prime `ell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LocalRootCount {
    pub ell: u64,
    pub count: u64,
}

/// Count the t in F_ell where some entry of the tuple vanishes.
pub fn z_count(tuple: &PolyTuple, ell: u64) -> LocalRootCount {
    debug_assert!(is_prime(ell));
    let count = (0..ell)
        .filter(|&t| tuple.polys.iter().any(|p| p.eval_mod(t, ell) == 0))
        .count() as u64;
    LocalRootCount { ell, count }
}

/// Outcome of the fixed-divisor screen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Suitability {
    /// Positive leading coefficients and no prime divides every value.
    Ok,
    /// Entry `index` has a nonpositive leading coefficient.
    NonPositiveLeading { index: usize },
    /// `ell` divides the value product at every integer.
    FixedPrime { ell: u64 },
}

impl Suitability {
    pub fn is_ok(self) -> bool {
        matches!(self, Suitability::Ok)
    }

    pub fn witness(self) -> Option<u64> {
        match self {
            Suitability::FixedPrime { ell } => Some(ell),
            _ => None,
        }
    }
}

/// Screen a single polynomial: positive leading coefficient and no prime
/// `ell` with a full set of roots mod `ell`.
///
/// The check is finite: primes up to the degree are tested by root
/// counting, and a prime above the degree can only divide every value by
/// dividing every coefficient, so the content covers the rest.
pub fn is_bouniakowsky(poly: &IntPoly, budget: &Budget) -> Result<Suitability> {
    let tuple = PolyTuple::single(poly.clone());
    is_schinzel(&tuple, budget)
}

/// Screen a tuple via its value product (no irreducibility involved).
pub fn is_schinzel(tuple: &PolyTuple, budget: &Budget) -> Result<Suitability> {
    for (index, p) in tuple.polys().iter().enumerate() {
        if p.leading() <= 0 {
            return Ok(Suitability::NonPositiveLeading { index });
        }
    }
    let d = tuple.total_degree() as u64;
    let mut ell = 2u64;
    while ell <= d {
        if is_prime(ell) && z_count(tuple, ell).count == ell {
            return Ok(Suitability::FixedPrime { ell });
        }
        ell += 1;
    }
    // Primes above the total degree must divide some entry's content.
    let mut witness: Option<u64> = None;
    for p in tuple.polys() {
        let mut content = p.content();
        debug_assert!(content > 0);
        for small in 2..=d.max(1) {
            while content % small == 0 {
                content /= small;
            }
        }
        if content > 1 {
            let q = factorize(content, budget)?
                .distinct_primes()
                .next()
                .expect("content > 1 has a prime factor");
            witness = Some(witness.map_or(q, |w| w.min(q)));
        }
    }
    Ok(match witness {
        Some(ell) => Suitability::FixedPrime { ell },
        None => Suitability::Ok,
    })
}

/// One admissible arithmetic progression of coefficient values.
#[derive(Debug, Clone, Copy)]
struct Slot {
    first: i64,
    step: i64,
    count: u128,
}

impl Slot {
    fn new(lo: i64, hi: i64, residue: i64, modulus: i64) -> Slot {
        debug_assert!(modulus >= 1);
        let offset = (residue - lo).rem_euclid(modulus);
        let first = lo + offset;
        let count =
            if first > hi { 0 } else { ((hi - first) / modulus) as u128 + 1 };
        Slot { first, step: modulus, count }
    }

    fn value(&self, digit: u128) -> i64 {
        debug_assert!(digit < self.count);
        self.first + self.step * digit as i64
    }
}

/// A congruence-constrained coefficient box.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct CoeffBox {
    degrees: Vec<u32>,
    height: i64,
    modulus: i64,
    residues: Vec<Vec<i64>>,
    anchor: i64,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    degrees: Vec<u32>,
    height: i64,
    modulus: i64,
    residues: Vec<Vec<i64>>,
    anchor: i64,
}

impl From<CoeffBox> for RawBox {
    fn from(b: CoeffBox) -> RawBox {
        RawBox {
            degrees: b.degrees,
            height: b.height,
            modulus: b.modulus,
            residues: b.residues,
            anchor: b.anchor,
        }
    }
}

impl TryFrom<RawBox> for CoeffBox {
    type Error = Error;
    fn try_from(r: RawBox) -> Result<CoeffBox> {
        CoeffBox::new(r.degrees, r.height, r.modulus, r.residues, r.anchor)
    }
}

impl CoeffBox {
    /// Build a box; `residues[i]` lists the required coefficient classes
    /// of `P_i` (length `degrees[i] + 1`, constant term first).
    pub fn new(
        degrees: Vec<u32>,
        height: i64,
        modulus: i64,
        residues: Vec<Vec<i64>>,
        anchor: i64,
    ) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::InvalidInput("box needs at least one polynomial".into()));
        }
        if degrees.iter().any(|&d| d == 0) {
            return Err(Error::InvalidInput("degrees must be positive".into()));
        }
        if height < 1 {
            return Err(Error::InvalidInput("height must be at least 1".into()));
        }
        if modulus < 1 {
            return Err(Error::InvalidInput("modulus must be at least 1".into()));
        }
        if residues.len() != degrees.len() {
            return Err(Error::InvalidInput("one residue list per polynomial required".into()));
        }
        for (i, r) in residues.iter().enumerate() {
            if r.len() != degrees[i] as usize + 1 {
                return Err(Error::InvalidInput(format!(
                    "residue list {i} must have degree+1 = {} entries",
                    degrees[i] + 1
                )));
            }
        }
        let residues =
            residues.iter().map(|r| r.iter().map(|c| c.rem_euclid(modulus)).collect()).collect();
        Ok(CoeffBox { degrees, height, modulus, residues, anchor: anchor.rem_euclid(modulus) })
    }

    /// Box with no congruence constraint (M = 1, anchor 0).
    pub fn unconstrained(degrees: Vec<u32>, height: i64) -> Result<Self> {
        let residues = degrees.iter().map(|&d| vec![0i64; d as usize + 1]).collect();
        CoeffBox::new(degrees, height, 1, residues, 0)
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }
    pub fn height(&self) -> i64 {
        self.height
    }
    pub fn modulus(&self) -> i64 {
        self.modulus
    }
    pub fn anchor(&self) -> i64 {
        self.anchor
    }
    pub fn tuple_len(&self) -> usize {
        self.degrees.len()
    }
    pub fn total_degree(&self) -> u64 {
        self.degrees.iter().map(|&d| d as u64).sum()
    }

    /// Precompute the slot layout used by indexing and sampling.
    pub fn layout(&self) -> BoxLayout {
        let mut slots = Vec::new();
        let mut poly_spans = Vec::new();
        for (i, &d) in self.degrees.iter().enumerate() {
            let start = slots.len();
            for j in 0..=d as usize {
                let lo = if j == d as usize { 1 } else { -self.height };
                slots.push(Slot::new(lo, self.height, self.residues[i][j], self.modulus));
            }
            poly_spans.push((start, slots.len()));
        }
        // Lexicographic order: the first slot varies slowest.
        let mut weights = vec![1u128; slots.len()];
        let mut total: Option<u128> = Some(1);
        for k in (0..slots.len()).rev() {
            if k + 1 < slots.len() {
                weights[k] = match weights[k + 1].checked_mul(slots[k + 1].count) {
                    Some(w) => w,
                    None => 0, // unusable once total overflows; see `total`
                };
            }
            total = total.and_then(|t| t.checked_mul(slots[k].count));
        }
        BoxLayout { slots, poly_spans, weights, total }
    }

    /// Does the tuple lie in this box?
    pub fn contains(&self, tuple: &PolyTuple) -> bool {
        if tuple.len() != self.degrees.len() {
            return false;
        }
        for (i, p) in tuple.polys().iter().enumerate() {
            if p.degree() != self.degrees[i] as usize || p.leading() < 1 {
                return false;
            }
            for (j, &c) in p.coeffs().iter().enumerate() {
                if c.abs() > self.height || c.rem_euclid(self.modulus) != self.residues[i][j] {
                    return false;
                }
            }
        }
        true
    }
}

/// Indexing data for one box: admissible progressions per coefficient.
pub struct BoxLayout {
    slots: Vec<Slot>,
    poly_spans: Vec<(usize, usize)>,
    weights: Vec<u128>,
    total: Option<u128>,
}

impl BoxLayout {
    /// Number of members; None if it exceeds the 128-bit index space.
    pub fn total(&self) -> Option<u128> {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == Some(0)
    }

    /// Member at `index` in lexicographic coefficient order.
    pub fn decode(&self, index: u128) -> PolyTuple {
        debug_assert!(self.total.map_or(false, |t| index < t));
        let mut polys = Vec::with_capacity(self.poly_spans.len());
        let mut rest = index;
        let mut coeff_buf: Vec<i64> = Vec::new();
        for &(start, end) in &self.poly_spans {
            coeff_buf.clear();
            for k in start..end {
                let digit = if self.weights[k] == 0 { 0 } else { rest / self.weights[k] };
                rest %= self.weights[k].max(1);
                coeff_buf.push(self.slots[k].value(digit));
            }
            polys.push(IntPoly { coeffs: coeff_buf.clone() });
        }
        PolyTuple { polys }
    }

    /// Uniform draw; None when the box is empty.
    pub fn sample(&self, rng: &mut impl rand::Rng) -> Option<PolyTuple> {
        if self.slots.iter().any(|s| s.count == 0) {
            return None;
        }
        let mut polys = Vec::with_capacity(self.poly_spans.len());
        for &(start, end) in &self.poly_spans {
            let coeffs: Vec<i64> = (start..end)
                .map(|k| {
                    let digit = rng.gen_range(0..self.slots[k].count);
                    self.slots[k].value(digit)
                })
                .collect();
            polys.push(IntPoly { coeffs });
        }
        Some(PolyTuple { polys })
    }
}

/// Materialize every member (small boxes only; bounded by the enumeration
/// budget).
pub fn enumerate_box(cbox: &CoeffBox, budget: &Budget) -> Result<Vec<PolyTuple>> {
    let layout = cbox.layout();
    let total = layout
        .total()
        .ok_or_else(|| Error::Overflow("box too large to index".into()))?;
    if total > budget.enum_tuples {
        return Err(Error::BudgetExceeded(format!(
            "box has {total} members, budget allows {}",
            budget.enum_tuples
        )));
    }
    Ok((0..total).map(|i| layout.decode(i)).collect())
}

/// Draw `count` members with one RNG stream per draw (reordering or
/// parallelizing the draws cannot change them).
pub fn sample_box(cbox: &CoeffBox, count: u64, seed: u64) -> Result<Vec<PolyTuple>> {
    let layout = cbox.layout();
    if layout.is_empty() || layout.slots.iter().any(|s| s.count == 0) {
        return Err(Error::InvalidInput("cannot sample from an empty box".into()));
    }
    Ok((0..count)
        .map(|i| {
            let mut rng = crate::exec::stream_rng(seed, i);
            layout.sample(&mut rng).expect("non-empty box samples")
        })
        .collect())
}
