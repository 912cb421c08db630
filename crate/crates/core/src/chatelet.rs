//! The x^2 + a y^2 = f(t) pipeline: scan a progression for representable
//! polynomial values, enumerate the exact mod-4 admissibility constant,
//! combine it with the odd-prime product into a solvability lower bound,
//! and measure the solvable fraction empirically.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::arith::{cornacchia, is_prime, is_prime_i128, two_squares, PrimeSieve};
use crate::exec::{self, stream_rng, SHARD_SIZE};
use crate::model::{ratio_string, Rational};
use crate::polyff::{CoeffBox, IntPoly};
use crate::series::{self, ratio_serde};
use crate::{Budget, Error, Result};

/// Values of `a` for which a prime passing the representation criterion
/// is always representable by x^2 + a y^2 (one class per genus).
const GUARANTEED_NORMS: [u64; 5] = [1, 2, 3, 4, 7];

/// Largest degree for the exact mod-4 enumeration (4^(d+1) vectors).
const MAX_EXACT_DEGREE: u32 = 12;

/// Cap on the per-input scan log so huge scans stay bounded in memory.
const LOG_CAP: usize = 10_000;

/// Trial primes for the screened two-squares test.
const SCREEN_BOUND: u64 = 1_000;

/// A norm-representation problem: find m = anchor (mod modulus) with
/// `f(m) = x^2 + a y^2` solvable in integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawChateletSpec", into = "RawChateletSpec")]
pub struct ChateletSpec {
    a: u64,
    f: IntPoly,
    anchor: u64,
    modulus: u64,
}

#[derive(Serialize, Deserialize)]
struct RawChateletSpec {
    a: u64,
    f: IntPoly,
    anchor: u64,
    modulus: u64,
}

impl From<ChateletSpec> for RawChateletSpec {
    fn from(spec: ChateletSpec) -> Self {
        RawChateletSpec { a: spec.a, f: spec.f, anchor: spec.anchor, modulus: spec.modulus }
    }
}

impl TryFrom<RawChateletSpec> for ChateletSpec {
    type Error = Error;

    fn try_from(raw: RawChateletSpec) -> Result<Self> {
        ChateletSpec::new(raw.a, raw.f, raw.anchor, raw.modulus)
    }
}

impl ChateletSpec {
    pub fn new(a: u64, f: IntPoly, anchor: u64, modulus: u64) -> Result<Self> {
        if a == 0 {
            return Err(Error::InvalidInput("norm coefficient a must be positive".into()));
        }
        if f.leading() <= 0 {
            return Err(Error::InvalidInput(
                "the polynomial must have a positive leading coefficient".into(),
            ));
        }
        if modulus == 0 {
            return Err(Error::InvalidInput("modulus must be positive".into()));
        }
        Ok(ChateletSpec { a, f, anchor: anchor % modulus, modulus })
    }

    pub fn norm_coefficient(&self) -> u64 {
        self.a
    }

    pub fn poly(&self) -> &IntPoly {
        &self.f
    }

    pub fn anchor(&self) -> u64 {
        self.anchor
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Whether success of the prime fast path is guaranteed by the
    /// class-number-one list, rather than best-effort.
    pub fn guaranteed(&self) -> bool {
        GUARANTEED_NORMS.contains(&self.a)
    }
}

/// A verified solution: `x^2 + a y^2 = f(m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChateletSolution {
    pub m: u64,
    pub x: u64,
    pub y: u64,
}

/// Why an input was passed over during the scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    /// f(m) < 0 cannot be a value of the norm form.
    NegativeValue,
    /// f(m) mod 4 is outside the residues the form attains.
    CongruenceFiltered,
    /// The full criterion decided f(m) is not representable.
    NotRepresentable,
    /// f(m) is composite and the full path only covers a = 1.
    CompositeBestEffort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub m: u64,
    pub reason: SkipReason,
}

/// Outcome of a representation scan, with the per-input log (capped) and
/// summary counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChateletReport {
    pub spec: ChateletSpec,
    pub m_bound: u64,
    pub solution: Option<ChateletSolution>,
    /// True when the solution came from the prime-value fast path.
    pub fast_path: bool,
    /// False means the scan was best-effort: a is outside the
    /// class-number-one list, so misses are not proofs of insolubility.
    pub guaranteed: bool,
    pub scanned: u64,
    pub skipped_negative: u64,
    pub skipped_congruence: u64,
    pub not_representable: u64,
    pub composite_best_effort: u64,
    pub probable_prime_used: bool,
    pub log: Vec<ScanEntry>,
    pub log_truncated: bool,
}

/// Scans `m = anchor (mod modulus)` up to `m_bound` for the first input
/// whose value is represented by the form, and returns the verified
/// witness.
///
/// Fast path: a prime value passing the splitting condition is
/// represented directly (Cornacchia). Full path (a = 1 only): the value
/// is factored and the two-squares criterion applied, composing prime
/// representations. For other `a`, composite values are skipped and the
/// report is marked best-effort.
pub fn solve_chatelet(spec: &ChateletSpec, m_bound: u64, budget: &Budget) -> Result<ChateletReport> {
    let mut report = ChateletReport {
        spec: spec.clone(),
        m_bound,
        solution: None,
        fast_path: false,
        guaranteed: spec.guaranteed(),
        scanned: 0,
        skipped_negative: 0,
        skipped_congruence: 0,
        not_representable: 0,
        composite_best_effort: 0,
        probable_prime_used: false,
        log: Vec::new(),
        log_truncated: false,
    };
    let screen = screen_primes();
    let residues = attained_residues(spec.a);
    let value_mod4 = value_residue_table(&spec.f);

    let mut m = first_in_progression(spec.anchor, spec.modulus);
    while m <= m_bound {
        report.scanned += 1;
        match scan_input(spec, m, &screen, &residues, &value_mod4, budget)? {
            ScanStep::Solved { x, y, fast, probable } => {
                report.probable_prime_used |= probable;
                verify_solution(spec, m, x, y)?;
                report.solution = Some(ChateletSolution { m, x, y });
                report.fast_path = fast;
                return Ok(report);
            }
            ScanStep::Skip { reason, probable } => {
                report.probable_prime_used |= probable;
                match reason {
                    SkipReason::NegativeValue => report.skipped_negative += 1,
                    SkipReason::CongruenceFiltered => report.skipped_congruence += 1,
                    SkipReason::NotRepresentable => report.not_representable += 1,
                    SkipReason::CompositeBestEffort => report.composite_best_effort += 1,
                }
                if report.log.len() < LOG_CAP {
                    report.log.push(ScanEntry { m, reason });
                } else {
                    report.log_truncated = true;
                }
            }
        }
        m += spec.modulus;
    }
    Ok(report)
}

enum ScanStep {
    Solved { x: u64, y: u64, fast: bool, probable: bool },
    Skip { reason: SkipReason, probable: bool },
}

fn scan_input(
    spec: &ChateletSpec,
    m: u64,
    screen: &[u64],
    residues: &[bool; 4],
    value_mod4: &[u64; 4],
    budget: &Budget,
) -> Result<ScanStep> {
    let value = spec
        .f
        .eval(i64::try_from(m).map_err(|_| Error::Overflow("scan input".into()))?)?;
    if value < 0 {
        return Ok(ScanStep::Skip { reason: SkipReason::NegativeValue, probable: false });
    }
    if !residues[value_mod4[(m % 4) as usize] as usize] {
        return Ok(ScanStep::Skip { reason: SkipReason::CongruenceFiltered, probable: false });
    }
    if value == 0 {
        return Ok(ScanStep::Solved { x: 0, y: 0, fast: false, probable: false });
    }
    let (prime, probable) = is_prime_i128(value);
    let value = u64::try_from(value)
        .map_err(|_| Error::Overflow(format!("value at m = {m} exceeds u64")))?;
    if prime {
        if let Some((x, y)) = represent_prime(spec.a, value) {
            return Ok(ScanStep::Solved { x, y, fast: true, probable });
        }
        return Ok(ScanStep::Skip { reason: SkipReason::NotRepresentable, probable });
    }
    if spec.a != 1 {
        return Ok(ScanStep::Skip { reason: SkipReason::CompositeBestEffort, probable });
    }
    match two_squares_screened(value, screen, budget)? {
        // x^2 + y^2 is symmetric; report the canonical order x >= y.
        Some((x, y)) => Ok(ScanStep::Solved { x: x.max(y), y: x.min(y), fast: false, probable }),
        None => Ok(ScanStep::Skip { reason: SkipReason::NotRepresentable, probable }),
    }
}

fn verify_solution(spec: &ChateletSpec, m: u64, x: u64, y: u64) -> Result<()> {
    let lhs = BigInt::from(x) * BigInt::from(x)
        + BigInt::from(spec.a) * BigInt::from(y) * BigInt::from(y);
    let rhs = spec.f.eval_big(m as i64);
    if lhs == rhs {
        Ok(())
    } else {
        Err(Error::Internal(format!("representation at m = {m} fails substitution")))
    }
}

fn first_in_progression(anchor: u64, modulus: u64) -> u64 {
    let r = anchor % modulus;
    if r == 0 {
        modulus
    } else {
        r
    }
}

/// Residues mod 4 attained by x^2 + a y^2.
fn attained_residues(a: u64) -> [bool; 4] {
    let mut out = [false; 4];
    for x in 0..4u64 {
        for y in 0..4u64 {
            out[((x * x + a % 4 * y * y) % 4) as usize] = true;
        }
    }
    out
}

/// f(r) mod 4 for r in 0..4 (the value class depends only on m mod 4).
fn value_residue_table(f: &IntPoly) -> [u64; 4] {
    let mut out = [0u64; 4];
    for (r, slot) in out.iter_mut().enumerate() {
        *slot = f.eval_mod(r as u64, 4);
    }
    out
}

/// Representation of a prime `p` by x^2 + a y^2, if any.
fn represent_prime(a: u64, p: u64) -> Option<(u64, u64)> {
    if a == 1 && p == 2 {
        return Some((1, 1));
    }
    if p <= a {
        // y must be 0 or 1; x^2 = p is impossible for a prime.
        let rest = p.checked_sub(a)?;
        let x = rest.isqrt();
        return (x * x == rest).then_some((x, 1));
    }
    let (x, y) = cornacchia(a, p)?;
    // x^2 + y^2 is symmetric; report the canonical order x >= y.
    Some(if a == 1 { (x.max(y), x.min(y)) } else { (x, y) })
}

fn screen_primes() -> Vec<u64> {
    PrimeSieve::new(SCREEN_BOUND).primes().collect()
}

/// Exact two-squares test organized to reject cheaply: strip the trial
/// primes (any 3-mod-4 prime to an odd power vetoes immediately), then
/// settle the cofactor by primality, falling back to a full
/// factorization only when the cofactor is a large composite. Agrees
/// exactly with the one-shot criterion.
fn two_squares_screened(
    n: u64,
    screen: &[u64],
    budget: &Budget,
) -> Result<Option<(u64, u64)>> {
    if n == 0 {
        return Ok(Some((0, 0)));
    }
    // Gaussian composition state: x^2 + y^2 = the product absorbed so far.
    let (mut x, mut y) = (1i128, 0i128);
    let mut rest = n;
    for &p in screen {
        if p * p > rest {
            break;
        }
        let mut e = 0u32;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        if e == 0 {
            continue;
        }
        match p % 4 {
            3 => {
                if e % 2 == 1 {
                    return Ok(None);
                }
                let scale = (p as i128).pow(e / 2);
                x *= scale;
                y *= scale;
            }
            _ => {
                // p = 2 composes with (1, 1); p = 1 mod 4 with Cornacchia.
                let (u, v) = if p == 2 {
                    (1u64, 1u64)
                } else {
                    cornacchia(1, p).expect("1-mod-4 prime is a sum of two squares")
                };
                for _ in 0..e {
                    (x, y) = compose(x, y, u as i128, v as i128);
                }
            }
        }
    }
    if rest > 1 {
        if is_prime(rest) {
            if rest % 4 == 3 {
                return Ok(None);
            }
            let (u, v) = cornacchia(1, rest).expect("1-mod-4 prime is a sum of two squares");
            (x, y) = compose(x, y, u as i128, v as i128);
        } else {
            // Rare: a composite with no prime factor below the screen.
            return two_squares(n, budget);
        }
    }
    let (x, y) = (x.unsigned_abs() as u64, y.unsigned_abs() as u64);
    debug_assert_eq!(x as u128 * x as u128 + y as u128 * y as u128, n as u128);
    Ok(Some((x, y)))
}

/// Gaussian-integer product: (x^2 + y^2)(u^2 + v^2) = (xu - yv)^2 + (xv + yu)^2.
fn compose(x: i128, y: i128, u: i128, v: i128) -> (i128, i128) {
    (x * u - y * v, x * v + y * u)
}

/// Fraction of coefficient vectors mod 4 (all 4^(d+1) of them) admitting
/// an input n0 in {0,1,2,3} with f(n0) = 1 mod 4, as an exact rational.
///
/// The count runs a transition over the value vector (f(0),...,f(3)) mod
/// 4 — a bijective compression of the full enumeration — so the result
/// is the exhaustive count, obtained in O(d) states.
pub fn rd_exact(d: u32) -> Result<Rational> {
    if d > MAX_EXACT_DEGREE {
        return Err(Error::BudgetExceeded(format!(
            "mod-4 enumeration supports degree <= {MAX_EXACT_DEGREE}"
        )));
    }
    // counts[s]: number of coefficient prefixes whose value vector packs
    // to s (four residues, two bits each).
    let mut counts = vec![0u128; 256];
    counts[0] = 1;
    for k in 0..=d {
        let powers: [u64; 4] =
            [power_mod4(0, k), power_mod4(1, k), power_mod4(2, k), power_mod4(3, k)];
        let mut next = vec![0u128; 256];
        for (state, &count) in counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            for c in 0..4u64 {
                let mut out = 0usize;
                for r in 0..4 {
                    let old = (state >> (2 * r)) & 3;
                    let new = (old as u64 + c * powers[r]) % 4;
                    out |= (new as usize) << (2 * r);
                }
                next[out] += count;
            }
        }
        counts = next;
    }
    let admissible: u128 = counts
        .iter()
        .enumerate()
        .filter(|(state, _)| (0..4).any(|r| (state >> (2 * r)) & 3 == 1))
        .map(|(_, &count)| count)
        .sum();
    let total = BigInt::from(4u64).pow(d + 1);
    Ok(Rational::new(BigInt::from(admissible), total))
}

fn power_mod4(base: u64, exp: u32) -> u64 {
    if exp == 0 {
        1
    } else {
        (0..exp).fold(1u64, |acc, _| acc * base % 4)
    }
}

/// The admissibility constant times the odd-prime product: a lower bound
/// for the solvable proportion, with the truncation tail interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbTable {
    pub d: u32,
    #[serde(with = "ratio_serde")]
    pub rd: Rational,
    pub rd_display: String,
    pub value: f64,
    pub truncation: u64,
    pub tail_low: f64,
    pub tail_high: f64,
}

/// Lower bound for the solvable proportion in degree d >= 2, truncating
/// the odd-prime product at `limit`.
pub fn lower_bound(d: u32, limit: u64) -> Result<ProbTable> {
    if d < 2 {
        return Err(Error::InvalidInput("the lower bound needs degree >= 2".into()));
    }
    // The mod-4 constant is 19/32 at d = 2 and stabilizes at 39/64 from
    // d = 3 on (confirmed exhaustively through degree 12).
    let rd = if d <= MAX_EXACT_DEGREE {
        rd_exact(d)?
    } else {
        Rational::new(BigInt::from(39), BigInt::from(64))
    };
    let product = series::odd_prime_product(d, limit)?;
    let scale = rd.to_f64().ok_or_else(|| Error::Internal("rd out of float range".into()))?;
    Ok(ProbTable {
        d,
        rd_display: ratio_string(&rd),
        rd,
        value: scale * product.value,
        truncation: product.truncation,
        tail_low: scale * product.tail_low,
        tail_high: scale * product.tail_high,
    })
}

/// Verdict for one sampled polynomial in the empirical experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleVerdict {
    pub index: u64,
    pub poly: String,
    pub solvable: bool,
    pub solution: Option<ChateletSolution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionReport {
    pub d: u32,
    pub height: u64,
    pub m_bound: u64,
    pub samples: u64,
    pub seed: u64,
    pub solvable: u64,
    pub proportion: f64,
    /// One-sided 95% lower confidence bound (Wilson, z = 1.645).
    pub wilson_lower: f64,
    pub probable_prime_used: bool,
    pub verdicts: Option<Vec<SampleVerdict>>,
}

/// Samples `samples` polynomials uniformly from the degree-d height-H box
/// (positive leading coefficient), runs the a = 1 scan on each, and
/// reports the solvable fraction with a one-sided Wilson bound.
pub fn solvability_proportion(
    d: u32,
    height: u64,
    m_bound: u64,
    samples: u64,
    seed: u64,
    collect_verdicts: bool,
    budget: &Budget,
) -> Result<ProportionReport> {
    if samples == 0 || m_bound == 0 {
        return Err(Error::InvalidInput("need at least one sample and a positive bound".into()));
    }
    let height_i = i64::try_from(height)
        .map_err(|_| Error::Overflow("height exceeds i64".into()))?;
    let cbox = CoeffBox::unconstrained(vec![d], height_i)?;
    let layout = cbox.layout();
    let screen = screen_primes();

    struct Part {
        solved: u64,
        probable: bool,
        verdicts: Vec<SampleVerdict>,
    }
    let map = |(lo, hi): (u128, u128)| -> Result<Part> {
        let mut part = Part { solved: 0, probable: false, verdicts: Vec::new() };
        for index in lo..hi {
            let mut rng = stream_rng(seed, index as u64);
            let tuple = layout
                .sample(&mut rng)
                .ok_or_else(|| Error::Internal("sampling from an empty box".into()))?;
            let poly = tuple.polys()[0].clone();
            let display = poly.to_string();
            let spec = ChateletSpec::new(1, poly, 0, 1)?;
            let outcome = solve_quiet(&spec, m_bound, &screen, budget)?;
            part.probable |= outcome.probable;
            if outcome.solution.is_some() {
                part.solved += 1;
            }
            if collect_verdicts {
                part.verdicts.push(SampleVerdict {
                    index: index as u64,
                    poly: display,
                    solvable: outcome.solution.is_some(),
                    solution: outcome.solution,
                });
            }
        }
        Ok(part)
    };
    let folded = exec::map_fold(
        samples as u128,
        SHARD_SIZE,
        map,
        Ok(Part { solved: 0, probable: false, verdicts: Vec::new() }),
        |acc: Result<Part>, part: Result<Part>| {
            let mut acc = acc?;
            let part = part?;
            acc.solved += part.solved;
            acc.probable |= part.probable;
            acc.verdicts.extend(part.verdicts);
            Ok(acc)
        },
    )?;
    let proportion = folded.solved as f64 / samples as f64;
    Ok(ProportionReport {
        d,
        height,
        m_bound,
        samples,
        seed,
        solvable: folded.solved,
        proportion,
        wilson_lower: wilson_lower(folded.solved, samples, 1.645),
        probable_prime_used: folded.probable,
        verdicts: collect_verdicts.then_some(folded.verdicts),
    })
}

struct QuietOutcome {
    solution: Option<ChateletSolution>,
    probable: bool,
}

/// Log-free scan used by the sampling experiment.
fn solve_quiet(
    spec: &ChateletSpec,
    m_bound: u64,
    screen: &[u64],
    budget: &Budget,
) -> Result<QuietOutcome> {
    let residues = attained_residues(spec.a);
    let value_mod4 = value_residue_table(&spec.f);
    let mut probable = false;
    let mut m = first_in_progression(spec.anchor, spec.modulus);
    while m <= m_bound {
        match scan_input(spec, m, screen, &residues, &value_mod4, budget)? {
            ScanStep::Solved { x, y, probable: p, .. } => {
                verify_solution(spec, m, x, y)?;
                return Ok(QuietOutcome {
                    solution: Some(ChateletSolution { m, x, y }),
                    probable: probable | p,
                });
            }
            ScanStep::Skip { probable: p, .. } => probable |= p,
        }
        m += spec.modulus;
    }
    Ok(QuietOutcome { solution: None, probable })
}

/// One-sided Wilson lower confidence bound for a binomial proportion.
fn wilson_lower(successes: u64, trials: u64, z: f64) -> f64 {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let center = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - spread) / (1.0 + z2 / n)).max(0.0)
}
