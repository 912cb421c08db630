//! Acceptance checks: one test per criterion, each printing a single
//! pass/fail line (visible with `--nocapture`; a failed line also fails
//! the test). Tolerances are pinned here, next to the checks.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use schinzel_core::arith::PrimeSieve;
use schinzel_core::chatelet::{lower_bound, rd_exact, solvability_proportion};
use schinzel_core::conic::{identity_check, q_indicator, solve_conic, ConicOutcome, ConicSpec};
use schinzel_core::counting::{dispersion, least_prime_hit, pair_correlation, DispersionMode};
use schinzel_core::exec::stream_rng;
use schinzel_core::model::{
    c_ell, exhaustive_joint_counts, joint_prob, verify_moments, OmegaSpec, Rational,
};
use schinzel_core::polyff::{is_schinzel, CoeffBox, IntPoly};
use schinzel_core::series::schinzel_density;
use schinzel_core::{Budget, Error};

fn verdict(criterion: u32, pass: bool, detail: String) {
    println!("criterion {criterion:2}: {} - {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion}: {detail}");
}

fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Exact first/second/conditioned moments for every small parameter
/// combination, including the worked 14/27 second moment.
#[test]
fn criterion_01_exact_moments() {
    let budget = Budget::default();
    let mut cases = 0u32;
    let mut all = true;
    for ell in [2u64, 3, 5] {
        for degrees in [
            vec![1u32],
            vec![2],
            vec![1, 1],
            vec![1, 2],
            vec![2, 1],
            vec![2, 2],
        ] {
            let spec = OmegaSpec::new(ell, degrees).unwrap();
            all &= verify_moments(&spec, &budget).unwrap().all_match();
            cases += 1;
        }
    }
    let report = verify_moments(&OmegaSpec::new(3, vec![1]).unwrap(), &budget).unwrap();
    let second = report.checks.iter().find(|c| c.name == "second_moment").unwrap();
    all &= second.exhaustive == ratio(14, 27) && second.closed_form == ratio(14, 27);
    verdict(1, all, format!("{cases} (ell, degrees) cases match exactly; 14/27 reproduced"));
}

/// The eight vanishing-pattern probabilities at ell = 3, d = (1,1) sum to
/// one and match the census of all 81 coefficient tuples.
#[test]
fn criterion_02_joint_distribution() {
    let budget = Budget::default();
    let spec = OmegaSpec::new(3, vec![1, 1]).unwrap();
    let counts = exhaustive_joint_counts(&spec, &budget).unwrap();
    let total: u128 = counts.iter().sum();
    let mut all = total == 81;
    let mut sum = Rational::zero();
    for (mask, &count) in counts.iter().enumerate() {
        let pattern: Vec<bool> = (0..3).map(|r| mask >> r & 1 == 1).collect();
        let prob = joint_prob(&spec, &pattern).unwrap();
        all &= prob == Rational::new(BigInt::from(count), BigInt::from(81u32));
        sum += prob;
    }
    all &= sum == Rational::one();
    verdict(2, all, "8 pattern probabilities sum to 1 and match the 81-tuple census".into());
}

/// c_ell equals ell^-ell below the degree threshold and ell^-(d+1) above
/// it, for every prime up to 50 and degree up to 6.
#[test]
fn criterion_03_c_ell_special_values() {
    let mut checked = 0u32;
    let mut all = true;
    for ell in PrimeSieve::new(50).primes() {
        for d in 1..=6u32 {
            let exponent = if ell <= d as u64 + 1 { ell } else { d as u64 + 1 };
            let expected = Rational::from_integer(BigInt::from(ell)).pow(-(exponent as i32));
            all &= c_ell(ell, &[d]) == expected;
            checked += 1;
        }
    }
    verdict(3, all, format!("{checked} (ell, d) special values are exact"));
}

fn admissible_fraction(degree: u32, height: i64, budget: &Budget) -> (f64, u128) {
    let layout = CoeffBox::unconstrained(vec![degree], height).unwrap().layout();
    let total = layout.total().unwrap();
    let mut hits = 0u128;
    for index in 0..total {
        if is_schinzel(&layout.decode(index), budget).unwrap().is_ok() {
            hits += 1;
        }
    }
    (hits as f64 / total as f64, total)
}

/// Empirical admissible-polynomial proportions against the density
/// constants: 6/pi^2 in degree 1 and the truncated product in degree 2,
/// both within a pinned 2% relative tolerance.
#[test]
fn criterion_04_empirical_density() {
    let budget = Budget::default();
    let (f1, t1) = admissible_fraction(1, 300, &budget);
    let ref1 = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
    let (f2, t2) = admissible_fraction(2, 60, &budget);
    let ref2 = schinzel_density(&[2], 1, 20_000).unwrap().value;
    let ok1 = (f1 - ref1).abs() <= 0.02 * ref1;
    let ok2 = (f2 - ref2).abs() <= 0.02 * ref2;
    verdict(
        4,
        ok1 && ok2,
        format!(
            "degree 1: {f1:.4} vs {ref1:.4} over {t1} polynomials; degree 2: {f2:.4} vs {ref2:.4} over {t2}"
        ),
    );
}

/// Exact mod-4 constants and the product lower bounds above 0.56.
#[test]
fn criterion_05_exact_constants_and_bounds() {
    let mut all = rd_exact(2).unwrap() == ratio(19, 32);
    for d in 3..=8u32 {
        all &= rd_exact(d).unwrap() == ratio(39, 64);
    }
    let mut bounds = Vec::new();
    for d in 2..=8u32 {
        let table = lower_bound(d, 100_000).unwrap();
        all &= table.value > 0.56;
        bounds.push(format!("{:.4}", table.value));
    }
    verdict(
        5,
        all,
        format!("r_2 = 19/32, r_3..r_8 = 39/64; bounds [{}] all exceed 0.56", bounds.join(", ")),
    );
}

/// Exhaustive pair correlation at height 1500 lands within 15% of the
/// main term for both point pairs.
#[test]
fn criterion_06_pair_correlation() {
    let budget = Budget::default();
    let near = pair_correlation(1500, 1, 1, 2, &budget).unwrap();
    let far = pair_correlation(1500, 1, 1, 3, &budget).unwrap();
    let ok = (0.85..=1.15).contains(&near.ratio) && (0.85..=1.15).contains(&far.ratio);
    verdict(
        6,
        ok,
        format!("G(1,2)/(2H^2) = {:.4}, G(1,3)/(4H^2) = {:.4}", near.ratio, far.ratio),
    );
}

/// Dispersion over growing boxes: the Cauchy-Schwarz relation R^2 <= V on
/// every run, and R/x decreasing across the three heights.
#[test]
fn criterion_07_dispersion_properties() {
    let budget = Budget::default();
    let mut all = true;
    let mut ratios = Vec::new();
    for height in [200i64, 400, 800] {
        let cbox = CoeffBox::unconstrained(vec![1], height).unwrap();
        let x = (height as f64).ln().powf(1.5);
        let report =
            dispersion(&cbox, x, DispersionMode::Exhaustive, 0, false, &budget).unwrap();
        all &= report.r * report.r <= report.v * (1.0 + 1e-12);
        ratios.push(report.r_over_x);
    }
    let decreasing = ratios[0] > ratios[1] && ratios[1] > ratios[2];
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.4}")).collect();
    let detail = if decreasing {
        format!("R^2 <= V at each height; R/x = [{}] decreasing", shown.join(", "))
    } else {
        format!(
            "R^2 <= V holds, but R/x = [{}] is not decreasing: for these heights \
             ln x lies in [2.50, 2.85], so the series truncation covers only the \
             prime 2 and the omitted odd-prime factors dominate the error",
            shown.join(", ")
        )
    };
    verdict(7, all && decreasing, detail);
}

/// Brute-force oracle for a conic point in the |x|,|y|,|z| <= bound box.
/// Complete for our sampled specs: every pairwise coefficient product is
/// kept at most 250000, so a solvable conic has a point in the box.
fn brute_point(a: i128, b: i128, c: i128, bound: i64) -> Option<(i64, i64, i64)> {
    for x in 0..=bound {
        for y in 0..=bound {
            if x == 0 && y == 0 {
                continue;
            }
            let t = -(a * (x as i128) * (x as i128) + b * (y as i128) * (y as i128));
            if t % c != 0 {
                continue;
            }
            let s = t / c;
            if s < 0 {
                continue;
            }
            let z = (s as u128).isqrt() as i128;
            if z * z == s && z <= bound as i128 {
                return Some((x, y, z as i64));
            }
        }
    }
    None
}

/// Indicator-vs-search equivalence on 200 sampled specs, point
/// verification, and the exact counting identity on 20 instances.
#[test]
fn criterion_08_conic_oracle_equivalence() {
    let budget = Budget::default();
    let odd_primes: Vec<u64> = PrimeSieve::new(500).primes().skip(1).collect();
    let small_primes: Vec<u64> = odd_primes.iter().copied().filter(|&p| p < 60).collect();
    let mut rng = stream_rng(0x0515, 0);
    let mut accepted = 0u32;
    let mut solvable = 0u32;
    let mut tries = 0u32;
    let mut all = true;
    while accepted < 200 {
        tries += 1;
        assert!(tries < 200_000, "conic spec generator starved");
        let mut base = [1i64, 1, 1];
        let neg_mask = rng.gen_range(1..7usize);
        for (i, slot) in base.iter_mut().enumerate() {
            if neg_mask >> i & 1 == 1 {
                *slot = -1;
            }
        }
        let magnitude = [1i64, 1, 1, 2, 3][rng.gen_range(0..5)];
        base[rng.gen_range(0..3)] *= magnitude;
        let sizes = [[1usize, 1, 0], [1, 1, 1], [2, 1, 0]][rng.gen_range(0..3)];
        let pool = if sizes.iter().sum::<usize>() > 2 { &small_primes } else { &odd_primes };
        let mut groups: [Vec<u64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut chosen: Vec<u64> = Vec::new();
        let mut distinct = true;
        for (i, &n) in sizes.iter().enumerate() {
            for _ in 0..n {
                let p = pool[rng.gen_range(0..pool.len())];
                if chosen.contains(&p) || magnitude as u64 % p == 0 {
                    distinct = false;
                    break;
                }
                chosen.push(p);
                groups[i].push(p);
            }
        }
        if !distinct {
            continue;
        }
        let spec = match ConicSpec::new(base, groups, &budget) {
            Ok(spec) => spec,
            Err(_) => continue,
        };
        let coeffs = spec.coefficients().unwrap();
        // Keep the 500-box oracle complete (see brute_point).
        let window = coeffs[0].abs() * coeffs[1].abs() <= 250_000
            && coeffs[0].abs() * coeffs[2].abs() <= 250_000
            && coeffs[1].abs() * coeffs[2].abs() <= 250_000;
        if !window {
            continue;
        }
        let q = match q_indicator(&spec, &budget) {
            Ok(q) => q,
            Err(Error::Hypothesis(_)) => continue,
            Err(e) => panic!("indicator failed on {coeffs:?}: {e}"),
        };
        let witness = brute_point(coeffs[0], coeffs[1], coeffs[2], 500);
        match solve_conic(coeffs[0], coeffs[1], coeffs[2], &budget).unwrap() {
            ConicOutcome::Point(point) => {
                let ok = q == 1
                    && witness.is_some()
                    && point.verifies(coeffs[0], coeffs[1], coeffs[2]);
                if !ok {
                    eprintln!(
                        "MISMATCH point: base {base:?} coeffs {coeffs:?} q={q} witness={witness:?} point={point:?}"
                    );
                }
                all &= ok;
                solvable += 1;
            }
            ConicOutcome::Obstruction(place) => {
                let ok = q == 0 && witness.is_none();
                if !ok {
                    eprintln!(
                        "MISMATCH obstruction at {place}: base {base:?} coeffs {coeffs:?} q={q} witness={witness:?}"
                    );
                }
                all &= ok;
            }
        }
        accepted += 1;
    }

    let mut fibers = 0usize;
    for k in 0..20u64 {
        let mut rng = stream_rng(0xD0_11, k);
        let b1 = rng.gen_range(0..12i64);
        let mut b2 = rng.gen_range(0..12i64);
        if b2 == b1 {
            b2 = b1 + 1;
        }
        let base = [[1i64, 1, -1], [1, -1, 1], [-1, 1, 1], [1, -1, -1]][rng.gen_range(0..4)];
        let groups = [vec![IntPoly::t_plus(b1)], vec![IntPoly::t_plus(b2)], Vec::new()];
        let report = identity_check(base, &groups, 200.0, 1, 1, &budget).unwrap();
        if !(report.identity_holds && report.max_residual < 1e-9) {
            eprintln!(
                "IDENTITY FAIL: base {base:?} b1={b1} b2={b2} residual={} members={}",
                report.max_residual,
                report.members.len()
            );
        }
        all &= report.identity_holds && report.max_residual < 1e-9;
        fibers += report.members.len();
    }
    verdict(
        8,
        all,
        format!(
            "200 specs agree with the 500-box oracle ({solvable} solvable); identity exact on 20 instances ({fibers} qualifying fibers)"
        ),
    );
}

/// Sampled solvability proportion with its one-sided Wilson bound above
/// the 0.56 threshold.
#[test]
fn criterion_09_chatelet_proportion() {
    let budget = Budget::default();
    let report = solvability_proportion(2, 100, 10_000, 2000, 47, false, &budget).unwrap();
    let ok = report.wilson_lower >= 0.56;
    verdict(
        9,
        ok,
        format!(
            "proportion {:.4} over {} samples; Wilson 95% lower bound {:.4}",
            report.proportion, report.samples, report.wilson_lower
        ),
    );
}

/// Least-prime coverage: from the congruence-constrained degree-2 box of
/// height 10^4, at least 95% of 1000 admissible samples hit a prime value
/// by m = 500 along the progression 1 mod 4.
#[test]
fn criterion_10_least_prime_fraction() {
    let budget = Budget::default();
    let cbox = CoeffBox::new(vec![2], 10_000, 4, vec![vec![1, 0, 0]], 1).unwrap();
    let layout = cbox.layout();
    let mut accepted = 0u32;
    let mut found = 0u32;
    let mut index = 0u64;
    while accepted < 1000 {
        let mut rng = stream_rng(1005, index);
        index += 1;
        assert!(index < 100_000, "admissible sampler starved");
        let tuple = layout.sample(&mut rng).expect("box is nonempty");
        if !is_schinzel(&tuple, &budget).unwrap().is_ok() {
            continue;
        }
        accepted += 1;
        if least_prime_hit(&tuple, 1, 4, 500).unwrap().is_some() {
            found += 1;
        }
    }
    verdict(10, found >= 950, format!("{found}/1000 sampled polynomials hit a prime by m = 500"));
}
