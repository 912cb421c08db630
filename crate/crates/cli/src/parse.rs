//! Parsers for the structured flag values (polynomials, groups, residues).

use crate::Failure;
use schinzel_core::polyff::{IntPoly, PolyTuple};

/// One polynomial from a comma list of coefficients, constant first.
pub fn poly(text: &str) -> Result<IntPoly, Failure> {
    let coeffs: Vec<i64> = text
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<i64>()
                .map_err(|_| Failure::usage(format!("bad coefficient {part:?} in --poly {text:?}")))
        })
        .collect::<Result<_, _>>()?;
    IntPoly::new(coeffs).map_err(Into::into)
}

/// A tuple from repeated --poly flags.
pub fn tuple(texts: &[String]) -> Result<PolyTuple, Failure> {
    let polys = texts.iter().map(|t| poly(t)).collect::<Result<Vec<_>, _>>()?;
    PolyTuple::new(polys).map_err(Into::into)
}

/// Exactly three comma-separated integers (conic base coefficients).
pub fn base(text: &str) -> Result<[i64; 3], Failure> {
    let parts: Vec<i64> = text
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<i64>()
                .map_err(|_| Failure::usage(format!("bad integer {part:?} in --base {text:?}")))
        })
        .collect::<Result<_, _>>()?;
    <[i64; 3]>::try_from(parts)
        .map_err(|v| Failure::usage(format!("--base needs exactly 3 coefficients, got {}", v.len())))
}

/// Three ';'-separated groups of '|'-separated polynomials.
pub fn groups(text: &str) -> Result<[Vec<IntPoly>; 3], Failure> {
    let parts: Vec<&str> = text.split(';').collect();
    if parts.len() != 3 {
        return Err(Failure::usage(format!(
            "--groups needs exactly 3 ';'-separated groups, got {}",
            parts.len()
        )));
    }
    let mut out: [Vec<IntPoly>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (slot, part) in out.iter_mut().zip(parts) {
        if part.trim().is_empty() {
            continue;
        }
        for entry in part.split('|') {
            slot.push(poly(entry)?);
        }
    }
    Ok(out)
}

/// Three ';'-separated groups of '|'-separated primes.
pub fn prime_groups(text: &str) -> Result<[Vec<u64>; 3], Failure> {
    let parts: Vec<&str> = text.split(';').collect();
    if parts.len() != 3 {
        return Err(Failure::usage(format!(
            "--primes needs exactly 3 ';'-separated groups, got {}",
            parts.len()
        )));
    }
    let mut out: [Vec<u64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (slot, part) in out.iter_mut().zip(parts) {
        if part.trim().is_empty() {
            continue;
        }
        for entry in part.split('|') {
            let p = entry
                .trim()
                .parse::<u64>()
                .map_err(|_| Failure::usage(format!("bad prime {entry:?} in --primes {text:?}")))?;
            slot.push(p);
        }
    }
    Ok(out)
}

/// Coefficient residue lists: one comma list per polynomial, ';'-separated,
/// each of length degree + 1 (constant first).
pub fn residues(text: &str, degrees: &[u32]) -> Result<Vec<Vec<i64>>, Failure> {
    let lists: Vec<Vec<i64>> = text
        .split(';')
        .map(|list| {
            list.split(',')
                .map(|part| {
                    part.trim().parse::<i64>().map_err(|_| {
                        Failure::usage(format!("bad residue {part:?} in --residues {text:?}"))
                    })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    if lists.len() != degrees.len() {
        return Err(Failure::usage(format!(
            "--residues has {} lists but --degrees names {} polynomials",
            lists.len(),
            degrees.len()
        )));
    }
    for (list, &d) in lists.iter().zip(degrees) {
        if list.len() != d as usize + 1 {
            return Err(Failure::usage(format!(
                "a degree-{d} polynomial needs {} residues, got {}",
                d + 1,
                list.len()
            )));
        }
    }
    Ok(lists)
}
