//! Independent brute-force reference implementations.
//!
//! Everything here is written in the most direct way possible and shares no
//! code with the optimized modules; the test suite uses these as ground truth.
//! Each oracle carries an explicit work budget and fails loudly rather than
//! silently degrading.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::vecmath::SparseVec;
use crate::{Error, Result};

/// Work cap shared by the quadratic oracles.
const ORACLE_BUDGET: u128 = 1 << 33;

fn check_budget(work: u128, what: &str) -> Result<()> {
    if work > ORACLE_BUDGET {
        return Err(Error::Budget(format!(
            "oracle {what} would need {work} operations (budget {ORACLE_BUDGET})"
        )));
    }
    Ok(())
}

/// Quadratic-time convolution.
pub fn bf_conv(x: &SparseVec, y: &SparseVec) -> SparseVec {
    let mut acc: BTreeMap<i64, u64> = BTreeMap::new();
    for &(i, cx) in x.entries() {
        for &(j, cy) in y.entries() {
            *acc.entry(i + j).or_insert(0) += cx * cy;
        }
    }
    SparseVec::from_entries(acc.into_iter().collect()).expect("oracle counts fit u64")
}

/// Additive energy of a set: the number of quadruples `(a, b, c, d)` with
/// `a + b = c + d`, computed as the sum of squared sum-representation counts.
pub fn bf_energy(a: &[i64]) -> Result<u128> {
    check_budget((a.len() as u128).pow(2), "energy")?;
    let mut reps: HashMap<i64, u64> = HashMap::new();
    for &x in a {
        for &y in a {
            *reps.entry(x + y).or_insert(0) += 1;
        }
    }
    Ok(reps.values().map(|&r| (r as u128) * (r as u128)).sum())
}

/// All shifts `c` with `|(c + B) \ A| <= k` (at most `k` of the translated
/// `B`-points miss `A`), over the full interval of shifts that could place
/// any `B`-point inside `A`.
pub fn bf_constellation(a: &[i64], b: &[i64], k: u64) -> Result<Vec<i64>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter("empty point set".into()));
    }
    let (amin, amax) = (*a.iter().min().unwrap(), *a.iter().max().unwrap());
    let (bmin, bmax) = (*b.iter().min().unwrap(), *b.iter().max().unwrap());
    let lo = amin - bmax;
    let hi = amax - bmin;
    check_budget(
        ((hi - lo + 1) as u128) * (b.len() as u128),
        "constellation",
    )?;
    let aset: HashSet<i64> = a.iter().copied().collect();
    let bset: Vec<i64> = {
        let s: HashSet<i64> = b.iter().copied().collect();
        s.into_iter().collect()
    };
    let mut out = Vec::new();
    for c in lo..=hi {
        let misses = bset.iter().filter(|&&x| !aset.contains(&(c + x))).count() as u64;
        if misses <= k {
            out.push(c);
        }
    }
    Ok(out)
}

/// Hamming distance between the pattern and every length-`|p|` window of the
/// text, by direct comparison.
pub fn bf_hamming(t: &[u32], p: &[u32]) -> Result<Vec<u64>> {
    if p.is_empty() || p.len() > t.len() {
        return Err(Error::InvalidParameter(
            "pattern must be nonempty and no longer than the text".into(),
        ));
    }
    check_budget(
        ((t.len() - p.len() + 1) as u128) * (p.len() as u128),
        "hamming",
    )?;
    Ok((0..=t.len() - p.len())
        .map(|i| {
            p.iter()
                .zip(&t[i..])
                .filter(|(pc, tc)| pc != tc)
                .count() as u64
        })
        .collect())
}

/// All shifts where the pattern matches the text with at most `k` mismatches;
/// `None` pattern positions are wildcards matching anything.
pub fn bf_wildcard(t: &[u32], p: &[Option<u32>], k: u64) -> Result<Vec<usize>> {
    if p.is_empty() || p.len() > t.len() {
        return Err(Error::InvalidParameter(
            "pattern must be nonempty and no longer than the text".into(),
        ));
    }
    check_budget(
        ((t.len() - p.len() + 1) as u128) * (p.len() as u128),
        "wildcard",
    )?;
    Ok((0..=t.len() - p.len())
        .filter(|&i| {
            p.iter()
                .zip(&t[i..])
                .filter(|(pc, tc)| matches!(pc, Some(v) if v != *tc))
                .count() as u64
                <= k
        })
        .collect())
}

/// Maximum bias of a collection of vectors in `F_p^m`: the largest magnitude,
/// over nonzero characters `gamma`, of the averaged character sum
/// `|sum_v omega^<gamma, v>| / |collection|`, with `omega = e^(2 pi i / p)`.
pub fn bf_bias(members: &[Vec<u64>], p: u64) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::InvalidParameter("empty collection".into()));
    }
    let m = members[0].len();
    let gammas = (p as u128).checked_pow(m as u32).ok_or_else(|| {
        Error::Overflow("character space size exceeds u128".into())
    })?;
    check_budget(gammas * members.len() as u128, "bias")?;
    let tau = std::f64::consts::TAU;
    let mut worst: f64 = 0.0;
    for g in 1..gammas {
        // Decode gamma as base-p digits.
        let mut digits = Vec::with_capacity(m);
        let mut v = g;
        for _ in 0..m {
            digits.push((v % p as u128) as u64);
            v /= p as u128;
        }
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for member in members {
            let dot: u64 = member
                .iter()
                .zip(&digits)
                .map(|(&a, &b)| (a * b) % p)
                .sum::<u64>()
                % p;
            let ang = tau * dot as f64 / p as f64;
            re += ang.cos();
            im += ang.sin();
        }
        let mag = (re * re + im * im).sqrt() / members.len() as f64;
        worst = worst.max(mag);
    }
    Ok(worst)
}
