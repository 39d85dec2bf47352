//! Constellation matching with mismatches, and wildcard pattern matching.
//!
//! # Mathematical background
//!
//! Given finite point sets `A` (the scene) and `B` (the constellation), a
//! translation `c` is a *`k`-mismatch occurrence* when all but at most `k`
//! points of the translate land in the scene: `|(c + B) \ A| <= k`.
//! Equivalently, with `t = |B| - k`, exactly when the correlation
//! `(1_A * 1_{-B})[c] >= t`, so occurrences are the `t`-popular sums of
//! `A + (-B)` and every algorithm here is a 3SUM-counting strategy:
//!
//! * [`constellation_bruteforce`] scans all plausible translations.
//! * [`candidate_filter_subsample`] is the one randomized routine of the
//!   crate: it subsamples `B` at rate `p ~ log N / k` and keeps the
//!   translations that survive a proportionally relaxed test.  A Chernoff
//!   bound makes the candidate list a superset of the occurrences with high
//!   probability; downstream counting stays exact.
//! * [`constellation_small_c`] counts an explicit candidate list by exact
//!   partial convolution.
//! * [`constellation_large_b`] splits `B` by an approximate popularity test
//!   against the candidate list: points landing in the scene for most
//!   candidates are counted by partial convolution, the rest through the
//!   structured small-doubling counter with the candidate list itself as
//!   the shift set.
//! * [`constellation_deterministic`] needs no candidate promise.  For large
//!   `k` it defers to the exact popular-sums reporter.  Otherwise it runs a
//!   *scaling* scheme: fold everything modulo `M, 2M, 4M, ...` (with `M` a
//!   collision-light modulus for `B`), observe that folding only increases
//!   the correlation, and thus that the occurrence residues at one level
//!   must lift to candidates at the next.  Once the modulus exceeds the
//!   coordinate spread, counting is exact and the surviving candidates are
//!   the occurrences.
//!
//! [`wildcard_match`] reduces `k`-mismatch string matching with wildcards
//! to the constellation problem: position `i` with symbol `s` becomes the
//! point `s * F + 4i` on a stretched axis, non-wildcard pattern positions
//! become constellation points, and every position is padded with three
//! shared sentinel symbols so that pattern and text have comparable mass at
//! every alignment.  Valid text shifts survive a per-level residue filter
//! (all candidates are `4 * shift mod M_i`), and the scaling pipeline does
//! the rest.

use crate::approx_count::{popular_sums_approx, ApproxParams};
use crate::modular::find_modulus;
use crate::popular_exact::{popular_sums_exact, PopularExactConfig};
use crate::small_doubling::count_small_doubling;
use crate::vecmath::{conv_dense, conv_partial, conv_sparse, SparseVec};
use crate::{normalize_set, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{HashMap, HashSet};

/// Which comparison defines an occurrence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Convention {
    /// `|(c + B) \ A| <= k` (the default).
    #[default]
    AtMost,
    /// `|(c + B) \ A| < k`.
    StrictLess,
}

/// Tuning parameters for [`constellation_deterministic`].
#[derive(Clone, Debug, Default)]
pub struct ConstellationConfig {
    /// Occurrence convention.
    pub convention: Convention,
    /// Override for the candidate-density ratio `R` of the scaling scheme
    /// (default `ceil((k / L^2)^(1/3))` with `L = |A| / |B|`).
    pub r_override: Option<u64>,
    /// Parameters of the approximate counting primitives.
    pub approx: ApproxParams,
    /// Configuration of the exact popular-sums reporter (large-`k` branch).
    pub popular: PopularExactConfig,
}

/// Result of [`candidate_filter_subsample`].
#[derive(Clone, Debug)]
pub struct CandidateSet {
    /// Sorted candidate translations.
    pub candidates: Vec<i64>,
    /// True when the budget regime forced exact computation, in which case
    /// `candidates` are precisely the occurrences.
    pub exact: bool,
}

/// Required hit count `t = |B| - k` (`+ 1` under [`Convention::StrictLess`]).
fn threshold(b_len: usize, k: u64, convention: Convention) -> Result<u64> {
    let t = match convention {
        Convention::AtMost => b_len as i128 - k as i128,
        Convention::StrictLess => b_len as i128 - k as i128 + 1,
    };
    if t < 1 {
        return Err(Error::InvalidParameter(format!(
            "mismatch budget k = {k} admits every translation for |B| = {b_len}; \
             the occurrence list is unbounded"
        )));
    }
    Ok(t as u64)
}

fn check_nonempty(a: &[i64], b: &[i64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter("empty point set".into()));
    }
    Ok(())
}

/// Exact occurrences by direct scan over all plausible translations.
pub fn constellation_bruteforce(
    a: &[i64],
    b: &[i64],
    k: u64,
    convention: Convention,
) -> Result<Vec<i64>> {
    let a = normalize_set(a.to_vec());
    let b = normalize_set(b.to_vec());
    check_nonempty(&a, &b)?;
    let t = threshold(b.len(), k, convention)?;
    if t as usize > b.len() {
        return Ok(Vec::new());
    }
    crate::oracles::bf_constellation(&a, &b, b.len() as u64 - t)
}

/// Randomized candidate filter: subsample `B` at rate `p ~ 100 ln N / k`
/// and keep translations missing at most a relaxed budget of the sample.
/// The output is a superset of the occurrences with high probability; when
/// `k` is below the concentration threshold the exact occurrence list is
/// returned instead (flagged by [`CandidateSet::exact`]).
pub fn candidate_filter_subsample(
    a: &[i64],
    b: &[i64],
    k: u64,
    convention: Convention,
    seed: u64,
) -> Result<CandidateSet> {
    let a = normalize_set(a.to_vec());
    let b = normalize_set(b.to_vec());
    check_nonempty(&a, &b)?;
    let t = threshold(b.len(), k, convention)?;
    if t as usize > b.len() {
        return Ok(CandidateSet {
            candidates: Vec::new(),
            exact: true,
        });
    }
    // Mismatch budget in the `AtMost` normal form.
    let k0 = (b.len() - t as usize) as u64;
    let n_univ = a
        .iter()
        .chain(&b)
        .map(|&x| x.unsigned_abs())
        .max()
        .unwrap()
        .max(3);
    let eta = 0.7;
    let need = 100.0 * (n_univ as f64).ln() / (eta * eta);
    if (k0 as f64) < need {
        // Too little headroom for concentration: answer exactly.
        return Ok(CandidateSet {
            candidates: constellation_bruteforce(&a, &b, k0, Convention::AtMost)?,
            exact: true,
        });
    }
    let p = (need / k0 as f64).min(1.0);
    let relaxed = (1.0 + eta / 40.0) * p * k0 as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample: Vec<i64> = b.iter().copied().filter(|_| rng.gen::<f64>() < p).collect();
    if sample.is_empty() {
        return Ok(CandidateSet {
            candidates: constellation_bruteforce(&a, &b, k0, Convention::AtMost)?,
            exact: true,
        });
    }
    // c survives when |(c + sample) \ A| <= relaxed, i.e. the correlation
    // against the sample is at least |sample| - relaxed.
    let f = conv_sparse(
        &SparseVec::from_set(&a),
        &SparseVec::from_set(&sample).negate(),
    )?;
    let cut = sample.len() as f64 - relaxed;
    let candidates: Vec<i64> = f
        .entries()
        .iter()
        .filter(|&&(_, v)| v as f64 >= cut)
        .map(|&(c, _)| c)
        .collect();
    Ok(CandidateSet {
        candidates,
        exact: false,
    })
}

/// Exact occurrences within a promised candidate list, by partial
/// convolution; translations outside `candidates` are not reported.
pub fn constellation_small_c(
    a: &[i64],
    b: &[i64],
    candidates: &[i64],
    k: u64,
    convention: Convention,
) -> Result<Vec<i64>> {
    let a = normalize_set(a.to_vec());
    let b = normalize_set(b.to_vec());
    check_nonempty(&a, &b)?;
    let t = threshold(b.len(), k, convention)?;
    let cands = normalize_set(candidates.to_vec());
    let counts = conv_partial(
        &SparseVec::from_set(&a),
        &SparseVec::from_set(&b).negate(),
        &cands,
    )?;
    Ok(cands
        .into_iter()
        .zip(counts)
        .filter(|&(_, v)| v >= t)
        .map(|(c, _)| c)
        .collect())
}

/// Exact occurrences within a promised candidate list, optimized for large
/// `B`: points of `B` that land in the scene for most candidates are
/// counted by partial convolution, the rest through the structured
/// small-doubling counter.  `r` is the density ratio below which the plain
/// partial convolution is used directly.
pub fn constellation_large_b(
    a: &[i64],
    b: &[i64],
    candidates: &[i64],
    k: u64,
    r: u64,
    convention: Convention,
    approx: &ApproxParams,
) -> Result<Vec<i64>> {
    let a = normalize_set(a.to_vec());
    let b = normalize_set(b.to_vec());
    check_nonempty(&a, &b)?;
    let t = threshold(b.len(), k, convention)?;
    let cands = normalize_set(candidates.to_vec());
    if cands.is_empty() {
        return Ok(Vec::new());
    }
    if (cands.len() as u128) * (r.max(1) as u128) < a.len() as u128 {
        return constellation_small_c(&a, &b, &cands, k, convention);
    }
    let sv_a = SparseVec::from_set(&a);
    let sv_c = SparseVec::from_set(&cands);
    // Popularity of each b against the candidate list: (1_A * 1_{-C})[b]
    // approximates |{c in C : b + c in A}|.
    let f = popular_sums_approx(&sv_a, &sv_c.negate(), 0.25, approx)?;
    let cut = 0.5 * cands.len() as f64;
    let (bad, good): (Vec<i64>, Vec<i64>) =
        b.iter().partition(|&&x| (f.get(x) as f64) <= cut);
    let mut counts = vec![0u64; cands.len()];
    if !good.is_empty() {
        let part = conv_partial(&sv_a, &SparseVec::from_set(&good).negate(), &cands)?;
        for (acc, v) in counts.iter_mut().zip(part) {
            *acc += v;
        }
    }
    if !bad.is_empty() {
        let neg_c: Vec<i64> = cands.iter().map(|&c| -c).collect();
        let csd = count_small_doubling(&cands, &bad, &a, &neg_c)?;
        for (acc, (_, v)) in counts.iter_mut().zip(csd.a_counts) {
            *acc += v;
        }
    }
    Ok(cands
        .into_iter()
        .zip(counts)
        .filter(|&(_, v)| v >= t)
        .map(|(c, _)| c)
        .collect())
}

/// Fold a set modulo `m`, duplicated once upward so that a linear
/// correlation against residues emulates the cyclic one.
fn fold_scene(a: &[i64], m: i64) -> SparseVec {
    let mut v: Vec<i64> = a.iter().map(|&x| x.rem_euclid(m)).collect();
    v.sort_unstable();
    v.dedup();
    let mut both = v.clone();
    both.extend(v.iter().map(|&x| x + m));
    SparseVec::from_set(&both)
}

/// Residue multiset of `B` modulo `m` (multiplicities preserved: folding
/// may only increase correlations, never decrease them).
fn fold_pattern(b: &[i64], m: i64) -> Result<SparseVec> {
    SparseVec::from_entries(b.iter().map(|&x| (x.rem_euclid(m), 1)).collect())
}

/// Exact correlation of folded scene and pattern at the given residues.
fn folded_counts(
    a_fold: &SparseVec,
    b_fold: &SparseVec,
    targets: &[i64],
) -> Result<Vec<u64>> {
    conv_partial(a_fold, &b_fold.negate(), targets)
}

/// The deterministic scaling pipeline shared by point-set and string
/// matching.  `allowed` optionally restricts candidate residues per level
/// (given the level modulus, return the admissible residues).
fn scaled_pipeline(
    a: &[i64],
    b: &[i64],
    t: u64,
    r: u64,
    allowed: Option<&dyn Fn(i64) -> Vec<i64>>,
    approx: &ApproxParams,
) -> Result<Vec<i64>> {
    let n_univ = a
        .iter()
        .chain(b)
        .map(|&x| x.unsigned_abs())
        .max()
        .unwrap()
        .max(1);
    // The last modulus must exceed the spread of c + b - a so the final
    // folded counts coincide with the true ones.
    let m_final_target = 8 * n_univ as i64 + 2;
    let mr = find_modulus(b, n_univ + 1)?;
    let mut moduli = vec![(mr.modulus as i64).min(m_final_target)];
    while *moduli.last().unwrap() < m_final_target {
        moduli.push(moduli.last().unwrap() * 2);
    }

    let restrict = |m: i64, cands: Vec<i64>| -> Vec<i64> {
        match allowed {
            None => cands,
            Some(f) => {
                let keep: HashSet<i64> = f(m).into_iter().collect();
                cands.into_iter().filter(|c| keep.contains(c)).collect()
            }
        }
    };

    // Level 0: every admissible residue is a candidate; counts by one dense
    // cyclic correlation.
    let m0 = moduli[0];
    let mut prev_a = fold_scene(a, m0);
    let mut prev_b = fold_pattern(b, m0)?;
    let base: Vec<i64> = restrict(m0, (0..m0).collect());
    let mut cands: Vec<i64> = {
        let f = conv_dense(&prev_a, &prev_b.negate())?;
        base.into_iter().filter(|&c| {
            let lin = f.get(c);
            lin >= t
        }).collect()
    };
    let mut prev_m = m0;

    for &m in &moduli[1..] {
        // Lift: a residue modulo m reduces to its class modulo m/2.
        let lifted: Vec<i64> = cands
            .iter()
            .flat_map(|&c| [c, c + prev_m])
            .filter(|&c| c < m)
            .collect();
        let lifted = normalize_set(restrict(m, lifted));
        let a_fold = fold_scene(a, m);
        let b_fold = fold_pattern(b, m)?;
        let counts: Vec<u64> = if lifted.is_empty() {
            Vec::new()
        } else if (lifted.len() as u128) * (r.max(1) as u128) < (a_fold.nnz() / 2) as u128 {
            folded_counts(&a_fold, &b_fold, &lifted)?
        } else {
            // Large candidate list: split the pattern residues by their
            // popularity against the previous level's candidates.
            let f = popular_sums_approx(
                &prev_a,
                &SparseVec::from_set(&cands).negate(),
                0.25,
                approx,
            )?;
            let cut = 0.5 * cands.len() as f64;
            let bad_prev: HashSet<i64> = prev_b
                .entries()
                .iter()
                .map(|&(x, _)| x)
                .filter(|&x| (f.get(x) as f64) <= cut)
                .collect();
            let mut good: Vec<(i64, u64)> = Vec::new();
            let mut bad_mult: HashMap<i64, u64> = HashMap::new();
            for &x in b {
                let rm = x.rem_euclid(m);
                if bad_prev.contains(&rm.rem_euclid(prev_m)) {
                    *bad_mult.entry(rm).or_insert(0) += 1;
                } else {
                    good.push((rm, 1));
                }
            }
            let mut counts = vec![0u64; lifted.len()];
            if !good.is_empty() {
                let gv = SparseVec::from_entries(good)?;
                for (acc, v) in counts.iter_mut().zip(folded_counts(&a_fold, &gv, &lifted)?) {
                    *acc += v;
                }
            }
            // The structured counter works on sets; peel the multiset into
            // multiplicity layers {rho : mult >= j}.
            let max_mult = bad_mult.values().copied().max().unwrap_or(0);
            let scene: Vec<i64> = a_fold.support();
            let neg_cands: Vec<i64> = lifted.iter().map(|&c| -c).collect();
            for layer in 1..=max_mult {
                let set: Vec<i64> = bad_mult
                    .iter()
                    .filter(|&(_, &c)| c >= layer)
                    .map(|(&x, _)| x)
                    .collect();
                let csd = count_small_doubling(&lifted, &set, &scene, &neg_cands)?;
                for (acc, (_, v)) in counts.iter_mut().zip(csd.a_counts) {
                    *acc += v;
                }
            }
            counts
        };
        cands = lifted
            .into_iter()
            .zip(counts)
            .filter(|&(_, v)| v >= t)
            .map(|(c, _)| c)
            .collect();
        prev_a = a_fold;
        prev_b = b_fold;
        prev_m = m;
    }

    // Map final residues back to translations.
    let m_last = *moduli.last().unwrap();
    let lo = a.iter().min().unwrap() - b.iter().max().unwrap();
    let hi = a.iter().max().unwrap() - b.iter().min().unwrap();
    let mut out: Vec<i64> = cands
        .into_iter()
        .filter_map(|c| {
            let real = if c > hi { c - m_last } else { c };
            (real >= lo && real <= hi).then_some(real)
        })
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Exact occurrence list with no candidate promise and no randomness.
pub fn constellation_deterministic(
    a: &[i64],
    b: &[i64],
    k: u64,
    cfg: &ConstellationConfig,
) -> Result<Vec<i64>> {
    let a = normalize_set(a.to_vec());
    let b = normalize_set(b.to_vec());
    check_nonempty(&a, &b)?;
    let t = threshold(b.len(), k, cfg.convention)?;
    if k as f64 > 0.3 * b.len() as f64 {
        // Large budget: occurrences are popular sums of A + (-B).
        let neg_b: Vec<i64> = b.iter().map(|&x| -x).collect();
        let k_arg = b.len() as u64 / t + u64::from(b.len() as u64 % t != 0);
        let ps = popular_sums_exact(&neg_b, &a, k_arg, &cfg.popular)?;
        return Ok(ps
            .counts
            .iter()
            .filter(|&(_, &v)| v >= t)
            .map(|(&c, _)| c)
            .collect());
    }
    let ratio = a.len() as f64 / b.len() as f64;
    let r = cfg
        .r_override
        .unwrap_or(((k as f64 / (ratio * ratio)).cbrt().ceil() as u64).clamp(1, k.max(1)));
    scaled_pipeline(&a, &b, t, r, None, &cfg.approx)
}

/// `k`-mismatch string matching with wildcards in the pattern, by
/// reduction to the constellation problem; returns all matching shifts.
pub fn wildcard_match(
    text: &[u32],
    pattern: &[Option<u32>],
    k: u64,
    cfg: &ConstellationConfig,
) -> Result<Vec<usize>> {
    let (n, m) = (text.len(), pattern.len());
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(
            "pattern must be nonempty and no longer than the text".into(),
        ));
    }
    let concrete = pattern.iter().flatten().count() as u64;
    if k >= concrete {
        // Every shift matches; no point set needed.
        return Ok((0..=n - m).collect());
    }
    // Dense symbol ids, plus three shared sentinel symbols.
    let mut ids: HashMap<u32, i64> = HashMap::new();
    for &c in text.iter().chain(pattern.iter().flatten()) {
        let next = ids.len() as i64;
        ids.entry(c).or_insert(next);
    }
    let sentinel = ids.len() as i64;
    let stretch = 10 * 4 * n as i64;
    let point = |sym: i64, pos: i64| sym * stretch + pos;
    let mut a = Vec::with_capacity(4 * n);
    for (i, &c) in text.iter().enumerate() {
        a.push(point(ids[&c], 4 * i as i64));
        for j in 1..4 {
            a.push(point(sentinel + j, 4 * i as i64 + j));
        }
    }
    let mut b = Vec::with_capacity(4 * m);
    for (j, p) in pattern.iter().enumerate() {
        if let Some(c) = p {
            b.push(point(ids[c], 4 * j as i64));
        }
        for l in 1..4 {
            b.push(point(sentinel + l, 4 * j as i64 + l));
        }
    }
    let t = threshold(b.len(), k, Convention::AtMost)?;
    let r = ((k as f64).sqrt().ceil() as u64).max(1);
    let shifts: Vec<i64> = (0..=(n - m) as i64).map(|s| 4 * s).collect();
    let allowed = |mi: i64| -> Vec<i64> {
        let mut v: Vec<i64> = shifts.iter().map(|&s| s.rem_euclid(mi)).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let occ = scaled_pipeline(&a, &b, t, r, Some(&allowed), &cfg.approx)?;
    Ok(occ
        .into_iter()
        .filter(|&c| c >= 0 && c % 4 == 0 && (c / 4) as usize <= n - m)
        .map(|c| (c / 4) as usize)
        .collect())
}
