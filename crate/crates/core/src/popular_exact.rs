//! Exact reporting of all popular sums.
//!
//! # Mathematical background
//!
//! A sum `s` is `k`-popular for sets `A`, `B` when it has at least `|A| / k`
//! representations `s = a + b`.  A dense convolution finds all of them in
//! time quasilinear in the universe size; the point of this module is to do
//! it in time governed by `|A|`, `|B|` and `k` instead, while staying exact.
//!
//! The strategy combines the approximate counter with structure-aware exact
//! counting:
//!
//! 1. **Peeling.**  While the working set still has additive energy above
//!    `1.5 |Â|^3 / K` (checked with [`approx_energy`]), the constructive
//!    Balog–Szemerédi–Gowers decomposition ([`bsg_decompose`]) splits off a
//!    part `A_i` together with a companion `B_i` certifying that `A_i + B_i`
//!    is small; the cap is `K = |A|^{3/64}` unless overridden.  What remains
//!    after the loop has low energy or is small.
//! 2. **Candidate generation.**  A one-sided approximate convolution
//!    produces a candidate list `S̃` containing every `k`-popular sum.
//! 3. **Exact counting.**  Candidates whose approximate count within some
//!    part `A_i` is significant are counted exactly through
//!    [`count_small_doubling`] using `B_i` as the structured shift set;
//!    leftover candidates are counted by an exact partial convolution.
//! 4. **Filtering.** The exact counts decide membership: `s` is reported
//!    iff `k * count(s) >= |A|`, so the output matches a full convolution
//!    bit for bit.
//!
//! Every reported sum carries its exact representation count.

use crate::approx_count::{approx_energy, popular_sums_approx, ApproxParams};
use crate::bsg::{bsg_decompose, BsgConfig};
use crate::small_doubling::count_small_doubling;
use crate::vecmath::{conv_partial, SparseVec};
use crate::{normalize_set, Error, Result};
use std::collections::BTreeMap;

/// Tuning parameters for [`popular_sums_exact`].
#[derive(Clone, Debug)]
pub struct PopularExactConfig {
    /// Override for the energy cap `K` driving the peeling loop (default
    /// `|A|^{3/64}`).  Values below roughly `2.25` never peel, because every
    /// set satisfies the low-energy exit `E(Â) <= 1.5 |Â|^3 / K` then.
    pub k_cap_override: Option<f64>,
    /// Configuration of the decomposition used for peeling.
    pub bsg: BsgConfig,
    /// Parameters of the approximate counting primitives.
    pub approx: ApproxParams,
}

impl Default for PopularExactConfig {
    fn default() -> Self {
        Self {
            k_cap_override: None,
            bsg: BsgConfig {
                r: 3,
                ..BsgConfig::default()
            },
            approx: ApproxParams::default(),
        }
    }
}

/// Result of [`popular_sums_exact`].
#[derive(Clone, Debug, Default)]
pub struct PopularSums {
    /// All sums with at least `|A| / k` representations, sorted.
    pub sums: Vec<i64>,
    /// Exact representation count `(1_A * 1_B)[s]` for each reported sum.
    pub counts: BTreeMap<i64, u64>,
    /// Number of high-energy parts split off by the peeling loop.
    pub parts: usize,
}

/// Report every sum `s` with `(1_A * 1_B)[s] >= |A| / k`, together with its
/// exact count.  Both inputs are treated as sets.
pub fn popular_sums_exact(
    a: &[i64],
    b: &[i64],
    k: u64,
    cfg: &PopularExactConfig,
) -> Result<PopularSums> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "popularity divisor k must be positive".into(),
        ));
    }
    let a = normalize_set(a.to_vec());
    let b = normalize_set(b.to_vec());
    let n = a.len();
    if a.is_empty() || b.is_empty() {
        return Ok(PopularSums::default());
    }
    // No sum has more than |B| representations.
    if (b.len() as u128) * (k as u128) < n as u128 {
        return Ok(PopularSums::default());
    }
    let k_cap = cfg
        .k_cap_override
        .unwrap_or_else(|| (n as f64).powf(3.0 / 64.0))
        .max(1.0);

    // Peel high-energy parts.
    let mut parts: Vec<(Vec<i64>, Vec<i64>)> = Vec::new();
    let mut rest = a.clone();
    for _ in 0..64 {
        if rest.len() as f64 <= n as f64 / k_cap.cbrt() {
            break;
        }
        let est = approx_energy(&rest, (1.0 / (2.0 * k_cap)).min(1.0), &cfg.approx)?;
        if est <= 1.5 * (rest.len() as f64).powi(3) / k_cap {
            break;
        }
        let out = bsg_decompose(&rest, k_cap, &cfg.bsg)?;
        let removed: std::collections::HashSet<i64> = out.a_prime.iter().copied().collect();
        rest.retain(|v| !removed.contains(v));
        parts.push((out.a_prime, out.b_prime));
    }

    // Candidate sums: one-sided approximation at error |A| / (4k), so every
    // k-popular sum clears the 3|A|/(4k) cut.
    let sv_a = SparseVec::from_set(&a);
    let sv_b = SparseVec::from_set(&b);
    let eps_s = (n as f64 / (4.0 * k as f64 * b.len() as f64)).min(1.0);
    let f = popular_sums_approx(&sv_a, &sv_b, eps_s, &cfg.approx)?;
    let s_cut = 3.0 * n as f64 / (4.0 * k as f64);
    let candidates: Vec<i64> = f
        .entries()
        .iter()
        .filter(|&&(_, v)| v as f64 >= s_cut)
        .map(|&(s, _)| s)
        .collect();

    // Assign each candidate to the first part where its approximate count
    // within the part is significant; the rest go to the direct branch.
    let mut assigned: Vec<Vec<i64>> = vec![Vec::new(); parts.len()];
    let mut leftover: Vec<i64> = Vec::new();
    let part_approx: Vec<SparseVec> = parts
        .iter()
        .map(|(ai, _)| {
            let eps = (ai.len() as f64 / (12.0 * k as f64 * b.len() as f64)).min(1.0);
            popular_sums_approx(&SparseVec::from_set(ai), &sv_b, eps, &cfg.approx)
        })
        .collect::<Result<_>>()?;
    for &s in &candidates {
        let home = parts
            .iter()
            .zip(&part_approx)
            .position(|((ai, _), g)| g.get(s) as f64 >= ai.len() as f64 / (6.0 * k as f64));
        match home {
            Some(i) => assigned[i].push(s),
            None => leftover.push(s),
        }
    }

    // Exact counts: structured parts via the small-doubling counter (the
    // companion set B_i is the structured shift set), leftovers via an
    // exact partial convolution.
    let neg_b: Vec<i64> = b.iter().map(|&x| -x).collect();
    let mut exact: BTreeMap<i64, u64> = BTreeMap::new();
    for ((_, bi), targets) in parts.iter().zip(&assigned) {
        if targets.is_empty() {
            continue;
        }
        let counts = count_small_doubling(targets, &neg_b, &a, bi)?;
        exact.extend(counts.a_counts);
    }
    if !leftover.is_empty() {
        let vals = conv_partial(&sv_a, &sv_b, &leftover)?;
        exact.extend(leftover.iter().copied().zip(vals));
    }

    let mut sums = Vec::new();
    let mut counts = BTreeMap::new();
    for (&s, &cnt) in &exact {
        if (cnt as u128) * (k as u128) >= n as u128 {
            sums.push(s);
            counts.insert(s, cnt);
        }
    }
    Ok(PopularSums {
        sums,
        counts,
        parts: parts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::bf_conv;

    /// Oracle: popular sums straight from the full convolution.
    fn oracle(a: &[i64], b: &[i64], k: u64) -> (Vec<i64>, BTreeMap<i64, u64>) {
        let f = bf_conv(&SparseVec::from_set(a), &SparseVec::from_set(b));
        let n = normalize_set(a.to_vec()).len() as u128;
        let mut sums = Vec::new();
        let mut counts = BTreeMap::new();
        for &(s, v) in f.entries() {
            if v as u128 * k as u128 >= n {
                sums.push(s);
                counts.insert(s, v);
            }
        }
        (sums, counts)
    }

    fn check(a: &[i64], b: &[i64], k: u64, cfg: &PopularExactConfig) {
        let got = popular_sums_exact(a, b, k, cfg).unwrap();
        let (sums, counts) = oracle(a, b, k);
        assert_eq!(got.sums, sums, "popular sums differ at k = {k}");
        assert_eq!(got.counts, counts, "counts differ at k = {k}");
    }

    fn pseudo_random(n: usize, span: u64, seed: u64) -> Vec<i64> {
        let mut state = seed | 1;
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            v.push((state % span) as i64);
        }
        normalize_set(v)
    }

    #[test]
    fn matches_oracle_random() {
        let cfg = PopularExactConfig::default();
        for seed in [3, 17] {
            let a = pseudo_random(300, 4000, seed);
            let b = pseudo_random(250, 4000, seed + 1);
            for k in [1, 2, 8, b.len() as u64] {
                check(&a, &b, k, &cfg);
            }
        }
    }

    #[test]
    fn matches_oracle_structured() {
        let cfg = PopularExactConfig::default();
        let a: Vec<i64> = (0..512).collect();
        let b: Vec<i64> = (0..256).map(|i| i * 2 - 100).collect();
        for k in [1, 2, 8, 256] {
            check(&a, &b, k, &cfg);
        }
    }

    #[test]
    fn peeling_path_matches_oracle() {
        // Force the peeling loop with a cap override; the AP has energy
        // (2/3)|A|^3 > 1.5 |A|^3 / 4, so one part is split off (the
        // decomposition takes its small-set fallback at this size, which
        // still exercises assignment and the structured readout).
        let cfg = PopularExactConfig {
            k_cap_override: Some(4.0),
            ..PopularExactConfig::default()
        };
        let a: Vec<i64> = (0..512).collect();
        let b: Vec<i64> = (0..300).map(|i| i * 3) .collect();
        for k in [2, 4, 64] {
            let got = popular_sums_exact(&a, &b, k, &cfg).unwrap();
            assert!(got.parts >= 1);
            let (sums, counts) = oracle(&a, &b, k);
            assert_eq!(got.sums, sums);
            assert_eq!(got.counts, counts);
        }
    }

    #[test]
    fn full_decomposition_part_matches_oracle() {
        // Large enough that the decomposition runs its non-fallback path
        // inside the peel (r = 1, K = 2.5, |A| = 8192 >= 192 K^4).
        let cfg = PopularExactConfig {
            k_cap_override: Some(2.5),
            bsg: BsgConfig {
                r: 1,
                ..BsgConfig::default()
            },
            ..PopularExactConfig::default()
        };
        let a: Vec<i64> = (0..8192).collect();
        let b: Vec<i64> = (0..512).map(|i| i * 5 + 7).collect();
        let got = popular_sums_exact(&a, &b, 16, &cfg).unwrap();
        assert!(got.parts >= 1);
        let (sums, counts) = oracle(&a, &b, 16);
        assert_eq!(got.sums, sums);
        assert_eq!(got.counts, counts);
    }

    #[test]
    fn small_b_early_exit_and_validation() {
        assert!(matches!(
            popular_sums_exact(&[1, 2], &[3], 0, &PopularExactConfig::default()),
            Err(Error::InvalidParameter(_))
        ));
        // |B| * k < |A|: nothing can be popular.
        let out = popular_sums_exact(&(0..100).collect::<Vec<i64>>(), &[5], 3,
            &PopularExactConfig::default())
        .unwrap();
        assert!(out.sums.is_empty());
    }
}

