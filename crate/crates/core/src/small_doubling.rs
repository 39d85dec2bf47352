//! Exact 3SUM counting for instances with a structured shift set.
//!
//! Given sets `A`, `B`, `C` and a set `S` such that every `b` in `B` is close
//! to `S` in the additive sense (the intended regime is `|A + S|` not much
//! larger than `|A|`), [`count_small_doubling`] computes exactly
//!
//! * `(1_A * 1_B)[c]` for every `c` in `C`, and
//! * `(1_C * 1_{-B})[a]` for every `a` in `A`,
//!
//! faster than a generic convolution when `A + S` is small. The algorithm
//! reduces modulo a collision-light modulus `M` of the order of `|S|`
//! ([`crate::modular::find_modulus`]), covers `Z_M` by translates of
//! `S mod M` ([`crate::modular::find_cover`]), partitions the targets into
//! load-balanced classes, and within each class groups `B` by the difference
//! `d_b = b - s_b` to a canonical shift `s_b` in `S`. Each group is then
//! counted either by direct enumeration or by a sparse convolution, whichever
//! is cheaper under a globally balanced size threshold.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::modular::{find_cover, find_modulus, partition_targets};
use crate::vecmath::{conv_partial, conv_sparse, SparseVec};
use crate::{normalize_set, Error, Result};

/// Exact per-target counts; see the module docs.
#[derive(Clone, Debug, Default)]
pub struct ThreeSumCounts {
    /// `c -> (1_A * 1_B)[c]` for every requested target `c`.
    pub c_counts: BTreeMap<i64, u64>,
    /// `a -> (1_C * 1_{-B})[a]` for every element `a` of `A`.
    pub a_counts: BTreeMap<i64, u64>,
}

struct ClassData {
    /// Groups of `B` keyed by the canonical difference `d`.
    b_groups: HashMap<i64, Vec<i64>>,
    /// Targets keyed by the canonical difference `d` they can arise from.
    c_groups: HashMap<i64, Vec<i64>>,
}

/// Exact 3SUM counting against a structured shift set; see the module docs.
/// All four arguments are treated as sets (duplicates ignored).
pub fn count_small_doubling(
    a: &[i64],
    b: &[i64],
    c: &[i64],
    s: &[i64],
) -> Result<ThreeSumCounts> {
    let a = normalize_set(a.to_vec());
    let b = normalize_set(b.to_vec());
    let c = normalize_set(c.to_vec());
    let s = normalize_set(s.to_vec());
    if s.is_empty() {
        return Err(Error::InvalidParameter("shift set must be nonempty".into()));
    }
    let mut out = ThreeSumCounts::default();
    for &x in &c {
        out.c_counts.insert(x, 0);
    }
    for &x in &a {
        out.a_counts.insert(x, 0);
    }
    if a.is_empty() || b.is_empty() || c.is_empty() {
        return Ok(out);
    }
    let universe = a
        .iter()
        .chain(&b)
        .chain(&c)
        .chain(&s)
        .map(|&x| x.unsigned_abs())
        .max()
        .unwrap()
        .max(1)
        + 1;
    let mr = find_modulus(&s, universe)?;
    let m = mr.modulus;
    let shat: Vec<u64> = {
        let mut v: Vec<u64> = s.iter().map(|&x| x.rem_euclid(m as i64) as u64).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let cover = find_cover(&shat, m)?;
    let a_plus_s = conv_sparse(&SparseVec::from_set(&a), &SparseVec::from_set(&s))?.support();
    let classes = partition_targets(&a_plus_s, &cover, &c)?;

    // Smallest element of S in each residue class mod M (S is sorted).
    let mut first_s: Vec<Option<i64>> = vec![None; m as usize];
    for &x in &s {
        let r = x.rem_euclid(m as i64) as usize;
        if first_s[r].is_none() {
            first_s[r] = Some(x);
        }
    }
    // Bucket A + S by residue mod M for target-group construction.
    let mut sum_buckets: HashMap<u64, Vec<i64>> = HashMap::new();
    for &x in &a_plus_s {
        sum_buckets
            .entry(x.rem_euclid(m as i64) as u64)
            .or_default()
            .push(x);
    }

    let mut class_data: Vec<ClassData> = Vec::with_capacity(classes.len());
    let mut total_b: u128 = 0;
    let mut total_c: u128 = 0;
    for class in &classes {
        let phi = class.shift;
        let delta_phi: Vec<u64> = cover.deltas.iter().map(|&d| (d + phi) % m).collect();
        // Canonical difference for every b: d_b = b - s_b where s_b is the
        // smallest shift with (b - s_b) mod M in Delta + phi. One exists
        // because (S + Delta) mod M covers Z_M.
        let mut b_groups: HashMap<i64, Vec<i64>> = HashMap::new();
        for &bb in &b {
            let mut s_b: Option<i64> = None;
            for &dp in &delta_phi {
                let r = (bb - dp as i64).rem_euclid(m as i64) as usize;
                if let Some(sv) = first_s[r] {
                    s_b = Some(match s_b {
                        Some(cur) => cur.min(sv),
                        None => sv,
                    });
                }
            }
            let s_b = s_b.ok_or_else(|| {
                Error::Invariant(format!("no canonical shift for element {bb}"))
            })?;
            b_groups.entry(bb - s_b).or_default().push(bb);
        }
        // Target groups: c belongs to group d for every d = c - x with
        // x in A + S and d mod M in Delta + phi.
        let delta_set: HashSet<u64> = delta_phi.iter().copied().collect();
        let mut c_groups: HashMap<i64, Vec<i64>> = HashMap::new();
        for &cc in &class.targets {
            for &dp in &delta_phi {
                let r = (cc - dp as i64).rem_euclid(m as i64) as u64;
                if let Some(bucket) = sum_buckets.get(&r) {
                    for &x in bucket {
                        let d = cc - x;
                        debug_assert!(delta_set.contains(&(d.rem_euclid(m as i64) as u64)));
                        c_groups.entry(d).or_default().push(cc);
                    }
                }
            }
        }
        total_b += b.len() as u128;
        total_c += c_groups.values().map(|v| v.len() as u128).sum::<u128>();
        class_data.push(ClassData { b_groups, c_groups });
    }

    // Enumeration/convolution threshold balancing the two cost terms.
    let x_threshold = ((total_b as f64 * a_plus_s.len() as f64) / (total_c.max(1) as f64))
        .sqrt()
        .max(1.0);
    let a_set: HashSet<i64> = a.iter().copied().collect();
    let sv_a = SparseVec::from_set(&a);
    for data in &class_data {
        let mut ds: Vec<i64> = data.b_groups.keys().copied().collect();
        ds.sort_unstable();
        for d in ds {
            let bd = &data.b_groups[&d];
            let Some(cd) = data.c_groups.get(&d) else {
                continue;
            };
            if (bd.len() as f64) <= x_threshold {
                for &bb in bd {
                    for &cc in cd {
                        let aa = cc - bb;
                        if a_set.contains(&aa) {
                            *out.c_counts.get_mut(&cc).unwrap() += 1;
                            *out.a_counts.get_mut(&aa).unwrap() += 1;
                        }
                    }
                }
            } else {
                let sv_bd = SparseVec::from_set(bd);
                let conv = conv_sparse(&sv_a, &sv_bd)?;
                for &cc in cd {
                    *out.c_counts.get_mut(&cc).unwrap() += conv.get(cc);
                }
                let sv_cd = SparseVec::from_set(cd);
                let vals = conv_partial(&sv_cd, &sv_bd.negate(), &a)?;
                for (&aa, v) in a.iter().zip(vals) {
                    *out.a_counts.get_mut(&aa).unwrap() += v;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::bf_conv;
    use proptest::prelude::*;

    fn check(a: &[i64], b: &[i64], c: &[i64], s: &[i64]) {
        let out = count_small_doubling(a, b, c, s).unwrap();
        let (sa, sb, sc) = (
            SparseVec::from_set(a),
            SparseVec::from_set(b),
            SparseVec::from_set(c),
        );
        let conv_ab = bf_conv(&sa, &sb);
        for (&cc, &v) in &out.c_counts {
            assert_eq!(v, conv_ab.get(cc), "c-count mismatch at {cc}");
        }
        let conv_cb = bf_conv(&sc, &sb.negate());
        for (&aa, &v) in &out.a_counts {
            assert_eq!(v, conv_cb.get(aa), "a-count mismatch at {aa}");
        }
    }

    #[test]
    fn progression_shift_set() {
        // S an arithmetic progression: |A + S| stays near |A|.
        let s: Vec<i64> = (0..64).map(|i| i * 8).collect();
        let a: Vec<i64> = (0..300).map(|i| i * 3 + 11).collect();
        let b: Vec<i64> = s.iter().map(|&x| x + 5).collect();
        let c: Vec<i64> = (0..200).map(|i| i * 7 + 40).collect();
        check(&a, &b, &c, &s);
    }

    #[test]
    fn negative_elements() {
        let s: Vec<i64> = (-20..20).map(|i| i * 4).collect();
        let a: Vec<i64> = (-50..50).collect();
        let b: Vec<i64> = (-30..10).map(|i| i * 4 + 1).collect();
        let c: Vec<i64> = (-40..60).map(|i| i * 2).collect();
        check(&a, &b, &c, &s);
    }

    #[test]
    fn singleton_shift() {
        check(&[1, 5, 9], &[2, 6], &[3, 7, 11, 15], &[2]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn random_instances(
            a in proptest::collection::hash_set(0i64..3000, 1..120),
            b_off in proptest::collection::hash_set(0i64..40, 1..20),
            c in proptest::collection::hash_set(0i64..6000, 1..120),
            step in 1i64..9,
        ) {
            // S structured, B a perturbation of S.
            let s: Vec<i64> = (0..32).map(|i| i * step).collect();
            let b: Vec<i64> = b_off.into_iter().map(|x| x * step + 3).collect();
            let a: Vec<i64> = a.into_iter().collect();
            let c: Vec<i64> = c.into_iter().collect();
            check(&a, &b, &c, &s);
        }
    }
}
