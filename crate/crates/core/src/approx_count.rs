//! Deterministic approximate counting of popular sums.
//!
//! The central routine, [`popular_sums_approx`], computes a sparse vector `f`
//! with `|f - 1_A * 1_B|_inf <= eps * |B|` whose support size is
//! `O(eps^-1 * |A| * log^2 N)`: only "popular" sums (those hit by at least an
//! `eps/2` fraction of `B`) can appear. It recurses on the instance folded
//! modulo `N / r`, then lifts approximate counts back up level by level using
//! [`approx_mod_buckets`], a one-sided modular bucket counter that isolates
//! each target in its own residue class modulo a product of carefully chosen
//! primes.
//!
//! On top of these sit [`approx_3sum_counts`] (per-target 3SUM counts),
//! [`approx_4sum_count`] (number of quadruples `a + b = c + d` across four
//! multisets) and [`approx_energy`] (additive energy of a set).

use std::collections::HashMap;

use crate::vecmath::{conv_dense, conv_partial, conv_cyclic, SparseVec};
use crate::{log2f, primes_in_range, Error, Result};

/// Dense-extent threshold under which the bucket counter keeps one exact
/// convolution of the operands around for cheap modular readouts.
const DENSE_CACHE_CAP: i64 = 1 << 22;

/// Tuning parameters; the defaults reproduce the analyzed behavior.
#[derive(Clone, Debug)]
pub struct ApproxParams {
    /// Universe size below which recursion switches to an exact dense
    /// convolution.
    pub base_case_threshold: u64,
    /// Override for the recursion arity `r` (default `2^ceil(sqrt(log2 N))`).
    pub recursion_branch: Option<u64>,
    /// Override for the prime window scale `P` of the bucket counter
    /// (default `2^ceil(sqrt(log2 N))`).
    pub prime_window: Option<u64>,
    /// Constant in the advertised support bound
    /// `|f|_0 <= sparsity_constant * eps^-1 * |A| * log2(N)^2`.
    pub sparsity_constant: f64,
    /// Switch to an exact convolution (pairwise sparse or dense transform,
    /// whichever is cheaper) whenever its cost model undercuts the
    /// recursion's `eps^-1 |A| log^2 N * min(|A|, |B|)` readout estimate; the
    /// exact answer always satisfies the approximation contract.  Disable to
    /// force the recursive path regardless of cost.
    pub exact_shortcut: bool,
}

impl Default for ApproxParams {
    fn default() -> Self {
        Self {
            base_case_threshold: 64,
            recursion_branch: None,
            prime_window: None,
            sparsity_constant: 8.0,
            exact_shortcut: true,
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "accuracy parameter must lie in (0, 1], got {eps}"
        )));
    }
    Ok(())
}

/// Approximate the convolution `1_A * 1_B` within additive error `eps * |B|`
/// per entry, reporting only entries of value at least `(eps/2) * |B|`.
pub fn popular_sums_approx(
    a: &SparseVec,
    b: &SparseVec,
    eps: f64,
    params: &ApproxParams,
) -> Result<SparseVec> {
    check_eps(eps)?;
    if a.is_empty() || b.is_empty() {
        return Ok(SparseVec::new());
    }
    let (oa, ob) = (a.min_index().unwrap(), b.min_index().unwrap());
    let an = a.shift(-oa);
    let bn = b.shift(-ob);
    let f = psa_rec(&an, &bn, eps, params, 0)?;
    Ok(f.shift(oa + ob))
}

/// Recursive worker; operands have nonnegative indices.
fn psa_rec(
    a: &SparseVec,
    b: &SparseVec,
    eps: f64,
    params: &ApproxParams,
    depth: u32,
) -> Result<SparseVec> {
    if depth > 64 {
        return Err(Error::Invariant("recursion depth exceeded".into()));
    }
    let n = (a.max_index().unwrap().max(b.max_index().unwrap()) + 1) as u64;
    let mass_a = a.mass() as f64;
    let mass_b = b.mass() as f64;
    let cut = eps / 2.0 * mass_b;
    // Base case / exact shortcuts: when the support budget eps^-1 |A| reaches
    // the universe size, an exact dense convolution is affordable.  More
    // generally, an exact answer trivially honors the approximation contract,
    // so whenever a pairwise sparse pass (|A||B| work) or a dense transform
    // (N log N work) undercuts the recursion's readout estimate
    // (eps^-1 |A| log^2 N targets, each costing min(|A|, |B|)), the cheaper
    // exact route wins.
    let extent = (a.max_index().unwrap() + b.max_index().unwrap() + 1) as f64;
    let cost_pair = a.nnz() as f64 * b.nnz() as f64;
    let cost_dense = if extent <= DENSE_CACHE_CAP as f64 {
        extent * log2f(extent)
    } else {
        f64::INFINITY
    };
    let cost_rec =
        mass_a / eps * log2f(n as f64).powi(2) * (a.nnz().min(b.nnz()) as f64);
    let exact_wins = params.exact_shortcut && cost_pair.min(cost_dense) <= cost_rec;
    if n <= params.base_case_threshold || mass_a / eps >= n as f64 || exact_wins {
        let exact = if cost_dense < cost_pair {
            conv_dense(a, b)?
        } else {
            crate::vecmath::conv_sparse(a, b)?
        };
        return SparseVec::from_entries(
            exact
                .into_entries()
                .into_iter()
                .filter(|&(_, c)| c as f64 >= cut)
                .collect(),
        );
    }
    let r = params
        .recursion_branch
        .unwrap_or_else(|| 1u64 << (log2f(n as f64).sqrt().ceil() as u32))
        .max(2);
    let np = n.div_ceil(r) as i64;
    let f1 = psa_rec(
        &a.fold_mod(np)?,
        &b.fold_mod(np)?,
        eps / 16.0,
        params,
        depth + 1,
    )?;
    // Candidate residues: x in [0, np) where the folded approximation is live.
    let mut xs: Vec<i64> = f1
        .support()
        .into_iter()
        .map(|i| if i < np { i } else { i - np })
        .collect();
    xs.sort_unstable();
    xs.dedup();
    let lifts = 2 * r as i64;
    let mut out: Vec<(i64, u64)> = Vec::new();
    let max_iters = log2f(n as f64) as usize + 5;
    for _iter in 0..=max_iters {
        if xs.is_empty() {
            break;
        }
        let targets: Vec<i64> = xs
            .iter()
            .flat_map(|&x| (0..lifts).map(move |i| x + i * np))
            .collect();
        let g = mod_buckets_core(a, b, &targets, eps / (32.0 * r as f64), params)?;
        let mut remaining = Vec::with_capacity(xs.len());
        for &x in &xs {
            let s1 = (f1.get(x) + f1.get(x + np)) as f64;
            let s2: f64 = (0..lifts)
                .map(|i| g.get(&(x + i * np)).copied().unwrap_or(0) as u128)
                .sum::<u128>() as f64;
            if (s1 - s2).abs() <= eps / 4.0 * mass_b {
                for i in 0..lifts {
                    let v = g.get(&(x + i * np)).copied().unwrap_or(0);
                    if v as f64 >= cut {
                        out.push((x + i * np, v));
                    }
                }
            } else {
                remaining.push(x);
            }
        }
        let progressed = remaining.len() < xs.len();
        xs = remaining;
        if !progressed && !xs.is_empty() {
            // Safety valve: resolve stragglers exactly. The targeted readout
            // is exact, so the output contract still holds.
            let targets: Vec<i64> = xs
                .iter()
                .flat_map(|&x| (0..lifts).map(move |i| x + i * np))
                .collect();
            let vals = conv_partial(a, b, &targets)?;
            for (&t, v) in targets.iter().zip(vals) {
                if v as f64 >= cut {
                    out.push((t, v));
                }
            }
            xs.clear();
        }
    }
    SparseVec::from_entries(out)
}

/// One-sided modular bucket counts.
///
/// For each target `c`, returns an overestimate `g(c) >= (1_A * 1_B)[c]`; the
/// aggregate excess over all targets is bounded by
/// `min(eps * |B| * |C|, |A| * |B| * log2 N)`. Targets may be any integers.
pub fn approx_mod_buckets(
    a: &SparseVec,
    b: &SparseVec,
    c_targets: &[i64],
    eps: f64,
    params: &ApproxParams,
) -> Result<Vec<u64>> {
    check_eps(eps)?;
    if c_targets.is_empty() {
        return Ok(Vec::new());
    }
    if a.is_empty() || b.is_empty() {
        return Ok(vec![0; c_targets.len()]);
    }
    let (oa, ob) = (a.min_index().unwrap(), b.min_index().unwrap());
    let an = a.shift(-oa);
    let bn = b.shift(-ob);
    let shifted: Vec<i64> = c_targets.iter().map(|&c| c - oa - ob).collect();
    let mut dedup = shifted.clone();
    dedup.sort_unstable();
    dedup.dedup();
    let g = mod_buckets_core(&an, &bn, &dedup, eps, params)?;
    Ok(shifted
        .iter()
        .map(|c| g.get(c).copied().unwrap_or(0))
        .collect())
}

/// Number of ordered pairs `(c*, c)` with `c* != c`, `c*` in `cstar`, `c` in
/// `call`, congruent modulo `m`.
fn cong_pairs(cstar: &[i64], call: &[i64], m: u128) -> u128 {
    let mut residues: HashMap<i64, u64> = HashMap::new();
    for &c in call {
        *residues.entry(rem_u(c, m)).or_insert(0) += 1;
    }
    cstar
        .iter()
        .map(|&c| (residues[&rem_u(c, m)] - 1) as u128)
        .sum()
}

fn rem_u(c: i64, m: u128) -> i64 {
    (c as i128).rem_euclid(m as i128) as i64
}

/// Exact convolution values summed per needed residue class mod `m`, served
/// either from a cached dense convolution or from a cyclic transform.
struct ModReadout<'a> {
    a: &'a SparseVec,
    b: &'a SparseVec,
    dense: Option<SparseVec>,
    total: u128,
}

impl<'a> ModReadout<'a> {
    fn new(a: &'a SparseVec, b: &'a SparseVec) -> Result<Self> {
        let extent = a.max_index().unwrap() + b.max_index().unwrap() + 1;
        let dense = if extent <= DENSE_CACHE_CAP {
            Some(conv_dense(a, b)?)
        } else {
            None
        };
        Ok(Self {
            a,
            b,
            dense,
            total: a.mass() * b.mass(),
        })
    }

    /// Sum of convolution mass in each residue class `r(c) mod m`, for the
    /// given (not necessarily distinct) class representatives.
    fn class_sums(&self, reps: &[i64], m: u128) -> Result<Vec<u128>> {
        match &self.dense {
            Some(d) => {
                let mut needed: HashMap<i64, u128> = HashMap::new();
                for &c in reps {
                    needed.insert(rem_u(c, m), 0);
                }
                for &(i, v) in d.entries() {
                    if let Some(acc) = needed.get_mut(&rem_u(i, m)) {
                        *acc += v as u128;
                    }
                }
                Ok(reps.iter().map(|&c| needed[&rem_u(c, m)]).collect())
            }
            None => {
                let mu = u64::try_from(m)
                    .map_err(|_| Error::Budget("cyclic readout modulus exceeds u64".into()))?;
                let cyc = conv_cyclic(self.a, self.b, mu)?;
                Ok(reps
                    .iter()
                    .map(|&c| cyc[rem_u(c, m) as usize] as u128)
                    .collect())
            }
        }
    }
}

/// Core of the bucket counter; operands have nonnegative indices and targets
/// are sorted and distinct. Returns a map from target to its bucket count.
fn mod_buckets_core(
    a: &SparseVec,
    b: &SparseVec,
    c_all: &[i64],
    eps: f64,
    params: &ApproxParams,
) -> Result<HashMap<i64, u64>> {
    let mass_a = a.mass() as f64;
    let max_sum = (a.max_index().unwrap() + b.max_index().unwrap()) as u128;
    let n_env = (max_sum as u64 + 1)
        .max(c_all.iter().map(|&c| c.unsigned_abs()).max().unwrap_or(0) + 1)
        .max(2);
    // Any modulus beyond the sum range folds nothing: buckets become exact.
    let exact_m = max_sum + 1;
    let target_m = (mass_a / eps * log2f(n_env as f64) + 2.0 * c_all.len() as f64) as u128;
    let p_window = params
        .prime_window
        .unwrap_or_else(|| 1u64 << (log2f(n_env as f64).sqrt().ceil() as u32))
        .max(2) as f64;
    let t = p_window * log2f(n_env as f64) / p_window.log2();
    let mut wlo = (10.0 * t * t.ln().max(1.0)) as u64;
    wlo = wlo.max(3);
    let mut whi = 2 * wlo;
    let mut primes = primes_in_range(wlo, whi);
    while primes.is_empty() {
        wlo = wlo.saturating_sub(wlo / 2).max(2);
        whi = whi.saturating_mul(2);
        primes = primes_in_range(wlo, whi);
    }
    let readout = ModReadout::new(a, b)?;

    let mut g: HashMap<i64, u64> = HashMap::new();
    let mut cstar: Vec<i64> = c_all.to_vec();
    let outer_max = 2 * (log2f(c_all.len() as f64) as usize) + 12;
    for _outer in 0..outer_max {
        if cstar.is_empty() {
            break;
        }
        let mut m: u128 = 1;
        let mut coll = cong_pairs(&cstar, c_all, 1);
        let mut widened = false;
        for _round in 0..200 {
            if m >= exact_m {
                break;
            }
            if m >= target_m && coll * 2 <= cstar.len() as u128 {
                break;
            }
            // Score every candidate prime: require the collision count to
            // drop by a factor of the window scale, and among qualifying
            // primes minimize the total congruent (a, b, c) mass.
            let scored = crate::par::map_vec(&primes, |&p| -> Result<(u128, u128, bool)> {
                let mp = m.saturating_mul(p as u128);
                if mp >= exact_m {
                    return Ok((0, 0, true));
                }
                let cp = cong_pairs(&cstar, c_all, mp);
                Ok((cp, mp, false))
            });
            let mut choice: Option<(u128, u64, u128)> = None; // (score, p, coll')
            let mut relaxed_choice: Option<(u128, u64, u128)> = None;
            for (idx, s) in scored.into_iter().enumerate() {
                let (cp, mp, is_exact) = s?;
                let p = primes[idx];
                let strict_ok = is_exact || (cp as f64) * p_window <= coll as f64;
                let relaxed_ok = is_exact || cp < coll;
                if !strict_ok && !relaxed_ok {
                    continue;
                }
                let score = if is_exact {
                    self::readout_total(&readout)
                } else {
                    let sums = readout.class_sums(c_all, mp)?;
                    sums.iter().sum()
                };
                let cand = (score, p, cp);
                let slot = if strict_ok { &mut choice } else { &mut relaxed_choice };
                match slot {
                    Some(best) if *best <= cand => {}
                    _ => *slot = Some(cand),
                }
            }
            let picked = choice.or(relaxed_choice);
            let Some((_, p, cp)) = picked else {
                if widened {
                    return Err(Error::Invariant(
                        "no prime reduces target collisions".into(),
                    ));
                }
                widened = true;
                whi *= 2;
                primes = primes_in_range(wlo, whi);
                continue;
            };
            m = m.saturating_mul(p as u128);
            coll = if m >= exact_m { 0 } else { cp };
            if m >= 1u128 << 62 {
                break;
            }
        }
        // Targets alone in their residue class get their bucket count.
        let mut residues: HashMap<i64, u64> = HashMap::new();
        for &c in c_all {
            if !g.contains_key(&c) {
                *residues.entry(rem_u(c, m)).or_insert(0) += 1;
            }
        }
        let isolated: Vec<i64> = cstar
            .iter()
            .copied()
            .filter(|&c| residues[&rem_u(c, m)] == 1)
            .collect();
        if isolated.is_empty() || m >= exact_m {
            // Exact finish: read remaining targets directly.
            let vals = conv_partial(a, b, &cstar)?;
            for (&c, v) in cstar.iter().zip(vals) {
                g.insert(c, v);
            }
            cstar.clear();
            break;
        }
        let vals = readout.class_sums(&isolated, m)?;
        for (&c, v) in isolated.iter().zip(vals) {
            let v64 = u64::try_from(v)
                .map_err(|_| Error::Overflow("bucket count exceeds u64".into()))?;
            g.insert(c, v64);
        }
        cstar.retain(|c| !g.contains_key(c));
    }
    if !cstar.is_empty() {
        return Err(Error::Invariant(
            "bucket counter failed to isolate all targets".into(),
        ));
    }
    Ok(g)
}

fn readout_total(r: &ModReadout) -> u128 {
    r.total
}

/// Per-target approximate 3SUM counts: for each `c` in `c_targets`, an
/// estimate of `#{(a, b) in A x B : a + b = c}` within additive error
/// `eps * |B|`.
pub fn approx_3sum_counts(
    a: &SparseVec,
    b: &SparseVec,
    c_targets: &[i64],
    eps: f64,
    params: &ApproxParams,
) -> Result<Vec<u64>> {
    let f = popular_sums_approx(a, b, eps, params)?;
    Ok(c_targets.iter().map(|&c| f.get(c)).collect())
}

/// Approximate number of quadruples `(a, b, c, d) in A x B x C x D` with
/// `a + b = c + d`, within additive error `eps * (|A| + |C|) * |B| * |D|`.
pub fn approx_4sum_count(
    a: &SparseVec,
    b: &SparseVec,
    c: &SparseVec,
    d: &SparseVec,
    eps: f64,
    params: &ApproxParams,
) -> Result<f64> {
    check_eps(eps)?;
    if a.is_empty() || b.is_empty() || c.is_empty() || d.is_empty() {
        return Ok(0.0);
    }
    let span = |x: &SparseVec, y: &SparseVec| -> u64 {
        ((x.max_index().unwrap() - x.min_index().unwrap())
            + (y.max_index().unwrap() - y.min_index().unwrap())) as u64
            + 1
    };
    let n = span(a, b).max(span(c, d)).max(2);
    let lg = log2f(n as f64);
    // The two inner approximations each contribute error on a support of size
    // O(eps^-1 * mass * log^2 N); dividing the budget by that factor keeps the
    // product bound.
    let eps_int = (eps / (params.sparsity_constant * lg * lg + 1.0)).min(1.0);
    let f = popular_sums_approx(a, b, eps_int, params)?;
    let g = popular_sums_approx(c, d, eps_int, params)?;
    // Sorted-merge dot product.
    let (fe, ge) = (f.entries(), g.entries());
    let (mut i, mut j) = (0usize, 0usize);
    let mut acc: u128 = 0;
    while i < fe.len() && j < ge.len() {
        match fe[i].0.cmp(&ge[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += fe[i].1 as u128 * ge[j].1 as u128;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(acc as f64)
}

/// Approximate additive energy of a set: the number of quadruples
/// `(a, b, c, d) in A^4` with `a + b = c + d`, within additive error
/// `eps * |A|^3`.
pub fn approx_energy(a: &[i64], eps: f64, params: &ApproxParams) -> Result<f64> {
    check_eps(eps)?;
    let v = SparseVec::from_set(a);
    approx_4sum_count(&v, &v, &v, &v, eps / 2.0, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{bf_conv, bf_energy};
    use proptest::prelude::*;

    fn params() -> ApproxParams {
        ApproxParams::default()
    }

    fn check_psa_with(a: &SparseVec, b: &SparseVec, eps: f64, p: &ApproxParams) {
        let f = popular_sums_approx(a, b, eps, p).unwrap();
        let exact = bf_conv(a, b);
        let mass_b = b.mass() as f64;
        let mut keys: Vec<i64> = exact.support();
        keys.extend(f.support());
        keys.sort_unstable();
        keys.dedup();
        for s in keys {
            let err = (f.get(s) as f64 - exact.get(s) as f64).abs();
            assert!(
                err <= eps * mass_b + 1e-9,
                "error {err} at {s} exceeds {} (eps={eps})",
                eps * mass_b
            );
        }
        for &(_, v) in f.entries() {
            assert!(v as f64 >= eps / 2.0 * mass_b - 1e-9);
        }
    }

    #[test]
    fn psa_structured_instances() {
        // Arithmetic progression plus noise, checked both through the default
        // cost-dispatched path and with the recursion forced on.
        let a: Vec<i64> = (0..256).map(|i| i * 17 % 4099).collect();
        let b: Vec<i64> = (0..256).map(|i| (i * i + 3 * i) % 4099).collect();
        let sa = SparseVec::from_set(&a);
        let sb = SparseVec::from_set(&b);
        let forced = ApproxParams {
            exact_shortcut: false,
            ..params()
        };
        for eps in [0.5, 0.1] {
            check_psa_with(&sa, &sb, eps, &params());
            check_psa_with(&sa, &sb, eps, &forced);
        }
    }

    #[test]
    fn psa_handles_negative_indices() {
        let sa = SparseVec::from_set(&[-50, -20, 0, 13, 40]);
        let sb = SparseVec::from_set(&[-7, 2, 9]);
        check_psa_with(&sa, &sb, 0.3, &params());
    }

    #[test]
    fn mod_buckets_one_sided() {
        let a: Vec<i64> = (0..200).map(|i| (i * 37) % 8192).collect();
        let b: Vec<i64> = (0..200).map(|i| (i * 101 + 5) % 8192).collect();
        let sa = SparseVec::from_set(&a);
        let sb = SparseVec::from_set(&b);
        let exact = bf_conv(&sa, &sb);
        let targets: Vec<i64> = (0..64).map(|i| i * 137).collect();
        let eps = 0.25;
        let g = approx_mod_buckets(&sa, &sb, &targets, eps, &params()).unwrap();
        let mut excess: f64 = 0.0;
        for (&c, &v) in targets.iter().zip(&g) {
            assert!(v >= exact.get(c), "undercount at {c}");
            excess += (v - exact.get(c)) as f64;
        }
        let bound = (eps * sb.mass() as f64 * targets.len() as f64)
            .min(sa.mass() as f64 * sb.mass() as f64 * 14.0);
        assert!(excess <= bound, "excess {excess} > {bound}");
    }

    #[test]
    fn energy_anchors() {
        let p = params();
        let eps = 0.05;
        let e1 = approx_energy(&[0, 1, 2, 3], eps, &p).unwrap();
        assert!((e1 - 44.0).abs() <= eps * 64.0);
        let e2 = approx_energy(&[0, 1, 3, 7], eps, &p).unwrap();
        assert!((e2 - 28.0).abs() <= eps * 64.0);
    }

    #[test]
    fn energy_on_progression() {
        let n = 512i64;
        let set: Vec<i64> = (0..n).collect();
        let eps = 0.1;
        let est = approx_energy(&set, eps, &params()).unwrap();
        let exact = bf_energy(&set).unwrap() as f64;
        assert!((est - exact).abs() <= eps * (n as f64).powi(3));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn psa_random(
            av in proptest::collection::hash_set(0i64..2000, 1..80),
            bv in proptest::collection::hash_set(0i64..2000, 1..80),
            eps_scale in 1u32..6,
        ) {
            let sa = SparseVec::from_set(&av.into_iter().collect::<Vec<_>>());
            let sb = SparseVec::from_set(&bv.into_iter().collect::<Vec<_>>());
            check_psa_with(&sa, &sb, 1.0 / eps_scale as f64, &params());
            let forced = ApproxParams { exact_shortcut: false, ..params() };
            check_psa_with(&sa, &sb, 1.0 / eps_scale as f64, &forced);
        }
    }
}
