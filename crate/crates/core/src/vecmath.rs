//! Exact convolution primitives over sparse nonnegative integer count vectors.
//!
//! A [`SparseVec`] maps `i64` indices to `u64` counts; the convolution of two
//! such vectors counts, for every target `t`, the weighted number of index
//! pairs `(i, j)` with `i + j = t`. Four strategies are provided:
//!
//! * [`conv_dense`] — NTT-based dense convolution over the index range.
//! * [`conv_cyclic`] — length-`m` cyclic convolution (indices folded mod `m`).
//! * [`conv_sparse`] — output-sensitive convolution that picks between pair
//!   expansion, dense NTT, and a deterministic hashed-bucket recovery scheme
//!   depending on instance shape.
//! * [`conv_partial`] — readout of the convolution at a caller-given target
//!   list without materializing the full result.
//!
//! All counts are checked: any intermediate or output value that does not fit
//! in `u64` raises [`Error::Overflow`] instead of wrapping.

use std::collections::{BTreeMap, HashMap};

use crate::ntt::{self, P1};
use crate::{mul_mod, next_prime, pow_mod, Error, Result};

/// Maximum dense index extent accepted by [`conv_dense`] / [`conv_cyclic`].
pub const DENSE_EXTENT_CAP: usize = 1 << 23;
/// Pair-expansion budget used by [`conv_sparse`].
const PAIR_BUDGET: u128 = 1 << 24;
/// Dense fallback extent used by [`conv_sparse`].
const SPARSE_DENSE_CAP: i64 = 1 << 22;
/// Work cap for [`conv_partial`] (targets times support size).
const PARTIAL_BUDGET: u128 = 1 << 34;

/// A sparse vector of nonnegative integer counts indexed by `i64`.
///
/// Entries are kept sorted by index with strictly positive counts; the
/// representation of a given mathematical vector is unique.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SparseVec {
    entries: Vec<(i64, u64)>,
}

impl SparseVec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from arbitrary (index, count) pairs; duplicate indices are merged
    /// with checked addition and zero counts are dropped.
    pub fn from_entries(mut entries: Vec<(i64, u64)>) -> Result<Self> {
        entries.sort_unstable_by_key(|e| e.0);
        let mut out: Vec<(i64, u64)> = Vec::with_capacity(entries.len());
        for (i, c) in entries {
            if c == 0 {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.0 == i => {
                    last.1 = last.1.checked_add(c).ok_or_else(|| {
                        Error::Overflow(format!("count at index {i} exceeds u64"))
                    })?;
                }
                _ => out.push((i, c)),
            }
        }
        Ok(Self { entries: out })
    }

    /// Indicator vector of a set (count 1 at every element).
    pub fn from_set(set: &[i64]) -> Self {
        let mut v: Vec<i64> = set.to_vec();
        v.sort_unstable();
        v.dedup();
        Self {
            entries: v.into_iter().map(|i| (i, 1)).collect(),
        }
    }

    pub fn entries(&self) -> &[(i64, u64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of nonzero entries.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Sum of all counts.
    pub fn mass(&self) -> u128 {
        self.entries.iter().map(|&(_, c)| c as u128).sum()
    }

    /// Largest single count.
    pub fn max_count(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| c).max().unwrap_or(0)
    }

    pub fn min_index(&self) -> Option<i64> {
        self.entries.first().map(|&(i, _)| i)
    }

    pub fn max_index(&self) -> Option<i64> {
        self.entries.last().map(|&(i, _)| i)
    }

    /// Count at index `i` (0 if absent).
    pub fn get(&self, i: i64) -> u64 {
        match self.entries.binary_search_by_key(&i, |e| e.0) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0,
        }
    }

    /// The vector with every index negated.
    pub fn negate(&self) -> Self {
        let mut entries: Vec<(i64, u64)> =
            self.entries.iter().rev().map(|&(i, c)| (-i, c)).collect();
        entries.sort_unstable_by_key(|e| e.0);
        Self { entries }
    }

    /// The vector translated by `d`.
    pub fn shift(&self, d: i64) -> Self {
        Self {
            entries: self.entries.iter().map(|&(i, c)| (i + d, c)).collect(),
        }
    }

    /// Fold indices modulo `m` (result indices in `[0, m)`).
    pub fn fold_mod(&self, m: i64) -> Result<Self> {
        debug_assert!(m >= 1);
        Self::from_entries(
            self.entries
                .iter()
                .map(|&(i, c)| (i.rem_euclid(m), c))
                .collect(),
        )
    }

    /// Sorted list of indices with nonzero count.
    pub fn support(&self) -> Vec<i64> {
        self.entries.iter().map(|&(i, _)| i).collect()
    }

    /// Consume into the sorted entry list.
    pub fn into_entries(self) -> Vec<(i64, u64)> {
        self.entries
    }
}

/// A multiset of nonnegative integers with a declared universe bound, the
/// on-disk exchange format of the command-line tools (one decimal per line,
/// repetitions encode multiplicity).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiSet {
    pub entries: Vec<(u64, u64)>,
    pub universe: u64,
}

impl MultiSet {
    /// Parse from text: one nonnegative decimal integer per line; blank lines
    /// are ignored. The universe defaults to `max + 1` unless `universe`
    /// overrides it (it must then exceed every element).
    pub fn parse(text: &str, universe: Option<u64>) -> Result<Self> {
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            let v: u64 = t.parse().map_err(|_| {
                Error::InvalidParameter(format!(
                    "line {}: expected a nonnegative integer, got {t:?}",
                    lineno + 1
                ))
            })?;
            *counts.entry(v).or_insert(0) += 1;
        }
        let max = counts.keys().next_back().copied();
        let universe = match (universe, max) {
            (Some(u), Some(m)) if u <= m => {
                return Err(Error::InvalidParameter(format!(
                    "universe {u} does not exceed maximum element {m}"
                )))
            }
            (Some(u), _) => u,
            (None, Some(m)) => m + 1,
            (None, None) => 1,
        };
        Ok(Self {
            entries: counts.into_iter().collect(),
            universe,
        })
    }

    pub fn to_sparse(&self) -> SparseVec {
        SparseVec {
            entries: self
                .entries
                .iter()
                .map(|&(i, c)| (i as i64, c))
                .collect(),
        }
    }

    /// Distinct elements as a sorted set.
    pub fn support_set(&self) -> Vec<i64> {
        self.entries.iter().map(|&(i, _)| i as i64).collect()
    }

    /// Total multiplicity.
    pub fn mass(&self) -> u128 {
        self.entries.iter().map(|&(_, c)| c as u128).sum()
    }
}

/// Upper bound on any coefficient of `x * y`, used for NTT modulus selection.
fn coeff_bound(x: &SparseVec, y: &SparseVec) -> u128 {
    let bx = x.mass().saturating_mul(y.max_count() as u128);
    let by = y.mass().saturating_mul(x.max_count() as u128);
    bx.min(by)
}

fn dense_array(x: &SparseVec, offset: i64, len: usize) -> Vec<u64> {
    let mut a = vec![0u64; len];
    for &(i, c) in x.entries() {
        a[(i - offset) as usize] = c;
    }
    a
}

/// Dense (NTT-based) convolution. The combined index extent of the operands
/// must not exceed [`DENSE_EXTENT_CAP`].
pub fn conv_dense(x: &SparseVec, y: &SparseVec) -> Result<SparseVec> {
    if x.is_empty() || y.is_empty() {
        return Ok(SparseVec::new());
    }
    let (ox, oy) = (x.min_index().unwrap(), y.min_index().unwrap());
    let lx = (x.max_index().unwrap() - ox) as usize + 1;
    let ly = (y.max_index().unwrap() - oy) as usize + 1;
    if lx + ly - 1 > DENSE_EXTENT_CAP {
        return Err(Error::Budget(format!(
            "dense convolution extent {} exceeds cap {DENSE_EXTENT_CAP}",
            lx + ly - 1
        )));
    }
    let ax = dense_array(x, ox, lx);
    let ay = dense_array(y, oy, ly);
    let out = ntt::conv_u64(&ax, &ay, coeff_bound(x, y))?;
    SparseVec::from_entries(
        out.into_iter()
            .enumerate()
            .filter(|&(_, c)| c != 0)
            .map(|(i, c)| (i as i64 + ox + oy, c))
            .collect(),
    )
}

/// Cyclic convolution of length `m`: output index `t` collects all pairs with
/// `i + j = t (mod m)`. Returns the full length-`m` count vector.
pub fn conv_cyclic(x: &SparseVec, y: &SparseVec, m: u64) -> Result<Vec<u64>> {
    if m == 0 || m as usize > DENSE_EXTENT_CAP {
        return Err(Error::InvalidParameter(format!(
            "cyclic length {m} out of range [1, {DENSE_EXTENT_CAP}]"
        )));
    }
    let mut out = vec![0u64; m as usize];
    if x.is_empty() || y.is_empty() {
        return Ok(out);
    }
    let fx = x.fold_mod(m as i64)?;
    let fy = y.fold_mod(m as i64)?;
    let ax = dense_array(&fx, 0, m as usize);
    let ay = dense_array(&fy, 0, m as usize);
    let lin = ntt::conv_u64(&ax, &ay, coeff_bound(&fx, &fy))?;
    for (i, c) in lin.into_iter().enumerate() {
        let slot = &mut out[i % m as usize];
        *slot = slot
            .checked_add(c)
            .ok_or_else(|| Error::Overflow("cyclic convolution count exceeds u64".into()))?;
    }
    Ok(out)
}

/// Output-sensitive exact convolution.
///
/// Strategy: direct pair expansion when `nnz(x) * nnz(y)` is small; dense NTT
/// when the index extent is moderate; otherwise a deterministic sparse
/// recovery that hashes indices modulo a growing prime, reads each residue
/// bucket's count and index-weighted sum from two cyclic convolutions, and
/// verifies the decoded support against independent checksum moduli (the
/// modulus doubles and the procedure retries whenever a bucket is impure).
pub fn conv_sparse(x: &SparseVec, y: &SparseVec) -> Result<SparseVec> {
    if x.is_empty() || y.is_empty() {
        return Ok(SparseVec::new());
    }
    if (x.nnz() as u128) * (y.nnz() as u128) <= PAIR_BUDGET {
        let mut acc: BTreeMap<i64, u64> = BTreeMap::new();
        for &(i, cx) in x.entries() {
            for &(j, cy) in y.entries() {
                let w = cx
                    .checked_mul(cy)
                    .and_then(|p| acc.get(&(i + j)).copied().unwrap_or(0).checked_add(p))
                    .ok_or_else(|| {
                        Error::Overflow(format!("convolution count at {} exceeds u64", i + j))
                    })?;
                acc.insert(i + j, w);
            }
        }
        return SparseVec::from_entries(acc.into_iter().collect());
    }
    let extent = (x.max_index().unwrap() - x.min_index().unwrap())
        + (y.max_index().unwrap() - y.min_index().unwrap())
        + 1;
    if extent <= SPARSE_DENSE_CAP {
        return conv_dense(x, y);
    }
    conv_sparse_hashed(x, y)
}

/// Hashed-bucket sparse recovery; see [`conv_sparse`].
///
/// Three cyclic "sketches" of the result are taken at distinct prime moduli;
/// each bucket stores the exact count and the index-weighted sum (mod a large
/// NTT prime) of the output entries hashing to it. A bucket holding a single
/// position decodes directly, and decoded entries are peeled out of all three
/// sketches, which cascades like an invertible-Bloom-lookup decoder. On a
/// stall or a checksum failure the moduli double and the whole round retries.
fn conv_sparse_hashed(x: &SparseVec, y: &SparseVec) -> Result<SparseVec> {
    // Shift supports to start at zero so decoded positions are nonnegative.
    let (ox, oy) = (x.min_index().unwrap(), y.min_index().unwrap());
    let xs = x.shift(-ox);
    let ys = y.shift(-oy);
    let max_sum = (xs.max_index().unwrap() as u128) + (ys.max_index().unwrap() as u128);
    let total_mass = xs.mass().saturating_mul(ys.mass());
    if total_mass >= P1 as u128 || max_sum >= 1u128 << 62 {
        return Err(Error::Budget(
            "sparse recovery requires total output mass below 2^64 - 2^32 and indices below 2^62"
                .into(),
        ));
    }
    let mut base = 4 * (xs.nnz() + ys.nnz()).max(64) as u64;
    loop {
        if base as usize > DENSE_EXTENT_CAP {
            return Err(Error::Budget(format!(
                "sparse recovery modulus {base} exceeds dense cap"
            )));
        }
        let m1 = next_prime(base);
        let m2 = next_prime(m1 + 2);
        let m3 = next_prime(m2 + 2);
        if let Some(result) = try_recover(&xs, &ys, [m1, m2, m3], max_sum as u64)? {
            // Shift decoded indices back to the original coordinates.
            return Ok(result.shift(ox + oy));
        }
        base *= 2;
    }
}

/// Per-modulus sketch: exact bucket counts plus index-weighted bucket sums
/// modulo `P1`.
struct Sketch {
    m: u64,
    counts: Vec<u64>,
    wsum: Vec<u64>,
}

impl Sketch {
    fn build(xs: &SparseVec, ys: &SparseVec, m: u64) -> Result<Self> {
        let counts = conv_cyclic(xs, ys, m)?;
        // For bucket b: wsum[b] = sum over pairs (i, j) with i + j = b (mod m)
        // of (i + j) * x_i * y_j, reduced mod P1. Split (i + j) into the two
        // operand contributions and use two mod-P1 convolutions.
        let fold = |v: &SparseVec, weighted: bool| -> Vec<u64> {
            let mut a = vec![0u64; m as usize];
            for &(i, c) in v.entries() {
                let r = (i % m as i64) as usize;
                let w = if weighted {
                    mul_mod(i as u64 % P1, c % P1, P1)
                } else {
                    c % P1
                };
                a[r] = ((a[r] as u128 + w as u128) % P1 as u128) as u64;
            }
            a
        };
        let t1 = ntt::conv_mod_p1(&fold(xs, true), &fold(ys, false));
        let t2 = ntt::conv_mod_p1(&fold(xs, false), &fold(ys, true));
        let mut wsum = vec![0u64; m as usize];
        for (i, (&a, &b)) in t1.iter().zip(t2.iter()).enumerate() {
            let slot = &mut wsum[i % m as usize];
            *slot = ((*slot as u128 + a as u128 + b as u128) % P1 as u128) as u64;
        }
        Ok(Self { m, counts, wsum })
    }

    /// Try to decode bucket `b` as a single position; the decode is validated
    /// by range and residue consistency.
    fn decode(&self, b: usize, max_sum: u64) -> Option<(u64, u64)> {
        let c = self.counts[b];
        if c == 0 {
            return None;
        }
        // A pure bucket with position p and count c has wsum = p * c (mod P1);
        // p <= max_sum < 2^62 < P1 makes the division exact.
        let inv = pow_mod(c % P1, P1 - 2, P1);
        let pos = mul_mod(self.wsum[b], inv, P1);
        (pos <= max_sum && pos % self.m == b as u64).then_some((pos, c))
    }

    /// Remove `count` occurrences of `pos`; fails (signalling a bad earlier
    /// decode) if the bucket does not hold that much mass.
    fn subtract(&mut self, pos: u64, count: u64) -> bool {
        let b = (pos % self.m) as usize;
        match self.counts[b].checked_sub(count) {
            Some(rest) => {
                self.counts[b] = rest;
                let dec = mul_mod(pos % P1, count % P1, P1);
                self.wsum[b] = ((self.wsum[b] as u128 + P1 as u128 - dec as u128)
                    % P1 as u128) as u64;
                true
            }
            None => false,
        }
    }
}

/// One peeling round at the given moduli; `None` requests a retry with larger
/// moduli.
fn try_recover(
    xs: &SparseVec,
    ys: &SparseVec,
    moduli: [u64; 3],
    max_sum: u64,
) -> Result<Option<SparseVec>> {
    let mut sketches: Vec<Sketch> = Vec::with_capacity(3);
    for m in moduli {
        sketches.push(Sketch::build(xs, ys, m)?);
    }
    let mut acc: BTreeMap<i64, u64> = BTreeMap::new();
    // Worklist of (sketch, bucket) pairs to examine; subtracting refills it.
    let mut work: Vec<(usize, usize)> = (0..3)
        .flat_map(|s| (0..moduli[s] as usize).map(move |b| (s, b)))
        .collect();
    'peel: while let Some((s, b)) = work.pop() {
        let Some((pos, count)) = sketches[s].decode(b, max_sum) else {
            continue;
        };
        for sk in sketches.iter_mut() {
            if !sk.subtract(pos, count) {
                return Ok(None); // a previous decode was bogus
            }
        }
        let slot = acc.entry(pos as i64).or_insert(0);
        *slot = match slot.checked_add(count) {
            Some(v) => v,
            None => return Err(Error::Overflow("sparse recovery count exceeds u64".into())),
        };
        for (j, sk) in sketches.iter().enumerate() {
            let rb = (pos % sk.m) as usize;
            if !(j == s && rb == b) {
                work.push((j, rb));
            }
        }
        // Loop bound: each push follows mass removal, and mass is finite.
        if acc.len() as u128 > (xs.nnz() as u128) * (ys.nnz() as u128) {
            break 'peel;
        }
    }
    if sketches.iter().any(|sk| sk.counts.iter().any(|&c| c != 0)) {
        return Ok(None); // stalled with undecodable residue
    }
    // Checksum verification against an independent cyclic modulus.
    let mc = next_prime(moduli[2] + 2);
    if mc as usize > DENSE_EXTENT_CAP {
        return Err(Error::Budget("checksum modulus exceeds dense cap".into()));
    }
    let expect = conv_cyclic(xs, ys, mc)?;
    let mut got = vec![0u64; mc as usize];
    for (&i, &c) in &acc {
        let r = (i % mc as i64) as usize;
        got[r] = got[r]
            .checked_add(c)
            .ok_or_else(|| Error::Overflow("checksum accumulation exceeds u64".into()))?;
    }
    if got != expect {
        return Ok(None);
    }
    Ok(Some(SparseVec::from_entries(acc.into_iter().collect())?))
}

/// Read the convolution `x * y` at the given targets only.
///
/// Runs in `O(|targets| * min(nnz(x), nnz(y)))` after indexing the denser
/// operand; exactly the right tool when the target list is much smaller than
/// the full sumset.
pub fn conv_partial(x: &SparseVec, y: &SparseVec, targets: &[i64]) -> Result<Vec<u64>> {
    let (small, large, flip) = if x.nnz() <= y.nnz() {
        (x, y, false)
    } else {
        (y, x, true)
    };
    let work = (targets.len() as u128) * (small.nnz() as u128);
    if work > PARTIAL_BUDGET {
        return Err(Error::Budget(format!(
            "partial convolution work {work} exceeds budget {PARTIAL_BUDGET}"
        )));
    }
    let index: HashMap<i64, u64> = large.entries().iter().copied().collect();
    let _ = flip; // convolution is symmetric; orientation does not matter
    let out = crate::par::map_vec(targets, |&t| -> Result<u64> {
        let mut acc: u64 = 0;
        for &(i, c) in small.entries() {
            if let Some(&d) = index.get(&(t - i)) {
                acc = c
                    .checked_mul(d)
                    .and_then(|p| acc.checked_add(p))
                    .ok_or_else(|| {
                        Error::Overflow(format!("partial convolution count at {t} exceeds u64"))
                    })?;
            }
        }
        Ok(acc)
    });
    out.into_iter().collect()
}
