//! Text-to-pattern Hamming distances, exact and approximate.
//!
//! # Mathematical background
//!
//! For a text `T` of length `n` and a pattern `P` of length `m` over an
//! arbitrary alphabet, the Hamming distance profile is
//! `d(i) = #{j : T[i + j] != P[j]}` for every shift `0 <= i <= n - m`.
//! Writing `A_s` for the positions of symbol `s` in the text and `B_s` for
//! its positions in the pattern,
//!
//! `d(i) = m - sum_s (1_{A_s} * 1_{-B_s})[i]`,
//!
//! so the whole profile reduces to one correlation per alphabet symbol.
//! [`hamming_exact`] evaluates these by dense convolution.
//!
//! [`hamming_additive`] replaces each correlation by the approximate
//! popular-sums counter at accuracy `eps`: the per-symbol errors are
//! `eps * |B_s|` and telescope to a total additive error of `eps * m` per
//! shift.  The text is processed in windows of length `2m` (each batch of
//! `m` shifts only sees such a window), keeping every approximate
//! convolution at pattern scale.
//!
//! [`hamming_rle_dyadic`] targets run-length-compressible inputs under a
//! promise `d(i) <= k`.  Both strings are cut into *aligned dyadic blocks*:
//! a run of symbol `s` becomes blocks `[l, l + 2^u)` with `2^u | l`, the
//! level capped so blocks are never much longer than `m / k`.  Writing
//! `A_s^u` for the level-`u` block starts, the indicator factorizes as
//! `1_{A_s} = sum_u 1_{A_s^u} * 1_{[0, 2^u)}`, hence
//!
//! `match(i) = sum_{s,u,v} (1_{A_s^u} * 1_{-B_s^v} * L_{u,v})[i]`,
//!
//! with the trapezoid kernel `L_{u,v} = 1_{[0,2^u)} * 1_{-[0,2^v)}`.  The
//! block-start correlations are computed approximately; because aligned
//! starts differ by multiples of `2^min(u,v)`, approximation artifacts off
//! that lattice are provably spurious and are zeroed before the kernel is
//! applied.  The accuracy `eps' = eps / (8 log2^2(m+2))` spread over the
//! `O(log^2)` level pairs yields total error `eps * k` per shift — an
//! additive approximation relative to the promise rather than to `m`.

use crate::approx_count::{popular_sums_approx, ApproxParams};
use crate::vecmath::{conv_dense, SparseVec};
use crate::{log2f, Error, Result};
use std::collections::BTreeMap;

fn check_lengths(n: usize, m: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(
            "pattern must be nonempty and no longer than the text".into(),
        ));
    }
    Ok(())
}

/// Positions of each symbol.
fn positions(s: &[u32]) -> BTreeMap<u32, Vec<i64>> {
    let mut map: BTreeMap<u32, Vec<i64>> = BTreeMap::new();
    for (i, &c) in s.iter().enumerate() {
        map.entry(c).or_default().push(i as i64);
    }
    map
}

/// Exact Hamming distance profile via one dense correlation per symbol.
pub fn hamming_exact(text: &[u32], pattern: &[u32]) -> Result<Vec<u64>> {
    let (n, m) = (text.len(), pattern.len());
    check_lengths(n, m)?;
    let tpos = positions(text);
    let ppos = positions(pattern);
    let mut matches = vec![0u64; n - m + 1];
    for (sym, bp) in &ppos {
        let Some(ap) = tpos.get(sym) else { continue };
        let f = conv_dense(
            &SparseVec::from_set(ap),
            &SparseVec::from_set(bp).negate(),
        )?;
        for &(i, v) in f.entries() {
            if (0..matches.len() as i64).contains(&i) {
                matches[i as usize] += v;
            }
        }
    }
    Ok(matches.iter().map(|&c| m as u64 - c).collect())
}

/// Approximate profile with per-shift additive error at most `eps * m`.
///
/// The text is scanned in windows of length `2m`; within a window each
/// pattern symbol contributes one approximate correlation at accuracy
/// `eps`, so the per-shift errors sum to `eps * sum_s |B_s| = eps * m`.
pub fn hamming_additive(
    text: &[u32],
    pattern: &[u32],
    eps: f64,
    params: &ApproxParams,
) -> Result<Vec<f64>> {
    let (n, m) = (text.len(), pattern.len());
    check_lengths(n, m)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "accuracy parameter must lie in (0, 1], got {eps}"
        )));
    }
    let ppos = positions(pattern);
    let shifts = n - m + 1;
    let mut matches = vec![0f64; shifts];
    let mut c0 = 0usize;
    while c0 < shifts {
        let hi_shift = (c0 + m).min(shifts);
        let window_end = (c0 + 2 * m).min(n);
        let tpos = positions(&text[c0..window_end]);
        for (sym, bp) in &ppos {
            let Some(ap) = tpos.get(sym) else { continue };
            // Window positions are window-relative; so are the shifts below.
            let f = popular_sums_approx(
                &SparseVec::from_set(ap),
                &SparseVec::from_set(bp).negate(),
                eps,
                params,
            )?;
            for i in c0..hi_shift {
                matches[i] += f.get((i - c0) as i64) as f64;
            }
        }
        c0 = hi_shift;
    }
    Ok(matches
        .iter()
        .map(|&g| (m as f64 - g).clamp(0.0, m as f64))
        .collect())
}

/// A pair of strings in aligned dyadic block form; see the module docs.
#[derive(Clone, Debug)]
pub struct RleInstance {
    /// Text length.
    pub n: usize,
    /// Pattern length.
    pub m: usize,
    /// Text block starts, keyed by `(symbol, level)`; the block at start
    /// `l` and level `u` covers `[l, l + 2^u)` and `2^u | l`.
    pub a_blocks: BTreeMap<(u32, u32), Vec<i64>>,
    /// Pattern block starts in the same format.
    pub b_blocks: BTreeMap<(u32, u32), Vec<i64>>,
}

/// Greedy aligned dyadic split of the runs of `s`, with block length capped
/// at `2^cap`.
fn dyadic_blocks(s: &[u32], cap: u32) -> BTreeMap<(u32, u32), Vec<i64>> {
    let mut out: BTreeMap<(u32, u32), Vec<i64>> = BTreeMap::new();
    let mut i = 0usize;
    while i < s.len() {
        let sym = s[i];
        let mut j = i;
        while j < s.len() && s[j] == sym {
            j += 1;
        }
        let mut l = i as u64;
        while l < j as u64 {
            let align = if l == 0 { cap } else { l.trailing_zeros().min(cap) };
            let fit = 63 - ((j as u64 - l).max(1)).leading_zeros().min(63);
            let u = align.min(fit).min(cap);
            out.entry((sym, u)).or_default().push(l as i64);
            l += 1 << u;
        }
        i = j;
    }
    out
}

impl RleInstance {
    /// Build the block form of a text/pattern pair for mismatch budget `k`.
    /// Blocks are capped at twice `2^ceil(log2(m / k))` so the trapezoid
    /// kernels stay at promise scale.
    pub fn from_strings(text: &[u32], pattern: &[u32], k: u64) -> Result<Self> {
        check_lengths(text.len(), pattern.len())?;
        if k == 0 {
            return Err(Error::InvalidParameter(
                "mismatch budget k must be positive".into(),
            ));
        }
        let ratio = (pattern.len() as f64 / k as f64).max(1.0);
        let cap = ratio.log2().ceil() as u32 + 1;
        Ok(Self {
            n: text.len(),
            m: pattern.len(),
            a_blocks: dyadic_blocks(text, cap),
            b_blocks: dyadic_blocks(pattern, cap),
        })
    }

    /// Reconstruct the flat strings; inverse of the block decomposition.
    pub fn expand(&self) -> Result<(Vec<u32>, Vec<u32>)> {
        let fill = |blocks: &BTreeMap<(u32, u32), Vec<i64>>, len: usize| -> Result<Vec<u32>> {
            let mut v: Vec<Option<u32>> = vec![None; len];
            for (&(sym, u), starts) in blocks {
                for &l in starts {
                    for pos in l..l + (1i64 << u) {
                        if !(0..len as i64).contains(&pos) || v[pos as usize].is_some() {
                            return Err(Error::InvalidParameter(
                                "blocks overlap or leave the string".into(),
                            ));
                        }
                        v[pos as usize] = Some(sym);
                    }
                }
            }
            v.into_iter()
                .collect::<Option<Vec<u32>>>()
                .ok_or_else(|| Error::InvalidParameter("blocks do not cover the string".into()))
        };
        Ok((fill(&self.a_blocks, self.n)?, fill(&self.b_blocks, self.m)?))
    }
}

/// Approximate profile for block-form inputs with per-shift additive error
/// at most `eps * k`, where `k` is the mismatch budget of the instance.
pub fn hamming_rle_dyadic(
    inst: &RleInstance,
    eps: f64,
    k: u64,
    params: &ApproxParams,
) -> Result<Vec<f64>> {
    let (n, m) = (inst.n, inst.m);
    check_lengths(n, m)?;
    if !(eps > 0.0 && eps <= 1.0) || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "need eps in (0, 1] and k >= 1, got eps = {eps}, k = {k}"
        )));
    }
    let lg = log2f((m + 2) as f64);
    let eps_prime = eps / (8.0 * lg * lg);
    let eps_uv = (eps_prime * k as f64 / m as f64).min(1.0);
    let shifts = n - m + 1;
    let mut g = vec![0f64; shifts];
    for (&(sym, u), astarts) in &inst.a_blocks {
        for (&(bsym, v), bstarts) in &inst.b_blocks {
            if bsym != sym {
                continue;
            }
            let f = popular_sums_approx(
                &SparseVec::from_set(astarts),
                &SparseVec::from_set(bstarts).negate(),
                eps_uv,
                params,
            )?;
            // Aligned starts differ by multiples of 2^min(u, v); anything
            // else is approximation noise.
            let step = 1i64 << u.min(v);
            let clean = SparseVec::from_entries(
                f.entries()
                    .iter()
                    .filter(|&&(i, _)| i.rem_euclid(step) == 0)
                    .copied()
                    .collect(),
            )?;
            if clean.is_empty() {
                continue;
            }
            // Trapezoid kernel 1_{[0,2^u)} * 1_{-[0,2^v)}.
            let block_u: Vec<i64> = (0..1i64 << u).collect();
            let block_v: Vec<i64> = (0..1i64 << v).collect();
            let kernel = conv_dense(
                &SparseVec::from_set(&block_u),
                &SparseVec::from_set(&block_v).negate(),
            )?;
            let composed = conv_dense(&clean, &kernel)?;
            for &(i, val) in composed.entries() {
                if (0..shifts as i64).contains(&i) {
                    g[i as usize] += val as f64;
                }
            }
        }
    }
    Ok(g.iter()
        .map(|&gg| (m as f64 - gg).clamp(0.0, m as f64))
        .collect())
}
