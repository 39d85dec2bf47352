//! Number-theoretic transforms over two 64-bit primes with large power-of-two
//! roots of unity, plus CRT recombination for convolutions whose coefficients
//! exceed a single modulus.
//!
//! The primes are `P1 = 2^64 - 2^32 + 1` (2-adicity 32, primitive root 7) and
//! `P2 = 29 * 2^57 + 1` (2-adicity 57, primitive root 3). Any convolution of
//! u64-count vectors fits in the CRT range `P1 * P2 > 2^125`.

use crate::{mul_mod, pow_mod, Error, Result};

pub(crate) const P1: u64 = 0xFFFF_FFFF_0000_0001;
pub(crate) const G1: u64 = 7;
pub(crate) const P2: u64 = 4179340454199820289; // 29 * 2^57 + 1
pub(crate) const G2: u64 = 3;

/// In-place iterative radix-2 NTT. `a.len()` must be a power of two dividing
/// the 2-adicity of `p - 1`.
fn ntt(a: &mut [u64], invert: bool, p: u64, g: u64) {
    let n = a.len();
    debug_assert!(n.is_power_of_two());
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let mut len = 2usize;
    while len <= n {
        let mut w = pow_mod(g, (p - 1) / len as u64, p);
        if invert {
            w = pow_mod(w, p - 2, p);
        }
        for start in (0..n).step_by(len) {
            let mut wn = 1u64;
            for i in 0..len / 2 {
                let u = a[start + i];
                let v = mul_mod(a[start + i + len / 2], wn, p);
                let s = u as u128 + v as u128;
                a[start + i] = if s >= p as u128 { (s - p as u128) as u64 } else { s as u64 };
                a[start + i + len / 2] = if u >= v {
                    u - v
                } else {
                    (u as u128 + p as u128 - v as u128) as u64
                };
                wn = mul_mod(wn, w, p);
            }
        }
        len <<= 1;
    }
    if invert {
        let n_inv = pow_mod(n as u64, p - 2, p);
        for x in a.iter_mut() {
            *x = mul_mod(*x, n_inv, p);
        }
    }
}

/// Linear convolution of `x` and `y` modulo `p`, length `x.len() + y.len() - 1`.
fn conv_mod(x: &[u64], y: &[u64], p: u64, g: u64) -> Vec<u64> {
    let out_len = x.len() + y.len() - 1;
    let n = out_len.next_power_of_two();
    let mut fa: Vec<u64> = x.iter().map(|&v| v % p).collect();
    let mut fb: Vec<u64> = y.iter().map(|&v| v % p).collect();
    fa.resize(n, 0);
    fb.resize(n, 0);
    ntt(&mut fa, false, p, g);
    ntt(&mut fb, false, p, g);
    for (a, b) in fa.iter_mut().zip(fb.iter()) {
        *a = mul_mod(*a, *b, p);
    }
    ntt(&mut fa, true, p, g);
    fa.truncate(out_len);
    fa
}

/// Linear convolution of the inputs with all arithmetic modulo `P1`.
pub(crate) fn conv_mod_p1(x: &[u64], y: &[u64]) -> Vec<u64> {
    if x.is_empty() || y.is_empty() {
        return Vec::new();
    }
    conv_mod(x, y, P1, G1)
}

/// Exact linear convolution of nonnegative u64 count vectors.
///
/// `coeff_bound` must upper-bound every output coefficient; it selects between
/// a single-prime transform and a two-prime CRT recombination. Errors with
/// [`Error::Overflow`] if a coefficient exceeds `u64::MAX`.
pub(crate) fn conv_u64(x: &[u64], y: &[u64], coeff_bound: u128) -> Result<Vec<u64>> {
    if x.is_empty() || y.is_empty() {
        return Ok(Vec::new());
    }
    if coeff_bound < P1 as u128 {
        return Ok(conv_mod(x, y, P1, G1));
    }
    let r1 = conv_mod(x, y, P1, G1);
    let r2 = conv_mod(x, y, P2, G2);
    // CRT: v = r1 + P1 * ((r2 - r1) * inv(P1) mod P2), unique below P1 * P2.
    let inv_p1 = pow_mod(P1 % P2, P2 - 2, P2);
    let mut out = Vec::with_capacity(r1.len());
    for (&v1, &v2) in r1.iter().zip(r2.iter()) {
        let diff = (v2 % P2 + P2 - v1 % P2) % P2;
        let t = mul_mod(diff, inv_p1, P2);
        let v = v1 as u128 + P1 as u128 * t as u128;
        if v > u64::MAX as u128 {
            return Err(Error::Overflow(format!(
                "convolution coefficient {v} exceeds u64"
            )));
        }
        out.push(v as u64);
    }
    Ok(out)
}
