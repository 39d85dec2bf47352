//! Deterministic additive-combinatorics toolbox.
//!
//! The crate is organized around a small number of counting primitives over
//! integer multisets:
//!
//! * [`vecmath`] — exact convolutions: dense (NTT-based), cyclic, output-sparse,
//!   and partial (readout at a given target list).
//! * [`approx_count`] — deterministic approximate counting of popular sums and
//!   3SUM/4SUM-style statistics, with one-sided or two-sided error guarantees
//!   that scale with an accuracy parameter `eps`.
//! * [`modular`] — modulus selection with few residue collisions, and covering
//!   of `Z_M` by shifted copies of a set.
//! * [`small_doubling`] — exact 3SUM counting that exploits a shift set `S`
//!   with small sumset `A + S`.
//! * [`hashing`] — explicit small-bias sets over prime fields and an
//!   almost-additive hash family derived from them.
//! * [`bsg`] — constructive Balog–Szemerédi–Gowers-style decomposition:
//!   extraction of high-additive-energy subsets with controlled sumset growth.
//! * [`popular_exact`] — exact popular-sums reporting built on top of the
//!   decomposition and the small-doubling counter.
//! * [`hamming`] — approximate text-to-pattern Hamming distances, including a
//!   run-length-compressed variant.
//! * [`constellation`] — `k`-mismatch constellation search (find all shifts
//!   placing a point set inside another up to `k` misses) and `k`-mismatch
//!   string matching with wildcards.
//! * [`oracles`] — independent brute-force reference implementations used by
//!   the test suite; they share no code with the optimized paths.
//!
//! All algorithms are deterministic unless a seed parameter is explicitly part
//! of the API (only the subsampling candidate filter in [`constellation`]
//! takes one, and it is a fixed input, so runs remain reproducible).
//!
//! With the default `parallel` feature, data-parallel loops use rayon; every
//! parallel reduction is order-insensitive or reduces to a canonical-order
//! minimum, so results are bit-identical across thread counts.

pub mod approx_count;
pub mod bsg;
pub mod constellation;
pub mod hamming;
pub mod hashing;
pub mod modular;
pub mod oracles;
pub mod popular_exact;
pub mod small_doubling;
pub mod vecmath;

pub use par::set_threads;

mod ntt;
pub(crate) mod par;

/// Error type shared by all modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument is malformed (empty set where one is
    /// required, accuracy parameter out of range, and so on).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A documented precondition of the algorithm does not hold for the given
    /// input (for example an energy lower bound that fails re-verification).
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// An internal invariant that the algorithm guarantees was found violated.
    /// This indicates a bug or an adversarial input outside the supported
    /// envelope, never a recoverable condition.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    /// A computation would exceed its explicit work or memory budget.
    #[error("budget exceeded: {0}")]
    Budget(String),
    /// An intermediate or final count does not fit in the output type.
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    /// A bounded search ran out of candidates without finding a witness the
    /// analysis promises to exist.
    #[error("search exhausted: {0}")]
    Exhaustion(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// `log2(n)` as a real number, clamped to at least 1.
pub(crate) fn log2f(n: f64) -> f64 {
    n.max(2.0).log2()
}

/// Sort and deduplicate a set of integers.
pub fn normalize_set(mut v: Vec<i64>) -> Vec<i64> {
    v.sort_unstable();
    v.dedup();
    v
}

/// Deterministic sieve of all primes in `[lo, hi]` (inclusive).
pub(crate) fn primes_in_range(lo: u64, hi: u64) -> Vec<u64> {
    if hi < 2 || hi < lo {
        return Vec::new();
    }
    let lo = lo.max(2);
    let n = (hi - lo + 1) as usize;
    let mut is_comp = vec![false; n];
    let mut p = 2u64;
    while p * p <= hi {
        let start = ((lo + p - 1) / p).max(2) * p;
        let mut x = start;
        while x <= hi {
            is_comp[(x - lo) as usize] = true;
            x += p;
        }
        p += 1;
    }
    (0..n)
        .filter(|&i| !is_comp[i])
        .map(|i| lo + i as u64)
        .collect()
}

/// Smallest prime `>= n`.
pub(crate) fn next_prime(n: u64) -> u64 {
    let mut c = n.max(2);
    loop {
        if is_prime_u64(c) {
            return c;
        }
        c += 1;
    }
}

/// Deterministic Miller–Rabin primality test for u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a % n, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_helpers() {
        assert_eq!(primes_in_range(10, 30), vec![11, 13, 17, 19, 23, 29]);
        assert_eq!(next_prime(14), 17);
        assert!(is_prime_u64(0xFFFF_FFFF_0000_0001));
        assert!(is_prime_u64(4179340454199820289));
        assert!(!is_prime_u64(4179340454199820287));
    }
}
