//! Explicit small-bias sets and an almost-additive hash family.
//!
//! [`BiasedSet`] is the classical power construction: over `F_q` with
//! `q = p^r`, the member indexed by a pair `(x, y)` of field elements is the
//! vector `v` with `v_j = <x^j, y>` (coefficient-wise inner product over
//! `F_p`), `j = 0..m-1`. Every nontrivial character sum over the collection
//! has magnitude at most `(m - 1) / q`, and the collection has `q^2` members.
//!
//! [`HashFamily`] hashes integers `x` to `F_p` by
//! `h(x) = c_1 (x mod q_1) + ... + c_{m-1} (x mod q_{m-1}) + c_m`, with the
//! moduli `q_i` distinct primes whose product exceeds the universe and the
//! coefficient vector `c` drawn from a [`BiasedSet`] over `F_p^m`. Such an `h`
//! is *almost additive*: `h(x+y) - h(x) - h(y)` always lands in the set
//! `Delta_h = {0, -q_1 c_1} + ... + {0, -q_{m-1} c_{m-1}} + (-c_m)` of at
//! most `2^(m-1)` values. The family is only ever accessed lazily through
//! [`HashFamily::size`] and [`HashFamily::member`]; honest parameter choices
//! make it far too large to materialize.

use crate::{log2f, next_prime, primes_in_range, Error, Result};

// ---------------------------------------------------------------------------
// Arithmetic in GF(p^r)
// ---------------------------------------------------------------------------

/// Finite field `GF(p^r)` represented by polynomials modulo a monic
/// irreducible found by deterministic lexicographic search.
#[derive(Clone, Debug)]
pub struct Field {
    pub p: u64,
    pub r: u32,
    /// Coefficients of the monic modulus, degree `r` (length `r + 1`,
    /// leading coefficient 1), lowest degree first.
    pub modulus: Vec<u64>,
}

/// Field elements are coefficient vectors of length `r`, lowest degree first.
type Elem = Vec<u64>;

impl Field {
    /// Construct `GF(p^r)`, scanning monic polynomials in lexicographic order
    /// of their coefficient vectors and keeping the first irreducible one
    /// (tested with the Frobenius-based irreducibility criterion).
    pub fn new(p: u64, r: u32) -> Result<Self> {
        if !crate::is_prime_u64(p) || r == 0 {
            return Err(Error::InvalidParameter(format!(
                "field parameters require prime p and r >= 1, got p={p}, r={r}"
            )));
        }
        if r == 1 {
            return Ok(Self {
                p,
                r,
                modulus: vec![0, 1],
            });
        }
        // Odometer over the r low coefficients.
        let mut coeffs = vec![0u64; r as usize];
        loop {
            let mut modulus = coeffs.clone();
            modulus.push(1);
            let cand = Self {
                p,
                r,
                modulus,
            };
            if cand.modulus_irreducible() {
                return Ok(cand);
            }
            let mut pos = 0usize;
            loop {
                if pos == r as usize {
                    return Err(Error::Exhaustion(format!(
                        "no irreducible polynomial of degree {r} over F_{p} found"
                    )));
                }
                coeffs[pos] += 1;
                if coeffs[pos] < p {
                    break;
                }
                coeffs[pos] = 0;
                pos += 1;
            }
        }
    }

    pub fn zero(&self) -> Elem {
        vec![0; self.r as usize]
    }

    pub fn one(&self) -> Elem {
        let mut e = self.zero();
        e[0] = 1;
        e
    }

    /// The class of `x` (the polynomial `X` reduced, valid for `r >= 2`).
    fn x_elem(&self) -> Elem {
        let mut e = self.zero();
        if self.r >= 2 {
            e[1] = 1;
        } else {
            // X reduced mod a linear polynomial X + c0 is -c0.
            e[0] = (self.p - self.modulus[0] % self.p) % self.p;
        }
        e
    }

    pub fn add(&self, a: &Elem, b: &Elem) -> Elem {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| (x + y) % self.p)
            .collect()
    }

    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        let r = self.r as usize;
        let mut prod = vec![0u128; 2 * r - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x as u128 * y as u128) % self.p as u128;
            }
        }
        // Reduce modulo the monic modulus from the top down.
        for d in (r..2 * r - 1).rev() {
            let c = prod[d];
            if c == 0 {
                continue;
            }
            prod[d] = 0;
            for (k, &mc) in self.modulus.iter().enumerate().take(r) {
                let sub = c * mc as u128 % self.p as u128;
                let slot = &mut prod[d - r + k];
                *slot = (*slot + self.p as u128 - sub) % self.p as u128;
            }
        }
        prod.into_iter().take(r).map(|v| v as u64).collect()
    }

    pub fn pow(&self, base: &Elem, mut e: u128) -> Elem {
        let mut acc = self.one();
        let mut b = base.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        acc
    }

    /// Decode `idx` (in `[0, p^r)`) as an element via base-`p` digits.
    pub fn decode(&self, mut idx: u128) -> Elem {
        let mut e = self.zero();
        for slot in e.iter_mut() {
            *slot = (idx % self.p as u128) as u64;
            idx /= self.p as u128;
        }
        e
    }

    /// Number of field elements, `p^r`.
    pub fn order(&self) -> u128 {
        (self.p as u128).pow(self.r)
    }

    /// Frobenius-based irreducibility test of the stored modulus: `f` of
    /// degree `r` is irreducible over `F_p` iff `X^(p^r) = X (mod f)` and
    /// `gcd(X^(p^(r/l)) - X, f) = 1` for every prime `l` dividing `r`.
    fn modulus_irreducible(&self) -> bool {
        let r = self.r;
        // Work with polynomial arithmetic modulo `modulus` (not field ops:
        // the modulus may be reducible, but mul/pow only use the reduction).
        let frob1 = self.pow(&self.x_elem(), self.p as u128); // X^p
        // Iterated Frobenius by composition: frob_j(X) = frob1(frob_{j-1}).
        let compose = |outer: &Elem, inner: &Elem| -> Elem {
            // Horner evaluation of `outer` at `inner`.
            let mut acc = self.zero();
            for &c in outer.iter().rev() {
                acc = self.mul(&acc, inner);
                acc[0] = (acc[0] + c) % self.p;
            }
            acc
        };
        let mut frobs = vec![self.x_elem(), frob1.clone()]; // frobs[j] = X^(p^j)
        for _ in 2..=r {
            let prev = frobs.last().unwrap().clone();
            frobs.push(compose(&prev, &frob1));
        }
        if frobs[r as usize] != self.x_elem() {
            return false;
        }
        let mut rr = r;
        let mut prime_divs = Vec::new();
        let mut d = 2;
        while d * d <= rr {
            if rr % d == 0 {
                prime_divs.push(d);
                while rr % d == 0 {
                    rr /= d;
                }
            }
            d += 1;
        }
        if rr > 1 {
            prime_divs.push(rr);
        }
        for l in prime_divs {
            // gcd(X^(p^(r/l)) - X, modulus) must be 1.
            let mut g = frobs[(r / l) as usize].clone();
            let x = self.x_elem();
            for (gi, xi) in g.iter_mut().zip(&x) {
                *gi = (*gi + self.p - xi) % self.p;
            }
            if self.poly_gcd_with_modulus(&g) != 0 {
                return false;
            }
        }
        true
    }

    /// Degree of `gcd(a, modulus)` where `a` is given reduced (degree < r);
    /// returns 0 when they are coprime.
    fn poly_gcd_with_modulus(&self, a: &Elem) -> usize {
        let p = self.p;
        let trim = |v: &mut Vec<u64>| {
            while v.len() > 1 && *v.last().unwrap() == 0 {
                v.pop();
            }
        };
        let mut big: Vec<u64> = self.modulus.clone();
        let mut small: Vec<u64> = a.clone();
        trim(&mut small);
        while !(small.len() == 1 && small[0] == 0) {
            // big mod small
            let inv_lead = crate::pow_mod(*small.last().unwrap(), p - 2, p);
            while big.len() >= small.len() && !(big.len() == 1 && big[0] == 0) {
                let shift = big.len() - small.len();
                let factor = crate::mul_mod(*big.last().unwrap(), inv_lead, p);
                if factor != 0 {
                    for (k, &sc) in small.iter().enumerate() {
                        let sub = crate::mul_mod(factor, sc, p);
                        let slot = &mut big[shift + k];
                        *slot = (*slot + p - sub) % p;
                    }
                }
                trim(&mut big);
                if big.len() < small.len() {
                    break;
                }
                if *big.last().unwrap() == 0 {
                    trim(&mut big);
                }
            }
            std::mem::swap(&mut big, &mut small);
            trim(&mut small);
        }
        big.len() - 1
    }
}

// ---------------------------------------------------------------------------
// Small-bias sets
// ---------------------------------------------------------------------------

/// An explicit collection of vectors in `F_p^m` with character-sum bias at
/// most `(m - 1) / p^r`; the collection has `p^(2r)` members and is accessed
/// lazily by index.
#[derive(Clone, Debug)]
pub struct BiasedSet {
    pub p: u64,
    pub m: usize,
    pub r: u32,
    field: Field,
}

/// Budget for [`BiasedSet::materialize`].
const MATERIALIZE_CAP: u128 = 1 << 22;

impl BiasedSet {
    /// Construct with the degree `r` chosen for the `k`-dependent bias target
    /// `eps = 1 / (2 p^(3k/2 - 1))`, i.e. `r = ceil(log_p(m / eps))`; then
    /// the collection size `p^(2r)` is at most `4 m^2 p^(3k)`.
    pub fn new(p: u64, m: usize, k: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let lp = (p as f64).ln();
        // log_p(m / eps) with eps = 1 / (2 p^(3k/2 - 1)).
        let exponent = ((2 * m) as f64).ln() / lp + 1.5 * k as f64 - 1.0;
        let r = exponent.ceil().max(1.0) as u32;
        Self::with_parameters(p, r, m)
    }

    /// Construct with an explicit field degree.
    pub fn with_parameters(p: u64, r: u32, m: usize) -> Result<Self> {
        if (r as u64) * (p as f64).log2().ceil() as u64 > 126 {
            return Err(Error::Budget(format!(
                "field order p^r with p={p}, r={r} exceeds u128"
            )));
        }
        Ok(Self {
            p,
            m,
            r,
            field: Field::new(p, r)?,
        })
    }

    /// Number of members, `p^(2r)`.
    pub fn size(&self) -> u128 {
        self.field.order() * self.field.order()
    }

    /// The member with the given index, a vector in `F_p^m`: decode the index
    /// as a pair `(x, y)` of field elements and emit `<x^j, y>` for
    /// `j = 0..m-1`.
    pub fn member(&self, idx: u128) -> Result<Vec<u64>> {
        if idx >= self.size() {
            return Err(Error::InvalidParameter(format!(
                "member index {idx} out of range (size {})",
                self.size()
            )));
        }
        let q = self.field.order();
        let x = self.field.decode(idx / q);
        let y = self.field.decode(idx % q);
        let mut out = Vec::with_capacity(self.m);
        let mut cur = self.field.one();
        for _ in 0..self.m {
            let dot = cur
                .iter()
                .zip(&y)
                .fold(0u128, |acc, (&a, &b)| {
                    (acc + a as u128 * b as u128) % self.p as u128
                });
            out.push(dot as u64);
            cur = self.field.mul(&cur, &x);
        }
        Ok(out)
    }

    /// All members, for exhaustive verification only.
    pub fn materialize(&self) -> Result<Vec<Vec<u64>>> {
        if self.size() > MATERIALIZE_CAP {
            return Err(Error::Budget(format!(
                "refusing to materialize {} members",
                self.size()
            )));
        }
        (0..self.size()).map(|i| self.member(i)).collect()
    }
}

// ---------------------------------------------------------------------------
// Almost-additive hash family
// ---------------------------------------------------------------------------

/// Configuration for [`build_hash_family`].
#[derive(Clone, Debug)]
pub struct HashFamilyConfig {
    /// Strength parameter; controls the bias target of the coefficient
    /// collection and the default size of `p`.
    pub k: u32,
    /// The prime moduli are drawn from `[Q/2, Q]` with
    /// `Q = q_factor * log2 N`.
    pub q_factor: f64,
    /// Explicit choice of the output prime `p`; without it the honest default
    /// `next_prime(max(Q + 1, (log2 N)^(2k)))` is used, which is typically
    /// far too large to enumerate `F_p` — callers that iterate over hash
    /// values should set this.
    pub p_override: Option<u64>,
}

impl Default for HashFamilyConfig {
    fn default() -> Self {
        Self {
            k: 4,
            q_factor: 100.0,
            p_override: None,
        }
    }
}

/// A lazily indexed family of almost-additive hash functions to `F_p`.
#[derive(Clone, Debug)]
pub struct HashFamily {
    pub p: u64,
    /// The distinct prime inner moduli `q_1, ..., q_{m-1}`.
    pub qs: Vec<u64>,
    pub m: usize,
    /// True when the prime window could not satisfy the product constraint
    /// `prod q_i in [N log^2k N, N log^3k N]` and the closest achievable
    /// product was used instead.
    pub window_clamped: bool,
    coefficients: BiasedSet,
}

/// One member of the family.
#[derive(Clone, Debug)]
pub struct HashSpec {
    pub p: u64,
    pub qs: Vec<u64>,
    /// Coefficient vector `c in F_p^m`; the last entry is the affine term.
    pub coeffs: Vec<u64>,
}

impl HashFamily {
    pub fn size(&self) -> u128 {
        self.coefficients.size()
    }

    pub fn member(&self, idx: u128) -> Result<HashSpec> {
        Ok(HashSpec {
            p: self.p,
            qs: self.qs.clone(),
            coeffs: self.coefficients.member(idx)?,
        })
    }
}

impl HashSpec {
    /// `h(x) = c_1 (x mod q_1) + ... + c_{m-1} (x mod q_{m-1}) + c_m in F_p`.
    pub fn eval(&self, x: i64) -> u64 {
        let mut acc: u128 = *self.coeffs.last().unwrap() as u128;
        for (&q, &c) in self.qs.iter().zip(&self.coeffs) {
            let w = x.rem_euclid(q as i64) as u128;
            acc = (acc + w * c as u128) % self.p as u128;
        }
        (acc % self.p as u128) as u64
    }

    /// The additivity defect set: `h(x+y) - h(x) - h(y)` always lies in
    /// `Delta_h = {0, -q_1 c_1} + ... + {0, -q_{m-1} c_{m-1}} + (-c_m)`.
    pub fn delta(&self) -> Vec<u64> {
        let p = self.p;
        let mut set: Vec<u64> = vec![(p - self.coeffs.last().unwrap() % p) % p];
        for (&q, &c) in self.qs.iter().zip(&self.coeffs) {
            let term = (p - (q as u128 * c as u128 % p as u128) as u64 % p) % p;
            let mut ext: Vec<u64> = set.iter().map(|&v| (v + term) % p).collect();
            set.append(&mut ext);
            set.sort_unstable();
            set.dedup();
        }
        set
    }

    /// `Delta'_h = 3 ({0} union Delta_h)`, the three-fold iterated sumset;
    /// size below `(|Delta_h| + 1)^3`.
    pub fn delta_prime(&self) -> Vec<u64> {
        let p = self.p;
        let mut base = self.delta();
        base.push(0);
        base.sort_unstable();
        base.dedup();
        let mut acc = base.clone();
        for _ in 0..2 {
            let mut next: Vec<u64> = acc
                .iter()
                .flat_map(|&a| base.iter().map(move |&b| (a + b) % p))
                .collect();
            next.sort_unstable();
            next.dedup();
            acc = next;
        }
        acc
    }
}

/// Build the family for universe `{-N, ..., N}`.
pub fn build_hash_family(n: u64, cfg: &HashFamilyConfig) -> Result<HashFamily> {
    if cfg.k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let logn = log2f(n as f64).max(2.0);
    let mut q_hi = (cfg.q_factor * logn).max(12.0) as u64;
    let mut window = primes_in_range(q_hi / 2, q_hi);
    while window.is_empty() {
        q_hi *= 2;
        window = primes_in_range(q_hi / 2, q_hi);
    }
    // Subset of window primes with product in [N log^2k N, N log^3k N]:
    // greedily multiply from the largest down, then try to repair overshoot
    // by swapping the last prime for a smaller one.
    let lb = (n.max(2) as f64) * logn.powi(2 * cfg.k as i32);
    let ub = (n.max(2) as f64) * logn.powi(3 * cfg.k as i32);
    let mut qs: Vec<u64> = Vec::new();
    let mut product = 1.0f64;
    for &q in window.iter().rev() {
        if product >= lb {
            break;
        }
        qs.push(q);
        product *= q as f64;
    }
    let mut window_clamped = false;
    if product < lb {
        window_clamped = true; // window exhausted before reaching the target
    } else if product > ub {
        // Replace the smallest chosen prime by the smallest one that still
        // clears the lower bound, if that lands inside the range.
        let last = qs.pop().unwrap();
        product /= last as f64;
        let repaired = window
            .iter()
            .copied()
            .filter(|q| !qs.contains(q))
            .find(|&q| product * q as f64 >= lb);
        match repaired {
            Some(q) if product * q as f64 <= ub => {
                qs.push(q);
            }
            _ => {
                qs.push(last);
                product *= last as f64;
                window_clamped = product > ub;
            }
        }
    }
    qs.sort_unstable();
    let m = qs.len() + 1;
    let p = match cfg.p_override {
        Some(p) => {
            if !crate::is_prime_u64(p) {
                return Err(Error::InvalidParameter(format!(
                    "p override {p} is not prime"
                )));
            }
            p
        }
        None => {
            let floor = logn.powi(2 * cfg.k as i32).min(u64::MAX as f64) as u64;
            next_prime(floor.max(q_hi + 1))
        }
    };
    let coefficients = BiasedSet::new(p, m, cfg.k)?;
    Ok(HashFamily {
        p,
        qs,
        m,
        window_clamped,
        coefficients,
    })
}

/// Does the list carry a nontrivial linear relation with coefficients in
/// `[-ell, ell]` summing to zero (both as coefficients and against the
/// values)? Exhaustive over `(2 ell + 1)^len` coefficient vectors; errors
/// with [`Error::Budget`] when that is infeasible.
pub fn has_relation(xs: &[i64], ell: u64) -> Result<bool> {
    let base = 2 * ell + 1;
    let count = (base as u128).checked_pow(xs.len() as u32);
    match count {
        Some(c) if c <= 10_000_000 => {}
        _ => {
            return Err(Error::Budget(format!(
                "relation search over {base}^{} vectors exceeds budget",
                xs.len()
            )))
        }
    }
    let mut beta = vec![0i64; xs.len()];
    loop {
        // Advance odometer over [-ell, ell]^len.
        let mut pos = 0usize;
        loop {
            if pos == beta.len() {
                return Ok(false);
            }
            beta[pos] += 1;
            if beta[pos] <= ell as i64 {
                break;
            }
            beta[pos] = -(ell as i64);
            pos += 1;
        }
        let coeff_sum: i128 = beta.iter().map(|&b| b as i128).sum();
        if coeff_sum != 0 {
            continue;
        }
        let value_sum: i128 = beta
            .iter()
            .zip(xs)
            .map(|(&b, &x)| b as i128 * x as i128)
            .sum();
        if value_sum == 0 && beta.iter().any(|&b| b != 0) {
            return Ok(true);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::bf_bias;

    #[test]
    fn field_fermat() {
        for (p, r) in [(2u64, 3u32), (3, 2), (5, 2), (2, 8), (7, 3)] {
            let f = Field::new(p, r).unwrap();
            let q = f.order();
            for idx in 1..q.min(64) {
                let e = f.decode(idx);
                assert_eq!(f.pow(&e, q - 1), f.one(), "p={p} r={r} idx={idx}");
            }
        }
    }

    #[test]
    fn exhaustive_bias_small_fields() {
        for r in [2u32, 3] {
            for m in 2..=4usize {
                let bs = BiasedSet::with_parameters(2, r, m).unwrap();
                let members = bs.materialize().unwrap();
                assert_eq!(members.len() as u128, bs.size());
                let bias = bf_bias(&members, 2).unwrap();
                let bound = (m as f64 - 1.0) / (1u64 << r) as f64;
                assert!(
                    bias <= bound + 1e-9,
                    "bias {bias} > {bound} for r={r}, m={m}"
                );
            }
        }
    }

    #[test]
    fn family_size_bound() {
        let cfg = HashFamilyConfig {
            k: 2,
            q_factor: 4.0,
            p_override: Some(13),
        };
        let fam = build_hash_family(1 << 12, &cfg).unwrap();
        let bound = 4.0 * (fam.m as f64).powi(2) * (fam.p as f64).powi(3 * 2);
        assert!((fam.size() as f64) <= bound);
        // qs are distinct primes.
        let mut qs = fam.qs.clone();
        qs.dedup();
        assert_eq!(qs.len(), fam.m - 1);
        for &q in &qs {
            assert!(crate::is_prime_u64(q));
        }
    }

    #[test]
    fn almost_additivity_many_pairs() {
        let n: u64 = 1 << 12;
        let cfg = HashFamilyConfig {
            k: 2,
            q_factor: 3.0,
            p_override: Some(31),
        };
        let fam = build_hash_family(n, &cfg).unwrap();
        let stride = (fam.size() / 25).max(1);
        let mut members = 0;
        let mut idx = 0u128;
        let mut rng_state = 0x9E3779B97F4A7C15u64;
        while idx < fam.size() && members < 25 {
            let h = fam.member(idx).unwrap();
            let delta = h.delta();
            for _ in 0..500 {
                // xorshift for deterministic pseudo-random pairs in [-N, N].
                rng_state ^= rng_state << 13;
                rng_state ^= rng_state >> 7;
                rng_state ^= rng_state << 17;
                let x = (rng_state % (2 * n + 1)) as i64 - n as i64;
                rng_state ^= rng_state << 13;
                rng_state ^= rng_state >> 7;
                rng_state ^= rng_state << 17;
                let y = (rng_state % (2 * n + 1)) as i64 - n as i64;
                let defect = (h.eval(x + y) + 2 * h.p - h.eval(x) - h.eval(y)) % h.p;
                assert!(
                    delta.binary_search(&defect).is_ok(),
                    "defect {defect} outside Delta_h for pair ({x}, {y})"
                );
            }
            let dp = h.delta_prime();
            assert!(dp.len() < (delta.len() + 1).pow(3));
            members += 1;
            idx += stride;
        }
        assert_eq!(members, 25);
    }

    #[test]
    fn relation_search() {
        // 1*5 + 1*7 - 2*6 = 0 with coefficients summing to zero.
        assert!(has_relation(&[5, 7, 6], 2).unwrap());
        // A Sidon-like triple with tiny coefficient range has none.
        assert!(!has_relation(&[0, 1, 100], 1).unwrap());
        assert!(has_relation(&[3, 3], 1).unwrap());
        assert!(matches!(
            has_relation(&[1; 30], 50),
            Err(Error::Budget(_))
        ));
    }
}
