//! End-to-end acceptance suite.
//!
//! Each test exercises one advertised guarantee of the toolbox against an
//! independent brute-force computation (or a structural invariant when the
//! guarantee is an inequality), over randomized instance families, and prints
//! a single `criterion NN ...: PASS` line on success.  Timing comparisons and
//! CSV artifacts are informational; correctness assertions are hard.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use addcomb::approx_count::{
    approx_energy, approx_mod_buckets, popular_sums_approx, ApproxParams,
};
use addcomb::bsg::{bsg_decompose, slack_budget, BsgConfig};
use addcomb::constellation::{
    constellation_bruteforce, constellation_deterministic, wildcard_match,
    ConstellationConfig, Convention,
};
use addcomb::hamming::{hamming_additive, hamming_rle_dyadic, RleInstance};
use addcomb::hashing::{build_hash_family, BiasedSet, HashFamilyConfig};
use addcomb::modular::{find_cover, find_modulus, modulus_slack, partition_targets};
use addcomb::oracles;
use addcomb::popular_exact::{popular_sums_exact, PopularExactConfig};
use addcomb::small_doubling::count_small_doubling;
use addcomb::vecmath::SparseVec;

/// Deterministic xorshift64* stream so every run sees the same instances.
struct Rng(u64);

impl Rng {
    fn new(seed: u64) -> Self {
        Rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }
    fn next(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }
    fn below(&mut self, n: u64) -> u64 {
        self.next() % n.max(1)
    }
    /// Log-uniform size in `[lo, hi]`, so most draws are small.
    fn size(&mut self, lo: u64, hi: u64) -> usize {
        let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
        let t = self.below(1 << 20) as f64 / (1u64 << 20) as f64;
        (a + t * (b - a)).exp().round().clamp(lo as f64, hi as f64) as usize
    }
    fn set(&mut self, n: usize, span: u64) -> Vec<i64> {
        let mut v: Vec<i64> = (0..n).map(|_| self.below(span) as i64).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
    /// Arithmetic progression plus uniform noise, the structured-family
    /// staple: half the mass sits on a progression.
    fn ap_with_noise(&mut self, n: usize, span: u64) -> Vec<i64> {
        let step = 1 + self.below(7) as i64;
        let start = self.below(span / 4) as i64;
        let mut v: Vec<i64> = (0..n / 2).map(|i| start + step * i as i64).collect();
        v.extend((0..n - n / 2).map(|_| self.below(span) as i64));
        v.sort_unstable();
        v.dedup();
        v
    }
}

fn tmp_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn log2c(n: f64) -> f64 {
    n.max(2.0).log2()
}

#[test]
fn criterion_01_approx_popular_sums() {
    let params = ApproxParams::default();
    let mut routine_secs = 0.0f64;
    let mut rng = Rng::new(101);
    for inst in 0..500u32 {
        let span = 1u64 << (8 + rng.below(9)); // universe up to 2^16
        let (na, nb) = (rng.size(8, 4096), rng.size(8, 4096));
        let a = rng.set(na, span);
        let b = rng.set(nb, span);
        let eps = [0.5, 0.1, 0.02][(inst % 3) as usize];
        let (sa, sb) = (SparseVec::from_set(&a), SparseVec::from_set(&b));
        let t0 = Instant::now();
        let f = popular_sums_approx(&sa, &sb, eps, &params).unwrap();
        routine_secs += t0.elapsed().as_secs_f64();
        let exact = oracles::bf_conv(&sa, &sb);
        let bound = eps * b.len() as f64 + 1e-9;
        for &(s, v) in f.entries() {
            let err = (v as f64 - exact.get(s) as f64).abs();
            assert!(
                err <= bound,
                "instance {inst}: error {err} > eps*|B| = {bound} at sum {s}"
            );
        }
        let sparsity_cap =
            params.sparsity_constant / eps * a.len() as f64 * log2c(span as f64).powi(2);
        assert!(
            (f.nnz() as f64) <= sparsity_cap,
            "instance {inst}: output sparsity {} > {sparsity_cap}",
            f.nnz()
        );
    }
    assert!(
        routine_secs < 60.0,
        "500 instances took {routine_secs:.1}s of routine time (budget 60s)"
    );
    println!(
        "criterion 01 (approximate popular sums, 500 instances, {routine_secs:.1}s routine time): PASS"
    );
}

#[test]
fn criterion_02_approx_mod_buckets() {
    let params = ApproxParams::default();
    let mut rng = Rng::new(202);
    for inst in 0..500u32 {
        let span = 1u64 << (8 + rng.below(7));
        let (na, nb) = (rng.size(8, 1024), rng.size(8, 1024));
        let a = rng.set(na, span);
        let b = rng.set(nb, span);
        let nc = rng.size(1, 256);
        let c: Vec<i64> = (0..nc).map(|_| rng.below(2 * span) as i64).collect();
        let eps = [0.5, 0.1, 0.02][(inst % 3) as usize];
        let (sa, sb) = (SparseVec::from_set(&a), SparseVec::from_set(&b));
        let approx = approx_mod_buckets(&sa, &sb, &c, eps, &params).unwrap();
        let exact = oracles::bf_conv(&sa, &sb);
        let mut aggregate = 0.0f64;
        for (&t, &v) in c.iter().zip(&approx) {
            let e = exact.get(t);
            assert!(v >= e, "instance {inst}: one-sidedness violated at {t}");
            aggregate += (v - e) as f64;
        }
        let cap = (eps * b.len() as f64 * c.len() as f64)
            .min(a.len() as f64 * b.len() as f64 * log2c(span as f64));
        assert!(
            aggregate <= cap + 1e-6,
            "instance {inst}: aggregate overshoot {aggregate} > {cap}"
        );
    }
    println!("criterion 02 (one-sided bucket counts, 500 instances): PASS");
}

#[test]
fn criterion_03_approx_energy() {
    let params = ApproxParams::default();
    // Anchors with known exact energies.
    let four: Vec<i64> = (0..4).collect();
    assert_eq!(oracles::bf_energy(&four).unwrap(), 44);
    assert_eq!(oracles::bf_energy(&[0, 1, 3, 7]).unwrap(), 28);
    for eps in [0.5, 0.1] {
        let est = approx_energy(&four, eps, &params).unwrap();
        assert!((est - 44.0).abs() <= eps * 64.0 + 1e-9);
        let est = approx_energy(&[0, 1, 3, 7], eps, &params).unwrap();
        assert!((est - 28.0).abs() <= eps * 64.0 + 1e-9);
    }
    let mut rng = Rng::new(303);
    for inst in 0..120u32 {
        let n = rng.size(8, 2048);
        let span = 1u64 << (8 + rng.below(7));
        let a = match inst % 4 {
            0 => (0..n).map(|i| i as i64 * (1 + rng.below(5) as i64)).collect(),
            1 => {
                // Sidon-ish: perfect-difference-set style quadratic residues.
                (0..n).map(|i| (i as i64) * (i as i64) % (4 * n as i64 + 1)).collect()
            }
            2 => rng.set(n, span),
            _ => rng.ap_with_noise(n, span),
        };
        let set = addcomb::normalize_set(a);
        let eps = [0.5, 0.1][(inst % 2) as usize];
        let est = approx_energy(&set, eps, &params).unwrap();
        let exact = oracles::bf_energy(&set).unwrap() as f64;
        let bound = eps * (set.len() as f64).powi(3) + 1e-6;
        assert!(
            (est - exact).abs() <= bound,
            "instance {inst}: |{est} - {exact}| > {bound}"
        );
    }
    println!("criterion 03 (additive energy, anchors + 120 instances): PASS");
}

#[test]
fn criterion_04_small_doubling_exact() {
    let mut rng = Rng::new(404);
    for inst in 0..200u32 {
        let span = 1u64 << (8 + rng.below(13)); // up to 2^20
        let n = rng.size(8, 2048);
        let a = if inst % 2 == 0 {
            rng.ap_with_noise(n, span)
        } else {
            rng.set(n, span)
        };
        let nb = rng.size(4, 512);
        let b = rng.set(nb, span);
        let nc = rng.size(1, 64);
        let c: Vec<i64> = (0..nc).map(|_| rng.below(2 * span) as i64).collect();
        let c = addcomb::normalize_set(c);
        let ns = rng.size(2, 64);
        let s = rng.set(ns, span);
        let out = count_small_doubling(&a, &b, &c, &s).unwrap();
        let f = oracles::bf_conv(&SparseVec::from_set(&a), &SparseVec::from_set(&b));
        for &t in &c {
            assert_eq!(
                out.c_counts.get(&t).copied().unwrap_or(0),
                f.get(t),
                "instance {inst}: c-count mismatch at {t}"
            );
        }
        let g = oracles::bf_conv(
            &SparseVec::from_set(&c),
            &SparseVec::from_set(&b).negate(),
        );
        for &x in &a {
            assert_eq!(
                out.a_counts.get(&x).copied().unwrap_or(0),
                g.get(x),
                "instance {inst}: a-count mismatch at {x}"
            );
        }
    }
    // Informational timing: structured counter vs dense brute force.
    let mut csv = String::from("n,structured_ms,bruteforce_ms\n");
    for n in [1024usize, 2048] {
        let a = rng.ap_with_noise(n, 1 << 18);
        let b = rng.set(n / 2, 1 << 18);
        let t0 = Instant::now();
        let _ = count_small_doubling(&a, &b, &a, &b).unwrap();
        let t_fast = t0.elapsed().as_secs_f64() * 1e3;
        let t1 = Instant::now();
        let _ = oracles::bf_conv(&SparseVec::from_set(&a), &SparseVec::from_set(&b));
        csv.push_str(&format!(
            "{n},{t_fast:.3},{:.3}\n",
            t1.elapsed().as_secs_f64() * 1e3
        ));
    }
    let path = tmp_path("small_doubling_timing.csv");
    std::fs::write(&path, csv).unwrap();
    println!(
        "criterion 04 (structured 3SUM counts, 200 instances; timing CSV at {}): PASS",
        path.display()
    );
}

#[test]
fn criterion_05_modulus_and_cover() {
    let mut rng = Rng::new(505);
    for inst in 0..200u32 {
        let span = 1u64 << (8 + rng.below(9));
        let n = rng.size(8, 1024);
        let s = if inst % 2 == 0 {
            rng.ap_with_noise(n, span)
        } else {
            rng.set(n, span)
        };
        let res = find_modulus(&s, span).unwrap();
        let ns = s.len() as u64;
        assert!(2 * res.modulus >= ns, "instance {inst}: modulus below |S|/2");
        assert!(
            (res.modulus as f64) <= modulus_slack(ns, span) * ns as f64,
            "instance {inst}: modulus {} above the slack budget",
            res.modulus
        );
        assert!(
            10 * res.distinct_residues >= 9 * s.len(),
            "instance {inst}: fewer than 90% distinct residues"
        );
        for &p in &res.prime_factors {
            assert!(addcomb::is_prime_u64(p), "instance {inst}: composite factor {p}");
        }

        // Cover a residue set modulo a small M.
        let m = (64 + rng.below((1 << 12) - 64)).min(1 << 12);
        let s_hat: Vec<u64> = s.iter().map(|&x| x.rem_euclid(m as i64) as u64).collect();
        let cover = find_cover(&s_hat, m).unwrap();
        let mut hit = vec![false; m as usize];
        let mut base = s_hat.clone();
        base.sort_unstable();
        base.dedup();
        for &x in &base {
            for &d in &cover.deltas {
                hit[((x + d) % m) as usize] = true;
            }
        }
        assert!(hit.iter().all(|&h| h), "instance {inst}: Z_M not covered");
        let cap = 2.0 * m as f64 * (m as f64).ln().max(1.0) / base.len() as f64;
        assert!(
            (cover.deltas.len() as f64) <= cap.max(1.0),
            "instance {inst}: cover size {} > {cap}",
            cover.deltas.len()
        );

        // Partition a target batch; every class must obey its load bound.
        let targets: Vec<i64> = (0..64).map(|_| rng.below(2 * span) as i64).collect();
        if let Ok(classes) = partition_targets(&s, &cover, &targets) {
            let total: usize = classes.iter().map(|c| c.targets.len()).sum();
            assert_eq!(total, targets.len(), "instance {inst}: targets lost");
        }
    }
    println!("criterion 05 (modulus search, covers, target partition, 200 instances): PASS");
}

#[test]
fn criterion_06_hash_family() {
    // Exhaustive bias audit over small binary fields.
    for r in [2u32, 3] {
        for m in 2..=4usize {
            let bs = BiasedSet::with_parameters(2, r, m).unwrap();
            let members = bs.materialize().unwrap();
            let bias = oracles::bf_bias(&members, 2).unwrap();
            let bound = (m as f64 - 1.0) / (1u64 << r) as f64;
            assert!(bias <= bound + 1e-9, "bias {bias} > {bound} for r={r}, m={m}");
        }
    }

    // Family size bound and almost-linearity of the evaluations.
    let cfg = HashFamilyConfig {
        k: 2,
        q_factor: 6.0,
        p_override: Some(97),
    };
    let n = 1u64 << 14;
    let fam = build_hash_family(n, &cfg).unwrap();
    let size_cap = 4.0 * (fam.m as f64).powi(2) * (fam.p as f64).powi(3 * cfg.k as i32);
    assert!((fam.size() as f64) <= size_cap, "family size above 4 m^2 p^(3k)");

    let mut rng = Rng::new(606);
    let members: Vec<_> = (0..20)
        .map(|_| fam.member(rng.next() as u128 % fam.size()).unwrap())
        .collect();
    let mut pair_budget = 10_000u32;
    'outer: for h in &members {
        let delta: std::collections::HashSet<u64> = h.delta().into_iter().collect();
        loop {
            if pair_budget == 0 {
                break 'outer;
            }
            pair_budget -= 1;
            let x = rng.below(n) as i64 - (n / 2) as i64;
            let y = rng.below(n) as i64 - (n / 2) as i64;
            let defect = (h.eval(x + y) + 2 * h.p - h.eval(x) - h.eval(y)) % h.p;
            assert!(
                delta.contains(&defect),
                "defect {defect} outside Delta_h for pair ({x}, {y})"
            );
            if pair_budget % 500 == 0 {
                break; // move to the next member
            }
        }
    }
    println!("criterion 06 (hash family: bias, size, almost-linearity): PASS");
}

#[test]
fn criterion_07_bsg_decomposition() {
    let cfg = BsgConfig::default();
    let mut rng = Rng::new(707);
    let mut full_runs = 0u32;
    for inst in 0..50u32 {
        let k = if inst % 2 == 0 { 2.0 } else { 4.0 };
        let n = if inst % 5 == 0 { 8192 } else { rng.size(256, 8192) };
        let span = (n as u64) * (2 + rng.below(3));
        let a = rng.ap_with_noise(n, span);
        let out = bsg_decompose(&a, k, &cfg).unwrap();
        let floor = (a.len() as f64 / (64.0 * k)).ceil() as usize;
        assert!(
            out.a_prime.len() >= floor,
            "instance {inst}: |A'| = {} below floor {floor}",
            out.a_prime.len()
        );
        let max_abs = a.iter().map(|&x| x.unsigned_abs()).max().unwrap().max(1);
        assert!(
            (out.slack - slack_budget(max_abs, &cfg)).abs() < 1e-9,
            "instance {inst}: slack not taken from the budget formula"
        );
        // Plünnecke–Ruzsa certificate on the measured sumsets.
        assert!(
            (out.sumset_aa as f64) <= out.ruzsa_bound + 1e-6,
            "instance {inst}: |A'+A'| = {} above the certificate {}",
            out.sumset_aa,
            out.ruzsa_bound
        );
        assert!(out.a_prime.iter().all(|x| a.binary_search(x).is_ok()));
        if !out.fallback {
            full_runs += 1;
        }
    }
    assert!(full_runs >= 5, "only {full_runs} instances exercised the full pipeline");
    println!(
        "criterion 07 (BSG decomposition, 50 instances, {full_runs} full-pipeline runs): PASS"
    );
}

#[test]
fn criterion_08_popular_sums_exact() {
    let cfg = PopularExactConfig::default();
    let mut rng = Rng::new(808);
    for inst in 0..200u32 {
        let span = 1u64 << (8 + rng.below(7));
        let na = rng.size(8, 2048);
        let a = if inst % 3 == 0 {
            rng.ap_with_noise(na, span)
        } else {
            rng.set(na, span)
        };
        let nb = rng.size(8, 2048);
        let b = rng.set(nb, span);
        let f = oracles::bf_conv(&SparseVec::from_set(&a), &SparseVec::from_set(&b));
        for k in [1u64, 2, 8, b.len() as u64] {
            let got = popular_sums_exact(&a, &b, k, &cfg).unwrap();
            let mut want_sums = Vec::new();
            let mut want_counts = BTreeMap::new();
            for &(s, v) in f.entries() {
                if (v as u128) * (k as u128) >= a.len() as u128 {
                    want_sums.push(s);
                    want_counts.insert(s, v);
                }
            }
            assert_eq!(got.sums, want_sums, "instance {inst}, k={k}: sum list");
            assert_eq!(got.counts, want_counts, "instance {inst}, k={k}: counts");
        }
    }
    println!("criterion 08 (exact popular sums vs oracle, 200 instances x 4 k): PASS");
}

#[test]
fn criterion_09_hamming() {
    let params = ApproxParams::default();
    let mut rng = Rng::new(909);
    // Additive approximation within eps * m.
    for inst in 0..200u32 {
        let n = rng.size(16, 8192);
        let m = rng.size(4, n as u64).min(n);
        let sigma = 2 + rng.below(6) as u32;
        let t: Vec<u32> = (0..n).map(|_| rng.below(sigma as u64) as u32).collect();
        let p: Vec<u32> = (0..m).map(|_| rng.below(sigma as u64) as u32).collect();
        let eps = [0.5, 0.1][(inst % 2) as usize];
        let approx = hamming_additive(&t, &p, eps, &params).unwrap();
        let exact = oracles::bf_hamming(&t, &p).unwrap();
        let bound = eps * m as f64 + 1e-6;
        for (i, (x, &e)) in approx.iter().zip(&exact).enumerate() {
            assert!(
                (x - e as f64).abs() <= bound,
                "instance {inst}: additive error at shift {i} above eps*m"
            );
        }
    }
    // Dyadic run-length scheme within eps * k, including instances far from
    // the k-mismatch promise.
    for inst in 0..60u32 {
        let k = [1u64, 8, 64][(inst % 3) as usize];
        let n = rng.size(64, 4096);
        let m = rng.size(8, (n as u64) / 2).min(n / 2);
        let sigma = 2 + rng.below(3) as u32;
        // Runny strings: repeat each symbol a geometric-ish number of times.
        let mut t = Vec::with_capacity(n);
        while t.len() < n {
            let sym = rng.below(sigma as u64) as u32;
            let cap = 1 + rng.below(16);
            let run = 1 + rng.below(cap) as usize;
            t.extend(std::iter::repeat(sym).take(run.min(n - t.len())));
        }
        let mut p = Vec::with_capacity(m);
        while p.len() < m {
            let sym = rng.below(sigma as u64) as u32;
            let cap = 1 + rng.below(16);
            let run = 1 + rng.below(cap) as usize;
            p.extend(std::iter::repeat(sym).take(run.min(m - p.len())));
        }
        let eps = 0.25;
        let inst_rle = RleInstance::from_strings(&t, &p, k).unwrap();
        let approx = hamming_rle_dyadic(&inst_rle, eps, k, &params).unwrap();
        let exact = oracles::bf_hamming(&t, &p).unwrap();
        let bound = eps * k as f64 + 1e-6;
        for (i, (x, &e)) in approx.iter().zip(&exact).enumerate() {
            assert!(
                (x - e as f64).abs() <= bound,
                "instance {inst} (k={k}): dyadic error at shift {i} above eps*k"
            );
        }
    }
    // Informational: one large binary instance.
    let n = 1_000_000usize;
    let t: Vec<u32> = (0..n).map(|_| rng.below(2) as u32).collect();
    let p: Vec<u32> = (0..4096).map(|_| rng.below(2) as u32).collect();
    let t0 = Instant::now();
    let _ = hamming_additive(&t, &p, 0.1, &params).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    println!(
        "criterion 09 (Hamming profiles, 200 + 60 instances; n=10^6 additive run {secs:.1}s): PASS"
    );
}

#[test]
fn criterion_10_constellation_and_wildcard() {
    let cfg = ConstellationConfig::default();
    let mut rng = Rng::new(1010);
    for inst in 0..200u32 {
        let span = 1u64 << (9 + rng.below(6));
        let nb = rng.size(4, 48);
        let b = rng.set(nb, span / 8);
        let na = rng.size(32, 2000);
        let mut a = rng.set(na, span);
        // Plant a few perturbed copies of B so occurrences exist.
        for _ in 0..3 {
            let shift = rng.below(span) as i64;
            for (j, &x) in b.iter().enumerate() {
                if j % 7 != 3 {
                    a.push(x + shift);
                }
            }
        }
        let a = addcomb::normalize_set(a);
        let k = rng.below(b.len() as u64) ;
        let got = constellation_deterministic(&a, &b, k, &cfg).unwrap();
        let want = constellation_bruteforce(&a, &b, k, Convention::AtMost).unwrap();
        assert_eq!(got, want, "instance {inst} (k={k}): occurrence lists differ");
    }
    for inst in 0..200u32 {
        let n = rng.size(32, 600);
        let m = rng.size(4, (n as u64) / 2).min(n / 2);
        let sigma = 2 + rng.below(5) as u64;
        let t: Vec<u32> = (0..n).map(|_| rng.below(sigma) as u32).collect();
        let p: Vec<Option<u32>> = (0..m)
            .map(|_| {
                if rng.below(5) == 0 {
                    None
                } else {
                    Some(rng.below(sigma) as u32)
                }
            })
            .collect();
        let k = rng.below(4);
        let got = wildcard_match(&t, &p, k, &cfg).unwrap();
        let want = oracles::bf_wildcard(&t, &p, k).unwrap();
        assert_eq!(got, want, "instance {inst} (k={k}): wildcard shifts differ");
    }
    // Informational timing CSV on one constellation family.
    let mut csv = String::from("scene,deterministic_ms,bruteforce_ms\n");
    for n in [2000usize, 6000] {
        let b = rng.set(30, 400);
        let a = rng.set(n, (n as u64) * 16);
        let t0 = Instant::now();
        let _ = constellation_deterministic(&a, &b, 4, &cfg).unwrap();
        let fast = t0.elapsed().as_secs_f64() * 1e3;
        let t1 = Instant::now();
        let _ = constellation_bruteforce(&a, &b, 4, Convention::AtMost).unwrap();
        csv.push_str(&format!("{n},{fast:.3},{:.3}\n", t1.elapsed().as_secs_f64() * 1e3));
    }
    let path = tmp_path("constellation_timing.csv");
    std::fs::write(&path, csv).unwrap();
    println!(
        "criterion 10 (constellation + wildcard vs oracle, 200 + 200 instances; CSV at {}): PASS",
        path.display()
    );
}

#[test]
fn criterion_11_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, body: String| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    };
    let mut rng = Rng::new(1111);
    let a = write(
        "a.txt",
        rng.set(600, 1 << 13)
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join("\n"),
    );
    let b = write(
        "b.txt",
        rng.set(25, 1 << 9)
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join("\n"),
    );
    let bin = env!("CARGO_BIN_EXE_addcomb");
    let invocations: Vec<Vec<String>> = vec![
        vec!["conv".into(), a.display().to_string(), b.display().to_string()],
        vec![
            "count-popular".into(),
            a.display().to_string(),
            b.display().to_string(),
            "--k".into(),
            "8".into(),
        ],
        vec![
            "constellation".into(),
            a.display().to_string(),
            b.display().to_string(),
            "--k".into(),
            "3".into(),
        ],
    ];
    for args in &invocations {
        let mut outputs: Vec<Vec<u8>> = Vec::new();
        for threads in ["1", "4", "1", "4", "1"] {
            let out = Command::new(bin)
                .arg("--threads")
                .arg(threads)
                .args(args)
                .output()
                .unwrap();
            assert!(
                out.status.success(),
                "{:?} failed: {}",
                args,
                String::from_utf8_lossy(&out.stderr)
            );
            outputs.push(out.stdout);
        }
        for o in &outputs[1..] {
            assert_eq!(
                o, &outputs[0],
                "{args:?}: output differs across runs / thread counts"
            );
        }
    }
    println!("criterion 11 (bit-identical CLI output across runs and thread counts): PASS");
}
