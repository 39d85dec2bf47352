//! Command-line front end for the additive-combinatorics toolbox.
//!
//! Every subcommand reads plain-text inputs (one integer per line for point
//! sets and multisets; raw strings for text/pattern commands), runs the
//! corresponding library routine, and prints a single JSON document to
//! stdout:
//!
//! ```json
//! {"schema_version": 1, "command": "...", "parameters": {...},
//!  "payload": {...}, "metadata": {...}}
//! ```
//!
//! Output is deterministic: maps are emitted in sorted key order and wall
//! times are only included when `--timing` is passed.  `--oracle` re-checks
//! the result against an independent brute-force computation and exits with
//! status 3 on any discrepancy (the same status used for internal invariant
//! violations); usage errors exit with status 2.

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use addcomb::approx_count::{approx_energy, popular_sums_approx, ApproxParams};
use addcomb::bsg::{bsg_decompose, BsgConfig};
use addcomb::constellation::{
    candidate_filter_subsample, constellation_bruteforce, constellation_deterministic,
    wildcard_match, ConstellationConfig, Convention,
};
use addcomb::hamming::{hamming_additive, hamming_exact, hamming_rle_dyadic, RleInstance};
use addcomb::oracles;
use addcomb::popular_exact::{popular_sums_exact, PopularExactConfig};
use addcomb::small_doubling::count_small_doubling;
use addcomb::vecmath::{conv_sparse, MultiSet, SparseVec};

#[derive(Parser)]
#[command(
    name = "addcomb",
    version,
    about = "Deterministic additive-combinatorics toolbox: 3SUM-style counting, \
             BSG decomposition, and pattern-matching applications"
)]
struct Cli {
    /// Number of worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Include wall-clock timing in the output metadata (makes output
    /// non-reproducible byte for byte).
    #[arg(long, global = true)]
    timing: bool,
    /// Cross-check the result against a brute-force oracle; exit 3 on
    /// mismatch.
    #[arg(long, global = true)]
    oracle: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct TwoSets {
    /// First input file (one integer per line).
    a: PathBuf,
    /// Second input file (one integer per line).
    b: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum HammingMode {
    /// Exact distance profile.
    Exact,
    /// Additive approximation with error eps * m.
    Additive,
    /// Run-length dyadic approximation with error eps * k.
    Rle,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConstellationMethod {
    /// Scan all plausible translations.
    Bruteforce,
    /// Deterministic scaling pipeline.
    Deterministic,
    /// Randomized candidate filter (superset of occurrences).
    Subsample,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact convolution of two multisets.
    Conv {
        #[command(flatten)]
        sets: TwoSets,
        /// Declared universe bound (default: max element + 1).
        #[arg(long)]
        universe: Option<u64>,
    },
    /// Approximate popular sums of two sets with additive error eps * |B|.
    ApproxPopular {
        #[command(flatten)]
        sets: TwoSets,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    /// Approximate additive energy of a set with error eps * |A|^3.
    Energy {
        a: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    /// Exact k-popular sums (count >= |A| / k) with their counts.
    CountPopular {
        #[command(flatten)]
        sets: TwoSets,
        #[arg(long)]
        k: u64,
    },
    /// Exact 3SUM counts against a structured shift set.
    SmallDoubling {
        a: PathBuf,
        b: PathBuf,
        c: PathBuf,
        /// Shift set file.
        s: PathBuf,
    },
    /// Constructive Balog-Szemeredi-Gowers decomposition.
    Bsg {
        a: PathBuf,
        /// Energy parameter K (the input should satisfy E(A) >= |A|^3 / K).
        #[arg(long)]
        k: f64,
    },
    /// Text-to-pattern Hamming distance profile.
    Hamming {
        /// Text file (raw string; trailing newline ignored).
        text: PathBuf,
        /// Pattern file (raw string; trailing newline ignored).
        pattern: PathBuf,
        #[arg(long, value_enum, default_value_t = HammingMode::Exact)]
        mode: HammingMode,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Mismatch budget for the rle mode.
        #[arg(long, default_value_t = 1)]
        k: u64,
    },
    /// k-mismatch constellation occurrences.
    Constellation {
        #[command(flatten)]
        sets: TwoSets,
        #[arg(long)]
        k: u64,
        #[arg(long, value_enum, default_value_t = ConstellationMethod::Deterministic)]
        method: ConstellationMethod,
        /// Use the strict comparison |(c+B)\A| < k instead of <=.
        #[arg(long)]
        strict: bool,
        /// Seed for the subsample method.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// k-mismatch string matching with '?' wildcards in the pattern.
    Wildcard {
        text: PathBuf,
        pattern: PathBuf,
        #[arg(long, default_value_t = 0)]
        k: u64,
    },
    /// Built-in micro-benchmarks; writes a CSV.
    Bench {
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Quick internal consistency check against the brute-force oracles.
    Selftest,
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Signed point set: one integer per line, blank lines ignored.
fn read_set(path: &Path) -> Result<Vec<i64>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(t.parse::<i64>().with_context(|| {
            format!("{}:{}: expected an integer", path.display(), lineno + 1)
        })?);
    }
    if out.is_empty() {
        return Err(anyhow!("{}: empty input", path.display()));
    }
    Ok(out)
}

fn read_multiset(path: &Path, universe: Option<u64>) -> Result<MultiSet> {
    Ok(MultiSet::parse(&read_to_string(path)?, universe)?)
}

/// Raw string input: file contents with one trailing newline stripped.
fn read_text(path: &Path) -> Result<Vec<u32>> {
    let mut s = read_to_string(path)?;
    if s.ends_with('\n') {
        s.pop();
    }
    Ok(s.chars().map(u32::from).collect())
}

fn read_pattern_with_wildcards(path: &Path) -> Result<Vec<Option<u32>>> {
    Ok(read_text(path)?
        .into_iter()
        .map(|c| if c == u32::from('?') { None } else { Some(c) })
        .collect())
}

fn entries_json(v: &SparseVec) -> Value {
    Value::Array(
        v.entries()
            .iter()
            .map(|&(i, c)| json!([i, c]))
            .collect(),
    )
}

fn counts_json(m: &BTreeMap<i64, u64>) -> Value {
    let mut obj = Map::new();
    for (&k, &v) in m {
        obj.insert(k.to_string(), json!(v));
    }
    Value::Object(obj)
}

/// Oracle mismatch or library invariant violation: exit status 3.
fn fail_check(msg: &str) -> ! {
    eprintln!("check failed: {msg}");
    std::process::exit(3);
}

fn run(cli: &Cli) -> Result<(String, Value, Value)> {
    let approx = ApproxParams::default();
    Ok(match &cli.cmd {
        Cmd::Conv { sets, universe } => {
            let a = read_multiset(&sets.a, *universe)?;
            let b = read_multiset(&sets.b, *universe)?;
            let f = conv_sparse(&a.to_sparse(), &b.to_sparse())?;
            if cli.oracle {
                let g = oracles::bf_conv(&a.to_sparse(), &b.to_sparse());
                if f != g {
                    fail_check("convolution differs from brute force");
                }
            }
            (
                "conv".into(),
                json!({"a": sets.a, "b": sets.b, "universe": universe}),
                json!({"entries": entries_json(&f), "mass": f.mass().to_string()}),
            )
        }
        Cmd::ApproxPopular { sets, eps } => {
            let a = read_multiset(&sets.a, None)?;
            let b = read_multiset(&sets.b, None)?;
            let f = popular_sums_approx(&a.to_sparse(), &b.to_sparse(), *eps, &approx)?;
            if cli.oracle {
                let g = oracles::bf_conv(&a.to_sparse(), &b.to_sparse());
                let bound = eps * b.mass() as f64;
                for &(i, v) in f.entries() {
                    if (v as f64 - g.get(i) as f64).abs() > bound {
                        fail_check(&format!("approximation error at {i} exceeds eps * |B|"));
                    }
                }
            }
            (
                "approx-popular".into(),
                json!({"a": sets.a, "b": sets.b, "eps": eps}),
                json!({"entries": entries_json(&f)}),
            )
        }
        Cmd::Energy { a, eps } => {
            let set = read_multiset(a, None)?.support_set();
            let est = approx_energy(&set, *eps, &approx)?;
            if cli.oracle {
                let exact = oracles::bf_energy(&set)? as f64;
                if (est - exact).abs() > eps * (set.len() as f64).powi(3) {
                    fail_check("energy estimate outside the advertised error");
                }
            }
            (
                "energy".into(),
                json!({"a": a, "eps": eps}),
                json!({"estimate": est, "set_size": set.len()}),
            )
        }
        Cmd::CountPopular { sets, k } => {
            let a = read_multiset(&sets.a, None)?.support_set();
            let b = read_multiset(&sets.b, None)?.support_set();
            let ps = popular_sums_exact(&a, &b, *k, &PopularExactConfig::default())?;
            if cli.oracle {
                let f = oracles::bf_conv(&SparseVec::from_set(&a), &SparseVec::from_set(&b));
                let want: Vec<i64> = f
                    .entries()
                    .iter()
                    .filter(|&&(_, v)| (v as u128) * (*k as u128) >= a.len() as u128)
                    .map(|&(s, _)| s)
                    .collect();
                if ps.sums != want {
                    fail_check("popular-sum list differs from brute force");
                }
            }
            (
                "count-popular".into(),
                json!({"a": sets.a, "b": sets.b, "k": k}),
                json!({"sums": ps.sums, "counts": counts_json(&ps.counts),
                       "parts": ps.parts}),
            )
        }
        Cmd::SmallDoubling { a, b, c, s } => {
            let (av, bv, cv, sv) = (read_set(a)?, read_set(b)?, read_set(c)?, read_set(s)?);
            let out = count_small_doubling(&av, &bv, &cv, &sv)?;
            if cli.oracle {
                let f = oracles::bf_conv(&SparseVec::from_set(&av), &SparseVec::from_set(&bv));
                for (&t, &v) in &out.c_counts {
                    if f.get(t) != v {
                        fail_check(&format!("c-count at {t} differs from brute force"));
                    }
                }
            }
            (
                "small-doubling".into(),
                json!({"a": a, "b": b, "c": c, "s": s}),
                json!({"c_counts": counts_json(&out.c_counts),
                       "a_counts": counts_json(&out.a_counts)}),
            )
        }
        Cmd::Bsg { a, k } => {
            let set = read_set(a)?;
            let out = bsg_decompose(&set, *k, &BsgConfig::default())?;
            let floor = (set.len() as f64 / (64.0 * k)).ceil() as usize;
            if out.a_prime.len() < floor {
                fail_check("decomposition output below the guaranteed floor");
            }
            (
                "bsg".into(),
                json!({"a": a, "k": k}),
                json!({
                    "a_prime": out.a_prime,
                    "b_prime": out.b_prime,
                    "fallback": out.fallback,
                    "slack": out.slack,
                    "sumset_ab": out.sumset_ab,
                    "sumset_aa": out.sumset_aa,
                    "ruzsa_bound": out.ruzsa_bound,
                }),
            )
        }
        Cmd::Hamming {
            text,
            pattern,
            mode,
            eps,
            k,
        } => {
            let t = read_text(text)?;
            let p = read_text(pattern)?;
            let payload = match mode {
                HammingMode::Exact => {
                    let d = hamming_exact(&t, &p)?;
                    if cli.oracle && d != oracles::bf_hamming(&t, &p)? {
                        fail_check("distance profile differs from brute force");
                    }
                    json!({"distances": d})
                }
                HammingMode::Additive => {
                    let d = hamming_additive(&t, &p, *eps, &approx)?;
                    if cli.oracle {
                        let exact = oracles::bf_hamming(&t, &p)?;
                        let bound = eps * p.len() as f64 + 1e-9;
                        if d.iter()
                            .zip(&exact)
                            .any(|(x, &e)| (x - e as f64).abs() > bound)
                        {
                            fail_check("additive profile outside eps * m");
                        }
                    }
                    json!({"distances": d})
                }
                HammingMode::Rle => {
                    let inst = RleInstance::from_strings(&t, &p, *k)?;
                    let d = hamming_rle_dyadic(&inst, *eps, *k, &approx)?;
                    if cli.oracle {
                        let exact = oracles::bf_hamming(&t, &p)?;
                        let bound = eps * *k as f64 + 1e-9;
                        if d.iter()
                            .zip(&exact)
                            .any(|(x, &e)| (x - e as f64).abs() > bound)
                        {
                            fail_check("dyadic profile outside eps * k");
                        }
                    }
                    json!({"distances": d})
                }
            };
            (
                "hamming".into(),
                json!({"text": text, "pattern": pattern, "mode": format!("{mode:?}"),
                       "eps": eps, "k": k}),
                payload,
            )
        }
        Cmd::Constellation {
            sets,
            k,
            method,
            strict,
            seed,
        } => {
            let a = read_set(&sets.a)?;
            let b = read_set(&sets.b)?;
            let convention = if *strict {
                Convention::StrictLess
            } else {
                Convention::AtMost
            };
            let cfg = ConstellationConfig {
                convention,
                ..ConstellationConfig::default()
            };
            let payload = match method {
                ConstellationMethod::Bruteforce => {
                    json!({"occurrences": constellation_bruteforce(&a, &b, *k, convention)?})
                }
                ConstellationMethod::Deterministic => {
                    let occ = constellation_deterministic(&a, &b, *k, &cfg)?;
                    if cli.oracle {
                        let want = constellation_bruteforce(&a, &b, *k, convention)?;
                        if occ != want {
                            fail_check("occurrence list differs from brute force");
                        }
                    }
                    json!({"occurrences": occ})
                }
                ConstellationMethod::Subsample => {
                    let cs = candidate_filter_subsample(&a, &b, *k, convention, *seed)?;
                    if cli.oracle {
                        let want = constellation_bruteforce(&a, &b, *k, convention)?;
                        let cset: std::collections::HashSet<i64> =
                            cs.candidates.iter().copied().collect();
                        if want.iter().any(|c| !cset.contains(c)) {
                            fail_check("candidate list misses an occurrence");
                        }
                    }
                    json!({"candidates": cs.candidates, "exact": cs.exact})
                }
            };
            (
                "constellation".into(),
                json!({"a": sets.a, "b": sets.b, "k": k, "method": format!("{method:?}"),
                       "strict": strict, "seed": seed}),
                payload,
            )
        }
        Cmd::Wildcard { text, pattern, k } => {
            let t = read_text(text)?;
            let p = read_pattern_with_wildcards(pattern)?;
            let occ = wildcard_match(&t, &p, *k, &ConstellationConfig::default())?;
            if cli.oracle && occ != oracles::bf_wildcard(&t, &p, *k)? {
                fail_check("wildcard match list differs from brute force");
            }
            (
                "wildcard".into(),
                json!({"text": text, "pattern": pattern, "k": k}),
                json!({"shifts": occ}),
            )
        }
        Cmd::Bench { out } => {
            let rows = run_bench()?;
            let mut csv = String::from("task,size,impl_ms,baseline_ms\n");
            for (task, size, impl_ms, base_ms) in &rows {
                csv.push_str(&format!("{task},{size},{impl_ms:.3},{base_ms:.3}\n"));
            }
            std::fs::write(out, csv).with_context(|| format!("writing {}", out.display()))?;
            (
                "bench".into(),
                json!({"out": out}),
                json!({"rows": rows.len()}),
            )
        }
        Cmd::Selftest => {
            let checks = run_selftest()?;
            ("selftest".into(), json!({}), json!({"checks": checks, "status": "pass"}))
        }
    })
}

/// Deterministic xorshift point set for the built-in checks.
fn pseudo_random(n: usize, span: u64, seed: u64) -> Vec<i64> {
    let mut state = seed | 1;
    let mut v = Vec::with_capacity(n);
    for _ in 0..n {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        v.push((state % span) as i64);
    }
    v.sort_unstable();
    v.dedup();
    v
}

fn run_selftest() -> Result<u64> {
    let approx = ApproxParams::default();
    let mut checks = 0u64;
    for seed in [2, 9] {
        let a = pseudo_random(400, 5000, seed);
        let b = pseudo_random(300, 5000, seed + 1);
        let (sa, sb) = (SparseVec::from_set(&a), SparseVec::from_set(&b));
        let exact = oracles::bf_conv(&sa, &sb);
        if conv_sparse(&sa, &sb)? != exact {
            fail_check("selftest: convolution mismatch");
        }
        checks += 1;
        let f = popular_sums_approx(&sa, &sb, 0.1, &approx)?;
        for &(i, v) in f.entries() {
            if (v as f64 - exact.get(i) as f64).abs() > 0.1 * b.len() as f64 {
                fail_check("selftest: approximation error bound violated");
            }
        }
        checks += 1;
        let csd = count_small_doubling(&a, &b, &a, &b)?;
        if csd.c_counts.iter().any(|(&t, &v)| exact.get(t) != v) {
            fail_check("selftest: structured counter mismatch");
        }
        checks += 1;
        let bsmall = pseudo_random(25, 200, seed + 2);
        let occ = constellation_deterministic(
            &a,
            &bsmall,
            4,
            &ConstellationConfig::default(),
        )?;
        if occ != constellation_bruteforce(&a, &bsmall, 4, Convention::AtMost)? {
            fail_check("selftest: constellation mismatch");
        }
        checks += 1;
    }
    Ok(checks)
}

fn run_bench() -> Result<Vec<(String, usize, f64, f64)>> {
    let approx = ApproxParams::default();
    let mut rows = Vec::new();
    let ms = |t: Instant| t.elapsed().as_secs_f64() * 1e3;
    for n in [1000usize, 4000] {
        let a = pseudo_random(n, (n * 16) as u64, 7);
        let b = pseudo_random(n, (n * 16) as u64, 8);
        let (sa, sb) = (SparseVec::from_set(&a), SparseVec::from_set(&b));
        let t0 = Instant::now();
        let _ = popular_sums_approx(&sa, &sb, 0.1, &approx)?;
        let t_impl = ms(t0);
        let t1 = Instant::now();
        let _ = oracles::bf_conv(&sa, &sb);
        rows.push(("approx-popular".into(), n, t_impl, ms(t1)));

        let t0 = Instant::now();
        let _ = count_small_doubling(&a, &b, &a, &b)?;
        let t_impl = ms(t0);
        let t1 = Instant::now();
        let _ = oracles::bf_conv(&sa, &sb);
        rows.push(("small-doubling".into(), n, t_impl, ms(t1)));
    }
    let bsmall = pseudo_random(30, 400, 9);
    let scene = pseudo_random(3000, 40000, 10);
    let t0 = Instant::now();
    let _ = constellation_deterministic(&scene, &bsmall, 4, &ConstellationConfig::default())?;
    let t_impl = ms(t0);
    let t1 = Instant::now();
    let _ = constellation_bruteforce(&scene, &bsmall, 4, Convention::AtMost)?;
    rows.push(("constellation".into(), scene.len(), t_impl, ms(t1)));
    Ok(rows)
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        addcomb::set_threads(n);
    }
    let started = Instant::now();
    match run(&cli) {
        Ok((command, parameters, payload)) => {
            let mut metadata = Map::new();
            if cli.timing {
                metadata.insert(
                    "wall_time_ms".into(),
                    json!(started.elapsed().as_secs_f64() * 1e3),
                );
            }
            let doc = json!({
                "schema_version": 1,
                "command": command,
                "parameters": parameters,
                "payload": payload,
                "metadata": metadata,
            });
            println!("{doc}");
        }
        Err(e) => {
            // Library invariant violations share the oracle-mismatch status.
            let status = match e.downcast_ref::<addcomb::Error>() {
                Some(addcomb::Error::Invariant(_)) => 3,
                _ => 1,
            };
            eprintln!("error: {e:#}");
            std::process::exit(status);
        }
    }
}
