//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use std::time::{Duration, Instant};

use locksmith::functional::{analyze_unateness, distance_2h, is_positive_unate, sliding_window, Algorithm};
use locksmith::keyconf::{
    confirm_or_fallback, key_confirmation, sat_attack, verify_key, ConfirmOptions, KeyPredicate, Outcome,
    SimulationOracle, Verdict,
};
use locksmith::netlist::{parse_bench, DEFAULT_KEY_PREFIX};
use locksmith::structural::{find_comparators, key_pairing};
use locksmith::{build_strip_circuit, extract_candidate_keys, lock_sfll_hd, Bits, Circuit, ExtractOptions, HChoice, LockParams, ProtectedCube};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn hd(a: u64, b: u64) -> usize {
    (a ^ b).count_ones() as usize
}

fn bit(v: u64, j: usize, m: usize) -> bool {
    v >> (m - 1 - j) & 1 == 1
}

fn names(m: usize) -> Vec<String> {
    (0..m).map(|i| format!("x{i}")).collect()
}

fn strip(m: usize, k: u64, h: usize) -> Circuit {
    let n = names(m);
    let refs: Vec<&str> = n.iter().map(String::as_str).collect();
    build_strip_circuit(&refs, &Bits::from_u64(k, m), h).unwrap()
}

fn onset(c: &Circuit, m: usize) -> Vec<u64> {
    (0..1u64 << m).filter(|&x| c.simulate(Bits::from_u64(x, m).as_slice()).unwrap()[0]).collect()
}

// 1. lock the worked example and attack it through the CLI
fn criterion1() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let src = write(dir.path(), "maj.bench", MAJ_OR_D);
    let mut notes = Vec::new();
    for h in [0usize, 1] {
        for obf in [false, true] {
            let out = dir.path().join(format!("l{h}{obf}.bench"));
            let (o, s) = (out.to_str().unwrap(), src.to_str().unwrap());
            let hs = h.to_string();
            let mut args = vec!["lock", s, "-o", o, "--cube", "1001", "--h", &hs, "--seed", "3"];
            if obf {
                args.push("--obfuscate");
            }
            let (code, _) = run_json(&args);
            if code != 0 {
                return Err(format!("lock h={h} obf={obf} exited {code}"));
            }
            let t = Instant::now();
            let (code, v) = run_json(&["attack", o, "--h", &hs]);
            let took = t.elapsed();
            let cands = v["result"]["candidates"].as_array().unwrap();
            let primary: Vec<&str> =
                cands.iter().filter(|c| c["derived_complement"] == false).map(|c| c["key"].as_str().unwrap()).collect();
            let flagged: Vec<&str> =
                cands.iter().filter(|c| c["derived_complement"] == true).map(|c| c["key"].as_str().unwrap()).collect();
            let flagged_ok = flagged.is_empty() || (h == 1 && flagged == ["0110"]);
            if primary != ["1001"] || !flagged_ok {
                return Err(format!("h={h} obf={obf}: candidates {primary:?} flagged {flagged:?}"));
            }
            if took >= Duration::from_secs(1) {
                return Err(format!("h={h} obf={obf}: attack took {took:?}"));
            }
            notes.push(format!("h={h}/obf={obf} exit {code} in {}ms", took.as_millis()));
        }
    }
    Ok(notes.join(", "))
}

// 2. stripper properties against brute-force truth tables, m <= 6, h in {0,1,2}
fn criterion2() -> Check {
    let t = Instant::now();
    let mut checks = 0u64;
    for m in 1..=6usize {
        for k in 0..1u64 << m {
            // unateness of strip_0
            let c = strip(m, k, 0);
            let root = c.outputs()[0];
            let table = onset(&c, m);
            let f = |x: u64| table.contains(&x);
            for j in 0..m {
                let flip = 1u64 << (m - 1 - j);
                let pos = (0..1u64 << m).all(|x| bit(x, j, m) || !f(x) || f(x | flip));
                let neg = (0..1u64 << m).all(|x| !bit(x, j, m) || !f(x) || f(x & !flip));
                let xi = c.find(&format!("x{j}")).unwrap();
                let solver = is_positive_unate(&c, root, xi, None).unwrap();
                if pos != bit(k, j, m) || neg == bit(k, j, m) || solver != pos {
                    return Err(format!("unateness fails at m={m} k={k:0m$b} j={j}"));
                }
                checks += 1;
            }
            let cube = analyze_unateness(&c, root, None).unwrap().map(|c| c.bits().to_u64());
            if cube != Some(k) {
                return Err(format!("unateness cube {cube:?} for m={m} k={k:0m$b}"));
            }
            for h in 1..=2usize {
                if h > m {
                    continue;
                }
                let c = strip(m, k, h);
                let on = onset(&c, m);
                // onset pairs 2h apart agree with K
                for &a in &on {
                    for &b in &on {
                        if hd(a, b) == 2 * h {
                            let agree = !(a ^ b) & ((1 << m) - 1);
                            if a & agree != k & agree {
                                return Err(format!("pair agreement fails at m={m} h={h} k={k:0m$b}"));
                            }
                            checks += 1;
                        }
                    }
                }
                // forcing x_j = x_j' = b is satisfiable iff b = k_j
                if 2 * h < m {
                    for j in 0..m {
                        for b in [false, true] {
                            let sat = on.iter().any(|&x| {
                                bit(x, j, m) == b && on.iter().any(|&y| bit(y, j, m) == b && hd(x, y) == 2 * h)
                            });
                            if sat != (b == bit(k, j, m)) {
                                return Err(format!("forced-bit check fails at m={m} h={h} k={k:0m$b} j={j}"));
                            }
                            checks += 1;
                        }
                    }
                    let root = c.outputs()[0];
                    if h < m / 2 && sliding_window(&c, root, h, None).unwrap().map(|c| c.bits().to_u64()) != Some(k) {
                        return Err(format!("sliding window misses m={m} h={h} k={k:0m$b}"));
                    }
                    if 4 * h <= m && distance_2h(&c, root, h, None).unwrap().map(|c| c.bits().to_u64()) != Some(k) {
                        return Err(format!("distance-2h misses m={m} h={h} k={k:0m$b}"));
                    }
                }
            }
        }
    }
    let took = t.elapsed();
    if took > Duration::from_secs(120) {
        return Err(format!("took {took:?}"));
    }
    Ok(format!("{checks} checks, 0 counterexamples, {:.1}s", took.as_secs_f64()))
}

// 3. strip onset equals the Hamming sphere
fn criterion3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut n = 0;
    for m in 1..=8usize {
        for h in 0..=m {
            for _ in 0..64 {
                let k = rng.gen_range(0..1u64 << m);
                let want: Vec<u64> = (0..1u64 << m).filter(|&x| hd(x, k) == h).collect();
                if onset(&strip(m, k, h), m) != want {
                    return Err(format!("m={m} h={h} k={k:0m$b}"));
                }
                n += 1;
            }
        }
    }
    Ok(format!("{n} strip circuits match"))
}

// 4. benchmark circuits, 16 and 24 key bits
fn criterion4() -> Check {
    let mut wins = 0;
    let mut total = 0;
    let mut slowest = Duration::ZERO;
    let mut failures = Vec::new();
    for name in ["c432", "c499", "c880"] {
        let c = parse_bench(&std::fs::read_to_string(benchmark(name)).unwrap(), DEFAULT_KEY_PREFIX).unwrap();
        for m in [16usize, 24] {
            for h in [0, m / 8, m / 4] {
                total += 1;
                let seed = (m * 10 + h) as u64;
                let cube = ProtectedCube::random_seeded(&c, m, seed).unwrap();
                let l = lock_sfll_hd(&c, &cube, &LockParams { h, obfuscate: Some(seed), ..Default::default() }).unwrap();
                let t = Instant::now();
                let opts = ExtractOptions { h: HChoice::Fixed(h), timeout: Some(Duration::from_secs(1000)), ..Default::default() };
                let ex = extract_candidate_keys(&l.circuit, &opts);
                let took = t.elapsed();
                slowest = slowest.max(took);
                let want_alg = if h == 0 { Algorithm::Unateness } else { Algorithm::Distance2h };
                let hit = ex.candidates.iter().find(|k| k.key == l.key && k.algorithm == want_alg);
                let verified = hit.is_some() && verify_key(&l.circuit, &l.key, &c, None).unwrap() == Verdict::Equivalent;
                if verified && took < Duration::from_secs(1000) {
                    wins += 1;
                } else {
                    failures.push(format!("{name}/m={m}/h={h}"));
                }
            }
        }
    }
    let msg = format!("{wins}/{total} recovered, slowest {}ms", slowest.as_millis());
    if failures.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; failed {failures:?}"))
    }
}

struct Instance {
    original: Circuit,
    locked: Circuit,
    key: Bits,
    h: usize,
}

fn random_lock(seed: u64, obfuscate: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.gen_range(8..=11);
    let original = random_circuit(seed, n, rng.gen_range(25..45), 2);
    let m = rng.gen_range(4..=8);
    let h = rng.gen_range(0..=m / 4);
    let cube = ProtectedCube::random_seeded(&original, m, seed).unwrap();
    let l = lock_sfll_hd(&original, &cube, &LockParams { h, obfuscate: obfuscate.then_some(seed), ..Default::default() }).unwrap();
    Instance { original, locked: l.circuit, key: l.key, h }
}

// 5. confirmation soundness on randomized locks
fn criterion5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut max_iter = 0;
    for seed in 0..100u64 {
        let inst = random_lock(seed, seed % 2 == 0);
        let k = inst.key.len();
        let mut phi = vec![inst.key.clone()];
        while phi.len() < 4 {
            let other = Bits::from_u64(rng.gen_range(0..1u64 << k), k);
            if !phi.contains(&other) {
                phi.push(other);
            }
        }
        let pos = rng.gen_range(0..phi.len());
        phi.swap(0, pos);
        let mut oracle = SimulationOracle::new(inst.original.clone()).unwrap();
        let r = key_confirmation(&inst.locked, &KeyPredicate::List(phi), &mut oracle, ConfirmOptions::default()).unwrap();
        max_iter = max_iter.max(r.iterations);
        let Outcome::ConfirmedKey(found) = r.outcome else {
            return Err(format!("seed {seed}: correct key in phi but got {:?}", r.outcome));
        };
        if verify_key(&inst.locked, &found, &inst.original, None).unwrap() != Verdict::Equivalent {
            return Err(format!("seed {seed}: confirmed key {found} is wrong"));
        }
        let mut wrong = Vec::new();
        while wrong.len() < 8 {
            let other = Bits::from_u64(rng.gen_range(0..1u64 << k), k);
            if !wrong.contains(&other) && matches!(verify_key(&inst.locked, &other, &inst.original, None).unwrap(), Verdict::Inequivalent(_)) {
                wrong.push(other);
            }
        }
        let mut oracle = SimulationOracle::new(inst.original.clone()).unwrap();
        let r = key_confirmation(&inst.locked, &KeyPredicate::List(wrong), &mut oracle, ConfirmOptions::default()).unwrap();
        max_iter = max_iter.max(r.iterations);
        if r.outcome != Outcome::NoKeyInPhi {
            return Err(format!("seed {seed} (h={}): eight wrong keys gave {:?}", inst.h, r.outcome));
        }
    }
    Ok(format!("100 locks, 0 violations, at most {max_iter} iterations"))
}

// 6. singleton confirmation against the plain SAT attack on 16-bit TTLock
fn criterion6() -> Check {
    const BUDGET: u64 = 4096;
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, seed) in [("c432", 1u64), ("c432", 2), ("c499", 1), ("c880", 1), ("c880", 2)] {
        let c = parse_bench(&std::fs::read_to_string(benchmark(name)).unwrap(), DEFAULT_KEY_PREFIX).unwrap();
        let cube = ProtectedCube::random_seeded(&c, 16, seed).unwrap();
        let l = lock_sfll_hd(&c, &cube, &LockParams { h: 0, ..Default::default() }).unwrap();
        let mut o1 = SimulationOracle::new(c.clone()).unwrap();
        let kc = key_confirmation(&l.circuit, &KeyPredicate::List(vec![l.key.clone()]), &mut o1, ConfirmOptions::default()).unwrap();
        let mut o2 = SimulationOracle::new(c.clone()).unwrap();
        let sa = sat_attack(&l.circuit, &mut o2, ConfirmOptions { max_iterations: BUDGET, ..Default::default() }).unwrap();
        let confirmed = kc.outcome == Outcome::ConfirmedKey(l.key.clone());
        let sat_slow = sa.iterations >= 1 << 12 || sa.outcome == Outcome::IterationLimit;
        let ratio = sa.oracle_queries as f64 / kc.oracle_queries.max(1) as f64;
        let pass = confirmed && kc.iterations <= 2 && sat_slow && ratio >= 100.0;
        ok &= pass;
        lines.push(format!(
            "{name}/seed {seed}: confirmation {} iterations, SAT attack {} iterations ({:?}), query ratio {ratio:.1}",
            kc.iterations,
            sa.iterations,
            match sa.outcome {
                Outcome::IterationLimit => "budget",
                Outcome::ConfirmedKey(_) => "key",
                _ => "other",
            }
        ));
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

// 7. comparators survive obfuscation; failures fall back to the SAT attack
fn criterion7() -> Check {
    let mut complete = 0;
    for seed in 100..150u64 {
        let inst = random_lock(seed, true);
        let paired = key_pairing(&inst.locked, &find_comparators(&inst.locked));
        if paired.iter().all(Option::is_some) {
            complete += 1;
        } else {
            let mut oracle = SimulationOracle::new(inst.original.clone()).unwrap();
            let (r, fell_back) = confirm_or_fallback(&inst.locked, &[], &mut oracle, ConfirmOptions::default()).unwrap();
            let Outcome::ConfirmedKey(k) = r.outcome else {
                return Err(format!("seed {seed}: fallback gave {:?}", r.outcome));
            };
            if !fell_back || verify_key(&inst.locked, &k, &inst.original, None).unwrap() != Verdict::Equivalent {
                return Err(format!("seed {seed}: fallback key {k} is wrong"));
            }
        }
    }
    let msg = format!("{complete}/50 instances fully paired");
    if complete * 10 >= 50 * 9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// 8. identical candidate lists and DIP traces across runs
fn criterion8() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let c432 = benchmark("c432");
    let mut digests = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("l{i}.bench"));
        let (code, v) = run_json(&["lock", c432.to_str().unwrap(), "-o", out.to_str().unwrap(), "--keysize", "16", "--h", "2", "--seed", "7", "--obfuscate"]);
        if code != 0 {
            return Err(format!("lock exited {code}"));
        }
        digests.push((std::fs::read(&out).unwrap(), json_without_timings(v)["result"]["key"].clone()));
    }
    if digests[0] != digests[1] {
        return Err("locked netlists differ".into());
    }
    let locked = dir.path().join("l0.bench");
    let attack = |jobs: &str| json_without_timings(run_json(&["attack", locked.to_str().unwrap(), "--sweep-h", "0..4", "--jobs", jobs]).1);
    let a = attack("1");
    let b = attack("4");
    if a != b {
        return Err("attack reports differ".into());
    }
    let src = write(dir.path(), "maj.bench", MAJ_OR_D);
    let small = dir.path().join("small.bench");
    run_json(&["lock", src.to_str().unwrap(), "-o", small.to_str().unwrap(), "--cube", "0110", "--h", "1", "--obfuscate", "--seed", "2"]);
    let oracle = format!("sim:{}", src.display());
    let confirm = || json_without_timings(run_json(&["confirm", small.to_str().unwrap(), "--phi", "true", "--oracle", &oracle]).1);
    let (x, y) = (confirm(), confirm());
    if x != y {
        return Err("DIP traces differ".into());
    }
    let inst = random_lock(8, true);
    let traces: Vec<_> = (0..2)
        .map(|_| sat_attack(&inst.locked, &mut SimulationOracle::new(inst.original.clone()).unwrap(), ConfirmOptions::default()).unwrap().dip_trace)
        .collect();
    if traces[0] != traces[1] {
        return Err("library DIP traces differ".into());
    }
    Ok(format!(
        "lock, attack ({} candidates) and {}-DIP traces identical",
        a["result"]["candidates"].as_array().map_or(0, Vec::len),
        x["result"]["dip_trace"].as_array().map_or(0, Vec::len)
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("worked-example recovery", criterion1),
        ("stripper property oracles", criterion2),
        ("strip circuit onset", criterion3),
        ("benchmark recovery", criterion4),
        ("key confirmation correctness", criterion5),
        ("key confirmation speedup", criterion6),
        ("structural fidelity", criterion7),
        ("determinism", criterion8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("criterion {} PASS {name}: {msg} [{secs:.1}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {msg} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
