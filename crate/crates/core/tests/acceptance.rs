//! Acceptance criteria at desk scale. One line per criterion; exit status 1 if any fails.
//!
//! Pinned tolerances: measures are compared as exact rationals with zero tolerance;
//! wall-clock budgets are 600 s for the soundness sweep and 60 s for the 64-stage cutter run.

use num_traits::{One, Zero};
use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};
use wred_core::adversaries::{
    cm_coloring, cutter_psi, max_multiplicity, qwwkl_cutter, rainbow_measure_coloring, rainbow_toy, ts1_diagonalizer, ts1_toy_pairs,
    CutterConfig, MeasureConfig, Ts1Config,
};
use wred_core::catalog::squash_configs;
use wred_core::catalog::trees::{blowup_step, string_at, t_sigma};
use wred_core::catalog::{entries, rt_color_embed, wkl_measure_identity};
use wred_core::codings::{
    bounded_sample, certified_homogeneous, jump_coloring, jump_decode_one, jump_test_predicates, kummer_claim_check,
    kummer_coloring, kummer_test_predicates, seq_rrt1_greedy,
};
use wred_core::combinators::{check_sample, fanout_rt, merge_colorings, merge_digits, split_coloring, split_digits, squash_forward, Markers};
use wred_core::harness::{run_suite, SuiteConfig};
use wred_core::kernel::{family, tuples_of, Point};
use wred_core::measure::{q, Exact};
use wred_core::problems::{code_of, decode_tree, measure_at_level, verify_rainbow_at, wkl, Coloring, Colors, Tree, Verdict};
use wred_core::Result;

const PINNED_DIGEST: &str = "a4a09eaee497516e60048206347a4e64e6e55dacd2687965529db2e7716f2197";
const SOUNDNESS_BUDGET: Duration = Duration::from_secs(600);
const CUTTER_BUDGET: Duration = Duration::from_secs(60);

type Outcome = Result<(bool, String)>;

fn ok(pass: bool, detail: impl Into<String>) -> Outcome {
    Ok((pass, detail.into()))
}

/// 1: every catalog witness, 100 seeded samples, horizon 16, default sizes of 4 per coordinate.
fn generic_soundness() -> Outcome {
    let start = Instant::now();
    let (mut failures, mut passed, mut total, mut inconclusive_entries) = (0, 0, 0, Vec::new());
    for e in entries() {
        let r = e.check(100, 16, 0)?;
        if r.outcomes.len() < 100 {
            return ok(false, format!("{}: only {} samples", e.id, r.outcomes.len()));
        }
        if let Some(o) = r.first_failure() {
            return ok(false, format!("{} sample {}: {}", e.id, o.index, o.verdict.detail()));
        }
        failures += r.failed();
        passed += r.passed();
        total += r.outcomes.len();
        if r.passed() == 0 {
            inconclusive_entries.push(e.id.clone());
        }
    }
    let elapsed = start.elapsed();
    ok(
        failures == 0 && elapsed < SOUNDNESS_BUDGET,
        format!(
            "{passed}/{total} samples pass, 0 fail, {:.1}s; no finite certificate for {}",
            elapsed.as_secs_f64(),
            inconclusive_entries.join(" ")
        ),
    )
}

/// 2: B_i(x) = Φ(A_i, B_{i+1})(x) for m_i <= x < 24 and i <= 4; markers ignore the family.
fn squashing_identity() -> Outcome {
    let mut details = Vec::new();
    for name in ["trivial-over-rt", "coh", "projection"] {
        let (_, cfg) = squash_configs::all().into_iter().find(|(n, _)| *n == name).expect("configuration exists");
        let mut runs = Vec::new();
        for seed in [11u64, 97] {
            let markers = Arc::new(Markers::new(&cfg));
            let fam = family(format!("fam{seed}"), move |i| Point::random(seed * 1000 + i));
            runs.push(squash_forward(&cfg, &markers, &fam, 5, 24)?);
        }
        let (a, b) = (&runs[0].markers, &runs[1].markers);
        if format!("{a:?}") != format!("{b:?}") {
            return ok(false, format!("{name}: markers {a:?} and {b:?} differ across families"));
        }
        if let Some(s) = (0..a.len() - 1).find(|&s| a[s + 1] <= s as u64) {
            return ok(false, format!("{name}: m_{} = {} is not above {s}", s + 1, a[s + 1]));
        }
        details.push(format!("{name} {:?}", &a[..6]));
    }
    ok(true, details.join("; "))
}

fn level(t: &Tree, d: usize) -> Result<Exact> {
    measure_at_level(t, d)
}

/// 3: interleaved measures multiply, T_σ levels are 1 or 1/2, and the blow-up bound holds.
fn exact_measures() -> Outcome {
    let mut trees = vec![Tree::full(), Tree::starts_with(true), Tree::no_consecutive_ones()];
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
    for _ in 0..3 {
        trees.push(decode_tree(&wkl().sample(&mut rng)));
    }
    let mut pairs = 0;
    for l in &trees {
        for r in &trees {
            if let Verdict::Fail(d) = wkl_measure_identity(l, r, 6)? {
                return ok(false, format!("{} with {}: {d}", l.label(), r.label()));
            }
            pairs += 1;
        }
    }
    let mut levels = 0;
    for s in &trees {
        for i in 0..15 {
            let t = t_sigma(s, &string_at(i), 12);
            for d in 0..=12 {
                let m = level(&t, d)?;
                if m != Exact::one() && m != q(1, 2) {
                    return ok(false, format!("T[{}] over {} has measure {m} at level {d}", string_at(i), s.label()));
                }
                levels += 1;
            }
        }
    }
    let (p, eps) = (q(1, 2), q(1, 10));
    let t = Tree::starts_with(true);
    let (s, _, _) = blowup_step(&t, &eps, 8)?;
    let complement = Exact::one() - level(&s, 8)?;
    let gap = Exact::one() - &p;
    let bound = (Exact::one() + &eps) * &gap * &gap;
    ok(
        complement <= bound && bound == q(11, 40) && !complement.is_zero(),
        format!("{pairs} tree pairs to depth 6, {levels} T_σ levels, blow-up complement {complement} <= {bound}"),
    )
}

/// 4: a = 3 for (1/2, 3/4), each cut multiplies the measure by 7/8, 64 stages under a minute.
fn cutter_bookkeeping() -> Outcome {
    let start = Instant::now();
    let cfg = CutterConfig::new(q(1, 2), q(3, 4), 64);
    let run = qwwkl_cutter(&cutter_psi("identity")?, &cutter_psi("zeros")?, &cfg)?;
    let elapsed = start.elapsed();
    let factor = Exact::one() - q(1, 8);
    let mut cuts = 0;
    for rec in run.log.records().iter().filter(|r| r.case == "case-2") {
        let (Some(b), Some(a)) = (&rec.before, &rec.after) else {
            return ok(false, format!("stage {} records no measures", rec.stage));
        };
        if *a != b.clone() * &factor {
            return ok(false, format!("stage {}: {b} to {a}", rec.stage));
        }
        cuts += 1;
    }
    let least = (1..).find(|&a: &u32| Exact::new(1.into(), num_bigint::BigInt::from(1) << a) < q(1, 4)).expect("exists");
    let digest = run.log.digest();
    ok(
        run.a == 3 && least == 3 && cuts > 0 && elapsed < CUTTER_BUDGET && digest == PINNED_DIGEST,
        format!("a = {}, {cuts} cuts of 7/8, final {}, {:.2}s, digest {}", run.a, run.measure, elapsed.as_secs_f64(), &digest[..16]),
    )
}

/// 5: against each toy pair, at most one action, at most two forward colors, and both
/// colors in the backward output whenever the action fires.
fn ts1_bounds() -> Outcome {
    let pairs = ts1_toy_pairs(2, 3);
    let mut details = Vec::new();
    for (name, phi, psi) in &pairs {
        let run = ts1_diagonalizer(phi, psi, &Ts1Config::new(2, 3, 32))?;
        let both: BTreeSet<u64> = [0, 1].into();
        let fired = run.actions() == 1;
        if run.actions() > 1 || run.phi_colors.len() > 2 || (fired && !both.is_subset(&run.psi_colors)) {
            return ok(false, format!("{name}: {} actions, forward colors {:?}, backward colors {:?}", run.actions(), run.phi_colors, run.psi_colors));
        }
        details.push(format!("{name}:{}", run.actions()));
    }
    ok(pairs.len() >= 3, format!("{} pairs, actions {}", pairs.len(), details.join(" ")))
}

/// 6: certified homogeneous sets decode the truth; every brute-forced thin set passes the count claim.
fn coding_decoders() -> Outcome {
    let preds = jump_test_predicates();
    let depths: BTreeSet<usize> = preds.iter().map(|p| p.depth()).collect();
    let mut decoded = 0;
    for p in &preds {
        for i in 0..6 {
            let Some(h) = certified_homogeneous(p, i, 40, 4) else {
                return ok(false, format!("{} at {i}: no certified homogeneous set below 40", p.label()));
            };
            if jump_decode_one(&jump_coloring(p, i), &h, 40)? != p.truth(i) {
                return ok(false, format!("{} at {i}: {h:?} decodes against the truth", p.label()));
            }
            decoded += 1;
        }
    }
    let (mut pass, mut sparse) = (0, 0);
    let all: Vec<u64> = (0..20).collect();
    let sets = tuples_of(&all, 4);
    for h in kummer_test_predicates().iter().filter(|h| h.arity() == 1) {
        for k in 2..=4 {
            for xs in tuples_of(&(0..6).collect::<Vec<_>>(), k - 1) {
                let f = kummer_coloring(h, &xs);
                for set in &sets {
                    let seen: BTreeSet<u64> = set.iter().map(|&y| f.color(&[y])).collect();
                    for omitted in (0..k as u64).filter(|c| !seen.contains(c)) {
                        match kummer_claim_check(h, &xs, set, omitted, 20)? {
                            Verdict::Pass => pass += 1,
                            Verdict::Inconclusive(_) => sparse += 1,
                            Verdict::Fail(d) => return ok(false, format!("{} {xs:?} {set:?} omitting {omitted}: {d}", h.label())),
                        }
                    }
                }
            }
        }
    }
    ok(
        preds.len() >= 20 && depths == [1, 2].into() && pass > 0,
        format!("{} predicates, {decoded} decodes match; {pass} thin sets pass, {sparse} too sparse for the staircase", preds.len()),
    )
}

/// 7: digit split and merge are inverse, and the fanned-out identity is sound on every
/// 4-coloring of [0, 8) (constant 0 beyond).
fn fanout_correctness() -> Outcome {
    let dom: Vec<u64> = (0..8).collect();
    let mut identities = 0;
    for k in 1..=4u64 {
        for s in 1..=3u32 {
            let top = k.pow(s);
            for c in 0..top {
                if merge_digits(&split_digits(c, k, s), k) != c {
                    return ok(false, format!("k={k} s={s}: {c} does not survive a split"));
                }
            }
            for n in 1..=2 {
                let f = Coloring::finite("mix", n, top, move |xs| xs.iter().fold(0, |a, &x| a * 8 + x) % top);
                let g = merge_colorings(&split_coloring(&f, k, s), k)?;
                for t in tuples_of(&dom, n) {
                    if g.color(&t) != f.color(&t) {
                        return ok(false, format!("k={k} s={s}: {t:?} maps to {} not {}", g.color(&t), f.color(&t)));
                    }
                    identities += 1;
                }
            }
        }
    }
    let w = fanout_rt(&rt_color_embed(1, 2, 2)?, 2)?;
    let (mut passed, mut total) = (0, 0);
    for code in 0..4u64.pow(8) {
        let table: Vec<u64> = (0..8).map(|x| (code >> (2 * x)) & 3).collect();
        let f = Coloring::from_table(format!("f{code}"), 1, Colors::Finite(4), table, Coloring::constant(1, 4, 0));
        let (v, _) = check_sample(&w, &code_of(&f, Colors::Finite(4)), 16)?;
        if let Verdict::Fail(d) = v {
            return ok(false, format!("coloring {code}: {d}"));
        }
        passed += v.is_pass() as usize;
        total += 1;
    }
    ok(passed == total, format!("{identities} split/merge identities; fan-out sound on {passed}/{total} colorings"))
}

/// 8: the glued coloring is 2-bounded, measure families stay within ⌈1/q⌉ sets of
/// measure at least q, and greedy rainbow sets verify on 50 seeded bounded instances.
fn rainbow_constructions() -> Outcome {
    let cfg = MeasureConfig::default();
    let mut worst = 0;
    for name in ["inert", "ones", "echo", "late-pair"] {
        let cm = cm_coloring(&rainbow_toy(name)?, &cfg)?;
        worst = worst.max(max_multiplicity(&cm.coloring, 24));
    }
    let mut families = Vec::new();
    for (qq, cap) in [(q(1, 2), 2), (q(1, 4), 4)] {
        let run = rainbow_measure_coloring(&rainbow_toy("echo")?, &qq, &cfg)?;
        for set in &run.sets {
            let direct: Exact = set
                .set
                .strings()
                .iter()
                .map(|s| Exact::new(1.into(), num_bigint::BigInt::from(1) << s.len()))
                .fold(Exact::zero(), |a, b| a + b);
            if !set.set.is_antichain() || direct != set.measure || direct < qq {
                return ok(false, format!("q={qq}: set {:?} has measure {direct}", set.set));
            }
        }
        if run.sets.is_empty() || run.sets.len() > cap {
            return ok(false, format!("q={qq}: {} sets", run.sets.len()));
        }
        families.push(format!("q={qq}: {} sets", run.sets.len()));
    }
    let fs: Vec<Coloring> = (0..50).map(|s| bounded_sample(s, 2 + s % 3, 64)).collect();
    let mut rainbow = 0;
    for (f, out) in fs.iter().zip(seq_rrt1_greedy(&fs, 64, 8)) {
        match out.ready() {
            Some(set) if verify_rainbow_at(f, &set, 64, 8).is_pass() => rainbow += 1,
            other => return ok(false, format!("{}: greedy output {other:?} is not rainbow", f.label())),
        }
    }
    ok(worst <= 2, format!("max multiplicity {worst} below 24; {}; {rainbow}/50 greedy sets rainbow", families.join(", ")))
}

/// 9: reports, logs, and criterion details are byte-identical on rerun.
fn determinism() -> Outcome {
    let cfg = SuiteConfig { samples: 10, horizon: 16, seed: 7, construction_seeds: 1, ..SuiteConfig::default() };
    let mut compared = 0;
    for sel in ["rt_product", "ts_collapse", "adversaries", "codings", "blowup"] {
        let a = run_suite(sel, &cfg)?.to_csv();
        let b = run_suite(sel, &SuiteConfig { workers: 1, ..cfg })?.to_csv();
        if a != b {
            return ok(false, format!("report for {sel} differs between runs"));
        }
        compared += a.len();
    }
    for f in [squashing_identity, ts1_bounds, rainbow_constructions] {
        if f()?.1 != f()?.1 {
            return ok(false, "a criterion detail differs between runs");
        }
    }
    let cutter = || -> Result<String> {
        let cfg = CutterConfig::new(q(1, 2), q(3, 4), 64);
        Ok(qwwkl_cutter(&cutter_psi("identity")?, &cutter_psi("zeros")?, &cfg)?.log.to_csv())
    };
    if cutter()? != cutter()? {
        return ok(false, "cutter log differs between runs");
    }
    ok(true, format!("{compared} report bytes, the cutter log, and three criterion runs identical"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("generic witness soundness", generic_soundness),
        ("squashing structural identity", squashing_identity),
        ("exact measure identities", exact_measures),
        ("cutter bookkeeping", cutter_bookkeeping),
        ("thin-set diagonalizer bounds", ts1_bounds),
        ("coding decoders", coding_decoders),
        ("fan-out correctness", fanout_correctness),
        ("rainbow constructions", rainbow_constructions),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (pass, detail) = match std::panic::catch_unwind(f) {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        failed += !pass as usize;
        println!("criterion {}: {} {name}: {detail}", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
