//! Suite runner, instance documents, and CSV reports.

mod document;

pub use document::{
    coloring_table, jump_predicate, limit_predicate, load_instance, save_instance, Instance, InstanceDocument, Kind,
    Representation, RULES,
};

use crate::adversaries::{
    cm_coloring, cutter_psi, delta2_diagonalizer, max_multiplicity, qwwkl_cutter, rainbow_toy, ts1_diagonalizer, ts1_toy_pairs,
    CutterConfig, Delta2Approx, MeasureConfig, Ts1Config,
};
use crate::catalog::{constructions, entries, CatalogEntry, Construction};
use crate::codings::{
    bounded_sample, certified_homogeneous, jump_coloring, jump_decode_one, jump_test_predicates, kummer_claim_check,
    kummer_coloring, kummer_test_predicates, seq_rrt1_greedy,
};
use crate::error::{Error, Result};
use crate::kernel::tuples_of;
use crate::measure::{q, Exact};
use crate::problems::{measure_at_level, verify_rainbow_at, Verdict};
use num_traits::One;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Budgets shared by every check in a run. Rows record the values they ran with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuiteConfig {
    /// Seeded instances per catalog entry.
    pub samples: usize,
    pub horizon: u64,
    pub fuel: u64,
    pub seed: u64,
    /// Seeds per construction, starting at `seed`.
    pub construction_seeds: u64,
    /// Worker threads; 0 picks the machine's parallelism.
    pub workers: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { samples: 20, horizon: 16, fuel: 10_000, seed: 0, construction_seeds: 2, workers: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
    Error,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Inconclusive => "inconclusive",
            Status::Fail => "fail",
            Status::Error => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub case_id: String,
    pub entry_id: String,
    pub check: String,
    pub status: Status,
    pub detail: String,
    pub seed: u64,
    pub horizon: u64,
    pub fuel: u64,
    /// Exit code this row asks for: 0, 1 for a failure, or the error's own code.
    pub code: i32,
}

impl Row {
    fn new(entry_id: &str, check: &str, cfg: &SuiteConfig, horizon: u64, seed: u64) -> Row {
        Row {
            case_id: format!("{entry_id}#{check}"),
            entry_id: entry_id.to_string(),
            check: check.to_string(),
            status: Status::Pass,
            detail: String::new(),
            seed,
            horizon,
            fuel: cfg.fuel,
            code: 0,
        }
    }

    fn judged(mut self, v: Result<Verdict>) -> Row {
        match v {
            Ok(Verdict::Pass) => {}
            Ok(Verdict::Inconclusive(d)) => (self.status, self.detail) = (Status::Inconclusive, d),
            Ok(Verdict::Fail(d)) => (self.status, self.detail, self.code) = (Status::Fail, d, 1),
            Err(e) => (self.status, self.detail, self.code) = (Status::Error, e.to_string(), e.exit_code()),
        }
        self
    }

    fn detailed(mut self, d: impl Into<String>) -> Row {
        if self.status == Status::Pass {
            self.detail = d.into();
        }
        self
    }
}

pub const REPORT_COLUMNS: [&str; 8] = ["case_id", "entry_id", "check", "status", "detail", "seed", "horizon", "fuel"];

/// Rows sorted by case id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub rows: Vec<Row>,
}

impl Report {
    pub fn count(&self, s: Status) -> usize {
        self.rows.iter().filter(|r| r.status == s).count()
    }

    /// The largest code any row asks for.
    pub fn exit_code(&self) -> i32 {
        self.rows.iter().map(|r| r.code).max().unwrap_or(0)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(REPORT_COLUMNS).expect("in-memory write");
        for r in &self.rows {
            let (seed, horizon, fuel) = (r.seed.to_string(), r.horizon.to_string(), r.fuel.to_string());
            w.write_record([&r.case_id, &r.entry_id, &r.check, r.status.name(), &r.detail, &seed, &horizon, &fuel])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

type CaseFn = fn(&SuiteConfig) -> Result<Verdict>;

/// Checks of adversaries and codings that are not catalog entries.
pub fn extra_cases() -> Vec<(&'static str, &'static str, CaseFn)> {
    vec![
        ("adversary/qwwkl", "cut-bookkeeping", case_qwwkl),
        ("adversary/ts1", "action-bound", case_ts1),
        ("adversary/delta2", "defeats", case_delta2),
        ("adversary/cm", "two-bounded", case_cm),
        ("coding/jump", "decode", case_jump),
        ("coding/kummer", "claim", case_kummer),
        ("coding/greedy-rainbow", "rainbow", case_greedy),
    ]
}

fn case_qwwkl(cfg: &SuiteConfig) -> Result<Verdict> {
    let run = qwwkl_cutter(&cutter_psi("identity")?, &cutter_psi("zeros")?, &CutterConfig { fuel: cfg.fuel, ..CutterConfig::new(q(1, 2), q(3, 4), 32) })?;
    let mut expected = Exact::one();
    for rec in run.log.with_case("case-2") {
        let (b, a) = (rec.before.clone().unwrap_or_default(), rec.after.clone().unwrap_or_default());
        if a != b.clone() * q(7, 8) {
            return Ok(Verdict::Fail(format!("stage {}: {b} to {a} is not a 7/8 cut", rec.stage)));
        }
        expected *= q(7, 8);
    }
    let direct = measure_at_level::<Exact>(&run.tree, 14)?;
    Ok(if run.a != 3 {
        Verdict::Fail(format!("selected a = {}", run.a))
    } else if run.measure != expected || direct != expected {
        Verdict::Fail(format!("measure {} and direct count {direct} differ from {expected}", run.measure))
    } else {
        Verdict::Pass
    })
}

fn case_ts1(cfg: &SuiteConfig) -> Result<Verdict> {
    let mut v = Verdict::Pass;
    for (name, phi, psi) in ts1_toy_pairs(2, 3) {
        let run = ts1_diagonalizer(&phi, &psi, &Ts1Config { fuel: cfg.fuel, ..Ts1Config::new(2, 3, 32) })?;
        v = v.and(if run.actions() > 1 {
            Verdict::Fail(format!("{name}: {} action stages", run.actions()))
        } else if run.phi_colors.len() > 2 {
            Verdict::Fail(format!("{name}: {} colors under the forward image", run.phi_colors.len()))
        } else {
            Verdict::Pass
        });
    }
    Ok(v)
}

fn case_delta2(_: &SuiteConfig) -> Result<Verdict> {
    let mut v = Verdict::Pass;
    for name in ["empty", "evens", "evens-late", "multiples", "initial"] {
        let run = delta2_diagonalizer(3, &Delta2Approx::by_name(name)?, 4, 64)?;
        for e in 0..4 {
            v = v.and(run.check_defeats(e));
        }
    }
    Ok(v)
}

fn case_cm(cfg: &SuiteConfig) -> Result<Verdict> {
    let mut v = Verdict::Pass;
    for name in ["inert", "ones", "echo", "late-pair"] {
        let cm = cm_coloring(&rainbow_toy(name)?, &MeasureConfig { fuel: cfg.fuel, ..MeasureConfig::default() })?;
        let m = max_multiplicity(&cm.coloring, 24);
        if m > 2 {
            v = v.and(Verdict::Fail(format!("{name}: a color is used {m} times below 24")));
        }
    }
    Ok(v)
}

fn case_jump(cfg: &SuiteConfig) -> Result<Verdict> {
    let horizon = cfg.horizon.max(40);
    for p in jump_test_predicates() {
        p.skolem().audit(6)?;
        for i in 0..6 {
            let Some(h) = certified_homogeneous(&p, i, horizon, 4) else {
                return Ok(Verdict::Inconclusive(format!("{} at {i}: no certified set below {horizon}", p.label())));
            };
            if jump_decode_one(&jump_coloring(&p, i), &h, horizon)? != p.truth(i) {
                return Ok(Verdict::Fail(format!("{} at {i}: {h:?} decodes wrongly", p.label())));
            }
        }
    }
    Ok(Verdict::Pass)
}

/// Every thin `size`-subset of `[0, n)` for the coloring of `xs`, each with every color it omits.
pub fn kummer_exhaustive(h: &crate::codings::LimitPredicate, xs: &[u64], n: u64, size: usize) -> Result<(usize, usize, usize)> {
    let f = kummer_coloring(h, xs);
    let k = xs.len() as u64 + 1;
    let all: Vec<u64> = (0..n).collect();
    let (mut pass, mut inconclusive, mut fail) = (0, 0, 0);
    for set in tuples_of(&all, size) {
        let seen: std::collections::BTreeSet<u64> = tuples_of(&set, h.arity()).iter().map(|t| f.color(t)).collect();
        for omitted in (0..k).filter(|c| !seen.contains(c)) {
            match kummer_claim_check(h, xs, &set, omitted, n)? {
                Verdict::Pass => pass += 1,
                Verdict::Inconclusive(_) => inconclusive += 1,
                Verdict::Fail(_) => fail += 1,
            }
        }
    }
    Ok((pass, inconclusive, fail))
}

fn case_kummer(_: &SuiteConfig) -> Result<Verdict> {
    let mut passes = 0;
    for h in kummer_test_predicates().into_iter().filter(|h| h.arity() == 1) {
        h.audit(6, 20)?;
        for xs in tuples_of(&(0..6).collect::<Vec<_>>(), 2) {
            let (p, _, f) = kummer_exhaustive(&h, &xs, 20, 3)?;
            if f > 0 {
                return Ok(Verdict::Fail(format!("{} at {xs:?}: {f} failing thin sets", h.label())));
            }
            passes += p;
        }
    }
    Ok(if passes == 0 { Verdict::Inconclusive("no thin set hosted a staircase".into()) } else { Verdict::Pass })
}

fn case_greedy(cfg: &SuiteConfig) -> Result<Verdict> {
    let n = 64;
    let fs: Vec<_> = (0..50).map(|s| bounded_sample(cfg.seed.wrapping_add(s), 2 + s % 3, n)).collect();
    let mut v = Verdict::Pass;
    for (f, out) in fs.iter().zip(seq_rrt1_greedy(&fs, n, 8)) {
        v = v.and(match out.ready() {
            Some(set) => verify_rainbow_at(f, &set, n, 8),
            None => Verdict::Inconclusive(format!("{}: greedy set fell short", f.label())),
        });
    }
    Ok(v)
}

enum Job {
    Entry(CatalogEntry),
    Construction(Construction, u64),
    Extra(&'static str, &'static str, CaseFn),
}

fn matches(selector: &str, id: &str, group: &str) -> bool {
    selector == "all" || selector == group || selector == id || id.starts_with(&format!("{selector}/"))
}

fn run_job(job: &Job, cfg: &SuiteConfig) -> Vec<Row> {
    match job {
        Job::Entry(e) => {
            let horizon = e.horizon(cfg.horizon);
            let row = Row::new(&e.id, "soundness", cfg, horizon, cfg.seed);
            let mut rows = vec![match e.check(cfg.samples, cfg.horizon, cfg.seed) {
                Ok(r) => {
                    let summary = format!("{} passed, {} inconclusive of {}", r.passed(), r.inconclusive(), r.outcomes.len());
                    let v = match r.first_failure() {
                        Some(o) => Verdict::Fail(format!("sample {}: {}", o.index, o.verdict.detail())),
                        None if r.passed() == 0 => Verdict::Inconclusive(summary.clone()),
                        None => Verdict::Pass,
                    };
                    row.judged(Ok(v)).detailed(summary)
                }
                Err(err) => row.judged(Err(err)),
            }];
            if let Some((name, v)) = e.invariant(cfg.seed) {
                rows.push(Row::new(&e.id, &name, cfg, horizon, cfg.seed).judged(v));
            }
            rows
        }
        Job::Construction(c, seed) => {
            let mut row = Row::new(&c.id, "construction", cfg, cfg.horizon, *seed).judged(c.check(*seed));
            row.case_id = format!("{}#construction#seed{seed}", c.id);
            vec![row]
        }
        Job::Extra(id, check, f) => vec![Row::new(id, check, cfg, cfg.horizon, cfg.seed).judged(f(cfg))],
    }
}

/// Run every check the selector names: `all`, a group (`entries`, `constructions`,
/// `adversaries`, `codings`), an id, or an id prefix ending before a `/`.
pub fn run_suite(selector: &str, cfg: &SuiteConfig) -> Result<Report> {
    let selector = selector.trim();
    if selector.is_empty() {
        return Err(Error::input("empty selector"));
    }
    let mut jobs = Vec::new();
    for e in entries() {
        if matches(selector, &e.id, "entries") {
            jobs.push(Job::Entry(e));
        }
    }
    for c in constructions() {
        if matches(selector, &c.id, "constructions") {
            for s in 0..cfg.construction_seeds.max(1) {
                jobs.push(Job::Construction(c.clone(), cfg.seed.wrapping_add(s)));
            }
        }
    }
    for (id, check, f) in extra_cases() {
        let group = if id.starts_with("adversary/") { "adversaries" } else { "codings" };
        if matches(selector, id, group) {
            jobs.push(Job::Extra(id, check, f));
        }
    }
    if jobs.is_empty() {
        return Err(Error::input(format!("selector {selector:?} matches nothing; try `wred list`")));
    }
    let workers = match cfg.workers {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(jobs.len());
    let next = AtomicUsize::new(0);
    let rows = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let out = run_job(job, cfg);
                rows.lock().unwrap_or_else(|e| e.into_inner()).extend(out);
            });
        }
    });
    let mut rows = rows.into_inner().unwrap_or_else(|e| e.into_inner());
    rows.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    Ok(Report { rows })
}

/// Every selectable id with a one-line summary.
pub fn listing() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = entries().into_iter().map(|e| (e.id, e.summary)).collect();
    out.extend(constructions().into_iter().map(|c| (c.id, c.summary)));
    out.extend(extra_cases().into_iter().map(|(id, check, _)| (id.to_string(), format!("{check} check"))));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SuiteConfig {
        SuiteConfig { samples: 3, horizon: 8, workers: 2, construction_seeds: 1, ..SuiteConfig::default() }
    }

    #[test]
    fn rt_product_is_all_pass() {
        let r = run_suite("rt_product", &SuiteConfig { horizon: 16, ..quick() }).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows.iter().all(|row| row.status == Status::Pass), "{}", r.to_csv());
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn empty_and_unknown_selectors_are_input_errors() {
        assert_eq!(run_suite("", &quick()).unwrap_err().exit_code(), 3);
        assert_eq!(run_suite("nope", &quick()).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let a = run_suite("ts_collapse", &quick()).unwrap().to_csv();
        let b = run_suite("ts_collapse", &SuiteConfig { workers: 1, ..quick() }).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with("case_id,entry_id,check,status,detail,seed,horizon,fuel\n"));
    }

    #[test]
    fn worst_row_sets_the_exit_code() {
        let cfg = quick();
        let rows = vec![
            Row::new("a", "x", &cfg, 8, 0).judged(Ok(Verdict::Pass)),
            Row::new("b", "x", &cfg, 8, 0).judged(Ok(Verdict::Fail("no".into()))),
            Row::new("c", "x", &cfg, 8, 0).judged(Err(Error::resource("out"))),
        ];
        assert_eq!(Report { rows }.exit_code(), 2);
    }

    #[test]
    fn extra_cases_pass() {
        for (id, _, f) in extra_cases() {
            if id == "coding/kummer" || id == "coding/jump" {
                continue; // exercised by the acceptance suite
            }
            let v = f(&quick()).unwrap_or_else(|e| panic!("{id}: {e}"));
            assert!(v.is_pass(), "{id}: {v}");
        }
    }
}
