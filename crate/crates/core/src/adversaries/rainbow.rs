//! Bounded pair colorings that a given functional cannot map into rainbows.
//!
//! Once a functional commits to two outputs `x < y` on a string `σ`, the coloring
//! glues `(x, s)` and `(y, s)` for all later `s`, so no output extending `σ` can be a
//! rainbow. Gluing against one string gives a 2-bounded coloring; gluing against
//! disjoint families of measure at least `q` pushes the rainbow-producing oracles
//! below measure `q`.

use super::{CylinderSet, StageLog, StageRecord};
use crate::error::{Error, Result};
use crate::kernel::{cantor_pair, cantor_unpair, evaluate, Functional, Point, Prefix, Tape};
use crate::measure::{ceil_recip, pow2_neg, show, Exact};
use crate::problems::{verify_rainbow_at, Coloring, Colors, Verdict};
use num_traits::{One, Zero};
use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

/// Search bounds shared by the gluing constructions.
#[derive(Clone, Debug)]
pub struct MeasureConfig {
    /// Longest string examined.
    pub max_len: usize,
    /// Outputs below this are examined.
    pub outputs: u64,
    pub fuel: u64,
    /// Strings examined per search before giving up with a resource error.
    pub node_budget: usize,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig { max_len: 8, outputs: 32, fuel: 10_000, node_budget: 1 << 16 }
    }
}

/// Position in shortlex order: `2^len - 1 + value`.
fn shortlex_rank(s: &Prefix) -> u64 {
    let v = s.bits().iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
    (1u64 << s.len()) - 1 + v
}

fn strings_up_to(max_len: usize) -> impl Iterator<Item = Prefix> {
    (0..=max_len).flat_map(Prefix::all_of_length)
}

/// Outputs of `Φ(σ)` equal to 1 below `bound`; divergence is simply not an output.
fn ones_of(phi: &Functional, sigma: &Prefix, bound: u64, fuel: u64) -> Result<Vec<u64>> {
    let tape = Tape::prefix(sigma.clone());
    let mut out = Vec::new();
    for x in 0..bound {
        if evaluate(phi, std::slice::from_ref(&tape), x, fuel)?.value() == Some(true) {
            out.push(x);
        }
    }
    Ok(out)
}

/// Largest number of pairs in `[0, n)` sharing one color.
pub fn max_multiplicity(f: &Coloring, n: u64) -> u64 {
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for s in 1..n {
        for z in 0..s {
            *counts.entry(f.color(&[z, s])).or_default() += 1;
        }
    }
    counts.into_values().max().unwrap_or(0)
}

/// The string and outputs the single-string construction glued against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trigger {
    pub sigma: Prefix,
    pub x: u64,
    pub y: u64,
    /// First stage whose pairs are glued.
    pub stage: u64,
}

#[derive(Clone, Debug)]
pub struct CmColoring {
    pub coloring: Coloring,
    trigger: Option<Trigger>,
    phi: Functional,
    fuel: u64,
}

/// Glue against the first string on which `Φ` outputs two elements.
///
/// Stage `s` has examined strings of shortlex rank below `s` and outputs below `s`;
/// the trigger is the first stage with a candidate, taking the least string then the
/// least pair. Colors are `⟨z, s⟩`, except that past the trigger both glued elements
/// get `⟨x, s⟩`.
pub fn cm_coloring(phi: &Functional, cfg: &MeasureConfig) -> Result<CmColoring> {
    if phi.arity() != 1 {
        return Err(Error::input(format!("{} must read one set", phi.label())));
    }
    let mut best: Option<Trigger> = None;
    for (seen, sigma) in strings_up_to(cfg.max_len).enumerate() {
        if seen >= cfg.node_budget {
            return Err(Error::resource(format!("trigger search stopped at {sigma} after {seen} strings")));
        }
        let rank = shortlex_rank(&sigma);
        let ones = ones_of(phi, &sigma, cfg.outputs, cfg.fuel)?;
        if ones.len() < 2 {
            continue;
        }
        let cand = Trigger { sigma, x: ones[0], y: ones[1], stage: (rank + 1).max(ones[1] + 1) };
        if best.as_ref().is_none_or(|b| cand.stage < b.stage) {
            best = Some(cand);
        }
    }
    let coloring = match &best {
        None => Coloring::new(format!("cm({})", phi.label()), 2, Colors::Omega, |xs| cantor_pair(xs[0], xs[1])),
        Some(t) => {
            let Trigger { x, y, stage, .. } = *t;
            Coloring::new(format!("cm({})", phi.label()), 2, Colors::Omega, move |xs| {
                let (z, s) = (xs[0], xs[1]);
                if s >= stage && (z == x || z == y) {
                    cantor_pair(x, s)
                } else {
                    cantor_pair(z, s)
                }
            })
        }
    };
    Ok(CmColoring { coloring, trigger: best, phi: phi.clone(), fuel: cfg.fuel })
}

impl CmColoring {
    pub fn excluded_pair(&self) -> Option<(u64, u64, Prefix)> {
        self.trigger.as_ref().map(|t| (t.x, t.y, t.sigma.clone()))
    }

    pub fn trigger(&self) -> Option<&Trigger> {
        self.trigger.as_ref()
    }

    /// For an oracle extending the trigger string: both glued elements are output and
    /// the output below `horizon` is not a rainbow.
    pub fn exclusion_check(&self, oracle: &Point, horizon: u64) -> Result<Verdict> {
        let Some(t) = &self.trigger else {
            return Ok(Verdict::Inconclusive("the trigger never fired".into()));
        };
        if oracle.prefix(t.sigma.len()) != t.sigma {
            return Err(Error::input(format!("oracle does not extend {}", t.sigma)));
        }
        exclusion(&self.phi, &self.coloring, oracle, t.x, t.y, t.stage, horizon, self.fuel)
    }
}

#[allow(clippy::too_many_arguments)]
fn exclusion(
    phi: &Functional,
    f: &Coloring,
    oracle: &Point,
    x: u64,
    y: u64,
    from: u64,
    horizon: u64,
    fuel: u64,
) -> Result<Verdict> {
    let tape = Tape::Point(oracle.clone());
    let mut out = Vec::new();
    for z in 0..horizon {
        if evaluate(phi, std::slice::from_ref(&tape), z, fuel)?.value() == Some(true) {
            out.push(z);
        }
    }
    if !(out.contains(&x) && out.contains(&y)) {
        return Ok(Verdict::Fail(format!("output misses the glued pair ({x}, {y})")));
    }
    if let Some(&s) = out.iter().find(|&&s| s >= from && s > y) {
        if f.color(&[x, s]) != f.color(&[y, s]) {
            return Ok(Verdict::Fail(format!("({x}, {s}) and ({y}, {s}) are not glued")));
        }
        return Ok(match verify_rainbow_at(f, &out, horizon, 0) {
            Verdict::Fail(_) => Verdict::Pass,
            other => Verdict::Fail(format!("output is still a rainbow: {other:?}")),
        });
    }
    Ok(Verdict::Inconclusive(format!("no output at or past stage {from} below {horizon}")))
}

/// One disjoint family found by the measure construction.
#[derive(Clone, Debug)]
pub struct FoundSet {
    pub set: CylinderSet,
    /// Each member with the pair it uses.
    pub pairs: Vec<(Prefix, u64, u64)>,
    pub used: BTreeSet<u64>,
    pub measure: Exact,
    /// Stage from which the used elements are glued.
    pub stage: u64,
}

#[derive(Clone, Debug)]
pub struct MeasureRun {
    pub q: Exact,
    pub sets: Vec<FoundSet>,
    /// Every color occurs at most this often.
    pub bound: u64,
    pub coloring: Coloring,
    pub log: StageLog,
    /// Why the search for a further set stopped.
    pub stopped: String,
    phi: Functional,
    fuel: u64,
}

/// Least `(x, y)` with `x < y`, both outputs of `σ` and unused.
fn free_pair(ones: &[u64], used: &BTreeSet<u64>) -> Option<(u64, u64)> {
    let mut free = ones.iter().copied().filter(|z| !used.contains(z));
    Some((free.next()?, free.next()?))
}

/// The next family: minimal qualifying strings outside the earlier cylinders, taken
/// in shortlex order until their measure reaches `q`.
fn next_family(
    phi: &Functional,
    q: &Exact,
    claimed: &CylinderSet,
    used: &BTreeSet<u64>,
    cfg: &MeasureConfig,
) -> Result<Option<FoundSet>> {
    let mut chosen: Vec<(Prefix, u64, u64)> = Vec::new();
    let mut measure = Exact::zero();
    for (seen, sigma) in strings_up_to(cfg.max_len).enumerate() {
        if seen >= cfg.node_budget {
            return Err(Error::resource(format!("cylinder search stopped at {sigma} after {seen} strings")));
        }
        if claimed.strings().iter().any(|c| c.compatible(&sigma)) || chosen.iter().any(|(c, _, _)| c.is_prefix_of(&sigma)) {
            continue;
        }
        let ones = ones_of(phi, &sigma, cfg.outputs, cfg.fuel)?;
        if let Some((x, y)) = free_pair(&ones, used) {
            measure += pow2_neg(sigma.len() as u32);
            chosen.push((sigma, x, y));
            if measure >= *q {
                let set = CylinderSet::new(chosen.iter().map(|(s, _, _)| s.clone()).collect());
                let used = chosen.iter().flat_map(|&(_, x, y)| [x, y]).collect();
                let stage = chosen.iter().map(|(s, _, _)| shortlex_rank(s)).max().unwrap_or(0);
                return Ok(Some(FoundSet { set, pairs: chosen, used, measure, stage }));
            }
        }
    }
    Ok(None)
}

/// Build the bounded coloring of the measure construction for `q`.
pub fn rainbow_measure_coloring(phi: &Functional, q: &Exact, cfg: &MeasureConfig) -> Result<MeasureRun> {
    if !(*q > Exact::zero() && *q < Exact::one()) {
        return Err(Error::input(format!("need 0 < q < 1, got {}", show(q))));
    }
    if phi.arity() != 1 {
        return Err(Error::input(format!("{} must read one set", phi.label())));
    }
    let mut log = StageLog::new(format!("rainbow-measure(q={},phi={})", show(q), phi.label()), true);
    let mut sets: Vec<FoundSet> = Vec::new();
    let mut claimed = CylinderSet::default();
    let mut used = BTreeSet::new();
    let mut free = Exact::one();
    let mut stage = 0u64;
    let cap = ceil_recip(q);
    let stopped = loop {
        let Some(mut found) = next_family(phi, q, &claimed, &used, cfg)? else {
            break format!("no family of measure {} within strings of length {}", show(q), cfg.max_len);
        };
        if sets.len() as u64 >= cap {
            return Err(Error::contract(format!("found {} disjoint families of measure {}", sets.len() + 1, show(q))));
        }
        stage = stage.max(found.stage).max(*found.used.last().expect("pairs")) + 1;
        found.stage = stage;
        let before = free.clone();
        free -= found.measure.clone();
        log.push(
            StageRecord::new(stage, "found")
                .acted(format!("n={}", sets.len()))
                .measures(before, free.clone())
                .markers(found.used.iter().copied().collect())
                .note(found.set.serialize()),
        )?;
        claimed = CylinderSet::new(claimed.strings().iter().chain(found.set.strings()).cloned().collect());
        used.extend(found.used.iter().copied());
        sets.push(found);
    };
    log.push(StageRecord::new(stage, "search-failed").measures(free.clone(), free).note(stopped.clone()))?;

    let glue: Arc<Vec<(u64, u64, BTreeSet<u64>)>> =
        Arc::new(sets.iter().map(|f| (f.stage, *f.used.first().expect("pairs"), f.used.clone())).collect());
    let bound = sets.iter().map(|f| f.used.len() as u64).max().unwrap_or(1);
    let g = glue.clone();
    let coloring = Coloring::new(format!("rainbow-measure({})", phi.label()), 2, Colors::Omega, move |xs| {
        let (z, s) = (xs[0], xs[1]);
        for (from, x0, members) in g.iter() {
            if s >= *from && members.contains(&z) {
                return cantor_pair(*x0, s);
            }
        }
        cantor_pair(z, s)
    });
    Ok(MeasureRun { q: q.clone(), sets, bound, coloring, log, stopped, phi: phi.clone(), fuel: cfg.fuel })
}

impl MeasureRun {
    /// Recheck the certificate: disjoint families, each of exact measure at least `q`, at
    /// most `⌈1/q⌉` of them, the declared bound on `[0, horizon)`, and every member's
    /// pair output and glued.
    pub fn certify(&self, horizon: u64) -> Result<Verdict> {
        let cap = ceil_recip(&self.q);
        if self.sets.len() as u64 > cap {
            return Ok(Verdict::Fail(format!("{} families exceed {cap}", self.sets.len())));
        }
        for (i, a) in self.sets.iter().enumerate() {
            if !a.set.is_antichain() || a.set.measure() != a.measure || a.measure < self.q {
                return Ok(Verdict::Fail(format!("family {i} ({}) is malformed", a.set.serialize())));
            }
            if let Some(j) = self.sets[..i].iter().position(|b| !b.set.disjoint_from(&a.set)) {
                return Ok(Verdict::Fail(format!("families {j} and {i} overlap")));
            }
            for (sigma, x, y) in &a.pairs {
                let ones = ones_of(&self.phi, sigma, y + 1, self.fuel)?;
                if !(ones.contains(x) && ones.contains(y)) {
                    return Ok(Verdict::Fail(format!("{sigma} does not output {x} and {y}")));
                }
                for s in a.stage.max(y + 1)..horizon.max(a.stage + 4) {
                    if self.coloring.color(&[*x, s]) != self.coloring.color(&[*y, s]) {
                        return Ok(Verdict::Fail(format!("({x}, {s}) and ({y}, {s}) are not glued")));
                    }
                }
            }
        }
        let seen = max_multiplicity(&self.coloring, horizon);
        if seen > self.bound {
            return Ok(Verdict::Fail(format!("a color occurs {seen} times, bound {}", self.bound)));
        }
        Ok(Verdict::Pass)
    }

    /// Exclusion check for an oracle extending a member of family `n`.
    pub fn exclusion_check(&self, n: usize, oracle: &Point, horizon: u64) -> Result<Verdict> {
        let fam = self.sets.get(n).ok_or_else(|| Error::input(format!("no family {n}")))?;
        let (_, x, y) = fam
            .pairs
            .iter()
            .find(|(s, _, _)| oracle.prefix(s.len()) == *s)
            .ok_or_else(|| Error::input(format!("oracle extends no member of family {n}")))?;
        exclusion(&self.phi, &self.coloring, oracle, *x, *y, fam.stage, horizon, self.fuel)
    }
}

/// Where output `x` of column `⟨e, j⟩` sits, in the same layout as [`crate::kernel::family`].
pub fn column_position(x: u64, e: u64, j: u64) -> u64 {
    cantor_pair(cantor_pair(e, j), x)
}

/// `Φ` restricted to column `⟨e, j⟩` of its output.
pub fn column_restrict(phi: &Functional, e: u64, j: u64) -> Functional {
    let inner = phi.apply(vec![Tape::Input(0)]);
    Functional::new(format!("{}|col({e},{j})", phi.label()), 1, move |ctx, x| {
        ctx.read_tape(&inner, column_position(x, e, j))
    })
}

#[derive(Clone, Debug)]
pub struct ColumnRun {
    pub j: u64,
    /// Index `⟨e, j⟩` of this coloring in the sequence.
    pub index: u64,
    pub run: MeasureRun,
}

#[derive(Clone, Debug)]
pub struct SplitterRun {
    pub e: u64,
    pub columns: Vec<ColumnRun>,
}

/// Run the measure construction on columns `1..=count` of `Φ_e` with `q = 2^-j`.
pub fn rrt_column_splitter(phi: &Functional, e: u64, count: u64, cfg: &MeasureConfig) -> Result<SplitterRun> {
    if count == 0 || count > 16 {
        return Err(Error::input(format!("column count {count} outside 1..=16")));
    }
    let mut columns = Vec::new();
    for j in 1..=count {
        let run = rainbow_measure_coloring(&column_restrict(phi, e, j), &pow2_neg(j as u32), cfg)?;
        columns.push(ColumnRun { j, index: cantor_pair(e, j), run });
    }
    Ok(SplitterRun { e, columns })
}

impl SplitterRun {
    /// Colorings by sequence index; indices not built here are absent.
    pub fn coloring(&self, index: u64) -> Option<&Coloring> {
        self.columns.iter().find(|c| c.index == index).map(|c| &c.run.coloring)
    }

    pub fn certify(&self, horizon: u64) -> Result<Verdict> {
        let mut v = Verdict::Pass;
        for c in &self.columns {
            v = v.and(c.run.certify(horizon)?);
        }
        Ok(v)
    }
}

/// Toy functionals from sets to sets: `inert`, `ones`, `echo`, `late-pair`.
pub fn rainbow_toy(name: &str) -> Result<Functional> {
    Ok(match name {
        "inert" => Functional::new("inert", 1, |_, _| Ok(false)),
        "ones" => Functional::new("ones", 1, |_, _| Ok(true)),
        "echo" => Functional::new("echo", 1, |ctx, x| ctx.read(0, x)),
        // Outputs 3 and 5 once the oracle starts with 01.
        "late-pair" => Functional::new("late-pair", 1, |ctx, x| {
            Ok((x == 3 || x == 5) && !ctx.read(0, 0)? && ctx.read(0, 1)?)
        }),
        _ => return Err(Error::input(format!("unknown functional {name:?} (inert, ones, echo, late-pair)"))),
    })
}

/// Recover `(x, e, j)` from a column position.
pub fn column_of(pos: u64) -> (u64, u64, u64) {
    let (c, x) = cantor_unpair(pos);
    let (e, j) = cantor_unpair(c);
    (x, e, j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::q;

    fn toy(name: &str) -> Functional {
        rainbow_toy(name).unwrap()
    }

    #[test]
    fn inert_never_triggers() {
        let c = cm_coloring(&toy("inert"), &MeasureConfig::default()).unwrap();
        assert_eq!(c.excluded_pair(), None);
        assert_eq!(max_multiplicity(&c.coloring, 24), 1);
    }

    #[test]
    fn immediate_ones_glue_zero_and_one() {
        let c = cm_coloring(&toy("ones"), &MeasureConfig::default()).unwrap();
        assert_eq!(c.excluded_pair(), Some((0, 1, Prefix::empty())));
        let stage = c.trigger().unwrap().stage;
        assert_eq!(stage, 2);
        for s in stage..40 {
            assert_eq!(c.coloring.color(&[0, s]), cantor_pair(0, s));
            assert_eq!(c.coloring.color(&[1, s]), cantor_pair(0, s));
        }
        assert_eq!(max_multiplicity(&c.coloring, 24), 2);
    }

    #[test]
    fn glued_outputs_are_not_rainbows() {
        for name in ["ones", "echo", "late-pair"] {
            let c = cm_coloring(&toy(name), &MeasureConfig::default()).unwrap();
            assert!(max_multiplicity(&c.coloring, 24) <= 2, "{name}");
            let sigma = c.excluded_pair().unwrap().2;
            for seed in 0..8 {
                let r = Point::random(seed);
                let s = sigma.clone();
                let ext = Point::new("ext", move |p| s.get(p).unwrap_or_else(|| r.bit(p) || p % 3 == 0));
                let v = c.exclusion_check(&ext, 40).unwrap();
                if name == "late-pair" {
                    // Outputs stop at 5, before any glued stage.
                    assert!(matches!(v, Verdict::Inconclusive(_)), "{v:?}");
                } else {
                    assert_eq!(v, Verdict::Pass, "{name} seed {seed}");
                }
            }
        }
    }

    #[test]
    fn measure_inert_finds_nothing() {
        let r = rainbow_measure_coloring(&toy("inert"), &q(1, 4), &MeasureConfig::default()).unwrap();
        assert!(r.sets.is_empty());
        assert_eq!(max_multiplicity(&r.coloring, 24), 1);
        assert_eq!(r.certify(24).unwrap(), Verdict::Pass);
    }

    #[test]
    fn measure_ones_takes_everything_at_once() {
        let r = rainbow_measure_coloring(&toy("ones"), &q(1, 4), &MeasureConfig::default()).unwrap();
        assert_eq!(r.sets.len(), 1);
        assert_eq!(r.sets[0].set.serialize(), "ε");
        assert_eq!(r.sets[0].measure, Exact::one());
        assert_eq!(r.bound, 2);
        assert_eq!(r.certify(24).unwrap(), Verdict::Pass);
    }

    #[test]
    fn measure_echo_by_hand() {
        let r = rainbow_measure_coloring(&toy("echo"), &q(1, 2), &MeasureConfig::default()).unwrap();
        assert_eq!(r.sets.len(), 1);
        assert_eq!(r.sets[0].set.serialize(), "11,011,101");
        assert_eq!(r.sets[0].measure, q(1, 2));
        assert_eq!(r.sets[0].used, BTreeSet::from([0, 1, 2]));
        assert_eq!(r.certify(24).unwrap(), Verdict::Pass);
        let r = rainbow_measure_coloring(&toy("echo"), &q(1, 4), &MeasureConfig::default()).unwrap();
        assert!(r.sets.len() >= 2 && r.sets.len() <= 4);
        assert_eq!(r.sets[0].set.serialize(), "11");
        assert_eq!(r.certify(32).unwrap(), Verdict::Pass);
        for w in r.log.records().windows(2) {
            assert!(w[1].before <= w[0].before);
        }
    }

    #[test]
    fn column_positions_round_trip() {
        for x in 0..20 {
            for e in 0..4 {
                for j in 0..4 {
                    assert_eq!(column_of(column_position(x, e, j)), (x, e, j));
                }
            }
        }
    }

    #[test]
    fn column_restriction_reads_the_right_bits() {
        let phi = toy("echo");
        let col = column_restrict(&phi, 1, 2);
        let oracle = Point::random(9);
        let tape = Tape::Point(oracle.clone());
        for x in 0..10 {
            let v = evaluate(&col, std::slice::from_ref(&tape), x, 1000).unwrap().value();
            assert_eq!(v, Some(oracle.bit(column_position(x, 1, 2))));
        }
    }

    #[test]
    fn splitter_halves_q_per_column() {
        let phi = toy("ones");
        let r = rrt_column_splitter(&phi, 0, 3, &MeasureConfig::default()).unwrap();
        let qs: Vec<Exact> = r.columns.iter().map(|c| c.run.q.clone()).collect();
        assert_eq!(qs, vec![q(1, 2), q(1, 4), q(1, 8)]);
        assert_eq!(r.certify(24).unwrap(), Verdict::Pass);
        let single = rrt_column_splitter(&phi, 0, 1, &MeasureConfig::default()).unwrap();
        assert_eq!(single.columns.len(), 1);
        assert!(single.coloring(cantor_pair(0, 1)).is_some());
    }
}
