//! Stage-based diagonalizations run against concrete functionals.
//!
//! Every adversary is a deterministic stage loop that records what it did in a
//! [`StageLog`]. The log is the certificate: measure bookkeeping is exact, and the
//! digest pins a run for regression.

mod delta2;
mod qwwkl;
mod rainbow;
mod ts1;

pub use delta2::{delta2_diagonalizer, Defeat, Delta2Run};
pub use qwwkl::{cutter_psi, qwwkl_cutter, CutterAction, CutterConfig, CutterRun};
pub use rainbow::{
    cm_coloring, column_of, column_position, column_restrict, max_multiplicity, rainbow_measure_coloring,
    rainbow_toy, rrt_column_splitter, CmColoring, ColumnRun, FoundSet, MeasureConfig, MeasureRun, SplitterRun,
    Trigger,
};
pub use ts1::{ts1_diagonalizer, ts1_toy_pairs, Ts1Config, Ts1Run};

use crate::error::{Error, Result};
use crate::kernel::{EvalOutcome, Prefix};
use crate::measure::{show, Exact, Measure};
use num_traits::Zero;
use sha2::{Digest, Sha256};
use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

/// One stage of an adversary run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageRecord {
    pub stage: u64,
    /// Which branch of the construction ran.
    pub case: String,
    /// The parameters acted for, rendered.
    pub acted: String,
    pub before: Option<Exact>,
    pub after: Option<Exact>,
    pub invalidated: Vec<u64>,
    pub markers: Vec<u64>,
    pub note: String,
}

impl StageRecord {
    pub fn new(stage: u64, case: impl Into<String>) -> Self {
        StageRecord {
            stage,
            case: case.into(),
            acted: String::new(),
            before: None,
            after: None,
            invalidated: Vec::new(),
            markers: Vec::new(),
            note: String::new(),
        }
    }

    pub fn acted(mut self, s: impl Into<String>) -> Self {
        self.acted = s.into();
        self
    }

    pub fn measures(mut self, before: Exact, after: Exact) -> Self {
        self.before = Some(before);
        self.after = Some(after);
        self
    }

    pub fn invalidated(mut self, colors: Vec<u64>) -> Self {
        self.invalidated = colors;
        self
    }

    pub fn markers(mut self, m: Vec<u64>) -> Self {
        self.markers = m;
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.note = s.into();
        self
    }
}

/// Append-only record of an adversary run.
///
/// With `cuts` set, logged measures may only go down: each record's `after` is at
/// most its `before`, and its `before` is at most the last logged `after`.
#[derive(Clone, Debug)]
pub struct StageLog {
    name: String,
    cuts: bool,
    records: Vec<StageRecord>,
}

pub const LOG_COLUMNS: [&str; 8] = ["stage", "case", "acted", "before", "after", "invalidated", "markers", "note"];

fn join(xs: &[u64]) -> String {
    xs.iter().map(u64::to_string).collect::<Vec<_>>().join(" ")
}

impl StageLog {
    pub fn new(name: impl Into<String>, cuts: bool) -> Self {
        StageLog { name: name.into(), cuts, records: Vec::new() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Append a record; stages never go backwards, and cut logs never gain measure.
    pub fn push(&mut self, r: StageRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if r.stage < last.stage {
                return Err(Error::contract(format!("{}: stage {} logged after {}", self.name, r.stage, last.stage)));
            }
        }
        if self.cuts {
            if let (Some(b), Some(a)) = (&r.before, &r.after) {
                if a > b {
                    return Err(Error::contract(format!("{}: stage {} raises the measure", self.name, r.stage)));
                }
            }
            let last_after = self.records.iter().rev().find_map(|x| x.after.clone());
            if let (Some(b), Some(prev)) = (&r.before, last_after) {
                if *b > prev {
                    return Err(Error::contract(format!("{}: stage {} starts above the last cut", self.name, r.stage)));
                }
            }
        }
        self.records.push(r);
        Ok(())
    }

    pub fn records(&self) -> &[StageRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records whose case equals `case`.
    pub fn with_case<'a>(&'a self, case: &'a str) -> impl Iterator<Item = &'a StageRecord> + 'a {
        self.records.iter().filter(move |r| r.case == case)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(LOG_COLUMNS).expect("writing to memory");
        for r in &self.records {
            let m = |x: &Option<Exact>| x.as_ref().map(show).unwrap_or_default();
            w.write_record([
                r.stage.to_string(),
                r.case.clone(),
                r.acted.clone(),
                m(&r.before),
                m(&r.after),
                join(&r.invalidated),
                join(&r.markers),
                r.note.clone(),
            ])
            .expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
    }

    /// SHA-256 of the CSV rendering, lowercase hex.
    pub fn digest(&self) -> String {
        format!("{:x}", Sha256::digest(self.to_csv().as_bytes()))
    }
}

/// A computable approximation `g(e, i, a, s)` to a family of limit sets.
///
/// Test approximations may declare the stage after which `g(e, e, a, ·)` is fixed.
#[derive(Clone)]
pub struct Delta2Approx {
    label: Arc<str>,
    rule: Arc<dyn Fn(u64, u64, u64, u64) -> bool + Send + Sync>,
    settles: Option<Arc<dyn Fn(u64, u64) -> u64 + Send + Sync>>,
}

impl Delta2Approx {
    pub fn new(label: impl Into<String>, rule: impl Fn(u64, u64, u64, u64) -> bool + Send + Sync + 'static) -> Self {
        Delta2Approx { label: Arc::from(label.into()), rule: Arc::new(rule), settles: None }
    }

    /// Declare that `g(e, e, a, s)` is constant for `s >= settles(e, a)`.
    pub fn with_stabilization(mut self, settles: impl Fn(u64, u64) -> u64 + Send + Sync + 'static) -> Self {
        self.settles = Some(Arc::new(settles));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn guess(&self, e: u64, i: u64, a: u64, s: u64) -> bool {
        (self.rule)(e, i, a, s)
    }

    /// The settled value of `g(e, e, a, ·)`; `None` without a declared bound.
    pub fn limit(&self, e: u64, a: u64) -> Option<bool> {
        self.settles.as_ref().map(|f| self.guess(e, e, a, f(e, a).max(a + 1)))
    }

    pub fn settles_by(&self, e: u64, a: u64) -> Option<u64> {
        self.settles.as_ref().map(|f| f(e, a))
    }

    /// Every approximation empty.
    pub fn empty() -> Self {
        Delta2Approx::new("empty", |_, _, _, _| false).with_stabilization(|_, _| 0)
    }

    /// `D_e` = evens for every `e`; odd `a` is wrongly guessed in until stage `a + delay`.
    pub fn evens(delay: u64) -> Self {
        Delta2Approx::new(format!("evens(delay={delay})"), move |_, _, a, s| a % 2 == 0 || s < a + delay)
            .with_stabilization(move |_, a| a + delay)
    }

    /// `D_e` = multiples of `e + 2`, settled from the start.
    pub fn multiples() -> Self {
        Delta2Approx::new("multiples(e+2)", |e, _, a, _| a % (e + 2) == 0).with_stabilization(|_, _| 0)
    }

    /// `D_e` = `{0, .., e}`: finite.
    pub fn initial() -> Self {
        Delta2Approx::new("initial(e)", |e, _, a, _| a <= e).with_stabilization(|_, _| 0)
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "empty" => Ok(Self::empty()),
            "evens" => Ok(Self::evens(0)),
            "evens-late" => Ok(Self::evens(5)),
            "multiples" => Ok(Self::multiples()),
            "initial" => Ok(Self::initial()),
            _ => Err(Error::input(format!("unknown approximation {name:?} (empty, evens, evens-late, multiples, initial)"))),
        }
    }
}

impl fmt::Debug for Delta2Approx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Delta2Approx({})", self.label)
    }
}

/// Length first, then lexicographic.
fn shortlex(a: &Prefix, b: &Prefix) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// A finite set of strings standing for the union of their cylinders.
///
/// Members are kept in shortlex order; the canonical order on sets compares these
/// sorted member lists lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct CylinderSet {
    strings: Vec<Prefix>,
}

impl CylinderSet {
    pub fn new(mut strings: Vec<Prefix>) -> Self {
        strings.sort_by(shortlex);
        strings.dedup();
        CylinderSet { strings }
    }

    pub fn strings(&self) -> &[Prefix] {
        &self.strings
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    /// No member extends another.
    pub fn is_antichain(&self) -> bool {
        self.strings.iter().enumerate().all(|(i, a)| self.strings[i + 1..].iter().all(|b| !a.compatible(b)))
    }

    /// Some member is a prefix of `x`.
    pub fn covers(&self, x: &Prefix) -> bool {
        self.strings.iter().any(|s| s.is_prefix_of(x))
    }

    /// The cylinders share no point.
    pub fn disjoint_from(&self, other: &CylinderSet) -> bool {
        self.strings.iter().all(|a| other.strings.iter().all(|b| !a.compatible(b)))
    }

    /// Exact measure of the union of the cylinders.
    pub fn measure(&self) -> Exact {
        // A member covered by a shorter member adds nothing.
        let mut total = Exact::zero();
        for (i, s) in self.strings.iter().enumerate() {
            if !self.strings[..i].iter().any(|t| t.is_prefix_of(s)) {
                total += Exact::dyadic(1, s.len() as u32);
            }
        }
        total
    }

    /// Members joined by commas; `ε` for the empty string.
    pub fn serialize(&self) -> String {
        self.strings.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
    }
}

impl PartialOrd for CylinderSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CylinderSet {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.strings.iter().zip(&other.strings) {
            match shortlex(a, b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.strings.len().cmp(&other.strings.len())
    }
}

/// A converged value, `None` on staged divergence, and an error when fuel runs out.
fn staged(out: EvalOutcome, what: &str) -> Result<Option<bool>> {
    match out {
        EvalOutcome::Converged { value, .. } => Ok(Some(value)),
        EvalOutcome::Diverged { reason: crate::kernel::Divergence::PrefixEnd, .. } => Ok(None),
        EvalOutcome::Diverged { steps, .. } => Err(Error::resource(format!("{what}: fuel ran out after {steps} steps"))),
    }
}
