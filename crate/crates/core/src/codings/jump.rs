//! Colorings whose homogeneous sets decide an arithmetical predicate.
//!
//! A depth-`n` predicate is an alternation of `n` unbounded quantifiers over a
//! decidable matrix, always ending in `∃`: depth 1 is `∃x₀`, depth 2 is `∀x₀ ∃x₁`,
//! depth 3 is `∃x₀ ∀x₁ ∃x₂`. Column `i` colors `y⃗` by the same formula with each
//! quantifier bounded by the matching `y`. On an infinite homogeneous set that color
//! is the truth value at `i`; at finite scale that is certified by building, inside
//! the set, the witness sequence that pins the color.

use crate::error::{Error, Result};
use crate::kernel::tuples_of;
use crate::problems::{Coloring, Verdict};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantifier {
    Exists,
    Forall,
}

/// Quantifier `j` of a depth-`n` prefix; the innermost is always `∃`.
pub fn quantifier(n: usize, j: usize) -> Quantifier {
    if (n - 1 - j) % 2 == 0 {
        Quantifier::Exists
    } else {
        Quantifier::Forall
    }
}

type Matrix = dyn Fn(u64, &[u64]) -> bool + Send + Sync;

/// A decidable matrix under a quantifier prefix, with a declared truth set.
///
/// The brute-force Skolem search bounds quantifier `j` by `domain·(j+1)`, so inner
/// witnesses can sit past every outer choice; the declared truth must agree with the
/// formula bounded that way (see [`SkolemOracle::audit`]).
#[derive(Clone)]
pub struct BoundedPredicate {
    label: Arc<str>,
    depth: usize,
    domain: u64,
    matrix: Arc<Matrix>,
    truth: Arc<dyn Fn(u64) -> bool + Send + Sync>,
}

impl fmt::Debug for BoundedPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoundedPredicate({}, depth {})", self.label, self.depth)
    }
}

impl BoundedPredicate {
    pub fn new(
        label: impl Into<String>,
        depth: usize,
        domain: u64,
        matrix: impl Fn(u64, &[u64]) -> bool + Send + Sync + 'static,
        truth: impl Fn(u64) -> bool + Send + Sync + 'static,
    ) -> Self {
        assert!(depth >= 1, "depth must be positive");
        BoundedPredicate { label: Arc::from(label.into()), depth, domain, matrix: Arc::new(matrix), truth: Arc::new(truth) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn domain(&self) -> u64 {
        self.domain
    }

    /// The declared truth value at `i`.
    pub fn truth(&self, i: u64) -> bool {
        (self.truth)(i)
    }

    /// The formula with quantifier `j` bounded by `bounds[j]`, for `j` past `xs.len()`.
    fn eval(&self, i: u64, xs: &mut Vec<u64>, bounds: &[u64]) -> bool {
        let j = xs.len();
        if j == self.depth {
            return (self.matrix)(i, xs);
        }
        let want = quantifier(self.depth, j) == Quantifier::Exists;
        for x in 0..bounds[j] {
            xs.push(x);
            let v = self.eval(i, xs, bounds);
            xs.pop();
            if v == want {
                return want;
            }
        }
        !want
    }

    /// The formula at `i` with each quantifier bounded by the matching entry of `bounds`.
    pub fn holds_below(&self, i: u64, bounds: &[u64]) -> bool {
        assert_eq!(bounds.len(), self.depth, "one bound per quantifier");
        self.eval(i, &mut Vec::new(), bounds)
    }

    /// Search bound for quantifier `j` in the Skolem oracle.
    pub fn span(&self, j: usize) -> u64 {
        self.domain * (j as u64 + 1)
    }

    pub fn skolem(&self) -> SkolemOracle {
        SkolemOracle { pred: self.clone() }
    }
}

/// Witness functions found by brute force inside the predicate's domain.
#[derive(Clone, Debug)]
pub struct SkolemOracle {
    pred: BoundedPredicate,
}

impl SkolemOracle {
    /// The rest of the formula after `prefix`, every quantifier bounded by the domain.
    pub fn holds(&self, i: u64, prefix: &[u64]) -> bool {
        let bounds: Vec<u64> = (0..self.pred.depth).map(|j| self.pred.span(j)).collect();
        self.pred.eval(i, &mut prefix.to_vec(), &bounds)
    }

    /// Least `x` within the search bound with `holds(prefix ++ [x]) == want`.
    pub fn witness(&self, i: u64, prefix: &[u64], want: bool) -> Option<u64> {
        let mut xs = prefix.to_vec();
        (0..self.pred.span(prefix.len())).find(|&x| {
            xs.push(x);
            let v = self.holds(i, &xs);
            xs.pop();
            v == want
        })
    }

    /// The declared truth agrees with the domain-bounded formula at every `i` below `count`.
    pub fn audit(&self, count: u64) -> Result<()> {
        for i in 0..count {
            if self.holds(i, &[]) != self.pred.truth(i) {
                return Err(Error::input(format!(
                    "{}: declared truth at {i} is {}, the bounded formula says otherwise",
                    self.pred.label,
                    self.pred.truth(i)
                )));
            }
        }
        Ok(())
    }

    /// Largest witness quantifier `j` can need, over every play of the opposing
    /// quantifiers below `z` (the defending side's earlier choices are its own witnesses).
    fn bound(&self, i: u64, j: usize, z: &[u64], member: bool) -> Option<u64> {
        let own = if member { Quantifier::Exists } else { Quantifier::Forall };
        let n = self.pred.depth;
        fn walk(o: &SkolemOracle, i: u64, j: usize, z: &[u64], member: bool, own: Quantifier, n: usize, xs: &mut Vec<u64>) -> Option<u64> {
            let k = xs.len();
            if k == j {
                return o.witness(i, xs, member);
            }
            if quantifier(n, k) == own {
                let w = o.witness(i, xs, member)?;
                xs.push(w);
                let r = walk(o, i, j, z, member, own, n, xs);
                xs.pop();
                return r;
            }
            let mut best = None;
            for x in 0..z[k] {
                xs.push(x);
                let r = walk(o, i, j, z, member, own, n, xs);
                xs.pop();
                best = best.max(Some(r?));
            }
            // No opposing play below z[k]: nothing constrains this quantifier.
            best.or(Some(0))
        }
        walk(self, i, j, z, member, own, n, &mut Vec::new())
    }

    /// The increasing sequence inside `h` whose bounded formula is forced to `member`:
    /// each defending quantifier's entry lies past every witness it might need.
    pub fn z_sequence(&self, i: u64, h: &[u64], member: bool) -> Option<Vec<u64>> {
        let own = if member { Quantifier::Exists } else { Quantifier::Forall };
        let mut sorted = h.to_vec();
        sorted.sort_unstable();
        let mut z: Vec<u64> = Vec::new();
        for j in 0..self.pred.depth {
            let mut lower = z.last().map_or(0, |&p| p + 1);
            if quantifier(self.pred.depth, j) == own {
                lower = lower.max(self.bound(i, j, &z, member)? + 1);
            }
            z.push(*sorted.iter().find(|&&y| y >= lower)?);
        }
        Some(z)
    }
}

/// Column `i` of the jump-coding instance.
pub fn jump_coloring(pred: &BoundedPredicate, i: u64) -> Coloring {
    let p = pred.clone();
    Coloring::finite(format!("jump({},{i})", pred.label()), pred.depth(), 2, move |ys| p.holds_below(i, ys) as u64)
}

/// The first `count` columns.
pub fn jump_instance(pred: &BoundedPredicate, count: u64) -> Vec<Coloring> {
    (0..count).map(|i| jump_coloring(pred, i)).collect()
}

/// The single color of `[h]^n` below `horizon`, as a bit.
pub fn jump_decode_one(f: &Coloring, h: &[u64], horizon: u64) -> Result<bool> {
    let mut hs: Vec<u64> = h.iter().copied().filter(|&x| x < horizon).collect();
    hs.sort_unstable();
    hs.dedup();
    if hs.len() < f.arity() {
        return Err(Error::input(format!("{} elements below {horizon}, need {}", hs.len(), f.arity())));
    }
    let tuples = tuples_of(&hs, f.arity());
    let c = f.color(&tuples[0]);
    if let Some(t) = tuples.iter().find(|t| f.color(t) != c) {
        return Err(Error::input(format!("{:?} and {t:?} differ in color under {}", tuples[0], f.label())));
    }
    Ok(c == 1)
}

/// Decode a whole sequence of homogeneous sets.
pub fn jump_decode(fs: &[Coloring], hs: &[Vec<u64>], horizon: u64) -> Result<Vec<bool>> {
    if fs.len() != hs.len() {
        return Err(Error::input(format!("{} colorings but {} sets", fs.len(), hs.len())));
    }
    fs.iter().zip(hs).map(|(f, h)| jump_decode_one(f, h, horizon)).collect()
}

/// Pass iff the witness sequence for the declared truth at `i` fits inside `h` and
/// its color is that truth; inconclusive when `h` cannot host it.
pub fn jump_certificate(pred: &BoundedPredicate, i: u64, h: &[u64]) -> Verdict {
    let member = pred.truth(i);
    match pred.skolem().z_sequence(i, h, member) {
        None => Verdict::Inconclusive(format!("{h:?} cannot host the witness sequence at {i}")),
        Some(z) if pred.holds_below(i, &z) == member => Verdict::Pass,
        Some(z) => Verdict::Fail(format!("witness sequence {z:?} has color {}", !member as u8)),
    }
}

/// The lexicographically least homogeneous `size`-set below `horizon` that hosts the
/// witness sequence at `i`; `None` if there is none.
pub fn certified_homogeneous(pred: &BoundedPredicate, i: u64, horizon: u64, size: usize) -> Option<Vec<u64>> {
    let n = pred.depth();
    let f = jump_coloring(pred, i);
    let mut color = std::collections::HashMap::new();
    for t in crate::kernel::tuples_of(&(0..horizon).collect::<Vec<_>>(), n) {
        color.insert(t.clone(), f.color(&t));
    }
    fn dfs(
        set: &mut Vec<u64>,
        c: Option<u64>,
        horizon: u64,
        size: usize,
        n: usize,
        color: &std::collections::HashMap<Vec<u64>, u64>,
        done: &dyn Fn(&[u64]) -> bool,
    ) -> bool {
        if set.len() == size {
            return done(set);
        }
        let start = set.last().map_or(0, |&x| x + 1);
        for y in start..horizon {
            let mut cc = c;
            let ok = set.len() + 1 < n
                || tuples_of(set, n - 1).iter().all(|t| {
                    let mut u = t.clone();
                    u.push(y);
                    let v = color[&u];
                    *cc.get_or_insert(v) == v
                });
            if ok {
                set.push(y);
                if dfs(set, cc, horizon, size, n, color, done) {
                    return true;
                }
                set.pop();
            }
        }
        false
    }
    let done = |s: &[u64]| jump_certificate(pred, i, s) == Verdict::Pass;
    let mut set = Vec::new();
    dfs(&mut set, None, horizon, size.max(n), n, &color, &done).then_some(set)
}

fn is_square(i: u64) -> bool {
    (0..=i).any(|r| r * r == i)
}

fn is_prime(i: u64) -> bool {
    i >= 2 && (2..i).all(|d| i % d != 0)
}

/// Depth-2 predicate "`{x : p(i, x)}` is infinite", written `∀x₀ ∃x₁ (x₁ > x₀ ∧ p(i, x₁))`.
fn infinitely_often(
    label: &str,
    p: impl Fn(u64, u64) -> bool + Send + Sync + 'static,
    truth: impl Fn(u64) -> bool + Send + Sync + 'static,
) -> BoundedPredicate {
    BoundedPredicate::new(label, 2, 48, move |i, xs| xs[1] > xs[0] && p(i, xs[1]), truth)
}

/// Twenty test predicates: ten of depth 1, ten of depth 2, each with its truth set.
pub fn jump_test_predicates() -> Vec<BoundedPredicate> {
    let d1 = |label: &str, m: fn(u64, u64) -> bool, t: fn(u64) -> bool| {
        BoundedPredicate::new(label, 1, 48, move |i, xs| m(i, xs[0]), t)
    };
    vec![
        d1("x=i", |i, x| x == i, |_| true),
        d1("never", |_, _| false, |_| false),
        d1("even-index", |i, x| i % 2 == 0 && x == 3, |i| i % 2 == 0),
        d1("square", |i, x| x * x == i, is_square),
        d1("composite", |i, x| x > 1 && x < i && i % x == 0, |i| i > 3 && !is_prime(i)),
        d1("late-witness", |i, x| x == 2 * i + 5, |_| true),
        d1("mod3", |i, x| i % 3 == 1 && x == i, |i| i % 3 == 1),
        d1("power-of-two", |i, x| x < 8 && 1 << x == i, |i| i.is_power_of_two()),
        d1("triangular", |i, x| x * (x + 1) / 2 == i, |i| (0..=i).any(|x| x * (x + 1) / 2 == i)),
        d1("prime", |i, x| x == i && is_prime(i), is_prime),
        infinitely_often("multiples", |i, x| x % (i + 2) == 0, |_| true),
        infinitely_often("bounded", |i, x| x < i + 3, |_| false),
        infinitely_often("evens-if-even", |i, x| if i % 2 == 0 { x % 2 == 0 } else { x < 4 }, |i| i % 2 == 0),
        infinitely_often("none", |_, _| false, |_| false),
        infinitely_often("all", |_, _| true, |_| true),
        infinitely_often("above", |i, x| x > 3 * i, |_| true),
        infinitely_often("thirds-if-square", |i, x| if is_square(i) { x % 3 == 0 } else { x == i }, is_square),
        infinitely_often("odd-below", |i, x| x <= 2 * i && x % 2 == 1, |_| false),
        infinitely_often("fifths-if-mod3", |i, x| if i % 3 == 0 { x % 5 == 1 } else { x <= i }, |i| i % 3 == 0),
        infinitely_often("evens-if-prime", |i, x| if is_prime(i) { x % 2 == 0 } else { x == 7 }, is_prime),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantifier_prefixes() {
        use Quantifier::*;
        assert_eq!((0..1).map(|j| quantifier(1, j)).collect::<Vec<_>>(), vec![Exists]);
        assert_eq!((0..2).map(|j| quantifier(2, j)).collect::<Vec<_>>(), vec![Forall, Exists]);
        assert_eq!((0..3).map(|j| quantifier(3, j)).collect::<Vec<_>>(), vec![Exists, Forall, Exists]);
    }

    #[test]
    fn equality_predicate_unfolds() {
        let p = &jump_test_predicates()[0];
        for i in 0..6 {
            let f = jump_coloring(p, i);
            for y in 0..20 {
                assert_eq!(f.color(&[y]), (y > i) as u64);
            }
            let tail: Vec<u64> = (i + 1..i + 9).collect();
            assert!(jump_decode_one(&f, &tail, 48).unwrap());
            assert_eq!(jump_certificate(p, i, &tail), Verdict::Pass);
        }
    }

    #[test]
    fn never_decodes_false() {
        let p = &jump_test_predicates()[1];
        let f = jump_coloring(p, 3);
        assert!(!jump_decode_one(&f, &[5, 9, 11], 48).unwrap());
        assert_eq!(jump_certificate(p, 3, &[5, 9, 11]), Verdict::Pass);
    }

    #[test]
    fn declared_truth_survives_audit() {
        for p in jump_test_predicates() {
            p.skolem().audit(6).unwrap_or_else(|e| panic!("{e}"));
        }
        let bad = BoundedPredicate::new("liar", 1, 10, |_, _| false, |_| true);
        assert!(bad.skolem().audit(1).is_err());
    }

    #[test]
    fn non_homogeneous_sets_are_rejected() {
        let f = jump_coloring(&jump_test_predicates()[0], 2);
        assert!(jump_decode_one(&f, &[1, 5], 48).is_err());
    }

    #[test]
    fn certified_sets_decode_the_truth() {
        for p in jump_test_predicates() {
            for i in 0..6 {
                let h = certified_homogeneous(&p, i, 40, 4).unwrap_or_else(|| panic!("{} at {i}", p.label()));
                let f = jump_coloring(&p, i);
                assert_eq!(jump_decode_one(&f, &h, 40).unwrap(), p.truth(i), "{} at {i}: {h:?}", p.label());
            }
        }
    }

    #[test]
    fn uncertified_finite_sets_can_mislead() {
        // Depth 2, true at 3 (multiples of 5): a run with no multiple of 5 inside is
        // homogeneous in the wrong color, and cannot host the witness sequence.
        let p = jump_test_predicates().into_iter().find(|p| p.label() == "multiples").unwrap();
        let h = vec![21, 22, 23, 24];
        let f = jump_coloring(&p, 3);
        assert!(!jump_decode_one(&f, &h, 48).unwrap());
        assert!(matches!(jump_certificate(&p, 3, &h), Verdict::Inconclusive(_)));
    }

    #[test]
    fn both_witness_constructions_land_in_the_claimed_color() {
        let p = jump_test_predicates().into_iter().find(|p| p.label() == "evens-if-even").unwrap();
        let o = p.skolem();
        let all: Vec<u64> = (0..40).collect();
        let z = o.z_sequence(2, &all, true).unwrap();
        assert!(p.holds_below(2, &z));
        let z = o.z_sequence(3, &all, false).unwrap();
        assert!(!p.holds_below(3, &z));
        assert_eq!(jump_certificate(&p, 2, &all), Verdict::Pass);
        assert_eq!(jump_certificate(&p, 3, &all), Verdict::Pass);
    }
}
