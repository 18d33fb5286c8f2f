//! Colorings that count members of a limit set inside a fixed tuple.
//!
//! For a tuple `x⃗` of `k−1` indices, `f_x⃗(y⃗)` counts the `i ∈ x⃗` with `h(i, y⃗) = 1`.
//! Far enough out every `h(i, ·)` has settled on `D(i)`, so `|x⃗ ∩ D|` occurs on any
//! infinite set and a thin solution must omit some other count. At finite scale that
//! is a claim about a staircase `s₀ < y₀ < s₁ < y₁ < ⋯` of settled entries in the set.

use crate::error::{Error, Result};
use crate::kernel::tuples_of;
use crate::problems::{Coloring, Verdict};
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

type Rule = dyn Fn(u64, &[u64]) -> bool + Send + Sync;
type Settle = dyn Fn(u64, &[u64]) -> u64 + Send + Sync;

/// `h(i, y⃗)` with declared stabilization: once each `y_j` exceeds
/// `settle(i, y₀..y_{j−1})`, the value is `D(i)`.
#[derive(Clone)]
pub struct LimitPredicate {
    label: Arc<str>,
    arity: usize,
    rule: Arc<Rule>,
    settle: Arc<Settle>,
    truth: Arc<dyn Fn(u64) -> bool + Send + Sync>,
}

impl fmt::Debug for LimitPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LimitPredicate({}, arity {})", self.label, self.arity)
    }
}

impl LimitPredicate {
    pub fn new(
        label: impl Into<String>,
        arity: usize,
        rule: impl Fn(u64, &[u64]) -> bool + Send + Sync + 'static,
        settle: impl Fn(u64, &[u64]) -> u64 + Send + Sync + 'static,
        truth: impl Fn(u64) -> bool + Send + Sync + 'static,
    ) -> Self {
        assert!(arity >= 1, "arity must be positive");
        LimitPredicate {
            label: Arc::from(label.into()),
            arity,
            rule: Arc::new(rule),
            settle: Arc::new(settle),
            truth: Arc::new(truth),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn eval(&self, i: u64, ys: &[u64]) -> bool {
        (self.rule)(i, ys)
    }

    pub fn settle(&self, i: u64, prefix: &[u64]) -> u64 {
        (self.settle)(i, prefix)
    }

    /// Membership in the limit set `D`.
    pub fn truth(&self, i: u64) -> bool {
        (self.truth)(i)
    }

    fn settled(&self, i: u64, ys: &[u64]) -> bool {
        (0..ys.len()).all(|j| ys[j] > self.settle(i, &ys[..j]))
    }

    /// Every settled tuple below `horizon` takes the declared limit, for `i < count`.
    pub fn audit(&self, count: u64, horizon: u64) -> Result<()> {
        let all: Vec<u64> = (0..horizon).collect();
        for t in tuples_of(&all, self.arity) {
            for i in 0..count {
                if self.settled(i, &t) && self.eval(i, &t) != self.truth(i) {
                    return Err(Error::input(format!(
                        "{}: h({i}, {t:?}) is past its declared bound but differs from the limit",
                        self.label
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The coloring for index tuple `xs`, with `xs.len() + 1` colors.
pub fn kummer_coloring(h: &LimitPredicate, xs: &[u64]) -> Coloring {
    let (h2, idx) = (h.clone(), xs.to_vec());
    let k = xs.len() as u64 + 1;
    Coloring::finite(format!("count({},{xs:?})", h.label()), h.arity(), k, move |ys| {
        idx.iter().filter(|&&i| h2.eval(i, ys)).count() as u64
    })
}

/// The settled tuple inside a solution, with the color it carries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Staircase {
    pub bounds: Vec<u64>,
    pub ys: Vec<u64>,
    pub color: u64,
}

fn staircase(h: &LimitPredicate, xs: &[u64], members: &[u64]) -> Option<Staircase> {
    let (mut bounds, mut ys) = (Vec::new(), Vec::new());
    for _ in 0..h.arity() {
        let s = xs.iter().map(|&i| h.settle(i, &ys)).max().unwrap_or(0);
        let floor = ys.last().map_or(s, |&p: &u64| s.max(p));
        bounds.push(s);
        ys.push(*members.iter().find(|&&y| y > floor)?);
    }
    let color = xs.iter().filter(|&&i| h.eval(i, &ys)).count() as u64;
    Some(Staircase { bounds, ys, color })
}

/// Check a thin solution `members` (omitting `omitted`) of the coloring for `xs`.
///
/// Input error if the set is not thin below `horizon`; inconclusive if it is too sparse
/// to host the staircase; otherwise Pass iff the staircase carries `|xs ∩ D|`, that
/// count is not the omitted color, and the colors seen are a proper subset.
pub fn kummer_claim_check(h: &LimitPredicate, xs: &[u64], members: &[u64], omitted: u64, horizon: u64) -> Result<Verdict> {
    let f = kummer_coloring(h, xs);
    let k = xs.len() as u64 + 1;
    let mut hs: Vec<u64> = members.iter().copied().filter(|&y| y < horizon).collect();
    hs.sort_unstable();
    hs.dedup();
    let seen: BTreeSet<u64> = tuples_of(&hs, h.arity()).iter().map(|t| f.color(t)).collect();
    if seen.contains(&omitted) {
        return Err(Error::input(format!("{hs:?} is not thin for {}: color {omitted} occurs", f.label())));
    }
    if seen.len() as u64 >= k {
        return Ok(Verdict::Fail(format!("{hs:?} shows all {k} colors")));
    }
    let Some(st) = staircase(h, xs, &hs) else {
        return Ok(Verdict::Inconclusive(format!("{hs:?} cannot host the settled staircase")));
    };
    let count = xs.iter().filter(|&&i| h.truth(i)).count() as u64;
    Ok(if st.color != count {
        Verdict::Fail(format!("staircase {:?} has color {} but |x ∩ D| = {count}", st.ys, st.color))
    } else if count == omitted {
        Verdict::Fail(format!("|x ∩ D| = {count} is the omitted color"))
    } else {
        Verdict::Pass
    })
}

fn is_prime(i: u64) -> bool {
    i >= 2 && (2..i).all(|d| i % d != 0)
}

/// Unary test predicates with small stabilization bounds, and one binary one.
pub fn kummer_test_predicates() -> Vec<LimitPredicate> {
    vec![
        LimitPredicate::new("constant", 1, |i, _| i % 3 == 0, |_, _| 0, |i| i % 3 == 0),
        LimitPredicate::new(
            "evens",
            1,
            |i, ys| if ys[0] > 2 * i + 1 { i % 2 == 0 } else { ys[0] % 2 == 1 },
            |i, _| 2 * i + 1,
            |i| i % 2 == 0,
        ),
        LimitPredicate::new(
            "late-mod3",
            1,
            |i, ys| if ys[0] > i + 3 { i % 3 == 1 } else { (ys[0] + i) % 2 == 0 },
            |i, _| i + 3,
            |i| i % 3 == 1,
        ),
        LimitPredicate::new(
            "flicker-primes",
            1,
            |i, ys| if ys[0] > 6 { is_prime(i) } else { ys[0] % 3 == i % 3 },
            |_, _| 6,
            is_prime,
        ),
        LimitPredicate::new(
            "nested",
            2,
            |i, ys| ys[0] > i && ys[1] > ys[0] + 1 && i % 2 == 1,
            |i, pre| if pre.is_empty() { i } else { pre[0] + 1 },
            |i| i % 2 == 1,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declared_bounds_survive_audit() {
        for h in kummer_test_predicates() {
            h.audit(6, 24).unwrap_or_else(|e| panic!("{e}"));
        }
        let liar = LimitPredicate::new("liar", 1, |_, ys| ys[0] % 2 == 0, |_, _| 3, |_| true);
        assert!(liar.audit(1, 10).is_err());
    }

    #[test]
    fn constant_rule_forces_a_different_omission() {
        let h = &kummer_test_predicates()[0];
        let xs = [0, 1, 3];
        let f = kummer_coloring(h, &xs);
        assert!((0..20).all(|y| f.color(&[y]) == 2));
        assert_eq!(kummer_claim_check(h, &xs, &[4, 9], 0, 20).unwrap(), Verdict::Pass);
        assert!(kummer_claim_check(h, &xs, &[4, 9], 2, 20).is_err());
    }

    #[test]
    fn sparse_sets_are_inconclusive() {
        let h = &kummer_test_predicates()[1];
        // Settles past 2*5+1 = 11; a set below 12 cannot host the staircase.
        let v = kummer_claim_check(h, &[5], &[1, 3, 7], 0, 20).unwrap();
        assert!(matches!(v, Verdict::Inconclusive(_)), "{v}");
    }

    #[test]
    fn binary_staircase_climbs() {
        let h = &kummer_test_predicates()[4];
        let st = staircase(h, &[1, 2], &(0..20).collect::<Vec<_>>()).unwrap();
        assert_eq!(st.bounds, vec![2, 4]);
        assert_eq!(st.ys, vec![3, 5]);
        assert_eq!(st.color, 1);
    }
}
