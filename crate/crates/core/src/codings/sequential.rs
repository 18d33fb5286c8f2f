//! Explicit solvers for sequences of unary instances, and the lift of a limit
//! coloring to one of higher arity.

use crate::catalog::thin::Outcome;
use crate::error::{Error, Result};
use crate::kernel::tuples_of;
use crate::problems::{verify_thin_at, Coloring, Colors, ThinSolution, Verdict};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// Greedy rainbow sets: each new element is the least one whose color is new.
///
/// Inconclusive for a column whose eligible elements run out below `horizon`.
pub fn seq_rrt1_greedy(fs: &[Coloring], horizon: u64, size: usize) -> Vec<Outcome<Vec<u64>>> {
    fs.iter()
        .map(|f| {
            let mut set = Vec::with_capacity(size);
            let mut used = BTreeSet::new();
            for x in 0..horizon {
                if set.len() == size {
                    break;
                }
                if used.insert(f.color(&[x])) {
                    set.push(x);
                }
            }
            if set.len() == size {
                Outcome::Ready(set)
            } else {
                Outcome::Inconclusive(format!("{}: only {} eligible elements below {horizon}", f.label(), set.len()))
            }
        })
        .collect()
}

/// A seeded unary coloring whose fibers below `horizon` have at most `bound` elements;
/// injective from `horizon` on.
pub fn bounded_sample(seed: u64, bound: u64, horizon: u64) -> Coloring {
    assert!(bound >= 1, "fiber bound must be positive");
    let mut slots: Vec<u64> = (0..horizon).collect();
    slots.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Coloring::new(format!("bounded(seed={seed},b={bound})"), 1, Colors::Omega, move |xs| {
        let x = xs[0];
        if x < horizon {
            slots[x as usize] / bound
        } else {
            x + horizon
        }
    })
}

/// A thin solution from [`seq_ts1_omega_solver`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeqTs1Solution {
    pub members: Vec<u64>,
    pub omitted: u64,
    /// The nonzero support was exhausted before the set was complete.
    pub trivial: bool,
    pub note: String,
}

impl SeqTs1Solution {
    pub fn verify(&self, f: &Coloring, horizon: u64) -> Result<Verdict> {
        verify_thin_at(f, &ThinSolution::from_members(&self.members, self.omitted), horizon, self.members.len())
    }
}

/// Each set follows the nonzero support of its coloring while it lasts below
/// `horizon`, then counts upward. Whether support remains is a jump question; here it is
/// answered by searching up to `horizon`, and each solution says so.
pub fn seq_ts1_omega_solver(fs: &[Coloring], horizon: u64, size: usize) -> Vec<SeqTs1Solution> {
    fs.iter()
        .map(|f| {
            let mut members: Vec<u64> = Vec::with_capacity(size);
            while members.len() < size {
                let from = members.last().map_or(0, |&a| a + 1);
                let next = (from..horizon).find(|&b| f.color(&[b]) != 0).unwrap_or(from);
                members.push(next);
            }
            let colors: BTreeSet<u64> = members.iter().map(|&a| f.color(&[a])).collect();
            let trivial = colors.contains(&0);
            let omitted = if trivial { (0..).find(|c| !colors.contains(c)).expect("finite set") } else { 0 };
            let note = format!("support searched below {horizon} in place of the jump");
            SeqTs1Solution { members, omitted, trivial, note }
        })
        .collect()
}

type Approx = dyn Fn(u64, &[u64], u64) -> u64 + Send + Sync;
type Settle = dyn Fn(u64, &[u64]) -> u64 + Send + Sync;

/// Approximations `f_i(x⃗, s)` with declared stabilization `settle(i, x⃗)`.
#[derive(Clone)]
pub struct LiftedInstance {
    label: Arc<str>,
    arity: usize,
    k: u64,
    approx: Arc<Approx>,
    settle: Arc<Settle>,
}

impl fmt::Debug for LiftedInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LiftedInstance({}, arity {}, k={})", self.label, self.arity, self.k)
    }
}

/// Package approximations of an `arity`-ary `k`-coloring sequence.
pub fn limit_lift(
    label: impl Into<String>,
    arity: usize,
    k: u64,
    approx: impl Fn(u64, &[u64], u64) -> u64 + Send + Sync + 'static,
    settle: impl Fn(u64, &[u64]) -> u64 + Send + Sync + 'static,
) -> LiftedInstance {
    LiftedInstance { label: Arc::from(label.into()), arity, k, approx: Arc::new(approx), settle: Arc::new(settle) }
}

impl LiftedInstance {
    /// Column `i` of the lifted instance: `F_i(x⃗, s) = f_i(x⃗, s)`.
    pub fn lifted(&self, i: u64) -> Coloring {
        let (a, n) = (self.approx.clone(), self.arity);
        Coloring::finite(format!("lift({},{i})", self.label), n + 1, self.k, move |t| a(i, &t[..n], t[n]))
    }

    /// Column `i` of the limit instance, read at the declared bound.
    pub fn limit(&self, i: u64) -> Coloring {
        let (a, st) = (self.approx.clone(), self.settle.clone());
        Coloring::finite(format!("limit({},{i})", self.label), self.arity, self.k, move |xs| a(i, xs, st(i, xs)))
    }

    /// The approximation is constant from the declared bound up to `horizon`, for `i < count`.
    pub fn audit(&self, count: u64, horizon: u64) -> Result<()> {
        let all: Vec<u64> = (0..horizon).collect();
        for i in 0..count {
            for xs in tuples_of(&all, self.arity) {
                let s0 = (self.settle)(i, &xs);
                let v = (self.approx)(i, &xs, s0);
                if let Some(s) = (s0..horizon).find(|&s| (self.approx)(i, &xs, s) != v) {
                    return Err(Error::input(format!(
                        "{}: column {i} at {xs:?} changes at stage {s}, past its declared bound {s0}",
                        self.label
                    )));
                }
            }
        }
        Ok(())
    }

    /// A thin solution of lifted column `i` is thin for the limit column on every tuple
    /// that has a settled stage inside the set. Inconclusive if no tuple does.
    pub fn transfer_check(&self, i: u64, members: &[u64], omitted: u64, horizon: u64) -> Result<Verdict> {
        let sol = ThinSolution::from_members(members, omitted);
        if let Verdict::Fail(d) = verify_thin_at(&self.lifted(i), &sol, horizon, 0)? {
            return Err(Error::input(format!("not thin for the lifted column: {d}")));
        }
        let mut hs: Vec<u64> = members.iter().copied().filter(|&x| x < horizon).collect();
        hs.sort_unstable();
        hs.dedup();
        let g = self.limit(i);
        let mut checked = 0;
        for xs in tuples_of(&hs, self.arity) {
            let floor = (self.settle)(i, &xs).max(xs.last().map_or(0, |&m| m + 1));
            if hs.iter().any(|&s| s >= floor) {
                checked += 1;
                if g.color(&xs) == omitted {
                    return Ok(Verdict::Fail(format!("limit color at {xs:?} is the omitted {omitted}")));
                }
            }
        }
        Ok(if checked == 0 {
            Verdict::Inconclusive(format!("no tuple of {hs:?} has a settled stage in the set"))
        } else {
            Verdict::Pass
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::verify_rainbow_at;

    #[test]
    fn injective_columns_give_initial_segments() {
        let f = Coloring::new("id", 1, Colors::Omega, |xs| xs[0]);
        assert_eq!(seq_rrt1_greedy(&[f], 64, 5)[0].clone().ready(), Some(vec![0, 1, 2, 3, 4]));
    }

    #[test]
    fn halving_gives_evens() {
        let f = Coloring::new("half", 1, Colors::Omega, |xs| xs[0] / 2);
        let out = seq_rrt1_greedy(std::slice::from_ref(&f), 64, 6)[0].clone().ready().unwrap();
        assert_eq!(out, vec![0, 2, 4, 6, 8, 10]);
        assert_eq!(verify_rainbow_at(&f, &out, 64, 6), Verdict::Pass);
    }

    #[test]
    fn exhausted_columns_are_inconclusive() {
        let f = Coloring::constant(1, 2, 1);
        assert!(matches!(seq_rrt1_greedy(&[f], 64, 3)[0], Outcome::Inconclusive(_)));
    }

    #[test]
    fn bounded_samples_respect_their_bound() {
        let f = bounded_sample(9, 3, 64);
        let mut tally = std::collections::HashMap::new();
        for x in 0..200 {
            *tally.entry(f.color(&[x])).or_insert(0) += 1;
        }
        assert!(tally.values().all(|&n| n <= 3));
    }

    #[test]
    fn zero_columns_count_upward() {
        let s = &seq_ts1_omega_solver(&[Coloring::constant(1, 3, 0)], 32, 4)[0];
        assert_eq!(s.members, vec![0, 1, 2, 3]);
        assert!(s.trivial);
        assert_eq!(s.omitted, 1);
    }

    #[test]
    fn identity_skips_zero() {
        let f = Coloring::new("id", 1, Colors::Omega, |xs| xs[0]);
        let s = &seq_ts1_omega_solver(std::slice::from_ref(&f), 32, 4)[0];
        assert_eq!(s.members, vec![1, 2, 3, 4]);
        assert_eq!((s.omitted, s.trivial), (0, false));
        assert_eq!(s.verify(&f, 32).unwrap(), Verdict::Pass);
    }

    #[test]
    fn mixed_support_then_increments() {
        // Nonzero exactly at 3 and 7.
        let f = Coloring::new("mixed", 1, Colors::Omega, |xs| (xs[0] == 3 || xs[0] == 7) as u64 * 5);
        let s = &seq_ts1_omega_solver(std::slice::from_ref(&f), 32, 4)[0];
        assert_eq!(s.members, vec![3, 7, 8, 9]);
        assert!(s.trivial);
        assert_eq!(s.omitted, 1);
        assert_eq!(s.verify(&f, 32).unwrap(), Verdict::Pass);
    }

    fn toy() -> LiftedInstance {
        limit_lift("toy", 1, 3, |i, xs, s| if s >= 8 { (xs[0] + i) % 3 } else { s % 3 }, |_, _| 8)
    }

    #[test]
    fn audit_catches_late_changes() {
        toy().audit(4, 20).unwrap();
        let bad = limit_lift("bad", 1, 2, |_, _, s| (s >= 12) as u64, |_, _| 8);
        assert!(bad.audit(1, 20).is_err());
    }

    #[test]
    fn constant_in_stage_is_an_arity_bump() {
        let l = limit_lift("flat", 1, 3, |_, xs, _| xs[0] % 3, |_, _| 0);
        let (f, g) = (l.lifted(0), l.limit(0));
        for x in 0..10 {
            assert_eq!(f.color(&[x, x + 3]), g.color(&[x]));
        }
    }

    #[test]
    fn thin_lifted_sets_transfer() {
        let l = toy();
        let all: Vec<u64> = (0..20).collect();
        let mut passes = 0;
        for i in 0..3 {
            let f = l.lifted(i);
            for set in tuples_of(&all, 4) {
                for omitted in 0..3 {
                    if tuples_of(&set, 2).iter().all(|t| f.color(t) != omitted) {
                        let v = l.transfer_check(i, &set, omitted, 20).unwrap();
                        assert!(!v.is_fail(), "{set:?} omitting {omitted}: {v}");
                        passes += v.is_pass() as usize;
                    }
                }
            }
        }
        assert!(passes > 0);
    }
}
