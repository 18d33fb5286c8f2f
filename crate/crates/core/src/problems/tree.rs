use crate::error::{Error, Result};
use crate::kernel::{Point, Prefix};
use crate::measure::{Exact, Measure};
use std::fmt;
use std::sync::Arc;

/// Full scans (which detect closure violations) are used up to this depth.
pub const FULL_SCAN_DEPTH: usize = 16;

type Membership = dyn Fn(&Prefix) -> bool + Send + Sync;

/// A binary tree given by a membership rule.
#[derive(Clone)]
pub struct Tree {
    label: Arc<str>,
    rule: Arc<Membership>,
    declared_bound: Option<Exact>,
}

impl Tree {
    pub fn new(label: impl Into<String>, rule: impl Fn(&Prefix) -> bool + Send + Sync + 'static) -> Self {
        Tree { label: Arc::from(label.into()), rule: Arc::new(rule), declared_bound: None }
    }

    pub fn full() -> Self {
        Tree::new("full", |_| true)
    }

    /// Strings whose first bit (if any) is `b`.
    pub fn starts_with(b: bool) -> Self {
        Tree::new(format!("starts-with-{}", b as u8), move |s| s.get(0).is_none_or(|x| x == b))
    }

    /// Strings with no two consecutive 1s.
    pub fn no_consecutive_ones() -> Self {
        Tree::new("no-11", |s| !s.bits().windows(2).any(|w| w[0] && w[1]))
    }

    /// The tree of prefixes of `p` only.
    pub fn single_path(p: Point) -> Self {
        Tree::new(format!("path({})", p.name()), move |s| s.bits().iter().enumerate().all(|(i, &b)| p.bit(i as u64) == b))
    }

    /// Only the root.
    pub fn dead() -> Self {
        Tree::new("dead", |s| s.is_empty())
    }

    pub fn with_bound(mut self, q: Exact) -> Self {
        self.declared_bound = Some(q);
        self
    }

    pub fn declared_bound(&self) -> Option<&Exact> {
        self.declared_bound.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn contains(&self, s: &Prefix) -> bool {
        (self.rule)(s)
    }

    /// Members of length `d` in lexicographic order.
    ///
    /// Up to [`FULL_SCAN_DEPTH`] every string is examined, so a member whose parent is
    /// missing is reported as a contract error; deeper levels are reached by descent.
    pub fn level(&self, d: usize) -> Result<Vec<Prefix>> {
        if !self.contains(&Prefix::empty()) {
            return Err(Error::contract(format!("tree {} lacks the root", self.label)));
        }
        let mut frontier = vec![Prefix::empty()];
        for len in 1..=d {
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for s in &frontier {
                for b in [false, true] {
                    let c = s.child(b);
                    if self.contains(&c) {
                        next.push(c);
                    }
                }
            }
            if len <= FULL_SCAN_DEPTH && len < 63 {
                let total = Prefix::all_of_length(len).filter(|s| self.contains(s)).count();
                if total != next.len() {
                    let orphan = Prefix::all_of_length(len)
                        .find(|s| self.contains(s) && !self.contains(&s.truncate(len - 1)))
                        .expect("count mismatch implies an orphan");
                    return Err(Error::contract(format!(
                        "tree {} is not downward closed: {orphan} is in but its parent is not",
                        self.label
                    )));
                }
            }
            frontier = next;
        }
        Ok(frontier)
    }

    pub fn level_count(&self, d: usize) -> Result<u64> {
        Ok(self.level(d)?.len() as u64)
    }

    /// Some member of length `d` exists.
    pub fn alive_at(&self, d: usize) -> Result<bool> {
        Ok(self.level_count(d)? > 0)
    }
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tree({})", self.label)
    }
}

/// `|T ∩ 2^d| / 2^d`.
pub fn measure_at_level<M: Measure>(t: &Tree, d: usize) -> Result<M> {
    Ok(M::dyadic(t.level_count(d)?, d as u32))
}

/// Position of a nonempty string in the breadth-first numbering used by tree codes.
pub fn node_index(s: &Prefix) -> u64 {
    debug_assert!(!s.is_empty());
    let l = s.len() as u32;
    let v = s.bits().iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
    (1u64 << l) - 2 + v
}

/// Inverse of [`node_index`].
pub fn node_at(pos: u64) -> Prefix {
    let l = 63 - (pos + 2).leading_zeros();
    Prefix::from_index(pos + 2 - (1u64 << l), l as usize)
}

/// Read a point as a tree: a string is in iff every nonempty prefix's node bit is 1.
pub fn decode_tree(a: &Point) -> Tree {
    let a = a.clone();
    Tree::new(format!("tree({})", a.name()), move |s| (1..=s.len()).all(|l| a.bit(node_index(&s.truncate(l)))))
}

/// The code of `t` read by [`decode_tree`].
pub fn encode_tree(t: &Tree) -> Point {
    let t = t.clone();
    Point::new(format!("code({})", t.label()), move |pos| t.contains(&node_at(pos)))
}

/// Positions of a tree code covering all strings of length at most `depth`.
pub fn tree_extent(depth: usize) -> u64 {
    (1u64 << (depth + 1)) - 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::q;

    #[test]
    fn node_numbering_round_trips() {
        assert_eq!(node_index(&Prefix::parse("0").unwrap()), 0);
        assert_eq!(node_index(&Prefix::parse("1").unwrap()), 1);
        assert_eq!(node_index(&Prefix::parse("00").unwrap()), 2);
        for pos in 0..500 {
            assert_eq!(node_index(&node_at(pos)), pos);
        }
        assert_eq!(tree_extent(2), 6);
    }

    #[test]
    fn simple_measures() {
        assert_eq!(measure_at_level::<Exact>(&Tree::full(), 5).unwrap(), q(1, 1));
        assert_eq!(measure_at_level::<Exact>(&Tree::starts_with(true), 3).unwrap(), q(1, 2));
        assert_eq!(measure_at_level::<f64>(&Tree::starts_with(true), 3).unwrap(), 0.5);
        assert_eq!(Tree::no_consecutive_ones().level_count(4).unwrap(), 8);
    }

    #[test]
    fn orphan_detected() {
        let bad = Tree::new("orphan", |s| s.len() != 1);
        assert!(matches!(bad.level(2), Err(Error::Contract(_))));
    }

    #[test]
    fn codes_round_trip() {
        let t = Tree::no_consecutive_ones();
        let back = decode_tree(&encode_tree(&t));
        for d in 0..8 {
            for s in Prefix::all_of_length(d) {
                assert_eq!(back.contains(&s), t.contains(&s), "{s}");
            }
        }
    }
}
