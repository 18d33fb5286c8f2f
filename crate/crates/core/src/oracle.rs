//! Brute-force finite solvers and exact counts used as ground truth.

use crate::error::Result;
use crate::kernel::{tuples_of, Prefix};
use crate::problems::{Coloring, Colors, Tree, Verdict};
use std::collections::HashMap;

/// Limits for a finite search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    /// Candidates are drawn from `[0, horizon)`.
    pub horizon: u64,
    /// Target set size.
    pub size: usize,
    /// Maximum search nodes before giving up.
    pub node_limit: u64,
    /// Recorded in reports; the searches themselves are deterministic.
    pub seed: u64,
}

impl SearchBudget {
    pub fn new(horizon: u64, size: usize) -> Self {
        SearchBudget { horizon, size, node_limit: 2_000_000, seed: 0 }
    }

    pub fn with_nodes(mut self, node_limit: u64) -> Self {
        self.node_limit = node_limit;
        self
    }
}

/// Which engine produced an answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Greedy,
    Exhaustive,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Greedy => "greedy",
            Engine::Exhaustive => "exhaustive",
        }
    }
}

/// Result of a search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Search<T> {
    Found { value: T, engine: Engine },
    /// Certified absent by exhaustive search.
    Absent,
    /// Node limit reached before an answer.
    Exhausted { nodes: u64 },
}

impl<T> Search<T> {
    pub fn found(self) -> Option<T> {
        match self {
            Search::Found { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn engine(&self) -> Option<Engine> {
        match self {
            Search::Found { engine, .. } => Some(*engine),
            _ => None,
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Search<U> {
        match self {
            Search::Found { value, engine } => Search::Found { value: f(value), engine },
            Search::Absent => Search::Absent,
            Search::Exhausted { nodes } => Search::Exhausted { nodes },
        }
    }
}

/// Depth-first search in lexicographic order for increasing sequences from `[0, horizon)`.
///
/// `accept(chosen, x)` decides whether `x` may extend `chosen`; it must only depend on
/// constraints between `x` and elements of `chosen`. Solutions are emitted in
/// lexicographic order until `limit` are found.
struct Dfs<'a, S> {
    horizon: u64,
    size: usize,
    node_limit: u64,
    nodes: u64,
    state: S,
    accept: &'a dyn Fn(&mut S, &[u64], u64) -> bool,
    undo: &'a dyn Fn(&mut S, &[u64]),
}

impl<S> Dfs<'_, S> {
    fn run(&mut self, limit: usize) -> (Vec<Vec<u64>>, bool) {
        let mut out = Vec::new();
        let mut chosen = Vec::new();
        let complete = self.rec(0, &mut chosen, &mut out, limit);
        (out, complete)
    }

    /// Returns false if the node limit stopped the search.
    fn rec(&mut self, start: u64, chosen: &mut Vec<u64>, out: &mut Vec<Vec<u64>>, limit: usize) -> bool {
        if chosen.len() == self.size {
            out.push(chosen.clone());
            return true;
        }
        let need = (self.size - chosen.len()) as u64;
        let mut x = start;
        while x + need <= self.horizon {
            self.nodes += 1;
            if self.nodes > self.node_limit {
                return false;
            }
            if (self.accept)(&mut self.state, chosen, x) {
                chosen.push(x);
                let ok = self.rec(x + 1, chosen, out, limit);
                chosen.pop();
                (self.undo)(&mut self.state, chosen);
                if !ok {
                    return false;
                }
                if out.len() >= limit {
                    return true;
                }
            }
            x += 1;
        }
        true
    }
}

fn finish(found: Vec<Vec<u64>>, complete: bool, nodes: u64, limit: usize) -> Search<Vec<Vec<u64>>> {
    let _ = limit;
    if !found.is_empty() {
        Search::Found { value: found, engine: Engine::Exhaustive }
    } else if complete {
        Search::Absent
    } else {
        Search::Exhausted { nodes }
    }
}

/// Every `(n-1)`-subset of `chosen` joined with `x` on top.
fn tuples_ending_at(chosen: &[u64], x: u64, n: usize) -> Vec<Vec<u64>> {
    tuples_of(chosen, n - 1)
        .into_iter()
        .map(|mut t| {
            t.push(x);
            t
        })
        .collect()
}

/// Up to `limit` homogeneous sets of size `budget.size`, lexicographically least first.
pub fn find_homogeneous_all(f: &Coloring, budget: &SearchBudget, limit: usize) -> Search<Vec<Vec<u64>>> {
    let n = f.arity();
    // State: the common color, fixed once the first tuple appears.
    let accept = |color: &mut Option<u64>, chosen: &[u64], x: u64| -> bool {
        if chosen.len() + 1 < n {
            return true;
        }
        let mut c0 = *color;
        for t in tuples_ending_at(chosen, x, n) {
            let c = f.color(&t);
            match c0 {
                None => c0 = Some(c),
                Some(c0) if c0 != c => return false,
                _ => {}
            }
        }
        *color = c0;
        true
    };
    let undo = |color: &mut Option<u64>, chosen: &[u64]| {
        if chosen.len() < n {
            *color = None;
        }
    };
    let mut dfs = Dfs {
        horizon: budget.horizon,
        size: budget.size,
        node_limit: budget.node_limit,
        nodes: 0,
        state: None,
        accept: &accept,
        undo: &undo,
    };
    let (found, complete) = dfs.run(limit.max(1));
    finish(found, complete, dfs.nodes, limit)
}

/// The lexicographically least homogeneous set of size `budget.size` in `[0, horizon)`.
pub fn find_homogeneous(f: &Coloring, budget: &SearchBudget) -> Search<Vec<u64>> {
    find_homogeneous_all(f, budget, 1).map(|mut v| v.swap_remove(0))
}

/// Up to `limit` sets avoiding color `c`, lexicographically least first.
pub fn find_avoiding_all(f: &Coloring, c: u64, budget: &SearchBudget, limit: usize) -> Search<Vec<Vec<u64>>> {
    let n = f.arity();
    let accept = |_: &mut (), chosen: &[u64], x: u64| -> bool {
        chosen.len() + 1 < n || tuples_ending_at(chosen, x, n).iter().all(|t| f.color(t) != c)
    };
    let undo = |_: &mut (), _: &[u64]| {};
    let mut dfs = Dfs {
        horizon: budget.horizon,
        size: budget.size,
        node_limit: budget.node_limit,
        nodes: 0,
        state: (),
        accept: &accept,
        undo: &undo,
    };
    let (found, complete) = dfs.run(limit.max(1));
    finish(found, complete, dfs.nodes, limit)
}

/// Colors worth trying as the omitted one: all of `k`, or for ω every color seen below
/// the horizon plus the least unseen one.
pub fn candidate_omissions(f: &Coloring, horizon: u64) -> Vec<u64> {
    match f.colors() {
        Colors::Finite(k) => (0..k).collect(),
        Colors::Omega => {
            let all: Vec<u64> = (0..horizon).collect();
            let mut seen: Vec<u64> = tuples_of(&all, f.arity()).iter().map(|t| f.color(t)).collect();
            seen.sort_unstable();
            seen.dedup();
            let fresh = (0..).find(|c| seen.binary_search(c).is_err()).expect("some color is unused");
            let mut v: Vec<u64> = seen.into_iter().filter(|&c| c < fresh).collect();
            v.push(fresh);
            v
        }
    }
}

/// A thin set: least feasible omitted color, then the lexicographically least set.
pub fn find_thin(f: &Coloring, budget: &SearchBudget) -> Search<(Vec<u64>, u64)> {
    let all = find_thin_all(f, budget, 1);
    all.map(|mut v| v.swap_remove(0))
}

/// Up to `limit` thin sets per omitted color, colors in increasing order.
pub fn find_thin_all(f: &Coloring, budget: &SearchBudget, limit: usize) -> Search<Vec<(Vec<u64>, u64)>> {
    let mut out = Vec::new();
    let mut exhausted = None;
    for c in candidate_omissions(f, budget.horizon) {
        match find_avoiding_all(f, c, budget, limit) {
            Search::Found { value, .. } => out.extend(value.into_iter().map(|s| (s, c))),
            Search::Absent => {}
            Search::Exhausted { nodes } => exhausted = Some(nodes),
        }
        if out.len() >= limit {
            break;
        }
    }
    if !out.is_empty() {
        out.truncate(limit.max(1));
        Search::Found { value: out, engine: Engine::Exhaustive }
    } else if let Some(nodes) = exhausted {
        Search::Exhausted { nodes }
    } else {
        Search::Absent
    }
}

/// Greedy first (least eligible element each step); exhaustive if greedy stalls.
pub fn find_rainbow(f: &Coloring, budget: &SearchBudget) -> Search<Vec<u64>> {
    let n = f.arity();
    let mut used: HashMap<u64, ()> = HashMap::new();
    let mut chosen: Vec<u64> = Vec::new();
    for x in 0..budget.horizon {
        if chosen.len() == budget.size {
            break;
        }
        let colors: Vec<u64> = if chosen.len() + 1 >= n {
            tuples_ending_at(&chosen, x, n).iter().map(|t| f.color(t)).collect()
        } else {
            Vec::new()
        };
        let mut fresh = colors.clone();
        fresh.sort_unstable();
        fresh.dedup();
        if fresh.len() == colors.len() && colors.iter().all(|c| !used.contains_key(c)) {
            for c in colors {
                used.insert(c, ());
            }
            chosen.push(x);
        }
    }
    if chosen.len() == budget.size {
        return Search::Found { value: chosen, engine: Engine::Greedy };
    }
    let accept = |used: &mut Vec<Vec<u64>>, chosen: &[u64], x: u64| -> bool {
        let colors: Vec<u64> = if chosen.len() + 1 >= n {
            tuples_ending_at(chosen, x, n).iter().map(|t| f.color(t)).collect()
        } else {
            Vec::new()
        };
        let flat: Vec<u64> = used.iter().flatten().copied().collect();
        let mut fresh = colors.clone();
        fresh.sort_unstable();
        fresh.dedup();
        if fresh.len() != colors.len() || colors.iter().any(|c| flat.contains(c)) {
            return false;
        }
        used.push(colors);
        true
    };
    let undo = |used: &mut Vec<Vec<u64>>, chosen: &[u64]| used.truncate(chosen.len());
    let mut dfs = Dfs {
        horizon: budget.horizon,
        size: budget.size,
        node_limit: budget.node_limit,
        nodes: 0,
        state: Vec::new(),
        accept: &accept,
        undo: &undo,
    };
    let (found, complete) = dfs.run(1);
    finish(found, complete, dfs.nodes, 1).map(|mut v| v.swap_remove(0))
}

/// Members of `T` of length `depth`, lexicographic.
pub fn enumerate_paths(t: &Tree, depth: usize) -> Result<Vec<Prefix>> {
    t.level(depth)
}

/// A set on which `f(x, y)` depends only on `x`, lexicographically least.
pub fn find_min_homogeneous(f: &Coloring, budget: &SearchBudget) -> Search<Vec<u64>> {
    assert_eq!(f.arity(), 2, "min-homogeneity is defined for pairs");
    // Each chosen x must see one color on all pairs (x, y) with y chosen later.
    let accept = |_: &mut (), chosen: &[u64], z: u64| -> bool {
        chosen.iter().enumerate().all(|(i, &x)| match chosen.get(i + 1) {
            Some(&y) => f.color(&[x, y]) == f.color(&[x, z]),
            None => true,
        })
    };
    let undo = |_: &mut (), _: &[u64]| {};
    let mut dfs = Dfs {
        horizon: budget.horizon,
        size: budget.size,
        node_limit: budget.node_limit,
        nodes: 0,
        state: (),
        accept: &accept,
        undo: &undo,
    };
    let (found, complete) = dfs.run(1);
    finish(found, complete, dfs.nodes, 1).map(|mut v| v.swap_remove(0))
}

/// The structural properties of pair colorings checked on finite samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Structure {
    /// `f(x,y) = f(y,z) = i ⇒ f(x,z) = i` for every color.
    Transitive,
    /// As transitive, for all colors but at most one.
    SemiTransitive,
    /// `f(x,z) = f(y,z) = i ⇒ f(x,y) = i` for all colors but at most one.
    SemiHereditary,
    /// For all colors but at most one, `{y > x : f(x,y) = i}` is homogeneous for each `x`.
    SemiTrivial,
}

impl Structure {
    pub fn name(&self) -> &'static str {
        match self {
            Structure::Transitive => "transitive",
            Structure::SemiTransitive => "semi-transitive",
            Structure::SemiHereditary => "semi-hereditary",
            Structure::SemiTrivial => "semi-trivial",
        }
    }
}

/// Outcome of [`structural_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuralReport {
    pub verdict: Verdict,
    /// For semi-properties: the least color that may be exempted (None if none is needed).
    pub exempt: Option<u64>,
}

/// Colors `i` violating the per-color condition on `h`, with a witness each.
fn violations(f: &Coloring, h: &[u64], prop: Structure) -> Vec<(u64, String)> {
    let mut bad: HashMap<u64, String> = HashMap::new();
    let mut hs = h.to_vec();
    hs.sort_unstable();
    hs.dedup();
    match prop {
        Structure::Transitive | Structure::SemiTransitive => {
            for t in tuples_of(&hs, 3) {
                let (x, y, z) = (t[0], t[1], t[2]);
                let i = f.color(&[x, y]);
                if f.color(&[y, z]) == i && f.color(&[x, z]) != i {
                    bad.entry(i).or_insert_with(|| format!("f({x},{y})=f({y},{z})={i} but f({x},{z})≠{i}"));
                }
            }
        }
        Structure::SemiHereditary => {
            for t in tuples_of(&hs, 3) {
                let (x, y, z) = (t[0], t[1], t[2]);
                let i = f.color(&[x, z]);
                if f.color(&[y, z]) == i && f.color(&[x, y]) != i {
                    bad.entry(i).or_insert_with(|| format!("f({x},{z})=f({y},{z})={i} but f({x},{y})≠{i}"));
                }
            }
        }
        Structure::SemiTrivial => {
            for (a, &x) in hs.iter().enumerate() {
                let mut by_color: HashMap<u64, Vec<u64>> = HashMap::new();
                for &y in &hs[a + 1..] {
                    by_color.entry(f.color(&[x, y])).or_default().push(y);
                }
                for (i, ys) in by_color {
                    if bad.contains_key(&i) {
                        continue;
                    }
                    'pairs: for (b, &y) in ys.iter().enumerate() {
                        for &z in &ys[b + 1..] {
                            let c0 = f.color(&[ys[0], ys[1]]);
                            if f.color(&[y, z]) != c0 {
                                bad.insert(i, format!("{{y>{x} : f({x},y)={i}}} is not homogeneous at ({y},{z})"));
                                break 'pairs;
                            }
                        }
                    }
                }
            }
        }
    }
    let mut v: Vec<(u64, String)> = bad.into_iter().collect();
    v.sort();
    v
}

/// Exhaustive triple scan of `f` restricted to `h`.
pub fn structural_check(f: &Coloring, h: &[u64], prop: Structure) -> StructuralReport {
    let bad = violations(f, h, prop);
    let semi = !matches!(prop, Structure::Transitive);
    match (bad.len(), semi) {
        (0, _) => StructuralReport { verdict: Verdict::Pass, exempt: None },
        (1, true) => StructuralReport { verdict: Verdict::Pass, exempt: Some(bad[0].0) },
        _ => StructuralReport {
            verdict: Verdict::Fail(format!(
                "not {}: {}",
                prop.name(),
                bad.iter().map(|(_, w)| w.as_str()).collect::<Vec<_>>().join("; ")
            )),
            exempt: None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parity_sum() -> Coloring {
        Coloring::finite("parity-sum", 2, 2, |xs| (xs[0] + xs[1]) % 2)
    }

    #[test]
    fn homogeneous_examples() {
        let c = Coloring::constant(2, 2, 0);
        assert_eq!(find_homogeneous(&c, &SearchBudget::new(8, 4)).found(), Some(vec![0, 1, 2, 3]));
        assert_eq!(find_homogeneous(&parity_sum(), &SearchBudget::new(8, 4)).found(), Some(vec![0, 2, 4, 6]));
        assert_eq!(find_homogeneous(&parity_sum(), &SearchBudget::new(8, 9)), Search::Absent);
    }

    #[test]
    fn thin_examples() {
        let m3 = Coloring::finite("mod3", 1, 3, |xs| xs[0] % 3);
        // Least omitted color first: 0 is feasible with {1,2,4,5,7,8}.
        assert_eq!(find_thin(&m3, &SearchBudget::new(9, 6)).found(), Some((vec![1, 2, 4, 5, 7, 8], 0)));
        let only2 = find_avoiding_all(&m3, 2, &SearchBudget::new(9, 6), 1).found().unwrap();
        assert_eq!(only2[0], vec![0, 1, 3, 4, 6, 7]);
        assert!(matches!(find_thin(&m3, &SearchBudget::new(9, 6).with_nodes(2)), Search::Exhausted { .. }));
    }

    #[test]
    fn two_color_thin_is_homogeneous() {
        let f = parity_sum();
        let b = SearchBudget::new(10, 4);
        let (set, c) = find_thin(&f, &b).found().unwrap();
        assert!(crate::problems::verify_homogeneous_at(&f, &set, 10, 4).is_pass());
        assert!(c < 2);
    }

    #[test]
    fn rainbow_examples() {
        let inj = Coloring::new("rank", 2, Colors::Omega, |xs| crate::kernel::tuple_rank(xs).unwrap());
        let r = find_rainbow(&inj, &SearchBudget::new(10, 5));
        assert_eq!(r.engine(), Some(Engine::Greedy));
        assert_eq!(r.found(), Some(vec![0, 1, 2, 3, 4]));
        let c = Coloring::constant(2, 1, 0);
        assert_eq!(find_rainbow(&c, &SearchBudget::new(8, 3)), Search::Absent);
    }

    #[test]
    fn path_counts() {
        assert_eq!(enumerate_paths(&Tree::full(), 3).unwrap().len(), 8);
        assert_eq!(enumerate_paths(&Tree::no_consecutive_ones(), 4).unwrap().len(), 8);
        assert!(enumerate_paths(&Tree::dead(), 3).unwrap().is_empty());
    }

    #[test]
    fn min_homogeneous_examples() {
        let by_min = Coloring::finite("by-min", 2, 3, |xs| xs[0] % 3);
        assert_eq!(find_min_homogeneous(&by_min, &SearchBudget::new(10, 5)).found(), Some(vec![0, 1, 2, 3, 4]));
        let f = parity_sum();
        let set = find_min_homogeneous(&f, &SearchBudget::new(8, 4)).found().unwrap();
        for (a, &x) in set.iter().enumerate() {
            let cs: Vec<u64> = set[a + 1..].iter().map(|&y| f.color(&[x, y])).collect();
            assert!(cs.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn structural_examples() {
        let c = Coloring::constant(2, 2, 1);
        let h: Vec<u64> = (0..8).collect();
        for p in [Structure::Transitive, Structure::SemiTransitive, Structure::SemiHereditary, Structure::SemiTrivial] {
            assert!(structural_check(&c, &h, p).verdict.is_pass(), "{p:?}");
        }
        // A linear order given by a permutation is transitive in both colors.
        let perm = [3u64, 0, 6, 1, 7, 2, 5, 4];
        let lin = Coloring::finite("perm-order", 2, 2, move |xs| (perm[xs[0] as usize] < perm[xs[1] as usize]) as u64);
        assert!(structural_check(&lin, &h, Structure::Transitive).verdict.is_pass());
        // Break one triple.
        let broken = Coloring::finite("broken", 2, 2, |xs| (xs == [0, 2]) as u64);
        let r = structural_check(&broken, &[0, 1, 2], Structure::Transitive);
        assert!(r.verdict.is_fail());
    }
}
