use super::coloring::{coloring_extent, totalize_coloring, Coloring, Colors, OMEGA_CAP};
use super::tree::{decode_tree, encode_tree, measure_at_level, tree_extent, Tree};
use super::verify::{
    tolerance_identity_fn, tolerance_rt_fn, tolerance_ts_fn, verify_homogeneous_at, verify_path_at, verify_rainbow_at,
    verify_thin_at, ThinSolution, Verdict,
};
use crate::error::{Error, Result};
use crate::kernel::{cantor_pair, family, tuple_rank, Functional, Halt, Point, Prefix, Tape};
use crate::measure::{show, Exact};
use crate::oracle::{find_avoiding_all, find_homogeneous_all, find_rainbow, Search, SearchBudget};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// `Θ(S, m)`: repairs a solution when the instance is changed below position `m`.
pub type Tolerance = Arc<dyn Fn(u64) -> Functional + Send + Sync>;

/// Default node limit for solver searches.
pub const NODE_LIMIT: u64 = 2_000_000;

/// A problem: instances and solutions are points; verification is at a finite horizon.
pub trait Problem: Send + Sync {
    fn name(&self) -> String;

    /// Every point codes an instance.
    fn is_total(&self) -> bool;

    /// Instance positions read when verifying below `horizon`.
    fn extent(&self, horizon: u64) -> u64;

    /// Solution positions read when verifying below `horizon`.
    fn solution_extent(&self, horizon: u64) -> u64 {
        horizon
    }

    /// Whether `inst` is a usable instance as far as `horizon` can tell.
    fn check_instance(&self, _inst: &Point, _horizon: u64) -> Result<Verdict> {
        Ok(Verdict::Pass)
    }

    /// Judge `sol` against `inst` below `horizon` with minimum sample size `size`.
    fn verify(&self, inst: &Point, sol: &Point, horizon: u64, size: usize) -> Result<Verdict>;

    /// Up to `limit` solutions found by brute force below `horizon`.
    fn solve(&self, inst: &Point, horizon: u64, size: usize, limit: usize) -> Result<Search<Vec<Point>>>;

    /// A random instance for which solutions are likely to exist at desk scale.
    fn sample(&self, rng: &mut ChaCha8Rng) -> Point;

    fn tolerance(&self) -> Option<Tolerance> {
        None
    }

    /// Default minimum sample size.
    fn default_size(&self) -> usize {
        4
    }
}

pub type ProblemSpec = Arc<dyn Problem>;

/// Materialize the first `extent` bits of a tape and pad with zeros.
pub fn materialize(tape: &Tape, extent: u64, fuel_per_bit: u64) -> std::result::Result<Point, String> {
    match tape.materialize(extent, fuel_per_bit) {
        Ok(p) => Ok(Point::padded(p, false)),
        Err((pos, Halt::Fault(e))) => Err(format!("position {pos}: {e}")),
        Err((pos, h)) => Err(format!("position {pos}: diverged ({h:?})")),
    }
}

/// Divergence recorded by a [`lazy_image`].
pub type FaultCell = Arc<std::sync::Mutex<Option<String>>>;

/// A point whose bits are computed from `tape` on demand. A bit that fails to converge
/// reads as 0 and is recorded in the returned cell, which callers must inspect.
pub fn lazy_image(tape: &Tape, fuel_per_bit: u64) -> (Point, FaultCell) {
    let cell: FaultCell = Arc::new(std::sync::Mutex::new(None));
    let (t, c) = (tape.clone(), cell.clone());
    let p = Point::new(format!("lazy({tape:?})"), move |pos| {
        let meter = crate::kernel::Meter::new(fuel_per_bit);
        match t.bit(pos, &meter) {
            Ok(b) => b,
            Err(h) => {
                let mut slot = c.lock().unwrap_or_else(|e| e.into_inner());
                slot.get_or_insert_with(|| format!("position {pos}: {h:?}"));
                false
            }
        }
    });
    (p, cell)
}

/// Which Ramsey-type solution notion applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RamseyMode {
    Homogeneous,
    Thin,
    Rainbow,
}

/// `RT^n_k`, `TS^n_k`, and `RRT^n_k` over totalized colorings.
#[derive(Clone, Debug)]
pub struct Ramsey {
    pub mode: RamseyMode,
    pub n: usize,
    pub colors: Colors,
}

pub fn rt(n: usize, k: u64) -> ProblemSpec {
    Arc::new(Ramsey { mode: RamseyMode::Homogeneous, n, colors: Colors::Finite(k) })
}

pub fn ts(n: usize, colors: Colors) -> ProblemSpec {
    Arc::new(Ramsey { mode: RamseyMode::Thin, n, colors })
}

/// Rainbow Ramsey for `k`-bounded colorings; colors are coded as in the ω layout.
pub fn rrt(n: usize, k: u64) -> ProblemSpec {
    Arc::new(Ramsey { mode: RamseyMode::Rainbow, n, colors: Colors::Finite(k) })
}

impl Ramsey {
    /// Color layout of the instance code.
    pub fn layout(&self) -> Colors {
        match self.mode {
            RamseyMode::Rainbow => Colors::Omega,
            _ => self.colors,
        }
    }

    pub fn decode(&self, inst: &Point) -> Coloring {
        totalize_coloring(inst, self.n, self.layout())
    }
}

/// Sample an `n`-ary coloring that is random on tuples below a cutoff and
/// structured above it, so that large solutions exist below 16.
pub fn sample_coloring(rng: &mut ChaCha8Rng, n: usize, colors: Colors) -> Coloring {
    let k = colors.finite().unwrap_or(5);
    let cut: u64 = rng.gen_range(0..5);
    let table_len = crate::kernel::binomial(cut, n as u64) as usize;
    let table: Vec<u64> = (0..table_len).map(|_| rng.gen_range(0..k)).collect();
    let tail = rng.gen_range(0..k);
    let style = rng.gen_range(0..3);
    let seed = rng.next_u64();
    let fallback = match style {
        // Eventually constant.
        0 => Coloring::new(format!("tail{tail}"), n, colors, move |_| tail),
        // Constant except on tuples whose minimum has a seeded flag.
        1 => Coloring::new(format!("min-flag{seed}"), n, colors, move |xs| {
            if xs[0] < 16 && (seed >> xs[0]) & 1 == 1 && (seed >> 32) & 3 == 0 {
                (tail + 1) % k
            } else {
                tail
            }
        }),
        // Constant except on a seeded set of maxima.
        _ => Coloring::new(format!("max-flag{seed}"), n, colors, move |xs| {
            let top = xs[n - 1];
            if top < 64 && (seed >> top) & 1 == 1 && top % 7 == 0 {
                (tail + 1) % k
            } else {
                tail
            }
        }),
    };
    Coloring::from_table(format!("sample(cut={cut})"), n, colors, table, fallback)
}

/// The point coding `f` under the given layout.
pub fn code_of(f: &Coloring, layout: Colors) -> Point {
    super::coloring::encode_coloring(&f.with_colors(layout))
}

impl Problem for Ramsey {
    fn name(&self) -> String {
        let head = match self.mode {
            RamseyMode::Homogeneous => "RT",
            RamseyMode::Thin => "TS",
            RamseyMode::Rainbow => "RRT",
        };
        format!("{head}^{}_{}", self.n, self.colors)
    }

    fn is_total(&self) -> bool {
        self.mode != RamseyMode::Rainbow
    }

    fn extent(&self, horizon: u64) -> u64 {
        coloring_extent(self.n, self.layout(), horizon)
    }

    fn solution_extent(&self, horizon: u64) -> u64 {
        match self.mode {
            RamseyMode::Thin => 2 * horizon.max(self.colors.finite().unwrap_or(OMEGA_CAP) + 1),
            _ => horizon,
        }
    }

    fn check_instance(&self, inst: &Point, horizon: u64) -> Result<Verdict> {
        if self.mode != RamseyMode::Rainbow {
            return Ok(Verdict::Pass);
        }
        let k = self.colors.finite().expect("bounded");
        let f = self.decode(inst);
        let all: Vec<u64> = (0..horizon).collect();
        let mut counts = std::collections::HashMap::<u64, u64>::new();
        for t in crate::kernel::tuples_of(&all, self.n) {
            let c = counts.entry(f.color(&t)).or_default();
            *c += 1;
            if *c > k {
                return Ok(Verdict::Fail(format!("color {} used more than {k} times below {horizon}", f.color(&t))));
            }
        }
        Ok(Verdict::Pass)
    }

    fn verify(&self, inst: &Point, sol: &Point, horizon: u64, size: usize) -> Result<Verdict> {
        let f = self.decode(inst);
        match self.mode {
            RamseyMode::Homogeneous => Ok(verify_homogeneous_at(&f, &sol.members_below(horizon), horizon, size)),
            RamseyMode::Rainbow => Ok(verify_rainbow_at(&f, &sol.members_below(horizon), horizon, size)),
            RamseyMode::Thin => {
                let cap = self.colors.finite().unwrap_or(OMEGA_CAP);
                verify_thin_at(&f, &ThinSolution::from_point(sol, cap), horizon, size)
            }
        }
    }

    fn solve(&self, inst: &Point, horizon: u64, size: usize, limit: usize) -> Result<Search<Vec<Point>>> {
        let f = self.decode(inst);
        let budget = SearchBudget::new(horizon, size).with_nodes(NODE_LIMIT);
        Ok(match self.mode {
            RamseyMode::Homogeneous => {
                find_homogeneous_all(&f, &budget, limit).map(|v| v.iter().map(|s| Point::from_set(s)).collect())
            }
            RamseyMode::Rainbow => find_rainbow(&f, &budget).map(|s| vec![Point::from_set(&s)]),
            RamseyMode::Thin => {
                let mut out = Vec::new();
                let mut last = Search::Absent;
                for c in crate::oracle::candidate_omissions(&f, horizon) {
                    match find_avoiding_all(&f, c, &budget, limit) {
                        Search::Found { value, .. } => {
                            out.extend(value.iter().map(|s| ThinSolution::from_members(s, c).to_point()))
                        }
                        other => last = other.map(|_| Vec::new()),
                    }
                    if out.len() >= limit {
                        break;
                    }
                }
                if out.is_empty() {
                    last
                } else {
                    Search::Found { value: out, engine: crate::oracle::Engine::Exhaustive }
                }
            }
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        match self.mode {
            RamseyMode::Rainbow => {
                let k = self.colors.finite().expect("bounded");
                let shift: u64 = rng.gen_range(0..3);
                let f = Coloring::new(format!("blocks{k}"), self.n, Colors::Omega, move |xs| {
                    (tuple_rank(xs).expect("increasing") + shift) / k
                });
                code_of(&f, Colors::Omega)
            }
            _ => code_of(&sample_coloring(rng, self.n, self.colors), self.colors),
        }
    }

    fn tolerance(&self) -> Option<Tolerance> {
        let n = self.n;
        match self.mode {
            RamseyMode::Homogeneous => Some(Arc::new(move |m| tolerance_rt_fn(m, n))),
            RamseyMode::Thin => Some(Arc::new(move |m| tolerance_ts_fn(m, n))),
            RamseyMode::Rainbow => None,
        }
    }

    fn default_size(&self) -> usize {
        4 * self.n
    }
}

/// Cohesiveness for a set family coded by columns.
///
/// Solutions quantify over tails, so verification is always inconclusive; reductions
/// into and out of this problem are checked by structural identities instead.
#[derive(Clone, Debug)]
pub struct Coh;

pub fn coh() -> ProblemSpec {
    Arc::new(Coh)
}

impl Problem for Coh {
    fn name(&self) -> String {
        "COH".into()
    }

    fn is_total(&self) -> bool {
        true
    }

    fn extent(&self, horizon: u64) -> u64 {
        cantor_pair(horizon, horizon) + 1
    }

    fn verify(&self, _inst: &Point, _sol: &Point, _horizon: u64, _size: usize) -> Result<Verdict> {
        Ok(Verdict::Inconclusive("cohesiveness is not decidable at a finite horizon".into()))
    }

    fn solve(&self, _inst: &Point, horizon: u64, _size: usize, _limit: usize) -> Result<Search<Vec<Point>>> {
        let all: Vec<u64> = (0..horizon).collect();
        Ok(Search::Found { value: vec![Point::from_set(&all)], engine: crate::oracle::Engine::Greedy })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        Point::random(rng.next_u64())
    }

    fn tolerance(&self) -> Option<Tolerance> {
        Some(Arc::new(tolerance_identity_fn))
    }
}

/// Weak König's lemma (paths through infinite trees), optionally restricted to trees
/// whose level measures stay at least `q`.
#[derive(Clone, Debug)]
pub struct Wkl {
    pub min_measure: Option<Exact>,
}

pub fn wkl() -> ProblemSpec {
    Arc::new(Wkl { min_measure: None })
}

pub fn wwkl(q: Exact) -> ProblemSpec {
    Arc::new(Wkl { min_measure: Some(q) })
}

/// Members of length `depth`, lexicographically least first, found by descent.
pub fn leftmost_members(t: &Tree, depth: usize, limit: usize, node_limit: u64) -> Search<Vec<Prefix>> {
    let mut out = Vec::new();
    let mut stack = vec![Prefix::empty()];
    let mut nodes = 0u64;
    while let Some(s) = stack.pop() {
        nodes += 1;
        if nodes > node_limit {
            return if out.is_empty() { Search::Exhausted { nodes } } else { Search::Found { value: out, engine: crate::oracle::Engine::Exhaustive } };
        }
        if !t.contains(&s) {
            continue;
        }
        if s.len() == depth {
            out.push(s);
            if out.len() >= limit {
                break;
            }
            continue;
        }
        stack.push(s.child(true));
        stack.push(s.child(false));
    }
    if out.is_empty() {
        Search::Absent
    } else {
        Search::Found { value: out, engine: crate::oracle::Engine::Exhaustive }
    }
}

impl Problem for Wkl {
    fn name(&self) -> String {
        match &self.min_measure {
            None => "WKL".into(),
            Some(q) => format!("WWKL({})", show(q)),
        }
    }

    fn is_total(&self) -> bool {
        false
    }

    fn extent(&self, horizon: u64) -> u64 {
        tree_extent(horizon as usize)
    }

    fn check_instance(&self, inst: &Point, horizon: u64) -> Result<Verdict> {
        let t = decode_tree(inst);
        if let Some(q) = &self.min_measure {
            for d in 0..=(horizon as usize).min(12) {
                let m: Exact = measure_at_level(&t, d)?;
                if m < *q {
                    return Ok(Verdict::Fail(format!("level {d} measure {} below {}", show(&m), show(q))));
                }
            }
        }
        Ok(match leftmost_members(&t, horizon as usize, 1, NODE_LIMIT) {
            Search::Found { .. } => Verdict::Pass,
            Search::Absent => Verdict::Fail(format!("tree dies before depth {horizon}")),
            Search::Exhausted { .. } => Verdict::Inconclusive("node limit".into()),
        })
    }

    fn verify(&self, inst: &Point, sol: &Point, horizon: u64, _size: usize) -> Result<Verdict> {
        verify_path_at(&decode_tree(inst), sol, horizon as usize)
    }

    fn solve(&self, inst: &Point, horizon: u64, _size: usize, limit: usize) -> Result<Search<Vec<Point>>> {
        let t = decode_tree(inst);
        Ok(leftmost_members(&t, horizon as usize, limit, NODE_LIMIT)
            .map(|v| v.into_iter().map(|p| Point::padded(p, false)).collect()))
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        let path = Point::random(rng.next_u64());
        let noise = Point::random(rng.next_u64());
        let t = match &self.min_measure {
            None => {
                // Every prefix of `path` survives; other nodes survive with probability 3/4.
                let alive = move |p: &Prefix| {
                    let idx = super::tree::node_index(p);
                    p.bits().iter().enumerate().all(|(i, &b)| path.bit(i as u64) == b)
                        || noise.bit(2 * idx)
                        || noise.bit(2 * idx + 1)
                };
                Tree::new("random-tree", move |s| (1..=s.len()).all(|l| alive(&s.truncate(l))))
            }
            Some(_) => {
                // Remove one random cylinder of length 3: measure 7/8 at every level >= 3.
                let cut = Prefix::from_index(rng.gen_range(0..8), 3);
                Tree::new(format!("minus-{cut}"), move |s| !cut.is_prefix_of(s))
            }
        };
        encode_tree(&t)
    }

    fn default_size(&self) -> usize {
        1
    }
}

/// Every point is an instance and every set is a solution.
#[derive(Clone, Debug)]
pub struct Trivial;

pub fn trivial() -> ProblemSpec {
    Arc::new(Trivial)
}

impl Problem for Trivial {
    fn name(&self) -> String {
        "ANY".into()
    }

    fn is_total(&self) -> bool {
        true
    }

    fn extent(&self, horizon: u64) -> u64 {
        horizon
    }

    fn verify(&self, _inst: &Point, _sol: &Point, _horizon: u64, _size: usize) -> Result<Verdict> {
        Ok(Verdict::Pass)
    }

    fn solve(&self, _inst: &Point, horizon: u64, _size: usize, _limit: usize) -> Result<Search<Vec<Point>>> {
        let all: Vec<u64> = (0..horizon).collect();
        Ok(Search::Found { value: vec![Point::from_set(&all)], engine: crate::oracle::Engine::Greedy })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        Point::random(rng.next_u64())
    }

    fn tolerance(&self) -> Option<Tolerance> {
        Some(Arc::new(tolerance_identity_fn))
    }
}

/// The only solution to `A` is `A` itself; a toy with sharp verification.
#[derive(Clone, Debug)]
pub struct Echo;

pub fn echo() -> ProblemSpec {
    Arc::new(Echo)
}

impl Problem for Echo {
    fn name(&self) -> String {
        "ECHO".into()
    }

    fn is_total(&self) -> bool {
        true
    }

    fn extent(&self, horizon: u64) -> u64 {
        horizon
    }

    fn verify(&self, inst: &Point, sol: &Point, horizon: u64, _size: usize) -> Result<Verdict> {
        Ok(match (0..horizon).find(|&x| inst.bit(x) != sol.bit(x)) {
            None => Verdict::Pass,
            Some(x) => Verdict::Fail(format!("solution differs from the instance at {x}")),
        })
    }

    fn solve(&self, inst: &Point, _horizon: u64, _size: usize, _limit: usize) -> Result<Search<Vec<Point>>> {
        Ok(Search::Found { value: vec![inst.clone()], engine: crate::oracle::Engine::Greedy })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        Point::random(rng.next_u64())
    }
}

/// Look a base problem up by name: `RT^n_k`, `TS^n_k` (k may be `w`/`ω`), `RRT^n_k`,
/// `COH`, `WKL`, `WWKL(q)`, `ANY`, `ECHO`, `STRIV`, `CAC`, `ADS`, `SHER`.
pub fn problem_by_name(name: &str) -> Result<ProblemSpec> {
    let bad = || Error::input(format!("unknown problem {name:?}"));
    match name {
        "COH" => return Ok(coh()),
        "WKL" => return Ok(wkl()),
        "ANY" => return Ok(trivial()),
        "ECHO" => return Ok(echo()),
        "STRIV" => return Ok(super::striv()),
        "CAC" => return Ok(super::cac()),
        "ADS" => return Ok(super::ads()),
        "SHER" => return Ok(super::sher()),
        _ => {}
    }
    if let Some(q) = name.strip_prefix("WWKL(").and_then(|r| r.strip_suffix(')')) {
        return Ok(wwkl(crate::measure::parse_exact(q).ok_or_else(bad)?));
    }
    let (head, rest) = name.split_once('^').ok_or_else(bad)?;
    let (n, k) = rest.split_once('_').ok_or_else(bad)?;
    let n: usize = n.parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    let colors = match k {
        "w" | "ω" | "omega" => Colors::Omega,
        k => Colors::Finite(k.parse().map_err(|_| bad())?),
    };
    match (head, colors) {
        ("RT", Colors::Finite(k)) if k >= 1 => Ok(rt(n, k)),
        ("TS", Colors::Finite(k)) if k >= 2 => Ok(ts(n, colors)),
        ("TS", Colors::Omega) => Ok(ts(n, colors)),
        ("RRT", Colors::Finite(k)) if k >= 1 => Ok(rrt(n, k)),
        _ => Err(bad()),
    }
}

/// A family whose column `i` is sampled from `p` with a seed derived from `seed` and `i`.
pub fn sample_family(p: &ProblemSpec, seed: u64) -> Point {
    let p = p.clone();
    family(format!("{}-family({seed})", p.name()), move |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        p.sample(&mut rng)
    })
}
