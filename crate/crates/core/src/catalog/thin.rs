//! Thin-set constructions: a coloring built from a given one, plus the extraction that turns a
//! thin set for the built coloring back into a solution for the original.
//!
//! All extractions work on finite sets below a horizon. "Infinitely many" is read as "at least
//! `threshold` witnesses", and the threshold used is reported with every result.

use crate::error::{Error, Result};
use crate::kernel::tuples_of;
use crate::oracle::{find_avoiding_all, find_homogeneous, find_min_homogeneous, structural_check, Search, SearchBudget, Structure};
use crate::problems::{show_set, verify_homogeneous_at, Coloring, Colors, ThinSolution};
use std::collections::BTreeMap;

/// Witnesses required before a bounded search accepts "infinitely many".
pub const WITNESS_THRESHOLD: usize = 3;

/// A finite-horizon answer, or the reason none could be given honestly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome<T> {
    Ready(T),
    Inconclusive(String),
}

impl<T> Outcome<T> {
    pub fn ready(self) -> Option<T> {
        match self {
            Outcome::Ready(v) => Some(v),
            Outcome::Inconclusive(_) => None,
        }
    }
}

/// `f` read through the elements of `h`: index tuples take the color of the element tuples.
/// Indices past the end of `h` get color 0; searches on the result stay below `h.len()`.
pub fn restrict(f: &Coloring, h: &[u64]) -> Coloring {
    let h = h.to_vec();
    let base = f.clone();
    Coloring::new(format!("{}|H", f.label()), f.arity(), f.colors(), move |xs| {
        let ys: Option<Vec<u64>> = xs.iter().map(|&i| h.get(i as usize).copied()).collect();
        ys.map_or(0, |ys| base.color(&ys))
    })
}

fn lift(h: &[u64], idx: &[u64]) -> Vec<u64> {
    idx.iter().map(|&i| h[i as usize]).collect()
}

fn sorted(h: &[u64]) -> Vec<u64> {
    let mut v = h.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// Contract error naming a tuple of `h` with color `c`, if there is one.
fn ensure_avoids(g: &Coloring, h: &[u64], c: u64) -> Result<()> {
    match tuples_of(h, g.arity()).into_iter().find(|t| g.color(t) == c) {
        Some(t) => Err(Error::contract(format!("the set does not avoid color {c} of {}: {t:?}", g.label()))),
        None => Ok(()),
    }
}

fn finite_colors(f: &Coloring) -> Result<u64> {
    f.colors().finite().ok_or_else(|| Error::input(format!("{} must have finitely many colors", f.label())))
}

// ---------------------------------------------------------------------------------------------
// Raising the exponent: TS^{m+1}_k from TS^{mn+1}_{k^n}.

/// `g(x, y₀, …, y_{n−1}) = Σ f(x, yᵢ)·kⁱ` where each `yᵢ` is an `m`-block and the blocks increase.
pub fn ts_step(m: usize, n: usize, f: &Coloring) -> Result<Coloring> {
    if m == 0 || n == 0 {
        return Err(Error::input("block size and block count must be positive"));
    }
    if f.arity() != m + 1 {
        return Err(Error::input(format!("expected a coloring of {}-tuples, got {}", m + 1, f.arity())));
    }
    let k = finite_colors(f)?;
    let colors = k.checked_pow(n as u32).ok_or_else(|| Error::input("k^n overflows"))?;
    if n == 1 {
        return Ok(f.clone());
    }
    let base = f.clone();
    Ok(Coloring::finite(format!("step[{m},{n}]({})", f.label()), m * n + 1, colors, move |xs| {
        let mut c = 0;
        let mut place = 1;
        let mut probe = Vec::with_capacity(m + 1);
        for block in xs[1..].chunks(m) {
            probe.clear();
            probe.push(xs[0]);
            probe.extend_from_slice(block);
            c += base.color(&probe) * place;
            place *= k;
        }
        c
    }))
}

/// What [`ts_step_extract`] found.
#[derive(Clone, Debug)]
pub struct StepExtraction {
    /// Number of leading digits of the avoided color realized by at least `threshold` points.
    pub agreeing: usize,
    /// Elements dropped from the front so that no longer agreement survives.
    pub trimmed: usize,
    pub solution: ThinSolution,
    pub members: Vec<u64>,
}

/// End of the greedy agreement chain `x < y₀ < … < y_{len−1}` with `f(x, yⱼ) = digits[j]`,
/// each block chosen with the least possible maximum. `Some(x)` for `len = 0`.
fn agreement_chain(f: &Coloring, m: usize, x: u64, digits: &[u64], within: &[u64]) -> Option<u64> {
    let mut end = x;
    let mut probe = Vec::with_capacity(m + 1);
    for &want in digits {
        let above: Vec<u64> = within.iter().copied().filter(|&y| y > end).collect();
        end = (0..above.len()).find_map(|last| {
            tuples_of(&above[..last], m - 1).into_iter().find_map(|mut block| {
                block.push(above[last]);
                probe.clear();
                probe.push(x);
                probe.extend_from_slice(&block);
                (f.color(&probe) == want).then_some(above[last])
            })
        })?;
    }
    Some(end)
}

/// Turn a set avoiding color `a` of `ts_step(m, n, f)` into a set avoiding one color of `f`.
///
/// Picks the longest agreement with the digits of `a` shared by `threshold` points, trims the
/// front until no longer agreement remains, then walks the rest choosing each point past the
/// chain of the previous one. The result omits the next digit of `a`.
pub fn ts_step_extract(f: &Coloring, m: usize, n: usize, h: &[u64], a: u64, threshold: usize) -> Result<Outcome<StepExtraction>> {
    let g = ts_step(m, n, f)?;
    let k = finite_colors(f)?;
    if !g.colors().admits(a) {
        return Err(Error::input(format!("color {a} is not below {}", g.colors())));
    }
    let h = sorted(h);
    ensure_avoids(&g, &h, a)?;
    if n == 1 {
        let solution = ThinSolution::from_members(&h, a);
        return Ok(Outcome::Ready(StepExtraction { agreeing: 0, trimmed: 0, solution, members: h }));
    }
    let digits: Vec<u64> = (0..n).map(|j| (a / k.pow(j as u32)) % k).collect();
    let count = |len: usize| h.iter().filter(|&&x| agreement_chain(f, m, x, &digits[..len], &h).is_some()).count();
    let agreeing = (1..n).rev().find(|&len| count(len) >= threshold).unwrap_or(0);
    if agreeing == 0 && h.len() < threshold {
        return Ok(Outcome::Inconclusive(format!("only {} points, need {threshold}", h.len())));
    }
    // Drop a prefix until no point starts a chain one digit longer.
    let mut tail = h.clone();
    while let Some(end) = tail.iter().find_map(|&x| agreement_chain(f, m, x, &digits[..=agreeing], &tail)) {
        tail.retain(|&y| y > end);
    }
    let mut members = Vec::new();
    let mut floor: Option<u64> = None;
    for &x in &tail {
        if floor.is_some_and(|e| x <= e) {
            continue;
        }
        if let Some(end) = agreement_chain(f, m, x, &digits[..agreeing], &tail) {
            members.push(x);
            floor = Some(end);
        }
    }
    if members.is_empty() {
        return Ok(Outcome::Inconclusive(format!(
            "no point of the tail {} carries a {agreeing}-digit agreement",
            show_set(&tail)
        )));
    }
    let solution = ThinSolution::from_members(&members, digits[agreeing]);
    Ok(Outcome::Ready(StepExtraction { agreeing, trimmed: h.len() - tail.len(), solution, members }))
}

// ---------------------------------------------------------------------------------------------
// Range of an injection from a thin set for TS^{n+2}_{2^n}.

/// Whether some `z` strictly between `lo` and `hi` has `f(z) < bound`.
fn dips_below(f: &dyn Fn(u64) -> u64, lo: u64, hi: u64, bound: u64) -> bool {
    (lo + 1..hi).any(|z| f(z) < bound)
}

/// `g = Σ gᵢ·2ⁱ` with `gᵢ(x₀,…,x_{n+1}) = 1` iff some `z` in `(xᵢ, x_{i+1})` has `f(z) < x₀`.
pub fn ts_aca_coloring(n: usize, f: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Result<Coloring> {
    if n == 0 || n >= 32 {
        return Err(Error::input("n must be between 1 and 31"));
    }
    Ok(Coloring::finite(format!("aca[{n}]"), n + 2, 1 << n, move |xs| {
        (0..n).map(|i| (dips_below(&f, xs[i], xs[i + 1], xs[0]) as u64) << i).sum()
    }))
}

/// Least tuples `x₀ < … < x_mlen` of `h` (with `x₀ > floor`) whose first `mlen` bits agree with
/// `b`, keeping enough room above for a full `(n+2)`-tuple. Calls `visit` on each; stops when it
/// returns true.
fn agreeing_prefixes(
    f: &dyn Fn(u64) -> u64,
    n: usize,
    h: &[u64],
    b: u64,
    mlen: usize,
    floor: Option<u64>,
    visit: &mut dyn FnMut(&[u64]) -> bool,
) -> bool {
    fn rec(
        f: &dyn Fn(u64) -> u64,
        n: usize,
        h: &[u64],
        b: u64,
        mlen: usize,
        start: usize,
        chosen: &mut Vec<u64>,
        visit: &mut dyn FnMut(&[u64]) -> bool,
    ) -> bool {
        if chosen.len() == mlen + 1 {
            // The remaining n+1-mlen coordinates only need room.
            let room = h.len() - start;
            return room >= n + 1 - mlen && visit(chosen);
        }
        for idx in start..h.len() {
            let x = h[idx];
            if let Some(&prev) = chosen.last() {
                let i = chosen.len() - 1;
                if dips_below(f, prev, x, chosen[0]) as u64 != (b >> i) & 1 {
                    continue;
                }
            }
            chosen.push(x);
            let stop = rec(f, n, h, b, mlen, idx + 1, chosen, visit);
            chosen.pop();
            if stop {
                return true;
            }
        }
        false
    }
    let start = floor.map_or(0, |fl| h.partition_point(|&x| x <= fl));
    rec(f, n, h, b, mlen, start, &mut Vec::new(), visit)
}

/// The largest `m < n` whose first `m` bits of `b` are realized from at least `threshold`
/// distinct starting points of `h`. Errors if `h` realizes `b` itself.
pub fn ts_aca_largest_index(f: &(dyn Fn(u64) -> u64 + Sync), n: usize, h: &[u64], b: u64, threshold: usize) -> Result<usize> {
    let g_n = n;
    let h = sorted(h);
    let starts = |mlen: usize| {
        let mut firsts: Vec<u64> = Vec::new();
        agreeing_prefixes(f, g_n, &h, b, mlen, None, &mut |t| {
            if firsts.last() != Some(&t[0]) {
                firsts.push(t[0]);
            }
            false
        });
        firsts.len()
    };
    if starts(n) > 0 {
        return Err(Error::contract(format!("the set realizes the avoided color {b}")));
    }
    Ok((0..n).rev().find(|&mlen| starts(mlen) >= threshold).unwrap_or(0))
}

/// Decide whether `y` is in the range of `f` from a set `h` avoiding `b`, given the index `m`.
///
/// Takes the least agreeing prefix `x₀ < … < x_m` of `h` above `y` and answers
/// `y ∈ {f(0), …, f(x_m)}`. The answer relies on `f(z) ≥ x₀` for every `z > x_m`; a `z` below
/// `horizon` breaking that makes the query inconclusive instead of guessing.
pub fn ts_aca_range_query(
    f: &(dyn Fn(u64) -> u64 + Sync),
    n: usize,
    h: &[u64],
    b: u64,
    m: usize,
    y: u64,
    horizon: u64,
) -> Result<Outcome<bool>> {
    if m >= n {
        return Err(Error::input(format!("index {m} must be below {n}")));
    }
    let h = sorted(h);
    let mut prefix: Option<Vec<u64>> = None;
    agreeing_prefixes(f, n, &h, b, m, Some(y), &mut |t| {
        prefix = Some(t.to_vec());
        true
    });
    let Some(prefix) = prefix else {
        return Ok(Outcome::Inconclusive(format!("no agreeing {}-prefix of {} above {y}", m + 1, show_set(&h))));
    };
    let (x0, xm) = (prefix[0], prefix[m]);
    if let Some(z) = (xm + 1..horizon).find(|&z| f(z) < x0) {
        return Ok(Outcome::Inconclusive(format!("f({z}) = {} < {x0} past {xm}: index {m} is too small", f(z))));
    }
    Ok(Outcome::Ready((0..=xm).any(|z| f(z) == y)))
}

// ---------------------------------------------------------------------------------------------
// Pigeonhole from TS²₃.

/// `g(x, y)` is 0 if `f(x) = f(y)`, 1 if `f(x) > f(y)`, 2 if `f(x) < f(y)`.
pub fn ts_pigeonhole(f: &Coloring) -> Result<Coloring> {
    if f.arity() != 1 {
        return Err(Error::input("pigeonhole needs a coloring of single points"));
    }
    let base = f.clone();
    Ok(Coloring::finite(format!("cmp({})", f.label()), 2, 3, move |xs| {
        let (a, b) = (base.color(&xs[..1]), base.color(&xs[1..]));
        match a.cmp(&b) {
            std::cmp::Ordering::Equal => 0,
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => 2,
        }
    }))
}

/// From `h` avoiding color `c ∈ {1, 2}` of [`ts_pigeonhole`], the fiber of `f` at the value it
/// settles on, below `horizon`.
pub fn ts_pigeonhole_extract(f: &Coloring, h: &[u64], c: u64, horizon: u64) -> Result<Vec<u64>> {
    if c == 0 {
        return Err(Error::input("no infinite set avoids color 0: f would be injective on it, but f has finitely many colors"));
    }
    if c > 2 {
        return Err(Error::input(format!("color {c} is not below 3")));
    }
    let h: Vec<u64> = sorted(h).into_iter().filter(|&x| x < horizon).collect();
    ensure_avoids(&ts_pigeonhole(f)?, &h, c)?;
    // f is monotone on h, so its last value is the one it stabilizes on.
    let last = h.last().ok_or_else(|| Error::contract("the set has no elements below the horizon"))?;
    let settled = f.color(&[*last]);
    Ok((0..horizon).filter(|&x| f.color(&[x]) == settled).collect())
}

// ---------------------------------------------------------------------------------------------
// RT²_k from TS³₃ in stages.

/// `|{f(x,y), f(x,z), f(y,z)}| − 1`.
pub fn ts33_count_coloring(f: &Coloring) -> Coloring {
    let base = f.clone();
    Coloring::finite(format!("distinct({})", f.label()), 3, 3, move |xs| {
        let (a, b, c) = (base.color(&[xs[0], xs[1]]), base.color(&[xs[0], xs[2]]), base.color(&[xs[1], xs[2]]));
        let mut v = [a, b, c];
        v.sort_unstable();
        (v[0] != v[1]) as u64 + (v[1] != v[2]) as u64
    })
}

/// Which pair agrees on a triple with exactly two colors: 0 all equal, 1 `f(y,z)` is the odd one,
/// 2 `f(x,z)` is, 3 `f(x,y)` is. Triples with three colors also get 0; the pipeline only applies
/// this where they do not occur.
pub fn ts33_shape_coloring(f: &Coloring) -> Coloring {
    let base = f.clone();
    Coloring::finite(format!("shape({})", f.label()), 3, 4, move |xs| {
        let (xy, xz, yz) = (base.color(&[xs[0], xs[1]]), base.color(&[xs[0], xs[2]]), base.color(&[xs[1], xs[2]]));
        if xy == xz && xz == yz {
            0
        } else if xy == xz {
            1
        } else if xy == yz {
            2
        } else if xz == yz {
            3
        } else {
            0
        }
    })
}

/// One step of a pipeline run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    pub name: String,
    pub set: Vec<u64>,
}

/// A completed pipeline run: the stages taken and the final homogeneous set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineRun {
    pub stages: Vec<Stage>,
    pub homogeneous: Vec<u64>,
    pub color: u64,
}

/// Oracle answers tried at each stage: a few sets avoiding `c` for every size from `size` down.
const ANSWERS_PER_SIZE: usize = 256;

fn avoiding_candidates(g: &Coloring, c: u64, horizon: u64, size: usize) -> Vec<Vec<u64>> {
    (1..=size)
        .rev()
        .flat_map(|s| find_avoiding_all(g, c, &SearchBudget::new(horizon, s), ANSWERS_PER_SIZE).found().unwrap_or_default())
        .collect()
}

/// Split `{y ∈ set : y > x}` by `f(x, y)` for the least `x` and keep the largest part, with
/// `x` in front. Where no triple has exactly two colors, `f(x,y) = f(x,z) = i` forces
/// `f(y,z) = i`, so the part together with `x` is homogeneous of color `i`.
fn largest_fiber(f: &Coloring, set: &[u64]) -> Vec<u64> {
    let Some((&x, rest)) = set.split_first() else {
        return Vec::new();
    };
    let mut fibers: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for &y in rest {
        fibers.entry(f.color(&[x, y])).or_default().push(y);
    }
    // Ties go to the least color.
    let best = fibers.into_values().fold(Vec::new(), |best, v| if v.len() > best.len() { v } else { best });
    std::iter::once(x).chain(best).collect()
}

/// On a min-homogeneous set, `f̄(x) = f(x, y)` for any later `y`; the last point has no later
/// `y` and is dropped. Keeps the largest class of `f̄`.
fn largest_bucket(f: &Coloring, set: &[u64]) -> Vec<u64> {
    let mut buckets: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for w in set.windows(2) {
        buckets.entry(f.color(&[w[0], w[1]])).or_default().push(w[0]);
    }
    buckets.into_values().fold(Vec::new(), |best, v| if v.len() > best.len() { v } else { best })
}

fn stage(name: &str, set: &[u64]) -> Stage {
    Stage { name: name.into(), set: set.to_vec() }
}

/// The second half of the color-2 branch, on a set `h` without three-color triples.
fn shape_branch(f: &Coloring, h: &[u64], size: usize) -> Vec<Vec<Stage>> {
    let mut runs = Vec::new();
    let shape = restrict(&ts33_shape_coloring(f), h);
    let n = h.len() as u64;
    for g1 in avoiding_candidates(&shape, 1, n, size) {
        let g1 = lift(h, &g1);
        let out = largest_fiber(f, &g1);
        runs.push(vec![stage("avoid shape 1", &g1), stage("fiber of the least point", &out)]);
    }
    let fh = restrict(f, h);
    for s in (2..=size.min(h.len())).rev() {
        if let Some(gm) = find_min_homogeneous(&fh, &SearchBudget::new(n, s)).found() {
            let gm = lift(h, &gm);
            let out = largest_bucket(f, &gm);
            runs.push(vec![stage("avoid shapes 2 and 3 (min-homogeneous)", &gm), stage("bucket by the color to later points", &out)]);
        }
    }
    runs
}

/// Find a homogeneous set for the pair coloring `f` below `horizon` by the staged case analysis:
/// a set avoiding one count color, then (if needed) a subset avoiding shape colors, then a split
/// by colors. Every stage tries several oracle answers of each size up to `size`; the run with
/// the largest final set is kept.
pub fn ts33_pipeline(f: &Coloring, horizon: u64, size: usize) -> Result<PipelineRun> {
    if f.arity() != 2 {
        return Err(Error::input("the pipeline takes a pair coloring"));
    }
    let g = ts33_count_coloring(f);
    let mut runs: Vec<Vec<Stage>> = Vec::new();
    // A set avoiding count color 0 has no monochromatic triangle; only 1 and 2 are asked for.
    for h in avoiding_candidates(&g, 1, horizon, size) {
        let out = largest_fiber(f, &h);
        runs.push(vec![stage("avoid two-color triples", &h), stage("fiber of the least point", &out)]);
    }
    for h in avoiding_candidates(&g, 2, horizon, size) {
        for tail in shape_branch(f, &h, size) {
            let mut run = vec![stage("avoid three-color triples", &h)];
            run.extend(tail);
            runs.push(run);
        }
    }
    // Largest output first; ties keep the earliest run.
    let best = runs
        .into_iter()
        .rev()
        .max_by_key(|r| r.last().map_or(0, |s| s.set.len()))
        .ok_or_else(|| Error::contract("no set avoids count color 1 or 2"))?;
    let out = best.last().map(|s| s.set.clone()).unwrap_or_default();
    let v = verify_homogeneous_at(f, &out, horizon, out.len().min(2));
    if v.is_fail() {
        return Err(Error::contract(format!("pipeline output {} is not homogeneous: {v}", show_set(&out))));
    }
    let color = if out.len() >= 2 { f.color(&[out[0], out[1]]) } else { 0 };
    Ok(PipelineRun { stages: best, homogeneous: out, color })
}

// ---------------------------------------------------------------------------------------------
// RT²₂ from TS³ with 8, 7 or 6 colors and a structured follow-up.

/// How triple colors of [`ts3_cube_coloring`] are merged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Merge {
    /// All eight colors.
    None,
    /// `⟨0,1,0⟩` and `⟨1,0,1⟩` share one color (seven).
    TransitivePair,
    /// `⟨0,1,0⟩` with `⟨1,1,0⟩`, and `⟨1,0,1⟩` with `⟨0,0,1⟩` (six).
    HereditaryPairs,
}

impl Merge {
    /// Merged color of each raw color `4·f(y,z) + 2·f(x,z) + f(x,y)`.
    pub fn table(self) -> [u64; 8] {
        match self {
            Merge::None => [0, 1, 2, 3, 4, 5, 6, 7],
            // 2 and 5 merge.
            Merge::TransitivePair => [0, 1, 2, 3, 4, 2, 5, 6],
            // {2, 6} and {1, 5} merge.
            Merge::HereditaryPairs => [0, 1, 2, 3, 4, 1, 2, 5],
        }
    }

    pub fn colors(self) -> u64 {
        *self.table().iter().max().expect("nonempty") + 1
    }

    /// Raw colors sharing merged color `c`.
    pub fn class(self, c: u64) -> Vec<u64> {
        (0..8).filter(|&r| self.table()[r as usize] == c).collect()
    }
}

/// Raw color of a triple: `4·f(y,z) + 2·f(x,z) + f(x,y)`.
pub fn cube_color(f: &Coloring, xs: &[u64]) -> u64 {
    4 * f.color(&[xs[1], xs[2]]) + 2 * f.color(&[xs[0], xs[2]]) + f.color(&[xs[0], xs[1]])
}

pub fn ts3_cube_coloring(f: &Coloring, merge: Merge) -> Result<Coloring> {
    if f.arity() != 2 || f.colors() != Colors::Finite(2) {
        return Err(Error::input("the cube coloring takes a two-coloring of pairs"));
    }
    let base = f.clone();
    let table = merge.table();
    Ok(Coloring::finite(format!("cube{}({})", merge.colors(), f.label()), 3, merge.colors(), move |xs| {
        table[cube_color(&base, xs) as usize]
    }))
}

/// Which restricted problem a raw avoided color leads to.
pub fn dispatch_structure(raw: u64) -> Structure {
    match raw {
        0 | 4 | 7 | 3 => Structure::SemiTrivial,
        2 | 5 => Structure::SemiTransitive,
        _ => Structure::SemiHereditary,
    }
}

fn problem_name(s: Structure) -> &'static str {
    match s {
        Structure::SemiTrivial => "STRIV",
        Structure::SemiTransitive => "CAC",
        Structure::Transitive => "ADS",
        Structure::SemiHereditary => "SHER",
    }
}

/// Result of routing a thin set for the cube coloring to a restricted problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dispatched {
    pub structure: Structure,
    pub problem: &'static str,
    pub homogeneous: Search<Vec<u64>>,
}

/// Route `h` (avoiding merged color `avoided`) to the restricted problem its class guarantees,
/// check that `f` has that structure on `h`, and solve there.
pub fn ts3_dispatch(f: &Coloring, merge: Merge, h: &[u64], avoided: u64, size: usize) -> Result<Dispatched> {
    let g = ts3_cube_coloring(f, merge)?;
    if avoided >= merge.colors() {
        return Err(Error::input(format!("color {avoided} is not below {}", merge.colors())));
    }
    let h = sorted(h);
    ensure_avoids(&g, &h, avoided)?;
    let class = merge.class(avoided);
    let structure = match (merge, class.as_slice()) {
        (Merge::TransitivePair, [2, 5]) => Structure::Transitive,
        (Merge::HereditaryPairs, [2, 6]) => Structure::SemiHereditary,
        (Merge::HereditaryPairs, [1, 5]) => Structure::SemiHereditary,
        (_, [raw]) => dispatch_structure(*raw),
        _ => unreachable!("merge classes have one or two members"),
    };
    let report = structural_check(f, &h, structure);
    if !report.verdict.is_pass() {
        return Err(Error::contract(format!("avoiding {avoided} should make f {} on the set: {}", structure.name(), report.verdict)));
    }
    let fh = restrict(f, &h);
    let found = find_homogeneous(&fh, &SearchBudget::new(h.len() as u64, size)).map(|s| lift(&h, &s));
    Ok(Dispatched { structure, problem: problem_name(structure), homogeneous: found })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::find_avoiding_all;
    use crate::problems::verify_thin_at;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn parity_sum() -> Coloring {
        Coloring::finite("parity-sum", 2, 2, |xs| (xs[0] + xs[1]) % 2)
    }

    fn random_pairs(seed: u64, k: u64, n: u64) -> Coloring {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table: Vec<u64> = (0..crate::kernel::codec::tuples_below(n, 2)).map(|_| rng.gen_range(0..k)).collect();
        Coloring::from_table(format!("random{seed}"), 2, Colors::Finite(k), table, Coloring::constant(2, k, 0))
    }

    #[test]
    fn step_with_one_block_is_the_identity() {
        let f = parity_sum();
        let g = ts_step(1, 1, &f).unwrap();
        assert_eq!(g.color(&[2, 5]), f.color(&[2, 5]));
        let h = [0, 2, 4, 6];
        let out = ts_step_extract(&f, 1, 1, &h, 1, 3).unwrap().ready().unwrap();
        assert_eq!(out.members, h);
        assert_eq!(out.solution.omitted, 1);
    }

    #[test]
    fn step_extraction_is_thin_on_every_avoiding_set() {
        let f = parity_sum();
        let g = ts_step(1, 2, &f).unwrap();
        assert_eq!(g.colors(), Colors::Finite(4));
        // g(x,y,z) = f(x,y) + 2 f(x,z).
        assert_eq!(g.color(&[0, 1, 2]), 1);
        let mut checked = 0;
        for a in 0..4 {
            let sets = find_avoiding_all(&g, a, &SearchBudget::new(14, 7), 40).found().unwrap_or_default();
            for h in sets {
                match ts_step_extract(&f, 1, 2, &h, a, WITNESS_THRESHOLD).unwrap() {
                    Outcome::Ready(out) => {
                        let v = verify_thin_at(&f, &out.solution, 14, 1).unwrap();
                        assert!(v.is_pass(), "a={a} h={h:?} -> {out:?}: {v}");
                        checked += 1;
                    }
                    Outcome::Inconclusive(why) => panic!("a={a} h={h:?}: {why}"),
                }
            }
        }
        assert!(checked > 40);
    }

    #[test]
    fn step_rejects_a_set_realizing_the_color() {
        let f = parity_sum();
        let g = ts_step(1, 2, &f).unwrap();
        let h = [0, 1, 2, 3, 5];
        let a = g.color(&[0, 1, 2]);
        assert!(verify_thin_at(&g, &ThinSolution::from_members(&h, a), 14, 1).unwrap().is_fail());
        assert!(ts_step_extract(&f, 1, 2, &h, a, 3).is_err());
    }

    #[test]
    fn step_with_two_point_blocks() {
        let f = Coloring::finite("sum-mod", 3, 2, |xs| (xs[0] + xs[1] * xs[2]) % 2);
        let g = ts_step(2, 2, &f).unwrap();
        assert_eq!(g.arity(), 5);
        for a in 0..4 {
            if let Some(sets) = find_avoiding_all(&g, a, &SearchBudget::new(12, 6), 5).found() {
                for h in sets {
                    if let Outcome::Ready(out) = ts_step_extract(&f, 2, 2, &h, a, 2).unwrap() {
                        assert!(verify_thin_at(&f, &out.solution, 12, 1).unwrap().is_pass());
                    }
                }
            }
        }
    }

    #[test]
    fn aca_coloring_of_the_identity_is_zero() {
        let g = ts_aca_coloring(2, |z| z).unwrap();
        let all: Vec<u64> = (0..10).collect();
        assert!(tuples_of(&all, 4).iter().all(|t| g.color(t) == 0));
        let h: Vec<u64> = (0..12).collect();
        let m = ts_aca_largest_index(&|z| z, 2, &h, 1, 3).unwrap();
        assert_eq!(m, 0);
        for y in 0..6 {
            assert_eq!(ts_aca_range_query(&|z| z, 2, &h, 1, m, y, 40).unwrap(), Outcome::Ready(true));
        }
    }

    #[test]
    fn aca_range_of_doubling() {
        let f = |z: u64| 2 * z;
        let h: Vec<u64> = (0..12).collect();
        // Every bit is 0 for f(z) = 2z > x₀ when z > x₀ ... so the colors avoided include 1.
        let m = ts_aca_largest_index(&f, 2, &h, 1, 3).unwrap();
        assert_eq!(ts_aca_range_query(&f, 2, &h, 1, m, 3, 40).unwrap(), Outcome::Ready(false));
        assert_eq!(ts_aca_range_query(&f, 2, &h, 1, m, 4, 40).unwrap(), Outcome::Ready(true));
    }

    #[test]
    fn aca_queries_match_membership_on_permutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut decided = 0;
        for _ in 0..20 {
            let mut perm: Vec<u64> = (0..64).collect();
            for i in (1..perm.len()).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            // An injection on [0, 64) with a range of the even values.
            let vals: Vec<u64> = perm.iter().map(|&p| 2 * p).collect();
            let f = move |z: u64| vals.get(z as usize).copied().unwrap_or(1000 + 2 * z);
            let g = ts_aca_coloring(1, f.clone()).unwrap();
            for b in 0..2 {
                let Some(sets) = find_avoiding_all(&g, b, &SearchBudget::new(24, 6), 3).found() else { continue };
                for h in sets {
                    let m = ts_aca_largest_index(&f, 1, &h, b, 2).unwrap();
                    for y in 0..6 {
                        if let Outcome::Ready(ans) = ts_aca_range_query(&f, 1, &h, b, m, y, 64).unwrap() {
                            assert_eq!(ans, y % 2 == 0, "y={y} h={h:?} b={b}");
                            decided += 1;
                        }
                    }
                }
            }
        }
        assert!(decided > 0);
    }

    #[test]
    fn pigeonhole_cases() {
        let c = Coloring::constant(1, 3, 2);
        let g = ts_pigeonhole(&c).unwrap();
        assert_eq!(g.color(&[0, 5]), 0);
        assert_eq!(ts_pigeonhole_extract(&c, &[0, 1, 2], 1, 8).unwrap(), (0..8).collect::<Vec<_>>());
        let parity = Coloring::finite("mod2", 1, 2, |xs| xs[0] % 2);
        assert_eq!(ts_pigeonhole(&parity).unwrap().color(&[0, 1]), 2);
        let capped = Coloring::finite("min5", 1, 6, |xs| xs[0].min(5));
        let h: Vec<u64> = (0..12).collect();
        let out = ts_pigeonhole_extract(&capped, &h, 1, 12).unwrap();
        assert_eq!(out, (5..12).collect::<Vec<_>>());
        assert!(verify_homogeneous_at(&capped, &out, 12, 4).is_pass());
        assert!(ts_pigeonhole_extract(&capped, &h, 0, 12).is_err());
        assert!(ts_pigeonhole_extract(&capped, &h, 2, 12).is_err());
    }

    #[test]
    fn pipeline_short_circuits_on_constant() {
        let f = Coloring::constant(2, 3, 1);
        let run = ts33_pipeline(&f, 10, 6).unwrap();
        assert!(run.homogeneous.len() >= 4);
        assert_eq!(run.color, 1);
    }

    #[test]
    fn pipeline_on_random_three_colorings() {
        for seed in 0..6 {
            let f = random_pairs(seed, 3, 16);
            let run = ts33_pipeline(&f, 16, 8).unwrap();
            assert!(verify_homogeneous_at(&f, &run.homogeneous, 16, 4).is_pass(), "seed {seed}: {run:?}");
        }
    }

    #[test]
    fn shapes_are_exhaustive_without_three_color_triples() {
        let f = random_pairs(3, 3, 14);
        let g = ts33_count_coloring(&f);
        let shape = ts33_shape_coloring(&f);
        let all: Vec<u64> = (0..14).collect();
        for t in tuples_of(&all, 3) {
            let (xy, xz, yz) = (f.color(&[t[0], t[1]]), f.color(&[t[0], t[2]]), f.color(&[t[1], t[2]]));
            if g.color(&t) < 2 {
                let s = shape.color(&t);
                let odd_one = [(xy == xz && xz == yz), (xy == xz && yz != xy), (xy == yz && xz != xy), (xz == yz && xy != xz)];
                assert!(odd_one[s as usize], "{t:?}");
            }
        }
    }

    #[test]
    fn merge_tables_have_the_stated_sizes() {
        assert_eq!(Merge::None.colors(), 8);
        assert_eq!(Merge::TransitivePair.colors(), 7);
        assert_eq!(Merge::HereditaryPairs.colors(), 6);
        assert_eq!(Merge::TransitivePair.class(2), vec![2, 5]);
        assert_eq!(Merge::HereditaryPairs.class(1), vec![1, 5]);
        assert_eq!(Merge::HereditaryPairs.class(2), vec![2, 6]);
    }

    #[test]
    fn constant_zero_goes_to_striv() {
        let f = Coloring::constant(2, 2, 0);
        let h: Vec<u64> = (0..10).collect();
        let d = ts3_dispatch(&f, Merge::None, &h, 7, 6).unwrap();
        assert_eq!(d.problem, "STRIV");
        assert_eq!(d.homogeneous.found().unwrap().len(), 6);
    }

    #[test]
    fn every_avoided_color_dispatches_with_its_structure() {
        for seed in 0..8 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let table: Vec<u64> = (0..crate::kernel::codec::tuples_below(14, 2)).map(|_| rng.gen_range(0..2)).collect();
            let f = Coloring::from_table("r", 2, Colors::Finite(2), table, Coloring::constant(2, 2, 0));
            for merge in [Merge::None, Merge::TransitivePair, Merge::HereditaryPairs] {
                let g = ts3_cube_coloring(&f, merge).unwrap();
                for c in 0..merge.colors() {
                    let Some(sets) = find_avoiding_all(&g, c, &SearchBudget::new(14, 5), 3).found() else { continue };
                    for h in sets {
                        let d = ts3_dispatch(&f, merge, &h, c, 3).unwrap();
                        let all_triples = structural_check(&f, &h, d.structure);
                        assert!(all_triples.verdict.is_pass());
                        if let Some(s) = d.homogeneous.found() {
                            assert!(verify_homogeneous_at(&f, &s, 14, 3).is_pass());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn avoiding_the_transitive_pair_is_transitive() {
        // On 0..14, f(x,y) = 1 iff x is even: f(x,y)=f(y,z)=i forces f(x,z)=i.
        let f = Coloring::finite("even-min", 2, 2, |xs| (xs[0] % 2 == 0) as u64);
        let h: Vec<u64> = (0..14).collect();
        let d = ts3_dispatch(&f, Merge::TransitivePair, &h, 2, 4).unwrap();
        assert_eq!(d.problem, "ADS");
        let d = ts3_dispatch(&f, Merge::None, &h, 2, 4).unwrap();
        assert_eq!(d.problem, "CAC");
    }

    #[test]
    fn dispatch_rejects_a_set_that_does_not_avoid() {
        let f = parity_sum();
        let h: Vec<u64> = (0..6).collect();
        let g = ts3_cube_coloring(&f, Merge::None).unwrap();
        let c = g.color(&[0, 1, 2]);
        assert!(ts3_dispatch(&f, Merge::None, &h, c, 3).is_err());
    }
}
