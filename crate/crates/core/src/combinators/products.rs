use super::witness::{Kind, Witness};
use crate::error::{Error, Result};
use crate::kernel::codec::{column, column_tape, evens, odds};
use crate::kernel::{cantor_pair, cantor_unpair, family, interleave, Functional, Point, Tape};
use crate::oracle::{Engine, Search};
use crate::problems::{materialize, Problem, ProblemSpec, Tolerance, Verdict};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Columns of a sequential instance that verification inspects.
pub const SEQ_COLUMNS: u64 = 3;

/// Fuel per materialized bit inside composite problems.
pub const INNER_FUEL: u64 = 1_000_000;

/// `⟨P,Q⟩`: instances and solutions are interleaved pairs.
pub struct Parallel {
    pub left: ProblemSpec,
    pub right: ProblemSpec,
}

pub fn parallel_product(p: &ProblemSpec, q: &ProblemSpec) -> ProblemSpec {
    Arc::new(Parallel { left: p.clone(), right: q.clone() })
}

fn cross<T: Clone>(a: &[T], b: &[T], limit: usize) -> Vec<(T, T)> {
    let mut out = Vec::new();
    for i in 0..a.len().max(b.len()) {
        out.push((a[i.min(a.len() - 1)].clone(), b[i.min(b.len() - 1)].clone()));
        if out.len() >= limit {
            break;
        }
    }
    out
}

impl Problem for Parallel {
    fn name(&self) -> String {
        format!("⟨{},{}⟩", self.left.name(), self.right.name())
    }

    fn is_total(&self) -> bool {
        self.left.is_total() && self.right.is_total()
    }

    fn extent(&self, horizon: u64) -> u64 {
        2 * self.left.extent(horizon).max(self.right.extent(horizon))
    }

    fn solution_extent(&self, horizon: u64) -> u64 {
        2 * self.left.solution_extent(horizon).max(self.right.solution_extent(horizon))
    }

    fn check_instance(&self, inst: &Point, horizon: u64) -> Result<Verdict> {
        Ok(self.left.check_instance(&evens(inst), horizon)?.and(self.right.check_instance(&odds(inst), horizon)?))
    }

    fn verify(&self, inst: &Point, sol: &Point, horizon: u64, size: usize) -> Result<Verdict> {
        let l = self.left.verify(&evens(inst), &evens(sol), horizon, size.min(self.left.default_size()))?;
        let r = self.right.verify(&odds(inst), &odds(sol), horizon, size.min(self.right.default_size()))?;
        Ok(l.and(r))
    }

    fn solve(&self, inst: &Point, horizon: u64, size: usize, limit: usize) -> Result<Search<Vec<Point>>> {
        let l = self.left.solve(&evens(inst), horizon, size.min(self.left.default_size()), limit)?;
        let r = self.right.solve(&odds(inst), horizon, size.min(self.right.default_size()), limit)?;
        Ok(match (l, r) {
            (Search::Found { value: a, .. }, Search::Found { value: b, .. }) => Search::Found {
                value: cross(&a, &b, limit).into_iter().map(|(x, y)| interleave(&x, &y)).collect(),
                engine: Engine::Exhaustive,
            },
            (Search::Exhausted { nodes }, _) | (_, Search::Exhausted { nodes }) => Search::Exhausted { nodes },
            _ => Search::Absent,
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        let a = self.left.sample(rng);
        let b = self.right.sample(rng);
        interleave(&a, &b)
    }

    fn tolerance(&self) -> Option<Tolerance> {
        let (tl, tr) = (self.left.tolerance()?, self.right.tolerance()?);
        Some(Arc::new(move |m| {
            // Changes below m in the pair touch component positions below ceil(m/2).
            let half = m.div_ceil(2);
            let (a, b) = (tl(half), tr(half));
            Functional::new(format!("⟨{},{}⟩", a.label(), b.label()), 1, move |ctx, x| {
                let s = a.apply(vec![crate::kernel::codec::even_tape(ctx.input(0))]);
                let t = b.apply(vec![crate::kernel::codec::odd_tape(ctx.input(0))]);
                ctx.read_tape(&crate::kernel::codec::interleave_tape(s, t), x)
            })
        }))
    }

    fn default_size(&self) -> usize {
        self.left.default_size().max(self.right.default_size())
    }
}

/// `[P0,…,Pr]`: an instance is a tag `t` in unary (`1^t 0`) followed by a `Pt`-instance.
pub struct Alternative {
    pub parts: Vec<ProblemSpec>,
}

pub fn alternative_product(parts: &[ProblemSpec]) -> Result<ProblemSpec> {
    if parts.is_empty() {
        return Err(Error::input("alternative product of no problems"));
    }
    Ok(Arc::new(Alternative { parts: parts.to_vec() }))
}

/// Tag an instance for the alternative product.
pub fn tagged(tag: usize, inst: &Point) -> Point {
    let inst = inst.clone();
    let t = tag as u64;
    Point::new(format!("tag{tag}:{}", inst.name()), move |p| match p.cmp(&t) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Equal => false,
        std::cmp::Ordering::Greater => inst.bit(p - t - 1),
    })
}

impl Alternative {
    /// The tag and the untagged instance.
    pub fn split(&self, inst: &Point) -> Result<(usize, Point)> {
        let tag = (0..self.parts.len() as u64).find(|&p| !inst.bit(p)).ok_or_else(|| {
            Error::input(format!("tag is at least {}, only {} alternatives", self.parts.len(), self.parts.len()))
        })?;
        let src = inst.clone();
        Ok((tag as usize, Point::new(format!("untag({})", inst.name()), move |p| src.bit(p + tag + 1))))
    }
}

impl Problem for Alternative {
    fn name(&self) -> String {
        format!("[{}]", self.parts.iter().map(|p| p.name()).collect::<Vec<_>>().join(","))
    }

    fn is_total(&self) -> bool {
        false
    }

    fn extent(&self, horizon: u64) -> u64 {
        self.parts.len() as u64 + 1 + self.parts.iter().map(|p| p.extent(horizon)).max().unwrap_or(0)
    }

    fn solution_extent(&self, horizon: u64) -> u64 {
        self.parts.iter().map(|p| p.solution_extent(horizon)).max().unwrap_or(horizon)
    }

    fn check_instance(&self, inst: &Point, horizon: u64) -> Result<Verdict> {
        let (t, a) = self.split(inst)?;
        self.parts[t].check_instance(&a, horizon)
    }

    fn verify(&self, inst: &Point, sol: &Point, horizon: u64, size: usize) -> Result<Verdict> {
        let (t, a) = self.split(inst)?;
        self.parts[t].verify(&a, sol, horizon, size)
    }

    fn solve(&self, inst: &Point, horizon: u64, size: usize, limit: usize) -> Result<Search<Vec<Point>>> {
        let (t, a) = self.split(inst)?;
        self.parts[t].solve(&a, horizon, size, limit)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        let t = rng.gen_range(0..self.parts.len());
        tagged(t, &self.parts[t].sample(rng))
    }

    fn default_size(&self) -> usize {
        self.parts.iter().map(|p| p.default_size()).max().unwrap_or(1)
    }
}

/// `P_i ≤ [P_0,…]` by tagging.
pub fn alternative_embed(parts: &[ProblemSpec], i: usize) -> Result<Witness> {
    if i >= parts.len() {
        return Err(Error::input(format!("tag {i} out of range")));
    }
    let t = i as u64;
    let forward = Functional::new(format!("tag{i}"), 1, move |ctx, p| match p.cmp(&t) {
        std::cmp::Ordering::Less => Ok(true),
        std::cmp::Ordering::Equal => Ok(false),
        std::cmp::Ordering::Greater => ctx.read(0, p - t - 1),
    });
    Witness::new(
        format!("embed{i}"),
        Kind::Strong,
        forward,
        crate::kernel::codec::identity_fn(),
        parts[i].clone(),
        alternative_product(parts)?,
    )
}

/// `Q • P`: solve `A` for `P` with `B`, then `Θ(A,B)` for `Q` with `C`; solutions are `B ⊕ C`.
pub struct Compositional {
    pub outer: ProblemSpec,
    pub inner: ProblemSpec,
    pub glue: Functional,
}

pub fn compositional_product(q: &ProblemSpec, p: &ProblemSpec, glue: Functional) -> Result<ProblemSpec> {
    if glue.arity() != 2 {
        return Err(Error::input(format!("glue must read (instance, solution), reads {} tapes", glue.arity())));
    }
    Ok(Arc::new(Compositional { outer: q.clone(), inner: p.clone(), glue }))
}

impl Compositional {
    /// `Θ(A, B)` materialized for checks below `horizon`.
    pub fn glued(&self, inst: &Point, b: &Point, horizon: u64) -> std::result::Result<Point, String> {
        let t = self.glue.apply(vec![Tape::Point(inst.clone()), Tape::Point(b.clone())]);
        materialize(&t, self.outer.extent(horizon), INNER_FUEL)
    }
}

impl Problem for Compositional {
    fn name(&self) -> String {
        format!("{}•{}", self.outer.name(), self.inner.name())
    }

    fn is_total(&self) -> bool {
        self.inner.is_total()
    }

    fn extent(&self, horizon: u64) -> u64 {
        self.inner.extent(horizon)
    }

    fn solution_extent(&self, horizon: u64) -> u64 {
        2 * self.inner.solution_extent(horizon).max(self.outer.solution_extent(horizon))
    }

    fn check_instance(&self, inst: &Point, horizon: u64) -> Result<Verdict> {
        self.inner.check_instance(inst, horizon)
    }

    fn verify(&self, inst: &Point, sol: &Point, horizon: u64, size: usize) -> Result<Verdict> {
        let (b, c) = (evens(sol), odds(sol));
        let first = self.inner.verify(inst, &b, horizon, size)?;
        if first.is_fail() {
            return Ok(first);
        }
        match self.glued(inst, &b, horizon) {
            Ok(g) => Ok(first.and(self.outer.verify(&g, &c, horizon, size)?)),
            Err(why) => Ok(first.and(Verdict::Inconclusive(format!("glue diverged at {why}")))),
        }
    }

    fn solve(&self, inst: &Point, horizon: u64, size: usize, limit: usize) -> Result<Search<Vec<Point>>> {
        let bs = match self.inner.solve(inst, horizon, size, limit)? {
            Search::Found { value, .. } => value,
            other => return Ok(other),
        };
        let mut out = Vec::new();
        let mut last = Search::Absent;
        for b in bs {
            let g = match self.glued(inst, &b, horizon) {
                Ok(g) => g,
                Err(_) => continue,
            };
            match self.outer.solve(&g, horizon, size, limit)? {
                Search::Found { value, .. } => out.extend(value.iter().map(|c| interleave(&b, c))),
                other => last = other,
            }
            if out.len() >= limit {
                break;
            }
        }
        Ok(if out.is_empty() { last } else { Search::Found { value: out, engine: Engine::Exhaustive } })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        self.inner.sample(rng)
    }

    fn default_size(&self) -> usize {
        self.inner.default_size().max(self.outer.default_size())
    }
}

/// `SeqP`: countably many instances in the columns of one point.
pub struct Seq {
    pub inner: ProblemSpec,
    pub columns: u64,
}

pub fn seq(p: &ProblemSpec) -> ProblemSpec {
    Arc::new(Seq { inner: p.clone(), columns: SEQ_COLUMNS })
}

fn column_extent(columns: u64, inner: u64) -> u64 {
    if inner == 0 {
        0
    } else {
        cantor_pair(columns - 1, inner - 1) + 1
    }
}

impl Problem for Seq {
    fn name(&self) -> String {
        format!("Seq{}", self.inner.name())
    }

    fn is_total(&self) -> bool {
        self.inner.is_total()
    }

    fn extent(&self, horizon: u64) -> u64 {
        column_extent(self.columns, self.inner.extent(horizon))
    }

    fn solution_extent(&self, horizon: u64) -> u64 {
        column_extent(self.columns, self.inner.solution_extent(horizon))
    }

    fn check_instance(&self, inst: &Point, horizon: u64) -> Result<Verdict> {
        let mut v = Verdict::Pass;
        for i in 0..self.columns {
            v = v.and(self.inner.check_instance(&column(inst, i), horizon)?);
        }
        Ok(v)
    }

    fn verify(&self, inst: &Point, sol: &Point, horizon: u64, size: usize) -> Result<Verdict> {
        let mut v = Verdict::Pass;
        for i in 0..self.columns {
            let c = self.inner.verify(&column(inst, i), &column(sol, i), horizon, size)?;
            v = v.and(match c {
                Verdict::Fail(d) => Verdict::Fail(format!("column {i}: {d}")),
                other => other,
            });
        }
        Ok(v)
    }

    fn solve(&self, inst: &Point, horizon: u64, size: usize, limit: usize) -> Result<Search<Vec<Point>>> {
        let mut per_column = Vec::new();
        for i in 0..self.columns {
            match self.inner.solve(&column(inst, i), horizon, size, limit)? {
                Search::Found { value, .. } => per_column.push(value),
                other => return Ok(other),
            }
        }
        let variants = per_column.iter().map(Vec::len).max().unwrap_or(1).min(limit.max(1));
        let out = (0..variants)
            .map(|j| {
                let cols: Vec<Point> = per_column.iter().map(|v| v[j.min(v.len() - 1)].clone()).collect();
                family(format!("seq-solution{j}"), move |i| {
                    cols.get(i as usize).cloned().unwrap_or_else(Point::zeros)
                })
            })
            .collect();
        Ok(Search::Found { value: out, engine: Engine::Exhaustive })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        let seed = rng.next_u64();
        let inner = self.inner.clone();
        family(format!("{}-family({seed})", inner.name()), move |i| {
            inner.sample(&mut ChaCha8Rng::seed_from_u64(seed ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
        })
    }

    fn tolerance(&self) -> Option<Tolerance> {
        let inner = self.inner.tolerance()?;
        Some(Arc::new(move |m| {
            // Agreement from m on in the family gives agreement from m on in every column.
            let theta = inner(m);
            Functional::new(format!("Seq{}", theta.label()), 1, move |ctx, z| {
                let (i, x) = cantor_unpair(z);
                let t = theta.apply(vec![column_tape(ctx.input(0), i)]);
                ctx.read_tape(&t, x)
            })
        }))
    }

    fn default_size(&self) -> usize {
        self.inner.default_size()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{rt, totalize_coloring, ts, Colors};

    #[test]
    fn parallel_components_commute_with_pairing() {
        let p = parallel_product(&rt(1, 2), &rt(1, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let inst = p.sample(&mut rng);
        let a = evens(&inst);
        let fa = totalize_coloring(&a, 1, Colors::Finite(2));
        let direct = totalize_coloring(&column_like_even(&inst), 1, Colors::Finite(2));
        for x in 0..16 {
            assert_eq!(fa.color(&[x]), direct.color(&[x]));
        }
        let sols = p.solve(&inst, 10, 4, 2).unwrap().found().unwrap();
        for s in sols {
            assert!(p.verify(&inst, &s, 10, 4).unwrap().is_pass());
        }
    }

    fn column_like_even(p: &Point) -> Point {
        let p = p.clone();
        Point::new("even-direct", move |x| p.bit(2 * x))
    }

    #[test]
    fn alternative_dispatch() {
        let parts = [rt(1, 2), ts(1, Colors::Finite(3))];
        let alt = alternative_product(&parts).unwrap();
        let single = alternative_product(&parts[..1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = parts[0].sample(&mut rng);
            let sols = parts[0].solve(&a, 16, 4, 1).unwrap().found().unwrap();
            let wrapped = tagged(0, &a);
            assert_eq!(
                single.verify(&wrapped, &sols[0], 16, 4).unwrap(),
                parts[0].verify(&a, &sols[0], 16, 4).unwrap()
            );
            assert!(alt.verify(&wrapped, &sols[0], 16, 4).unwrap().is_pass());
        }
        // Tag beyond the list.
        assert!(alt.verify(&tagged(5, &Point::zeros()), &Point::zeros(), 8, 1).is_err());
    }

    #[test]
    fn compositional_with_projection_glue() {
        let p = rt(1, 2);
        let glue = Functional::new("proj-A", 2, |ctx, x| ctx.read(0, x));
        let qp = compositional_product(&p, &p, glue).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let inst = qp.sample(&mut rng);
        let sols = qp.solve(&inst, 16, 4, 2).unwrap().found().unwrap();
        for s in &sols {
            assert!(qp.verify(&inst, s, 16, 4).unwrap().is_pass());
            // Both halves solve A.
            assert!(p.verify(&inst, &evens(s), 16, 4).unwrap().is_pass());
            assert!(p.verify(&inst, &odds(s), 16, 4).unwrap().is_pass());
        }
        assert!(compositional_product(&p, &p, crate::kernel::codec::identity_fn()).is_err());
    }

    #[test]
    fn compositional_rejects_wrong_glued_solution() {
        // Glue flips the instance; C solving A itself (not the glued instance) must fail.
        let p = rt(1, 2);
        let glue = Functional::new("flip-A", 2, |ctx, x| ctx.read(0, x).map(|b| !b));
        let qp = compositional_product(&p, &p, glue).unwrap();
        let f = crate::problems::Coloring::finite("parity", 1, 2, |xs| xs[0] % 2);
        let inst = crate::problems::encode_coloring(&f);
        let evens_set = Point::from_set(&[0, 2, 4, 6, 8, 10]);
        let odd_set = Point::from_set(&[1, 3, 5, 7, 9, 11]);
        assert!(qp.verify(&inst, &interleave(&evens_set, &odd_set), 12, 4).unwrap().is_pass());
        assert!(qp.verify(&inst, &interleave(&evens_set, &Point::from_set(&[0, 1, 2, 3])), 12, 4).unwrap().is_fail());
    }

    #[test]
    fn seq_verifies_columns() {
        let s = seq(&rt(1, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let inst = s.sample(&mut rng);
        let sols = s.solve(&inst, 16, 4, 1).unwrap().found().unwrap();
        assert!(s.verify(&inst, &sols[0], 16, 4).unwrap().is_pass());
    }
}
