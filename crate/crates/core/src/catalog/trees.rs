//! Tree constructions: the `T_σ` family that reduces WKL to sequences of
//! measure-1/2 trees, and the measure blow-up of a positive-measure tree.

use crate::error::{Error, Result};
use crate::kernel::codec::column;
use crate::kernel::{Ctx, Functional, Halt, Meter, Point, Prefix, Tape};
use crate::measure::{show, Exact};
use crate::problems::{encode_tree, measure_at_level, verify_path_at, Tree};
use num_traits::{One, Zero};

/// Position of `σ` in the length-then-lexicographic numbering of all strings (root is 0).
pub fn string_index(s: &Prefix) -> u64 {
    let v = s.bits().iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
    (1u64 << s.len()) - 1 + v
}

/// Inverse of [`string_index`].
pub fn string_at(i: u64) -> Prefix {
    let len = 63 - (i + 1).leading_zeros();
    Prefix::from_index(i + 1 - (1u64 << len), len as usize)
}

/// Longest length reachable by extending `rho` inside `s`, or `None` when `horizon` is
/// reached (extendibility past the horizon is assumed).
pub fn reach(s: &Tree, rho: &Prefix, horizon: usize) -> Option<usize> {
    if !s.contains(rho) {
        // Only lengths up to |ρ| are trivially extendible.
        return Some(rho.len());
    }
    let mut best = rho.len();
    let mut stack = vec![rho.clone()];
    while let Some(t) = stack.pop() {
        if t.len() >= horizon {
            return None;
        }
        best = best.max(t.len());
        for b in [true, false] {
            let c = t.child(b);
            if s.contains(&c) {
                stack.push(c);
            }
        }
    }
    Some(best)
}

/// `Ext_S(ρ, k)`: `k ≤ |ρ|`, or some member of `s` of length `k` extends `ρ`.
pub fn ext(s: &Tree, rho: &Prefix, k: usize, horizon: usize) -> bool {
    k <= rho.len() || reach(s, rho, horizon).is_none_or(|r| k <= r)
}

/// The tree `T_σ`: the side of `σ` that dies first is cut off once its death is visible,
/// and both sides survive while neither has died. Every level has measure 1 or 1/2.
pub fn t_sigma(s: &Tree, sigma: &Prefix, horizon: usize) -> Tree {
    let e0 = reach(s, &sigma.child(false), horizon);
    let e1 = reach(s, &sigma.child(true), horizon);
    let within = |e: Option<usize>, k: usize| e.is_none_or(|e| k <= e);
    let dies_first = move |mine: Option<usize>, other: Option<usize>, len: usize| match other {
        // The other side stops at `o`; the witness `k = o + 1` needs `k < len` and `k ≤ mine`.
        Some(o) => within(mine, o + 1) && o + 1 < len,
        None => false,
    };
    let both_die_together = move |len: usize| matches!((e0, e1), (Some(a), Some(b)) if a == b && a < len);
    Tree::new(format!("T[{sigma}]"), move |tau| {
        let Some(first) = tau.get(0) else { return true };
        let len = tau.len();
        let (mine, other) = if first { (e1, e0) } else { (e0, e1) };
        within(mine, len) || dies_first(mine, other, len) || both_die_together(len)
    })
}

/// The family `⟨T_σ⟩`, column [`string_index`]`(σ)` coding `T_σ`.
pub fn wkl_from_seqwwkl(s: &Tree, horizon: usize) -> Point {
    let s = s.clone();
    crate::kernel::family(format!("T_σ[{}]", s.label()), move |i| encode_tree(&t_sigma(&s, &string_at(i), horizon)))
}

/// `C(n) = B_{C↾n}(0)` for `n < len`, after checking each consulted `B_σ` against `T_σ`
/// to depth `check_depth`.
pub fn assemble_path(s: &Tree, paths: &Point, len: usize, check_depth: usize, horizon: usize) -> Result<Prefix> {
    let mut c = Prefix::empty();
    for _ in 0..len {
        let b = column(paths, string_index(&c));
        let v = verify_path_at(&t_sigma(s, &c, horizon), &b, check_depth)?;
        if !v.is_pass() {
            return Err(Error::contract(format!("B[{c}] is not a path through T[{c}]: {}", v.detail())));
        }
        c.push(b.bit(0));
    }
    Ok(c)
}

/// One application of the blow-up step.
#[derive(Clone, Debug)]
pub struct BlowupStage {
    /// Measure of the input tree at the working depth.
    pub measure: Exact,
    pub delta: Exact,
    /// Minimal strings outside the input tree whose cylinders receive copies of it.
    pub strings: Vec<Prefix>,
    /// Exact complement of the output tree at the working depth.
    pub complement: Exact,
    /// `(1+ε)(1−p)²`.
    pub bound: Exact,
}

/// A tree of larger measure with a uniform map from its paths to paths of the original.
#[derive(Clone)]
pub struct Blowup {
    pub tree: Tree,
    pub path_map: Functional,
    pub stages: Vec<BlowupStage>,
}

/// Drops the leading copy of whichever string in `strings` the input starts with.
fn shift_map(strings: Vec<Prefix>) -> Functional {
    Functional::new("strip-σ", 1, move |ctx: &mut Ctx<'_>, x| {
        'next: for s in &strings {
            for (i, &b) in s.bits().iter().enumerate() {
                if ctx.read(0, i as u64)? != b {
                    continue 'next;
                }
            }
            return ctx.read(0, s.len() as u64 + x);
        }
        ctx.read(0, x)
    })
}

/// `S = T ∪ ⋃ σᵢT` with the `σᵢ` the first minimal non-members covering `δ(1−p)`.
pub fn blowup_step(t: &Tree, eps: &Exact, depth: usize) -> Result<(Tree, Functional, BlowupStage)> {
    let p: Exact = measure_at_level(t, depth)?;
    let one = Exact::one();
    let gap = &one - &p;
    let raw = (&one - (&one + eps) * &gap) / &p;
    let delta = if raw > Exact::zero() { raw } else { Exact::new(1.into(), 2.into()) };
    let need = &delta * &gap;
    let mut strings = Vec::new();
    let mut covered = Exact::zero();
    let mut frontier = vec![Prefix::empty()];
    'levels: for d in 1..=depth {
        let mut next = Vec::new();
        for s in &frontier {
            for b in [false, true] {
                let c = s.child(b);
                if t.contains(&c) {
                    next.push(c);
                } else if covered < need {
                    covered += Exact::new(1.into(), num_bigint::BigInt::from(1u64) << d);
                    strings.push(c);
                }
            }
        }
        if covered >= need {
            break 'levels;
        }
        frontier = next;
    }
    if covered < need {
        return Err(Error::resource(format!(
            "minimal strings outside {} cover {} by depth {depth}, need {}",
            t.label(),
            show(&covered),
            show(&need)
        )));
    }
    let (base, copies) = (t.clone(), strings.clone());
    let s = Tree::new(format!("blowup({})", t.label()), move |x| {
        base.contains(x)
            || copies
                .iter()
                .any(|c| c.is_prefix_of(x) && base.contains(&Prefix::new(x.bits()[c.len()..].to_vec())))
    });
    let complement = &one - measure_at_level::<Exact>(&s, depth)?;
    let bound = (&one + eps) * &gap * &gap;
    if complement > bound {
        return Err(Error::contract(format!(
            "blow-up complement {} exceeds (1+ε)(1−p)² = {}",
            show(&complement),
            show(&bound)
        )));
    }
    let stage = BlowupStage { measure: p, delta, strings: strings.clone(), complement, bound };
    Ok((s, shift_map(strings), stage))
}

/// Iterations after which `c ↦ (1+ε)c²`, started at `1−p`, drops below `1−q`.
pub fn blowup_iterations(p: &Exact, q: &Exact, eps: &Exact) -> Result<usize> {
    let one = Exact::one();
    let target = &one - q;
    let mut c = &one - p;
    for n in 0..=32 {
        if c < target {
            return Ok(n);
        }
        let next = (&one + eps) * &c * &c;
        if next >= c {
            return Err(Error::input(format!("(1+ε)(1−p) = {} does not shrink the complement", show(&((&one + eps) * &c)))));
        }
        c = next;
    }
    Err(Error::resource("blow-up needs more than 32 iterations"))
}

/// Blow `t` (level measures at least `p`) up to measure at least `q` at `depth`.
pub fn blowup_tree(t: &Tree, p: &Exact, q: &Exact, eps: &Exact, depth: usize) -> Result<Blowup> {
    let actual: Exact = measure_at_level(t, depth)?;
    if actual < *p {
        return Err(Error::input(format!("{} has measure {} at depth {depth}, below the declared {}", t.label(), show(&actual), show(p))));
    }
    if p >= q {
        return Ok(Blowup { tree: t.clone(), path_map: crate::kernel::codec::identity_fn(), stages: Vec::new() });
    }
    let n = blowup_iterations(p, q, eps)?;
    let mut tree = t.clone();
    let mut maps = Vec::new();
    let mut stages = Vec::new();
    // The estimate guarantees `n` iterations suffice; stop earlier once the measure is reached.
    for _ in 0..n {
        if measure_at_level::<Exact>(&tree, depth)? >= *q {
            break;
        }
        let (s, phi, stage) = blowup_step(&tree, eps, depth)?;
        tree = s;
        maps.push(phi);
        stages.push(stage);
    }
    let reached: Exact = measure_at_level(&tree, depth)?;
    if reached < *q {
        return Err(Error::contract(format!("after {} iterations the measure is {}, below {}", stages.len(), show(&reached), show(q))));
    }
    // The last stage's map runs first.
    let mut tape = Tape::Input(0);
    for phi in maps.iter().rev() {
        tape = phi.apply(vec![tape]);
    }
    let path_map = Functional::new(format!("blowup-map×{}", maps.len()), 1, move |ctx, x| ctx.read_tape(&tape, x));
    Ok(Blowup { tree, path_map, stages })
}

/// The bits of `map(s)` that `s` alone determines.
pub fn map_prefix(map: &Functional, s: &Prefix) -> Result<Prefix> {
    let tape = map.apply(vec![Tape::prefix(s.clone())]);
    let mut out = Vec::new();
    for x in 0..s.len() as u64 {
        match tape.bit(x, &Meter::new(crate::combinators::INNER_FUEL)) {
            Ok(b) => out.push(b),
            Err(Halt::PrefixEnd { .. }) => break,
            Err(Halt::Fault(e)) => return Err(e),
            Err(h) => return Err(Error::resource(format!("path map halted at {x}: {h:?}"))),
        }
    }
    Ok(Prefix::new(out))
}
