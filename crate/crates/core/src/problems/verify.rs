use super::coloring::Coloring;
use super::tree::Tree;
use crate::error::{Error, Result};
use crate::kernel::{rank_tuple, tuples_of, Functional, Point, Prefix};
use std::collections::HashMap;
use std::fmt;

/// Finite-horizon judgement on a candidate solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(String),
    Inconclusive(String),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }

    pub fn status(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail(_) => "fail",
            Verdict::Inconclusive(_) => "inconclusive",
        }
    }

    pub fn detail(&self) -> &str {
        match self {
            Verdict::Pass => "",
            Verdict::Fail(d) | Verdict::Inconclusive(d) => d,
        }
    }

    /// Combine two verdicts: any fail wins, then any inconclusive.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (f @ Verdict::Fail(_), _) | (_, f @ Verdict::Fail(_)) => f,
            (i @ Verdict::Inconclusive(_), _) | (_, i @ Verdict::Inconclusive(_)) => i,
            _ => Verdict::Pass,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => write!(f, "pass"),
            Verdict::Fail(d) => write!(f, "fail: {d}"),
            Verdict::Inconclusive(d) => write!(f, "inconclusive: {d}"),
        }
    }
}

/// A thin-set solution together with the color it omits.
#[derive(Clone, Debug)]
pub struct ThinSolution {
    pub set: Point,
    pub omitted: u64,
}

impl ThinSolution {
    pub fn new(set: Point, omitted: u64) -> Self {
        ThinSolution { set, omitted }
    }

    pub fn from_members(members: &[u64], omitted: u64) -> Self {
        ThinSolution { set: Point::from_set(members), omitted }
    }

    /// Even positions carry the set, odd positions the omitted color in unary.
    pub fn to_point(&self) -> Point {
        let (set, c) = (self.set.clone(), self.omitted);
        Point::new(format!("thin({}, omit {c})", set.name()), move |p| {
            if p % 2 == 0 {
                set.bit(p / 2)
            } else {
                p / 2 < c
            }
        })
    }

    /// Read back from [`ThinSolution::to_point`]; the unary run is cut at `cap`.
    pub fn from_point(p: &Point, cap: u64) -> ThinSolution {
        let mut c = 0;
        while c < cap && p.bit(2 * c + 1) {
            c += 1;
        }
        ThinSolution { set: crate::kernel::codec::evens(p), omitted: c }
    }
}

fn sample(h: &[u64], horizon: u64) -> Vec<u64> {
    let mut v: Vec<u64> = h.iter().copied().filter(|&x| x < horizon).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Pass iff at least `s` elements below `horizon` and all their tuples share one color.
pub fn verify_homogeneous_at(f: &Coloring, h: &[u64], horizon: u64, s: usize) -> Verdict {
    let hs = sample(h, horizon);
    let mut first: Option<(Vec<u64>, u64)> = None;
    for t in tuples_of(&hs, f.arity()) {
        let c = f.color(&t);
        match &first {
            None => first = Some((t, c)),
            Some((t0, c0)) if *c0 != c => {
                return Verdict::Fail(format!("{t0:?} has color {c0} but {t:?} has color {c}"));
            }
            _ => {}
        }
    }
    if hs.len() < s {
        return Verdict::Inconclusive(format!("only {} elements below {horizon}, need {s}", hs.len()));
    }
    Verdict::Pass
}

/// Pass iff at least `s` elements below `horizon` and the omitted color never appears.
pub fn verify_thin_at(f: &Coloring, sol: &ThinSolution, horizon: u64, s: usize) -> Result<Verdict> {
    if !f.colors().admits(sol.omitted) {
        return Err(Error::input(format!("omitted color {} is not below {}", sol.omitted, f.colors())));
    }
    let hs = sol.set.members_below(horizon);
    for t in tuples_of(&hs, f.arity()) {
        if f.color(&t) == sol.omitted {
            return Ok(Verdict::Fail(format!("{t:?} has the omitted color {}", sol.omitted)));
        }
    }
    if hs.len() < s {
        return Ok(Verdict::Inconclusive(format!("only {} elements below {horizon}, need {s}", hs.len())));
    }
    Ok(Verdict::Pass)
}

/// Pass iff at least `s` elements below `horizon` and `f` is injective on their tuples.
pub fn verify_rainbow_at(f: &Coloring, h: &[u64], horizon: u64, s: usize) -> Verdict {
    let hs = sample(h, horizon);
    let mut seen: HashMap<u64, Vec<u64>> = HashMap::new();
    for t in tuples_of(&hs, f.arity()) {
        let c = f.color(&t);
        if let Some(prev) = seen.insert(c, t.clone()) {
            return Verdict::Fail(format!("{prev:?} and {t:?} share color {c}"));
        }
    }
    if hs.len() < s {
        return Verdict::Inconclusive(format!("only {} elements below {horizon}, need {s}", hs.len()));
    }
    Verdict::Pass
}

/// Pass iff `p↾d ∈ T` for every `d <= depth`.
pub fn verify_path_at(t: &Tree, p: &Point, depth: usize) -> Result<Verdict> {
    let full = p.prefix(depth);
    let mut dead_at = None;
    for d in 0..=depth {
        let s = full.truncate(d);
        let inside = t.contains(&s);
        match (inside, &dead_at) {
            (false, None) => dead_at = Some(s),
            (true, Some(parent)) => {
                return Err(Error::contract(format!(
                    "tree {} contains {s} but not its prefix {parent}",
                    t.label()
                )))
            }
            _ => {}
        }
    }
    Ok(match dead_at {
        None => Verdict::Pass,
        Some(s) => Verdict::Fail(format!("{s} is not in {}", t.label())),
    })
}

/// Largest entry of any `n`-tuple with colex rank below `m`; `None` for `m = 0`.
pub fn tolerance_bound(m: u64, n: usize) -> Option<u64> {
    // Colex order lists tuples by nondecreasing maximum.
    (m > 0).then(|| *rank_tuple(m - 1, n).last().expect("n >= 1"))
}

/// Drop every element not exceeding the largest entry of a tuple with rank below `m`.
pub fn tolerance_rt(s: &[u64], m: u64, n: usize) -> Vec<u64> {
    match tolerance_bound(m, n) {
        None => s.to_vec(),
        Some(l) => s.iter().copied().filter(|&a| a > l).collect(),
    }
}

/// [`tolerance_rt`] as a functional on set points.
pub fn tolerance_rt_fn(m: u64, n: usize) -> Functional {
    let l = tolerance_bound(m, n);
    Functional::new(format!("tolerance(m={m},n={n})"), 1, move |ctx, a| match l {
        Some(l) if a <= l => Ok(false),
        _ => ctx.read(0, a),
    })
}

/// [`tolerance_rt`] on thin-solution points: filters the set, keeps the color.
pub fn tolerance_ts_fn(m: u64, n: usize) -> Functional {
    let l = tolerance_bound(m, n);
    Functional::new(format!("tolerance-thin(m={m},n={n})"), 1, move |ctx, p| {
        if p % 2 == 1 {
            return ctx.read(0, p);
        }
        match l {
            Some(l) if p / 2 <= l => Ok(false),
            _ => ctx.read(0, p),
        }
    })
}

/// `Θ(S, m) = S`.
pub fn tolerance_identity_fn(_m: u64) -> Functional {
    crate::kernel::codec::identity_fn().named("tolerance-id")
}

/// Render a finite set for reports.
pub fn show_set(s: &[u64]) -> String {
    let parts: Vec<String> = s.iter().map(u64::to_string).collect();
    format!("{{{}}}", parts.join(","))
}

/// Members of `p` below `bound`, or of a prefix.
pub fn prefix_members(p: &Prefix) -> Vec<u64> {
    p.bits().iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::coloring::Colors;

    fn parity_sum() -> Coloring {
        Coloring::finite("parity-sum", 2, 2, |xs| (xs[0] + xs[1]) % 2)
    }

    #[test]
    fn homogeneous_examples() {
        let c = Coloring::constant(2, 2, 1);
        assert!(verify_homogeneous_at(&c, &(0..8).collect::<Vec<_>>(), 8, 4).is_pass());
        assert!(verify_homogeneous_at(&parity_sum(), &[0, 2, 4, 6], 8, 4).is_pass());
        assert!(verify_homogeneous_at(&parity_sum(), &[0, 1, 2], 8, 3).is_fail());
        assert!(matches!(verify_homogeneous_at(&parity_sum(), &[0, 2], 8, 4), Verdict::Inconclusive(_)));
    }

    #[test]
    fn thin_examples() {
        let one = Coloring::constant(1, 2, 1);
        assert!(verify_thin_at(&one, &ThinSolution::from_members(&(0..10).collect::<Vec<_>>(), 0), 10, 4)
            .unwrap()
            .is_pass());
        let m3 = Coloring::finite("mod3", 1, 3, |xs| xs[0] % 3);
        assert!(verify_thin_at(&m3, &ThinSolution::from_members(&[0, 1, 3, 4, 6, 7], 2), 9, 6).unwrap().is_pass());
        assert!(verify_thin_at(&m3, &ThinSolution::from_members(&[0, 2], 2), 9, 2).unwrap().is_fail());
        assert!(verify_thin_at(&m3, &ThinSolution::from_members(&[0, 2], 3), 9, 2).is_err());
    }

    #[test]
    fn thin_point_round_trip() {
        let t = ThinSolution::from_members(&[1, 5, 9], 3);
        let back = ThinSolution::from_point(&t.to_point(), 100);
        assert_eq!(back.omitted, 3);
        assert_eq!(back.set.members_below(12), vec![1, 5, 9]);
    }

    #[test]
    fn rainbow_examples() {
        let inj = Coloring::new("rank", 2, Colors::Omega, |xs| crate::kernel::tuple_rank(xs).unwrap());
        assert!(verify_rainbow_at(&inj, &(0..8).collect::<Vec<_>>(), 8, 4).is_pass());
        let glued = Coloring::new("glued", 2, Colors::Omega, |xs| {
            if xs == [1, 2] {
                crate::kernel::tuple_rank(&[0, 2]).unwrap()
            } else {
                crate::kernel::tuple_rank(xs).unwrap()
            }
        });
        assert!(verify_rainbow_at(&glued, &[0, 1, 2], 8, 3).is_fail());
    }

    #[test]
    fn path_examples() {
        let any = Point::random(3);
        assert!(verify_path_at(&Tree::full(), &any, 12).unwrap().is_pass());
        assert!(verify_path_at(&Tree::starts_with(true), &Point::zeros(), 1).unwrap().is_fail());
        assert!(verify_path_at(&Tree::no_consecutive_ones(), &Point::periodic("01"), 16).unwrap().is_pass());
        let bad = Tree::new("gap", |s| s.len() != 2);
        assert!(verify_path_at(&bad, &Point::zeros(), 4).is_err());
    }

    #[test]
    fn tolerance_examples() {
        assert_eq!(tolerance_rt(&[1, 3, 5, 7], 0, 2), vec![1, 3, 5, 7]);
        assert_eq!(tolerance_bound(4, 2), Some(3));
        assert_eq!(tolerance_rt(&[1, 3, 5, 7], 4, 2), vec![5, 7]);
    }
}
