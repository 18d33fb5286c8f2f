use crate::error::{Error, Result};
use crate::kernel::codec::{column_tape, even_tape, identity_fn, interleave_tape, odd_tape};
use crate::kernel::{cantor_unpair, Functional, Tape};
use crate::problems::ProblemSpec;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;

/// Whether the backward functional may read the source instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    /// Backward reads only the target solution.
    Strong,
    /// Backward reads (source instance, target solution).
    Plain,
}

impl Kind {
    /// Strong only if both are strong.
    pub fn meet(self, other: Kind) -> Kind {
        if self == Kind::Strong && other == Kind::Strong {
            Kind::Strong
        } else {
            Kind::Plain
        }
    }

    pub fn backward_arity(self) -> usize {
        match self {
            Kind::Strong => 1,
            Kind::Plain => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Strong => "strong",
            Kind::Plain => "plain",
        }
    }
}

pub type Sampler = Arc<dyn Fn(&mut ChaCha8Rng) -> crate::kernel::Point + Send + Sync>;

/// A claimed reduction of `source` to `target`.
#[derive(Clone)]
pub struct Witness {
    pub label: String,
    pub kind: Kind,
    /// Arity 1: source instance to target instance.
    pub forward: Functional,
    /// Arity 1 (strong) or 2 (plain).
    pub backward: Functional,
    pub source: ProblemSpec,
    pub target: ProblemSpec,
    /// Horizon at which target solutions must be checked to settle the source at a given horizon.
    pub target_horizon: Arc<dyn Fn(u64) -> u64 + Send + Sync>,
    /// Optional replacement for `source.sample`.
    pub sampler: Option<Sampler>,
    /// Extra target-solution size needed because the backward map may drop elements.
    pub size_slack: usize,
}

impl Witness {
    pub fn new(
        label: impl Into<String>,
        kind: Kind,
        forward: Functional,
        backward: Functional,
        source: ProblemSpec,
        target: ProblemSpec,
    ) -> Result<Witness> {
        let label = label.into();
        if forward.arity() != 1 {
            return Err(Error::input(format!("{label}: forward must read one tape, reads {}", forward.arity())));
        }
        if backward.arity() != kind.backward_arity() {
            return Err(Error::input(format!(
                "{label}: {} backward must read {} tape(s), reads {}",
                kind.name(),
                kind.backward_arity(),
                backward.arity()
            )));
        }
        Ok(Witness { label, kind, forward, backward, source, target, target_horizon: Arc::new(|n| n), sampler: None, size_slack: 0 })
    }

    pub fn with_target_horizon(mut self, f: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Self {
        self.target_horizon = Arc::new(f);
        self
    }

    pub fn with_sampler(mut self, f: impl Fn(&mut ChaCha8Rng) -> crate::kernel::Point + Send + Sync + 'static) -> Self {
        self.sampler = Some(Arc::new(f));
        self
    }

    pub fn with_size_slack(mut self, slack: usize) -> Self {
        self.size_slack = slack;
        self
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> crate::kernel::Point {
        match &self.sampler {
            Some(s) => s(rng),
            None => self.source.sample(rng),
        }
    }

    pub fn forward_tape(&self, inst: Tape) -> Tape {
        self.forward.apply(vec![inst])
    }

    pub fn backward_tape(&self, inst: Tape, sol: Tape) -> Tape {
        match self.kind {
            Kind::Strong => self.backward.apply(vec![sol]),
            Kind::Plain => self.backward.apply(vec![inst, sol]),
        }
    }

    /// The same reduction with the backward functional reading the instance it ignores.
    pub fn as_plain(&self) -> Witness {
        match self.kind {
            Kind::Plain => self.clone(),
            Kind::Strong => {
                let psi = self.backward.clone();
                let backward = Functional::new(format!("{}+inst", psi.label()), 2, move |ctx, x| {
                    let t = psi.apply(vec![ctx.input(1)]);
                    ctx.read_tape(&t, x)
                });
                Witness { kind: Kind::Plain, backward, ..self.clone() }
            }
        }
    }
}

impl fmt::Debug for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Witness({}: {} ≤ {} [{}])", self.label, self.source.name(), self.target.name(), self.kind.name())
    }
}

/// `P ≤ P` by identities.
pub fn identity_witness(p: &ProblemSpec) -> Witness {
    Witness::new(format!("id[{}]", p.name()), Kind::Strong, identity_fn(), identity_fn(), p.clone(), p.clone())
        .expect("identity arities are correct")
}

/// `W1 : P ≤ Q` and `W2 : Q ≤ R` give `P ≤ R`.
pub fn compose_witness(w1: &Witness, w2: &Witness) -> Result<Witness> {
    if w1.target.name() != w2.source.name() {
        return Err(Error::input(format!(
            "cannot compose: {} reduces to {} but {} starts from {}",
            w1.label,
            w1.target.name(),
            w2.label,
            w2.source.name()
        )));
    }
    let (phi1, phi2) = (w1.forward.clone(), w2.forward.clone());
    let forward = Functional::new(format!("{}∘{}", phi2.label(), phi1.label()), 1, move |ctx, x| {
        let mid = phi1.apply(vec![ctx.input(0)]);
        let out = phi2.apply(vec![mid]);
        ctx.read_tape(&out, x)
    });
    let kind = w1.kind.meet(w2.kind);
    let (a, b) = (w1.clone(), w2.clone());
    let backward = match kind {
        Kind::Strong => Functional::new(format!("{}∘{}", a.backward.label(), b.backward.label()), 1, move |ctx, x| {
            let mid = b.backward.apply(vec![ctx.input(0)]);
            let out = a.backward.apply(vec![mid]);
            ctx.read_tape(&out, x)
        }),
        Kind::Plain => Functional::new(format!("{}∘{}", a.backward.label(), b.backward.label()), 2, move |ctx, x| {
            let inst = ctx.input(0);
            let mid_inst = a.forward.apply(vec![inst.clone()]);
            let mid_sol = b.backward_tape(mid_inst, ctx.input(1));
            let out = a.backward_tape(inst, mid_sol);
            ctx.read_tape(&out, x)
        }),
    };
    let (h1, h2) = (w1.target_horizon.clone(), w2.target_horizon.clone());
    let mut w = Witness::new(format!("{};{}", w1.label, w2.label), kind, forward, backward, w1.source.clone(), w2.target.clone())?
        .with_target_horizon(move |n| h2(h1(n)));
    w.sampler = w1.sampler.clone();
    w.size_slack = w1.size_slack + w2.size_slack;
    Ok(w)
}

/// `W1 : P ≤ Q`, `W2 : P' ≤ Q'` give `⟨P,P'⟩ ≤ ⟨Q,Q'⟩`; strong only if both are.
pub fn witness_parallel(w1: &Witness, w2: &Witness) -> Witness {
    let (phi1, phi2) = (w1.forward.clone(), w2.forward.clone());
    let forward = Functional::new(format!("⟨{},{}⟩", phi1.label(), phi2.label()), 1, move |ctx, x| {
        let a = phi1.apply(vec![even_tape(ctx.input(0))]);
        let b = phi2.apply(vec![odd_tape(ctx.input(0))]);
        ctx.read_tape(&interleave_tape(a, b), x)
    });
    let kind = w1.kind.meet(w2.kind);
    let (a, b) = (w1.clone(), w2.clone());
    let label = format!("⟨{},{}⟩", a.backward.label(), b.backward.label());
    let backward = match kind {
        Kind::Strong => Functional::new(label, 1, move |ctx, x| {
            let s = a.backward.apply(vec![even_tape(ctx.input(0))]);
            let t = b.backward.apply(vec![odd_tape(ctx.input(0))]);
            ctx.read_tape(&interleave_tape(s, t), x)
        }),
        Kind::Plain => Functional::new(label, 2, move |ctx, x| {
            let s = a.backward_tape(even_tape(ctx.input(0)), even_tape(ctx.input(1)));
            let t = b.backward_tape(odd_tape(ctx.input(0)), odd_tape(ctx.input(1)));
            ctx.read_tape(&interleave_tape(s, t), x)
        }),
    };
    let source = super::products::parallel_product(&w1.source, &w2.source);
    let target = super::products::parallel_product(&w1.target, &w2.target);
    let (h1, h2) = (w1.target_horizon.clone(), w2.target_horizon.clone());
    let mut w = Witness::new(format!("⟨{},{}⟩", w1.label, w2.label), kind, forward, backward, source, target)
        .expect("arities are correct")
        .with_target_horizon(move |n| h1(n).max(h2(n)))
        .with_size_slack(w1.size_slack.max(w2.size_slack));
    if w1.sampler.is_some() || w2.sampler.is_some() {
        let (a, b) = (w1.clone(), w2.clone());
        w = w.with_sampler(move |rng| crate::kernel::interleave(&a.sample(rng), &b.sample(rng)));
    }
    w
}

/// `W : P ≤ Q` gives `SeqP ≤ SeqQ` by acting on every column.
pub fn lift_seq(w: &Witness) -> Witness {
    let phi = w.forward.clone();
    let forward = Functional::new(format!("seq({})", phi.label()), 1, move |ctx, z| {
        let (i, x) = cantor_unpair(z);
        let out = phi.apply(vec![column_tape(ctx.input(0), i)]);
        ctx.read_tape(&out, x)
    });
    let inner = w.clone();
    let backward = match w.kind {
        Kind::Strong => Functional::new(format!("seq({})", w.backward.label()), 1, move |ctx, z| {
            let (i, x) = cantor_unpair(z);
            let out = inner.backward.apply(vec![column_tape(ctx.input(0), i)]);
            ctx.read_tape(&out, x)
        }),
        Kind::Plain => Functional::new(format!("seq({})", w.backward.label()), 2, move |ctx, z| {
            let (i, x) = cantor_unpair(z);
            let out = inner.backward_tape(column_tape(ctx.input(0), i), column_tape(ctx.input(1), i));
            ctx.read_tape(&out, x)
        }),
    };
    let h = w.target_horizon.clone();
    let mut lifted = Witness::new(
        format!("seq({})", w.label),
        w.kind,
        forward,
        backward,
        super::products::seq(&w.source),
        super::products::seq(&w.target),
    )
    .expect("arities are correct")
    .with_target_horizon(move |n| h(n))
    .with_size_slack(w.size_slack);
    if w.sampler.is_some() {
        let inner = w.clone();
        lifted = lifted.with_sampler(move |rng| {
            use rand::RngCore;
            let seed = rng.next_u64();
            let inner = inner.clone();
            crate::kernel::family(format!("seq-sample({seed})"), move |i| {
                use rand::SeedableRng;
                inner.sample(&mut ChaCha8Rng::seed_from_u64(seed ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
            })
        });
    }
    lifted
}

/// From `W : ⟨P,P⟩ ≤ P`, the reduction of the right-nested product
/// `⟨P,⟨P,…⟩⟩` (`n` copies) to `P`; the forward map is `Φ(A0, Φ(A1, … A(n-1)))`.
pub fn iterate_finite(w: &Witness, n: usize) -> Result<Witness> {
    if n == 0 {
        return Err(Error::input("iterate_finite needs n >= 1"));
    }
    let p = w.target.clone();
    let pp = super::products::parallel_product(&p, &p);
    if w.source.name() != pp.name() {
        return Err(Error::input(format!("{} does not reduce {} to {}", w.label, pp.name(), p.name())));
    }
    let mut acc = identity_witness(&p);
    for level in 1..n {
        let step = witness_parallel(&identity_witness(&p), &acc);
        let mut composed = compose_witness(&step, &relabel_source(w, &step.target))?;
        composed.label = format!("iterate{}[{}]", level + 1, w.label);
        composed.forward = composed.forward.named(format!("level{}", level + 1));
        acc = composed;
    }
    Ok(acc)
}

/// `w` with its source replaced by a problem of the same name (shared structure).
fn relabel_source(w: &Witness, src: &ProblemSpec) -> Witness {
    Witness { source: src.clone(), ..w.clone() }
}

/// The nesting pattern of [`iterate_finite`]'s forward map, as text.
pub fn nesting_display(n: usize) -> String {
    fn rec(i: usize, n: usize) -> String {
        if i + 1 == n {
            format!("A{i}")
        } else if i + 2 == n {
            format!("Φ(A{i},A{})", i + 1)
        } else {
            format!("Φ(A{i},{})", rec(i + 1, n))
        }
    }
    rec(0, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinators::{check_soundness, parallel_product};
    use crate::kernel::codec::column;
    use crate::kernel::Point;
    use crate::problems::{echo, rt, sample_family};

    /// `⟨ECHO,ECHO⟩ ≤ ECHO`: the pair is its own instance and its own solution.
    fn echo_pairing() -> Witness {
        let p = echo();
        Witness::new("pair", Kind::Strong, identity_fn(), identity_fn(), parallel_product(&p, &p), p)
            .unwrap()
            .with_target_horizon(|n| 2 * n)
    }

    #[test]
    fn kinds_meet() {
        assert_eq!(Kind::Strong.meet(Kind::Strong), Kind::Strong);
        assert_eq!(Kind::Strong.meet(Kind::Plain), Kind::Plain);
        let id = identity_witness(&rt(1, 2));
        assert_eq!(compose_witness(&id, &id).unwrap().kind, Kind::Strong);
        assert_eq!(compose_witness(&id, &id.as_plain()).unwrap().kind, Kind::Plain);
        assert_eq!(witness_parallel(&id, &id.as_plain()).kind, Kind::Plain);
    }

    #[test]
    fn arity_is_checked() {
        let p = rt(1, 2);
        assert!(Witness::new("bad", Kind::Strong, identity_fn(), interleave_fn_2(), p.clone(), p).is_err());
    }

    fn interleave_fn_2() -> Functional {
        crate::kernel::codec::interleave_fn()
    }

    #[test]
    fn compose_rejects_mismatch() {
        let a = identity_witness(&rt(1, 2));
        let b = identity_witness(&rt(1, 3));
        assert_eq!(compose_witness(&a, &b).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn composed_identities_are_identities() {
        let id = identity_witness(&rt(2, 2));
        for w in [compose_witness(&id, &id).unwrap(), compose_witness(&id.as_plain(), &id.as_plain()).unwrap()] {
            let a = Point::random(3);
            let f = w.forward_tape(Tape::Point(a.clone())).materialize(64, 100_000).unwrap();
            assert_eq!(f, a.prefix(64));
            let s = Point::random(4);
            let b = w.backward_tape(Tape::Point(a), Tape::Point(s.clone())).materialize(64, 100_000).unwrap();
            assert_eq!(b, s.prefix(64));
        }
    }

    #[test]
    fn lifted_forward_acts_on_columns() {
        let shift = Witness::new(
            "not",
            Kind::Strong,
            Functional::new("not", 1, |ctx, x| ctx.read(0, x).map(|b| !b)),
            identity_fn(),
            echo(),
            echo(),
        )
        .unwrap();
        let lifted = lift_seq(&shift);
        assert_eq!(lifted.kind, Kind::Strong);
        assert_eq!(lift_seq(&shift.as_plain()).kind, Kind::Plain);
        let fam = sample_family(&echo(), 8);
        let out = lifted.forward_tape(Tape::Point(fam.clone()));
        let out = Point::padded(out.materialize(200, 100_000).unwrap(), false);
        for i in 0..4 {
            for x in 0..16 {
                assert_eq!(column(&out, i).bit(x), !column(&fam, i).bit(x), "column {i} at {x}");
            }
        }
    }

    #[test]
    fn nesting_matches_display() {
        assert_eq!(nesting_display(4), "Φ(A0,Φ(A1,Φ(A2,A3)))");
        assert_eq!(nesting_display(1), "A0");
        assert!(iterate_finite(&echo_pairing(), 0).is_err());
        let one = iterate_finite(&echo_pairing(), 1).unwrap();
        assert_eq!(one.source.name(), "ECHO");
    }

    #[test]
    fn iterated_pairing_is_sound() {
        let w = iterate_finite(&echo_pairing(), 3).unwrap();
        assert_eq!(w.source.name(), "⟨ECHO,⟨ECHO,ECHO⟩⟩");
        let report = check_soundness(&w, 20, 12, 1).unwrap();
        assert_eq!(report.passed(), 20, "{:?}", report.first_failure());
    }
}
