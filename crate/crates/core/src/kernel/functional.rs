use super::bits::{Point, Prefix};
use crate::error::{Error, Result};
use std::cell::Cell;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// Why an evaluation stopped without a value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Halt {
    /// Fuel ran out.
    Fuel,
    /// A finite oracle was queried past its end.
    PrefixEnd { pos: u64 },
    /// A free tape was queried at an unassigned position (exhaustive search only).
    Branch { tape: u32, pos: u64 },
    /// A hard error; never treated as divergence.
    Fault(Error),
}

impl From<Error> for Halt {
    fn from(e: Error) -> Self {
        Halt::Fault(e)
    }
}

pub type Step<T = bool> = std::result::Result<T, Halt>;

/// Bits fixed so far on free tapes, keyed by `(tape id, position)`.
pub type Assignment = HashMap<(u32, u64), bool>;

/// Fuel counter shared by an evaluation and all nested sub-evaluations.
pub struct Meter<'a> {
    fuel: Cell<u64>,
    steps: Cell<u64>,
    free: Option<&'a Assignment>,
}

impl<'a> Meter<'a> {
    pub fn new(fuel: u64) -> Self {
        Meter { fuel: Cell::new(fuel), steps: Cell::new(0), free: None }
    }

    pub fn with_assignment(fuel: u64, free: &'a Assignment) -> Self {
        Meter { fuel: Cell::new(fuel), steps: Cell::new(0), free: Some(free) }
    }

    pub fn charge(&self, n: u64) -> Step<()> {
        let left = self.fuel.get();
        if left < n {
            self.steps.set(self.steps.get() + left);
            self.fuel.set(0);
            return Err(Halt::Fuel);
        }
        self.fuel.set(left - n);
        self.steps.set(self.steps.get() + n);
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        self.steps.get()
    }

    pub fn remaining(&self) -> u64 {
        self.fuel.get()
    }
}

/// Something an oracle tape can be read from.
#[derive(Clone)]
pub enum Tape {
    Point(Point),
    Prefix(Arc<Prefix>),
    /// Bits supplied by the enclosing [`Assignment`]; positions `>= len` end the tape.
    Free { id: u32, len: u64 },
    /// The output of a functional applied to input tapes, computed on demand.
    Computed(Arc<Computed>),
    /// `head` below its length, `tail` from there on.
    Splice(Arc<(Prefix, Tape)>),
    /// Input `k` of the functional whose step is currently running.
    Input(usize),
}

pub struct Computed {
    pub functional: Functional,
    pub inputs: Vec<Tape>,
}

impl Tape {
    pub fn prefix(p: Prefix) -> Tape {
        Tape::Prefix(Arc::new(p))
    }

    pub fn splice(head: Prefix, tail: Tape) -> Tape {
        Tape::Splice(Arc::new((head, tail)))
    }

    /// Read one bit outside of any functional.
    pub fn bit(&self, pos: u64, meter: &Meter<'_>) -> Step {
        let mut ctx = Ctx { tapes: std::slice::from_ref(self), uses: vec![None], meter, parent: None };
        ctx.read(0, pos)
    }

    /// Materialize the first `len` bits with a fresh meter per position.
    pub fn materialize(&self, len: u64, fuel_per_bit: u64) -> std::result::Result<Prefix, (u64, Halt)> {
        let mut bits = Vec::with_capacity(len as usize);
        for pos in 0..len {
            let meter = Meter::new(fuel_per_bit);
            match self.bit(pos, &meter) {
                Ok(b) => bits.push(b),
                Err(h) => return Err((pos, h)),
            }
        }
        Ok(Prefix::new(bits))
    }
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tape::Point(p) => write!(f, "{p:?}"),
            Tape::Prefix(p) => write!(f, "{p:?}"),
            Tape::Free { id, len } => write!(f, "Free({id}, len {len})"),
            Tape::Computed(c) => write!(f, "{}({:?})", c.functional.label(), c.inputs),
            Tape::Splice(s) => write!(f, "{}⌢{:?}", s.0, s.1),
            Tape::Input(k) => write!(f, "Input({k})"),
        }
    }
}

impl From<Point> for Tape {
    fn from(p: Point) -> Self {
        Tape::Point(p)
    }
}

impl From<Prefix> for Tape {
    fn from(p: Prefix) -> Self {
        Tape::prefix(p)
    }
}

/// Reads of [`Tape::Input`] are forwarded to the enclosing frame.
trait Frame {
    fn read_input(&mut self, k: usize, pos: u64) -> Step;
}

/// The query interface a step procedure sees.
pub struct Ctx<'a> {
    tapes: &'a [Tape],
    uses: Vec<Option<u64>>,
    meter: &'a Meter<'a>,
    parent: Option<&'a mut (dyn Frame + 'a)>,
}

impl<'a> Ctx<'a> {
    /// Read bit `pos` of oracle tape `t`, charging one unit of fuel.
    pub fn read(&mut self, t: usize, pos: u64) -> Step {
        self.meter.charge(1)?;
        let tapes = self.tapes;
        let tape = tapes
            .get(t)
            .ok_or_else(|| Halt::Fault(Error::contract(format!("tape {t} out of range ({} tapes)", tapes.len()))))?;
        // Our own tapes were built by the frame that applied us.
        let b = self.resolve(tape, pos, self.parent.is_some())?;
        let u = &mut self.uses[t];
        *u = Some(u.map_or(pos, |m| m.max(pos)));
        Ok(b)
    }

    /// Charge `n` units of fuel for internal work.
    pub fn tick(&mut self, n: u64) -> Step<()> {
        self.meter.charge(n)
    }

    pub fn arity(&self) -> usize {
        self.tapes.len()
    }

    /// Tape `t` as seen from inside this step; reads through it record use here.
    pub fn input(&self, t: usize) -> Tape {
        Tape::Input(t)
    }

    /// Read bit `pos` of a tape built by this step; [`Tape::Input`] references resolve to this frame.
    pub fn read_tape(&mut self, tape: &Tape, pos: u64) -> Step {
        self.resolve(tape, pos, false)
    }

    /// `outer`: inputs inside `tape` refer to the parent frame rather than this one.
    fn resolve(&mut self, tape: &Tape, pos: u64, outer: bool) -> Step {
        match tape {
            Tape::Point(p) => Ok(p.bit(pos)),
            Tape::Prefix(p) => p.get(pos).ok_or(Halt::PrefixEnd { pos }),
            Tape::Free { id, len } => {
                if pos >= *len {
                    return Err(Halt::PrefixEnd { pos });
                }
                match self.meter.free.and_then(|a| a.get(&(*id, pos))) {
                    Some(&b) => Ok(b),
                    None if self.meter.free.is_some() => Err(Halt::Branch { tape: *id, pos }),
                    None => Err(Halt::Fault(Error::input("free tape read outside exhaustive search"))),
                }
            }
            Tape::Splice(s) => match s.0.get(pos) {
                Some(b) => Ok(b),
                None => self.resolve(&s.1, pos, outer),
            },
            Tape::Input(k) => {
                if outer {
                    match self.parent.as_deref_mut() {
                        Some(parent) => parent.read_input(*k, pos),
                        None => Err(Halt::Fault(Error::contract("input reference without an enclosing frame"))),
                    }
                } else {
                    self.read(*k, pos)
                }
            }
            Tape::Computed(c) => {
                self.meter.charge(1)?;
                let meter = self.meter;
                let owner: &mut dyn Frame = if outer {
                    match self.parent.as_deref_mut() {
                        Some(parent) => parent,
                        None => return Err(Halt::Fault(Error::contract("input reference without an enclosing frame"))),
                    }
                } else {
                    self
                };
                let mut sub = Ctx { tapes: &c.inputs, uses: vec![None; c.inputs.len()], meter, parent: Some(owner) };
                (c.functional.step)(&mut sub, pos)
            }
        }
    }
}

impl<'a> Frame for Ctx<'a> {
    fn read_input(&mut self, k: usize, pos: u64) -> Step {
        self.read(k, pos)
    }
}

type StepFn = dyn Fn(&mut Ctx<'_>, u64) -> Step + Send + Sync;

/// A monotone oracle functional: `arity` input tapes, one output sequence.
#[derive(Clone)]
pub struct Functional {
    label: Arc<str>,
    arity: usize,
    step: Arc<StepFn>,
    monitored: bool,
}

/// How an evaluation ended without a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Divergence {
    Fuel,
    PrefixEnd,
}

/// Result of [`evaluate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalOutcome {
    Converged { value: bool, uses: Vec<Option<u64>>, steps: u64 },
    Diverged { reason: Divergence, steps: u64 },
}

impl EvalOutcome {
    pub fn value(&self) -> Option<bool> {
        match self {
            EvalOutcome::Converged { value, .. } => Some(*value),
            EvalOutcome::Diverged { .. } => None,
        }
    }

    pub fn converged(&self) -> bool {
        matches!(self, EvalOutcome::Converged { .. })
    }

    pub fn steps(&self) -> u64 {
        match self {
            EvalOutcome::Converged { steps, .. } | EvalOutcome::Diverged { steps, .. } => *steps,
        }
    }
}

impl Functional {
    /// A trusted functional; the caller guarantees the conventions.
    pub fn new(
        label: impl Into<String>,
        arity: usize,
        step: impl Fn(&mut Ctx<'_>, u64) -> Step + Send + Sync + 'static,
    ) -> Self {
        Functional { label: Arc::from(label.into()), arity, step: Arc::new(step), monitored: false }
    }

    /// A user-supplied functional. Every converged evaluation at `x` is followed by a
    /// check that all `y < x` also converge within the same fuel.
    pub fn user(
        label: impl Into<String>,
        arity: usize,
        step: impl Fn(&mut Ctx<'_>, u64) -> Step + Send + Sync + 'static,
    ) -> Self {
        Functional { monitored: true, ..Functional::new(label, arity, step) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_monitored(&self) -> bool {
        self.monitored
    }

    /// Relabel without changing behaviour.
    pub fn named(mut self, label: impl Into<String>) -> Self {
        self.label = Arc::from(label.into());
        self
    }

    /// The lazily computed output tape `self(inputs)`.
    pub fn apply(&self, inputs: Vec<Tape>) -> Tape {
        Tape::Computed(Arc::new(Computed { functional: self.clone(), inputs }))
    }

    /// Run the step at `x` against an existing meter, without arity or closure checks.
    pub fn run(&self, tapes: &[Tape], x: u64, meter: &Meter<'_>) -> Step {
        meter.charge(1)?;
        let mut ctx = Ctx { tapes, uses: vec![None; tapes.len()], meter, parent: None };
        (self.step)(&mut ctx, x)
    }

    fn run_tracked(&self, tapes: &[Tape], x: u64, fuel: u64) -> Result<EvalOutcome> {
        let meter = Meter::new(fuel);
        let charged = meter.charge(1);
        let mut ctx = Ctx { tapes, uses: vec![None; tapes.len()], meter: &meter, parent: None };
        let out = charged.and_then(|_| (self.step)(&mut ctx, x));
        let uses = ctx.uses;
        match out {
            Ok(value) => Ok(EvalOutcome::Converged { value, uses, steps: meter.steps() }),
            Err(Halt::Fuel) => Ok(EvalOutcome::Diverged { reason: Divergence::Fuel, steps: meter.steps() }),
            Err(Halt::PrefixEnd { .. }) => {
                Ok(EvalOutcome::Diverged { reason: Divergence::PrefixEnd, steps: meter.steps() })
            }
            Err(Halt::Branch { .. }) => Err(Error::input("free tape read outside exhaustive search")),
            Err(Halt::Fault(e)) => Err(e),
        }
    }
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Functional({}, arity {})", self.label, self.arity)
    }
}

/// Evaluate `f` on `oracles` at position `x` with the given fuel.
///
/// Monitored functionals additionally have downward closure checked: a converged
/// evaluation at `x` whose smaller positions do not all converge is a contract error.
pub fn evaluate(f: &Functional, oracles: &[Tape], x: u64, fuel: u64) -> Result<EvalOutcome> {
    if oracles.len() != f.arity {
        return Err(Error::input(format!(
            "{} expects {} oracle(s), got {}",
            f.label,
            f.arity,
            oracles.len()
        )));
    }
    let out = f.run_tracked(oracles, x, fuel)?;
    if f.monitored && out.converged() {
        for y in 0..x {
            if !f.run_tracked(oracles, y, fuel)?.converged() {
                return Err(Error::contract(format!(
                    "{} converges at {x} but not at {y} within fuel {fuel}",
                    f.label
                )));
            }
        }
    }
    Ok(out)
}

/// Evaluate at every position below `x` and report the first convergence gap, if any.
pub fn check_downward_closure(f: &Functional, oracles: &[Tape], x: u64, fuel: u64) -> Result<()> {
    let top = evaluate(&Functional { monitored: false, ..f.clone() }, oracles, x, fuel)?;
    if !top.converged() {
        return Ok(());
    }
    for y in 0..x {
        if !f.run_tracked(oracles, y, fuel)?.converged() {
            return Err(Error::contract(format!("{} converges at {x} but not at {y} within fuel {fuel}", f.label)));
        }
    }
    Ok(())
}

/// Outcome of one leaf of an exhaustive search.
pub struct Leaf<T> {
    pub assignment: Assignment,
    pub outcome: Step<T>,
}

/// Run `body` against every consistent assignment of the free tapes it reads.
///
/// Whenever `body` reads an unassigned free position it is rerun with both values for
/// that position, so the leaves partition all assignments into the classes the body
/// can distinguish. More than `max_leaves` leaves is a resource error.
pub fn exhaust<T>(
    fuel: u64,
    max_leaves: usize,
    mut body: impl FnMut(&Meter<'_>) -> Step<T>,
) -> Result<Vec<Leaf<T>>> {
    let mut stack = vec![Assignment::new()];
    let mut leaves = Vec::new();
    while let Some(a) = stack.pop() {
        let meter = Meter::with_assignment(fuel, &a);
        match body(&meter) {
            Err(Halt::Branch { tape, pos }) => {
                for b in [true, false] {
                    let mut next = a.clone();
                    next.insert((tape, pos), b);
                    stack.push(next);
                }
            }
            outcome => {
                leaves.push(Leaf { assignment: a, outcome });
                if leaves.len() > max_leaves {
                    return Err(Error::resource(format!(
                        "exhaustive search exceeded {max_leaves} leaves (frontier {})",
                        stack.len()
                    )));
                }
            }
        }
    }
    Ok(leaves)
}
