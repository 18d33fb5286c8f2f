//! Defeating a proposed reduction from `j`-color thin sets to `k`-color thin sets.
//!
//! `f` is built one value per stage from the currently valid colors. An action
//! stage finds a block `F`, homogeneous for `Φ(f)` above the earlier blocks, that makes
//! `Ψ` newly put some `x` into its output; the color `f(x)` is then declared invalid.
//! At most `j - 1` colors can be invalidated, so at most `j - 1` stages act.

use super::{join, StageLog, StageRecord};
use crate::error::{Error, Result};
use crate::kernel::{evaluate, Divergence, EvalOutcome, Functional, Halt, Meter, Prefix, Step, Tape};
use crate::problems::{coloring_extent, coloring_functional, decode_color, encoded_bit, read_color, Coloring, Colors};
use std::collections::BTreeSet;

#[derive(Clone, Debug)]
pub struct Ts1Config {
    pub j: u64,
    pub k: u64,
    /// `f` is defined on `[0, stages)`; this is also the horizon of the final check.
    pub stages: u64,
    pub fuel: u64,
}

impl Ts1Config {
    pub fn new(j: u64, k: u64, stages: u64) -> Self {
        Ts1Config { j, k, stages, fuel: 10_000 }
    }
}

#[derive(Clone, Debug)]
pub struct Ts1Run {
    /// `f` on `[0, stages)`.
    pub table: Vec<u64>,
    /// The blocks acted with, and the element each made `Ψ` output.
    pub blocks: Vec<Vec<u64>>,
    pub witnesses: Vec<u64>,
    pub valid: Vec<u64>,
    pub log: StageLog,
    /// `⋃ blocks ∪ H` with `H` one `Φ(f)`-color class above the blocks; empty when none exists.
    pub assembled: Vec<u64>,
    /// Distinct `Φ(f)`-colors on `assembled`.
    pub phi_colors: BTreeSet<u64>,
    /// `Ψ(assembled)` below the horizon and the `f`-colors it uses.
    pub psi_output: Vec<u64>,
    pub psi_colors: BTreeSet<u64>,
    /// Set when the final check could not be carried out.
    pub inconclusive: Option<String>,
}

impl Ts1Run {
    /// `f` as a coloring; past the table it takes the last valid color.
    pub fn coloring(&self, j: u64) -> Coloring {
        let tail = self.valid[0];
        Coloring::from_table("ts1-diagonal", 1, Colors::Finite(j), self.table.clone(), Coloring::constant(1, j, tail))
    }

    pub fn actions(&self) -> usize {
        self.blocks.len()
    }
}

fn code_prefix(table: &[u64], j: u64) -> Prefix {
    let len = coloring_extent(1, Colors::Finite(j), table.len() as u64);
    let bits = (0..len)
        .map(|pos| encoded_bit(Colors::Finite(j), 1, pos, |xs| Ok(table[xs[0] as usize])).expect("in range"))
        .collect();
    Prefix::new(bits)
}

fn indicator(set: &[u64], len: u64) -> Prefix {
    Prefix::new((0..len).map(|x| set.contains(&x)).collect())
}

/// `Φ(f)`-color of `y`, or `None` if `Φ` needs more of `f` than is defined.
fn phi_color(out: &Tape, k: u64, y: u64, fuel: u64) -> Result<Option<u64>> {
    let step: Step<u64> = decode_color(Colors::Finite(k), &[y], |pos| out.bit(pos, &Meter::new(fuel)));
    match step {
        Ok(c) => Ok(Some(c)),
        Err(Halt::PrefixEnd { .. }) => Ok(None),
        Err(Halt::Fuel) => Err(Error::resource(format!("Φ(f)({y}) ran out of fuel {fuel}"))),
        Err(Halt::Fault(e)) => Err(e),
        Err(Halt::Branch { .. }) => Err(Error::input("free tape read outside exhaustive search")),
    }
}

/// `Ψ(set)(x)`, reading the indicator of `set` up to its maximum only.
fn psi_at(psi: &Functional, set: &[u64], x: u64, fuel: u64) -> Result<Option<bool>> {
    let len = set.iter().max().map_or(0, |m| m + 1);
    match evaluate(psi, &[Tape::prefix(indicator(set, len))], x, fuel)? {
        EvalOutcome::Converged { value, .. } => Ok(Some(value)),
        EvalOutcome::Diverged { reason: Divergence::PrefixEnd, .. } => Ok(None),
        EvalOutcome::Diverged { .. } => Err(Error::resource(format!("Ψ({set:?})({x}) ran out of fuel {fuel}"))),
    }
}

/// Run the diagonalization against `Φ` (code of a `j`-coloring to code of a
/// `k`-coloring) and `Ψ` (set to set).
///
/// Blocks are searched among color classes of `Φ(f_{s-1})` in the window above the
/// earlier blocks, cut at each possible maximum; the least maximum wins, then the
/// least color, then the least `x`.
pub fn ts1_diagonalizer(phi: &Functional, psi: &Functional, cfg: &Ts1Config) -> Result<Ts1Run> {
    let Ts1Config { j, k, stages, fuel } = *cfg;
    if !(1 <= j && j < k) {
        return Err(Error::input(format!("need 1 <= j < k, got j={j} k={k}")));
    }
    if phi.arity() != 1 || psi.arity() != 1 {
        return Err(Error::input("Φ and Ψ must each read one tape"));
    }
    let mut valid: Vec<u64> = (0..j).collect();
    let mut table: Vec<u64> = Vec::new();
    let mut blocks: Vec<Vec<u64>> = Vec::new();
    let mut witnesses = Vec::new();
    let mut union: Vec<u64> = Vec::new();
    let mut log = StageLog::new(format!("ts1(j={j},k={k})"), false);

    for s in 0..stages {
        let mut acted = None;
        if s > 0 && (blocks.len() as u64) < j - 1 {
            let out = phi.apply(vec![Tape::prefix(code_prefix(&table, j))]);
            let floor = union.last().map_or(0, |m| m + 1);
            let mut colored: Vec<(u64, u64)> = Vec::new();
            'search: for top in floor..=s {
                let Some(c) = phi_color(&out, k, top, fuel)? else { continue };
                colored.push((top, c));
                let block: Vec<u64> = colored.iter().filter(|&&(_, d)| d == c).map(|&(y, _)| y).collect();
                let mut with = union.clone();
                with.extend(&block);
                for x in 0..s {
                    if !valid.contains(&table[x as usize]) {
                        continue;
                    }
                    if psi_at(psi, &union, x, fuel)?.is_none() && psi_at(psi, &with, x, fuel)? == Some(true) {
                        acted = Some((block, x, c));
                        break 'search;
                    }
                }
            }
        }
        let mut record = StageRecord::new(s, "extend");
        if let Some((block, x, c)) = acted {
            let dead = table[x as usize];
            valid.retain(|&v| v != dead);
            record = StageRecord::new(s, "action")
                .acted(format!("F={{{}}} x={x} phi-color={c}", join(&block)))
                .invalidated(vec![dead]);
            union.extend(&block);
            blocks.push(block);
            witnesses.push(x);
        }
        let value = valid[0];
        table.push(value);
        log.push(record.markers(valid.clone()).note(format!("f({s})={value}")))?;
    }

    let mut run = Ts1Run {
        table,
        blocks,
        witnesses,
        valid,
        log,
        assembled: Vec::new(),
        phi_colors: BTreeSet::new(),
        psi_output: Vec::new(),
        psi_colors: BTreeSet::new(),
        inconclusive: None,
    };
    assemble(phi, psi, cfg, &mut run, &union)?;
    Ok(run)
}

/// Close the blocks off with the largest `Φ(f)`-class above them and read `Ψ` on the result.
fn assemble(phi: &Functional, psi: &Functional, cfg: &Ts1Config, run: &mut Ts1Run, union: &[u64]) -> Result<()> {
    let n = cfg.stages;
    let out = phi.apply(vec![Tape::prefix(code_prefix(&run.table, cfg.j))]);
    let floor = union.last().map_or(0, |m| m + 1);
    let mut classes: Vec<Vec<u64>> = vec![Vec::new(); cfg.k as usize];
    for y in floor..n {
        if let Some(c) = phi_color(&out, cfg.k, y, cfg.fuel)? {
            classes[c as usize].push(y);
        }
    }
    let best = classes.iter().enumerate().max_by(|(a, x), (b, y)| x.len().cmp(&y.len()).then(b.cmp(a)));
    let Some((_, h)) = best.filter(|(_, h)| !h.is_empty()) else {
        run.inconclusive = Some(format!("no Φ(f)-homogeneous elements in [{floor}, {n})"));
        return Ok(());
    };
    let mut t = union.to_vec();
    t.extend(h);
    for &y in &t {
        if let Some(c) = phi_color(&out, cfg.k, y, cfg.fuel)? {
            run.phi_colors.insert(c);
        }
    }
    let tape = Tape::prefix(indicator(&t, n));
    for x in 0..n {
        if evaluate(psi, std::slice::from_ref(&tape), x, cfg.fuel)?.value() == Some(true) {
            run.psi_output.push(x);
            run.psi_colors.insert(run.table[x as usize]);
        }
    }
    run.assembled = t;
    Ok(())
}

fn recolor(label: &str, j: u64, k: u64, map: impl Fn(u64, u64) -> u64 + Send + Sync + 'static) -> Functional {
    coloring_functional(label, 1, 1, Colors::Finite(k), move |ctx, xs| {
        Ok(map(xs[0], read_color(ctx, 0, Colors::Finite(j), xs)?) % k)
    })
}

/// Toy `(name, Φ, Ψ)` pairs for `j`- to `k`-color runs.
pub fn ts1_toy_pairs(j: u64, k: u64) -> Vec<(String, Functional, Functional)> {
    let echo = Functional::new("echo", 1, |ctx, x| ctx.read(0, x));
    vec![
        ("identity/echo".into(), recolor("identity", j, k, |_, c| c), echo),
        (
            "identity/silent".into(),
            recolor("identity", j, k, |_, c| c),
            Functional::new("silent", 1, |ctx, x| ctx.read(0, x + (1 << 40))),
        ),
        (
            "shift/next".into(),
            recolor("shift", j, k, move |_, c| c + 1),
            Functional::new("next", 1, |ctx, x| ctx.read(0, x + 1)),
        ),
        (
            "parity/skip".into(),
            recolor("parity", j, k, move |y, c| c + (y % 2) * (k - 1)),
            Functional::new("skip", 1, |ctx, x| Ok(ctx.read(0, x)? && ctx.read(0, x + 2)?)),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(name: &str) -> (Functional, Functional) {
        let (_, phi, psi) = ts1_toy_pairs(2, 3).into_iter().find(|(n, _, _)| n == name).unwrap();
        (phi, psi)
    }

    fn run(name: &str) -> Ts1Run {
        let (phi, psi) = pair(name);
        ts1_diagonalizer(&phi, &psi, &Ts1Config::new(2, 3, 32)).unwrap()
    }

    #[test]
    fn echo_acts_once_at_the_first_stage() {
        let r = run("identity/echo");
        assert_eq!(r.blocks, vec![vec![0]]);
        assert_eq!(r.witnesses, vec![0]);
        assert_eq!(r.valid, vec![1]);
        assert_eq!(r.table[0], 0);
        assert!(r.table[1..].iter().all(|&c| c == 1));
        assert_eq!(r.phi_colors.len(), 2);
        assert_eq!(r.psi_colors, BTreeSet::from([0, 1]));
    }

    #[test]
    fn silent_psi_never_acts() {
        let r = run("identity/silent");
        assert_eq!(r.actions(), 0);
        assert!(r.table.iter().all(|&c| c == 0));
        assert!(r.psi_output.is_empty());
        assert!(r.phi_colors.len() <= 2);
    }

    #[test]
    fn every_toy_respects_the_bounds() {
        for (name, phi, psi) in ts1_toy_pairs(2, 3) {
            let r = ts1_diagonalizer(&phi, &psi, &Ts1Config::new(2, 3, 32)).unwrap();
            assert!(r.actions() <= 1, "{name}");
            assert!(r.inconclusive.is_none(), "{name}");
            assert!(r.phi_colors.len() <= 2, "{name}: {:?}", r.phi_colors);
            if r.actions() == 1 {
                assert_eq!(r.valid.len(), 1, "{name}");
                assert_eq!(r.psi_colors.len(), 2, "{name}: {:?}", r.psi_output);
            }
        }
    }

    #[test]
    fn more_colors_allow_more_actions() {
        let (phi, psi) = {
            let (_, phi, psi) = ts1_toy_pairs(3, 4).into_iter().next().unwrap();
            (phi, psi)
        };
        let r = ts1_diagonalizer(&phi, &psi, &Ts1Config::new(3, 4, 32)).unwrap();
        assert_eq!(r.actions(), 2);
        assert_eq!(r.valid.len(), 1);
        assert_eq!(r.psi_colors.len(), 3);
        assert!(r.phi_colors.len() <= 3);
    }

    #[test]
    fn rejects_j_not_below_k() {
        let (phi, psi) = pair("identity/echo");
        assert!(ts1_diagonalizer(&phi, &psi, &Ts1Config::new(3, 3, 8)).is_err());
    }
}
