//! Cutting a positive-measure tree against a proposed measure-lowering reduction.
//!
//! `T` is the full tree minus finitely many cuts. A cut made at stage `s` for the
//! coordinates `xs` and pattern `α` removes every string longer than `s` that agrees
//! with `α` on `xs`. The coordinates of distinct cuts are disjoint, so each cut
//! multiplies the measure by exactly `1 - 2^-a`.

use super::{staged, StageLog, StageRecord};
use crate::error::{Error, Result};
use crate::kernel::{codec::identity_fn, evaluate, Functional, Halt, Prefix, Tape};
use crate::measure::{least_dyadic_below, show, Exact, Measure};
use crate::catalog::MAX_TREE_DEPTH;
use crate::problems::{node_at, node_index, tree_extent, Tree};
use num_traits::One;
use std::sync::Arc;

/// Parameters of a cutter run.
#[derive(Clone, Debug)]
pub struct CutterConfig {
    pub p: Exact,
    pub q: Exact,
    pub stages: u64,
    /// Deepest level of `Φ(T_s)` examined; the observed height is capped here.
    pub view_depth: usize,
    pub fuel: u64,
}

impl CutterConfig {
    pub fn new(p: Exact, q: Exact, stages: u64) -> Self {
        CutterConfig { p, q, stages, view_depth: 12, fuel: 10_000 }
    }
}

/// One Case-2 cut.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutterAction {
    pub stage: u64,
    pub xs: Vec<u64>,
    pub pattern: Vec<bool>,
    /// Height of `Φ(T_s)` and its member count there when the cut was made.
    pub phi_height: usize,
    pub phi_count: u64,
    /// How many of those members `Ψ` sent to `pattern`.
    pub agreeing: u64,
}

#[derive(Clone, Debug)]
pub struct CutterRun {
    pub a: u32,
    pub actions: Vec<CutterAction>,
    pub log: StageLog,
    pub tree: Tree,
    /// `μ(T)` at level `stages`, from the cut product.
    pub measure: Exact,
    /// Last observed height of `Φ(T)` and its measure there.
    pub phi_height: usize,
    pub phi_measure: Exact,
}

fn cut_out(actions: &[CutterAction], s: &Prefix) -> bool {
    actions.iter().any(|act| {
        (act.stage as usize) < s.len()
            && act.xs.iter().zip(&act.pattern).all(|(&x, &b)| s.get(x) == Some(b))
    })
}

fn tree_of(actions: Arc<Vec<CutterAction>>) -> Tree {
    Tree::new("cutter", move |s| !cut_out(&actions, s))
}

/// The code of `T_s`: node bits for strings of length at most `s`, nothing beyond.
fn stage_tape(actions: &[CutterAction], s: u64) -> Tape {
    let actions = Arc::new(actions.to_vec());
    let end = tree_extent((s as usize).min(MAX_TREE_DEPTH));
    Functional::new(format!("T_{s}"), 0, move |_, pos| {
        if pos >= end {
            return Err(Halt::PrefixEnd { pos });
        }
        let node = node_at(pos);
        Ok(!(1..=node.len()).any(|l| cut_out(&actions, &node.truncate(l))))
    })
    .apply(Vec::new())
}

/// `Φ(T_s)` level by level: the deepest fully converged level up to `cap`.
fn observe(phi: &Functional, t: &Tape, cap: usize, fuel: u64) -> Result<(usize, Vec<Prefix>)> {
    let mut level = vec![Prefix::empty()];
    for n in 1..=cap {
        let mut next = Vec::new();
        for sigma in &level {
            for b in [false, true] {
                let child = sigma.child(b);
                match staged(evaluate(phi, std::slice::from_ref(t), node_index(&child), fuel)?, phi.label())? {
                    Some(true) => next.push(child),
                    Some(false) => {}
                    None => return Ok((n - 1, level)),
                }
            }
        }
        level = next;
    }
    Ok((cap, level))
}

/// Run the cutter for `cfg.stages` stages against `Φ` (tree code to tree code) and
/// `Ψ` (path, and optionally the current tree code, to path).
///
/// At stage `s` the least `a` coordinates not yet acted for are `xs`. Case 2 fires
/// when `Φ(T_s)` still has at least `q · 2^n` strings at its height `n`, every `xs`
/// is below `s`, and `Ψ` converges on all of them at every `xs`. The pattern with the
/// most agreeing strings (least on ties) is then cut.
pub fn qwwkl_cutter(phi: &Functional, psi: &Functional, cfg: &CutterConfig) -> Result<CutterRun> {
    if !(cfg.p < cfg.q && cfg.q < Exact::one() && cfg.p > Exact::dyadic(0, 0)) {
        return Err(Error::input(format!("need 0 < p < q < 1, got p={} q={}", show(&cfg.p), show(&cfg.q))));
    }
    if phi.arity() != 1 {
        return Err(Error::input(format!("{} must read one tree code", phi.label())));
    }
    if !(1..=2).contains(&psi.arity()) {
        return Err(Error::input(format!("{} must read a path and optionally the tree", psi.label())));
    }
    let a = least_dyadic_below(&(cfg.q.clone() - cfg.p.clone())).expect("q > p");
    let cut_factor = Exact::one() - Exact::dyadic(1, a);
    let mut log = StageLog::new(format!("qwwkl(p={},q={},a={a})", show(&cfg.p), show(&cfg.q)), true);
    let mut actions: Vec<CutterAction> = Vec::new();
    let mut next_x = 0u64;
    let mut measure = Exact::one();
    let mut last_view = (0usize, Exact::one());

    for s in 0..cfg.stages {
        let xs: Vec<u64> = (next_x..next_x + a as u64).collect();
        let t = stage_tape(&actions, s);
        let cap = cfg.view_depth.min(s as usize);
        let (n, level) = observe(phi, &t, cap, cfg.fuel)?;
        let count = level.len() as u64;
        let phi_measure = Exact::dyadic(count, n as u32);
        last_view = (n, phi_measure.clone());
        let view = format!("n={n} phi={}", show(&phi_measure));
        let record = StageRecord::new(s, "").markers(xs.clone()).measures(measure.clone(), measure.clone());

        if phi_measure < cfg.q {
            log.push(StageRecord { case: "case-1:sparse".into(), note: view, ..record })?;
            continue;
        }
        if *xs.last().expect("a >= 1") >= s {
            log.push(StageRecord { case: "case-1:unready".into(), note: view, ..record })?;
            continue;
        }
        let mut tallies = vec![0u64; 1 << a];
        let mut diverged = None;
        'paths: for tau in &level {
            let mut tapes = vec![Tape::prefix(tau.clone())];
            if psi.arity() == 2 {
                tapes.push(t.clone());
            }
            let mut idx = 0usize;
            for (j, &x) in xs.iter().enumerate() {
                match staged(evaluate(psi, &tapes, x, cfg.fuel)?, psi.label())? {
                    Some(b) => idx |= (b as usize) << j,
                    None => {
                        diverged = Some((tau.clone(), x));
                        break 'paths;
                    }
                }
            }
            tallies[idx] += 1;
        }
        if let Some((tau, x)) = diverged {
            log.push(StageRecord { case: "case-1:diverged".into(), note: format!("{view} tau={tau} x={x}"), ..record })?;
            continue;
        }
        let (best, &agreeing) =
            tallies.iter().enumerate().max_by(|(i, c), (j, d)| c.cmp(d).then(j.cmp(i))).expect("2^a patterns");
        if agreeing << a < count {
            return Err(Error::contract(format!("stage {s}: best pattern has {agreeing} of {count} strings")));
        }
        let pattern: Vec<bool> = (0..a).map(|j| (best >> j) & 1 == 1).collect();
        let before = measure.clone();
        measure = measure * cut_factor.clone();
        let shown: String = pattern.iter().map(|&b| if b { '1' } else { '0' }).collect();
        log.push(
            StageRecord::new(s, "case-2")
                .acted(format!("xs={} alpha={shown}", super::join(&xs)))
                .measures(before, measure.clone())
                .markers(xs.clone())
                .note(format!("{view} agree={agreeing}/{count}")),
        )?;
        actions.push(CutterAction { stage: s, xs, pattern, phi_height: n, phi_count: count, agreeing });
        next_x += a as u64;
    }

    let tree = tree_of(Arc::new(actions.clone()));
    Ok(CutterRun { a, actions, log, tree, measure, phi_height: last_view.0, phi_measure: last_view.1 })
}

/// Toy functionals for cutter runs: `Φ` names and `Ψ` names.
///
/// `Φ`: `identity`, `full` (ignores `T`), `dead` (only the root).
/// `Ψ`: `zeros`, `echo` (copies the path), `tree-xor` (path bit xor tree-code bit).
pub fn cutter_psi(name: &str) -> Result<Functional> {
    match name {
        "zeros" => Ok(Functional::new("zeros", 1, |_, _| Ok(false))),
        "echo" => Ok(identity_fn().named("echo")),
        "tree-xor" => Ok(Functional::new("tree-xor", 2, |ctx, x| Ok(ctx.read(0, x)? ^ ctx.read(1, x)?))),
        "identity" | "full" | "dead" => Ok(match name {
            "identity" => identity_fn(),
            "full" => Functional::new("full", 1, |_, _| Ok(true)),
            _ => Functional::new("dead", 1, |_, _| Ok(false)),
        }),
        _ => Err(Error::input(format!("unknown cutter functional {name:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::q;
    use crate::problems::measure_at_level;

    fn run(phi: &str, psi: &str, stages: u64) -> CutterRun {
        let cfg = CutterConfig::new(q(1, 2), q(3, 4), stages);
        qwwkl_cutter(&cutter_psi(phi).unwrap(), &cutter_psi(psi).unwrap(), &cfg).unwrap()
    }

    #[test]
    fn half_to_three_quarters_uses_three_coordinates() {
        let r = run("identity", "zeros", 4);
        assert_eq!(r.a, 3);
    }

    #[test]
    fn constant_psi_cuts_by_seven_eighths_until_sparse() {
        let r = run("identity", "zeros", 24);
        let stages: Vec<u64> = r.actions.iter().map(|x| x.stage).collect();
        assert_eq!(stages, vec![3, 6, 9]);
        for rec in r.log.with_case("case-2") {
            assert_eq!(rec.after.clone().unwrap(), rec.before.clone().unwrap() * q(7, 8));
        }
        assert_eq!(r.measure, q(343, 512));
        for act in &r.actions {
            assert!(Exact::dyadic(act.phi_count, act.phi_height as u32) >= q(3, 4));
            assert_eq!(act.pattern, vec![false; 3]);
        }
        // The cut product agrees with a direct count.
        assert_eq!(measure_at_level::<Exact>(&r.tree, 12).unwrap(), r.measure);
        assert!(r.phi_measure < q(3, 4));
        assert!(r.log.records().iter().skip(10).all(|x| x.case == "case-1:sparse"));
    }

    #[test]
    fn sparse_image_never_cuts() {
        let r = run("dead", "zeros", 16);
        assert!(r.actions.is_empty());
        assert_eq!(r.measure, Exact::one());
        assert_eq!(measure_at_level::<Exact>(&r.tree, 10).unwrap(), Exact::one());
    }

    #[test]
    fn full_image_keeps_cutting() {
        let r = run("full", "zeros", 16);
        assert_eq!(r.actions.len(), 5);
        assert_eq!(measure_at_level::<Exact>(&r.tree, 16).unwrap(), r.measure);
    }

    #[test]
    fn echo_waits_for_the_path_to_reach_the_coordinates() {
        let r = run("identity", "echo", 24);
        assert!(!r.actions.is_empty());
        for act in &r.actions {
            assert!(act.xs.iter().all(|&x| (x as usize) < act.phi_height));
        }
    }

    #[test]
    fn reading_the_tree_is_staged() {
        let r = run("identity", "tree-xor", 24);
        assert!(!r.actions.is_empty());
        assert_eq!(r.log.len(), 24);
    }

    #[test]
    fn digest_is_reproducible() {
        assert_eq!(run("identity", "zeros", 32).log.digest(), run("identity", "zeros", 32).log.digest());
    }

    #[test]
    fn rejects_bad_parameters() {
        let cfg = CutterConfig::new(q(3, 4), q(1, 2), 4);
        assert!(qwwkl_cutter(&identity_fn(), &identity_fn(), &cfg).is_err());
    }
}
