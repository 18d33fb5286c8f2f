use super::products::{parallel_product, seq, INNER_FUEL};
use super::witness::{Kind, Witness};
use crate::error::{Error, Result};
use crate::kernel::codec::{column_tape, even_tape, interleave_tape, odd_tape};
use crate::kernel::{cantor_unpair, exhaust, Functional, Halt, Point, Prefix, Tape};
use crate::problems::{materialize, ProblemSpec, Tolerance};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// Hypotheses for folding `⟨Q,P⟩ ≤ P` into `SeqQ ≤ P`.
#[derive(Clone)]
pub struct SquashConfig {
    pub q: ProblemSpec,
    pub p: ProblemSpec,
    /// Reduces `⟨Q,P⟩` to `P`; its forward reads the pair `A ⊕ B`.
    pub witness: Witness,
    /// Padding instance `C` for `P`.
    pub default: Point,
    /// Highest stage the marker search may reach.
    pub stages: u64,
    /// Fuel for one evaluation during marker search.
    pub fuel: u64,
    /// Largest candidate marker tried before giving up.
    pub max_marker: u64,
    /// Leaf budget for one exhaustive check.
    pub max_leaves: usize,
    /// Horizon at which `P`-solutions are checked when verifying `SeqQ` at a horizon.
    pub target_horizon: Arc<dyn Fn(u64) -> u64 + Send + Sync>,
}

impl SquashConfig {
    pub fn new(q: &ProblemSpec, p: &ProblemSpec, witness: &Witness) -> Result<SquashConfig> {
        if !p.is_total() || !q.is_total() {
            return Err(Error::input(format!(
                "squashing needs total problems; {} total: {}, {} total: {}",
                q.name(),
                q.is_total(),
                p.name(),
                p.is_total()
            )));
        }
        if p.tolerance().is_none() {
            return Err(Error::input(format!("{} has no registered finite tolerance", p.name())));
        }
        let pair = parallel_product(q, p).name();
        if witness.source.name() != pair || witness.target.name() != p.name() {
            return Err(Error::input(format!(
                "{} reduces {} to {}, squashing needs {pair} to {}",
                witness.label,
                witness.source.name(),
                witness.target.name(),
                p.name()
            )));
        }
        Ok(SquashConfig {
            q: q.clone(),
            p: p.clone(),
            witness: witness.clone(),
            default: Point::zeros(),
            stages: 4096,
            fuel: 100_000,
            max_marker: 1 << 16,
            max_leaves: 1 << 16,
            target_horizon: Arc::new(|n| n),
        })
    }

    pub fn with_default(mut self, c: Point) -> Self {
        self.default = c;
        self
    }

    pub fn with_stages(mut self, stages: u64) -> Self {
        self.stages = stages;
        self
    }

    pub fn with_fuel(mut self, fuel: u64) -> Self {
        self.fuel = fuel;
        self
    }

    pub fn with_max_leaves(mut self, max_leaves: usize) -> Self {
        self.max_leaves = max_leaves;
        self
    }

    pub fn with_target_horizon(mut self, f: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Self {
        self.target_horizon = Arc::new(f);
        self
    }

    fn tolerance(&self) -> Tolerance {
        self.p.tolerance().expect("checked in SquashConfig::new")
    }
}

impl std::fmt::Debug for SquashConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SquashConfig({:?}, stages {}, fuel {})", self.witness, self.stages, self.fuel)
    }
}

/// `(C↾m_i)⌢Φ(A_i, (C↾m_{i+1})⌢Φ(A_{i+1}, … Φ(A_s, C↾n)))`.
///
/// `markers` holds `m_0..=m_s`; the innermost `B_{s+1}` is cut to `C↾n`.
fn chain(phi: &Functional, c: &Point, markers: &[u64], i: u64, s: u64, n: u64, a: &dyn Fn(u64) -> Tape) -> Tape {
    let mut b = Tape::prefix(c.prefix(n as usize));
    for j in (i..=s).rev() {
        let out = phi.apply(vec![interleave_tape(a(j), b)]);
        b = if j == i { out } else { Tape::splice(c.prefix(markers[j as usize] as usize), out) };
    }
    b
}

/// The marker sequence, computed on demand and never from instance data.
pub struct Markers {
    phi: Functional,
    default: Point,
    stages: u64,
    fuel: u64,
    max_marker: u64,
    max_leaves: usize,
    cache: Mutex<Vec<u64>>,
    /// `(i, x)` to the chain tape over the running step's family input.
    chains: Mutex<HashMap<(u64, u64), Tape>>,
}

impl Markers {
    pub fn new(cfg: &SquashConfig) -> Markers {
        Markers {
            phi: cfg.witness.forward.clone(),
            default: cfg.default.clone(),
            stages: cfg.stages,
            fuel: cfg.fuel,
            max_marker: cfg.max_marker,
            max_leaves: cfg.max_leaves,
            cache: Mutex::new(vec![0]),
            chains: Mutex::new(HashMap::new()),
        }
    }

    /// `m_0, …, m_count`.
    pub fn upto(&self, count: u64) -> Result<Vec<u64>> {
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        while (cache.len() as u64) <= count {
            let s = cache.len() as u64 - 1;
            if s >= self.stages {
                return Err(Error::resource(format!("marker search needs stage {s}, bound is {}", self.stages)));
            }
            let next = self.search_stage(&cache, s)?;
            cache.push(next);
        }
        Ok(cache[..=count as usize].to_vec())
    }

    /// Least `n` such that every chain `i ≤ s` converges at `s` for all `σ_i..σ_s ∈ 2^n`.
    fn search_stage(&self, markers: &[u64], s: u64) -> Result<u64> {
        let start = (markers[s as usize] + 1).max(s + 1);
        'candidate: for n in start..=self.max_marker {
            // Chains from every `i ≤ s` share their inner levels; build outward once.
            let mut b = Tape::prefix(self.default.prefix(n as usize));
            for i in (0..=s).rev() {
                let out = self.phi.apply(vec![interleave_tape(Tape::Free { id: i as u32, len: n }, b.clone())]);
                let leaves = exhaust(self.fuel, self.max_leaves, |meter| out.bit(s, meter)).map_err(|e| {
                    Error::resource(format!("stage {s}, candidate {n}, chain from {i}: {}", e.message()))
                })?;
                for leaf in &leaves {
                    match &leaf.outcome {
                        Ok(_) => {}
                        Err(Halt::PrefixEnd { .. }) => continue 'candidate,
                        Err(Halt::Fuel) => {
                            return Err(Error::resource(format!(
                                "stage {s}, candidate {n}, chain from {i}: fuel {} exhausted ({} leaves explored)",
                                self.fuel,
                                leaves.len()
                            )))
                        }
                        Err(Halt::Fault(e)) => return Err(e.clone()),
                        Err(Halt::Branch { .. }) => unreachable!("exhaust resolves branches"),
                    }
                }
                if i > 0 {
                    b = Tape::splice(self.default.prefix(markers[i as usize] as usize), out);
                }
            }
            return Ok(n);
        }
        Err(Error::resource(format!("stage {s}: no marker up to {}", self.max_marker)))
    }
}

/// Markers `m_0..=m_count` for a configuration.
pub fn squash_markers(cfg: &SquashConfig, count: u64) -> Result<Vec<u64>> {
    Markers::new(cfg).upto(count)
}

fn fault(e: Error) -> Halt {
    Halt::Fault(e)
}

/// `B_i` as a functional of the family tape.
fn b_functional(markers: Arc<Markers>, i: u64) -> Functional {
    Functional::new(format!("B{i}"), 1, move |ctx, x| {
        let ms = markers.upto((x + 1).max(i)).map_err(fault)?;
        if x < ms[i as usize] {
            return Ok(markers.default.bit(x));
        }
        let t = markers.chains.lock().unwrap_or_else(|e| e.into_inner()).get(&(i, x)).cloned();
        let t = match t {
            Some(t) => t,
            None => {
                let family = |j: u64| column_tape(Tape::Input(0), j);
                let t = chain(&markers.phi, &markers.default, &ms[..=x as usize], i, x, ms[x as usize + 1], &family);
                markers.chains.lock().unwrap_or_else(|e| e.into_inner()).insert((i, x), t.clone());
                t
            }
        };
        ctx.read_tape(&t, x)
    })
}

/// Materialized `B_0 … B_{count-1}` together with the markers that produced them.
#[derive(Debug, Clone)]
pub struct SquashTable {
    pub markers: Vec<u64>,
    pub rows: Vec<Prefix>,
}

/// Materialize `B_0..B_{count-1}` below `horizon` and check each against its defining identity.
pub fn squash_forward(cfg: &SquashConfig, markers: &Arc<Markers>, family: &Point, count: u64, horizon: u64) -> Result<SquashTable> {
    let ms = markers.upto(horizon.max(count) + 1)?;
    let fam = Tape::Point(family.clone());
    let mut rows = Vec::new();
    for i in 0..count {
        let bi = b_functional(markers.clone(), i).apply(vec![fam.clone()]);
        let row = bi.materialize(horizon, INNER_FUEL).map_err(|(pos, h)| halt_error(&format!("B{i}"), pos, h))?;
        // Independent route: Φ(A_i, B_{i+1}) with B_{i+1} unfolded lazily.
        let next = b_functional(markers.clone(), i + 1).apply(vec![fam.clone()]);
        let rhs = cfg.witness.forward.apply(vec![interleave_tape(column_tape(fam.clone(), i), next)]);
        for x in 0..horizon {
            let want = if x < ms[i as usize] {
                cfg.default.bit(x)
            } else {
                let meter = crate::kernel::Meter::new(INNER_FUEL);
                rhs.bit(x, &meter).map_err(|h| halt_error(&format!("Φ(A{i},B{})", i + 1), x, h))?
            };
            if row.get(x) != Some(want) {
                return Err(Error::contract(format!(
                    "B{i}({x}) = {:?} but the defining identity gives {want} (markers {:?})",
                    row.get(x),
                    &ms[..=(i as usize + 1)]
                )));
            }
        }
        rows.push(row);
    }
    Ok(SquashTable { markers: ms, rows })
}

fn halt_error(what: &str, pos: u64, h: Halt) -> Error {
    match h {
        Halt::Fault(e) => e,
        Halt::Fuel => Error::resource(format!("{what} ran out of fuel at position {pos}")),
        Halt::PrefixEnd { pos: p } => Error::resource(format!("{what} at {pos} read past a finite prefix at {p}")),
        Halt::Branch { .. } => Error::contract(format!("{what} read a free tape outside exhaustive search")),
    }
}

/// `S_i` from `T_0`: `U = Θ(T_j, m_j)`, `⟨S_j, T_{j+1}⟩ = Ψ(U)` for `j ≤ i`.
fn s_tape(cfg: &SquashConfig, markers: &Arc<Markers>, ms: &[u64], family: Option<Tape>, t0: Tape, i: u64) -> Tape {
    let theta = cfg.tolerance();
    let mut t = t0;
    let mut s = None;
    for j in 0..=i {
        let u = theta(ms[j as usize]).apply(vec![t]);
        let w = match &family {
            None => cfg.witness.backward.apply(vec![u]),
            Some(fam) => {
                let b_next = b_functional(markers.clone(), j + 1).apply(vec![fam.clone()]);
                let inst = interleave_tape(column_tape(fam.clone(), j), b_next);
                cfg.witness.backward.apply(vec![inst, u])
            }
        };
        s = Some(even_tape(w.clone()));
        t = odd_tape(w);
    }
    s.expect("loop runs at least once")
}

/// Unravel `S_0..S_{count-1}` from a `P`-solution `T_0`, each materialized below `horizon`.
pub fn squash_backward(
    cfg: &SquashConfig,
    markers: &Arc<Markers>,
    family: Option<&Point>,
    t0: &Point,
    count: u64,
    horizon: u64,
) -> Result<Vec<Point>> {
    if cfg.witness.kind == Kind::Plain && family.is_none() {
        return Err(Error::input("plain squash needs the instance family to unravel"));
    }
    let ms = markers.upto(count)?;
    let fam = match cfg.witness.kind {
        Kind::Strong => None,
        Kind::Plain => family.map(|f| Tape::Point(f.clone())),
    };
    (0..count)
        .map(|i| {
            let t = s_tape(cfg, markers, &ms, fam.clone(), Tape::Point(t0.clone()), i);
            materialize(&t, horizon, INNER_FUEL).map_err(|why| Error::resource(format!("S{i} at chain depth {i}: {why}")))
        })
        .collect()
}

/// `SeqQ ≤ P` from `⟨Q,P⟩ ≤ P`, of the same kind as the supplied witness.
pub fn squash(cfg: &SquashConfig) -> Result<(Witness, Arc<Markers>)> {
    let markers = Arc::new(Markers::new(cfg));
    let forward = b_functional(markers.clone(), 0).named(format!("squash-fwd[{}]", cfg.witness.label));
    let (c, m) = (cfg.clone(), markers.clone());
    let backward = match cfg.witness.kind {
        Kind::Strong => Functional::new(format!("squash-bwd[{}]", cfg.witness.label), 1, move |ctx, z| {
            let (i, x) = cantor_unpair(z);
            let ms = m.upto(i).map_err(fault)?;
            let t = s_tape(&c, &m, &ms, None, Tape::Input(0), i);
            ctx.read_tape(&t, x)
        }),
        Kind::Plain => Functional::new(format!("squash-bwd[{}]", cfg.witness.label), 2, move |ctx, z| {
            let (i, x) = cantor_unpair(z);
            let ms = m.upto(i).map_err(fault)?;
            let t = s_tape(&c, &m, &ms, Some(Tape::Input(0)), Tape::Input(1), i);
            ctx.read_tape(&t, x)
        }),
    };
    let th = cfg.target_horizon.clone();
    let w = Witness::new(
        format!("squash[{}]", cfg.witness.label),
        cfg.witness.kind,
        forward,
        backward,
        seq(&cfg.q),
        cfg.p.clone(),
    )?
    .with_target_horizon(move |n| th(n));
    Ok((w, markers))
}
