//! Named reductions and constructions, addressable by id.

pub mod procedures;
pub mod thin;
pub mod trees;
pub mod witnesses;

pub use procedures::{construction, constructions, Construction};
pub use witnesses::*;

use crate::combinators::{
    alternative_embed, check_soundness, compose_witness, fanout_rt, iterate_finite, lift_seq, parallel_product, squash,
    Kind, SoundnessReport, Witness,
};
use crate::error::{Error, Result};
use crate::kernel::codec::identity_fn;
use crate::kernel::{family, Point};
use crate::problems::{echo, encode_tree, rt, wkl, Colors, Tree, Verdict};
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

type Builder = Arc<dyn Fn() -> Result<Witness> + Send + Sync>;
type Invariant = Arc<dyn Fn(u64) -> Result<Verdict> + Send + Sync>;

/// One catalogued witness with the parameters it was built from.
#[derive(Clone)]
pub struct CatalogEntry {
    pub id: String,
    pub summary: String,
    /// Largest horizon the entry is meaningful at, if bounded.
    pub max_horizon: Option<u64>,
    build: Builder,
    /// Entry-specific exact check, run with a seed alongside generic soundness.
    invariant: Option<(String, Invariant)>,
}

impl CatalogEntry {
    fn new(id: impl Into<String>, summary: impl Into<String>, build: impl Fn() -> Result<Witness> + Send + Sync + 'static) -> Self {
        CatalogEntry { id: id.into(), summary: summary.into(), max_horizon: None, build: Arc::new(build), invariant: None }
    }

    fn capped(mut self, h: u64) -> Self {
        self.max_horizon = Some(h);
        self
    }

    fn with_invariant(mut self, name: &str, check: impl Fn(u64) -> Result<Verdict> + Send + Sync + 'static) -> Self {
        self.invariant = Some((name.to_string(), Arc::new(check)));
        self
    }

    /// Name and verdict of the entry-specific check, if there is one.
    pub fn invariant(&self, seed: u64) -> Option<(String, Result<Verdict>)> {
        self.invariant.as_ref().map(|(name, f)| (name.clone(), f(seed)))
    }

    pub fn witness(&self) -> Result<Witness> {
        (self.build)()
    }

    /// The requested horizon clipped to the entry's cap.
    pub fn horizon(&self, requested: u64) -> u64 {
        self.max_horizon.map_or(requested, |c| requested.min(c))
    }

    pub fn check(&self, samples: usize, horizon: u64, seed: u64) -> Result<SoundnessReport> {
        check_soundness(&self.witness()?, samples, self.horizon(horizon), seed)
    }
}

impl std::fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogEntry").field("id", &self.id).field("max_horizon", &self.max_horizon).finish()
    }
}

/// Trees with no dead ends below the root, so path search never backtracks far.
pub fn sample_live_tree(rng: &mut ChaCha8Rng) -> Point {
    let t = match rng.gen_range(0..4) {
        0 => Tree::full(),
        1 => Tree::no_consecutive_ones(),
        2 => Tree::starts_with(rng.gen()),
        _ => Tree::single_path(Point::random(rng.next_u64())),
    };
    encode_tree(&t)
}

fn live_pair(rng: &mut ChaCha8Rng) -> Point {
    crate::kernel::interleave(&sample_live_tree(rng), &sample_live_tree(rng))
}

fn live_family(rng: &mut ChaCha8Rng) -> Point {
    let seed = rng.next_u64();
    family("live-trees", move |i| {
        let mut r = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        sample_live_tree(&mut r)
    })
}

fn echo_pairing() -> Result<Witness> {
    let p = echo();
    Ok(Witness::new("echo-pair", Kind::Strong, identity_fn(), identity_fn(), parallel_product(&p, &p), p)?
        .with_target_horizon(|n| 2 * n))
}

/// Tolerances drop the few elements below each marker, so solutions are searched a little larger.
const SQUASH_SLACK: usize = 3;

fn squashed(name: &'static str) -> Result<Witness> {
    let (_, cfg) = witnesses::squash_configs::all()
        .into_iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::input(format!("no squash configuration {name}")))?;
    let w = squash(&cfg)?.0;
    let slack = w.size_slack + SQUASH_SLACK;
    Ok(w.with_size_slack(slack))
}

/// Every catalogued witness.
pub fn entries() -> Vec<CatalogEntry> {
    let mut v = Vec::new();
    for (n, j, k) in [(1, 2, 2), (1, 2, 5), (2, 2, 3), (1, 3, 4)] {
        v.push(CatalogEntry::new(format!("rt_color_embed/{n}/{j}/{k}"), format!("RT^{n}_{j} into RT^{n}_{k} unchanged"), move || {
            rt_color_embed(n, j, k)
        }));
    }
    for (m, n, k) in [(1, 1, 2), (1, 2, 2), (2, 3, 2), (1, 3, 2)] {
        v.push(CatalogEntry::new(format!("rt_arity_lift/{m}/{n}/{k}"), format!("RT^{m}_{k} as RT^{n}_{k} on trailing coordinates"), move || {
            rt_arity_lift(m, n, k)
        }));
    }
    for (n, j, k) in [(1, 2, 3), (2, 2, 2)] {
        v.push(CatalogEntry::new(format!("rt_product/{n}/{j}/{k}"), format!("two RT^{n} colorings paired into {} colors", j * k), move || {
            rt_product(n, j, k)
        }));
    }
    v.push(
        CatalogEntry::new("coh_interleave/2", "two cohesiveness families interleaved", || Ok(coh_interleave(Count::Two)))
            .with_invariant("column-identity", |seed| coh_column_identity(Count::Two, seed, 8, 16)),
    );
    v.push(
        CatalogEntry::new("coh_interleave/omega", "a sequence of cohesiveness families interleaved", || Ok(coh_interleave(Count::Omega)))
            .with_invariant("column-identity", |seed| coh_column_identity(Count::Omega, seed, 8, 16)),
    );
    v.push(
        CatalogEntry::new("wkl_interleave/2", "two trees merged bitwise", || Ok(wkl_interleave(Count::Two).with_sampler(live_pair)))
            .capped(MAX_TREE_DEPTH as u64 / 2)
            .with_invariant("measure-product", |seed| {
                let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
                let left = crate::problems::decode_tree(&wkl().sample(&mut rng));
                let right = crate::problems::decode_tree(&wkl().sample(&mut rng));
                wkl_measure_identity(&left, &right, 6)
            }),
    );
    v.push(
        CatalogEntry::new("wkl_interleave/omega", "a sequence of trees merged along columns", || {
            Ok(wkl_interleave(Count::Omega).with_sampler(live_family))
        })
        .capped(6),
    );
    for (n, j, k) in [(1, 2, Colors::Finite(3)), (2, 2, Colors::Finite(4)), (1, 2, Colors::Omega), (2, 3, Colors::Omega)] {
        v.push(CatalogEntry::new(format!("ts_collapse/{n}/{j}/{k}"), format!("TS^{n}_{k} into TS^{n}_{j} by merging high colors"), move || {
            ts_collapse(n, j, k)
        }));
    }
    v.push(CatalogEntry::new("fanout/1/2/3/2", "RT^1_4 into RT^1_9 digit by digit", || fanout_rt(&rt_color_embed(1, 2, 3)?, 2)));
    v.push(CatalogEntry::new("fanout/2/2/3/2", "RT^2_4 into RT^2_9 digit by digit", || fanout_rt(&rt_color_embed(2, 2, 3)?, 2)));
    v.push(CatalogEntry::new("compose/rt1/2/3/4", "RT^1_2 into RT^1_3 into RT^1_4", || {
        compose_witness(&rt_color_embed(1, 2, 3)?, &rt_color_embed(1, 3, 4)?)
    }));
    v.push(CatalogEntry::new("lift_seq/rt_color_embed/1/2/3", "the embedding applied to every column", || {
        Ok(lift_seq(&rt_color_embed(1, 2, 3)?))
    }));
    v.push(CatalogEntry::new("alternative_embed/rt1_2|rt2_2/1", "RT^2_2 tagged into a choice of problems", || {
        alternative_embed(&[rt(1, 2), rt(2, 2)], 1)
    }));
    v.push(CatalogEntry::new("iterate/echo/3", "three copies of ECHO folded into one", || iterate_finite(&echo_pairing()?, 3)));
    for name in ["trivial-over-rt", "coh", "projection", "rt-into-seq"] {
        v.push(CatalogEntry::new(format!("squash/{name}"), format!("the {name} configuration squashed"), move || squashed(name)));
    }
    v
}

pub fn entry(id: &str) -> Result<CatalogEntry> {
    entries().into_iter().find(|e| e.id == id).ok_or_else(|| Error::input(format!("no catalog entry {id}")))
}
