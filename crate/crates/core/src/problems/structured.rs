//! Restrictions of `RT²₂` to pair colorings with a structural property.

use super::coloring::{coloring_extent, totalize_coloring, Coloring, Colors};
use super::registry::{code_of, Problem, ProblemSpec, Tolerance, NODE_LIMIT};
use super::verify::{tolerance_rt_fn, verify_homogeneous_at, Verdict};
use crate::error::Result;
use crate::kernel::Point;
use crate::oracle::{find_homogeneous_all, structural_check, Search, SearchBudget, Structure};
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Samples below this bound are checked for the structure in full.
const STRUCTURE_SCAN: u64 = 24;

/// `RT²₂` restricted to colorings with `structure`.
#[derive(Clone, Debug)]
pub struct Restricted {
    pub structure: Structure,
}

pub fn striv() -> ProblemSpec {
    Arc::new(Restricted { structure: Structure::SemiTrivial })
}

pub fn cac() -> ProblemSpec {
    Arc::new(Restricted { structure: Structure::SemiTransitive })
}

pub fn ads() -> ProblemSpec {
    Arc::new(Restricted { structure: Structure::Transitive })
}

pub fn sher() -> ProblemSpec {
    Arc::new(Restricted { structure: Structure::SemiHereditary })
}

/// `f(x,y) = g(x)`: transitive and hereditary in every color.
pub fn min_dependent(g: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Coloring {
    Coloring::finite("g(min)", 2, 2, move |xs| g(xs[0]))
}

/// `f(x,y) = g(y)`: every fiber `{y > x : f(x,y) = i}` is homogeneous.
pub fn max_dependent(g: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Coloring {
    Coloring::finite("g(max)", 2, 2, move |xs| g(xs[1]))
}

/// `f(x,y) = 1` iff `rank(x) < rank(y)`: the comparability coloring of a linear order.
pub fn order_coloring(rank: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Coloring {
    Coloring::finite("order", 2, 2, move |xs| (rank(xs[0]) < rank(xs[1])) as u64)
}

fn random_bits(rng: &mut ChaCha8Rng) -> impl Fn(u64) -> u64 + Send + Sync + 'static {
    let seed = rng.next_u64();
    // Mostly one color so that large homogeneous sets exist below 16.
    let bias: u64 = rng.gen_range(0..2);
    move |x| if x < 64 && (seed >> x) & 7 == 0 { 1 - bias } else { bias }
}

impl Restricted {
    pub fn decode(&self, inst: &Point) -> Coloring {
        totalize_coloring(inst, 2, Colors::Finite(2))
    }
}

impl Problem for Restricted {
    fn name(&self) -> String {
        match self.structure {
            Structure::SemiTrivial => "STRIV",
            Structure::SemiTransitive => "CAC",
            Structure::Transitive => "ADS",
            Structure::SemiHereditary => "SHER",
        }
        .into()
    }

    fn is_total(&self) -> bool {
        false
    }

    fn extent(&self, horizon: u64) -> u64 {
        coloring_extent(2, Colors::Finite(2), horizon.max(STRUCTURE_SCAN))
    }

    fn check_instance(&self, inst: &Point, horizon: u64) -> Result<Verdict> {
        let all: Vec<u64> = (0..horizon.max(STRUCTURE_SCAN)).collect();
        Ok(structural_check(&self.decode(inst), &all, self.structure).verdict)
    }

    fn verify(&self, inst: &Point, sol: &Point, horizon: u64, size: usize) -> Result<Verdict> {
        Ok(verify_homogeneous_at(&self.decode(inst), &sol.members_below(horizon), horizon, size))
    }

    fn solve(&self, inst: &Point, horizon: u64, size: usize, limit: usize) -> Result<Search<Vec<Point>>> {
        let budget = SearchBudget::new(horizon, size).with_nodes(NODE_LIMIT);
        Ok(find_homogeneous_all(&self.decode(inst), &budget, limit).map(|v| v.iter().map(|s| Point::from_set(s)).collect()))
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        let f = match self.structure {
            Structure::SemiTrivial => max_dependent(random_bits(rng)),
            Structure::SemiHereditary => min_dependent(random_bits(rng)),
            Structure::Transitive | Structure::SemiTransitive => {
                if rng.gen_bool(0.5) {
                    min_dependent(random_bits(rng))
                } else {
                    // Mostly increasing with a few swaps, so long chains exist.
                    let seed = rng.next_u64();
                    order_coloring(move |x| if x < 64 && (seed >> x) & 3 == 0 { x.saturating_sub(3) * 2 } else { x * 2 + 1 })
                }
            }
        };
        code_of(&f, Colors::Finite(2))
    }

    fn tolerance(&self) -> Option<Tolerance> {
        Some(Arc::new(|m| tolerance_rt_fn(m, 2)))
    }

    fn default_size(&self) -> usize {
        8
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn samples_have_their_structure_and_solutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for p in [striv(), cac(), ads(), sher()] {
            for _ in 0..20 {
                let inst = p.sample(&mut rng);
                assert!(p.check_instance(&inst, 16).unwrap().is_pass(), "{}", p.name());
                match p.solve(&inst, 16, p.default_size(), 1).unwrap() {
                    Search::Found { value, .. } => assert!(p.verify(&inst, &value[0], 16, p.default_size()).unwrap().is_pass()),
                    other => panic!("{}: {other:?}", p.name()),
                }
            }
        }
    }

    #[test]
    fn unstructured_colorings_are_rejected() {
        // parity(x+y) breaks transitivity in color 1 only.
        let f = Coloring::finite("parity", 2, 2, |xs| (xs[0] + xs[1]) % 2);
        let inst = code_of(&f, Colors::Finite(2));
        assert!(ads().check_instance(&inst, 8).unwrap().is_fail());
        assert!(cac().check_instance(&inst, 8).unwrap().is_pass());
        let noise = Coloring::finite("noise", 2, 2, |xs| (xs[0].wrapping_mul(0x9E37_79B9) ^ xs[1].wrapping_mul(0x85EB_CA6B)) >> 7 & 1);
        let inst = code_of(&noise, Colors::Finite(2));
        for p in [striv(), cac(), ads(), sher()] {
            assert!(p.check_instance(&inst, 16).unwrap().is_fail(), "{}", p.name());
        }
    }
}
