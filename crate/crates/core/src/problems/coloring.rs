use crate::kernel::{cantor_pair, cantor_unpair, rank_tuple, tuple_rank, Ctx, Functional, Point, Step, Tape};
use std::fmt;
use std::sync::Arc;

/// Unary ω-color codes saturate here so decoding stays total.
pub const OMEGA_CAP: u64 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Colors {
    Finite(u64),
    Omega,
}

impl Colors {
    pub fn finite(&self) -> Option<u64> {
        match self {
            Colors::Finite(k) => Some(*k),
            Colors::Omega => None,
        }
    }

    pub fn admits(&self, c: u64) -> bool {
        match self {
            Colors::Finite(k) => c < *k,
            Colors::Omega => true,
        }
    }
}

impl fmt::Display for Colors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Colors::Finite(k) => write!(f, "{k}"),
            Colors::Omega => write!(f, "ω"),
        }
    }
}

type ColorRule = dyn Fn(&[u64]) -> u64 + Send + Sync;

/// A coloring of strictly increasing `arity`-tuples.
#[derive(Clone)]
pub struct Coloring {
    label: Arc<str>,
    arity: usize,
    colors: Colors,
    rule: Arc<ColorRule>,
}

impl Coloring {
    pub fn new(
        label: impl Into<String>,
        arity: usize,
        colors: Colors,
        rule: impl Fn(&[u64]) -> u64 + Send + Sync + 'static,
    ) -> Self {
        assert!(arity >= 1, "arity must be positive");
        Coloring { label: Arc::from(label.into()), arity, colors, rule: Arc::new(rule) }
    }

    pub fn finite(label: impl Into<String>, arity: usize, k: u64, rule: impl Fn(&[u64]) -> u64 + Send + Sync + 'static) -> Self {
        Coloring::new(label, arity, Colors::Finite(k), rule)
    }

    pub fn constant(arity: usize, k: u64, c: u64) -> Self {
        Coloring::finite(format!("const{c}"), arity, k, move |_| c)
    }

    /// Colors of all tuples with entries below `bound`, by colex rank, over `fallback` beyond.
    pub fn from_table(label: impl Into<String>, arity: usize, colors: Colors, table: Vec<u64>, fallback: Coloring) -> Self {
        Coloring::new(label, arity, colors, move |xs| {
            let r = tuple_rank(xs).expect("increasing tuple") as usize;
            table.get(r).copied().unwrap_or_else(|| fallback.color(xs))
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn colors(&self) -> Colors {
        self.colors
    }

    /// Color of a strictly increasing tuple.
    pub fn color(&self, xs: &[u64]) -> u64 {
        debug_assert_eq!(xs.len(), self.arity);
        (self.rule)(xs)
    }

    pub fn with_colors(&self, colors: Colors) -> Coloring {
        Coloring { colors, ..self.clone() }
    }

    pub fn named(&self, label: impl Into<String>) -> Coloring {
        Coloring { label: Arc::from(label.into()), ..self.clone() }
    }

    /// First color value outside the declared range on tuples below `bound`, if any.
    pub fn range_violation(&self, bound: u64) -> Option<(Vec<u64>, u64)> {
        let k = self.colors.finite()?;
        let all: Vec<u64> = (0..bound).collect();
        crate::kernel::tuples_of(&all, self.arity).into_iter().find_map(|t| {
            let c = self.color(&t);
            (c >= k).then_some((t, c))
        })
    }
}

impl fmt::Debug for Coloring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coloring({}, n={}, k={})", self.label, self.arity, self.colors)
    }
}

/// Bits per tuple block for `k` colors: `ceil(log2 k)`.
pub fn block_bits(k: u64) -> u32 {
    assert!(k >= 1, "need at least one color");
    64 - (k - 1).leading_zeros()
}

/// Decode the color of `xs` from a bit source laid out by [`encode_coloring`].
pub fn decode_color(colors: Colors, xs: &[u64], mut bit: impl FnMut(u64) -> Step<bool>) -> Step<u64> {
    let r = tuple_rank(xs)?;
    match colors {
        Colors::Finite(k) => {
            let b = block_bits(k) as u64;
            let mut v = 0u64;
            for j in 0..b {
                if bit(r * b + j)? {
                    v |= 1 << j;
                }
            }
            Ok(v % k)
        }
        Colors::Omega => {
            let mut c = 0;
            while c < OMEGA_CAP && bit(cantor_pair(r, c))? {
                c += 1;
            }
            Ok(c)
        }
    }
}

/// Bit at `pos` of the code of `f` with the given color layout.
pub fn encoded_bit(colors: Colors, arity: usize, pos: u64, mut color_of: impl FnMut(&[u64]) -> Step<u64>) -> Step<bool> {
    match colors {
        Colors::Finite(k) => {
            let b = block_bits(k) as u64;
            if b == 0 {
                return Ok(false);
            }
            let xs = rank_tuple(pos / b, arity);
            Ok((color_of(&xs)? >> (pos % b)) & 1 == 1)
        }
        Colors::Omega => {
            let (r, t) = cantor_unpair(pos);
            let xs = rank_tuple(r, arity);
            Ok(t < color_of(&xs)?)
        }
    }
}

/// View every point as an `n`-ary coloring: block `r` codes the tuple of colex rank `r`.
///
/// Finite `k`: `ceil(log2 k)` bits, little-endian, reduced mod `k`. ω: a unary run in
/// column `r` (Cantor pairing), ended by the first 0.
pub fn totalize_coloring(a: &Point, n: usize, colors: Colors) -> Coloring {
    let a = a.clone();
    Coloring::new(format!("decode({})", a.name()), n, colors, move |xs| {
        decode_color(colors, xs, |p| Ok(a.bit(p))).expect("point reads never halt")
    })
}

/// The point that [`totalize_coloring`] decodes back to `f` (colors must be in range).
pub fn encode_coloring(f: &Coloring) -> Point {
    let f = f.clone();
    Point::new(format!("code({})", f.label()), move |pos| {
        encoded_bit(f.colors(), f.arity(), pos, |xs| Ok(f.color(xs))).expect("coloring rules never halt")
    })
}

/// Positions of a code needed to read every tuple with entries below `bound`.
pub fn coloring_extent(n: usize, colors: Colors, bound: u64) -> u64 {
    let tuples = crate::kernel::binomial(bound, n as u64);
    match colors {
        Colors::Finite(k) => tuples * block_bits(k) as u64,
        Colors::Omega => {
            if tuples == 0 {
                0
            } else {
                cantor_pair(tuples - 1, 64) + 1
            }
        }
    }
}

/// A functional whose output is the code of a coloring computed tuple by tuple.
pub fn coloring_functional(
    label: impl Into<String>,
    arity: usize,
    source_tapes: usize,
    colors: Colors,
    color_of: impl Fn(&mut Ctx<'_>, &[u64]) -> Step<u64> + Send + Sync + 'static,
) -> Functional {
    Functional::new(label, source_tapes, move |ctx, pos| encoded_bit(colors, arity, pos, |xs| color_of(ctx, xs)))
}

/// Read the color of `xs` from tape `t` of the running step.
pub fn read_color(ctx: &mut Ctx<'_>, t: usize, colors: Colors, xs: &[u64]) -> Step<u64> {
    decode_color(colors, xs, |p| ctx.read(t, p))
}

/// Read the color of `xs` from a tape built inside the running step.
pub fn read_color_tape(ctx: &mut Ctx<'_>, tape: &Tape, colors: Colors, xs: &[u64]) -> Step<u64> {
    decode_color(colors, xs, |p| ctx.read_tape(tape, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::tuples_of;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn block_sizes() {
        assert_eq!(block_bits(1), 0);
        assert_eq!(block_bits(2), 1);
        assert_eq!(block_bits(3), 2);
        assert_eq!(block_bits(4), 2);
        assert_eq!(block_bits(5), 3);
    }

    #[test]
    fn zeros_decode_to_constant_zero() {
        let f = totalize_coloring(&Point::zeros(), 1, Colors::Finite(2));
        assert!((0..20).all(|x| f.color(&[x]) == 0));
    }

    #[test]
    fn ones_decode_by_block_rule() {
        // b = 2, every block reads 3, 3 mod 3 = 0.
        let f = totalize_coloring(&Point::ones(), 2, Colors::Finite(3));
        let all: Vec<u64> = (0..8).collect();
        assert!(tuples_of(&all, 2).iter().all(|t| f.color(t) == 0));
        let g = totalize_coloring(&Point::ones(), 1, Colors::Omega);
        assert_eq!(g.color(&[3]), OMEGA_CAP);
    }

    #[test]
    fn random_table_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let table: Vec<u64> = (0..45).map(|_| rng.gen_range(0..4)).collect();
        let f = Coloring::from_table("t", 2, Colors::Finite(4), table.clone(), Coloring::constant(2, 4, 0));
        let back = totalize_coloring(&encode_coloring(&f), 2, Colors::Finite(4));
        let all: Vec<u64> = (0..10).collect();
        for t in tuples_of(&all, 2) {
            assert_eq!(back.color(&t), f.color(&t));
        }
        let w = Coloring::new("sum", 2, Colors::Omega, |xs| xs[0] + xs[1]);
        let back = totalize_coloring(&encode_coloring(&w), 2, Colors::Omega);
        for t in tuples_of(&all, 2) {
            assert_eq!(back.color(&t), t[0] + t[1]);
        }
    }

    #[test]
    fn extent_covers_decode() {
        // Decoding tuples below the bound never reads past the extent.
        for (n, colors) in [(1, Colors::Finite(3)), (2, Colors::Finite(5)), (2, Colors::Omega)] {
            let ext = coloring_extent(n, colors, 7);
            let all: Vec<u64> = (0..7).collect();
            for t in tuples_of(&all, n) {
                decode_color(colors, &t, |p| {
                    assert!(p < ext, "read {p} beyond extent {ext}");
                    Ok(p % 3 == 0)
                })
                .unwrap();
            }
        }
    }
}
