use crate::combinators::{parallel_product, seq, Kind, SquashConfig, Witness};
use crate::error::{Error, Result};
use crate::kernel::codec::{even_tape, identity_fn, odd_tape};
use crate::combinators::INNER_FUEL;
use crate::measure::Exact;
use crate::kernel::codec::{column, evens, odds};
use crate::kernel::{cantor_pair, cantor_unpair, Ctx, Functional, Point, Prefix, Step, Tape};
use crate::problems::{
    coh, coloring_functional, decode_tree, encode_tree, lazy_image, materialize, measure_at_level, Tree, Verdict, node_at, node_index, read_color, read_color_tape, rt, trivial, ts, wkl, Colors,
};

/// `RTⁿⱼ ≤ RTⁿₖ` for `j ≤ k`: the same coloring re-encoded with more room.
pub fn rt_color_embed(n: usize, j: u64, k: u64) -> Result<Witness> {
    if j > k || j == 0 {
        return Err(Error::input(format!("color embedding needs 1 ≤ j ≤ k, got j={j}, k={k}")));
    }
    let forward = coloring_functional(format!("embed{j}→{k}"), n, 1, Colors::Finite(k), move |ctx, xs| {
        read_color(ctx, 0, Colors::Finite(j), xs)
    });
    Witness::new(format!("rt_color_embed[{n},{j},{k}]"), Kind::Strong, forward, identity_fn(), rt(n, j), rt(n, k))
}

/// `RTᵐₖ ≤ RTⁿₖ` for `m ≤ n`.
///
/// `g(x₁…xₙ) = f(x_{n−m+1}…xₙ)`; the backward map drops the `n−m` least elements,
/// so every finite initial segment of a `g`-homogeneous set maps to an `f`-homogeneous one.
pub fn rt_arity_lift(m: usize, n: usize, k: u64) -> Result<Witness> {
    if m > n || m == 0 {
        return Err(Error::input(format!("arity lift needs 1 ≤ m ≤ n, got m={m}, n={n}")));
    }
    let drop = (n - m) as u64;
    let forward = coloring_functional(format!("lift{m}→{n}"), n, 1, Colors::Finite(k), move |ctx, xs| {
        read_color(ctx, 0, Colors::Finite(k), &xs[n - m..])
    });
    let backward = Functional::new(format!("drop{drop}"), 1, move |ctx, x| {
        if !ctx.read(0, x)? {
            return Ok(false);
        }
        let mut below = 0;
        for y in 0..x {
            if below >= drop {
                break;
            }
            below += ctx.read(0, y)? as u64;
        }
        Ok(below >= drop)
    });
    Witness::new(format!("rt_arity_lift[{m},{n},{k}]"), Kind::Strong, forward, backward, rt(m, k), rt(n, k))
}

/// `⟨RTⁿⱼ, RTⁿₖ⟩ ≤ RTⁿ_{jk}` with `h = f + j·g`; a solution for `h` solves both.
pub fn rt_product(n: usize, j: u64, k: u64) -> Result<Witness> {
    if j == 0 || k == 0 {
        return Err(Error::input("color counts must be positive"));
    }
    let jk = j.checked_mul(k).ok_or_else(|| Error::input("color count overflows"))?;
    let forward = coloring_functional(format!("pair{j}×{k}"), n, 1, Colors::Finite(jk), move |ctx, xs| {
        let f = read_color_tape(ctx, &even_tape(Tape::Input(0)), Colors::Finite(j), xs)?;
        let g = read_color_tape(ctx, &odd_tape(Tape::Input(0)), Colors::Finite(k), xs)?;
        Ok(f + j * g)
    });
    let backward = Functional::new("H⊕H", 1, |ctx, x| ctx.read(0, x / 2));
    Witness::new(
        format!("rt_product[{n},{j},{k}]"),
        Kind::Strong,
        forward,
        backward,
        parallel_product(&rt(n, j), &rt(n, k)),
        rt(n, jk),
    )
}

/// How many instances an interleaving witness folds into one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Count {
    Two,
    Omega,
}

/// `⟨COH,COH⟩ ≤ COH` (`T₂ᵢ = Rᵢ`, `T₂ᵢ₊₁ = Sᵢ`) or `SeqCOH ≤ COH` (`T⟨i,j⟩ = (Rᵢ)ⱼ`).
pub fn coh_interleave(count: Count) -> Witness {
    match count {
        Count::Two => {
            let forward = Functional::new("T2i=Ri,T2i+1=Si", 1, |ctx, z| {
                let (c, x) = cantor_unpair(z);
                ctx.read(0, 2 * cantor_pair(c / 2, x) + c % 2)
            });
            let backward = Functional::new("C⊕C", 1, |ctx, x| ctx.read(0, x / 2));
            Witness::new("coh_interleave[2]", Kind::Strong, forward, backward, parallel_product(&coh(), &coh()), coh())
                .expect("arities are correct")
        }
        Count::Omega => {
            let forward = Functional::new("T<i,j>=(Ri)j", 1, |ctx, z| {
                let (c, x) = cantor_unpair(z);
                let (i, j) = cantor_unpair(c);
                ctx.read(0, cantor_pair(i, cantor_pair(j, x)))
            });
            let backward = Functional::new("C in every column", 1, |ctx, z| ctx.read(0, cantor_unpair(z).1));
            Witness::new("coh_interleave[ω]", Kind::Strong, forward, backward, seq(&coh()), coh())
                .expect("arities are correct")
        }
    }
}

/// Membership of `s` in the tree coded on tape `t`.
fn tree_member(ctx: &mut Ctx<'_>, tape: &Tape, s: &Prefix) -> Step {
    for l in 1..=s.len() {
        if !ctx.read_tape(tape, node_index(&s.truncate(l)))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Deepest tree node an interleaved code can address.
pub const MAX_TREE_DEPTH: usize = 62;

/// `⟨WKL,WKL⟩ ≤ WKL` (even bits in `T₀`, odd bits in `T₁`) or `SeqWKL ≤ WKL`
/// (the bits at positions `⟨i,·⟩` in `Tᵢ`). A path through the result is the pair of paths.
pub fn wkl_interleave(count: Count) -> Witness {
    match count {
        Count::Two => {
            let forward = Functional::new("S=T0⊕T1", 1, |ctx, pos| {
                let s = node_at(pos);
                let (a, b) = (s.evens(), s.odds());
                Ok(tree_member(ctx, &even_tape(Tape::Input(0)), &a)?
                    && tree_member(ctx, &odd_tape(Tape::Input(0)), &b)?)
            });
            Witness::new("wkl_interleave[2]", Kind::Strong, forward, identity_fn(), parallel_product(&wkl(), &wkl()), wkl())
                .expect("arities are correct")
                .with_target_horizon(|n| 2 * n)
        }
        Count::Omega => {
            let forward = Functional::new("S=⊕Ti", 1, |ctx, pos| {
                let s = node_at(pos);
                let mut cols: Vec<Vec<bool>> = Vec::new();
                for (p, &b) in s.bits().iter().enumerate() {
                    let (i, _) = cantor_unpair(p as u64);
                    if cols.len() <= i as usize {
                        cols.resize(i as usize + 1, Vec::new());
                    }
                    cols[i as usize].push(b);
                }
                for (i, col) in cols.into_iter().enumerate() {
                    let t = crate::kernel::codec::column_tape(Tape::Input(0), i as u64);
                    if !tree_member(ctx, &t, &Prefix::new(col))? {
                        return Ok(false);
                    }
                }
                Ok(true)
            });
            let columns = crate::combinators::SEQ_COLUMNS;
            Witness::new("wkl_interleave[ω]", Kind::Strong, forward, identity_fn(), seq(&wkl()), wkl())
                .expect("arities are correct")
                .with_target_horizon(move |n| if n == 0 { 0 } else { cantor_pair(columns - 1, n - 1) + 1 })
        }
    }
}

/// `TSⁿₖ ≤ TSⁿⱼ` for `2 ≤ j < k ≤ ω`: colors at least `j−1` collapse to `j−1`.
///
/// A thin set omitting `c < j−1` for the collapse omits `c` for `f`; one omitting `j−1`
/// sees only colors below `j−1`, so it omits `j−1` for `f` too. The solution is unchanged.
pub fn ts_collapse(n: usize, j: u64, k: Colors) -> Result<Witness> {
    let ok = match k {
        Colors::Finite(k) => 2 <= j && j < k,
        Colors::Omega => 2 <= j,
    };
    if !ok {
        return Err(Error::input(format!("collapse needs 2 ≤ j < k, got j={j}, k={k}")));
    }
    let forward = coloring_functional(format!("collapse{k}→{j}"), n, 1, Colors::Finite(j), move |ctx, xs| {
        Ok(read_color(ctx, 0, k, xs)?.min(j - 1))
    });
    let label = format!("ts_collapse[{n},{k}→{j}]");
    Witness::new(label, Kind::Strong, forward, identity_fn(), ts(n, k), ts(n, Colors::Finite(j)))
}

/// Toy configurations for the squashing engine.
pub mod squash_configs {
    use super::*;

    /// `⟨ANY, RT¹₂⟩ ≤ RT¹₂` keeping only `B`.
    pub fn trivial_over_rt() -> SquashConfig {
        let (q, p) = (trivial(), rt(1, 2));
        let w = Witness::new(
            "keep-B",
            Kind::Strong,
            Functional::new("Φ(A,B)=B", 1, |ctx, x| ctx.read(0, 2 * x + 1)),
            Functional::new("T⊕T", 1, |ctx, x| ctx.read(0, x / 2)),
            parallel_product(&q, &p),
            p.clone(),
        )
        .expect("arities are correct");
        SquashConfig::new(&q, &p, &w).expect("hypotheses hold")
    }

    /// `⟨COH,COH⟩ ≤ COH` by interleaving columns.
    pub fn coh() -> SquashConfig {
        let c = super::coh();
        SquashConfig::new(&c, &c, &coh_interleave(Count::Two)).expect("hypotheses hold")
    }

    /// `Φ(A,B)(x) = A(x) ∧ B(x+1)` over `ANY`.
    pub fn projection() -> SquashConfig {
        let p = trivial();
        let w = Witness::new(
            "A∧shift(B)",
            Kind::Strong,
            Functional::new("A(x)∧B(x+1)", 1, |ctx, x| Ok(ctx.read(0, 2 * x)? && ctx.read(0, 2 * (x + 1) + 1)?)),
            Functional::new("T⊕T", 1, |ctx, x| ctx.read(0, x / 2)),
            parallel_product(&p, &p),
            p.clone(),
        )
        .expect("arities are correct");
        SquashConfig::new(&p, &p, &w).expect("hypotheses hold")
    }

    /// `⟨RT¹₂, SeqRT¹₂⟩ ≤ SeqRT¹₂`: `A` becomes column 0, the columns of `B` shift right.
    pub fn rt_into_seq() -> SquashConfig {
        let (q, p) = (rt(1, 2), seq(&rt(1, 2)));
        let forward = Functional::new("cons", 1, |ctx, z| {
            let (c, x) = cantor_unpair(z);
            if c == 0 {
                ctx.read(0, 2 * x)
            } else {
                ctx.read(0, 2 * cantor_pair(c - 1, x) + 1)
            }
        });
        let backward = Functional::new("uncons", 1, |ctx, y| {
            let pos = if y % 2 == 0 {
                cantor_pair(0, y / 2)
            } else {
                let (c, x) = cantor_unpair(y / 2);
                cantor_pair(c + 1, x)
            };
            ctx.read(0, pos)
        });
        let w = Witness::new("cons", Kind::Strong, forward, backward, parallel_product(&q, &p), p.clone())
            .expect("arities are correct");
        SquashConfig::new(&q, &p, &w).expect("hypotheses hold")
    }

    /// Every configuration by name.
    pub fn all() -> Vec<(&'static str, SquashConfig)> {
        vec![
            ("trivial-over-rt", trivial_over_rt()),
            ("coh", coh()),
            ("projection", projection()),
            ("rt-into-seq", rt_into_seq()),
        ]
    }
}

/// Column identities of [`coh_interleave`] on a random family: every input column
/// reappears verbatim as its claimed merged column, and every input receives the solution.
pub fn coh_column_identity(count: Count, seed: u64, indices: u64, positions: u64) -> Result<Verdict> {
    let w = coh_interleave(count);
    let inst = Point::random(seed);
    let sol = Point::random(seed.wrapping_add(1));
    // (source position, merged position) pairs.
    let mut pairs = Vec::new();
    for i in 0..indices {
        for x in 0..positions {
            match count {
                Count::Two => {
                    pairs.push((2 * cantor_pair(i, x), cantor_pair(2 * i, x)));
                    pairs.push((2 * cantor_pair(i, x) + 1, cantor_pair(2 * i + 1, x)));
                }
                Count::Omega => {
                    for j in 0..indices {
                        pairs.push((cantor_pair(i, cantor_pair(j, x)), cantor_pair(cantor_pair(i, j), x)));
                    }
                }
            }
        }
    }
    let extent = pairs.iter().map(|p| p.1).max().unwrap_or(0) + 1;
    let image = materialize(&w.forward_tape(Tape::Point(inst.clone())), extent, INNER_FUEL).map_err(Error::resource)?;
    for (src, dst) in pairs {
        if inst.bit(src) != image.bit(dst) {
            return Ok(Verdict::Fail(format!("input bit {src} is {} but merged bit {dst} is {}", inst.bit(src), image.bit(dst))));
        }
    }
    let back = w.backward_tape(Tape::Point(inst), Tape::Point(sol.clone()));
    let back = materialize(&back, cantor_pair(indices, positions) + 1, INNER_FUEL).map_err(Error::resource)?;
    let components: Vec<Point> = match count {
        Count::Two => vec![evens(&back), odds(&back)],
        Count::Omega => (0..indices).map(|i| column(&back, i)).collect(),
    };
    let want = sol.prefix(positions as usize);
    for (i, c) in components.iter().enumerate() {
        let got = c.prefix(positions as usize);
        if got != want {
            return Ok(Verdict::Fail(format!("component {i} received {got}, expected {want}")));
        }
    }
    Ok(Verdict::Pass)
}

/// The merged tree's level-`2d` measure is the product of the inputs' level-`d` measures, exactly.
pub fn wkl_measure_identity(left: &Tree, right: &Tree, max_depth: usize) -> Result<Verdict> {
    let w = wkl_interleave(Count::Two);
    let inst = crate::kernel::interleave(&encode_tree(left), &encode_tree(right));
    let (image, fault) = lazy_image(&w.forward_tape(Tape::Point(inst)), INNER_FUEL);
    let merged = decode_tree(&image);
    for d in 0..=max_depth {
        let got: Exact = measure_at_level(&merged, 2 * d)?;
        let want = measure_at_level::<Exact>(left, d)? * measure_at_level::<Exact>(right, d)?;
        if let Some(why) = fault.lock().unwrap_or_else(|e| e.into_inner()).clone() {
            return Err(Error::contract(format!("merged tree diverges: {why}")));
        }
        if got != want {
            return Ok(Verdict::Fail(format!("level {} measure {got} but the inputs give {want}", 2 * d)));
        }
    }
    Ok(Verdict::Pass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{interleave, tuples_of};
    use crate::oracle::{enumerate_paths, find_homogeneous_all, find_thin_all, SearchBudget};
    use crate::problems::{code_of, totalize_coloring, verify_homogeneous_at, verify_thin_at, Coloring, ThinSolution};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn image_of(w: &Witness, inst: Point, n: usize, out: Colors) -> Coloring {
        let (p, _) = lazy_image(&w.forward_tape(Tape::Point(inst)), INNER_FUEL);
        totalize_coloring(&p, n, out)
    }

    fn all_homogeneous(f: &Coloring, horizon: u64, size: usize) -> Vec<Vec<u64>> {
        find_homogeneous_all(f, &SearchBudget::new(horizon, size), 10_000).found().unwrap_or_default()
    }

    #[test]
    fn color_embedding_keeps_homogeneous_sets() {
        assert!(rt_color_embed(1, 3, 2).is_err());
        let f = Coloring::finite("parity", 1, 2, |xs| xs[0] % 2);
        let g = image_of(&rt_color_embed(1, 2, 3).unwrap(), code_of(&f, Colors::Finite(2)), 1, Colors::Finite(3));
        for x in 0..10 {
            assert_eq!(g.color(&[x]), f.color(&[x]));
        }
        assert_eq!(all_homogeneous(&f, 10, 3), all_homogeneous(&g, 10, 3));
    }

    #[test]
    fn arity_lift_reads_trailing_coordinates() {
        assert!(rt_arity_lift(3, 2, 2).is_err());
        let f = Coloring::finite("parity", 1, 2, |xs| xs[0] % 2);
        let w = rt_arity_lift(1, 2, 2).unwrap();
        let g = image_of(&w, code_of(&f, Colors::Finite(2)), 2, Colors::Finite(2));
        for t in tuples_of(&(0..8).collect::<Vec<_>>(), 2) {
            assert_eq!(g.color(&t), t[1] % 2);
        }
        // Every brute-forced homogeneous set transfers once its least element is dropped.
        for h in all_homogeneous(&g, 8, 3) {
            let back = materialize(&w.backward_tape(Tape::Point(Point::zeros()), Tape::Point(Point::from_set(&h))), 8, INNER_FUEL).unwrap();
            let b = back.members_below(8);
            assert_eq!(b, h[1..].to_vec());
            assert!(verify_homogeneous_at(&f, &b, 8, 2).is_pass());
        }
    }

    #[test]
    fn product_pairs_colors_in_mixed_radix() {
        let f = Coloring::finite("parity-sum", 2, 2, |xs| (xs[0] + xs[1]) % 2);
        let g = Coloring::constant(2, 3, 1);
        let w = rt_product(2, 2, 3).unwrap();
        let inst = interleave(&code_of(&f, Colors::Finite(2)), &code_of(&g, Colors::Finite(3)));
        let h = image_of(&w, inst, 2, Colors::Finite(6));
        let mut values: Vec<u64> = tuples_of(&(0..8).collect::<Vec<_>>(), 2).iter().map(|t| h.color(t)).collect();
        values.sort_unstable();
        values.dedup();
        assert_eq!(values, vec![2, 3]);
        for s in all_homogeneous(&h, 10, 4) {
            assert!(verify_homogeneous_at(&f, &s, 10, 4).is_pass());
            assert!(verify_homogeneous_at(&g, &s, 10, 4).is_pass());
        }
        let zero = image_of(&rt_product(2, 2, 2).unwrap(), interleave(&Point::zeros(), &Point::zeros()), 2, Colors::Finite(4));
        assert!(tuples_of(&(0..6).collect::<Vec<_>>(), 2).iter().all(|t| zero.color(t) == 0));
    }

    #[test]
    fn collapse_merges_high_colors() {
        assert!(ts_collapse(1, 3, Colors::Finite(3)).is_err());
        assert!(ts_collapse(1, 1, Colors::Omega).is_err());
        let f = Coloring::constant(1, 4, 3);
        let g = image_of(&ts_collapse(1, 2, Colors::Finite(4)).unwrap(), code_of(&f, Colors::Finite(4)), 1, Colors::Finite(2));
        assert!((0..10).all(|x| g.color(&[x]) == 1));
        let id = Coloring::new("id", 1, Colors::Omega, |xs| xs[0]);
        let g = image_of(&ts_collapse(1, 2, Colors::Omega).unwrap(), code_of(&id, Colors::Omega), 1, Colors::Finite(2));
        assert_eq!((0..5).map(|x| g.color(&[x])).collect::<Vec<_>>(), vec![0, 1, 1, 1, 1]);
        let sol = ThinSolution::from_members(&(1..10).collect::<Vec<_>>(), 0);
        assert!(verify_thin_at(&id, &sol, 10, 4).unwrap().is_pass());
    }

    #[test]
    fn collapse_transfers_every_thin_set() {
        let w = ts_collapse(1, 2, Colors::Finite(4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let table: Vec<u64> = (0..10).map(|_| rng.gen_range(0..4)).collect();
            let t2 = table.clone();
            let f = Coloring::finite("table", 1, 4, move |xs| t2[xs[0] as usize % 10]);
            let g = image_of(&w, code_of(&f, Colors::Finite(4)), 1, Colors::Finite(2));
            for (set, c) in find_thin_all(&g, &SearchBudget::new(10, 3), 50).found().unwrap_or_default() {
                let sol = ThinSolution::from_members(&set, c);
                assert!(verify_thin_at(&f, &sol, 10, 3).unwrap().is_pass(), "{table:?} {set:?} {c}");
            }
        }
    }

    #[test]
    fn merged_trees_split_into_paths() {
        let w = wkl_interleave(Count::Two);
        let full = encode_tree(&Tree::full());
        let (img, _) = lazy_image(&w.forward_tape(Tape::Point(interleave(&full, &full))), INNER_FUEL);
        assert_eq!(enumerate_paths(&decode_tree(&img), 6).unwrap().len(), 64);

        let (a, b) = (Tree::no_consecutive_ones(), Tree::starts_with(true));
        let inst = interleave(&encode_tree(&a), &encode_tree(&b));
        let (img, _) = lazy_image(&w.forward_tape(Tape::Point(inst)), INNER_FUEL);
        let paths = enumerate_paths(&decode_tree(&img), 12).unwrap();
        assert!(!paths.is_empty());
        for p in paths {
            assert!(a.contains(&p.evens()) && b.contains(&p.odds()), "{p}");
        }
        assert!(wkl_measure_identity(&a, &b, 6).unwrap().is_pass());
    }

    #[test]
    fn column_identities_hold() {
        for seed in 0..4 {
            assert!(coh_column_identity(Count::Two, seed, 8, 16).unwrap().is_pass());
            assert!(coh_column_identity(Count::Omega, seed, 6, 8).unwrap().is_pass());
        }
    }

    #[test]
    fn squash_configurations_are_accepted() {
        assert_eq!(squash_configs::all().len(), 4);
    }
}
