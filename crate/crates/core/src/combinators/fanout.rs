use super::witness::{Kind, Witness};
use crate::error::{Error, Result};
use crate::kernel::{Functional, Tape};
use crate::problems::{encoded_bit, read_color, read_color_tape, rt, Coloring, Colors, ProblemSpec};

/// Base-`k` digits of `c`, least significant first, `s` of them.
pub fn split_digits(c: u64, k: u64, s: u32) -> Vec<u64> {
    let mut c = c;
    (0..s)
        .map(|_| {
            let d = c % k;
            c /= k;
            d
        })
        .collect()
}

/// `Σ jⁱ dᵢ`.
pub fn merge_digits(digits: &[u64], j: u64) -> u64 {
    digits.iter().rev().fold(0, |acc, &d| acc * j + d)
}

/// The `s` digit colorings of a `kˢ`-coloring.
pub fn split_coloring(f: &Coloring, k: u64, s: u32) -> Vec<Coloring> {
    (0..s)
        .map(|i| {
            let f = f.clone();
            Coloring::finite(format!("digit{i}({})", f.label()), f.arity(), k, move |xs| {
                split_digits(f.color(xs), k, s)[i as usize]
            })
        })
        .collect()
}

/// `Σ jⁱ gᵢ` as one `jˢ`-coloring.
pub fn merge_colorings(gs: &[Coloring], j: u64) -> Result<Coloring> {
    let first = gs.first().ok_or_else(|| Error::input("merge of no colorings"))?;
    let n = first.arity();
    if gs.iter().any(|g| g.arity() != n) {
        return Err(Error::input("merged colorings must share an arity"));
    }
    let gs = gs.to_vec();
    let total = j.checked_pow(gs.len() as u32).ok_or_else(|| Error::input("merged color count overflows"))?;
    Ok(Coloring::finite(format!("merge{j}"), n, total, move |xs| {
        merge_digits(&gs.iter().map(|g| g.color(xs)).collect::<Vec<_>>(), j)
    }))
}

/// `(n, k)` of a problem named `RT^n_k` with finite `k`.
fn rt_params(p: &ProblemSpec) -> Option<(usize, u64)> {
    let name = p.name();
    let rest = name.strip_prefix("RT^")?;
    let (n, k) = rest.split_once('_')?;
    Some((n.parse().ok()?, k.parse().ok()?))
}

/// From a strong `RTⁿₖ ≤ RTⁿⱼ`, a strong `RTⁿ_{kˢ} ≤ RTⁿ_{jˢ}`.
///
/// Each base-`k` digit of the source coloring goes through the forward map separately;
/// the outputs are merged as base-`j` digits. The one backward map serves every digit
/// at once, which is where strongness is needed.
pub fn fanout_rt(w: &Witness, s: u32) -> Result<Witness> {
    if w.kind != Kind::Strong {
        return Err(Error::input(format!(
            "fan-out needs a strong witness: {} is plain, and its backward map could not serve all digits with one set",
            w.label
        )));
    }
    if s == 0 {
        return Err(Error::input("fan-out power must be at least 1"));
    }
    let (n, k) = rt_params(&w.source).ok_or_else(|| Error::input(format!("{} is not RT^n_k", w.source.name())))?;
    let (n2, j) = rt_params(&w.target).ok_or_else(|| Error::input(format!("{} is not RT^n_k", w.target.name())))?;
    if n != n2 {
        return Err(Error::input(format!("fan-out needs matching exponents, got {n} and {n2}")));
    }
    let (ks, js) = match (k.checked_pow(s), j.checked_pow(s)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::input(format!("{k}^{s} or {j}^{s} colors overflow"))),
    };
    let phi = w.forward.clone();
    let digit = move |i: u32| {
        Functional::new(format!("digit{i}"), 1, move |ctx, pos| {
            encoded_bit(Colors::Finite(k), n, pos, |xs| {
                Ok(split_digits(read_color(ctx, 0, Colors::Finite(ks), xs)?, k, s)[i as usize])
            })
        })
    };
    let forward = Functional::new(format!("fanout{s}({})", phi.label()), 1, move |ctx, pos| {
        let gs: Vec<Tape> = (0..s).map(|i| phi.apply(vec![digit(i).apply(vec![ctx.input(0)])])).collect();
        encoded_bit(Colors::Finite(js), n, pos, |xs| {
            let mut ds = Vec::with_capacity(gs.len());
            for g in &gs {
                ds.push(read_color_tape(ctx, g, Colors::Finite(j), xs)?);
            }
            Ok(merge_digits(&ds, j))
        })
    });
    let h = w.target_horizon.clone();
    Ok(Witness::new(format!("fanout{s}[{}]", w.label), Kind::Strong, forward, w.backward.clone(), rt(n, ks), rt(n, js))?
        .with_target_horizon(move |x| h(x))
        .with_size_slack(w.size_slack))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinators::identity_witness;
    use crate::kernel::{Point, Tape};
    use crate::problems::{encode_coloring, materialize, totalize_coloring};

    #[test]
    fn digits_of_five_base_three() {
        assert_eq!(split_digits(5, 3, 2), vec![2, 1]);
        assert_eq!(merge_digits(&[2, 1], 3), 5);
    }

    #[test]
    fn split_merge_is_identity_exhaustively() {
        for k in 2..=4u64 {
            for s in 1..=3u32 {
                for c in 0..k.pow(s) {
                    assert_eq!(merge_digits(&split_digits(c, k, s), k), c);
                }
            }
        }
        // Coloring level, every 4^2-coloring of singletons below 4.
        for code in 0..16u64.pow(4) {
            let f = Coloring::finite("t", 1, 16, move |xs| (code >> (4 * xs[0].min(3))) & 15);
            let g = merge_colorings(&split_coloring(&f, 4, 2), 4).unwrap();
            for x in 0..4 {
                assert_eq!(f.color(&[x]), g.color(&[x]));
            }
        }
    }

    #[test]
    fn plain_witness_is_refused() {
        let w = identity_witness(&rt(1, 2)).as_plain();
        let err = fanout_rt(&w, 2).unwrap_err();
        assert!(err.message().contains("strong"));
    }

    #[test]
    fn power_one_matches_the_witness() {
        let w = identity_witness(&rt(2, 3));
        let f = fanout_rt(&w, 1).unwrap();
        let a = encode_coloring(&Coloring::finite("sum", 2, 3, |xs| (xs[0] + 2 * xs[1]) % 3));
        let direct = materialize(&w.forward_tape(Tape::Point(a.clone())), 60, 10_000).unwrap();
        let fanned = materialize(&f.forward_tape(Tape::Point(a)), 60, 10_000).unwrap();
        assert_eq!(direct.prefix(60), fanned.prefix(60));
    }

    #[test]
    fn identity_fanout_preserves_every_four_coloring_below_eight() {
        let w = fanout_rt(&identity_witness(&rt(1, 2)), 2).unwrap();
        assert_eq!(w.source.name(), "RT^1_4");
        assert_eq!(w.target.name(), "RT^1_4");
        for code in 0..(1u64 << 16) {
            let a = Point::new("f", move |p| p < 16 && (code >> p) & 1 == 1);
            let g = materialize(&w.forward_tape(Tape::Point(a.clone())), 16, 10_000).unwrap();
            let (f, g) = (totalize_coloring(&a, 1, Colors::Finite(4)), totalize_coloring(&g, 1, Colors::Finite(4)));
            for x in 0..8 {
                assert_eq!(f.color(&[x]), g.color(&[x]), "code {code:#x} at {x}");
            }
        }
    }
}
