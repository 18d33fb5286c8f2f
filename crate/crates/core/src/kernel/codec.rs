use super::bits::Point;
use super::functional::{Functional, Tape};
use crate::error::{Error, Result};

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Colexicographic rank of a strictly increasing tuple: `sum C(x_i, i+1)`.
pub fn tuple_rank(xs: &[u64]) -> Result<u64> {
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::input(format!("tuple {xs:?} is not strictly increasing")));
    }
    Ok(xs.iter().enumerate().map(|(i, &x)| binomial(x, i as u64 + 1)).sum())
}

/// Inverse of [`tuple_rank`] for tuples of length `n`.
pub fn rank_tuple(r: u64, n: usize) -> Vec<u64> {
    let mut out = vec![0; n];
    let mut rest = r;
    for i in (1..=n as u64).rev() {
        // Largest x with C(x, i) <= rest.
        let mut lo = i - 1;
        let mut hi = i - 1 + 1;
        while binomial(hi, i) <= rest {
            lo = hi;
            hi *= 2;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if binomial(mid, i) <= rest {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out[i as usize - 1] = lo;
        rest -= binomial(lo, i);
    }
    out
}

/// Number of `n`-tuples with all entries below `bound`; equals the least rank of a tuple
/// whose maximum is `bound`.
pub fn tuples_below(bound: u64, n: usize) -> u64 {
    binomial(bound, n as u64)
}

/// All strictly increasing `n`-tuples drawn from `set` (assumed sorted), colex order.
pub fn tuples_of(set: &[u64], n: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    if n == 0 {
        return vec![vec![]];
    }
    if set.len() < n {
        return out;
    }
    loop {
        out.push(idx.iter().map(|&i| set[i]).collect());
        // Colex successor of an index combination.
        let mut i = 0;
        while i < n {
            let limit = if i + 1 < n { idx[i + 1] } else { set.len() };
            if idx[i] + 1 < limit {
                idx[i] += 1;
                for (j, slot) in idx.iter_mut().enumerate().take(i) {
                    *slot = j;
                }
                break;
            }
            i += 1;
        }
        if i == n {
            return out;
        }
    }
}

/// Cantor pairing `<i, x> = (i+x)(i+x+1)/2 + x`.
pub fn cantor_pair(i: u64, x: u64) -> u64 {
    (i + x) * (i + x + 1) / 2 + x
}

/// Inverse of [`cantor_pair`].
pub fn cantor_unpair(z: u64) -> (u64, u64) {
    let mut w = (((8 * z as u128 + 1) as f64).sqrt() as u64).saturating_sub(1) / 2;
    while (w + 1) * (w + 2) / 2 <= z {
        w += 1;
    }
    while w * (w + 1) / 2 > z {
        w -= 1;
    }
    let x = z - w * (w + 1) / 2;
    (w - x, x)
}

/// Even bits from `a`, odd bits from `b`.
pub fn interleave(a: &Point, b: &Point) -> Point {
    let (a, b) = (a.clone(), b.clone());
    Point::new(format!("{}⊕{}", a.name(), b.name()), move |p| if p % 2 == 0 { a.bit(p / 2) } else { b.bit(p / 2) })
}

pub fn evens(a: &Point) -> Point {
    let a = a.clone();
    Point::new(format!("even({})", a.name()), move |p| a.bit(2 * p))
}

pub fn odds(a: &Point) -> Point {
    let a = a.clone();
    Point::new(format!("odd({})", a.name()), move |p| a.bit(2 * p + 1))
}

/// Column `i` of a point read as a family: `column(A, i)(x) = A(<i, x>)`.
pub fn column(a: &Point, i: u64) -> Point {
    let a = a.clone();
    Point::new(format!("col{i}({})", a.name()), move |x| a.bit(cantor_pair(i, x)))
}

/// The point whose column `i` is `members(i)`.
pub fn family(name: impl Into<String>, members: impl Fn(u64) -> Point + Send + Sync + 'static) -> Point {
    let cache = std::sync::Mutex::new(std::collections::HashMap::<u64, Point>::new());
    Point::new(name, move |z| {
        let (i, x) = cantor_unpair(z);
        let p = cache.lock().expect("family cache").entry(i).or_insert_with(|| members(i)).clone();
        p.bit(x)
    })
}

/// Functional: even bits of tape 0.
pub fn even_bits() -> Functional {
    Functional::new("even", 1, |ctx, x| ctx.read(0, 2 * x))
}

/// Functional: odd bits of tape 0.
pub fn odd_bits() -> Functional {
    Functional::new("odd", 1, |ctx, x| ctx.read(0, 2 * x + 1))
}

/// Functional: tape 0 on even positions, tape 1 on odd positions.
pub fn interleave_fn() -> Functional {
    Functional::new("interleave", 2, |ctx, x| ctx.read((x % 2) as usize, x / 2))
}

/// Functional: column `i` of tape 0.
pub fn column_fn(i: u64) -> Functional {
    Functional::new(format!("col{i}"), 1, move |ctx, x| ctx.read(0, cantor_pair(i, x)))
}

/// Functional: identity on tape 0.
pub fn identity_fn() -> Functional {
    Functional::new("id", 1, |ctx, x| ctx.read(0, x))
}

/// Tape views built from the codec functionals.
pub fn even_tape(t: Tape) -> Tape {
    even_bits().apply(vec![t])
}

pub fn odd_tape(t: Tape) -> Tape {
    odd_bits().apply(vec![t])
}

pub fn interleave_tape(a: Tape, b: Tape) -> Tape {
    interleave_fn().apply(vec![a, b])
}

pub fn column_tape(t: Tape, i: u64) -> Tape {
    column_fn(i).apply(vec![t])
}
