use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

/// A finite binary string.
#[derive(Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Prefix {
    bits: Vec<bool>,
}

impl Prefix {
    pub fn new(bits: Vec<bool>) -> Self {
        Prefix { bits }
    }

    pub fn empty() -> Self {
        Prefix { bits: Vec::new() }
    }

    pub fn zeros(len: usize) -> Self {
        Prefix { bits: vec![false; len] }
    }

    /// Parse a string of `0`/`1` characters.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Prefix::new)
    }

    /// The `len`-bit string whose value, read most significant bit first, is `v`.
    pub fn from_index(v: u64, len: usize) -> Self {
        Prefix {
            bits: (0..len).map(|i| (v >> (len - 1 - i)) & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, pos: u64) -> Option<bool> {
        usize::try_from(pos).ok().and_then(|p| self.bits.get(p).copied())
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn push(&mut self, b: bool) {
        self.bits.push(b);
    }

    pub fn child(&self, b: bool) -> Prefix {
        let mut c = self.clone();
        c.push(b);
        c
    }

    pub fn truncate(&self, len: usize) -> Prefix {
        Prefix::new(self.bits[..len.min(self.len())].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Prefix) -> bool {
        self.len() <= other.len() && other.bits[..self.len()] == self.bits[..]
    }

    pub fn compatible(&self, other: &Prefix) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// Plain concatenation.
    pub fn concat(&self, tail: &Prefix) -> Prefix {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&tail.bits);
        Prefix { bits }
    }

    /// The continuation `self ⌢ tau`: `self(i)` for `i < |self|`, then `tau(i)` for
    /// `|self| <= i < |tau|`. Positions of `tau` below `|self|` are overwritten.
    pub fn continuation(&self, tau: &Prefix) -> Prefix {
        let mut bits = self.bits.clone();
        if tau.len() > bits.len() {
            bits.extend_from_slice(&tau.bits[self.len()..]);
        }
        Prefix { bits }
    }

    /// Bits at even positions.
    pub fn evens(&self) -> Prefix {
        Prefix::new(self.bits.iter().step_by(2).copied().collect())
    }

    /// Bits at odd positions.
    pub fn odds(&self) -> Prefix {
        Prefix::new(self.bits.iter().skip(1).step_by(2).copied().collect())
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// All strings of length `len` in lexicographic order.
    pub fn all_of_length(len: usize) -> impl Iterator<Item = Prefix> {
        assert!(len < 63, "length {len} too large to enumerate");
        (0..(1u64 << len)).map(move |v| Prefix::from_index(v, len))
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits.is_empty() {
            return write!(f, "ε");
        }
        for &b in &self.bits {
            write!(f, "{}", b as u8)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Prefix({self})")
    }
}

type Rule = dyn Fn(u64) -> bool + Send + Sync;

/// An infinite binary sequence given by a total rule, with a shared memo.
///
/// Clones share the rule and the memo.
#[derive(Clone)]
pub struct Point {
    name: Arc<str>,
    rule: Arc<Rule>,
    memo: Arc<RwLock<HashMap<u64, bool>>>,
}

impl Point {
    pub fn new(name: impl Into<String>, rule: impl Fn(u64) -> bool + Send + Sync + 'static) -> Self {
        Point {
            name: Arc::from(name.into()),
            rule: Arc::new(rule),
            memo: Arc::new(RwLock::new(HashMap::new())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bit(&self, pos: u64) -> bool {
        if let Some(&b) = self.memo.read().expect("memo poisoned").get(&pos) {
            return b;
        }
        let b = (self.rule)(pos);
        self.memo.write().expect("memo poisoned").insert(pos, b);
        b
    }

    pub fn prefix(&self, len: usize) -> Prefix {
        Prefix::new((0..len as u64).map(|p| self.bit(p)).collect())
    }

    pub fn constant(b: bool) -> Self {
        Point::new(if b { "ones" } else { "zeros" }, move |_| b)
    }

    pub fn zeros() -> Self {
        Point::constant(false)
    }

    pub fn ones() -> Self {
        Point::constant(true)
    }

    /// Repeats `pattern` forever; `pattern` must be nonempty.
    pub fn periodic(pattern: &str) -> Self {
        let p = Prefix::parse(pattern).expect("pattern must be binary");
        assert!(!p.is_empty(), "empty pattern");
        let n = p.len() as u64;
        Point::new(format!("periodic({pattern})"), move |pos| p.bits()[(pos % n) as usize])
    }

    /// `prefix` followed by `pad` forever.
    pub fn padded(prefix: Prefix, pad: bool) -> Self {
        Point::new(format!("padded({prefix})"), move |pos| prefix.get(pos).unwrap_or(pad))
    }

    /// Characteristic function of a finite set.
    pub fn from_set(set: &[u64]) -> Self {
        let s: std::collections::BTreeSet<u64> = set.iter().copied().collect();
        Point::new(format!("set{:?}", s), move |pos| s.contains(&pos))
    }

    /// Characteristic function of `{x : pred(x)}`.
    pub fn from_pred(name: impl Into<String>, pred: impl Fn(u64) -> bool + Send + Sync + 'static) -> Self {
        Point::new(name, pred)
    }

    /// A seeded pseudo-random point; bit `pos` is a pure function of `(seed, pos)`.
    pub fn random(seed: u64) -> Self {
        Point::new(format!("random({seed})"), move |pos| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_word_pos((pos / 32) as u128);
            (rng.next_u32() >> (pos % 32)) & 1 == 1
        })
    }

    /// Elements of the set this point describes, below `bound`.
    pub fn members_below(&self, bound: u64) -> Vec<u64> {
        (0..bound).filter(|&x| self.bit(x)).collect()
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point({})", self.name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuation_overwrites_low_positions() {
        let s = Prefix::parse("11").unwrap();
        let t = Prefix::parse("0000").unwrap();
        assert_eq!(s.continuation(&t), Prefix::parse("1100").unwrap());
        assert_eq!(t.continuation(&s), t);
        assert_eq!(s.continuation(&Prefix::empty()), s);
    }

    #[test]
    fn random_points_are_reproducible() {
        let a = Point::random(7);
        let b = Point::random(7);
        assert_eq!(a.prefix(200), b.prefix(200));
        assert_ne!(a.prefix(200), Point::random(8).prefix(200));
        // Memo does not change the answer.
        assert_eq!(a.prefix(200), a.prefix(200));
    }

    #[test]
    fn index_strings_are_lexicographic() {
        let all: Vec<_> = Prefix::all_of_length(3).map(|p| p.to_string()).collect();
        assert_eq!(all, ["000", "001", "010", "011", "100", "101", "110", "111"]);
    }

    #[test]
    fn even_odd_split() {
        let p = Prefix::parse("011011").unwrap();
        assert_eq!(p.evens().to_string(), "011");
        assert_eq!(p.odds().to_string(), "101");
    }
}
