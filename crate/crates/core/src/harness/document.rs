//! Line-oriented instance documents.
//!
//! ```text
//! # comments and blank lines are ignored
//! kind coloring
//! representation table
//! param arity 2
//! param colors 3
//! param domain 5
//! entry 0 0 1
//! entry 0 1 2
//! ...
//! ```
//!
//! Every table row is an explicit triple `entry <column> <position> <value>`. For
//! colorings the position is the colex rank of the tuple; for trees it is the node
//! index; for points and families it is the bit position. Documents holding several
//! columns address them by index, and a family flattens column `i`, position `x` to
//! `cantor_pair(i, x)`.
//!
//! Rule documents name a generator instead: `rule parity-sum` with its parameters.

use crate::codings::{
    bounded_sample, jump_coloring, jump_test_predicates, kummer_coloring, kummer_test_predicates, BoundedPredicate, LimitPredicate,
};
use crate::catalog::procedures::random_table;
use crate::error::{Error, Result};
use crate::kernel::codec::tuples_below;
use crate::kernel::{cantor_pair, family, tuples_of, Point, Prefix};
use crate::problems::{node_at, node_index, tree_extent, Coloring, Colors, Tree};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Coloring,
    Tree,
    Family,
    Point,
    Predicate,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Coloring => "coloring",
            Kind::Tree => "tree",
            Kind::Family => "family",
            Kind::Point => "point",
            Kind::Predicate => "predicate",
        }
    }
}

impl FromStr for Kind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "coloring" => Kind::Coloring,
            "tree" => Kind::Tree,
            "family" => Kind::Family,
            "point" => Kind::Point,
            "predicate" => Kind::Predicate,
            _ => return Err(format!("unknown kind {s:?} (coloring, tree, family, point, predicate)")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Table,
    Rule,
}

/// A parsed document. Parameters are kept sorted so rendering is canonical.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceDocument {
    pub kind: Kind,
    pub representation: Representation,
    pub params: BTreeMap<String, String>,
    pub rule: Option<String>,
    /// `(column, position, value)`, sorted.
    pub entries: Vec<(u64, u64, u64)>,
}

/// What a document resolves to.
#[derive(Clone, Debug)]
pub enum Instance {
    /// One coloring per column.
    Colorings(Vec<Coloring>),
    Tree(Tree),
    Family(Point),
    Point(Point),
    Jump(BoundedPredicate),
    Limit(LimitPredicate),
}

impl Instance {
    pub fn kind(&self) -> Kind {
        match self {
            Instance::Colorings(_) => Kind::Coloring,
            Instance::Tree(_) => Kind::Tree,
            Instance::Family(_) => Kind::Family,
            Instance::Point(_) => Kind::Point,
            Instance::Jump(_) | Instance::Limit(_) => Kind::Predicate,
        }
    }
}

fn at(line: usize, msg: impl fmt::Display) -> Error {
    Error::input(format!("line {line}: {msg}"))
}

fn num(line: usize, what: &str, s: &str) -> Result<u64> {
    s.parse().map_err(|_| at(line, format!("{what} {s:?} is not a natural number")))
}

impl InstanceDocument {
    pub fn table(kind: Kind) -> Self {
        InstanceDocument { kind, representation: Representation::Table, params: BTreeMap::new(), rule: None, entries: Vec::new() }
    }

    pub fn rule(kind: Kind, name: &str) -> Self {
        InstanceDocument {
            kind,
            representation: Representation::Rule,
            params: BTreeMap::new(),
            rule: Some(name.to_string()),
            entries: Vec::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn parse(text: &str) -> Result<Self> {
        let (mut kind, mut repr, mut rule) = (None, None, None);
        let mut params = BTreeMap::new();
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let words: Vec<&str> = body.split_whitespace().collect();
            match (words[0], words.len()) {
                ("kind", 2) => {
                    if kind.replace(words[1].parse::<Kind>().map_err(|e| at(line, e))?).is_some() {
                        return Err(at(line, "kind given twice"));
                    }
                }
                ("representation", 2) => {
                    let r = match words[1] {
                        "table" => Representation::Table,
                        "rule" => Representation::Rule,
                        other => return Err(at(line, format!("unknown representation {other:?} (table, rule)"))),
                    };
                    if repr.replace(r).is_some() {
                        return Err(at(line, "representation given twice"));
                    }
                }
                ("param", 3) => {
                    if params.insert(words[1].to_string(), words[2].to_string()).is_some() {
                        return Err(at(line, format!("parameter {} given twice", words[1])));
                    }
                }
                ("rule", 2) => {
                    if rule.replace(words[1].to_string()).is_some() {
                        return Err(at(line, "rule given twice"));
                    }
                }
                ("entry", 4) => {
                    entries.push((
                        num(line, "column", words[1])?,
                        num(line, "position", words[2])?,
                        num(line, "value", words[3])?,
                    ));
                }
                (key @ ("kind" | "representation" | "param" | "rule" | "entry"), n) => {
                    return Err(at(line, format!("{key} takes {} fields, found {}", expected_fields(key), n - 1)));
                }
                (other, _) => return Err(at(line, format!("unknown key {other:?}"))),
            }
        }
        let kind = kind.ok_or_else(|| Error::input("missing kind line"))?;
        let representation = repr.ok_or_else(|| Error::input("missing representation line"))?;
        match (representation, &rule, entries.is_empty()) {
            (Representation::Rule, None, _) => return Err(Error::input("rule representation without a rule line")),
            (Representation::Rule, Some(_), false) => return Err(Error::input("rule documents carry no entries")),
            (Representation::Table, Some(_), _) => return Err(Error::input("table documents carry no rule line")),
            _ => {}
        }
        entries.sort_unstable();
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1) {
            return Err(Error::input(format!("entry for column {} position {} given twice", w[0].0, w[0].1)));
        }
        Ok(InstanceDocument { kind, representation, params, rule, entries })
    }

    /// Canonical text: header, sorted parameters, then the rule or the sorted entries.
    pub fn render(&self) -> String {
        let mut out = format!("kind {}\n", self.kind.name());
        out += match self.representation {
            Representation::Table => "representation table\n",
            Representation::Rule => "representation rule\n",
        };
        for (k, v) in &self.params {
            out += &format!("param {k} {v}\n");
        }
        if let Some(r) = &self.rule {
            out += &format!("rule {r}\n");
        }
        for (c, p, v) in &self.entries {
            out += &format!("entry {c} {p} {v}\n");
        }
        out
    }

    fn param(&self, key: &str) -> Result<u64> {
        let v = self.params.get(key).ok_or_else(|| Error::input(format!("missing parameter {key}")))?;
        v.parse().map_err(|_| Error::input(format!("parameter {key} = {v:?} is not a natural number")))
    }

    fn param_or(&self, key: &str, default: u64) -> Result<u64> {
        if self.params.contains_key(key) {
            self.param(key)
        } else {
            Ok(default)
        }
    }

    fn text(&self, key: &str) -> Result<&str> {
        self.params.get(key).map(String::as_str).ok_or_else(|| Error::input(format!("missing parameter {key}")))
    }

    fn colors(&self) -> Result<Colors> {
        match self.params.get("colors").map(String::as_str) {
            Some("omega") => Ok(Colors::Omega),
            Some(_) => Ok(Colors::Finite(self.param("colors")?)),
            None => Ok(Colors::Finite(2)),
        }
    }

    /// Entries grouped by column, each required to cover `0..extent` exactly.
    fn columns(&self, count: u64, extent: u64, max: Option<u64>) -> Result<Vec<Vec<u64>>> {
        let mut cols = vec![Vec::with_capacity(extent as usize); count as usize];
        for &(c, p, v) in &self.entries {
            if c >= count {
                return Err(Error::input(format!("entry for column {c}, document declares {count} columns")));
            }
            if p >= extent {
                return Err(Error::input(format!("entry at position {p} of column {c} lies outside the domain (extent {extent})")));
            }
            if let Some(m) = max.filter(|&m| v >= m) {
                return Err(Error::input(format!("entry at column {c} position {p} has value {v}, must be below {m}")));
            }
            let col = &mut cols[c as usize];
            if col.len() as u64 != p {
                return Err(Error::input(format!("column {c} has no entry at position {}", col.len())));
            }
            col.push(v);
        }
        for (c, col) in cols.iter().enumerate() {
            if (col.len() as u64) < extent {
                return Err(Error::input(format!("column {c} has no entry at position {}", col.len())));
            }
        }
        Ok(cols)
    }

    pub fn resolve(&self) -> Result<Instance> {
        match self.representation {
            Representation::Table => self.resolve_table(),
            Representation::Rule => resolve_rule(self, self.rule.as_deref().expect("checked at parse")),
        }
    }

    fn resolve_table(&self) -> Result<Instance> {
        let columns = self.param_or("columns", 1)?;
        match self.kind {
            Kind::Coloring => {
                let (n, domain, colors) = (self.param("arity")? as usize, self.param("domain")?, self.colors()?);
                let max = colors.finite();
                let cols = self.columns(columns, tuples_below(domain, n), max)?;
                Ok(Instance::Colorings(
                    cols.into_iter()
                        .enumerate()
                        .map(|(c, t)| {
                            let label = format!("table{c}[n={n},domain={domain}]");
                            Coloring::from_table(label, n, colors, t, Coloring::new("zero", n, colors, |_| 0))
                        })
                        .collect(),
                ))
            }
            Kind::Tree => {
                let depth = self.param("depth")? as usize;
                let col = self.columns(1, tree_extent(depth), Some(2))?.remove(0);
                for pos in 0..col.len() as u64 {
                    let s = node_at(pos);
                    if s.len() > 1 && col[pos as usize] == 1 && col[node_index(&s.truncate(s.len() - 1)) as usize] == 0 {
                        return Err(Error::input(format!("node {s} is in the tree but its parent is not")));
                    }
                }
                let label = format!("table-tree[depth={depth}]");
                // Strings longer than the table extend their depth-`depth` node freely.
                Ok(Instance::Tree(Tree::new(label, move |s: &Prefix| {
                    (1..=s.len().min(depth)).all(|l| col[node_index(&s.truncate(l)) as usize] == 1)
                })))
            }
            Kind::Point => {
                let len = self.param("length")?;
                let col = self.columns(1, len, Some(2))?.remove(0);
                let pad = self.param_or("pad", 0)? == 1;
                let bits = Prefix::new(col.iter().map(|&b| b == 1).collect());
                Ok(Instance::Point(Point::padded(bits, pad)))
            }
            Kind::Family => {
                let len = self.param("length")?;
                let cols = self.columns(columns, len, Some(2))?;
                let name = format!("table-family[{columns}x{len}]");
                Ok(Instance::Family(family(&name, move |i| {
                    let bits = cols.get(i as usize).map_or_else(Vec::new, |c| c.iter().map(|&b| b == 1).collect());
                    Point::padded(Prefix::new(bits), false)
                })))
            }
            Kind::Predicate => Err(Error::input("predicates have rule representations only")),
        }
    }
}

fn expected_fields(key: &str) -> usize {
    match key {
        "param" => 2,
        "entry" => 3,
        _ => 1,
    }
}

/// Named generators, by kind: `(kind, rule, parameters)`.
pub const RULES: &[(&str, &str, &str)] = &[
    ("coloring", "parity-sum", "arity, colors (default 2)"),
    ("coloring", "constant", "arity, colors, color"),
    ("coloring", "min-mod", "arity, colors"),
    ("coloring", "max-mod", "arity, colors"),
    ("coloring", "random", "arity, colors, seed, domain"),
    ("coloring", "bounded", "bound, seed, domain, columns (default 1)"),
    ("coloring", "jump", "predicate, columns"),
    ("coloring", "kummer", "predicate, indices (comma separated)"),
    ("tree", "full", ""),
    ("tree", "starts-with", "bit"),
    ("tree", "no-consecutive-ones", ""),
    ("tree", "dead", ""),
    ("point", "zeros", ""),
    ("point", "ones", ""),
    ("point", "random", "seed"),
    ("point", "periodic", "pattern"),
    ("family", "random", "seed"),
    ("predicate", "jump", "name"),
    ("predicate", "kummer", "name"),
];

fn resolve_rule(d: &InstanceDocument, rule: &str) -> Result<Instance> {
    let unary = |c: Coloring| Ok(Instance::Colorings(vec![c]));
    match (d.kind, rule) {
        (Kind::Coloring, "parity-sum" | "min-mod" | "max-mod" | "constant") => {
            let n = d.param("arity")? as usize;
            let k = d.param_or("colors", 2)?;
            if n == 0 || k == 0 {
                return Err(Error::input("arity and colors must be positive"));
            }
            let f = match rule {
                "parity-sum" => Coloring::finite("parity-sum", n, k, move |xs| xs.iter().sum::<u64>() % k),
                "min-mod" => Coloring::finite("min-mod", n, k, move |xs| xs[0] % k),
                "max-mod" => Coloring::finite("max-mod", n, k, move |xs| xs[xs.len() - 1] % k),
                _ => {
                    let c = d.param("color")?;
                    if c >= k {
                        return Err(Error::input(format!("color {c} is not below {k}")));
                    }
                    Coloring::constant(n, k, c)
                }
            };
            unary(f)
        }
        (Kind::Coloring, "random") => {
            let (n, k) = (d.param("arity")? as usize, d.param_or("colors", 2)?);
            unary(random_table(d.param("seed")?, n, k, d.param("domain")?))
        }
        (Kind::Coloring, "bounded") => {
            let (b, seed, domain) = (d.param("bound")?, d.param("seed")?, d.param("domain")?);
            let cols = d.param_or("columns", 1)?;
            Ok(Instance::Colorings((0..cols).map(|i| bounded_sample(cantor_pair(seed, i), b, domain)).collect()))
        }
        (Kind::Coloring, "jump") => {
            let p = jump_predicate(d.text("predicate")?)?;
            Ok(Instance::Colorings((0..d.param("columns")?).map(|i| jump_coloring(&p, i)).collect()))
        }
        (Kind::Coloring, "kummer") => {
            let h = limit_predicate(d.text("predicate")?)?;
            let xs = d
                .text("indices")?
                .split(',')
                .map(|s| s.parse::<u64>().map_err(|_| Error::input(format!("index {s:?} is not a natural number"))))
                .collect::<Result<Vec<_>>>()?;
            unary(kummer_coloring(&h, &xs))
        }
        (Kind::Tree, "full") => Ok(Instance::Tree(Tree::full())),
        (Kind::Tree, "starts-with") => Ok(Instance::Tree(Tree::starts_with(d.param("bit")? == 1))),
        (Kind::Tree, "no-consecutive-ones") => Ok(Instance::Tree(Tree::no_consecutive_ones())),
        (Kind::Tree, "dead") => Ok(Instance::Tree(Tree::dead())),
        (Kind::Point, "zeros") => Ok(Instance::Point(Point::zeros())),
        (Kind::Point, "ones") => Ok(Instance::Point(Point::ones())),
        (Kind::Point, "random") => Ok(Instance::Point(Point::random(d.param("seed")?))),
        (Kind::Point, "periodic") => {
            let pat = d.text("pattern")?;
            if pat.is_empty() || !pat.chars().all(|c| c == '0' || c == '1') {
                return Err(Error::input(format!("pattern {pat:?} is not a nonempty bit string")));
            }
            Ok(Instance::Point(Point::periodic(pat)))
        }
        (Kind::Family, "random") => {
            let seed = d.param("seed")?;
            Ok(Instance::Family(family(&format!("random-family[{seed}]"), move |i| Point::random(cantor_pair(seed, i)))))
        }
        (Kind::Predicate, "jump") => Ok(Instance::Jump(jump_predicate(d.text("name")?)?)),
        (Kind::Predicate, "kummer") => Ok(Instance::Limit(limit_predicate(d.text("name")?)?)),
        (kind, _) => Err(Error::input(format!("no {} rule named {rule:?}", kind.name()))),
    }
}

pub fn jump_predicate(name: &str) -> Result<BoundedPredicate> {
    jump_test_predicates()
        .into_iter()
        .find(|p| p.label() == name)
        .ok_or_else(|| Error::input(format!("no jump predicate named {name:?}")))
}

pub fn limit_predicate(name: &str) -> Result<LimitPredicate> {
    kummer_test_predicates()
        .into_iter()
        .find(|p| p.label() == name)
        .ok_or_else(|| Error::input(format!("no limit predicate named {name:?}")))
}

/// A table document for the colorings, each tabulated on `[0, domain)`.
pub fn coloring_table(fs: &[Coloring], domain: u64) -> Result<InstanceDocument> {
    let first = fs.first().ok_or_else(|| Error::input("no colorings to save"))?;
    let n = first.arity();
    if fs.iter().any(|f| f.arity() != n || f.colors() != first.colors()) {
        return Err(Error::input("colorings in one document share arity and colors"));
    }
    let all: Vec<u64> = (0..domain).collect();
    let mut doc = InstanceDocument::table(Kind::Coloring)
        .with_param("arity", n)
        .with_param("domain", domain)
        .with_param("colors", first.colors().finite().map_or("omega".to_string(), |k| k.to_string()));
    if fs.len() > 1 {
        doc = doc.with_param("columns", fs.len());
    }
    for (c, f) in fs.iter().enumerate() {
        for (rank, t) in tuples_of(&all, n).iter().enumerate() {
            doc.entries.push((c as u64, rank as u64, f.color(t)));
        }
    }
    doc.entries.sort_unstable();
    Ok(doc)
}

pub fn load_instance(text: &str) -> Result<Instance> {
    InstanceDocument::parse(text)?.resolve()
}

pub fn save_instance(doc: &InstanceDocument) -> String {
    doc.render()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip_is_exact() {
        let f = Coloring::finite("sum3", 2, 3, |xs| (xs[0] + 2 * xs[1]) % 3);
        let doc = coloring_table(std::slice::from_ref(&f), 6).unwrap();
        let text = save_instance(&doc);
        let back = InstanceDocument::parse(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(save_instance(&back), text);
        let Instance::Colorings(gs) = back.resolve().unwrap() else { panic!("wrong kind") };
        for t in tuples_of(&(0..6).collect::<Vec<_>>(), 2) {
            assert_eq!(gs[0].color(&t), f.color(&t));
        }
    }

    #[test]
    fn parity_sum_rule_loads() {
        let text = "kind coloring\nrepresentation rule\nrule parity-sum\nparam arity 2\nparam colors 2\n";
        let Instance::Colorings(fs) = load_instance(text).unwrap() else { panic!("wrong kind") };
        assert_eq!(fs[0].color(&[1, 4]), 1);
        assert_eq!(fs[0].color(&[3, 5]), 0);
    }

    #[test]
    fn out_of_range_colors_are_rejected() {
        let text = "kind coloring\nrepresentation table\nparam arity 1\nparam colors 2\nparam domain 2\nentry 0 0 1\nentry 0 1 2\n";
        let err = load_instance(text).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.message().contains("value 2"), "{err}");
    }

    #[test]
    fn malformed_lines_report_their_location() {
        let err = load_instance("kind coloring\nrepresentation table\nentry 0 x 1\n").unwrap_err();
        assert!(err.message().starts_with("line 3:"), "{err}");
        let err = load_instance("kind cube\n").unwrap_err();
        assert!(err.message().starts_with("line 1:"), "{err}");
        let err = load_instance("kind point\nrepresentation table\nparam length 3\nentry 0 0 1\nentry 0 2 1\n").unwrap_err();
        assert!(err.message().contains("position 1"), "{err}");
    }

    #[test]
    fn trees_must_be_closed_under_prefixes() {
        // Nodes in order: 0, 1, 00, 01, 10, 11. Keeping 01 without 0 is not a tree.
        let rows = |bits: [u8; 6]| bits.iter().enumerate().map(|(i, b)| format!("entry 0 {i} {b}\n")).collect::<String>();
        let bad = format!("kind tree\nrepresentation table\nparam depth 2\n{}", rows([0, 1, 0, 1, 1, 1]));
        assert!(load_instance(&bad).is_err());
        let good = format!("kind tree\nrepresentation table\nparam depth 2\n{}", rows([0, 1, 0, 0, 1, 1]));
        let Instance::Tree(t) = load_instance(&good).unwrap() else { panic!("wrong kind") };
        assert!(t.contains(&Prefix::parse("111").unwrap()));
        assert!(!t.contains(&Prefix::parse("01").unwrap()));
    }

    #[test]
    fn family_columns_use_cantor_positions() {
        let text = "kind family\nrepresentation table\nparam columns 2\nparam length 2\n\
                    entry 0 0 1\nentry 0 1 0\nentry 1 0 0\nentry 1 1 1\n";
        let Instance::Family(p) = load_instance(text).unwrap() else { panic!("wrong kind") };
        assert!(p.bit(cantor_pair(0, 0)));
        assert!(!p.bit(cantor_pair(0, 1)));
        assert!(p.bit(cantor_pair(1, 1)));
    }

    #[test]
    fn predicates_resolve_by_name() {
        let text = "kind predicate\nrepresentation rule\nrule jump\nparam name multiples\n";
        assert!(matches!(load_instance(text).unwrap(), Instance::Jump(_)));
        let text = "kind predicate\nrepresentation rule\nrule kummer\nparam name nope\n";
        assert!(load_instance(text).is_err());
    }
}
