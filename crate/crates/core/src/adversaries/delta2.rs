//! A sequence of unary `k`-colorings no limit-computable family solves.
//!
//! Column `i` watches the `i`-th approximated set's own column `i`. Whenever the
//! current guess misses a color, the next value is the least missing color; once every
//! color shows up, the next value repeats the color whose first occurrence is latest.

use super::{join, Delta2Approx, StageLog, StageRecord};
use crate::error::{Error, Result};
use crate::problems::{Coloring, Colors, Verdict};
use std::collections::BTreeSet;

#[derive(Clone, Debug)]
pub struct Delta2Run {
    pub k: u64,
    /// `columns[i][s] = f_i(s)`.
    pub columns: Vec<Vec<u64>>,
    pub log: StageLog,
    approx: Delta2Approx,
}

/// How column `e` handles the `e`-th approximated set below the horizon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Defeat {
    /// No member in the upper half of the horizon: treated as finite.
    Finite { members: Vec<u64> },
    /// Every color occurs on the set.
    AllColors { members: usize },
    /// The set keeps growing yet misses colors.
    Escapes { missing: Vec<u64> },
}

/// Build `columns` colorings for `stages` stages each.
pub fn delta2_diagonalizer(k: u64, g: &Delta2Approx, columns: u64, stages: u64) -> Result<Delta2Run> {
    if k < 2 {
        return Err(Error::input(format!("need k >= 2, got {k}")));
    }
    let mut log = StageLog::new(format!("delta2(k={k},g={})", g.label()), false);
    let mut out = vec![Vec::with_capacity(stages as usize); columns as usize];
    for s in 0..stages {
        for i in 0..columns {
            let f = &mut out[i as usize];
            let used: BTreeSet<u64> = (0..s).filter(|&b| g.guess(i, i, b, s)).map(|b| f[b as usize]).collect();
            let record = StageRecord::new(s, "").acted(format!("i={i}")).markers(used.iter().copied().collect());
            let record = match (0..k).find(|n| !used.contains(n)) {
                Some(n) => {
                    f.push(n);
                    StageRecord { case: "case-1".into(), note: format!("f({s})={n}"), ..record }
                }
                None => {
                    let firsts: Vec<u64> =
                        (0..k).map(|n| f.iter().position(|&c| c == n).expect("color in use") as u64).collect();
                    let latest = (0..k).max_by_key(|&n| firsts[n as usize]).expect("k >= 2");
                    f.push(latest);
                    StageRecord {
                        case: "case-2".into(),
                        note: format!("f({s})={latest} firsts={}", join(&firsts)),
                        ..record
                    }
                }
            };
            log.push(record)?;
        }
    }
    Ok(Delta2Run { k, columns: out, log, approx: g.clone() })
}

impl Delta2Run {
    pub fn horizon(&self) -> u64 {
        self.columns.first().map_or(0, |c| c.len() as u64)
    }

    /// Column `i` as a coloring; past the horizon it is 0.
    pub fn column(&self, i: u64) -> Coloring {
        let table = self.columns[i as usize].clone();
        Coloring::from_table(format!("delta2-column{i}"), 1, Colors::Finite(self.k), table, Coloring::constant(1, self.k, 0))
    }

    /// Classify the declared limit of the `e`-th approximated set against column `e`.
    pub fn defeat(&self, e: u64) -> Result<Defeat> {
        if e as usize >= self.columns.len() {
            return Err(Error::input(format!("column {e} was not built")));
        }
        let n = self.horizon();
        let mut members = Vec::new();
        for b in 0..n {
            match self.approx.limit(e, b) {
                Some(true) => members.push(b),
                Some(false) => {}
                None => return Err(Error::input(format!("{} declares no stabilization", self.approx.label()))),
            }
        }
        let f = &self.columns[e as usize];
        if members.iter().all(|&b| 2 * b < n) {
            return Ok(Defeat::Finite { members });
        }
        let seen: BTreeSet<u64> = members.iter().map(|&b| f[b as usize]).collect();
        let missing: Vec<u64> = (0..self.k).filter(|c| !seen.contains(c)).collect();
        Ok(if missing.is_empty() { Defeat::AllColors { members: members.len() } } else { Defeat::Escapes { missing } })
    }

    /// Pass when the `e`-th set is finite at the horizon or uses every color.
    pub fn check_defeats(&self, e: u64) -> Verdict {
        match self.defeat(e) {
            Ok(Defeat::Finite { .. } | Defeat::AllColors { .. }) => Verdict::Pass,
            Ok(Defeat::Escapes { missing }) => Verdict::Fail(format!("set {e} is thin for column {e}, missing {missing:?}")),
            Err(err) => Verdict::Inconclusive(err.to_string()),
        }
    }
}
