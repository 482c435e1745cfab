//! Exact solver for the online matching game.
//!
//! The adversary presents distinct left vertices one at a time; the matcher
//! must irrevocably pair each with a still-unused neighbor. A position is
//! the pair (presented left set, used right set), both as bit masks, and is
//! memoized without any symmetry reduction.

use std::collections::HashMap;

use super::MaskTable;
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::graph::BiGraph;

/// Default cap on memoized positions.
pub const GAME_STATE_BOUND: usize = 10_000_000;

/// Matcher replies of a winning strategy, keyed by
/// `(presented mask, used mask, arriving left index)`.
pub type StrategyTable = HashMap<(u64, u64, usize), usize>;

/// A winning adversary: present `present`, then for every reply the matcher
/// could make continue with the corresponding subtree. An empty reply list
/// means the matcher is already stuck.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdversaryTree {
    pub present: BitString,
    pub replies: Vec<(usize, AdversaryTree)>,
}

impl AdversaryTree {
    /// Plays the tree against `respond`, returning the presented strings.
    /// Stops when the responder has no move or the tree is exhausted.
    pub fn play(&self, mut respond: impl FnMut(&BitString) -> Option<usize>) -> Vec<BitString> {
        let mut out = Vec::new();
        let mut node = self;
        loop {
            out.push(node.present);
            let Some(y) = respond(&node.present) else { return out };
            match node.replies.iter().find(|(r, _)| *r == y) {
                Some((_, next)) => node = next,
                None => return out,
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct OnlineVerdict {
    pub matchable: bool,
    pub strategy: Option<StrategyTable>,
    pub adversary: Option<AdversaryTree>,
    pub positions: usize,
}

/// A solved (or solvable) game instance for one graph and target size.
pub struct OnlineGame {
    left: Vec<BitString>,
    masks: Vec<u64>,
    size: u32,
    bound: usize,
    memo: HashMap<(u64, u64), bool>,
}

impl OnlineGame {
    pub fn new(g: &BiGraph, size: usize, bound: usize) -> Result<Self> {
        if g.domain().cardinality() > 64 || g.right_size() > 64 {
            return Err(Error::Capacity(format!(
                "game solver handles at most 64 vertices per side, got {} x {}",
                g.domain().cardinality(),
                g.right_size()
            )));
        }
        if size > g.right_size() {
            return Err(Error::Parameter(format!(
                "target size {size} exceeds the {} right vertices",
                g.right_size()
            )));
        }
        if size as u64 > g.domain().cardinality() {
            return Err(Error::Parameter(format!(
                "target size {size} exceeds the {} left vertices",
                g.domain().cardinality()
            )));
        }
        let table = MaskTable::build(g)?;
        let masks = (0..table.left.len()).map(|i| table.small(i)).collect();
        Ok(OnlineGame {
            left: table.left,
            masks,
            size: size as u32,
            bound,
            memo: HashMap::new(),
        })
    }

    pub fn left(&self) -> &[BitString] {
        &self.left
    }

    pub fn positions(&self) -> usize {
        self.memo.len()
    }

    /// Can the matcher force success from this position?
    pub fn wins(&mut self, presented: u64, used: u64) -> Result<bool> {
        if presented.count_ones() >= self.size {
            return Ok(true);
        }
        if let Some(&v) = self.memo.get(&(presented, used)) {
            return Ok(v);
        }
        if self.memo.len() >= self.bound {
            return Err(Error::Capacity(format!(
                "game search exceeded {} positions",
                self.bound
            )));
        }
        let mut result = true;
        for x in 0..self.left.len() {
            if presented >> x & 1 == 1 {
                continue;
            }
            if self.winning_reply(presented, used, x)?.is_none() {
                result = false;
                break;
            }
        }
        self.memo.insert((presented, used), result);
        Ok(result)
    }

    /// Lowest-index reply to arrival `x` that keeps the matcher winning.
    pub fn winning_reply(&mut self, presented: u64, used: u64, x: usize) -> Result<Option<usize>> {
        let free = self.masks[x] & !used;
        for y in bits(free) {
            if self.wins(presented | 1 << x, used | 1 << y)? {
                return Ok(Some(y));
            }
        }
        Ok(None)
    }

    fn winning_reply_count(&mut self, presented: u64, used: u64, x: usize) -> Result<usize> {
        let mut n = 0;
        for y in bits(self.masks[x] & !used) {
            if self.wins(presented | 1 << x, used | 1 << y)? {
                n += 1;
            }
        }
        Ok(n)
    }

    pub fn solve(&mut self) -> Result<OnlineVerdict> {
        let matchable = self.wins(0, 0)?;
        let (strategy, adversary) = if matchable {
            let mut table = StrategyTable::new();
            self.collect_strategy(0, 0, &mut table)?;
            (Some(table), None)
        } else {
            (None, Some(self.adversary_tree(0, 0)?))
        };
        Ok(OnlineVerdict {
            matchable,
            strategy,
            adversary,
            positions: self.memo.len(),
        })
    }

    fn collect_strategy(&mut self, presented: u64, used: u64, table: &mut StrategyTable) -> Result<()> {
        if presented.count_ones() >= self.size {
            return Ok(());
        }
        for x in 0..self.left.len() {
            if presented >> x & 1 == 1 || table.contains_key(&(presented, used, x)) {
                continue;
            }
            let y = self
                .winning_reply(presented, used, x)?
                .ok_or_else(|| Error::Invariant("winning position without a winning reply".into()))?;
            table.insert((presented, used, x), y);
            self.collect_strategy(presented | 1 << x, used | 1 << y, table)?;
        }
        Ok(())
    }

    fn adversary_tree(&mut self, presented: u64, used: u64) -> Result<AdversaryTree> {
        for x in 0..self.left.len() {
            if presented >> x & 1 == 1 {
                continue;
            }
            if self.winning_reply(presented, used, x)?.is_some() {
                continue;
            }
            let mut replies = Vec::new();
            for y in bits(self.masks[x] & !used) {
                replies.push((y, self.adversary_tree(presented | 1 << x, used | 1 << y)?));
            }
            return Ok(AdversaryTree {
                present: self.left[x],
                replies,
            });
        }
        Err(Error::Invariant("losing position without a refuting arrival".into()))
    }

    /// Replays the game against an external matcher with an adversary that
    /// always presents the arrival leaving the fewest winning replies (ties
    /// to the lowest index). Returns the presented strings; the line stops
    /// early if the responder reports no move.
    pub fn replay_hardest(&mut self, mut respond: impl FnMut(&BitString) -> Option<usize>) -> Result<Vec<BitString>> {
        let (mut presented, mut used) = (0u64, 0u64);
        let mut line = Vec::new();
        while presented.count_ones() < self.size {
            let mut best: Option<(usize, usize)> = None;
            for x in 0..self.left.len() {
                if presented >> x & 1 == 1 {
                    continue;
                }
                let w = self.winning_reply_count(presented, used, x)?;
                if best.is_none_or(|(bw, _)| w < bw) {
                    best = Some((w, x));
                }
            }
            let (_, x) = best.expect("fewer presented vertices than the target size");
            line.push(self.left[x]);
            let Some(y) = respond(&self.left[x]) else { break };
            if y >= 64 || self.masks[x] >> y & 1 == 0 || used >> y & 1 == 1 {
                return Err(Error::Invariant(format!(
                    "responder answered {} with illegal vertex {y}",
                    self.left[x]
                )));
            }
            presented |= 1 << x;
            used |= 1 << y;
        }
        Ok(line)
    }
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let b = m.trailing_zeros() as usize;
            m &= m - 1;
            b
        })
    })
}

/// Exact decision of whether `g` admits online matchings up to size `size`,
/// with a strategy table when it does and a winning adversary when not.
pub fn online_matchable(g: &BiGraph, size: usize) -> Result<OnlineVerdict> {
    OnlineGame::new(g, size, GAME_STATE_BOUND)?.solve()
}
