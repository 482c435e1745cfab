//! The matching machine: programs are run in canonical order and each new
//! output is matched online into the layered graph of its program length.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use super::machine::{ToyMachine, ENUMERATION_CAP};
use crate::bits::BitString;
use crate::construct::{build_eomt, BuildConfig, LayeredGraph};
use crate::error::{Error, Result};
use crate::matcher::new_matcher;

/// The layered graphs for levels `0..=top`, all capped at length `hi`.
#[derive(Clone, Debug)]
pub struct LevelGraphs {
    hi: u32,
    levels: Vec<Arc<LayeredGraph>>,
}

impl LevelGraphs {
    /// Builds levels `k = 0..=min(k_max, hi)`; level `k` covers lengths
    /// `k..=hi`.
    pub fn build(k_max: u32, hi: u32, cfg: &BuildConfig) -> Result<Self> {
        if k_max > ENUMERATION_CAP {
            return Err(Error::Parameter(format!("k_max = {k_max} exceeds {ENUMERATION_CAP}")));
        }
        let levels = (0..=k_max.min(hi))
            .map(|k| build_eomt(k, hi, cfg).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        Ok(LevelGraphs { hi, levels })
    }

    pub fn hi(&self) -> u32 {
        self.hi
    }

    /// Highest level built.
    pub fn top(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn level(&self, k: u32) -> Option<&LayeredGraph> {
        self.levels.get(k as usize).map(|g| g.as_ref())
    }
}

/// Per level, the outputs matched so far and the right vertex each took.
#[derive(Clone, Debug)]
pub struct DovetailMap {
    graphs: LevelGraphs,
    condition: Option<BitString>,
    /// `maps[k]`: right index of level `k` to output.
    maps: Vec<BTreeMap<usize, BitString>>,
    /// `matched[k]`: outputs already matched at level `k`.
    matched: Vec<HashSet<BitString>>,
}

impl DovetailMap {
    pub fn graphs(&self) -> &LevelGraphs {
        &self.graphs
    }

    pub fn condition(&self) -> Option<&BitString> {
        self.condition.as_ref()
    }

    pub fn lookup(&self, k: u32, z: usize) -> Option<BitString> {
        self.maps.get(k as usize)?.get(&z).copied()
    }

    pub fn level_entries(&self, k: u32) -> usize {
        self.maps.get(k as usize).map_or(0, BTreeMap::len)
    }

    pub fn is_matched(&self, k: u32, x: &BitString) -> bool {
        self.matched.get(k as usize).is_some_and(|s| s.contains(x))
    }

    /// Text form: a `LEVEL k` line per level, then `<z> <bits>` lines in
    /// increasing `z`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, map) in self.maps.iter().enumerate() {
            out.push_str(&format!("LEVEL {k}\n"));
            for (z, x) in map {
                out.push_str(&format!("{z} {x}\n"));
            }
        }
        out
    }
}

/// Runs the dovetail of `m` over the given levels. With `condition`, every
/// program is run on it and the matchers belong to that condition alone.
pub fn dovetail_over(m: &ToyMachine, graphs: &LevelGraphs, condition: Option<&BitString>) -> Result<DovetailMap> {
    let y = condition.copied().unwrap_or(BitString::EMPTY);
    let levels = graphs.top() as usize + 1;
    let mut maps = vec![BTreeMap::new(); levels];
    let mut matched = vec![HashSet::new(); levels];
    for k in 0..levels as u32 {
        let g = graphs.level(k).expect("level built");
        let mut st = new_matcher(g);
        for p in BitString::all_of_length(k) {
            let Some(x) = m.run_cond(&p, &y) else { continue };
            if x.len() < k || x.len() > graphs.hi() || matched[k as usize].contains(&x) {
                continue;
            }
            let rec = st.match_vertex(&x).map_err(|e| match e {
                Error::MatchingFailure(x) => Error::Invariant(format!("level {k} could not match {x} produced by {p}")),
                e => e,
            })?;
            maps[k as usize].insert(rec.global, x);
            matched[k as usize].insert(x);
        }
    }
    Ok(DovetailMap {
        graphs: graphs.clone(),
        condition: condition.copied(),
        maps,
        matched,
    })
}

/// Builds the level graphs and runs the unconditional dovetail.
pub fn build_dovetail(m: &ToyMachine, k_max: u32, domain_hi: u32, cfg: &BuildConfig) -> Result<DovetailMap> {
    let graphs = LevelGraphs::build(k_max, domain_hi, cfg)?;
    dovetail_over(m, &graphs, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_one_gets_at_most_one_arrival() {
        let dm = build_dovetail(&ToyMachine::rle1(), 4, 6, &BuildConfig::new(3)).unwrap();
        // "0" prints the empty string, "1" is invalid.
        assert_eq!(dm.level_entries(0), 0);
        assert_eq!(dm.level_entries(1), 0);
        // "0a" prints one bit, so level 2 sees nothing long enough either.
        assert_eq!(dm.level_entries(2), 0);
        for k in 0..=dm.graphs().top() {
            assert!(dm.level_entries(k) <= 1 << k);
        }
    }

    #[test]
    fn cond1_fills_levels() {
        let y: BitString = "101".parse().unwrap();
        let graphs = LevelGraphs::build(5, 5, &BuildConfig::new(3)).unwrap();
        let dm = dovetail_over(&ToyMachine::cond1(), &graphs, Some(&y)).unwrap();
        // "01" prints y, which has length 3 >= 2.
        assert!(dm.is_matched(2, &y));
        for k in 0..=5 {
            assert!(dm.level_entries(k) <= 1 << k);
        }
        assert!(dm.to_text().starts_with("LEVEL 0\nLEVEL 1\nLEVEL 2\n"));
    }

    #[test]
    fn rebuild_is_identical() {
        let a = build_dovetail(&ToyMachine::cond1(), 6, 6, &BuildConfig::new(1)).unwrap();
        let b = build_dovetail(&ToyMachine::cond1(), 6, 6, &BuildConfig::new(1)).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let y: BitString = "0110".parse().unwrap();
        let c = dovetail_over(&ToyMachine::cond1(), a.graphs(), Some(&y)).unwrap();
        let d = dovetail_over(&ToyMachine::cond1(), b.graphs(), Some(&y)).unwrap();
        assert_eq!(c.to_text(), d.to_text());
        assert!(c.level_entries(2) > 0);
    }
}
