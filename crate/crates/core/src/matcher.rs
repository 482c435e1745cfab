//! Greedy online matching on a layered graph: each arrival takes the
//! lowest-index unused neighbor in the highest layer that still has one.

use std::collections::HashMap;
use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bits::BitString;
use crate::construct::LayeredGraph;
use crate::error::{Error, Result};

/// Outcome of one arrival.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct MatchRecord {
    pub x: BitString,
    pub global: usize,
    pub layer: i32,
    /// Neighbor entries inspected before the answer was found.
    pub probes: usize,
}

impl fmt::Display for MatchRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {} layer={} probes={}",
            self.x, self.global, self.layer, self.probes
        )
    }
}

/// State of the greedy matcher over one [`LayeredGraph`].
#[derive(Clone)]
pub struct MatchState {
    graph: LayeredGraph,
    used: Vec<bool>,
    assignment: HashMap<BitString, usize>,
    records: Vec<MatchRecord>,
    /// Failed layer scans, indexed by layer id + 1.
    census: Vec<u64>,
    /// Sorted distinct global neighbors per layer, top layer first.
    rows: HashMap<BitString, Vec<Vec<usize>>>,
}

impl fmt::Debug for MatchState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatchState")
            .field("k", &self.graph.k())
            .field("arrivals", &self.records.len())
            .field("census", &self.census)
            .finish_non_exhaustive()
    }
}

pub fn new_matcher(g: &LayeredGraph) -> MatchState {
    MatchState {
        graph: g.clone(),
        used: vec![false; g.right_size()],
        assignment: HashMap::new(),
        records: Vec::new(),
        census: vec![0; g.k() as usize + 1],
        rows: HashMap::new(),
    }
}

impl MatchState {
    pub fn graph(&self) -> &LayeredGraph {
        &self.graph
    }

    pub fn arrivals(&self) -> usize {
        self.records.len()
    }

    pub fn capacity(&self) -> usize {
        1 << self.graph.k()
    }

    pub fn is_used(&self, global: usize) -> bool {
        self.used[global]
    }

    pub fn assigned(&self, x: &BitString) -> Option<usize> {
        self.assignment.get(x).copied()
    }

    pub fn records(&self) -> &[MatchRecord] {
        &self.records
    }

    /// One line per arrival, in arrival order.
    pub fn transcript(&self) -> String {
        self.records.iter().map(|r| format!("{r}\n")).collect()
    }

    fn layer_rows(&mut self, x: &BitString) -> Result<&Vec<Vec<usize>>> {
        if !self.rows.contains_key(x) {
            let mut per_layer = Vec::with_capacity(self.graph.layers().len());
            for l in self.graph.layers().iter().rev() {
                let mut row: Vec<usize> = l.graph.neighbors(x)?.into_iter().map(|r| r + l.offset).collect();
                row.sort_unstable();
                row.dedup();
                per_layer.push(row);
            }
            self.rows.insert(*x, per_layer);
        }
        Ok(&self.rows[x])
    }

    /// Matches a new arrival.
    pub fn match_vertex(&mut self, x: &BitString) -> Result<MatchRecord> {
        let domain = self.graph.domain();
        if !domain.contains(x) {
            return Err(Error::Domain(*x, domain.lo(), domain.hi()));
        }
        if self.assignment.contains_key(x) {
            return Err(Error::Duplicate(*x));
        }
        if self.arrivals() >= self.capacity() {
            return Err(Error::Capacity(format!(
                "{} arrivals already matched, the limit is 2^{}",
                self.arrivals(),
                self.graph.k()
            )));
        }
        let k = self.graph.k() as i32;
        let rows = self.layer_rows(x)?.clone();
        let mut probes = 0;
        for (depth, row) in rows.iter().enumerate() {
            let layer = k - 1 - depth as i32;
            let mut found = None;
            for &r in row {
                probes += 1;
                if !self.used[r] {
                    found = Some(r);
                    break;
                }
            }
            match found {
                Some(global) => {
                    self.used[global] = true;
                    self.assignment.insert(*x, global);
                    let rec = MatchRecord {
                        x: *x,
                        global,
                        layer,
                        probes,
                    };
                    self.records.push(rec);
                    return Ok(rec);
                }
                None => self.census[(layer + 1) as usize] += 1,
            }
        }
        Err(Error::MatchingFailure(*x))
    }

    /// Failed scans per layer, indexed by layer id + 1 (layer `-1` first).
    pub fn failure_census(&self) -> &[u64] {
        &self.census
    }

    /// Whether layer `i >= 0` failed at most `2^i` times and layer `-1`
    /// never did.
    pub fn census_within_bounds(&self) -> bool {
        self.census[0] == 0 && self.census[1..].iter().enumerate().all(|(i, &c)| c <= 1 << i)
    }

    /// Undoes arrivals back to the first `len` records. Simulation aid for
    /// adversary searches; the matcher itself never revises an answer.
    pub(crate) fn rollback(&mut self, len: usize) {
        let k = self.graph.k() as i32;
        while self.records.len() > len {
            let rec = self.records.pop().expect("non-empty");
            self.used[rec.global] = false;
            self.assignment.remove(&rec.x);
            for layer in rec.layer + 1..k {
                self.census[(layer + 1) as usize] -= 1;
            }
        }
    }

    /// Independent consistency check of the current state.
    pub fn check_invariants(&self) -> Result<()> {
        let mut seen = vec![false; self.used.len()];
        for rec in &self.records {
            if seen[rec.global] {
                return Err(Error::Invariant(format!("right vertex {} assigned twice", rec.global)));
            }
            seen[rec.global] = true;
            if self.assignment.get(&rec.x) != Some(&rec.global) {
                return Err(Error::Invariant(format!("assignment of {} changed", rec.x)));
            }
            if !self.graph.neighbors(&rec.x)?.contains(&rec.global) {
                return Err(Error::Invariant(format!("{} matched to a non-neighbor", rec.x)));
            }
            if self.graph.layer_of(rec.global) != Some(rec.layer) {
                return Err(Error::Invariant(format!("layer of {} misreported", rec.x)));
            }
        }
        if seen != self.used || self.assignment.len() != self.records.len() {
            return Err(Error::Invariant("used flags disagree with the assignment".into()));
        }
        if !self.census_within_bounds() {
            return Err(Error::Invariant(format!("failure census {:?} over bound", self.census)));
        }
        Ok(())
    }
}

/// Summary of an adversary run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AdversaryReport {
    pub sequences: u64,
    /// First sequence (in search or trial order) that broke the matcher.
    pub failure: Option<Vec<BitString>>,
    /// Largest count seen per layer, indexed by layer id + 1.
    pub max_census: Vec<u64>,
}

impl AdversaryReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    fn absorb_census(&mut self, census: &[u64]) {
        if self.max_census.len() < census.len() {
            self.max_census.resize(census.len(), 0);
        }
        for (m, &c) in self.max_census.iter_mut().zip(census) {
            *m = (*m).max(c);
        }
    }
}

/// Plays every ordered sequence of `2^k` distinct domain strings, checking
/// the state after every arrival.
pub fn exhaustive_adversary(g: &LayeredGraph) -> Result<AdversaryReport> {
    let left: Vec<BitString> = g.domain().iter().collect();
    let target = 1usize << g.k();
    if left.len() < target {
        return Err(Error::Parameter(format!(
            "domain has {} strings, fewer than 2^{}",
            left.len(),
            g.k()
        )));
    }
    let mut st = new_matcher(g);
    let mut report = AdversaryReport::default();
    let mut presented = vec![false; left.len()];
    let mut line = Vec::with_capacity(target);
    dfs(&mut st, &left, &mut presented, &mut line, target, &mut report)?;
    Ok(report)
}

fn dfs(
    st: &mut MatchState,
    left: &[BitString],
    presented: &mut [bool],
    line: &mut Vec<BitString>,
    target: usize,
    report: &mut AdversaryReport,
) -> Result<()> {
    if line.len() == target {
        report.sequences += 1;
        report.absorb_census(st.failure_census());
        return Ok(());
    }
    for i in 0..left.len() {
        if presented[i] || report.failure.is_some() {
            continue;
        }
        let depth = st.arrivals();
        line.push(left[i]);
        match st.match_vertex(&left[i]) {
            Ok(_) if st.census_within_bounds() => {
                presented[i] = true;
                dfs(st, left, presented, line, target, report)?;
                presented[i] = false;
            }
            Ok(_) | Err(Error::MatchingFailure(_)) => {
                report.sequences += 1;
                report.failure = Some(line.clone());
            }
            Err(e) => return Err(e),
        }
        line.pop();
        st.rollback(depth);
    }
    Ok(())
}

/// Runs `trials` independent sequences of `2^k` distinct strings drawn
/// uniformly. Trial `t` uses its own stream of the seed, so the report does
/// not depend on scheduling.
pub fn random_adversary(g: &LayeredGraph, trials: u64, seed: u64) -> Result<AdversaryReport> {
    let n = g.domain().cardinality();
    let target = 1usize << g.k();
    if n < target as u64 || n > usize::MAX as u64 {
        return Err(Error::Parameter(format!(
            "domain of {n} strings cannot host 2^{} arrivals",
            g.k()
        )));
    }
    let chunk = 1024u64;
    let chunks = trials.div_ceil(chunk);
    let partial = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut st = new_matcher(g);
            let mut report = AdversaryReport::default();
            for t in c * chunk..((c + 1) * chunk).min(trials) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t);
                let line: Vec<BitString> = sample(&mut rng, n as usize, target)
                    .into_iter()
                    .map(|i| g.domain().nth(i as u64).expect("index inside domain"))
                    .collect();
                st.rollback(0);
                report.sequences += 1;
                for (j, x) in line.iter().enumerate() {
                    let ok = match st.match_vertex(x) {
                        Ok(_) => st.census_within_bounds(),
                        Err(Error::MatchingFailure(_)) => false,
                        Err(e) => return Err(e),
                    };
                    if !ok {
                        report.failure = Some(line[..=j].to_vec());
                        return Ok(report);
                    }
                }
                report.absorb_census(st.failure_census());
            }
            Ok(report)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = AdversaryReport::default();
    for r in partial {
        total.sequences += r.sequences;
        total.absorb_census(&r.max_census);
        if total.failure.is_none() {
            total.failure = r.failure;
        }
    }
    Ok(total)
}

/// Plays a fixed arrival sequence from a fresh state and returns the
/// records, or the error of the first arrival that could not be matched.
pub fn replay(g: &LayeredGraph, line: &[BitString]) -> Result<Vec<MatchRecord>> {
    let mut st = new_matcher(g);
    for x in line {
        st.match_vertex(x)?;
    }
    Ok(st.records().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{build_eomt, BuildConfig};
    use crate::graph::{BiGraph, LeftDomain};

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn fresh_state() {
        let g = build_eomt(2, 4, &BuildConfig::new(1)).unwrap();
        let st = new_matcher(&g);
        assert_eq!(st.arrivals(), 0);
        assert!((0..7).all(|r| !st.is_used(r)));
        assert!(st.records().is_empty());
        assert_eq!(st.failure_census(), &[0, 0, 0]);
    }

    #[test]
    fn k_zero_uses_the_universal_vertex() {
        let g = build_eomt(0, 3, &BuildConfig::new(1)).unwrap();
        let mut st = new_matcher(&g);
        let rec = st.match_vertex(&bs("101")).unwrap();
        assert_eq!((rec.global, rec.layer, rec.probes), (0, -1, 1));
        assert!(matches!(st.match_vertex(&bs("11")), Err(Error::Capacity(_))));
    }

    #[test]
    fn duplicates_and_foreign_strings_are_rejected() {
        let g = build_eomt(2, 4, &BuildConfig::new(1)).unwrap();
        let mut st = new_matcher(&g);
        st.match_vertex(&bs("010")).unwrap();
        assert!(matches!(st.match_vertex(&bs("010")), Err(Error::Duplicate(_))));
        assert!(matches!(st.match_vertex(&bs("0")), Err(Error::Domain(..))));
        assert_eq!(st.arrivals(), 1);
    }

    #[test]
    fn transcript_format() {
        let g = build_eomt(1, 2, &BuildConfig::new(1)).unwrap();
        let mut st = new_matcher(&g);
        let rec = st.match_vertex(&bs("01")).unwrap();
        assert_eq!(rec.layer, 0);
        assert_eq!(
            st.transcript(),
            format!("01 -> {} layer=0 probes={}\n", rec.global, rec.probes)
        );
    }

    #[test]
    fn layer_descent_and_failure() {
        // Layer 0 gives every string the same single vertex; the second
        // arrival falls to the universal vertex, a third has nowhere to go.
        let d = LeftDomain::new(1, 2).unwrap();
        let g = LayeredGraph::new(
            1,
            d,
            vec![
                BiGraph::complete(d, 1).unwrap(),
                BiGraph::constant(d, 2, vec![1]).unwrap(),
            ],
        )
        .unwrap();
        let mut st = new_matcher(&g);
        assert_eq!(st.match_vertex(&bs("0")).unwrap().global, 2);
        let second = st.match_vertex(&bs("1")).unwrap();
        assert_eq!((second.global, second.layer), (0, -1));
        assert_eq!(st.failure_census(), &[0, 1]);
        st.check_invariants().unwrap();
        // Exceeding the bound on layer 0 is visible in the census check.
        st.rollback(1);
        assert_eq!(st.failure_census(), &[0, 0]);
        assert_eq!(st.arrivals(), 1);
        let report = exhaustive_adversary(&g).unwrap();
        assert!(report.passed());
    }

    #[test]
    fn broken_graph_is_caught() {
        let d = LeftDomain::new(1, 2).unwrap();
        let g = LayeredGraph::new(
            1,
            d,
            vec![
                BiGraph::constant(d, 1, vec![]).unwrap(),
                BiGraph::constant(d, 2, vec![1]).unwrap(),
            ],
        )
        .unwrap();
        let report = exhaustive_adversary(&g).unwrap();
        let line = report.failure.unwrap();
        assert_eq!(line.len(), 2);
        assert!(matches!(replay(&g, &line), Err(Error::MatchingFailure(_))));
        let r = random_adversary(&g, 10, 3).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn exhaustive_k1() {
        let g = build_eomt(1, 3, &BuildConfig::new(2)).unwrap();
        let report = exhaustive_adversary(&g).unwrap();
        assert!(report.passed());
        assert_eq!(report.sequences, 14 * 13);
        assert!(report.max_census[1] <= 1);
    }

    #[test]
    fn answers_never_change_and_replay_is_stable() {
        let g = build_eomt(3, 5, &BuildConfig::new(9)).unwrap();
        let line: Vec<_> = ["000", "0101", "11111", "110", "0000", "111", "10101", "001"]
            .iter()
            .map(|s| bs(s))
            .collect();
        let mut st = new_matcher(&g);
        let mut seen = Vec::new();
        for x in &line {
            seen.push(st.match_vertex(x).unwrap());
            for r in &seen {
                assert_eq!(st.assigned(&r.x), Some(r.global));
            }
            st.check_invariants().unwrap();
        }
        assert_eq!(replay(&g, &line).unwrap(), seen);
        let total: usize = line.iter().map(|x| g.degree_of(x).unwrap()).sum();
        assert!(seen.iter().map(|r| r.probes).sum::<usize>() <= total);
    }

    #[test]
    fn random_adversary_is_reproducible() {
        let g = build_eomt(2, 4, &BuildConfig::new(4)).unwrap();
        let a = random_adversary(&g, 3000, 8).unwrap();
        let b = random_adversary(&g, 3000, 8).unwrap();
        assert!(a.passed());
        assert_eq!(a, b);
        assert_eq!(a.sequences, 3000);
    }
}
