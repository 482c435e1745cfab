//! Ground-truth checks for dispersion and expansion, the exact online
//! matching game, and the lower-bound experiment on tiny graphs.
//!
//! Disperser and expander checks pick one of three routes:
//!
//! * **exhaustive** – enumerate left subsets, pruning branches whose
//!   neighborhood already meets every remaining requirement;
//! * **dual** – enumerate right subsets `T` instead and count the left
//!   vertices whose neighborhoods fit inside `T` (a subset-sum transform over
//!   `2^|R|` masks). A left set `S` violates a bound iff `T = E(S)` does, so
//!   this is exact as well;
//! * **sampled** – uniform random subsets. A reported failure is always a
//!   genuine violation; a pass is only evidence.

mod game;
mod remark;

pub use game::{online_matchable, AdversaryTree, OnlineGame, OnlineVerdict, StrategyTable, GAME_STATE_BOUND};
pub use remark::{remark_lower_bound_experiment, RemarkReport};

use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::graph::{BiGraph, MATERIALIZE_BOUND};
use crate::Rational;

/// How a [`CheckReport`] was obtained.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CheckMode {
    Exhaustive,
    Dual,
    Sampled { trials: u64 },
}

impl fmt::Display for CheckMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckMode::Exhaustive => f.write_str("exhaustive"),
            CheckMode::Dual => f.write_str("dual"),
            CheckMode::Sampled { trials } => write!(f, "sampled({trials})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub passed: bool,
    /// A left set violating the property, present iff `passed` is false.
    pub counterexample: Option<Vec<BitString>>,
    pub mode: CheckMode,
    /// Subsets accounted for: left subsets for exhaustive and sampled runs,
    /// right subsets for dual runs.
    pub checked_count: u64,
    pub note: Option<String>,
}

impl CheckReport {
    fn pass(mode: CheckMode, checked_count: u64) -> Self {
        CheckReport {
            passed: true,
            counterexample: None,
            mode,
            checked_count,
            note: None,
        }
    }

    fn fail(mode: CheckMode, checked_count: u64, witness: Vec<BitString>) -> Self {
        CheckReport {
            passed: false,
            counterexample: Some(witness),
            mode,
            checked_count,
            note: None,
        }
    }
}

/// Requested route; `Auto` follows the documented thresholds.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Method {
    #[default]
    Auto,
    Exhaustive,
    Dual,
    Sampled,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Auto => "auto",
            Method::Exhaustive => "exhaustive",
            Method::Dual => "dual",
            Method::Sampled => "sampled",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Method::Auto),
            "exhaustive" => Ok(Method::Exhaustive),
            "dual" => Ok(Method::Dual),
            "sampled" => Ok(Method::Sampled),
            _ => Err(Error::Parameter(format!("unknown check method {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    /// Largest number of left subsets enumerated before falling back.
    pub exhaustive_bound: u64,
    /// Largest right side for the dual route.
    pub dual_max_right: usize,
    /// Random subsets per checked size in sampled mode.
    pub samples: u64,
    pub seed: u64,
    pub method: Method,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            exhaustive_bound: 1_000_000,
            dual_max_right: 20,
            samples: 10_000,
            seed: 0,
            method: Method::Auto,
        }
    }
}

impl CheckOptions {
    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

/// Smallest integer `>= (1 - eps) * right_size`.
pub fn disperser_requirement(eps: Rational, right_size: usize) -> usize {
    let v = (Rational::from_integer(1) - eps) * Rational::from_integer(right_size as u64);
    v.ceil().to_integer() as usize
}

/// Smallest integer `>= c * size`.
pub fn expander_requirement(c: Rational, size: usize) -> usize {
    (c * Rational::from_integer(size as u64)).ceil().to_integer() as usize
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
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

/// Neighbor sets of every domain string as bit masks.
pub(crate) struct MaskTable {
    pub left: Vec<BitString>,
    pub words: usize,
    pub masks: Vec<u64>,
    pub right_size: usize,
}

impl MaskTable {
    pub fn build(g: &BiGraph) -> Result<Self> {
        let n = g.domain().cardinality();
        if n > MATERIALIZE_BOUND {
            return Err(Error::Capacity(format!(
                "domain {} has {n} strings, above the materialization bound",
                g.domain()
            )));
        }
        let words = g.right_size().div_ceil(64);
        let left: Vec<BitString> = g.domain().iter().collect();
        let mut masks = vec![0u64; left.len() * words];
        let mut buf = Vec::new();
        for (i, x) in left.iter().enumerate() {
            buf.clear();
            g.neighbors_into_unchecked(x, &mut buf);
            let row = &mut masks[i * words..(i + 1) * words];
            for &r in &buf {
                row[r / 64] |= 1 << (r % 64);
            }
        }
        Ok(MaskTable {
            left,
            words,
            masks,
            right_size: g.right_size(),
        })
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.masks[i * self.words..(i + 1) * self.words]
    }

    /// Neighbor mask of vertex `i` as a single word; needs `right_size <= 64`.
    pub fn small(&self, i: usize) -> u64 {
        debug_assert_eq!(self.words, 1);
        self.masks[i]
    }

    fn union_count(&self, set: &[usize]) -> usize {
        let mut acc = vec![0u64; self.words];
        for &i in set {
            for (a, m) in acc.iter_mut().zip(self.row(i)) {
                *a |= m;
            }
        }
        acc.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Left-subset enumeration with union stack and monotone pruning.
///
/// Visits subsets of size `1..=max_size` in lexicographic index order. At
/// each node `requirement(size)` must hold; `saturation` is the union size at
/// which every extension is known to pass. Returns the first violating set.
struct SubsetSearch<'a> {
    table: &'a MaskTable,
    max_size: usize,
    requirement: &'a dyn Fn(usize) -> usize,
    /// Only sets of exactly this size are tested (`None` tests all sizes).
    only_size: Option<usize>,
    saturation: usize,
    stack: Vec<Vec<u64>>,
    chosen: Vec<usize>,
    checked: u64,
}

impl SubsetSearch<'_> {
    fn run(&mut self) -> Option<Vec<usize>> {
        self.stack = vec![vec![0u64; self.table.words]];
        self.descend(0)
    }

    /// Number of tested subsets that extend the current node (excluding it).
    fn extensions(&self, remaining: u64) -> u64 {
        let depth = self.chosen.len();
        match self.only_size {
            Some(k) => binomial(remaining, (k - depth) as u64),
            None => (1..=(self.max_size - depth) as u64)
                .map(|t| binomial(remaining, t))
                .fold(0u64, |a, b| a.saturating_add(b)),
        }
    }

    fn descend(&mut self, start: usize) -> Option<Vec<usize>> {
        let n = self.table.left.len();
        let depth = self.chosen.len();
        for i in start..n {
            let mut next = self.stack[depth].clone();
            for (a, m) in next.iter_mut().zip(self.table.row(i)) {
                *a |= m;
            }
            let covered: usize = next.iter().map(|w| w.count_ones() as usize).sum();
            self.chosen.push(i);
            let size = depth + 1;
            let tested = self.only_size.is_none_or(|k| k == size);
            if tested {
                self.checked += 1;
                if covered < (self.requirement)(size) {
                    return Some(self.chosen.clone());
                }
            }
            if size < self.max_size {
                let remaining = (n - i - 1) as u64;
                if covered >= self.saturation {
                    self.checked = self.checked.saturating_add(self.extensions(remaining));
                } else {
                    self.stack.push(next);
                    if let Some(w) = self.descend(i + 1) {
                        return Some(w);
                    }
                    self.stack.pop();
                }
            }
            self.chosen.pop();
        }
        None
    }
}

/// Subset-sum transform: `out[T] = #{x : N(x) ⊆ T}` over all `T ⊆ R`.
fn contained_counts(table: &MaskTable) -> Vec<u32> {
    let r = table.right_size;
    let mut g = vec![0u32; 1 << r];
    for i in 0..table.left.len() {
        g[table.small(i) as usize] += 1;
    }
    for bit in 0..r {
        let step = 1usize << bit;
        for t in 0..g.len() {
            if t & step != 0 {
                g[t] += g[t ^ step];
            }
        }
    }
    g
}

fn vertices_inside(table: &MaskTable, t: u64, count: usize) -> Vec<BitString> {
    (0..table.left.len())
        .filter(|&i| table.small(i) & !t == 0)
        .take(count)
        .map(|i| table.left[i])
        .collect()
}

fn choose_method(opts: &CheckOptions, left_subsets: u64, right_size: usize) -> Method {
    match opts.method {
        Method::Auto if left_subsets <= opts.exhaustive_bound => Method::Exhaustive,
        Method::Auto if right_size <= opts.dual_max_right => Method::Dual,
        Method::Auto => Method::Sampled,
        m => m,
    }
}

/// Does every left set of size `k` have at least `(1 - eps) * |R|` distinct
/// neighbors? Size exactly `k` suffices because neighbor sets only grow.
pub fn check_disperser(g: &BiGraph, k: u64, eps: Rational, opts: &CheckOptions) -> Result<CheckReport> {
    if k == 0 {
        return Err(Error::Parameter("disperser threshold K must be at least 1".into()));
    }
    if eps >= Rational::from_integer(1) {
        return Err(Error::Parameter(format!("eps = {eps} must be below 1")));
    }
    let n = g.domain().cardinality();
    let need = disperser_requirement(eps, g.right_size());
    if k > n {
        let mut r = CheckReport::pass(CheckMode::Exhaustive, 0);
        r.note = Some(format!("vacuous: K = {k} exceeds the {n} domain strings"));
        return Ok(r);
    }
    let table = MaskTable::build(g)?;
    let k = k as usize;
    match choose_method(opts, binomial(n, k as u64), g.right_size()) {
        Method::Exhaustive | Method::Auto => {
            let req = |_: usize| need;
            let mut search = SubsetSearch {
                table: &table,
                max_size: k,
                requirement: &req,
                only_size: Some(k),
                saturation: need,
                stack: Vec::new(),
                chosen: Vec::new(),
                checked: 0,
            };
            Ok(match search.run() {
                None => CheckReport::pass(CheckMode::Exhaustive, search.checked),
                Some(w) => CheckReport::fail(
                    CheckMode::Exhaustive,
                    search.checked,
                    w.into_iter().map(|i| table.left[i]).collect(),
                ),
            })
        }
        Method::Dual => {
            ensure_dual(&table, opts)?;
            let r = table.right_size;
            if need == 0 {
                return Ok(CheckReport::pass(CheckMode::Dual, 0));
            }
            let counts = contained_counts(&table);
            let size = (need - 1) as u32;
            let mut checked = 0;
            for t in 0..1u64 << r {
                if t.count_ones() != size {
                    continue;
                }
                checked += 1;
                if counts[t as usize] as usize >= k {
                    return Ok(CheckReport::fail(
                        CheckMode::Dual,
                        checked,
                        vertices_inside(&table, t, k),
                    ));
                }
            }
            Ok(CheckReport::pass(CheckMode::Dual, checked))
        }
        Method::Sampled => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            for trial in 0..opts.samples {
                let set = sample(&mut rng, n as usize, k).into_vec();
                if table.union_count(&set) < need {
                    let w = set.into_iter().map(|i| table.left[i]).collect();
                    return Ok(CheckReport::fail(
                        CheckMode::Sampled { trials: trial + 1 },
                        trial + 1,
                        w,
                    ));
                }
            }
            Ok(CheckReport::pass(
                CheckMode::Sampled { trials: opts.samples },
                opts.samples,
            ))
        }
    }
}

/// Does every left set `S` with `1 <= |S| <= k` have at least `c * |S|`
/// distinct neighbors?
pub fn check_expander(g: &BiGraph, k: u64, c: Rational, opts: &CheckOptions) -> Result<CheckReport> {
    if k == 0 {
        return Err(Error::Parameter("expander threshold K must be at least 1".into()));
    }
    let n = g.domain().cardinality();
    let k = k.min(n) as usize;
    let table = MaskTable::build(g)?;
    let total: u64 = (1..=k as u64)
        .map(|j| binomial(n, j))
        .fold(0u64, |a, b| a.saturating_add(b));
    match choose_method(opts, total, g.right_size()) {
        Method::Exhaustive | Method::Auto => {
            let req = |size: usize| expander_requirement(c, size);
            let mut search = SubsetSearch {
                table: &table,
                max_size: k,
                requirement: &req,
                only_size: None,
                saturation: expander_requirement(c, k),
                stack: Vec::new(),
                chosen: Vec::new(),
                checked: 0,
            };
            Ok(match search.run() {
                None => CheckReport::pass(CheckMode::Exhaustive, search.checked),
                Some(w) => CheckReport::fail(
                    CheckMode::Exhaustive,
                    search.checked,
                    w.into_iter().map(|i| table.left[i]).collect(),
                ),
            })
        }
        Method::Dual => {
            ensure_dual(&table, opts)?;
            let counts = contained_counts(&table);
            let r = table.right_size;
            for t in 0..1u64 << r {
                let s = (counts[t as usize] as usize).min(k);
                if s > 0 && (t.count_ones() as usize) < expander_requirement(c, s) {
                    return Ok(CheckReport::fail(CheckMode::Dual, t + 1, vertices_inside(&table, t, s)));
                }
            }
            Ok(CheckReport::pass(CheckMode::Dual, 1 << r))
        }
        Method::Sampled => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut trials = 0;
            for size in 1..=k {
                let need = expander_requirement(c, size);
                // Small strata are enumerated completely instead of sampled.
                if binomial(n, size as u64) <= opts.samples {
                    let req = move |_: usize| need;
                    let mut search = SubsetSearch {
                        table: &table,
                        max_size: size,
                        requirement: &req,
                        only_size: Some(size),
                        saturation: usize::MAX,
                        stack: Vec::new(),
                        chosen: Vec::new(),
                        checked: 0,
                    };
                    let found = search.run();
                    trials += search.checked;
                    if let Some(w) = found {
                        let w = w.into_iter().map(|i| table.left[i]).collect();
                        return Ok(CheckReport::fail(CheckMode::Sampled { trials }, trials, w));
                    }
                    continue;
                }
                for _ in 0..opts.samples {
                    trials += 1;
                    let set = sample(&mut rng, n as usize, size).into_vec();
                    if table.union_count(&set) < need {
                        let w = set.into_iter().map(|i| table.left[i]).collect();
                        return Ok(CheckReport::fail(CheckMode::Sampled { trials }, trials, w));
                    }
                }
            }
            Ok(CheckReport::pass(CheckMode::Sampled { trials }, trials))
        }
    }
}

fn ensure_dual(table: &MaskTable, opts: &CheckOptions) -> Result<()> {
    if table.right_size > opts.dual_max_right.min(30) {
        return Err(Error::Capacity(format!(
            "dual check needs 2^{} right subsets",
            table.right_size
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{AdjacencyTable, LeftDomain};
    use rand::Rng;

    fn r(n: u64, d: u64) -> Rational {
        Rational::new(n, d)
    }

    fn opts(method: Method) -> CheckOptions {
        CheckOptions::default().with_method(method)
    }

    fn random_graph(seed: u64, domain: LeftDomain, right: usize, deg: usize) -> BiGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<usize>> = (0..domain.cardinality())
            .map(|_| (0..rng.gen_range(0..=deg)).map(|_| rng.gen_range(0..right)).collect())
            .collect();
        AdjacencyTable::from_rows(domain, right, &rows).unwrap().into_graph()
    }

    /// Brute force over every subset of a tiny domain.
    fn brute_disperser(g: &BiGraph, k: usize, eps: Rational) -> bool {
        let all: Vec<_> = g.domain().iter().collect();
        let need = disperser_requirement(eps, g.right_size());
        (0u32..1 << all.len())
            .filter(|m| m.count_ones() as usize >= k)
            .all(|m| {
                let s: Vec<_> = (0..all.len()).filter(|i| m >> i & 1 == 1).map(|i| all[i]).collect();
                g.neighbor_set(&s).unwrap().len() >= need
            })
    }

    fn brute_expander(g: &BiGraph, k: usize, c: Rational) -> bool {
        let all: Vec<_> = g.domain().iter().collect();
        (1u32..1 << all.len())
            .filter(|m| m.count_ones() as usize <= k)
            .all(|m| {
                let s: Vec<_> = (0..all.len()).filter(|i| m >> i & 1 == 1).map(|i| all[i]).collect();
                g.neighbor_set(&s).unwrap().len() >= expander_requirement(c, s.len())
            })
    }

    fn assert_genuine_disperser_witness(g: &BiGraph, rep: &CheckReport, k: usize, eps: Rational) {
        let w = rep.counterexample.as_ref().expect("failure carries a witness");
        assert_eq!(w.len(), k);
        assert!(g.neighbor_set(w).unwrap().len() < disperser_requirement(eps, g.right_size()));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(28, 4), 20475);
        assert_eq!(binomial(5, 7), 0);
        assert_eq!(binomial(200, 100), u64::MAX);
    }

    #[test]
    fn complete_graph_is_a_zero_error_disperser() {
        let g = BiGraph::complete(LeftDomain::new(1, 3).unwrap(), 5).unwrap();
        for m in [Method::Exhaustive, Method::Dual, Method::Sampled] {
            for k in 1..=4 {
                assert!(check_disperser(&g, k, r(0, 1), &opts(m)).unwrap().passed);
            }
        }
    }

    #[test]
    fn unreachable_right_vertex_fails_zero_error() {
        let d = LeftDomain::new(1, 2).unwrap();
        let g = BiGraph::constant(d, 3, vec![0, 1]).unwrap();
        for m in [Method::Exhaustive, Method::Dual, Method::Sampled] {
            let rep = check_disperser(&g, 2, r(0, 1), &opts(m)).unwrap();
            assert!(!rep.passed);
            assert_genuine_disperser_witness(&g, &rep, 2, r(0, 1));
        }
    }

    #[test]
    fn oversized_threshold_is_vacuous() {
        let g = BiGraph::star(LeftDomain::slice(1).unwrap(), 4).unwrap();
        let rep = check_disperser(&g, 3, r(0, 1), &CheckOptions::default()).unwrap();
        assert!(rep.passed);
        assert!(rep.note.is_some());
    }

    #[test]
    fn exhaustive_count_covers_all_subsets() {
        let g = BiGraph::complete(LeftDomain::new(2, 4).unwrap(), 8).unwrap();
        let rep = check_disperser(&g, 4, r(1, 2), &opts(Method::Exhaustive)).unwrap();
        assert_eq!(rep.checked_count, binomial(28, 4));
        let rep = check_expander(&g, 4, r(1, 1), &opts(Method::Exhaustive)).unwrap();
        assert_eq!(rep.checked_count, (1..=4).map(|j| binomial(28, j)).sum::<u64>());
    }

    #[test]
    fn expander_checks_on_complete_and_star() {
        let d = LeftDomain::new(1, 2).unwrap();
        let complete = BiGraph::complete(d, 4).unwrap();
        let star = BiGraph::star(d, 4).unwrap();
        for m in [Method::Exhaustive, Method::Dual, Method::Sampled] {
            assert!(check_expander(&complete, 4, r(1, 1), &opts(m)).unwrap().passed);
            let rep = check_expander(&star, 2, r(1, 1), &opts(m)).unwrap();
            assert!(!rep.passed);
            let w = rep.counterexample.unwrap();
            assert_eq!(w.len(), 2);
            assert!(star.neighbor_set(&w).unwrap().len() < 2);
        }
    }

    #[test]
    fn all_routes_agree_with_brute_force() {
        let d = LeftDomain::new(1, 3).unwrap();
        for seed in 0..150 {
            let right = 2 + (seed as usize % 7);
            let g = random_graph(seed, d, right, 3);
            for k in [1usize, 2, 3, 5] {
                for eps in [r(0, 1), r(1, 3), r(1, 2)] {
                    let truth = brute_disperser(&g, k, eps);
                    for m in [Method::Exhaustive, Method::Dual] {
                        let rep = check_disperser(&g, k as u64, eps, &opts(m)).unwrap();
                        assert_eq!(rep.passed, truth, "seed {seed} k {k} eps {eps} {m:?}");
                        if !rep.passed {
                            assert_genuine_disperser_witness(&g, &rep, k, eps);
                        }
                    }
                    let sampled = check_disperser(&g, k as u64, eps, &opts(Method::Sampled)).unwrap();
                    assert!(sampled.passed || !truth);
                }
                for c in [r(1, 1), r(3, 2)] {
                    let truth = brute_expander(&g, k, c);
                    for m in [Method::Exhaustive, Method::Dual, Method::Sampled] {
                        let rep = check_expander(&g, k as u64, c, &opts(m)).unwrap();
                        if m != Method::Sampled {
                            assert_eq!(rep.passed, truth, "seed {seed} k {k} c {c} {m:?}");
                        }
                        if let Some(w) = rep.counterexample {
                            assert!(!truth);
                            assert!(!w.is_empty() && w.len() <= k);
                            assert!(g.neighbor_set(&w).unwrap().len() < expander_requirement(c, w.len()));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = BiGraph::complete(LeftDomain::slice(1).unwrap(), 2).unwrap();
        assert!(check_disperser(&g, 0, r(0, 1), &CheckOptions::default()).is_err());
        assert!(check_disperser(&g, 1, r(1, 1), &CheckOptions::default()).is_err());
        assert!(check_expander(&g, 0, r(1, 1), &CheckOptions::default()).is_err());
        let wide = BiGraph::complete(LeftDomain::slice(1).unwrap(), 40).unwrap();
        assert!(matches!(
            check_disperser(&wide, 1, r(0, 1), &opts(Method::Dual)),
            Err(Error::Capacity(_))
        ));
    }
}
