//! Base dispersers: certified graphs that every construction starts from.
//!
//! A base graph is requested by its disperser parameters `(K, eps)`, a right
//! size and a degree, and is only returned once [`check_disperser`] accepts
//! it. Three strategies are available:
//!
//! * `random-verified` draws each left vertex's neighbors from a ChaCha
//!   stream keyed by `(seed, x)`, so the neighbor function stays explicit;
//!   a rejected draw is retried with `seed + 1`;
//! * `exhaustive-search` backtracks over neighbor sets in canonical order
//!   and returns the first passing graph (tiny instances only);
//! * `complete` joins every left vertex to every right vertex.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::graph::{BiGraph, LeftDomain, NeighborFn};
use crate::verify::{check_disperser, disperser_requirement, CheckOptions, CheckReport};
use crate::Rational;

/// Reseeds allowed for an explicitly requested degree.
pub const MAX_RESEEDS: u32 = 64;

/// Node budget of the exhaustive search strategy.
const SEARCH_NODE_BOUND: u64 = 1_000_000;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub enum Strategy {
    #[default]
    RandomVerified,
    ExhaustiveSearch,
    Complete,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::RandomVerified => "random-verified",
            Strategy::ExhaustiveSearch => "exhaustive-search",
            Strategy::Complete => "complete",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-verified" => Ok(Strategy::RandomVerified),
            "exhaustive-search" => Ok(Strategy::ExhaustiveSearch),
            "complete" => Ok(Strategy::Complete),
            _ => Err(Error::Parameter(format!("unknown base strategy {s:?}"))),
        }
    }
}

/// Parameters of one base disperser.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct BaseSpec {
    pub domain: LeftDomain,
    /// Dispersion threshold `K`.
    pub k: u64,
    pub eps: Rational,
    pub degree: usize,
    pub right_size: usize,
    pub seed: u64,
    pub strategy: Strategy,
}

impl BaseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.domain.cardinality() {
            return Err(Error::Parameter(format!(
                "K = {} must lie in [1, {}]",
                self.k,
                self.domain.cardinality()
            )));
        }
        if self.degree == 0 || self.right_size == 0 {
            return Err(Error::Parameter("degree and right size must be positive".into()));
        }
        if self.eps >= Rational::from_integer(1) {
            return Err(Error::Parameter(format!("eps = {} must be below 1", self.eps)));
        }
        if self.strategy == Strategy::Complete && self.degree != self.right_size {
            return Err(Error::Parameter(format!(
                "complete base needs degree = right size, got {} and {}",
                self.degree, self.right_size
            )));
        }
        Ok(())
    }

    fn requirement(&self) -> usize {
        disperser_requirement(self.eps, self.right_size)
    }

    /// `K * degree` neighbors cannot cover the requirement.
    fn counting_impossible(&self) -> bool {
        (self.k as u128 * self.degree as u128) < self.requirement() as u128
    }
}

/// A certified base graph together with the spec that produced it (the
/// seed is the one that finally passed) and its verification report.
#[derive(Clone, Debug)]
pub struct BaseGraph {
    pub graph: BiGraph,
    pub spec: BaseSpec,
    pub report: CheckReport,
    pub attempts: u32,
}

struct RandomNeighbors {
    seed: u64,
    degree: usize,
    right: usize,
}

impl RandomNeighbors {
    fn stream(&self, x: &BitString) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..24].copy_from_slice(&x.value().to_le_bytes());
        key[24] = x.len() as u8;
        ChaCha8Rng::from_seed(key)
    }
}

impl NeighborFn for RandomNeighbors {
    fn degree(&self, _: &BitString) -> usize {
        self.degree
    }

    fn neighbor(&self, x: &BitString, i: usize) -> usize {
        let mut rng = self.stream(x);
        (0..i).for_each(|_| {
            rng.gen_range(0..self.right);
        });
        rng.gen_range(0..self.right)
    }

    fn neighbors_into(&self, x: &BitString, out: &mut Vec<usize>) {
        let mut rng = self.stream(x);
        out.extend((0..self.degree).map(|_| rng.gen_range(0..self.right)));
    }
}

fn random_graph(spec: &BaseSpec, seed: u64) -> Result<BiGraph> {
    BiGraph::new(
        spec.domain,
        spec.right_size,
        RandomNeighbors {
            seed,
            degree: spec.degree,
            right: spec.right_size,
        },
    )
}

/// Builds and certifies a base disperser.
pub fn build_base(spec: &BaseSpec, opts: &CheckOptions) -> Result<BaseGraph> {
    spec.validate()?;
    match spec.strategy {
        Strategy::Complete => {
            let graph = BiGraph::complete(spec.domain, spec.right_size)?;
            let report = check_disperser(&graph, spec.k, spec.eps, opts)?;
            Ok(BaseGraph {
                graph,
                spec: *spec,
                report,
                attempts: 1,
            })
        }
        Strategy::RandomVerified => random_verified(spec, MAX_RESEEDS, opts),
        Strategy::ExhaustiveSearch => exhaustive_search(spec, opts),
    }
}

fn random_verified(spec: &BaseSpec, reseeds: u32, opts: &CheckOptions) -> Result<BaseGraph> {
    if spec.counting_impossible() {
        let g = random_graph(spec, spec.seed)?;
        let witness: Vec<_> = spec.domain.iter().take(spec.k as usize).collect();
        debug_assert!(g.neighbor_set(&witness)?.len() < spec.requirement());
        return Err(Error::ConstructionFailure {
            reason: format!(
                "{} vertices of degree {} cannot reach {} of {} right vertices",
                spec.k,
                spec.degree,
                spec.requirement(),
                spec.right_size
            ),
            witness,
        });
    }
    let mut last = Vec::new();
    for attempt in 0..reseeds {
        let seed = spec.seed.wrapping_add(attempt as u64);
        let graph = random_graph(spec, seed)?;
        let mut check_opts = *opts;
        check_opts.seed = seed;
        let report = check_disperser(&graph, spec.k, spec.eps, &check_opts)?;
        if report.passed {
            return Ok(BaseGraph {
                graph,
                spec: BaseSpec { seed, ..*spec },
                report,
                attempts: attempt + 1,
            });
        }
        last = report.counterexample.unwrap_or_default();
    }
    Err(Error::ConstructionFailure {
        reason: format!("no passing draw in {reseeds} seeds for {spec:?}"),
        witness: last,
    })
}

fn exhaustive_search(spec: &BaseSpec, opts: &CheckOptions) -> Result<BaseGraph> {
    let n = spec.domain.cardinality() as usize;
    let r = spec.right_size;
    let d = spec.degree.min(r);
    if r > 64 {
        return Err(Error::Capacity(format!("exhaustive search over {r} right vertices")));
    }
    let choices = combinations_of(r, d);
    let k = spec.k as usize;
    let need = spec.requirement();
    let mut search = Backtrack {
        choices: &choices,
        assigned: Vec::with_capacity(n),
        n,
        k,
        need,
        nodes: 0,
        last_violation: Vec::new(),
    };
    let found = search.run()?;
    let left: Vec<BitString> = spec.domain.iter().collect();
    let Some(picks) = found else {
        return Err(Error::ConstructionFailure {
            reason: format!("no graph with degree {d} satisfies {spec:?}"),
            witness: search.last_violation.iter().map(|&i| left[i]).collect(),
        });
    };
    let rows: Vec<Vec<usize>> = picks
        .iter()
        .map(|&c| (0..r).filter(|&b| choices[c] >> b & 1 == 1).collect())
        .collect();
    let graph = crate::graph::AdjacencyTable::from_rows(spec.domain, r, &rows)?.into_graph();
    let report = check_disperser(&graph, spec.k, spec.eps, opts)?;
    if !report.passed {
        return Err(Error::Invariant("exhaustive search returned a failing graph".into()));
    }
    Ok(BaseGraph {
        graph,
        spec: BaseSpec { degree: d, ..*spec },
        report,
        attempts: 1,
    })
}

/// All `d`-subsets of `0..r` as masks, in lexicographic order of their
/// sorted elements.
fn combinations_of(r: usize, d: usize) -> Vec<u64> {
    fn rec(start: usize, r: usize, left: usize, acc: u64, out: &mut Vec<u64>) {
        if left == 0 {
            out.push(acc);
            return;
        }
        for b in start..r {
            rec(b + 1, r, left - 1, acc | 1 << b, out);
        }
    }
    let mut out = Vec::new();
    rec(0, r, d, 0, &mut out);
    out
}

struct Backtrack<'a> {
    choices: &'a [u64],
    assigned: Vec<usize>,
    n: usize,
    k: usize,
    need: usize,
    nodes: u64,
    last_violation: Vec<usize>,
}

impl Backtrack<'_> {
    fn run(&mut self) -> Result<Option<Vec<usize>>> {
        if self.place()? {
            Ok(Some(self.assigned.clone()))
        } else {
            Ok(None)
        }
    }

    fn place(&mut self) -> Result<bool> {
        let v = self.assigned.len();
        if v == self.n {
            return Ok(true);
        }
        for c in 0..self.choices.len() {
            self.nodes += 1;
            if self.nodes > SEARCH_NODE_BOUND {
                return Err(Error::Capacity(format!(
                    "exhaustive base search exceeded {SEARCH_NODE_BOUND} nodes"
                )));
            }
            self.assigned.push(c);
            if self.consistent() && self.place()? {
                return Ok(true);
            }
            self.assigned.pop();
        }
        Ok(false)
    }

    /// Checks every K-subset that contains the newest vertex.
    fn consistent(&mut self) -> bool {
        let v = self.assigned.len() - 1;
        if v + 1 < self.k {
            return true;
        }
        let mut chosen = vec![v];
        self.check_from(0, self.choices[self.assigned[v]], &mut chosen)
    }

    fn check_from(&mut self, start: usize, acc: u64, chosen: &mut Vec<usize>) -> bool {
        if chosen.len() == self.k {
            if (acc.count_ones() as usize) < self.need {
                self.last_violation = chosen.clone();
                self.last_violation.sort_unstable();
                return false;
            }
            return true;
        }
        let v = self.assigned.len() - 1;
        for u in start..v {
            chosen.push(u);
            let ok = self.check_from(u + 1, acc | self.choices[self.assigned[u]], chosen);
            chosen.pop();
            if !ok {
                return false;
            }
        }
        true
    }
}

/// A base request whose degree may be left to the doubling search.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct BaseRequest {
    pub domain: LeftDomain,
    pub k: u64,
    pub eps: Rational,
    pub right_size: usize,
    pub seed: u64,
    pub strategy: Strategy,
    pub degree: Option<usize>,
}

/// Degree search settings for [`build_base_auto`].
#[derive(Clone, Copy, Debug)]
pub struct DegreeSearch {
    /// Reseeds tried at each power-of-two degree before doubling.
    pub reseeds_per_degree: u32,
    /// Largest degree tried, as a multiple of the right size.
    pub cap_factor: usize,
}

impl Default for DegreeSearch {
    fn default() -> Self {
        DegreeSearch {
            reseeds_per_degree: 4,
            cap_factor: 8,
        }
    }
}

/// Builds a base for `req`. Without an explicit degree, tries `d = 1, 2,
/// 4, ..` until a draw passes; if none does up to the cap, falls back to the
/// complete graph, which passes whenever any graph can.
pub fn build_base_auto(req: &BaseRequest, search: &DegreeSearch, opts: &CheckOptions) -> Result<BaseGraph> {
    let spec_with = |degree, strategy| BaseSpec {
        domain: req.domain,
        k: req.k,
        eps: req.eps,
        degree,
        right_size: req.right_size,
        seed: req.seed,
        strategy,
    };
    if req.strategy == Strategy::Complete {
        return build_base(&spec_with(req.right_size, Strategy::Complete), opts);
    }
    if let Some(d) = req.degree {
        return build_base(&spec_with(d, req.strategy), opts);
    }
    let cap = (search.cap_factor * req.right_size).max(1);
    let mut d = 1;
    while d <= cap {
        let spec = spec_with(d, req.strategy);
        spec.validate()?;
        if !spec.counting_impossible() {
            let attempt = match req.strategy {
                Strategy::RandomVerified => random_verified(&spec, search.reseeds_per_degree, opts),
                _ => build_base(&spec, opts),
            };
            match attempt {
                Ok(b) => return Ok(b),
                Err(Error::ConstructionFailure { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        d *= 2;
    }
    build_base(&spec_with(req.right_size, Strategy::Complete), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::MATERIALIZE_BOUND;
    use crate::verify::Method;

    fn spec(domain: LeftDomain, k: u64, eps: Rational, degree: usize, right: usize, strategy: Strategy) -> BaseSpec {
        BaseSpec {
            domain,
            k,
            eps,
            degree,
            right_size: right,
            seed: 42,
            strategy,
        }
    }

    /// Every pair of a tiny domain, checked directly.
    fn every_pair_covers(g: &BiGraph, need: usize) -> bool {
        let all: Vec<_> = g.domain().iter().collect();
        let mut pairs = 0;
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                pairs += 1;
                if g.neighbor_set(&[all[i], all[j]]).unwrap().len() < need {
                    return false;
                }
            }
        }
        assert_eq!(pairs, 6);
        true
    }

    #[test]
    fn complete_base_is_zero_error() {
        let s = spec(
            LeftDomain::new(1, 3).unwrap(),
            3,
            Rational::from_integer(0),
            5,
            5,
            Strategy::Complete,
        );
        let b = build_base(&s, &CheckOptions::default()).unwrap();
        assert!(b.report.passed);
    }

    #[test]
    fn random_verified_small_disperser() {
        let s = spec(
            LeftDomain::slice(2).unwrap(),
            2,
            Rational::new(1, 3),
            2,
            4,
            Strategy::RandomVerified,
        );
        let b = build_base(&s, &CheckOptions::default()).unwrap();
        assert_eq!(disperser_requirement(Rational::new(1, 3), 4), 3);
        assert!(every_pair_covers(&b.graph, 3));
    }

    #[test]
    fn exhaustive_search_small_disperser() {
        let s = spec(
            LeftDomain::slice(2).unwrap(),
            2,
            Rational::new(1, 3),
            2,
            4,
            Strategy::ExhaustiveSearch,
        );
        let b = build_base(&s, &CheckOptions::default()).unwrap();
        assert!(every_pair_covers(&b.graph, 3));
        // First passing assignment in canonical order.
        let rows: Vec<_> = b
            .graph
            .domain()
            .iter()
            .map(|x| b.graph.neighbors(&x).unwrap())
            .collect();
        assert_eq!(rows, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2]]);
    }

    #[test]
    fn impossible_parameters_fail_with_witness() {
        for strategy in [Strategy::RandomVerified, Strategy::ExhaustiveSearch] {
            let s = spec(
                LeftDomain::slice(2).unwrap(),
                1,
                Rational::from_integer(0),
                1,
                4,
                strategy,
            );
            match build_base(&s, &CheckOptions::default()) {
                Err(Error::ConstructionFailure { witness, .. }) => assert_eq!(witness.len(), 1),
                other => panic!("expected construction failure, got {other:?}"),
            }
        }
    }

    #[test]
    fn spec_validation() {
        let d = LeftDomain::slice(2).unwrap();
        assert!(spec(d, 5, Rational::new(1, 3), 2, 4, Strategy::RandomVerified)
            .validate()
            .is_err());
        assert!(spec(d, 0, Rational::new(1, 3), 2, 4, Strategy::RandomVerified)
            .validate()
            .is_err());
        assert!(spec(d, 2, Rational::new(1, 3), 0, 4, Strategy::RandomVerified)
            .validate()
            .is_err());
        assert!(spec(d, 2, Rational::new(1, 3), 2, 4, Strategy::Complete)
            .validate()
            .is_err());
        assert!(spec(d, 2, Rational::from_integer(1), 2, 4, Strategy::RandomVerified)
            .validate()
            .is_err());
    }

    #[test]
    fn reproducible_from_spec() {
        let s = spec(
            LeftDomain::new(2, 4).unwrap(),
            4,
            Rational::new(1, 3),
            12,
            8,
            Strategy::RandomVerified,
        );
        let a = build_base(&s, &CheckOptions::default()).unwrap();
        let b = build_base(&s, &CheckOptions::default()).unwrap();
        assert_eq!(a.spec, b.spec);
        assert_eq!(
            a.graph.materialize(MATERIALIZE_BOUND).unwrap(),
            b.graph.materialize(MATERIALIZE_BOUND).unwrap()
        );
    }

    #[test]
    fn auto_degree_finds_a_power_of_two() {
        let req = BaseRequest {
            domain: LeftDomain::new(3, 5).unwrap(),
            k: 8,
            eps: Rational::new(1, 3),
            right_size: 16,
            seed: 7,
            strategy: Strategy::RandomVerified,
            degree: None,
        };
        let b = build_base_auto(&req, &DegreeSearch::default(), &CheckOptions::default()).unwrap();
        assert!(b.spec.degree.is_power_of_two());
        assert!(b.report.passed);
        // Independent re-verification by left-subset enumeration.
        let again = check_disperser(
            &b.graph,
            8,
            Rational::new(1, 3),
            &CheckOptions::default().with_method(Method::Exhaustive),
        );
        // C(56, 8) is large; enumeration prunes saturated branches.
        assert!(again.unwrap().passed);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in [Strategy::RandomVerified, Strategy::ExhaustiveSearch, Strategy::Complete] {
            assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
        }
        assert!("greedy".parse::<Strategy>().is_err());
    }
}
