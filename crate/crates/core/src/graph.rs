//! Explicit bipartite graphs over windows of binary strings.
//!
//! A [`BiGraph`] never stores its edges unless asked to: it carries a
//! neighbor function that computes the `i`-th right neighbor of a left
//! string on demand. Graphs small enough to enumerate can be turned into an
//! [`AdjacencyTable`], which is also what the text file format round-trips.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Default cap on the number of left vertices a graph may have when it is
/// materialized into a table.
pub const MATERIALIZE_BOUND: u64 = 1 << 20;

/// Largest `hi` a [`LeftDomain`] accepts, so that cardinalities fit in `u64`.
pub const MAX_DOMAIN_LEN: u32 = 62;

/// All binary strings whose length lies in `[lo, hi]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct LeftDomain {
    lo: u32,
    hi: u32,
}

impl LeftDomain {
    pub fn new(lo: u32, hi: u32) -> Result<Self> {
        if lo > hi {
            return Err(Error::Parameter(format!("empty domain [{lo}, {hi}]")));
        }
        if hi > MAX_DOMAIN_LEN {
            return Err(Error::Parameter(format!("domain bound {hi} exceeds {MAX_DOMAIN_LEN}")));
        }
        Ok(LeftDomain { lo, hi })
    }

    /// The strings of exactly length `n`.
    pub fn slice(n: u32) -> Result<Self> {
        LeftDomain::new(n, n)
    }

    pub fn lo(&self) -> u32 {
        self.lo
    }

    pub fn hi(&self) -> u32 {
        self.hi
    }

    pub fn cardinality(&self) -> u64 {
        (1u64 << (self.hi + 1)) - (1u64 << self.lo)
    }

    pub fn contains(&self, x: &BitString) -> bool {
        (self.lo..=self.hi).contains(&x.len())
    }

    /// Position of `x` in canonical order.
    pub fn index_of(&self, x: &BitString) -> Option<u64> {
        self.contains(x)
            .then(|| (1u64 << x.len()) - (1u64 << self.lo) + x.value() as u64)
    }

    /// The `i`-th string in canonical order.
    pub fn nth(&self, i: u64) -> Option<BitString> {
        if i >= self.cardinality() {
            return None;
        }
        let shifted = i + (1u64 << self.lo);
        let len = 63 - shifted.leading_zeros();
        Some(BitString::from_parts((shifted - (1u64 << len)) as u128, len))
    }

    pub fn iter(&self) -> impl Iterator<Item = BitString> {
        (self.lo..=self.hi).flat_map(BitString::all_of_length)
    }

    pub(crate) fn check(&self, x: &BitString) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(*x, self.lo, self.hi))
        }
    }
}

impl fmt::Display for LeftDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Neighbor function of an explicit graph.
///
/// Implementations must be pure: the answer for `(x, i)` may depend only on
/// `x` and `i`. Callers guarantee `x` lies in the graph's domain and
/// `i < degree(x)`.
pub trait NeighborFn: Send + Sync {
    fn degree(&self, x: &BitString) -> usize;

    fn neighbor(&self, x: &BitString, i: usize) -> usize;

    /// Appends the whole neighbor sequence of `x` to `out`.
    fn neighbors_into(&self, x: &BitString, out: &mut Vec<usize>) {
        let d = self.degree(x);
        out.extend((0..d).map(|i| self.neighbor(x, i)));
    }
}

/// A finite explicit bipartite graph `(L, R, E)` with `L` a [`LeftDomain`]
/// and `R = {0, .., right_size - 1}`.
///
/// Neighbor sequences may repeat an index; every structural property in
/// this crate is evaluated on neighbor sets.
#[derive(Clone)]
pub struct BiGraph {
    domain: LeftDomain,
    right_size: usize,
    f: Arc<dyn NeighborFn>,
}

impl fmt::Debug for BiGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BiGraph")
            .field("domain", &self.domain)
            .field("right_size", &self.right_size)
            .finish_non_exhaustive()
    }
}

impl BiGraph {
    pub fn new(domain: LeftDomain, right_size: usize, f: impl NeighborFn + 'static) -> Result<Self> {
        if right_size == 0 {
            return Err(Error::Parameter("right side must be non-empty".into()));
        }
        Ok(BiGraph {
            domain,
            right_size,
            f: Arc::new(f),
        })
    }

    /// Every left vertex adjacent to every right vertex, in index order.
    pub fn complete(domain: LeftDomain, right_size: usize) -> Result<Self> {
        BiGraph::new(domain, right_size, Complete(right_size))
    }

    /// Every left vertex adjacent to right vertex 0 only.
    pub fn star(domain: LeftDomain, right_size: usize) -> Result<Self> {
        BiGraph::new(domain, right_size, Constant(vec![0]))
    }

    /// Every left vertex has the same neighbor sequence.
    pub fn constant(domain: LeftDomain, right_size: usize, neighbors: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = neighbors.iter().find(|&&r| r >= right_size) {
            return Err(Error::Parameter(format!(
                "neighbor {bad} outside right side of size {right_size}"
            )));
        }
        BiGraph::new(domain, right_size, Constant(neighbors))
    }

    pub fn domain(&self) -> LeftDomain {
        self.domain
    }

    pub fn right_size(&self) -> usize {
        self.right_size
    }

    pub fn degree_of(&self, x: &BitString) -> Result<usize> {
        self.domain.check(x)?;
        Ok(self.f.degree(x))
    }

    pub fn neighbor_of(&self, x: &BitString, i: usize) -> Result<usize> {
        self.domain.check(x)?;
        let d = self.f.degree(x);
        if i >= d {
            return Err(Error::Parameter(format!(
                "neighbor index {i} out of range for {x} of degree {d}"
            )));
        }
        Ok(self.f.neighbor(x, i))
    }

    /// The full neighbor sequence of `x`, duplicates included.
    pub fn neighbors(&self, x: &BitString) -> Result<Vec<usize>> {
        self.domain.check(x)?;
        Ok(self.neighbors_unchecked(x))
    }

    pub(crate) fn neighbors_unchecked(&self, x: &BitString) -> Vec<usize> {
        let mut out = Vec::new();
        self.f.neighbors_into(x, &mut out);
        out
    }

    pub(crate) fn neighbors_into_unchecked(&self, x: &BitString, out: &mut Vec<usize>) {
        self.f.neighbors_into(x, out)
    }

    pub(crate) fn degree_unchecked(&self, x: &BitString) -> usize {
        self.f.degree(x)
    }

    /// `E(S)`: the union of the neighbor sets of the strings in `s`.
    pub fn neighbor_set<'a>(&self, s: impl IntoIterator<Item = &'a BitString>) -> Result<BTreeSet<usize>> {
        let mut out = BTreeSet::new();
        let mut buf = Vec::new();
        for x in s {
            self.domain.check(x)?;
            buf.clear();
            self.f.neighbors_into(x, &mut buf);
            out.extend(buf.iter().copied());
        }
        Ok(out)
    }

    /// Largest left degree over the whole domain. Enumerates the domain.
    pub fn max_degree(&self) -> usize {
        self.domain.iter().map(|x| self.f.degree(&x)).max().unwrap_or(0)
    }

    pub fn materialize(&self, bound: u64) -> Result<AdjacencyTable> {
        let n = self.domain.cardinality();
        if n > bound {
            return Err(Error::Capacity(format!(
                "domain {} has {n} strings, materialization bound is {bound}",
                self.domain
            )));
        }
        let mut offsets = Vec::with_capacity(n as usize + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for x in self.domain.iter() {
            self.f.neighbors_into(&x, &mut targets);
            offsets.push(targets.len());
        }
        Ok(AdjacencyTable {
            domain: self.domain,
            right_size: self.right_size,
            offsets,
            targets,
        })
    }

    /// Replaces the neighbor function by a lookup table when the domain has
    /// at most `bound` strings; otherwise returns the graph unchanged.
    pub fn cached(&self, bound: u64) -> BiGraph {
        match self.materialize(bound) {
            Ok(table) => table.into_graph(),
            Err(_) => self.clone(),
        }
    }
}

struct Complete(usize);

impl NeighborFn for Complete {
    fn degree(&self, _: &BitString) -> usize {
        self.0
    }
    fn neighbor(&self, _: &BitString, i: usize) -> usize {
        i
    }
}

struct Constant(Vec<usize>);

impl NeighborFn for Constant {
    fn degree(&self, _: &BitString) -> usize {
        self.0.len()
    }
    fn neighbor(&self, _: &BitString, i: usize) -> usize {
        self.0[i]
    }
    fn neighbors_into(&self, _: &BitString, out: &mut Vec<usize>) {
        out.extend_from_slice(&self.0)
    }
}

/// Materialized neighbor sequences, one row per domain string in canonical
/// order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AdjacencyTable {
    domain: LeftDomain,
    right_size: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl AdjacencyTable {
    pub fn from_rows(domain: LeftDomain, right_size: usize, rows: &[Vec<usize>]) -> Result<Self> {
        if rows.len() as u64 != domain.cardinality() {
            return Err(Error::Parameter(format!(
                "{} rows given for a domain of {} strings",
                rows.len(),
                domain.cardinality()
            )));
        }
        if right_size == 0 {
            return Err(Error::Parameter("right side must be non-empty".into()));
        }
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        for row in rows {
            if let Some(&bad) = row.iter().find(|&&r| r >= right_size) {
                return Err(Error::Parameter(format!(
                    "neighbor {bad} outside right side of size {right_size}"
                )));
            }
            targets.extend_from_slice(row);
            offsets.push(targets.len());
        }
        Ok(AdjacencyTable {
            domain,
            right_size,
            offsets,
            targets,
        })
    }

    pub fn domain(&self) -> LeftDomain {
        self.domain
    }

    pub fn right_size(&self) -> usize {
        self.right_size
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, index: usize) -> &[usize] {
        &self.targets[self.offsets[index]..self.offsets[index + 1]]
    }

    pub fn rows(&self) -> impl Iterator<Item = (BitString, &[usize])> {
        self.domain.iter().enumerate().map(|(i, x)| (x, self.row(i)))
    }

    pub fn into_graph(self) -> BiGraph {
        BiGraph {
            domain: self.domain,
            right_size: self.right_size,
            f: Arc::new(self),
        }
    }

    /// Writes the text format: header, optional layer section, then one
    /// `<bits>: i1 .. id` row per domain string.
    pub fn to_text(&self, layers: Option<&LayerHeader>) -> String {
        let mut out = String::new();
        out.push_str("BIGRAPH 1\n");
        out.push_str(&format!("left {} {}\n", self.domain.lo, self.domain.hi));
        out.push_str(&format!("right {}\n", self.right_size));
        if let Some(h) = layers {
            out.push_str(&format!("LAYERED {}\n", h.k));
            for l in &h.layers {
                out.push_str(&format!("layer {} {} {}\n", l.id, l.offset, l.size));
            }
        }
        for (x, row) in self.rows() {
            out.push_str(&x.to_string());
            out.push(':');
            for r in row {
                out.push(' ');
                out.push_str(&r.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text format written by [`AdjacencyTable::to_text`].
    pub fn parse(text: &str) -> Result<(AdjacencyTable, Option<LayerHeader>)> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("unexpected end of file, expected {what}")))
        };

        let (ln, magic) = next("header")?;
        if magic.trim() != "BIGRAPH 1" {
            return Err(Error::parse(ln, "expected \"BIGRAPH 1\""));
        }
        let (ln, left) = next("left line")?;
        let nums = keyword_numbers(ln, left, "left", 2)?;
        let domain = LeftDomain::new(nums[0] as u32, nums[1] as u32).map_err(|e| Error::parse(ln, e.to_string()))?;
        let (ln, right) = next("right line")?;
        let right_size = keyword_numbers(ln, right, "right", 1)?[0] as usize;

        let mut layers = None;
        let mut pending: Option<(usize, &str)> = None;
        let (ln, line) = next("rows")?;
        if let Some(rest) = line.strip_prefix("LAYERED ") {
            let k: u32 = rest.trim().parse().map_err(|_| Error::parse(ln, "bad LAYERED level"))?;
            let mut header = LayerHeader { k, layers: Vec::new() };
            for _ in 0..=k {
                let (ln, line) = next("layer line")?;
                let mut it = line.split_whitespace();
                if it.next() != Some("layer") {
                    return Err(Error::parse(ln, "expected a layer line"));
                }
                let vals: Vec<i64> = it
                    .map(|t| t.parse().map_err(|_| Error::parse(ln, format!("bad number {t:?}"))))
                    .collect::<Result<_>>()?;
                if vals.len() != 3 || vals[1] < 0 || vals[2] < 0 {
                    return Err(Error::parse(ln, "layer line needs <id> <offset> <size>"));
                }
                header.layers.push(LayerSpan {
                    id: vals[0] as i32,
                    offset: vals[1] as usize,
                    size: vals[2] as usize,
                });
            }
            layers = Some(header);
        } else {
            pending = Some((ln, line));
        }

        let mut rows = Vec::with_capacity(domain.cardinality().min(1 << 20) as usize);
        let mut expected = domain.iter();
        let row_lines = pending.into_iter().chain(std::iter::from_fn(|| next("").ok()));
        for (ln, line) in row_lines {
            let (bits, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::parse(ln, "row needs \"<bits>:\""))?;
            let x: BitString = bits.parse().map_err(|e: Error| Error::parse(ln, e.to_string()))?;
            if expected.next() != Some(x) {
                return Err(Error::parse(ln, format!("row {x} out of canonical order")));
            }
            let row: Vec<usize> = rest
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::parse(ln, format!("bad index {t:?}"))))
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        if expected.next().is_some() {
            return Err(Error::parse(0, "file ends before the domain is covered"));
        }
        let table = AdjacencyTable::from_rows(domain, right_size, &rows).map_err(|e| Error::parse(0, e.to_string()))?;
        Ok((table, layers))
    }
}

fn keyword_numbers(ln: usize, line: &str, keyword: &str, count: usize) -> Result<Vec<u64>> {
    let mut it = line.split_whitespace();
    if it.next() != Some(keyword) {
        return Err(Error::parse(ln, format!("expected \"{keyword}\"")));
    }
    let vals: Vec<u64> = it
        .map(|t| t.parse().map_err(|_| Error::parse(ln, format!("bad number {t:?}"))))
        .collect::<Result<_>>()?;
    if vals.len() != count {
        return Err(Error::parse(ln, format!("\"{keyword}\" takes {count} numbers")));
    }
    Ok(vals)
}

impl NeighborFn for AdjacencyTable {
    fn degree(&self, x: &BitString) -> usize {
        let i = self.domain.index_of(x).expect("caller checks domain") as usize;
        self.offsets[i + 1] - self.offsets[i]
    }
    fn neighbor(&self, x: &BitString, i: usize) -> usize {
        let row = self.domain.index_of(x).expect("caller checks domain") as usize;
        self.targets[self.offsets[row] + i]
    }
    fn neighbors_into(&self, x: &BitString, out: &mut Vec<usize>) {
        let i = self.domain.index_of(x).expect("caller checks domain") as usize;
        out.extend_from_slice(self.row(i))
    }
}

/// Global right numbering of a layered graph: the `layer` lines of the file
/// format.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LayerHeader {
    pub k: u32,
    pub layers: Vec<LayerSpan>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct LayerSpan {
    pub id: i32,
    pub offset: usize,
    pub size: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn domain_indexing_is_canonical() {
        let d = LeftDomain::new(1, 3).unwrap();
        assert_eq!(d.cardinality(), 2 + 4 + 8);
        for (i, x) in d.iter().enumerate() {
            assert_eq!(d.index_of(&x), Some(i as u64));
            assert_eq!(d.nth(i as u64), Some(x));
        }
        assert_eq!(d.nth(14), None);
        assert_eq!(d.index_of(&bs("-")), None);
        let eps = LeftDomain::new(0, 0).unwrap();
        assert_eq!(eps.iter().collect::<Vec<_>>(), vec![BitString::EMPTY]);
    }

    #[test]
    fn complete_graph_neighbors() {
        let g = BiGraph::complete(LeftDomain::slice(1).unwrap(), 2).unwrap();
        assert_eq!(g.neighbors(&bs("0")).unwrap(), vec![0, 1]);
        assert!(matches!(g.neighbors(&bs("01")), Err(Error::Domain(..))));
        let s = [bs("0"), bs("1")];
        assert_eq!(g.neighbor_set(&s).unwrap(), BTreeSet::from([0, 1]));
        assert!(g.neighbor_of(&bs("0"), 2).is_err());
    }

    #[test]
    fn isolated_vertex_has_no_neighbors() {
        let g = BiGraph::constant(LeftDomain::slice(2).unwrap(), 3, vec![]).unwrap();
        assert!(g.neighbors(&bs("01")).unwrap().is_empty());
    }

    #[test]
    fn empty_set_and_star_neighbor_sets() {
        let d = LeftDomain::new(2, 3).unwrap();
        let star = BiGraph::star(d, 5).unwrap();
        assert!(star.neighbor_set(&[]).unwrap().is_empty());
        let five: Vec<_> = d.iter().take(5).collect();
        assert_eq!(star.neighbor_set(&five).unwrap(), BTreeSet::from([0]));
        assert!(star.neighbor_set(&[bs("1")]).is_err());
    }

    #[test]
    fn single_epsilon_row_table() {
        let g = BiGraph::constant(LeftDomain::new(0, 0).unwrap(), 1, vec![0]).unwrap();
        let t = g.materialize(MATERIALIZE_BOUND).unwrap();
        assert_eq!(t.to_text(None), "BIGRAPH 1\nleft 0 0\nright 1\n-: 0\n");
    }

    #[test]
    fn materialize_respects_bound() {
        let g = BiGraph::complete(LeftDomain::new(0, 10).unwrap(), 2).unwrap();
        assert!(matches!(g.materialize(100), Err(Error::Capacity(_))));
    }

    #[test]
    fn layered_header_round_trips() {
        let d = LeftDomain::new(1, 2).unwrap();
        let g = BiGraph::complete(d, 3).unwrap();
        let header = LayerHeader {
            k: 1,
            layers: vec![
                LayerSpan {
                    id: -1,
                    offset: 0,
                    size: 1,
                },
                LayerSpan {
                    id: 0,
                    offset: 1,
                    size: 2,
                },
            ],
        };
        let text = g.materialize(MATERIALIZE_BOUND).unwrap().to_text(Some(&header));
        let (t, h) = AdjacencyTable::parse(&text).unwrap();
        assert_eq!(h, Some(header));
        assert_eq!(t.to_text(h.as_ref()), text);
    }

    #[test]
    fn parse_rejects_malformed_files() {
        assert!(AdjacencyTable::parse("BIGRAPH 2\n").is_err());
        assert!(AdjacencyTable::parse("BIGRAPH 1\nleft 1 1\nright 2\n0: 0\n").is_err());
        assert!(AdjacencyTable::parse("BIGRAPH 1\nleft 1 1\nright 2\n1: 0\n0: 1\n").is_err());
        assert!(AdjacencyTable::parse("BIGRAPH 1\nleft 1 1\nright 2\n0: 0\n1: 2\n").is_err());
        assert!(AdjacencyTable::parse("BIGRAPH 1\nleft 1 1\nright 2\n0:\n1: 1 0 1\n").is_ok());
    }

    fn random_table(seed: u64) -> AdjacencyTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lo = rng.gen_range(0..3);
        let hi = lo + rng.gen_range(0..3);
        let domain = LeftDomain::new(lo, hi).unwrap();
        let right = rng.gen_range(1..9);
        let rows: Vec<Vec<usize>> = (0..domain.cardinality())
            .map(|_| {
                let d = rng.gen_range(0..5);
                (0..d).map(|_| rng.gen_range(0..right)).collect()
            })
            .collect();
        AdjacencyTable::from_rows(domain, right, &rows).unwrap()
    }

    proptest! {
        #[test]
        fn file_format_round_trips(seed in any::<u64>()) {
            let t = random_table(seed);
            let text = t.to_text(None);
            let (back, header) = AdjacencyTable::parse(&text).unwrap();
            prop_assert!(header.is_none());
            prop_assert_eq!(&back, &t);
            let again = back.clone().into_graph().materialize(MATERIALIZE_BOUND).unwrap();
            prop_assert_eq!(again.to_text(None), text);
        }

        #[test]
        fn neighbor_set_is_monotone(seed in any::<u64>(), mask_a in any::<u64>(), mask_b in any::<u64>()) {
            let g = random_table(seed).into_graph();
            let all: Vec<_> = g.domain().iter().collect();
            let s: Vec<_> = all.iter().enumerate().filter(|(i, _)| mask_a >> (i % 64) & 1 == 1).map(|(_, x)| *x).collect();
            let t: Vec<_> = all.iter().enumerate().filter(|(i, _)| (mask_a | mask_b) >> (i % 64) & 1 == 1).map(|(_, x)| *x).collect();
            let es = g.neighbor_set(&s).unwrap();
            let et = g.neighbor_set(&t).unwrap();
            prop_assert!(es.is_subset(&et));
        }

        #[test]
        fn neighbors_are_deterministic_and_in_range(seed in any::<u64>()) {
            let g = random_table(seed).into_graph();
            for x in g.domain().iter() {
                let a = g.neighbors(&x).unwrap();
                prop_assert_eq!(&a, &g.neighbors(&x).unwrap());
                prop_assert!(a.iter().all(|&r| r < g.right_size()));
                for (i, &r) in a.iter().enumerate() {
                    prop_assert_eq!(g.neighbor_of(&x, i).unwrap(), r);
                }
            }
        }
    }
}
