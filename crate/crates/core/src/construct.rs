//! The layered constructions: dispersers with `2^{k+1}` right vertices,
//! unbalanced expanders, the two-stage Lemma-4 graph and the layered
//! online-matching graph.
//!
//! Every builder is a deterministic function of its parameters and the
//! root seed in [`BuildConfig`]. Sub-graphs are keyed by their own
//! parameters, so identical pieces requested by different layers are built
//! once and shared through the config's cache.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::base::{build_base_auto, BaseRequest, DegreeSearch, Strategy};
use crate::bits::BitString;
use crate::combinators::{clone_double, compose, disjoint_union, fold, splice, FoldSpec, LengthPiece};
use crate::error::{Error, Result};
use crate::graph::{AdjacencyTable, BiGraph, LayerHeader, LayerSpan, LeftDomain, NeighborFn};
use crate::verify::CheckOptions;
use crate::Rational;

/// Largest domain whose sub-graphs are replaced by lookup tables.
const CACHE_DOMAIN: u64 = 1 << 16;
/// Largest estimated table size (neighbor entries) kept in memory.
const CACHE_ENTRIES: u64 = 1 << 22;

/// Largest `k` accepted by the builders.
pub const MAX_K: u32 = 20;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
struct PieceKey {
    tag: u8,
    domain: LeftDomain,
    k: u32,
    target: usize,
    eps: Rational,
}

/// Parameters shared by all builders.
#[derive(Clone)]
pub struct BuildConfig {
    pub seed: u64,
    pub strategy: Strategy,
    /// Base degree; `None` runs the doubling search.
    pub degree: Option<usize>,
    /// Base graphs get at most this many right vertices; larger targets are
    /// reached by clone-doubling and folding.
    pub base_right_cap: usize,
    pub check: CheckOptions,
    pub search: DegreeSearch,
    cache: Arc<Mutex<HashMap<PieceKey, BiGraph>>>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig::new(0)
    }
}

impl std::fmt::Debug for BuildConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BuildConfig")
            .field("seed", &self.seed)
            .field("strategy", &self.strategy)
            .field("degree", &self.degree)
            .field("base_right_cap", &self.base_right_cap)
            .finish_non_exhaustive()
    }
}

impl BuildConfig {
    pub fn new(seed: u64) -> Self {
        BuildConfig {
            seed,
            strategy: Strategy::RandomVerified,
            degree: None,
            base_right_cap: 16,
            check: CheckOptions::default(),
            search: DegreeSearch::default(),
            cache: Arc::default(),
        }
    }

    /// Seed for a sub-problem, a fixed function of the root seed and the
    /// sub-problem's parameters.
    fn derive_seed(&self, key: &PieceKey) -> u64 {
        let mut bytes = [0u8; 32];
        bytes[..8].copy_from_slice(&self.seed.to_le_bytes());
        bytes[8] = key.tag;
        bytes[9..13].copy_from_slice(&key.domain.lo().to_le_bytes());
        bytes[13..17].copy_from_slice(&key.domain.hi().to_le_bytes());
        bytes[17..21].copy_from_slice(&key.k.to_le_bytes());
        bytes[21..25].copy_from_slice(&(key.target as u32).to_le_bytes());
        bytes[25..29].copy_from_slice(&(*key.eps.numer() as u32).to_le_bytes());
        bytes[29..32].copy_from_slice(&(*key.eps.denom() as u32).to_le_bytes()[..3]);
        ChaCha8Rng::from_seed(bytes).next_u64()
    }

    fn cached_piece(&self, key: PieceKey, build: impl FnOnce() -> Result<BiGraph>) -> Result<BiGraph> {
        if let Some(g) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(g.clone());
        }
        let g = settle(build()?);
        self.cache.lock().expect("cache lock").entry(key).or_insert(g.clone());
        Ok(g)
    }
}

/// Swaps a lazily composed graph for its lookup table when that is small.
fn settle(g: BiGraph) -> BiGraph {
    let n = g.domain().cardinality();
    if n > CACHE_DOMAIN {
        return g;
    }
    let probe = g.domain().nth(0).map_or(0, |x| g.degree_unchecked(&x)) as u64;
    if n * probe.max(1) * 2 > CACHE_ENTRIES {
        return g;
    }
    g.cached(CACHE_DOMAIN)
}

fn check_k(k: u32) -> Result<()> {
    if k > MAX_K {
        return Err(Error::Parameter(format!("k = {k} exceeds {MAX_K}")));
    }
    Ok(())
}

fn require_room(domain: LeftDomain, k: u32) -> Result<()> {
    check_k(k)?;
    if domain.cardinality() < 1 << k {
        return Err(Error::Parameter(format!(
            "domain {domain} has fewer than 2^{k} strings"
        )));
    }
    Ok(())
}

/// Right size `ceil(2^(k + delta))` and base error `(2/3)(1 - 2^-delta)`,
/// rounded down so the fold bound still yields `2^k` neighbors.
fn delta_target(k: u32, delta: Rational) -> Result<(usize, Rational)> {
    if delta == Rational::from_integer(0) || delta > Rational::from_integer(4) {
        return Err(Error::Parameter(format!("delta = {delta} must lie in (0, 4]")));
    }
    if delta.is_integer() {
        let d = delta.to_integer() as u32;
        let target = 1usize << (k + d);
        let eps = Rational::new(2 * ((1u64 << d) - 1), 3 << d);
        return Ok((target, eps));
    }
    let d = *delta.numer() as f64 / *delta.denom() as f64;
    let target = 2f64.powf(k as f64 + d).ceil() as usize;
    let scale = 1u64 << 20;
    let eps_f = 2.0 / 3.0 * (1.0 - 2f64.powf(-d));
    Ok((target, Rational::new((eps_f * scale as f64).floor() as u64, scale)))
}

/// The disperser recipe: a base `(2^k, eps)`-disperser, clone-doubled until
/// its right side holds at least `2 * target` vertices, then folded into
/// `target` classes. With `eps = 1/3` at most half the classes can be empty
/// for any `2^k` left vertices.
fn disperser_piece(domain: LeftDomain, k: u32, target: usize, eps: Rational, cfg: &BuildConfig) -> Result<BiGraph> {
    let key = PieceKey {
        tag: 1,
        domain,
        k,
        target,
        eps,
    };
    cfg.cached_piece(key, || {
        let right = target.min(cfg.base_right_cap.max(1));
        let req = BaseRequest {
            domain,
            k: 1 << k,
            eps,
            right_size: right,
            seed: cfg.derive_seed(&key),
            strategy: cfg.strategy,
            degree: cfg.degree,
        };
        let base = build_base_auto(&req, &cfg.search, &cfg.check)?.graph;
        if right == target {
            return Ok(base);
        }
        let mut g = base;
        while g.right_size() < 2 * target {
            g = clone_double(&g);
        }
        fold(&g, FoldSpec::new(target))
    })
}

/// Right side of `2^{k+1}` vertices (or `ceil(2^{k+delta})`) in which every
/// `2^k` domain strings have at least `2^k` neighbors.
pub fn build_disperser_lemma(
    domain: LeftDomain,
    k: u32,
    cfg: &BuildConfig,
    delta: Option<Rational>,
) -> Result<BiGraph> {
    require_room(domain, k)?;
    let (target, eps) = match delta {
        None => (1usize << (k + 1), Rational::new(1, 3)),
        Some(d) => delta_target(k, d)?,
    };
    disperser_piece(domain, k, target, eps, cfg)
}

/// A `(2^k, 1)`-expander: the disjoint union over `i = 0..=k` of graphs in
/// which every `2^i` strings reach `2^{i+1}` of `2^{i+2}` right vertices.
/// Right size `2^{k+3} - 4`.
pub fn build_expander_lemma(domain: LeftDomain, k: u32, cfg: &BuildConfig) -> Result<BiGraph> {
    require_room(domain, k)?;
    let key = PieceKey {
        tag: 2,
        domain,
        k,
        target: (1 << (k + 3)) - 4,
        eps: Rational::new(1, 3),
    };
    cfg.cached_piece(key, || {
        let parts = (0..=k)
            .map(|i| disperser_piece(domain, i, 1 << (i + 2), Rational::new(1, 3), cfg))
            .collect::<Result<Vec<_>>>()?;
        disjoint_union(&parts)
    })
}

/// The two-stage graph of one layer, with its stages kept for inspection.
#[derive(Clone, Debug)]
pub struct Lemma4 {
    pub graph: BiGraph,
    /// Length-indexed expanders from the short strings into the middle set.
    pub expanders: Option<BiGraph>,
    /// Disperser from the (padded) middle set onto the right side.
    pub disperser: Option<BiGraph>,
    /// Number of middle vertices actually used, before padding.
    pub middle_size: usize,
    /// Lengths handled by the two-stage path.
    pub short_lengths: Option<(u32, u32)>,
}

impl Lemma4 {
    pub fn k(&self) -> u32 {
        (self.graph.right_size() / 2).trailing_zeros()
    }
}

/// Right side of `2^{k+1}` vertices in which every `2^k` strings of
/// `domain` have at least `2^k` neighbors, with poly-size degree.
///
/// Strings of length `n <= 2^k` go through a `(2^k, 1)`-expander on their
/// own length into a middle block `M_n`, then through a disperser on the
/// middle set. Longer strings are joined to right vertices `0..2^k`.
pub fn build_lemma4(domain: LeftDomain, k: u32, cfg: &BuildConfig) -> Result<Lemma4> {
    check_k(k)?;
    if domain.lo() < k {
        return Err(Error::Parameter(format!("domain {domain} starts below length k = {k}")));
    }
    let right = 1usize << (k + 1);
    let half = 1usize << k;
    let short_hi = (half as u64).min(domain.hi() as u64) as u32;
    let short = (domain.lo() <= short_hi).then_some((domain.lo(), short_hi));
    let long_lo = domain.lo().max(short_hi + 1);

    let mut pieces = Vec::new();
    let (mut expanders, mut disperser, mut middle_size) = (None, None, 0);
    if let Some((lo, hi)) = short {
        let block = (1usize << (k + 3)) - 4;
        let blocks = (lo..=hi)
            .map(|n| {
                Ok(LengthPiece {
                    graph: build_expander_lemma(LeftDomain::slice(n)?, k, cfg)?,
                    offset: (n - lo) as usize * block,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        middle_size = blocks.len() * block;
        let m_bits = usize::BITS - (middle_size - 1).leading_zeros();
        let middle = LeftDomain::slice(m_bits)?;
        let a = splice(LeftDomain::new(lo, hi)?, 1 << m_bits, blocks)?;
        let b = build_disperser_lemma(middle, k, cfg, None)?;
        pieces.push(LengthPiece {
            graph: compose(&a, &b)?,
            offset: 0,
        });
        expanders = Some(a);
        disperser = Some(b);
    }
    if long_lo <= domain.hi() {
        pieces.push(LengthPiece {
            graph: BiGraph::constant(LeftDomain::new(long_lo, domain.hi())?, right, (0..half).collect())?,
            offset: 0,
        });
    }
    let graph = splice(domain, right, pieces)?;
    Ok(Lemma4 {
        graph,
        expanders,
        disperser,
        middle_size,
        short_lengths: short,
    })
}

/// One layer of a [`LayeredGraph`].
#[derive(Clone, Debug)]
pub struct Layer {
    /// `-1` for the universal vertex, else the Lemma-4 parameter.
    pub id: i32,
    /// First global right index of the layer.
    pub offset: usize,
    pub graph: BiGraph,
}

/// Layers `-1, 0, .., k-1` over a common domain, numbered globally in that
/// order. Total right size `2^{k+1} - 1`.
#[derive(Clone, Debug)]
pub struct LayeredGraph {
    k: u32,
    domain: LeftDomain,
    layers: Vec<Layer>,
}

impl LayeredGraph {
    pub fn new(k: u32, domain: LeftDomain, graphs: Vec<BiGraph>) -> Result<Self> {
        check_k(k)?;
        if graphs.len() != k as usize + 1 {
            return Err(Error::Parameter(format!(
                "{} layer graphs given for k = {k}",
                graphs.len()
            )));
        }
        let mut layers = Vec::with_capacity(graphs.len());
        let mut offset = 0;
        for (slot, graph) in graphs.into_iter().enumerate() {
            let expected = if slot == 0 { 1 } else { 1 << slot };
            if graph.right_size() != expected || graph.domain() != domain {
                return Err(Error::Parameter(format!(
                    "layer {} has {} right vertices over {}, expected {expected} over {domain}",
                    slot as i32 - 1,
                    graph.right_size(),
                    graph.domain()
                )));
            }
            layers.push(Layer {
                id: slot as i32 - 1,
                offset,
                graph,
            });
            offset += expected;
        }
        Ok(LayeredGraph { k, domain, layers })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn domain(&self) -> LeftDomain {
        self.domain
    }

    /// Layers in global order: `-1` first.
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer(&self, id: i32) -> &Layer {
        &self.layers[(id + 1) as usize]
    }

    pub fn right_size(&self) -> usize {
        (1 << (self.k + 1)) - 1
    }

    /// Layer owning a global right index.
    pub fn layer_of(&self, global: usize) -> Option<i32> {
        self.layers
            .iter()
            .find(|l| global >= l.offset && global < l.offset + l.graph.right_size())
            .map(|l| l.id)
    }

    /// Degree of `x` in the union: the sum of its layer degrees.
    pub fn degree_of(&self, x: &BitString) -> Result<usize> {
        self.layers.iter().map(|l| l.graph.degree_of(x)).sum()
    }

    /// Global neighbor indices of `x`, layer by layer in global order.
    pub fn neighbors(&self, x: &BitString) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(l.graph.neighbors(x)?.into_iter().map(|r| r + l.offset));
        }
        Ok(out)
    }

    /// The whole layered graph as one bipartite graph.
    pub fn union(&self) -> BiGraph {
        let parts: Vec<_> = self.layers.iter().map(|l| l.graph.clone()).collect();
        disjoint_union(&parts).expect("layers share a domain")
    }

    pub fn header(&self) -> LayerHeader {
        LayerHeader {
            k: self.k,
            layers: self
                .layers
                .iter()
                .map(|l| LayerSpan {
                    id: l.id,
                    offset: l.offset,
                    size: l.graph.right_size(),
                })
                .collect(),
        }
    }

    /// Graph file text with the layer section.
    pub fn to_text(&self, bound: u64) -> Result<String> {
        Ok(self.union().materialize(bound)?.to_text(Some(&self.header())))
    }

    /// Reads a graph file with a layer section.
    pub fn from_text(text: &str) -> Result<Self> {
        let (table, header) = AdjacencyTable::parse(text)?;
        let header = header.ok_or_else(|| Error::parse(0, "missing LAYERED section"))?;
        Self::from_table(table, &header)
    }

    pub fn from_table(table: AdjacencyTable, header: &LayerHeader) -> Result<Self> {
        let domain = table.domain();
        let table = Arc::new(table);
        let graphs = header
            .layers
            .iter()
            .map(|span| {
                BiGraph::new(
                    domain,
                    span.size,
                    LayerView {
                        table: table.clone(),
                        offset: span.offset,
                        size: span.size,
                    },
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let g = LayeredGraph::new(header.k, domain, graphs)?;
        if g.header() != *header || g.right_size() != table.right_size() {
            return Err(Error::parse(0, "layer section does not match the layered numbering"));
        }
        Ok(g)
    }
}

/// The neighbors of a table falling in one layer's global range.
struct LayerView {
    table: Arc<AdjacencyTable>,
    offset: usize,
    size: usize,
}

impl LayerView {
    fn local(&self, x: &BitString) -> impl Iterator<Item = usize> + '_ {
        let i = self.table.domain().index_of(x).expect("x in domain") as usize;
        self.table
            .row(i)
            .iter()
            .filter(|&&r| r >= self.offset && r < self.offset + self.size)
            .map(|&r| r - self.offset)
    }
}

impl NeighborFn for LayerView {
    fn degree(&self, x: &BitString) -> usize {
        self.local(x).count()
    }

    fn neighbor(&self, x: &BitString, i: usize) -> usize {
        self.local(x).nth(i).expect("neighbor index below degree")
    }

    fn neighbors_into(&self, x: &BitString, out: &mut Vec<usize>) {
        out.extend(self.local(x));
    }
}

/// The layered online-matching graph on all strings of length `k..=hi`:
/// a universal vertex plus Lemma-4 layers `0..k`.
pub fn build_eomt(k: u32, domain_hi: u32, cfg: &BuildConfig) -> Result<LayeredGraph> {
    check_k(k)?;
    if domain_hi < k {
        return Err(Error::Parameter(format!("domain_hi = {domain_hi} is below k = {k}")));
    }
    let domain = LeftDomain::new(k, domain_hi)?;
    let mut graphs = vec![BiGraph::complete(domain, 1)?];
    let built = (0..k)
        .into_par_iter()
        .map(|i| build_lemma4(domain, i, cfg).map(|l| settle(l.graph)))
        .collect::<Result<Vec<_>>>()?;
    graphs.extend(built);
    LayeredGraph::new(k, domain, graphs)
}
