//! Graph transformations: clone-doubling, balanced folding, disjoint union,
//! two-stage composition, and splicing per-length pieces together.

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::graph::{BiGraph, LeftDomain, NeighborFn};

/// Number of equivalence classes for [`fold`]. Right vertex `j` lands in
/// class `j mod classes`, which keeps class sizes within one of each other.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct FoldSpec {
    pub classes: usize,
}

impl FoldSpec {
    pub fn new(classes: usize) -> Self {
        FoldSpec { classes }
    }

    /// Sizes of the classes when folding `right_size` vertices.
    pub fn class_sizes(&self, right_size: usize) -> Vec<usize> {
        let (q, r) = (right_size / self.classes, right_size % self.classes);
        (0..self.classes).map(|c| q + usize::from(c < r)).collect()
    }
}

/// Appends the distinct values of `items` to `out`, in order of first
/// occurrence.
fn push_distinct(items: impl IntoIterator<Item = usize>, universe: usize, out: &mut Vec<usize>) {
    let mut seen = vec![0u64; universe.div_ceil(64)];
    for v in items {
        let (w, b) = (v / 64, v % 64);
        if seen[w] >> b & 1 == 0 {
            seen[w] |= 1 << b;
            out.push(v);
        }
    }
}

struct CloneDouble {
    inner: BiGraph,
}

impl NeighborFn for CloneDouble {
    fn degree(&self, x: &BitString) -> usize {
        2 * self.inner.degree_unchecked(x)
    }

    fn neighbor(&self, x: &BitString, i: usize) -> usize {
        let d = self.inner.degree_unchecked(x);
        let base = self.inner.neighbors_unchecked(x);
        if i < d {
            base[i]
        } else {
            self.inner.right_size() + base[i - d]
        }
    }

    fn neighbors_into(&self, x: &BitString, out: &mut Vec<usize>) {
        let start = out.len();
        self.inner.neighbors_into_unchecked(x, out);
        let end = out.len();
        let r = self.inner.right_size();
        for i in start..end {
            out.push(out[i] + r);
        }
    }
}

/// Two copies of `g` side by side: right size and degree both double.
/// Neighbor `d + i` of `x` is the copy of neighbor `i`.
pub fn clone_double(g: &BiGraph) -> BiGraph {
    BiGraph::new(g.domain(), 2 * g.right_size(), CloneDouble { inner: g.clone() })
        .expect("doubling a non-empty right side")
}

struct Fold {
    inner: BiGraph,
    classes: usize,
}

impl NeighborFn for Fold {
    fn degree(&self, x: &BitString) -> usize {
        let mut out = Vec::new();
        self.neighbors_into(x, &mut out);
        out.len()
    }

    fn neighbor(&self, x: &BitString, i: usize) -> usize {
        let mut out = Vec::new();
        self.neighbors_into(x, &mut out);
        out[i]
    }

    fn neighbors_into(&self, x: &BitString, out: &mut Vec<usize>) {
        let raw = self.inner.neighbors_unchecked(x);
        push_distinct(raw.into_iter().map(|j| j % self.classes), self.classes, out);
    }
}

/// Quotient of the right side into `spec.classes` balanced classes.
///
/// `x` is adjacent to class `c` iff some original neighbor of `x` lies in
/// `c`. Each class appears once in the folded neighbor sequence, in order
/// of first occurrence, so the degree never increases.
pub fn fold(g: &BiGraph, spec: FoldSpec) -> Result<BiGraph> {
    if spec.classes == 0 || spec.classes > g.right_size() {
        return Err(Error::Parameter(format!(
            "cannot fold {} right vertices into {} classes",
            g.right_size(),
            spec.classes
        )));
    }
    BiGraph::new(
        g.domain(),
        spec.classes,
        Fold {
            inner: g.clone(),
            classes: spec.classes,
        },
    )
}

struct Union {
    parts: Vec<(BiGraph, usize)>,
}

impl NeighborFn for Union {
    fn degree(&self, x: &BitString) -> usize {
        self.parts.iter().map(|(g, _)| g.degree_unchecked(x)).sum()
    }

    fn neighbor(&self, x: &BitString, mut i: usize) -> usize {
        for (g, off) in &self.parts {
            let d = g.degree_unchecked(x);
            if i < d {
                return off + g.neighbors_unchecked(x)[i];
            }
            i -= d;
        }
        unreachable!("neighbor index beyond union degree")
    }

    fn neighbors_into(&self, x: &BitString, out: &mut Vec<usize>) {
        for (g, off) in &self.parts {
            let start = out.len();
            g.neighbors_into_unchecked(x, out);
            for r in &mut out[start..] {
                *r += off;
            }
        }
    }
}

/// Right sides placed one after another; part `j` is shifted by the sizes
/// of parts `0..j`. Neighbor sequences concatenate in part order.
pub fn disjoint_union(parts: &[BiGraph]) -> Result<BiGraph> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Parameter("disjoint union of no graphs".into()))?;
    let domain = first.domain();
    let mut placed = Vec::with_capacity(parts.len());
    let mut offset = 0;
    for g in parts {
        if g.domain() != domain {
            return Err(Error::Parameter(format!(
                "union parts disagree on domain: {} vs {}",
                domain,
                g.domain()
            )));
        }
        placed.push((g.clone(), offset));
        offset += g.right_size();
    }
    BiGraph::new(domain, offset, Union { parts: placed })
}

struct Compose {
    a: BiGraph,
    b: BiGraph,
}

impl NeighborFn for Compose {
    fn degree(&self, x: &BitString) -> usize {
        let mut out = Vec::new();
        self.neighbors_into(x, &mut out);
        out.len()
    }

    fn neighbor(&self, x: &BitString, i: usize) -> usize {
        let mut out = Vec::new();
        self.neighbors_into(x, &mut out);
        out[i]
    }

    fn neighbors_into(&self, x: &BitString, out: &mut Vec<usize>) {
        let mids = self.a.neighbors_unchecked(x);
        let bdom = self.b.domain();
        let mut raw = Vec::new();
        for m in mids {
            let z = bdom.nth(m as u64).expect("middle index inside b's domain");
            self.b.neighbors_into_unchecked(&z, &mut raw);
        }
        push_distinct(raw, self.b.right_size(), out);
    }
}

/// `x ~ r` iff some middle vertex `z` has `x ~ z` in `a` and `z ~ r` in `b`.
///
/// Middle vertex `j` of `a` is identified with the `j`-th string of `b`'s
/// domain in canonical order, so `a.right_size()` must equal that domain's
/// cardinality. Neighbors are listed in `(i_a, i_b)` order with repeats
/// removed.
pub fn compose(a: &BiGraph, b: &BiGraph) -> Result<BiGraph> {
    if a.right_size() as u64 != b.domain().cardinality() {
        return Err(Error::Parameter(format!(
            "middle layer mismatch: {} right vertices vs domain {} of {} strings",
            a.right_size(),
            b.domain(),
            b.domain().cardinality()
        )));
    }
    BiGraph::new(
        a.domain(),
        b.right_size(),
        Compose {
            a: a.clone(),
            b: b.clone(),
        },
    )
}

/// A piece of a [`splice`]: a graph over a window of lengths whose right
/// indices are shifted by `offset`.
#[derive(Clone, Debug)]
pub struct LengthPiece {
    pub graph: BiGraph,
    pub offset: usize,
}

struct Splice {
    lo: u32,
    pieces: Vec<LengthPiece>,
    by_len: Vec<usize>,
}

impl Splice {
    fn piece(&self, x: &BitString) -> &LengthPiece {
        &self.pieces[self.by_len[(x.len() - self.lo) as usize]]
    }
}

impl NeighborFn for Splice {
    fn degree(&self, x: &BitString) -> usize {
        self.piece(x).graph.degree_unchecked(x)
    }

    fn neighbor(&self, x: &BitString, i: usize) -> usize {
        let p = self.piece(x);
        p.offset + p.graph.neighbors_unchecked(x)[i]
    }

    fn neighbors_into(&self, x: &BitString, out: &mut Vec<usize>) {
        let p = self.piece(x);
        let start = out.len();
        p.graph.neighbors_into_unchecked(x, out);
        for r in &mut out[start..] {
            *r += p.offset;
        }
    }
}

/// Dispatches each string to the piece covering its length.
///
/// The pieces' domains must tile `domain` by length windows, and each
/// shifted piece must fit inside `right_size`. With distinct offsets this is
/// the length-indexed embedding into a disjoint union of right sides; with
/// offset 0 everywhere the pieces share one right side.
pub fn splice(domain: LeftDomain, right_size: usize, pieces: Vec<LengthPiece>) -> Result<BiGraph> {
    let span = (domain.hi() - domain.lo() + 1) as usize;
    let mut by_len = vec![usize::MAX; span];
    for (idx, p) in pieces.iter().enumerate() {
        let d = p.graph.domain();
        if d.lo() < domain.lo() || d.hi() > domain.hi() {
            return Err(Error::Parameter(format!("piece domain {d} escapes {domain}")));
        }
        if p.offset + p.graph.right_size() > right_size {
            return Err(Error::Parameter(format!(
                "piece at offset {} with {} right vertices exceeds {right_size}",
                p.offset,
                p.graph.right_size()
            )));
        }
        for n in d.lo()..=d.hi() {
            let slot = &mut by_len[(n - domain.lo()) as usize];
            if *slot != usize::MAX {
                return Err(Error::Parameter(format!("length {n} covered twice")));
            }
            *slot = idx;
        }
    }
    if let Some(gap) = by_len.iter().position(|&s| s == usize::MAX) {
        return Err(Error::Parameter(format!(
            "length {} not covered by any piece",
            domain.lo() + gap as u32
        )));
    }
    BiGraph::new(
        domain,
        right_size,
        Splice {
            lo: domain.lo(),
            pieces,
            by_len,
        },
    )
}
