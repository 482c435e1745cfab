//! Exhaustive check of the lower bound on right degrees forced by online
//! matching with exactly `2^k` right vertices.

use super::game::{OnlineGame, GAME_STATE_BOUND};
use crate::error::{Error, Result};
use crate::graph::{AdjacencyTable, LeftDomain};

/// Outcome of enumerating every bipartite graph between the `2^n` strings
/// of length `n` and `2^k` right vertices.
#[derive(Clone, Debug)]
pub struct RemarkReport {
    pub n: u32,
    pub k: u32,
    pub graphs: u64,
    /// `(edge mask, smallest right degree)` for every graph that admits
    /// online matchings up to size `2^k`.
    pub matchable: Vec<(u64, usize)>,
    /// Matchable graphs with a right vertex of degree `<= 2^n - 2^k`.
    pub exceptions: Vec<u64>,
    /// Matchable graphs in which no left vertex has degree above
    /// `2^k (1 - 2^k / 2^n)`.
    pub left_degree_exceptions: Vec<u64>,
}

impl RemarkReport {
    pub fn holds(&self) -> bool {
        self.exceptions.is_empty() && self.left_degree_exceptions.is_empty()
    }
}

/// Largest edge count enumerated (`2^edges` graphs).
const MAX_EDGES: u32 = 20;

pub fn remark_lower_bound_experiment(n: u32, k: u32) -> Result<RemarkReport> {
    let left = 1usize << n;
    let right = 1usize << k;
    let edges = (left * right) as u32;
    if n > 5 || k > 5 || edges > MAX_EDGES {
        return Err(Error::Capacity(format!(
            "2^{edges} graphs on {left} x {right} vertices is too many to enumerate"
        )));
    }
    if right > left {
        return Err(Error::Parameter(format!("need k <= n, got n = {n}, k = {k}")));
    }
    let domain = LeftDomain::slice(n)?;
    let threshold = left - right;
    let mut report = RemarkReport {
        n,
        k,
        graphs: 1 << edges,
        matchable: Vec::new(),
        exceptions: Vec::new(),
        left_degree_exceptions: Vec::new(),
    };
    for mask in 0u64..1 << edges {
        let rows: Vec<Vec<usize>> = (0..left)
            .map(|v| (0..right).filter(|&r| mask >> (v * right + r) & 1 == 1).collect())
            .collect();
        let g = AdjacencyTable::from_rows(domain, right, &rows)?.into_graph();
        if !OnlineGame::new(&g, right, GAME_STATE_BOUND)?.wins(0, 0)? {
            continue;
        }
        let mut right_deg = vec![0usize; right];
        for row in &rows {
            for &r in row {
                right_deg[r] += 1;
            }
        }
        let min_right = *right_deg.iter().min().expect("non-empty right side");
        report.matchable.push((mask, min_right));
        if min_right <= threshold {
            report.exceptions.push(mask);
        }
        // Some left degree exceeds 2^k (1 - 2^k / 2^n), i.e.
        // deg * 2^n > 2^k (2^n - 2^k).
        let max_left = rows.iter().map(Vec::len).max().unwrap_or(0);
        if max_left * left <= right * threshold {
            report.left_degree_exceptions.push(mask);
        }
    }
    Ok(report)
}
