//! Explicit dispersers and expanders built from small verified base graphs,
//! a layered greedy online matcher over them, and short lists of
//! descriptions for a toy description machine.

pub mod base;
pub mod bits;
pub mod cli;
pub mod combinators;
pub mod config;
pub mod construct;
pub mod error;
pub mod graph;
pub mod matcher;
pub mod shortlist;
pub mod verify;

/// Exact rational parameters (`eps`, `c`, `delta`).
pub type Rational = num_rational::Ratio<u64>;

pub use bits::BitString;
pub use error::{Error, Result};
pub use graph::{AdjacencyTable, BiGraph, LeftDomain, NeighborFn};
