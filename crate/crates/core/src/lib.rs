//! Expander pruning under edge deletions.
//!
//! Given a φ-expander and an online sequence of edge deletions, the pruners in
//! [`amortized`] and [`worstcase`] grow a set of pruned vertices so that the
//! rest stays an expander, while bounding how many vertices each deletion may
//! prune and, for the worst-case variant, how much work each deletion costs.

pub mod amortized;
pub mod batchcert;
pub mod batching;
pub mod batchprune;
pub mod certificate;
pub mod dyngraph;
pub mod harness;
pub mod linkcut;
pub mod localflow;
pub mod meter;
pub mod oracle;
pub mod params;
pub mod preset;
pub mod worstcase;

pub use dyngraph::{DecGraph, EdgeId, VertexId, VertexSet};
pub use params::{Params, Rational};
