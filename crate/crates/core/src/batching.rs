//! Level batches of deleted edges and forced-removal sets, with the
//! rebuild-index rule that keeps every batch empty, half-full or full.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dyngraph::{EdgeId, VertexSet};
use crate::params::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BatchError {
    #[error("deletion budget of {0} exhausted")]
    BudgetExhausted(u64),
    #[error("no level below k is empty or half-full")]
    NoRebuildLevel,
    #[error("batch {level} has illegal size {size}")]
    IllegalSize { level: usize, size: usize },
    #[error("level {level} rebuilt at deletion {now}, previous rebuild at {previous} is too recent")]
    RebuildTooSoon { level: usize, previous: u64, now: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fullness {
    Empty,
    HalfFull,
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchEvent {
    pub t: u64,
    pub edge: EdgeId,
    pub rebuild_index: usize,
    /// |B_1|, ..., |B_λ| after the update
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchState {
    k: usize,
    lambda: usize,
    b: Vec<Vec<EdgeId>>,
    a: Vec<VertexSet>,
    s: Vec<VertexSet>,
    deletions_processed: u64,
    deletion_budget: u64,
    last_affected: Vec<Option<u64>>,
    history: Vec<BatchEvent>,
}

/// ⌊φ·2^{k−1} / denom⌋
pub fn deletion_budget(phi: Rational, k: usize, denom: Rational) -> u64 {
    let x = phi * Rational::from_integer(1u64 << (k - 1)) / denom;
    x.to_integer()
}

impl BatchState {
    pub fn new(k: usize, lambda: usize, deletion_budget: u64) -> Self {
        assert!(k >= 2 && lambda >= k);
        BatchState {
            k,
            lambda,
            b: vec![Vec::new(); lambda + 2],
            a: vec![VertexSet::new(); lambda + 2],
            s: vec![VertexSet::new(); lambda + 2],
            deletions_processed: 0,
            deletion_budget,
            last_affected: vec![None; lambda + 2],
            history: Vec::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn deletions_processed(&self) -> u64 {
        self.deletions_processed
    }

    pub fn deletion_budget(&self) -> u64 {
        self.deletion_budget
    }

    pub fn b(&self, i: usize) -> &[EdgeId] {
        &self.b[i]
    }

    pub fn a(&self, i: usize) -> &VertexSet {
        &self.a[i]
    }

    pub fn s(&self, i: usize) -> &VertexSet {
        &self.s[i]
    }

    /// Record the latest proposal set of level `i`.
    pub fn set_proposal(&mut self, i: usize, set: VertexSet) {
        self.s[i] = set;
    }

    pub fn history(&self) -> &[BatchEvent] {
        &self.history
    }

    pub fn sizes(&self) -> Vec<usize> {
        (1..=self.lambda).map(|i| self.b[i].len()).collect()
    }

    /// Full size of batch `i`, as a power of two exponent that may be negative.
    fn full_exp(&self, i: usize) -> i64 {
        self.k as i64 - i as i64
    }

    pub fn classify(&self, i: usize) -> Result<Fullness, BatchError> {
        let size = self.b[i].len();
        let e = self.full_exp(i);
        let full = if e >= 0 { 1usize << e } else { 0 };
        let half = if e >= 1 { 1usize << (e - 1) } else { usize::MAX };
        match size {
            0 => Ok(Fullness::Empty),
            x if x == full => Ok(Fullness::Full),
            x if x == half => Ok(Fullness::HalfFull),
            _ => Err(BatchError::IllegalSize { level: i, size }),
        }
    }

    /// Append `e` to B_k, pick the rebuild index and reshuffle the levels at
    /// and above it. Returns the rebuild index.
    pub fn insert_deletion(&mut self, e: EdgeId) -> Result<usize, BatchError> {
        if self.deletions_processed >= self.deletion_budget {
            return Err(BatchError::BudgetExhausted(self.deletion_budget));
        }
        let k = self.k;
        self.b[k].push(e);
        let mut chosen = None;
        for i in (1..k).rev() {
            if self.classify(i)? != Fullness::Full {
                chosen = Some(i);
                break;
            }
        }
        let i = chosen.ok_or(BatchError::NoRebuildLevel)?;
        let t = self.deletions_processed;
        for j in i..=self.lambda {
            // a level j < k may only be touched again after 2^{k-j-1} deletions
            if let (Some(prev), true) = (self.last_affected[j], j + 1 < k) {
                let gap = 1u64 << (k - j - 1);
                if t < prev + gap {
                    return Err(BatchError::RebuildTooSoon {
                        level: j,
                        previous: prev,
                        now: t,
                    });
                }
            }
            self.last_affected[j] = Some(t);
        }

        let next_b = std::mem::take(&mut self.b[i + 1]);
        self.b[i].extend(next_b);
        let mut merged: VertexSet = std::mem::take(&mut self.a[i]);
        merged.extend(self.s[i].iter().copied());
        merged.extend(self.s[i + 1].iter().copied());
        merged.extend(self.a[i + 1].iter().copied());
        self.a[i] = merged;
        for j in i + 1..=self.lambda {
            self.b[j] = std::mem::take(&mut self.b[j + 1]);
            let mut aj: VertexSet = std::mem::take(&mut self.a[j + 1]);
            aj.extend(self.s[j + 1].iter().copied());
            self.a[j] = aj;
        }
        // proposals at and above i are stale until the rebuild recomputes them
        for j in i..=self.lambda + 1 {
            self.s[j].clear();
        }
        self.deletions_processed += 1;
        for j in 1..=self.lambda {
            self.classify(j)?;
        }
        self.history.push(BatchEvent {
            t,
            edge: e,
            rebuild_index: i,
            sizes: self.sizes(),
        });
        Ok(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn classification() {
        let mut st = BatchState::new(3, 4, 100);
        assert_eq!(st.classify(2), Ok(Fullness::Empty));
        st.b[2] = vec![0];
        assert_eq!(st.classify(2), Ok(Fullness::HalfFull));
        st.b[2] = vec![0, 1];
        assert_eq!(st.classify(2), Ok(Fullness::Full));
        st.b[2] = vec![0, 1, 2];
        assert!(st.classify(2).is_err());
    }

    #[test]
    fn five_deletion_trace() {
        let mut st = BatchState::new(3, 4, 100);
        let idx: Vec<usize> = (0..5).map(|e| st.insert_deletion(e).unwrap()).collect();
        assert_eq!(idx, vec![2, 2, 1, 2, 1]);
        assert_eq!(st.b(1).len(), 4);
        assert_eq!(st.b(2).len(), 1);
        assert_eq!(st.b(3).len(), 0);
    }

    #[test]
    fn budget_exhaustion() {
        let mut st = BatchState::new(3, 4, 1);
        st.insert_deletion(0).unwrap();
        assert_eq!(st.insert_deletion(1), Err(BatchError::BudgetExhausted(1)));
        assert_eq!(deletion_budget(Rational::new(1, 4), 5, Rational::from_integer(1)), 4);
    }

    #[test]
    fn reshuffle_moves_proposals_down() {
        let mut st = BatchState::new(3, 4, 100);
        st.insert_deletion(0).unwrap();
        st.set_proposal(2, [5].into());
        st.set_proposal(3, [6].into());
        st.insert_deletion(1).unwrap();
        assert_eq!(st.a(2), &VertexSet::from([5, 6]));
    }

    proptest! {
        #[test]
        fn sizes_stay_legal(k in 2usize..9, extra in 0usize..4, proposals in proptest::collection::vec(0usize..50, 0..64)) {
            let lambda = k + extra;
            let budget = 1u64 << (k - 1);
            let mut st = BatchState::new(k, lambda, budget);
            let mut union_prev = VertexSet::new();
            for t in 0..budget as usize {
                let i = st.insert_deletion(t).unwrap();
                prop_assert!(i >= 1 && i < k);
                for j in i + 1..k {
                    prop_assert_eq!(st.classify(j).unwrap(), Fullness::HalfFull);
                }
                for j in k..=lambda {
                    prop_assert!(st.b(j).is_empty());
                }
                if let Some(&v) = proposals.get(t) {
                    st.set_proposal(i, [v].into());
                }
                let mut union = VertexSet::new();
                for j in 1..=lambda {
                    union.extend(st.a(j));
                    union.extend(st.s(j));
                }
                prop_assert!(union_prev.is_subset(&union));
                union_prev = union;
            }
        }

        #[test]
        fn replay_is_identical(k in 2usize..7) {
            let run = || {
                let mut st = BatchState::new(k, k + 2, 1 << (k - 1));
                for t in 0..(1usize << (k - 1)) {
                    let i = st.insert_deletion(t).unwrap();
                    st.set_proposal(i, [t % 7].into());
                }
                serde_json::to_string(st.history()).unwrap()
            };
            prop_assert_eq!(run(), run());
        }
    }
}
