//! Rooted dynamic forest over a fixed set of directed arcs, with path-minimum
//! queries and path additions on the root-to-vertex path.
//!
//! Each tree vertex stores the value of the arc entering it, so a vertex has at
//! most one parent arc. Values of arcs not currently in the forest live in a
//! plain array and are read and written directly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dyngraph::VertexId;

pub type ArcId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForestError {
    #[error("vertex {0} already has an incoming tree arc")]
    TwoInEdges(VertexId),
    #[error("inserting arc {0} would close a cycle")]
    Cycle(ArcId),
    #[error("arc {0} is not in the forest")]
    NotInForest(ArcId),
    #[error("vertex {0} is a root")]
    AtRoot(VertexId),
    #[error("update would make arc {0} negative")]
    NegativeFlow(ArcId),
}

const NIL: usize = usize::MAX;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Node {
    ch: [usize; 2],
    /// splay parent or path-parent
    par: usize,
    /// flow on the parent arc; meaningful only when `arc != NIL`
    val: i64,
    arc: ArcId,
    /// minimum over the splay subtree and the deepest vertex attaining it
    min: i64,
    argmin: usize,
    lazy: i64,
}

const INF: i64 = i64::MAX / 4;

impl Node {
    fn new() -> Self {
        Node {
            ch: [NIL, NIL],
            par: NIL,
            val: 0,
            arc: NIL,
            min: INF,
            argmin: NIL,
            lazy: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynForest {
    arcs: Vec<(VertexId, VertexId)>,
    flow: Vec<i64>,
    nodes: Vec<Node>,
}

impl DynForest {
    /// Empty forest over `arcs` with initial values `flow`.
    pub fn new(n: usize, arcs: Vec<(VertexId, VertexId)>, flow: Vec<i64>) -> Self {
        assert_eq!(arcs.len(), flow.len());
        DynForest {
            arcs,
            flow,
            nodes: vec![Node::new(); n],
        }
    }

    pub fn arc(&self, a: ArcId) -> (VertexId, VertexId) {
        self.arcs[a]
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    /// The tree arc entering `v`, if any.
    pub fn parent_arc(&self, v: VertexId) -> Option<ArcId> {
        let a = self.nodes[v].arc;
        (a != NIL).then_some(a)
    }

    pub fn in_forest(&self, a: ArcId) -> bool {
        self.nodes[self.arcs[a].1].arc == a
    }

    fn is_splay_root(&self, x: usize) -> bool {
        let p = self.nodes[x].par;
        p == NIL || (self.nodes[p].ch[0] != x && self.nodes[p].ch[1] != x)
    }

    fn apply(&mut self, x: usize, delta: i64) {
        if x == NIL {
            return;
        }
        let nd = &mut self.nodes[x];
        if nd.arc != NIL {
            nd.val += delta;
        }
        if nd.min != INF {
            nd.min += delta;
        }
        nd.lazy += delta;
    }

    fn push_down(&mut self, x: usize) {
        let lz = self.nodes[x].lazy;
        if lz != 0 {
            let [l, r] = self.nodes[x].ch;
            self.apply(l, lz);
            self.apply(r, lz);
            self.nodes[x].lazy = 0;
        }
    }

    fn pull(&mut self, x: usize) {
        // left is shallower; on ties prefer the deeper (right) side
        let [l, r] = self.nodes[x].ch;
        let mut best = (INF, NIL);
        if l != NIL {
            best = (self.nodes[l].min, self.nodes[l].argmin);
        }
        if self.nodes[x].arc != NIL && self.nodes[x].val <= best.0 {
            best = (self.nodes[x].val, x);
        }
        if r != NIL && self.nodes[r].min != INF && self.nodes[r].min <= best.0 {
            best = (self.nodes[r].min, self.nodes[r].argmin);
        }
        self.nodes[x].min = best.0;
        self.nodes[x].argmin = best.1;
    }

    fn rotate(&mut self, x: usize) {
        let p = self.nodes[x].par;
        let g = self.nodes[p].par;
        let dir = usize::from(self.nodes[p].ch[1] == x);
        let b = self.nodes[x].ch[1 - dir];
        if !self.is_splay_root(p) {
            let gd = usize::from(self.nodes[g].ch[1] == p);
            self.nodes[g].ch[gd] = x;
        }
        self.nodes[x].par = g;
        self.nodes[x].ch[1 - dir] = p;
        self.nodes[p].par = x;
        self.nodes[p].ch[dir] = b;
        if b != NIL {
            self.nodes[b].par = p;
        }
        self.pull(p);
        self.pull(x);
    }

    fn splay(&mut self, x: usize) {
        let mut path = vec![x];
        let mut y = x;
        while !self.is_splay_root(y) {
            y = self.nodes[y].par;
            path.push(y);
        }
        for &z in path.iter().rev() {
            self.push_down(z);
        }
        while !self.is_splay_root(x) {
            let p = self.nodes[x].par;
            if !self.is_splay_root(p) {
                let g = self.nodes[p].par;
                let zigzig = (self.nodes[g].ch[1] == p) == (self.nodes[p].ch[1] == x);
                self.rotate(if zigzig { p } else { x });
            }
            self.rotate(x);
        }
    }

    /// Make the root-to-`x` path one splay tree rooted at `x` with no deeper part.
    fn access(&mut self, x: usize) {
        let mut last = NIL;
        let mut y = x;
        while y != NIL {
            self.splay(y);
            self.nodes[y].ch[1] = last;
            self.pull(y);
            last = y;
            y = self.nodes[y].par;
        }
        self.splay(x);
    }

    pub fn find_root(&mut self, u: VertexId) -> VertexId {
        self.access(u);
        let mut x = u;
        loop {
            self.push_down(x);
            let l = self.nodes[x].ch[0];
            if l == NIL {
                break;
            }
            x = l;
        }
        self.splay(x);
        x
    }

    /// Add arc `a = (x, y)` to the forest; `y` must currently be a root.
    pub fn insert(&mut self, a: ArcId) -> Result<(), ForestError> {
        let (x, y) = self.arcs[a];
        if self.nodes[y].arc != NIL {
            return Err(ForestError::TwoInEdges(y));
        }
        if self.find_root(x) == y {
            return Err(ForestError::Cycle(a));
        }
        self.access(y);
        self.nodes[y].arc = a;
        self.nodes[y].val = self.flow[a];
        self.nodes[y].par = x;
        self.pull(y);
        Ok(())
    }

    /// Remove arc `a` from the forest, writing its value back.
    pub fn delete(&mut self, a: ArcId) -> Result<(), ForestError> {
        if !self.in_forest(a) {
            return Err(ForestError::NotInForest(a));
        }
        let y = self.arcs[a].1;
        self.access(y);
        self.flow[a] = self.nodes[y].val;
        let l = self.nodes[y].ch[0];
        if l != NIL {
            self.nodes[l].par = NIL;
        }
        self.nodes[y].ch[0] = NIL;
        self.nodes[y].arc = NIL;
        self.pull(y);
        Ok(())
    }

    /// The minimum-value arc on the root-to-`u` path, ties broken towards `u`.
    pub fn find_min(&mut self, u: VertexId) -> Result<ArcId, ForestError> {
        self.access(u);
        let am = self.nodes[u].argmin;
        if am == NIL {
            return Err(ForestError::AtRoot(u));
        }
        Ok(self.nodes[am].arc)
    }

    /// Add `delta` to every arc on the root-to-`u` path.
    pub fn update_flow(&mut self, u: VertexId, delta: i64) -> Result<(), ForestError> {
        self.access(u);
        if self.nodes[u].argmin == NIL {
            return Ok(());
        }
        if self.nodes[u].min + delta < 0 {
            return Err(ForestError::NegativeFlow(self.nodes[self.nodes[u].argmin].arc));
        }
        self.apply(u, delta);
        Ok(())
    }

    pub fn read_current_flow(&mut self, a: ArcId) -> i64 {
        if self.in_forest(a) {
            let y = self.arcs[a].1;
            self.access(y);
            self.nodes[y].val
        } else {
            self.flow[a]
        }
    }

    /// Set the value of an arc outside the forest.
    pub fn set_flow(&mut self, a: ArcId, value: i64) -> Result<(), ForestError> {
        if self.in_forest(a) {
            return Err(ForestError::NotInForest(a));
        }
        self.flow[a] = value;
        Ok(())
    }

    /// Current values of all arcs.
    pub fn flows(&mut self) -> Vec<i64> {
        let mut out = self.flow.clone();
        for v in 0..self.nodes.len() {
            let a = self.nodes[v].arc;
            if a != NIL {
                out[a] = self.read_current_flow(a);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::NaiveForest;
    use proptest::prelude::*;

    #[test]
    fn fresh_forest() {
        let mut f = DynForest::new(3, vec![(0, 1), (1, 2)], vec![4, 7]);
        assert_eq!(f.find_root(2), 2);
        assert_eq!(f.read_current_flow(1), 7);
        assert_eq!(f.find_min(1), Err(ForestError::AtRoot(1)));
    }

    #[test]
    fn insert_delete() {
        let mut f = DynForest::new(3, vec![(0, 1), (1, 2), (2, 1)], vec![1, 1, 1]);
        f.insert(0).unwrap();
        f.insert(1).unwrap();
        assert_eq!(f.find_root(2), 0);
        assert_eq!(f.insert(2), Err(ForestError::TwoInEdges(1)));
        f.delete(0).unwrap();
        assert_eq!(f.find_root(1), 1);
    }

    #[test]
    fn chain_min_and_update() {
        let mut f = DynForest::new(3, vec![(0, 1), (1, 2)], vec![5, 3]);
        f.insert(0).unwrap();
        f.insert(1).unwrap();
        f.update_flow(2, -1).unwrap();
        assert_eq!(f.flows(), vec![4, 2]);
        assert_eq!(f.find_min(2), Ok(1));
    }

    #[test]
    fn ties_go_to_deepest() {
        let mut f = DynForest::new(4, vec![(0, 1), (1, 2), (2, 3)], vec![2, 2, 2]);
        for a in 0..3 {
            f.insert(a).unwrap();
        }
        assert_eq!(f.find_min(3), Ok(2));
        assert_eq!(f.find_min(2), Ok(1));
    }

    #[derive(Debug, Clone)]
    enum Op {
        Insert(usize),
        Delete(usize),
        Root(usize),
        Min(usize),
        Update(usize, i64),
        Read(usize),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (0usize..40).prop_map(Op::Insert),
            (0usize..40).prop_map(Op::Delete),
            (0usize..12).prop_map(Op::Root),
            (0usize..12).prop_map(Op::Min),
            (0usize..12, -2i64..=3).prop_map(|(u, d)| Op::Update(u, d)),
            (0usize..40).prop_map(Op::Read),
        ]
    }

    proptest! {
        #[test]
        fn agrees_with_naive(
            arcs in proptest::collection::vec((0usize..12, 0usize..12, 0i64..6), 40),
            ops in proptest::collection::vec(op(), 1..200),
        ) {
            let arcs_only: Vec<_> = arcs.iter().map(|&(a, b, _)| (a, b)).collect();
            let vals: Vec<_> = arcs.iter().map(|a| a.2).collect();
            let mut fast = DynForest::new(12, arcs_only.clone(), vals.clone());
            let mut slow = NaiveForest::new(12, arcs_only.clone(), vals);
            for op in ops {
                match op {
                    Op::Insert(a) => {
                        let (x, y) = arcs_only[a];
                        if x == y { continue; }
                        prop_assert_eq!(fast.insert(a), slow.insert(a));
                    }
                    Op::Delete(a) => prop_assert_eq!(fast.delete(a), slow.delete(a)),
                    Op::Root(u) => prop_assert_eq!(fast.find_root(u), slow.find_root(u)),
                    Op::Min(u) => prop_assert_eq!(fast.find_min(u), slow.find_min(u)),
                    Op::Update(u, d) => prop_assert_eq!(fast.update_flow(u, d), slow.update_flow(u, d)),
                    Op::Read(a) => prop_assert_eq!(fast.read_current_flow(a), slow.read_current_flow(a)),
                }
            }
            prop_assert_eq!(fast.flows(), slow.flows());
        }
    }
}
