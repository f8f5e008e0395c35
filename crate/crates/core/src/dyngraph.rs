//! Decremental multigraph with frozen initial degrees.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type VertexId = usize;
pub type EdgeId = usize;
pub type VertexSet = BTreeSet<VertexId>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(VertexId),
    #[error("edge ({0}, {1}) has an endpoint outside 0..{2}")]
    EndpointOutOfRange(VertexId, VertexId, usize),
    #[error("edge {0} is already dead")]
    DeadEdge(EdgeId),
    #[error("edge id {0} out of range")]
    UnknownEdge(EdgeId),
    #[error("vertex {0} is not alive")]
    DeadVertex(VertexId),
}

/// Undirected multigraph supporting edge deletion and vertex removal.
///
/// Edge ids stay stable for the lifetime of the graph. `d(v)` is the degree
/// at construction and never changes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecGraph {
    ends: Vec<(VertexId, VertexId)>,
    edge_alive: Vec<bool>,
    vertex_alive: Vec<bool>,
    adj: Vec<Vec<EdgeId>>,
    d: Vec<u64>,
    cur_deg: Vec<u64>,
    live_edges: usize,
    live_vertices: usize,
}

impl DecGraph {
    pub fn new(n: usize, edges: &[(VertexId, VertexId)]) -> Result<Self, GraphError> {
        let mut adj = vec![Vec::new(); n];
        let mut d = vec![0u64; n];
        for (id, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(GraphError::EndpointOutOfRange(u, v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adj[u].push(id);
            adj[v].push(id);
            d[u] += 1;
            d[v] += 1;
        }
        Ok(DecGraph {
            ends: edges.to_vec(),
            edge_alive: vec![true; edges.len()],
            vertex_alive: vec![true; n],
            adj,
            cur_deg: d.clone(),
            d,
            live_edges: edges.len(),
            live_vertices: n,
        })
    }

    pub fn n(&self) -> usize {
        self.vertex_alive.len()
    }

    /// Number of edges ever present, alive or not.
    pub fn m(&self) -> usize {
        self.ends.len()
    }

    pub fn live_edge_count(&self) -> usize {
        self.live_edges
    }

    pub fn live_vertex_count(&self) -> usize {
        self.live_vertices
    }

    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.ends[e]
    }

    pub fn other(&self, e: EdgeId, v: VertexId) -> VertexId {
        let (a, b) = self.ends[e];
        if a == v {
            b
        } else {
            a
        }
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.ends
    }

    pub fn is_edge_alive(&self, e: EdgeId) -> bool {
        self.edge_alive[e]
    }

    pub fn is_vertex_alive(&self, v: VertexId) -> bool {
        self.vertex_alive[v]
    }

    pub fn vertex_alive_mask(&self) -> &[bool] {
        &self.vertex_alive
    }

    pub fn d(&self, v: VertexId) -> u64 {
        self.d[v]
    }

    pub fn d_all(&self) -> &[u64] {
        &self.d
    }

    pub fn cur_deg(&self, v: VertexId) -> u64 {
        self.cur_deg[v]
    }

    /// All edge ids ever incident to `v`, including dead ones.
    pub fn incident_all(&self, v: VertexId) -> &[EdgeId] {
        &self.adj[v]
    }

    pub fn incident(&self, v: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        self.adj[v].iter().copied().filter(|&e| self.edge_alive[e])
    }

    pub fn alive_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.n()).filter(|&v| self.vertex_alive[v])
    }

    pub fn live_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.m()).filter(|&e| self.edge_alive[e])
    }

    pub fn delete_edge(&mut self, e: EdgeId) -> Result<(), GraphError> {
        if e >= self.m() {
            return Err(GraphError::UnknownEdge(e));
        }
        if !self.edge_alive[e] {
            return Err(GraphError::DeadEdge(e));
        }
        self.kill_edge(e);
        Ok(())
    }

    fn kill_edge(&mut self, e: EdgeId) {
        let (u, v) = self.ends[e];
        self.edge_alive[e] = false;
        self.cur_deg[u] -= 1;
        self.cur_deg[v] -= 1;
        self.live_edges -= 1;
    }

    /// Kill every vertex in `set` and its live incident edges. Returns the
    /// edges that died, ascending. Vertices already dead are ignored.
    pub fn remove_vertices<'a>(&mut self, set: impl IntoIterator<Item = &'a VertexId>) -> Vec<EdgeId> {
        let mut killed = Vec::new();
        for &v in set {
            if !self.vertex_alive[v] {
                continue;
            }
            for i in 0..self.adj[v].len() {
                let e = self.adj[v][i];
                if self.edge_alive[e] {
                    self.kill_edge(e);
                    killed.push(e);
                }
            }
            self.vertex_alive[v] = false;
            self.live_vertices -= 1;
        }
        killed.sort_unstable();
        killed
    }

    pub fn volume_d<'a>(&self, set: impl IntoIterator<Item = &'a VertexId>) -> u64 {
        set.into_iter().map(|&v| self.d[v]).sum()
    }

    /// Live edges with exactly one endpoint in `set`, ascending.
    pub fn boundary(&self, set: &VertexSet) -> Vec<EdgeId> {
        let mut out: Vec<EdgeId> = set
            .iter()
            .flat_map(|&v| self.incident(v))
            .filter(|&e| {
                let (a, b) = self.ends[e];
                set.contains(&a) != set.contains(&b)
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn cut_count(&self, set: &VertexSet) -> usize {
        self.boundary(set).len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn complete(n: usize) -> DecGraph {
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                e.push((u, v));
            }
        }
        DecGraph::new(n, &e).unwrap()
    }

    #[test]
    fn degrees() {
        assert_eq!(DecGraph::new(2, &[(0, 1)]).unwrap().d_all(), &[1, 1]);
        assert_eq!(complete(4).d_all(), &[3, 3, 3, 3]);
        assert_eq!(DecGraph::new(2, &[(0, 1), (0, 1)]).unwrap().d_all(), &[2, 2]);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(DecGraph::new(2, &[(1, 1)]).unwrap_err(), GraphError::SelfLoop(1));
        assert!(matches!(
            DecGraph::new(2, &[(0, 2)]).unwrap_err(),
            GraphError::EndpointOutOfRange(..)
        ));
    }

    #[test]
    fn deletion() {
        let mut g = complete(4);
        g.delete_edge(0).unwrap();
        let cur: Vec<u64> = (0..4).map(|v| g.cur_deg(v)).collect();
        assert_eq!(cur, vec![2, 2, 3, 3]);
        assert_eq!(g.delete_edge(0), Err(GraphError::DeadEdge(0)));

        let mut p = DecGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        p.delete_edge(0).unwrap();
        p.delete_edge(1).unwrap();
        assert!((0..3).all(|v| p.cur_deg(v) == 0));
    }

    #[test]
    fn vertex_removal() {
        let mut g = complete(4);
        g.remove_vertices(&[3]);
        assert_eq!(g.live_edge_count(), 3);
        assert!((0..3).all(|v| g.cur_deg(v) == 2));
        let before = g.live_edge_count();
        g.remove_vertices(&[]);
        assert_eq!(g.live_edge_count(), before);

        let mut star = DecGraph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        star.remove_vertices(&[0]);
        assert_eq!(star.live_edge_count(), 0);
    }

    #[test]
    fn volumes_and_cuts() {
        let g = complete(4);
        let s: VertexSet = [0, 1].into();
        assert_eq!(g.volume_d(&s), 6);
        assert_eq!(g.cut_count(&s), 4);
        let all: VertexSet = (0..4).collect();
        assert!(g.boundary(&all).is_empty());
        let c4 = DecGraph::new(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(c4.cut_count(&[0, 1].into()), 2);
    }

    proptest! {
        #[test]
        fn degree_invariants(
            n in 2usize..10,
            raw in proptest::collection::vec((0usize..10, 0usize..10), 1..30),
            ops in proptest::collection::vec((any::<bool>(), 0usize..40), 0..30),
        ) {
            let edges: Vec<_> = raw.into_iter().map(|(a, b)| (a % n, b % n)).filter(|(a, b)| a != b).collect();
            let mut g = DecGraph::new(n, &edges).unwrap();
            let mut removed = VertexSet::new();
            for (kill_vertex, x) in ops {
                if kill_vertex {
                    let v = x % n;
                    g.remove_vertices(&[v]);
                    removed.insert(v);
                } else if !edges.is_empty() {
                    let _ = g.delete_edge(x % edges.len());
                }
                let sum: u64 = (0..n).map(|v| g.cur_deg(v)).sum();
                prop_assert_eq!(sum, 2 * g.live_edge_count() as u64);
                for v in 0..n {
                    prop_assert!(g.cur_deg(v) <= g.d(v));
                }
                for e in g.live_edges() {
                    let (a, b) = g.endpoints(e);
                    prop_assert!(!removed.contains(&a) && !removed.contains(&b));
                }
            }
            let s: VertexSet = (0..n).filter(|v| v % 2 == 0).collect();
            let rest: VertexSet = (0..n).filter(|v| v % 2 == 1).collect();
            prop_assert_eq!(g.boundary(&s), g.boundary(&rest));
        }
    }
}
