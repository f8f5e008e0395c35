//! Layered flow certificates maintained under edge deletions.
//!
//! Layer `i` holds an acyclic flow `f_i` on `Ĝ[V ∖ (S_0 ∪ S_1 ∪ … ∪ S_{i−1})]`
//! that routes `(10ik+i+1)·d(v)·σ` out of every `v ∈ Ŝ_i` into sinks of
//! capacity `(10k−1)·d·σ`. Deleting an edge removes its flow one unit at a
//! time by walking back along a dynamic forest over the flow support. A source
//! that loses more than `(i+1)·d·σ` units is moved to the pruned set `S_0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certificate::{verify_certificate, CertReport, FlowCertificate};
use crate::dyngraph::{DecGraph, EdgeId, VertexId, VertexSet};
use crate::linkcut::{ArcId, DynForest, ForestError};
use crate::localflow::{dinitz_local_with, remove_cycles_with, DinitzOptions, FlowError, FlowState};
use crate::meter::{block_on, Meter};
use crate::params::Rational;
use crate::preset::{ExcessPolicy, Limits};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BatchCertError {
    #[error("layer {layer} still has {remaining} unpruned vertices from its previous set")]
    NotDrained { layer: usize, remaining: usize },
    #[error("layer {layer} left excess {excess} after reinitialization")]
    ReinitExcess { layer: usize, excess: u64 },
    #[error("one edge removal pruned {pruned} vertices, budget {budget}")]
    RecourseUnitExceeded { pruned: usize, budget: u64 },
    #[error("layer {0} out of range")]
    BadLayer(usize),
    #[error("supplied flow for layer {layer} does not meet its routing contract")]
    SwapContract { layer: usize },
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// One change to the certificate graph, in the order it happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphChange {
    Edge(EdgeId),
    Vertex(VertexId),
}

/// An acyclic flow with a dynamic forest over its support, from which single
/// units can be backtracked.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct Layer {
    pub(crate) graph: DecGraph,
    forest: DynForest,
    support: Vec<bool>,
    in_arcs: Vec<Vec<ArcId>>,
    in_cursor: Vec<usize>,
    pub(crate) q: Vec<u64>,
    /// scan position over (lower layer, index into that layer's in-arcs)
    lower: Vec<(usize, usize)>,
    /// sink capacity at each vertex
    pub(crate) sink: Vec<u64>,
}

pub(crate) fn arc_of(e: EdgeId, forward: bool) -> ArcId {
    2 * e + usize::from(!forward)
}

impl Layer {
    pub(crate) fn empty(g: &DecGraph) -> Self {
        Layer::from_flow(g.clone(), &vec![0; g.m()], vec![0; g.n()])
    }

    pub(crate) fn from_flow(graph: DecGraph, flow: &[i64], sink: Vec<u64>) -> Self {
        let m = graph.m();
        let n = graph.n();
        let mut arcs = Vec::with_capacity(2 * m);
        let mut vals = Vec::with_capacity(2 * m);
        for e in 0..m {
            let (a, b) = graph.endpoints(e);
            arcs.push((a, b));
            arcs.push((b, a));
            let live = graph.is_edge_alive(e);
            vals.push(if live { flow[e].max(0) } else { 0 });
            vals.push(if live { (-flow[e]).max(0) } else { 0 });
        }
        let support: Vec<bool> = vals.iter().map(|&x| x > 0).collect();
        let mut in_arcs = vec![Vec::new(); n];
        for (a, &on) in support.iter().enumerate() {
            if on {
                in_arcs[arcs[a].1].push(a);
            }
        }
        Layer {
            graph,
            forest: DynForest::new(n, arcs, vals),
            support,
            in_arcs,
            in_cursor: vec![0; n],
            q: vec![0; n],
            lower: vec![(1, 0); n],
            sink,
        }
    }

    /// Signed net flow per edge.
    pub(crate) fn signed_flow(&mut self) -> Vec<i64> {
        let vals = self.forest.flows();
        (0..self.graph.m()).map(|e| vals[2 * e] - vals[2 * e + 1]).collect()
    }

    /// Take one unit off `e` and off the tree path above its tail. Returns
    /// the root the unit is now missing at, with the forest operations
    /// spent, or `None` if `e` carries no flow.
    pub(crate) fn take_unit(&mut self, e: EdgeId) -> Result<Option<(VertexId, u64)>, ForestError> {
        let a = if self.support[arc_of(e, true)] {
            arc_of(e, true)
        } else if self.support[arc_of(e, false)] {
            arc_of(e, false)
        } else {
            return Ok(None);
        };
        let u = self.forest.arc(a).0;
        if self.forest.in_forest(a) {
            self.forest.delete(a)?;
        }
        let val = self.forest.read_current_flow(a);
        if val <= 0 {
            self.support[a] = false;
            return Ok(None);
        }
        self.forest.set_flow(a, val - 1)?;
        if val == 1 {
            self.support[a] = false;
        }
        let mut ops = 3;
        if self.forest.parent_arc(u).is_some() {
            let m = self.forest.find_min(u)?;
            if self.forest.read_current_flow(m) == 0 {
                self.drop_arc(m)?;
            }
            self.forest.update_flow(u, -1)?;
            ops += 3;
        }
        Ok(Some((self.forest.find_root(u), ops + 1)))
    }

    /// Link `r` to its next remaining in-arc of the support, if any.
    pub(crate) fn advance(&mut self, r: VertexId) -> Result<bool, ForestError> {
        while self.in_cursor[r] < self.in_arcs[r].len() && !self.support[self.in_arcs[r][self.in_cursor[r]]] {
            self.in_cursor[r] += 1;
        }
        if self.in_cursor[r] < self.in_arcs[r].len() {
            self.forest.insert(self.in_arcs[r][self.in_cursor[r]])?;
            return Ok(true);
        }
        Ok(false)
    }

    /// Drop both arcs of a dead edge from the support.
    pub(crate) fn forget_edge(&mut self, e: EdgeId) -> Result<(), ForestError> {
        for a in [arc_of(e, true), arc_of(e, false)] {
            if self.support[a] {
                self.drop_arc(a)?;
            }
        }
        Ok(())
    }

    fn drop_arc(&mut self, a: ArcId) -> Result<(), ForestError> {
        if self.forest.in_forest(a) {
            self.forest.delete(a)?;
        }
        self.support[a] = false;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertStats {
    /// vertices moved to S_0 because a rebuilt layer could not route them
    pub forced_prunes: u64,
    pub max_delta: usize,
    pub edge_removals: u64,
    /// supplied layer flows that failed their contract and were recomputed
    pub contract_fallbacks: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchCertState {
    limits: Limits,
    ghat: DecGraph,
    s0: VertexSet,
    sets: Vec<VertexSet>,
    hat: Vec<VertexSet>,
    layer_of: Vec<usize>,
    layers: Vec<Layer>,
    changes: Vec<GraphChange>,
    stats: CertStats,
    #[serde(skip)]
    meter: Meter,
    forest_cost: u64,
}

impl BatchCertState {
    pub fn new(g: &DecGraph, limits: Limits) -> Self {
        let k = limits.params.k;
        BatchCertState {
            limits,
            ghat: g.clone(),
            s0: VertexSet::new(),
            sets: vec![VertexSet::new(); k + 1],
            hat: vec![VertexSet::new(); k + 1],
            layer_of: vec![0; g.n()],
            layers: (0..=k).map(|_| Layer::empty(g)).collect(),
            changes: Vec::new(),
            stats: CertStats::default(),
            meter: Meter::unlimited(),
            forest_cost: limits.params.log_n,
        }
    }

    /// Charge all work to `meter` from now on.
    pub fn set_meter(&mut self, meter: Meter) {
        self.meter = meter;
    }

    pub fn k(&self) -> usize {
        self.limits.params.k
    }

    pub fn graph(&self) -> &DecGraph {
        &self.ghat
    }

    pub fn pruned(&self) -> &VertexSet {
        &self.s0
    }

    pub fn layer_set(&self, i: usize) -> &VertexSet {
        &self.sets[i]
    }

    pub fn live_sources(&self, i: usize) -> &VertexSet {
        &self.hat[i]
    }

    pub fn stats(&self) -> &CertStats {
        &self.stats
    }

    pub fn changes(&self) -> &[GraphChange] {
        &self.changes
    }

    pub fn q(&self, i: usize, v: VertexId) -> u64 {
        self.layers[i].q[v]
    }

    pub fn layer_graph(&self, i: usize) -> &DecGraph {
        &self.layers[i].graph
    }

    fn source_rate(&self, i: usize) -> u64 {
        let k = self.k() as u64;
        10 * i as u64 * k + i as u64 + 1
    }

    fn charge_forest(&self, ops: u64) {
        self.meter.add(ops * self.forest_cost);
    }

    /// Graph of layer `i` given the current S_0 and sets S_1..S_{i−1}.
    fn layer_base(&self, i: usize) -> DecGraph {
        let mut g = self.ghat.clone();
        for j in 1..i {
            g.remove_vertices(&self.sets[j]);
        }
        self.meter.add((g.n() + g.m()) as u64);
        g
    }

    fn layer_demands(&self, i: usize, g: &DecGraph) -> FlowState {
        let p = &self.limits.params;
        let mut st = FlowState::new(g, self.limits.cert_cap(), p.sigma);
        let rate = self.source_rate(i);
        let sink_rate = 10 * p.k as u64 - 1;
        for v in g.alive_vertices() {
            if self.hat[i].contains(&v) {
                st.s[v] = rate * g.d(v) * p.sigma;
            } else if !self.sets[i].contains(&v) {
                st.t[v] = sink_rate * g.d(v) * p.sigma;
            }
        }
        st
    }

    /// Replace layers `l..=k` by fresh flows for the sets `new_sets[0..]`
    /// (`new_sets[j]` becomes S_{l+j}). Returns vertices pruned while doing so.
    pub fn reinitialize(&mut self, l: usize, new_sets: &[VertexSet]) -> Result<Vec<VertexId>, BatchCertError> {
        let none = vec![None; new_sets.len()];
        self.reinitialize_with_flows(l, new_sets, none)
    }

    /// As [`reinitialize`](Self::reinitialize), but layers with a supplied
    /// signed flow take it instead of computing one. A supplied flow must meet
    /// the layer's routing contract on the current graph; under the lenient
    /// excess policy a failing one is replaced by a computed flow.
    pub fn reinitialize_with_flows(
        &mut self,
        l: usize,
        new_sets: &[VertexSet],
        flows: Vec<Option<Vec<i64>>>,
    ) -> Result<Vec<VertexId>, BatchCertError> {
        let k = self.k();
        if l == 0 || l > k || new_sets.len() != k - l + 1 {
            return Err(BatchCertError::BadLayer(l));
        }
        for i in l..=k {
            if !self.hat[i].is_empty() {
                return Err(BatchCertError::NotDrained {
                    layer: i,
                    remaining: self.hat[i].len(),
                });
            }
        }
        for (j, set) in new_sets.iter().enumerate() {
            let i = l + j;
            self.sets[i] = set.clone();
            self.hat[i] = set.difference(&self.s0).copied().collect();
            for &v in &self.hat[i] {
                self.layer_of[v] = i;
            }
            self.layers[i] = Layer::empty(&self.ghat);
        }
        let mut pruned = Vec::new();
        for (j, supplied) in flows.into_iter().enumerate() {
            let i = l + j;
            let mut supplied = supplied;
            loop {
                let g = self.layer_base(i);
                let mut st = self.layer_demands(i, &g);
                let mut computed = true;
                if let Some(flow) = supplied.take() {
                    let fits = flow.len() == g.m() && (0..g.m()).all(|e| g.is_edge_alive(e) || flow[e] == 0);
                    if fits {
                        for e in g.live_edges() {
                            st.set_flow(&g, e, flow[e]);
                        }
                        self.meter.add(g.m() as u64);
                    }
                    if fits && st.check_capacities(&g).is_ok() && g.alive_vertices().all(|v| st.excess(v) == 0) {
                        computed = false;
                    } else if self.limits.consts.excess_policy == ExcessPolicy::Fail {
                        return Err(BatchCertError::SwapContract { layer: i });
                    } else {
                        self.stats.contract_fallbacks += 1;
                        st = self.layer_demands(i, &g);
                    }
                }
                if computed {
                    let opts = DinitzOptions { check_balance: false };
                    block_on(dinitz_local_with(
                        &g,
                        &mut st,
                        self.limits.cert_rounds(),
                        opts,
                        &self.meter,
                    ))?;
                }
                let stuck: Vec<VertexId> = self.hat[i].iter().copied().filter(|&v| st.excess(v) > 0).collect();
                if stuck.is_empty() {
                    block_on(remove_cycles_with(&g, &mut st, &self.meter));
                    let sink = st.t.clone();
                    self.layers[i] = Layer::from_flow(g, st.flows(), sink);
                    break;
                }
                match self.limits.consts.excess_policy {
                    ExcessPolicy::Fail => {
                        let excess = stuck.iter().map(|&v| st.excess(v)).sum();
                        return Err(BatchCertError::ReinitExcess { layer: i, excess });
                    }
                    ExcessPolicy::Prune => {
                        for v in stuck {
                            pruned.extend(self.force_prune(v)?);
                        }
                    }
                }
            }
        }
        Ok(pruned)
    }

    /// Remove every edge at `v` through the regular removal path, then move
    /// the isolated `v` into S_0.
    pub fn force_prune(&mut self, v: VertexId) -> Result<Vec<VertexId>, BatchCertError> {
        let mut out = Vec::new();
        let edges: Vec<EdgeId> = self.ghat.incident(v).collect();
        for e in edges {
            out.extend(self.remove_edge_inner(e)?);
        }
        if !self.s0.contains(&v) {
            self.prune_vertex(v, &mut out)?;
            self.stats.forced_prunes += 1;
        }
        Ok(out)
    }

    fn prune_vertex(&mut self, r: VertexId, out: &mut Vec<VertexId>) -> Result<(), BatchCertError> {
        for i in 1..=self.k() {
            let layer = &mut self.layers[i];
            if !layer.graph.is_vertex_alive(r) {
                continue;
            }
            let inc: Vec<EdgeId> = layer.graph.incident(r).collect();
            for e in inc {
                for a in [arc_of(e, true), arc_of(e, false)] {
                    if layer.support[a] {
                        layer.drop_arc(a)?;
                        layer.forest.set_flow(a, 0)?;
                    }
                }
            }
            layer.graph.remove_vertices(&[r]);
        }
        self.charge_forest(self.ghat.d(r));
        for e in self.ghat.remove_vertices(&[r]) {
            self.changes.push(GraphChange::Edge(e));
        }
        let li = self.layer_of[r];
        if li != 0 {
            self.hat[li].remove(&r);
            self.layer_of[r] = 0;
        }
        self.s0.insert(r);
        self.changes.push(GraphChange::Vertex(r));
        out.push(r);
        Ok(())
    }

    /// Delete `e`, first removing all of its flow from every layer. Returns the
    /// vertices this pruned.
    pub fn remove_edge(&mut self, e: EdgeId) -> Result<Vec<VertexId>, BatchCertError> {
        let out = self.remove_edge_inner(e)?;
        let budget = self.limits.recourse_unit();
        self.stats.max_delta = self.stats.max_delta.max(out.len());
        if out.len() as u64 > budget {
            return Err(BatchCertError::RecourseUnitExceeded {
                pruned: out.len(),
                budget,
            });
        }
        Ok(out)
    }

    fn remove_edge_inner(&mut self, e: EdgeId) -> Result<Vec<VertexId>, BatchCertError> {
        let mut out = Vec::new();
        if !self.ghat.is_edge_alive(e) {
            return Ok(out);
        }
        self.stats.edge_removals += 1;
        let rounds = self.limits.removal_rounds();
        for i in 1..=self.k() {
            for _ in 0..rounds {
                if !self.layers[i].graph.is_edge_alive(e) || !self.remove_flow(e, i, &mut out)? {
                    break;
                }
            }
        }
        if self.ghat.is_edge_alive(e) {
            for i in 1..=self.k() {
                let layer = &mut self.layers[i];
                if layer.graph.is_edge_alive(e) {
                    layer.forget_edge(e)?;
                    layer.graph.delete_edge(e).expect("checked alive");
                }
            }
            self.ghat.delete_edge(e).expect("checked alive");
            self.changes.push(GraphChange::Edge(e));
        }
        self.meter.add(1);
        Ok(out)
    }

    /// Remove one unit of the flow on `e` from layer `i`. Returns false if
    /// `e` carries no flow there.
    pub fn remove_flow(&mut self, e: EdgeId, i: usize, out: &mut Vec<VertexId>) -> Result<bool, BatchCertError> {
        let Some((r, ops)) = self.layers[i].take_unit(e)? else {
            return Ok(false);
        };
        self.charge_forest(ops);
        self.settle_root(r, i, out)?;
        Ok(true)
    }

    /// Account for one unit of out-flow lost at tree root `r` in layer `i`.
    fn settle_root(&mut self, r: VertexId, i: usize, out: &mut Vec<VertexId>) -> Result<(), BatchCertError> {
        let is_source = self.layer_of[r] == i;
        let layer = &mut self.layers[i];
        self.meter.add(1);
        if layer.advance(r)? {
            if is_source {
                layer.q[r] += 1;
            }
            self.charge_forest(1);
            return Ok(());
        }
        if !is_source {
            return Ok(());
        }
        // walk lower-layer in-flows of r in ascending (layer, edge) order
        let (mut j, mut idx) = self.layers[i].lower[r];
        let mut recurse = None;
        while j < i {
            let lower = &mut self.layers[j];
            if idx < lower.in_arcs[r].len() {
                let b = lower.in_arcs[r][idx];
                self.meter.add(1);
                if !lower.support[b] {
                    idx += 1;
                    continue;
                }
                if lower.forest.read_current_flow(b) == 0 {
                    lower.drop_arc(b)?;
                    idx += 1;
                    self.layers[i].lower[r] = (j, idx);
                    self.layers[i].q[r] += 1;
                    return self.check_prune(r, i, out);
                }
                recurse = Some((b / 2, j));
                break;
            }
            j += 1;
            idx = 0;
        }
        self.layers[i].lower[r] = (j, idx);
        match recurse {
            Some((edge, lj)) => {
                self.remove_flow(edge, lj, out)?;
                Ok(())
            }
            None => {
                self.layers[i].q[r] += 1;
                self.check_prune(r, i, out)
            }
        }
    }

    fn check_prune(&mut self, r: VertexId, i: usize, out: &mut Vec<VertexId>) -> Result<(), BatchCertError> {
        let limit = (i as u64 + 1) * self.ghat.d(r) * self.limits.params.sigma;
        if self.layers[i].q[r] > limit && self.layer_of[r] == i {
            self.prune_vertex(r, out)?;
        }
        Ok(())
    }

    /// Current flow of layer `i` as a signed per-edge vector.
    pub fn layer_flow(&mut self, i: usize) -> Vec<i64> {
        self.layers[i].signed_flow()
    }

    /// Absorbed flow at `v` in layer `i` minus its sink capacity there; at
    /// most `d(v)·σ` between reinitializations for non-sources.
    pub fn absorption_overshoot(&mut self, i: usize, v: VertexId) -> i64 {
        let flow = self.layers[i].signed_flow();
        let g = &self.layers[i].graph;
        let net: i64 = g
            .incident(v)
            .map(|e| if g.endpoints(e).0 == v { flow[e] } else { -flow[e] })
            .sum();
        -net - self.layers[i].sink[v] as i64
    }

    /// The composed certificate (⋃Ŝ_i, Σf_i) with parameters
    /// (10k, 10k², k·cap/σ).
    pub fn certificate(&mut self) -> FlowCertificate {
        let k = self.k();
        let m = self.ghat.m();
        let mut flow = vec![0i64; m];
        let mut sources = VertexSet::new();
        for i in 1..=k {
            let f = self.layers[i].signed_flow();
            for e in 0..m {
                if self.ghat.is_edge_alive(e) {
                    flow[e] += f[e];
                }
            }
            sources.extend(self.hat[i].iter().copied());
        }
        let p = &self.limits.params;
        let kk = k as u64;
        FlowCertificate {
            sources,
            flow,
            gamma_source: Rational::from_integer(10 * kk),
            gamma_sink: Rational::from_integer(10 * kk * kk),
            c: Rational::new(kk * self.limits.cert_cap(), p.sigma),
            scale: p.sigma,
        }
    }

    pub fn verify(&mut self) -> CertReport {
        let cert = self.certificate();
        verify_certificate(&self.ghat, &cert)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::exact_max_flow;
    use crate::params::Params;
    use crate::preset::Constants;

    fn complete(n: usize) -> DecGraph {
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                e.push((u, v));
            }
        }
        DecGraph::new(n, &e).unwrap()
    }

    fn state(g: &DecGraph, phi: Rational, consts: Constants) -> BatchCertState {
        let p = Params::new(g.n(), g.m(), phi).unwrap();
        BatchCertState::new(g, Limits::new(p, consts))
    }

    #[test]
    fn fresh_state_is_empty_and_valid() {
        let g = complete(6);
        let mut st = state(&g, Rational::new(1, 2), Constants::desk());
        assert!(st.pruned().is_empty());
        assert!(st.verify().ok);
        assert_eq!(st.graph().d_all(), g.d_all());
    }

    #[test]
    fn empty_reinit_is_valid() {
        let g = complete(6);
        let mut st = state(&g, Rational::new(1, 2), Constants::desk());
        let k = st.k();
        st.reinitialize(1, &vec![VertexSet::new(); k]).unwrap();
        assert!(st.verify().ok);
    }

    #[test]
    fn single_source_on_k16_routes_exactly() {
        let g = complete(16);
        let mut st = state(&g, Rational::new(1, 2), Constants::paper());
        let k = st.k();
        st.reinitialize(k, &[[3].into()]).unwrap();
        let f = st.layer_flow(k);
        let out: i64 = g
            .incident(3)
            .map(|e| if g.endpoints(e).0 == 3 { f[e] } else { -f[e] })
            .sum();
        let kk = k as u64;
        let sigma = st.limits.params.sigma;
        let want = (10 * kk * kk + kk + 1) * 15 * sigma;
        assert_eq!(out as u64, want);
        // the same demand as a max-flow instance
        let cap = st.limits.cert_cap();
        let arcs: Vec<_> = g.edges().iter().map(|&(a, b)| (a, b, cap)).collect();
        let mut s = vec![0; 16];
        s[3] = want;
        let t: Vec<u64> = (0..16)
            .map(|v| if v == 3 { 0 } else { (10 * kk - 1) * 15 * sigma })
            .collect();
        assert_eq!(exact_max_flow(16, &arcs, &s, &t).value, want);
        assert!(st.verify().ok);
    }

    #[test]
    fn undrained_layer_is_rejected() {
        let g = complete(16);
        let mut st = state(&g, Rational::new(1, 2), Constants::paper());
        let k = st.k();
        st.reinitialize(k, &[[3].into()]).unwrap();
        assert!(matches!(
            st.reinitialize(k, &[VertexSet::new()]),
            Err(BatchCertError::NotDrained { .. })
        ));
    }

    #[test]
    fn flowless_edge_removal_prunes_nothing() {
        let g = complete(6);
        let mut st = state(&g, Rational::new(1, 2), Constants::desk());
        assert!(st.remove_edge(0).unwrap().is_empty());
        assert!(!st.graph().is_edge_alive(0));
    }

    #[test]
    fn source_on_a_path_is_pruned_after_losing_its_flow() {
        // path 0-1-2-3-4 with source 0 in the top layer; cutting edge (0,1)
        // removes all its out-flow; with no in-edges and no lower layers the
        // counter climbs one per unit and crosses (k+1)·d·σ.
        let g = DecGraph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 2), (1, 3), (2, 4)]).unwrap();
        let mut st = state(&g, Rational::new(1, 1), Constants::desk());
        let k = st.k();
        st.reinitialize(k, &[[0].into()]).unwrap();
        let sigma = st.limits.params.sigma;
        let routed: i64 = st.layer_flow(k)[0] + st.layer_flow(k)[4];
        let limit = (k as u64 + 1) * 2 * sigma;
        assert!(routed as u64 > limit);
        let mut pruned = st.remove_edge(0).unwrap();
        pruned.extend(st.remove_edge(4).unwrap());
        assert_eq!(pruned, vec![0]);
        assert!(st.pruned().contains(&0));
        assert!(st.verify().ok);
    }

    #[test]
    fn two_layer_recursion_takes_lower_flow_first() {
        // layer k−1 source 0 pushes into vertex 1; layer k source 1 then
        // loses out-flow with no layer-k in-edges, so the lower in-flow it
        // receives from 0 is backtracked before its counter moves.
        let edges = [(0, 1), (1, 2), (1, 3), (2, 3), (3, 4), (4, 5), (2, 5), (0, 5)];
        let g = DecGraph::new(6, &edges).unwrap();
        let mut st = state(&g, Rational::new(1, 1), Constants::desk());
        let k = st.k();
        st.reinitialize(k - 1, &[[0].into(), [1].into()]).unwrap();
        let lower_before = st.layer_flow(k - 1)[0];
        assert!(lower_before > 0, "layer k−1 sends flow over (0,1)");
        let top = st.layer_flow(k);
        let top_out = top[1] + top[2];
        assert!(top_out > 0);
        // remove a top-layer edge out of 1 once
        let e = if top[1] > 0 { 1 } else { 2 };
        let mut out = Vec::new();
        assert!(st.remove_flow(e, k, &mut out).unwrap());
        assert_eq!(st.layer_flow(k - 1)[0], lower_before - 1);
        assert_eq!(st.q(k, 1), 0);
        assert!(st.verify().ok);
    }

    #[test]
    fn saturated_edge_is_cleared() {
        let g = complete(8);
        let mut st = state(&g, Rational::new(1, 2), Constants::desk());
        let k = st.k();
        st.reinitialize(k, &[[0].into()]).unwrap();
        let before = st.layer_flow(k)[0];
        assert!(before > 0);
        st.remove_edge(0).unwrap();
        assert_eq!(st.layer_flow(k)[0], 0);
        assert!(!st.graph().is_edge_alive(0));
        assert!(st.verify().ok);
    }

    #[test]
    fn forced_prune_policy_handles_unroutable_sets() {
        let g = complete(6);
        let all: VertexSet = (0..6).collect();
        let mut strict = state(
            &g,
            Rational::new(1, 2),
            Constants {
                excess_policy: ExcessPolicy::Fail,
                ..Constants::desk()
            },
        );
        let k = strict.k();
        assert!(matches!(
            strict.reinitialize(k, &[all.clone()]),
            Err(BatchCertError::ReinitExcess { .. })
        ));
        let mut lenient = state(&g, Rational::new(1, 2), Constants::desk());
        let pruned = lenient.reinitialize(k, &[all]).unwrap();
        assert_eq!(pruned.len(), 6);
        assert!(lenient.verify().ok);
    }
}
