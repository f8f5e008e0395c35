//! Level-by-level batch pruning.
//!
//! Level `i` removes batch `B_i` and vertex set `A_i` from the graph left by
//! level `i−1`, puts `⌈8σ/φ⌉` source on surviving endpoints of every removed
//! edge, raises every sink by `d(v)`, and extends the flow with local Dinitz.
//! If too much excess remains it cuts out a residual BFS ball around the
//! excess and removes it as the level's proposal set `S_i`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batching::BatchState;
use crate::certificate::{verify_exp_cert, ExpCertReport};
use crate::dyngraph::{DecGraph, EdgeId, VertexId, VertexSet};
use crate::localflow::{dinitz_local_with, DinitzOptions, FlowError, FlowState};
use crate::meter::{block_on, Meter};
use crate::preset::Limits;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PruneError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("level {0} has no computed predecessor state")]
    MissingLevel(usize),
    #[error("level {level}: sparse-cut ball reached radius {radius} = h")]
    WhileLoopBound { level: usize, radius: usize },
    #[error("level {level}: excess {excess} exceeds 2^(k-i)·σ/φ")]
    ExcessBound { level: usize, excess: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelState {
    pub graph: DecGraph,
    pub flow: FlowState,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub excess_after_flow: u64,
    pub excess_after_level: u64,
    pub proposal: VertexSet,
    /// radius of the BFS ball if the sparse-cut branch ran
    pub cut_radius: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchPruner {
    limits: Limits,
    base: DecGraph,
    levels: Vec<Option<LevelState>>,
    reports: Vec<LevelReport>,
    /// edges and vertices handed to each level on its last run
    inputs: Vec<(Vec<EdgeId>, VertexSet)>,
    strict: bool,
}

impl BatchPruner {
    pub fn new(g: &DecGraph, limits: Limits) -> Self {
        let lambda = limits.params.lambda;
        assert_eq!(g.live_edge_count(), g.m(), "batch pruning starts from the full graph");
        let base = g.clone();
        let flow = FlowState::new(&base, limits.params.scaled_over_phi(8), limits.params.sigma);
        let mut levels = vec![None; lambda + 1];
        levels[0] = Some(LevelState {
            graph: base.clone(),
            flow,
        });
        let mut bp = BatchPruner {
            limits,
            base,
            levels,
            reports: vec![LevelReport::default(); lambda + 1],
            inputs: vec![(Vec::new(), VertexSet::new()); lambda + 1],
            strict: true,
        };
        for i in 1..=lambda {
            bp.run_level(i, &[], &VertexSet::new())
                .expect("empty levels cannot fail");
        }
        bp
    }

    /// Disable the per-level excess assertion (used to study failures).
    pub fn set_strict(&mut self, strict: bool) {
        self.strict = strict;
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    pub fn lambda(&self) -> usize {
        self.limits.params.lambda
    }

    pub fn base(&self) -> &DecGraph {
        &self.base
    }

    pub fn level(&self, i: usize) -> Option<&LevelState> {
        self.levels[i].as_ref()
    }

    pub fn report(&self, i: usize) -> &LevelReport {
        &self.reports[i]
    }

    pub fn proposal(&self, i: usize) -> &VertexSet {
        &self.reports[i].proposal
    }

    /// Deletion batch and removal set level `i` was last run with.
    pub fn input(&self, i: usize) -> (&[EdgeId], &VertexSet) {
        (&self.inputs[i].0, &self.inputs[i].1)
    }

    /// Surviving vertices after the last level.
    pub fn survivors(&self) -> Option<VertexSet> {
        self.levels[self.lambda()]
            .as_ref()
            .map(|l| l.graph.alive_vertices().collect())
    }

    /// Excess bound 2^{k−i}·σ/φ as a comparison: true iff `x` exceeds it.
    fn exceeds_bound(&self, i: usize, x: u64) -> bool {
        let p = &self.limits.params;
        let (k, s) = (p.k as u32, p.sigma as u128);
        let i = i as u32;
        let lhs = (u128::from(x) * u128::from(p.phi_p())) << i.saturating_sub(k);
        let rhs = (s * u128::from(p.phi_q())) << k.saturating_sub(i);
        lhs > rhs
    }

    pub fn run_level(&mut self, i: usize, b: &[EdgeId], a: &VertexSet) -> Result<VertexSet, PruneError> {
        block_on(self.run_level_with(i, b, a, &Meter::unlimited()))
    }

    pub async fn run_level_with(
        &mut self,
        i: usize,
        b: &[EdgeId],
        a: &VertexSet,
        meter: &Meter,
    ) -> Result<VertexSet, PruneError> {
        let mut st = self.levels[i - 1].clone().ok_or(PruneError::MissingLevel(i - 1))?;
        meter.add((st.graph.n() + st.graph.m()) as u64);
        for l in i..=self.lambda() {
            self.levels[l] = None;
        }
        let unit = self.limits.params.scaled_over_phi(8);
        let g = &mut st.graph;
        let f = &mut st.flow;

        let mut dying: BTreeSet<EdgeId> = b.iter().copied().filter(|&e| g.is_edge_alive(e)).collect();
        for &v in a {
            if g.is_vertex_alive(v) {
                dying.extend(g.incident(v));
            }
        }
        detach(g, f, &dying, a, unit);
        meter.add(dying.len() as u64);
        g.remove_vertices(a);

        let step = self.limits.params.sigma / self.limits.params.lambda as u64;
        let alive: Vec<VertexId> = g.alive_vertices().collect();
        for &v in &alive {
            f.t[v] += g.d(v) * step;
        }
        meter.add(g.n() as u64);

        let opts = DinitzOptions {
            check_balance: self.limits.consts.check_balance,
        };
        dinitz_local_with(g, f, self.limits.batch_rounds(), opts, meter).await?;
        let x = f.total_excess(g);
        let mut report = LevelReport {
            level: i,
            excess_after_flow: x,
            ..Default::default()
        };

        if self.exceeds_bound(i, x) {
            let (ball, radius) = self.sparse_cut(i, g, f, meter).await?;
            let boundary: BTreeSet<EdgeId> = g.boundary(&ball).into_iter().collect();
            detach(g, f, &boundary, &ball, unit);
            meter.add(boundary.len() as u64 + ball.len() as u64);
            g.remove_vertices(&ball);
            report.proposal = ball;
            report.cut_radius = Some(radius);
        }
        report.excess_after_level = f.total_excess(g);
        if self.strict && self.exceeds_bound(i, report.excess_after_level) {
            return Err(PruneError::ExcessBound {
                level: i,
                excess: report.excess_after_level,
            });
        }
        let proposal = report.proposal.clone();
        self.reports[i] = report;
        self.inputs[i] = (b.to_vec(), a.clone());
        self.levels[i] = Some(st);
        Ok(proposal)
    }

    /// Residual BFS ball around the excess support, grown while its residual
    /// boundary is large relative to its volume plus the excess.
    async fn sparse_cut(
        &self,
        level: usize,
        g: &DecGraph,
        f: &FlowState,
        meter: &Meter,
    ) -> Result<(VertexSet, usize), PruneError> {
        let p = &self.limits.params;
        let h = self.limits.batch_rounds();
        let x_total = u128::from(f.total_excess(g));
        let mut ball: VertexSet = g.alive_vertices().filter(|&v| f.excess(v) > 0).collect();
        let lhs_mul = u128::from(self.limits.consts.sparsity_denom)
            * p.lambda as u128
            * u128::from(p.log_n)
            * u128::from(p.phi_q())
            * u128::from(p.sigma);
        let mut vol = u128::from(g.volume_d(&ball));
        let mut radius = 0usize;
        loop {
            let mut cut = 0u128;
            let mut next = VertexSet::new();
            for &u in &ball {
                for e in g.incident(u) {
                    meter.add(1);
                    let w = g.other(e, u);
                    if !ball.contains(&w) && f.residual(g, e, u) > 0 {
                        cut += 1;
                        next.insert(w);
                    }
                }
            }
            meter.tick().await;
            let rhs = u128::from(p.phi_p()) * (u128::from(p.sigma) * vol + x_total);
            if cut * lhs_mul < rhs {
                return Ok((ball, radius));
            }
            vol += u128::from(g.volume_d(&next));
            ball.extend(next);
            radius += 1;
            if radius >= h {
                return Err(PruneError::WhileLoopBound { level, radius });
            }
        }
    }

    /// Rerun levels `i..=λ` with the batches and removal sets in `batches`,
    /// recording proposals back into it. Returns the surviving vertices.
    pub fn run_from(&mut self, i: usize, batches: &mut BatchState) -> Result<VertexSet, PruneError> {
        block_on(self.run_from_with(i, batches, &Meter::unlimited()))
    }

    pub async fn run_from_with(
        &mut self,
        i: usize,
        batches: &mut BatchState,
        meter: &Meter,
    ) -> Result<VertexSet, PruneError> {
        for j in i..=self.lambda() {
            let b = batches.b(j).to_vec();
            let a = batches.a(j).clone();
            let s = self.run_level_with(j, &b, &a, meter).await?;
            batches.set_proposal(j, s);
        }
        Ok(self.survivors().expect("last level computed"))
    }

    /// Check the expansion certificate of the final level: its flow routes the
    /// lost-edge source of every survivor into sinks `2·d·σ`.
    pub fn exp_cert_report(&self) -> Option<ExpCertReport> {
        let last = self.levels[self.lambda()].as_ref()?;
        let removed: VertexSet = (0..self.base.n()).filter(|&v| !last.graph.is_vertex_alive(v)).collect();
        let mut b: BTreeSet<EdgeId> = BTreeSet::new();
        for (edges, _) in &self.inputs[1..] {
            b.extend(edges.iter().copied());
        }
        let flow: Vec<i64> = (0..self.base.m())
            .map(|e| {
                if last.graph.is_edge_alive(e) {
                    last.flow.flow(e)
                } else {
                    0
                }
            })
            .collect();
        Some(verify_exp_cert(
            &self.base,
            &removed,
            &b,
            &flow,
            self.limits.params.phi,
            self.limits.params.sigma,
        ))
    }

    /// Every edge handed to any level as part of a deletion batch.
    pub fn deleted_edges(&self) -> BTreeSet<EdgeId> {
        self.inputs[1..].iter().flat_map(|(b, _)| b.iter().copied()).collect()
    }
}

/// Kill `edges`, crediting source and the stranded net flow to each endpoint
/// that survives (is alive and not in `leaving`).
fn detach(g: &mut DecGraph, f: &mut FlowState, edges: &BTreeSet<EdgeId>, leaving: &VertexSet, unit: u64) {
    for &e in edges {
        if !g.is_edge_alive(e) {
            continue;
        }
        let (x, y) = g.endpoints(e);
        for w in [x, y] {
            if g.is_vertex_alive(w) && !leaving.contains(&w) {
                f.s[w] += unit;
                f.delta[w] += f.flow_from(g, e, w);
            }
        }
        g.delete_edge(e).expect("edge checked alive");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{conductance_exact, VolumeMeasure};
    use crate::params::{Params, Rational};
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

    fn pruner(g: &DecGraph, phi: Rational) -> BatchPruner {
        let p = Params::new(g.n(), g.m(), phi).unwrap();
        BatchPruner::new(g, Limits::new(p, Constants::desk()))
    }

    #[test]
    fn empty_level_changes_nothing() {
        let g = complete(6);
        let mut bp = pruner(&g, Rational::new(1, 2));
        let s = bp.run_level(1, &[], &VertexSet::new()).unwrap();
        assert!(s.is_empty());
        assert_eq!(bp.level(1).unwrap().graph.live_edge_count(), g.m());
        assert_eq!(bp.report(1).excess_after_level, 0);
    }

    #[test]
    fn all_empty_keeps_every_vertex() {
        let g = complete(6);
        let mut bp = pruner(&g, Rational::new(1, 2));
        let p = bp.limits().params;
        let mut st = BatchState::new(p.k, p.lambda, 10);
        assert_eq!(bp.run_from(1, &mut st).unwrap().len(), 6);
    }

    #[test]
    fn isolated_vertex_on_k16_is_pruned() {
        let g = complete(16);
        let mut bp = pruner(&g, Rational::new(1, 4));
        let p = bp.limits().params;
        let mut st = BatchState::new(p.k, p.lambda, 10);
        // B_1 gets the 15 edges at vertex 0 directly
        let star: Vec<EdgeId> = g.incident(0).collect();
        bp.run_level(1, &star, &VertexSet::new()).unwrap();
        for j in 2..=p.lambda {
            let s = bp.run_level(j, &[], &VertexSet::new()).unwrap();
            st.set_proposal(j, s);
        }
        let survivors = bp.survivors().unwrap();
        assert!(!survivors.contains(&0));
        let rep = bp.exp_cert_report().unwrap();
        assert!(rep.ok, "{rep:?}");
        let last = &bp.level(p.lambda).unwrap().graph;
        if last.live_vertex_count() >= 2 {
            let phi = conductance_exact(last, VolumeMeasure::InitialD)
                .unwrap()
                .conductance
                .unwrap();
            assert!(phi >= Rational::new(1, 40));
        }
    }

    #[test]
    fn excess_does_not_grow_over_empty_levels() {
        let g = complete(8);
        let mut bp = pruner(&g, Rational::new(1, 2));
        bp.set_strict(false);
        bp.run_level(1, &[0, 1], &VertexSet::new()).unwrap();
        let x1 = bp.report(1).excess_after_level;
        bp.run_level(2, &[], &VertexSet::new()).unwrap();
        assert!(bp.report(2).excess_after_level <= x1);
    }

    #[test]
    fn matching_on_k16_certifies() {
        let g = complete(16);
        let mut bp = pruner(&g, Rational::new(1, 2));
        let p = bp.limits().params;
        let mut st = BatchState::new(p.k, p.lambda, 100);
        // one edge per vertex pair (2j, 2j+1)
        let matching: Vec<EdgeId> = (0..g.m())
            .filter(|&e| {
                let (a, b) = g.endpoints(e);
                a % 2 == 0 && b == a + 1
            })
            .collect();
        bp.run_level(1, &matching, &VertexSet::new()).unwrap();
        for j in 2..=p.lambda {
            let s = bp.run_level(j, &[], &VertexSet::new()).unwrap();
            st.set_proposal(j, s);
        }
        assert_eq!(bp.report(p.lambda).excess_after_level, 0);
        assert!(bp.exp_cert_report().unwrap().ok);
    }

    #[test]
    fn rerun_is_deterministic() {
        let g = complete(10);
        let mut bp = pruner(&g, Rational::new(1, 2));
        let p = bp.limits().params;
        let mut st = BatchState::new(p.k, p.lambda, 100);
        for e in 0..3 {
            st.insert_deletion(e).unwrap();
        }
        let a = bp.run_from(1, &mut st).unwrap();
        let snap = serde_json::to_string(&bp.reports).unwrap();
        let b = bp.run_from(1, &mut st).unwrap();
        assert_eq!(a, b);
        assert_eq!(snap, serde_json::to_string(&bp.reports).unwrap());
    }
}
