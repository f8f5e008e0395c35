//! Integral flows on a decremental graph: excess, local Dinitz, cycle removal.
//!
//! Each undirected edge carries one signed net flow value `g`; positive means
//! flow from the first endpoint to the second. The residual capacity from u
//! to v is `cap - g(u→v)`, which matches the definition
//! `c(u,v) - f(u,v) + f(v,u)` for the directed representation.
//!
//! Flow on dead edges stays frozen. It is excluded from the residual graph
//! but still counts towards a vertex's net out-flow, so callers that strand
//! flow on removed edges compensate with `delta`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dyngraph::{DecGraph, EdgeId, VertexId};
use crate::meter::{block_on, Meter};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowError {
    #[error("total effective source {source_total} exceeds total sink {sink_total}")]
    DemandImbalance { source_total: i128, sink_total: i128 },
    #[error("flow {flow} on edge {edge} exceeds capacity {cap}")]
    CapacityViolated { edge: EdgeId, flow: i64, cap: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct FlowState {
    cap: Vec<u64>,
    flow: Vec<i64>,
    pub s: Vec<u64>,
    pub t: Vec<u64>,
    pub delta: Vec<i64>,
    netout: Vec<i64>,
    pub scale: u64,
}

impl FlowState {
    /// Zero flow, zero demands, uniform capacity on every edge.
    pub fn new(g: &DecGraph, cap: u64, scale: u64) -> Self {
        FlowState {
            cap: vec![cap; g.m()],
            flow: vec![0; g.m()],
            s: vec![0; g.n()],
            t: vec![0; g.n()],
            delta: vec![0; g.n()],
            netout: vec![0; g.n()],
            scale,
        }
    }

    pub fn cap(&self, e: EdgeId) -> u64 {
        self.cap[e]
    }

    pub fn set_cap(&mut self, e: EdgeId, cap: u64) {
        self.cap[e] = cap;
    }

    /// Signed net flow on `e`, positive along the stored orientation.
    pub fn flow(&self, e: EdgeId) -> i64 {
        self.flow[e]
    }

    pub fn flows(&self) -> &[i64] {
        &self.flow
    }

    /// Net flow leaving `from` along `e` (may be negative).
    pub fn flow_from(&self, g: &DecGraph, e: EdgeId, from: VertexId) -> i64 {
        if g.endpoints(e).0 == from {
            self.flow[e]
        } else {
            -self.flow[e]
        }
    }

    pub fn residual(&self, g: &DecGraph, e: EdgeId, from: VertexId) -> u64 {
        (self.cap[e] as i64 - self.flow_from(g, e, from)) as u64
    }

    /// Send `amount` more units from `from` across `e`.
    pub fn push(&mut self, g: &DecGraph, e: EdgeId, from: VertexId, amount: i64) {
        let (a, b) = g.endpoints(e);
        let signed = if a == from { amount } else { -amount };
        self.flow[e] += signed;
        self.netout[a] += signed;
        self.netout[b] -= signed;
    }

    /// Overwrite the signed flow on `e`.
    pub fn set_flow(&mut self, g: &DecGraph, e: EdgeId, value: i64) {
        let (a, _) = g.endpoints(e);
        let diff = value - self.flow[e];
        self.push(g, e, a, diff);
    }

    /// Net out-flow of `v` over every edge, including frozen dead ones.
    pub fn netout(&self, v: VertexId) -> i64 {
        self.netout[v]
    }

    /// Net out-flow of `v` over live edges only.
    pub fn live_netout(&self, g: &DecGraph, v: VertexId) -> i64 {
        g.incident(v).map(|e| self.flow_from(g, e, v)).sum()
    }

    fn balance(&self, v: VertexId) -> i64 {
        self.s[v] as i64 + self.delta[v] - self.t[v] as i64 - self.netout[v]
    }

    pub fn excess(&self, v: VertexId) -> u64 {
        self.balance(v).max(0) as u64
    }

    /// Remaining sink capacity at `v`.
    pub fn deficit(&self, v: VertexId) -> u64 {
        (-self.balance(v)).max(0) as u64
    }

    /// Excess at every vertex; dead vertices report 0.
    pub fn excess_vector(&self, g: &DecGraph) -> Vec<u64> {
        (0..g.n())
            .map(|v| if g.is_vertex_alive(v) { self.excess(v) } else { 0 })
            .collect()
    }

    pub fn total_excess(&self, g: &DecGraph) -> u64 {
        g.alive_vertices().map(|v| self.excess(v)).sum()
    }

    pub fn check_capacities(&self, g: &DecGraph) -> Result<(), FlowError> {
        for e in g.live_edges() {
            if self.flow[e].unsigned_abs() > self.cap[e] {
                return Err(FlowError::CapacityViolated {
                    edge: e,
                    flow: self.flow[e],
                    cap: self.cap[e],
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DinitzOptions {
    /// Reject instances whose total effective source exceeds total sink.
    pub check_balance: bool,
}

impl Default for DinitzOptions {
    fn default() -> Self {
        DinitzOptions { check_balance: true }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DinitzReport {
    pub routed: u64,
    pub rounds: usize,
    pub ops: u64,
}

const UNSET: u32 = u32::MAX;

/// Blocking-flow rounds from the excess support towards vertices with spare
/// sink capacity, stopping after `h` rounds or once no path of fewer than `h`
/// residual edges remains.
pub async fn dinitz_local_with(
    g: &DecGraph,
    st: &mut FlowState,
    h: usize,
    opts: DinitzOptions,
    meter: &Meter,
) -> Result<DinitzReport, FlowError> {
    let start_ops = meter.total();
    if opts.check_balance {
        let mut src = 0i128;
        let mut snk = 0i128;
        for v in g.alive_vertices() {
            src += st.s[v] as i128 + st.delta[v] as i128;
            snk += st.t[v] as i128;
        }
        meter.add(g.n() as u64);
        if src > snk {
            return Err(FlowError::DemandImbalance {
                source_total: src,
                sink_total: snk,
            });
        }
    }
    let n = g.n();
    let mut sources: Vec<VertexId> = g.alive_vertices().filter(|&v| st.excess(v) > 0).collect();
    meter.add(n as u64);
    let mut level = vec![UNSET; n];
    let mut iter = vec![0usize; n];
    let mut touched: Vec<VertexId> = Vec::new();
    let mut report = DinitzReport::default();

    while report.rounds < h && !sources.is_empty() {
        for &v in &touched {
            level[v] = UNSET;
        }
        touched.clear();
        let mut queue = VecDeque::new();
        for &v in &sources {
            level[v] = 0;
            touched.push(v);
            queue.push_back(v);
        }
        let mut target = UNSET;
        while let Some(u) = queue.pop_front() {
            if target != UNSET && level[u] >= target {
                break;
            }
            for &e in g.incident_all(u) {
                meter.add(1);
                if !g.is_edge_alive(e) {
                    continue;
                }
                let w = g.other(e, u);
                if level[w] != UNSET || st.residual(g, e, u) == 0 {
                    continue;
                }
                level[w] = level[u] + 1;
                touched.push(w);
                if target == UNSET && st.deficit(w) > 0 {
                    target = level[w];
                }
                queue.push_back(w);
            }
            meter.tick().await;
        }
        if target == UNSET || target as usize >= h {
            break;
        }
        for &v in &touched {
            iter[v] = 0;
        }
        for &src in &sources {
            let mut stack: Vec<(VertexId, EdgeId)> = Vec::new();
            let mut u = src;
            while st.excess(src) > 0 {
                if level[u] == target {
                    if st.deficit(u) > 0 {
                        let mut amount = st.excess(src).min(st.deficit(u));
                        let mut tail = u;
                        for &(p, e) in stack.iter().rev() {
                            amount = amount.min(st.residual(g, e, p));
                            tail = p;
                        }
                        debug_assert_eq!(tail, src);
                        for &(p, e) in &stack {
                            st.push(g, e, p, amount as i64);
                        }
                        meter.add(stack.len() as u64 + 1);
                        report.routed += amount;
                        if let Some(cut) = stack.iter().position(|&(p, e)| st.residual(g, e, p) == 0) {
                            u = stack[cut].0;
                            stack.truncate(cut);
                        }
                        meter.tick().await;
                        continue;
                    }
                    level[u] = UNSET;
                    match stack.pop() {
                        Some((p, _)) => {
                            iter[p] += 1;
                            u = p;
                            continue;
                        }
                        None => break,
                    }
                }
                let inc = g.incident_all(u);
                let mut advanced = false;
                while iter[u] < inc.len() {
                    let e = inc[iter[u]];
                    meter.add(1);
                    if g.is_edge_alive(e) {
                        let w = g.other(e, u);
                        if level[w] != UNSET && level[w] == level[u] + 1 && st.residual(g, e, u) > 0 {
                            stack.push((u, e));
                            u = w;
                            advanced = true;
                            break;
                        }
                    }
                    iter[u] += 1;
                }
                if advanced {
                    continue;
                }
                level[u] = UNSET;
                match stack.pop() {
                    Some((p, _)) => {
                        iter[p] += 1;
                        u = p;
                    }
                    None => break,
                }
                meter.tick().await;
            }
        }
        report.rounds += 1;
        sources.retain(|&v| st.excess(v) > 0);
        meter.tick().await;
    }
    report.ops = meter.total() - start_ops;
    Ok(report)
}

/// Synchronous [`dinitz_local_with`] with the balance check enabled.
pub fn dinitz_local(g: &DecGraph, st: &mut FlowState, h: usize) -> Result<DinitzReport, FlowError> {
    block_on(dinitz_local_with(
        g,
        st,
        h,
        DinitzOptions::default(),
        &Meter::unlimited(),
    ))
}

/// Cancel every directed cycle in the support of the flow on live edges.
/// Net out-flow is unchanged at every vertex and no edge's |flow| grows.
pub async fn remove_cycles_with(g: &DecGraph, st: &mut FlowState, meter: &Meter) -> usize {
    let n = g.n();
    // 0 = unvisited, 1 = on stack, 2 = finished
    let mut color = vec![0u8; n];
    let mut iter = vec![0usize; n];
    let mut cancelled = 0;
    for root in 0..n {
        if color[root] != 0 || !g.is_vertex_alive(root) {
            continue;
        }
        let mut stack: Vec<(VertexId, EdgeId)> = Vec::new();
        let mut u = root;
        color[u] = 1;
        iter[u] = 0;
        loop {
            let inc = g.incident_all(u);
            let mut next = None;
            while iter[u] < inc.len() {
                let e = inc[iter[u]];
                meter.add(1);
                if g.is_edge_alive(e) && st.flow_from(g, e, u) > 0 {
                    let w = g.other(e, u);
                    if color[w] != 2 {
                        next = Some((e, w));
                        break;
                    }
                }
                iter[u] += 1;
            }
            match next {
                Some((e, w)) if color[w] == 1 => {
                    let start = stack.iter().position(|&(p, _)| p == w).unwrap_or(stack.len());
                    let mut amount = st.flow_from(g, e, u);
                    for &(p, pe) in &stack[start..] {
                        amount = amount.min(st.flow_from(g, pe, p));
                    }
                    for &(p, pe) in &stack[start..] {
                        st.push(g, pe, p, -amount);
                    }
                    st.push(g, e, u, -amount);
                    meter.add((stack.len() - start) as u64 + 1);
                    cancelled += 1;
                    for &(p, _) in &stack[start..] {
                        if p != w {
                            color[p] = 0;
                        }
                    }
                    if u != w {
                        color[u] = 0;
                    }
                    stack.truncate(start);
                    u = w;
                    meter.tick().await;
                }
                Some((e, w)) => {
                    stack.push((u, e));
                    color[w] = 1;
                    iter[w] = 0;
                    u = w;
                }
                None => {
                    color[u] = 2;
                    match stack.pop() {
                        Some((p, _)) => {
                            iter[p] += 1;
                            u = p;
                        }
                        None => break,
                    }
                }
            }
        }
        meter.tick().await;
    }
    cancelled
}

pub fn remove_cycles(g: &DecGraph, st: &mut FlowState) -> usize {
    block_on(remove_cycles_with(g, st, &Meter::unlimited()))
}

/// True if the directed support of the flow on live edges has no cycle.
pub fn support_is_acyclic(g: &DecGraph, st: &FlowState) -> bool {
    let n = g.n();
    let mut indeg = vec![0usize; n];
    for e in g.live_edges() {
        let (a, b) = g.endpoints(e);
        match st.flow(e).signum() {
            1 => indeg[b] += 1,
            -1 => indeg[a] += 1,
            _ => {}
        }
    }
    let mut queue: Vec<VertexId> = g.alive_vertices().filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(u) = queue.pop() {
        seen += 1;
        for e in g.incident(u) {
            if st.flow_from(g, e, u) > 0 {
                let w = g.other(e, u);
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push(w);
                }
            }
        }
    }
    seen == g.live_vertex_count()
}
