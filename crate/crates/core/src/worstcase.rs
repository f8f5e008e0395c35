//! Pruning with bounded recourse and bounded work on every single deletion.
//!
//! Rebuilds of levels up to `k−2` are computed by background jobs that get a
//! fixed number of elementary operations per deletion. A job for level `ℓ`
//! starts when batch `ℓ+1` fills up, runs a forked batch pruner over the
//! levels as they are frozen, and builds each level's certificate flow with a
//! chain of flow backtrackers. When the rebuild at `ℓ` is due the job's state
//! is swapped in. Levels `k−1` and above are rebuilt inline.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::future::poll_fn;
use std::rc::Rc;
use std::task::Poll;

use serde::{Deserialize, Serialize};

use crate::amortized::{
    check_expander, drain_layer, enforce_drain, layer_sets, DeletionEvent, DeletionPruner, PruneDelta, PrunerError,
};
use crate::batchcert::{BatchCertState, GraphChange, Layer};
use crate::batching::{BatchState, Fullness};
use crate::batchprune::BatchPruner;
use crate::certificate::FlowCertificate;
use crate::dyngraph::{DecGraph, EdgeId, VertexId, VertexSet};
use crate::linkcut::ForestError;
use crate::localflow::{dinitz_local_with, remove_cycles_with, DinitzOptions, FlowError, FlowState};
use crate::meter::{block_on, Meter, Task};
use crate::params::Rational;
use crate::preset::Limits;

/// Flow out of a source set that is backtracked under edge and vertex
/// deletions. Sources that lose more than `d·σ` units are reported for a rerun
/// instead of being pruned.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowBacktracker {
    theta: u64,
    rate: u64,
    cap: u64,
    sigma: u64,
    forest_cost: u64,
    sources: VertexSet,
    layer: Layer,
    rerun: VertexSet,
    unroutable: VertexSet,
}

impl FlowBacktracker {
    /// Route `(θ·mul+1)·d·σ` out of every live vertex of `s` into sinks
    /// `8·d·σ` with edge capacity `400θσ/φ`. Sources the flow cannot fully
    /// route keep only what was routed and are listed in
    /// [`unroutable`](Self::unroutable).
    pub async fn initialize_with(
        g: &DecGraph,
        s: &VertexSet,
        theta: u64,
        limits: &Limits,
        meter: &Meter,
    ) -> Result<Self, FlowError> {
        let p = &limits.params;
        let rate = theta * limits.consts.backtrack_theta_mul + 1;
        let cap = limits.backtrack_cap(theta);
        let sources: VertexSet = s.iter().copied().filter(|&v| g.is_vertex_alive(v)).collect();
        let mut st = FlowState::new(g, cap, p.sigma);
        for v in g.alive_vertices() {
            if sources.contains(&v) {
                st.s[v] = rate * g.d(v) * p.sigma;
            } else {
                st.t[v] = 8 * g.d(v) * p.sigma;
            }
        }
        meter.add(g.n() as u64);
        let opts = DinitzOptions { check_balance: false };
        dinitz_local_with(g, &mut st, limits.cert_rounds(), opts, meter).await?;
        let mut unroutable = VertexSet::new();
        for &v in &sources {
            let x = st.excess(v);
            if x > 0 {
                st.s[v] -= x;
                unroutable.insert(v);
            }
        }
        remove_cycles_with(g, &mut st, meter).await;
        meter.add((g.n() + g.m()) as u64);
        let sink = st.t.clone();
        Ok(FlowBacktracker {
            theta,
            rate,
            cap,
            sigma: p.sigma,
            forest_cost: p.log_n,
            sources,
            layer: Layer::from_flow(g.clone(), st.flows(), sink),
            rerun: VertexSet::new(),
            unroutable,
        })
    }

    pub fn initialize(g: &DecGraph, s: &VertexSet, theta: u64, limits: &Limits) -> Result<Self, FlowError> {
        block_on(Self::initialize_with(g, s, theta, limits, &Meter::unlimited()))
    }

    pub fn theta(&self) -> u64 {
        self.theta
    }

    /// Source per unit of `d·σ`.
    pub fn source_rate(&self) -> u64 {
        self.rate
    }

    pub fn sources(&self) -> &VertexSet {
        &self.sources
    }

    pub fn graph(&self) -> &DecGraph {
        &self.layer.graph
    }

    pub fn rerun(&self) -> &VertexSet {
        &self.rerun
    }

    pub fn unroutable(&self) -> &VertexSet {
        &self.unroutable
    }

    pub fn q(&self, v: VertexId) -> u64 {
        self.layer.q[v]
    }

    pub fn flow(&mut self) -> Vec<i64> {
        self.layer.signed_flow()
    }

    /// Delete the edges `p` and the vertices `u`, backtracking all flow on
    /// them. Returns the sources newly added to the rerun set.
    pub async fn remove_batch_with(
        &mut self,
        p: &[EdgeId],
        u: &VertexSet,
        meter: &Meter,
    ) -> Result<VertexSet, ForestError> {
        let g = &self.layer.graph;
        let mut dying: BTreeSet<EdgeId> = p.iter().copied().filter(|&e| g.is_edge_alive(e)).collect();
        for &v in u {
            if g.is_vertex_alive(v) {
                dying.extend(g.incident(v));
            }
        }
        let mut fresh = VertexSet::new();
        for e in dying {
            for _ in 0..self.cap {
                let Some((r, ops)) = self.layer.take_unit(e)? else {
                    break;
                };
                self.layer.advance(r)?;
                meter.add((ops + 1) * self.forest_cost);
                if self.sources.contains(&r) {
                    self.layer.q[r] += 1;
                    if self.layer.q[r] > self.layer.graph.d(r) * self.sigma && self.rerun.insert(r) {
                        fresh.insert(r);
                    }
                }
                meter.tick().await;
            }
            self.layer.forget_edge(e)?;
            self.layer.graph.delete_edge(e).expect("edge checked alive");
            meter.add(1);
        }
        self.layer.graph.remove_vertices(u);
        Ok(fresh)
    }

    pub fn remove_batch(&mut self, p: &[EdgeId], u: &VertexSet) -> Result<VertexSet, ForestError> {
        block_on(self.remove_batch_with(p, u, &Meter::unlimited()))
    }

    /// The live non-rerun sources with the current flow, as a
    /// `(θ, 10, cap/σ)` certificate.
    pub fn certificate(&mut self) -> FlowCertificate {
        let g = &self.layer.graph;
        let sources = self
            .sources
            .iter()
            .copied()
            .filter(|&v| g.is_vertex_alive(v) && !self.rerun.contains(&v))
            .collect();
        FlowCertificate {
            sources,
            flow: self.layer.signed_flow(),
            gamma_source: Rational::from_integer(self.theta),
            gamma_sink: Rational::from_integer(10),
            c: Rational::new(self.cap, self.sigma),
            scale: self.sigma,
        }
    }
}

/// Chain of backtrackers that together route the certificate source of one
/// level while deletion batches arrive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorstCaseFlow {
    level: usize,
    theta: u64,
    sources: VertexSet,
    view: DecGraph,
    chain: Vec<FlowBacktracker>,
    requests: VertexSet,
}

impl WorstCaseFlow {
    /// Source multiplier for a level-`l` chain: 10(l·k + k) + l + 1.
    pub fn theta_for(l: usize, k: usize) -> u64 {
        let (l, k) = (l as u64, k as u64);
        10 * (l * k + k) + l + 1
    }

    /// Start a chain for `s` on `view` with its first backtracker.
    pub async fn start_with(
        view: DecGraph,
        s: &VertexSet,
        level: usize,
        limits: &Limits,
        meter: &Meter,
    ) -> Result<Self, FlowError> {
        let theta = Self::theta_for(level, limits.params.k);
        let sources: VertexSet = s.iter().copied().filter(|&v| view.is_vertex_alive(v)).collect();
        let mut wcf = WorstCaseFlow {
            level,
            theta,
            sources,
            view,
            chain: Vec::new(),
            requests: VertexSet::new(),
        };
        let first = wcf.sources.clone();
        wcf.extend(&first, limits, meter).await?;
        Ok(wcf)
    }

    pub fn start(view: DecGraph, s: &VertexSet, level: usize, limits: &Limits) -> Result<Self, FlowError> {
        block_on(Self::start_with(view, s, level, limits, &Meter::unlimited()))
    }

    async fn extend(&mut self, s: &VertexSet, limits: &Limits, meter: &Meter) -> Result<(), FlowError> {
        if s.is_empty() && !self.chain.is_empty() {
            return Ok(());
        }
        meter.add((self.view.n() + self.view.m()) as u64);
        let d = FlowBacktracker::initialize_with(&self.view, s, self.theta, limits, meter).await?;
        self.requests.extend(d.unroutable().iter().copied());
        self.chain.push(d);
        Ok(())
    }

    /// Apply one deletion batch to every backtracker, then start a new one for
    /// the surviving sources they gave up on.
    pub async fn apply_batch_with(
        &mut self,
        p: &[EdgeId],
        u: &VertexSet,
        limits: &Limits,
        meter: &Meter,
    ) -> Result<(), PrunerError> {
        for &e in p {
            if self.view.is_edge_alive(e) {
                self.view.delete_edge(e)?;
            }
        }
        self.view.remove_vertices(u);
        meter.add((p.len() + u.len()) as u64);
        let mut fresh = VertexSet::new();
        for d in &mut self.chain {
            fresh.extend(
                d.remove_batch_with(p, u, meter)
                    .await
                    .map_err(crate::batchcert::BatchCertError::from)?,
            );
        }
        let survivors: VertexSet = fresh.into_iter().filter(|&v| self.view.is_vertex_alive(v)).collect();
        self.extend(&survivors, limits, meter)
            .await
            .map_err(crate::batchcert::BatchCertError::from)?;
        Ok(())
    }

    pub fn apply_batch(&mut self, p: &[EdgeId], u: &VertexSet, limits: &Limits) -> Result<(), PrunerError> {
        block_on(self.apply_batch_with(p, u, limits, &Meter::unlimited()))
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn theta(&self) -> u64 {
        self.theta
    }

    pub fn sources(&self) -> &VertexSet {
        &self.sources
    }

    pub fn view(&self) -> &DecGraph {
        &self.view
    }

    pub fn chain_len(&self) -> usize {
        self.chain.len()
    }

    /// Sources some backtracker could not route; they have to be pruned.
    pub fn take_requests(&mut self) -> VertexSet {
        std::mem::take(&mut self.requests)
    }

    /// Sum of the chain's flows.
    pub fn flow(&mut self) -> Vec<i64> {
        let mut out = vec![0i64; self.view.m()];
        for d in &mut self.chain {
            for (o, f) in out.iter_mut().zip(d.flow()) {
                *o += f;
            }
        }
        out
    }
}

/// Split a change log into deleted edges and pruned vertices.
fn split_changes(changes: &[GraphChange]) -> (Vec<EdgeId>, VertexSet) {
    let mut p = Vec::new();
    let mut u = VertexSet::new();
    for c in changes {
        match *c {
            GraphChange::Edge(e) => p.push(e),
            GraphChange::Vertex(v) => {
                u.insert(v);
            }
        }
    }
    (p, u)
}

#[derive(Debug, Clone)]
enum JobMsg {
    /// shadow level `level` is frozen with these inputs
    LevelFinal {
        level: usize,
        b: Vec<EdgeId>,
        a: VertexSet,
        changes: Vec<GraphChange>,
    },
    /// the rebuild is due; inputs of the remaining levels follow
    Finalize {
        tail: Vec<(Vec<EdgeId>, VertexSet)>,
        changes: Vec<GraphChange>,
    },
}

#[derive(Debug, Default)]
struct Inbox {
    queue: VecDeque<JobMsg>,
    waiting: bool,
    requests: VertexSet,
}

/// Shadow state of one rebuilt level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShadowLevel {
    pub level: usize,
    pub proposal: VertexSet,
}

struct JobOutput {
    prune: BatchPruner,
    levels: Vec<ShadowLevel>,
    flows: Vec<WorstCaseFlow>,
}

type JobResult = Result<JobOutput, PrunerError>;

async fn recv(inbox: &Rc<RefCell<Inbox>>) -> JobMsg {
    poll_fn(|_| {
        let mut ib = inbox.borrow_mut();
        match ib.queue.pop_front() {
            Some(m) => {
                ib.waiting = false;
                Poll::Ready(m)
            }
            None => {
                ib.waiting = true;
                Poll::Pending
            }
        }
    })
    .await
}

struct JobCtx {
    prune: BatchPruner,
    view: DecGraph,
    limits: Limits,
    meter: Meter,
    inbox: Rc<RefCell<Inbox>>,
    levels: Vec<ShadowLevel>,
    flows: Vec<WorstCaseFlow>,
}

impl JobCtx {
    async fn apply(&mut self, changes: &[GraphChange]) -> Result<(), PrunerError> {
        let (p, u) = split_changes(changes);
        for &e in &p {
            if self.view.is_edge_alive(e) {
                self.view.delete_edge(e)?;
            }
        }
        self.view.remove_vertices(&u);
        for w in &mut self.flows {
            w.apply_batch_with(&p, &u, &self.limits, &self.meter).await?;
            self.inbox.borrow_mut().requests.extend(w.take_requests());
        }
        Ok(())
    }

    /// Run shadow level `level` and start its certificate chain.
    async fn level(&mut self, level: usize, b: &[EdgeId], a: &VertexSet) -> Result<(), PrunerError> {
        let s = self.prune.run_level_with(level, b, a, &self.meter).await?;
        let mut view = self.view.clone();
        for sl in &self.levels {
            view.remove_vertices(&sl.proposal);
        }
        self.meter.add((view.n() + view.m()) as u64);
        let mut w = WorstCaseFlow::start_with(view, &s, level, &self.limits, &self.meter)
            .await
            .map_err(crate::batchcert::BatchCertError::from)?;
        self.inbox.borrow_mut().requests.extend(w.take_requests());
        self.flows.push(w);
        self.levels.push(ShadowLevel { level, proposal: s });
        Ok(())
    }
}

async fn rebuild_job(mut cx: JobCtx, level: usize, b: Vec<EdgeId>, a: VertexSet) -> JobResult {
    cx.level(level, &b, &a).await?;
    loop {
        match recv(&cx.inbox).await {
            JobMsg::LevelFinal { level, b, a, changes } => {
                cx.apply(&changes).await?;
                cx.level(level, &b, &a).await?;
            }
            JobMsg::Finalize { tail, changes } => {
                cx.apply(&changes).await?;
                let first = cx.levels.last().map_or(level, |l| l.level) + 1;
                for (j, (b, a)) in tail.iter().enumerate() {
                    let s = cx.prune.run_level_with(first + j, b, a, &cx.meter).await?;
                    cx.levels.push(ShadowLevel {
                        level: first + j,
                        proposal: s,
                    });
                }
                return Ok(JobOutput {
                    prune: cx.prune,
                    levels: cx.levels,
                    flows: cx.flows,
                });
            }
        }
    }
}

/// Background rebuild of one level.
pub struct RebuildJob {
    level: usize,
    started_at: u64,
    task: Task<JobResult>,
    inbox: Rc<RefCell<Inbox>>,
    /// position in the certificate change log up to which changes were sent
    cursor: usize,
    /// highest shadow level handed to the job so far
    frozen: usize,
    steps: u64,
}

impl RebuildJob {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn started_at(&self) -> u64 {
        self.started_at
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Waiting for input with nothing left to compute.
    pub fn is_idle(&self) -> bool {
        let ib = self.inbox.borrow();
        ib.waiting && ib.queue.is_empty()
    }

    fn send(&mut self, msg: JobMsg, changes_len: usize) {
        self.inbox.borrow_mut().queue.push_back(msg);
        self.cursor = changes_len;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorstCaseStats {
    pub jobs_started: u64,
    pub swaps: u64,
    pub inline_rebuilds: u64,
    pub undrained_rebuilds: u64,
    /// vertices pruned because a backtracker could not route them
    pub unroutable_prunes: u64,
    pub max_recourse: usize,
    pub max_op_count: u64,
    pub total_ops: u64,
    pub max_steps: u64,
}

pub struct WorstCasePruner {
    limits: Limits,
    current: DecGraph,
    batches: BatchState,
    prune: BatchPruner,
    cert: BatchCertState,
    eta: u64,
    meter: Meter,
    jobs: BTreeMap<usize, RebuildJob>,
    events: Vec<DeletionEvent>,
    stats: WorstCaseStats,
}

impl WorstCasePruner {
    pub fn new(g: &DecGraph, limits: Limits) -> Result<Self, PrunerError> {
        check_expander(g, limits.params.phi)?;
        let p = &limits.params;
        let meter = Meter::unlimited();
        let mut cert = BatchCertState::new(g, limits);
        cert.set_meter(meter.clone());
        let mut prune = BatchPruner::new(g, limits);
        prune.set_strict(limits.consts.excess_policy == crate::preset::ExcessPolicy::Fail);
        Ok(WorstCasePruner {
            limits,
            current: g.clone(),
            batches: BatchState::new(p.k, p.lambda, limits.deletion_budget()),
            prune,
            cert,
            eta: limits.drain_worstcase(),
            meter,
            jobs: BTreeMap::new(),
            events: Vec::new(),
            stats: WorstCaseStats::default(),
        })
    }

    pub fn set_drain_rate(&mut self, eta: u64) {
        self.eta = eta;
    }

    pub fn stats(&self) -> &WorstCaseStats {
        &self.stats
    }

    pub fn cert(&self) -> &BatchCertState {
        &self.cert
    }

    pub fn cert_mut(&mut self) -> &mut BatchCertState {
        &mut self.cert
    }

    pub fn batch_pruner(&self) -> &BatchPruner {
        &self.prune
    }

    pub fn active_jobs(&self) -> Vec<usize> {
        self.jobs.keys().copied().collect()
    }

    fn force_prune_all(&mut self, vs: VertexSet, pruned: &mut Vec<VertexId>) -> Result<(), PrunerError> {
        for v in vs {
            if self.cert.graph().is_vertex_alive(v) {
                pruned.extend(self.cert.force_prune(v)?);
                self.stats.unroutable_prunes += 1;
            }
        }
        Ok(())
    }

    fn start_job(&mut self, level: usize) {
        let k = self.limits.params.k;
        let mut view = self.cert.graph().clone();
        for j in 1..level {
            view.remove_vertices(self.cert.layer_set(j));
        }
        let mut b = self.batches.b(level).to_vec();
        b.extend_from_slice(self.batches.b(level + 1));
        let mut a = self.batches.a(level).clone();
        for j in [level, level + 1] {
            a.extend(self.batches.s(j).iter().copied());
        }
        a.extend(self.batches.a(level + 1).iter().copied());
        let inbox = Rc::new(RefCell::new(Inbox::default()));
        let meter = Meter::unlimited();
        let cx = JobCtx {
            prune: self.prune.clone(),
            view,
            limits: self.limits,
            meter: meter.clone(),
            inbox: inbox.clone(),
            levels: Vec::new(),
            flows: Vec::new(),
        };
        debug_assert!(level + 2 <= k);
        let task = Task::new(meter, rebuild_job(cx, level, b, a));
        let job = RebuildJob {
            level,
            started_at: self.batches.deletions_processed(),
            task,
            inbox,
            cursor: self.cert.changes().len(),
            frozen: level,
            steps: 0,
        };
        self.jobs.insert(level, job);
        self.stats.jobs_started += 1;
    }

    /// Batch `i` just became full: hand its frozen contents to every job whose
    /// batches up to `i−1` are already full, and start the job for level
    /// `i−1`.
    fn on_full(&mut self, i: usize) -> Result<(), PrunerError> {
        let k = self.limits.params.k;
        let changes_len = self.cert.changes().len();
        for (&l, job) in self.jobs.iter_mut() {
            if job.frozen + 2 == i {
                if !job.is_idle() {
                    return Err(PrunerError::DeadlineMissed { level: l });
                }
                let mut a = self.batches.a(i).clone();
                a.extend(self.batches.s(i).iter().copied());
                let changes = self.cert.changes()[job.cursor..].to_vec();
                let msg = JobMsg::LevelFinal {
                    level: i - 1,
                    b: self.batches.b(i).to_vec(),
                    a,
                    changes,
                };
                job.send(msg, changes_len);
                job.frozen = i - 1;
            }
        }
        if i >= 2 && i - 1 + 2 <= k && self.batches.classify(i - 1)? != Fullness::Full {
            self.start_job(i - 1);
        }
        Ok(())
    }

    /// Swap in the finished job for level `l`.
    fn swap(&mut self, l: usize, pruned: &mut Vec<VertexId>) -> Result<(), PrunerError> {
        let k = self.limits.params.k;
        let lambda = self.limits.params.lambda;
        let mut job = self.jobs.remove(&l).ok_or(PrunerError::NoJob { level: l })?;
        if !job.is_idle() || job.frozen + 2 != k {
            return Err(PrunerError::DeadlineMissed { level: l });
        }
        let tail = (k - 1..=lambda)
            .map(|j| (self.batches.b(j).to_vec(), self.batches.a(j).clone()))
            .collect();
        let changes = self.cert.changes()[job.cursor..].to_vec();
        job.send(JobMsg::Finalize { tail, changes }, self.cert.changes().len());
        let before = job.task.meter().total();
        job.task.step(None);
        self.meter.add(job.task.meter().total() - before);
        let mut out = job.task.take_output().expect("finalize runs to completion")?;
        for j in l..=lambda {
            let (b, a) = out.prune.input(j);
            if b != self.batches.b(j) || a != self.batches.a(j) {
                return Err(PrunerError::JobInputMismatch { level: j });
            }
        }
        // prune whatever the chains could not route, feeding the changes back
        let mut requests = std::mem::take(&mut job.inbox.borrow_mut().requests);
        for w in &mut out.flows {
            requests.extend(w.take_requests());
        }
        let mut cursor = self.cert.changes().len();
        while !requests.is_empty() {
            self.force_prune_all(requests, pruned)?;
            let (p, u) = split_changes(&self.cert.changes()[cursor..]);
            cursor = self.cert.changes().len();
            requests = VertexSet::new();
            for w in &mut out.flows {
                block_on(w.apply_batch_with(&p, &u, &self.limits, &self.meter))?;
                requests.extend(w.take_requests());
            }
        }
        self.prune = out.prune;
        for sl in &out.levels {
            self.batches.set_proposal(sl.level, sl.proposal.clone());
        }
        let sets = layer_sets(&self.batches, l);
        let mut flows: Vec<Option<Vec<i64>>> = out.flows.iter_mut().map(|w| Some(w.flow())).collect();
        flows.resize(sets.len(), None);
        pruned.extend(self.cert.reinitialize_with_flows(l, &sets, flows)?);
        self.stats.swaps += 1;
        Ok(())
    }

    /// Everything removed at the rebuilt levels is already pruned.
    fn check_swap_sets(&self, l: usize) -> Result<(), PrunerError> {
        let s0 = self.cert.pruned();
        for j in l..=self.limits.params.lambda {
            if !self.batches.a(j).is_subset(s0) {
                return Err(PrunerError::SwapSetMismatch { level: l });
            }
        }
        for j in l..=self.limits.params.k {
            if !self.cert.live_sources(j).is_empty() {
                return Err(PrunerError::SwapSetMismatch { level: l });
            }
        }
        Ok(())
    }
}

impl DeletionPruner for WorstCasePruner {
    fn process_deletion(&mut self, e: EdgeId) -> Result<PruneDelta, PrunerError> {
        if e >= self.current.m() || !self.current.is_edge_alive(e) {
            return Err(PrunerError::DeadEdge(e));
        }
        let start = self.meter.total();
        let k = self.limits.params.k;
        let mut pruned = Vec::new();
        let mut requests = VertexSet::new();
        for job in self.jobs.values() {
            requests.extend(std::mem::take(&mut job.inbox.borrow_mut().requests));
        }
        self.force_prune_all(requests, &mut pruned)?;
        let mut drained = 0;
        for i in 1..=k {
            drained += drain_layer(&mut self.cert, i, self.eta, &mut pruned)?;
        }
        let t = self.batches.deletions_processed();
        let i = self.batches.insert_deletion(e)?;
        let before = pruned.len();
        enforce_drain(&mut self.cert, i, self.limits.consts.excess_policy, &mut pruned)?;
        if pruned.len() > before {
            self.stats.undrained_rebuilds += 1;
        }
        if i + 2 <= k {
            self.check_swap_sets(i)?;
            self.swap(i, &mut pruned)?;
        } else {
            block_on(self.prune.run_from_with(i, &mut self.batches, &self.meter))?;
            let sets = layer_sets(&self.batches, i);
            pruned.extend(self.cert.reinitialize(i, &sets)?);
            self.stats.inline_rebuilds += 1;
        }
        if self.batches.classify(i)? == Fullness::Full {
            self.on_full(i)?;
        }
        pruned.extend(self.cert.remove_edge(e)?);
        self.current.delete_edge(e)?;

        let mut steps = 0;
        for job in self.jobs.values_mut() {
            let budget = self.limits.job_step_budget(job.level);
            let spent = job.task.step(Some(budget));
            job.steps += spent;
            steps += spent;
            if job.task.is_done() {
                // a job only returns on finalize or on error
                if let Some(Err(err)) = job.task.take_output() {
                    return Err(err);
                }
            }
        }
        let op_count = self.meter.total() - start + steps;
        let budget = self.limits.recourse_budget();
        if pruned.len() as u64 > budget {
            return Err(PrunerError::RecourseExceeded {
                pruned: pruned.len(),
                budget,
            });
        }
        self.stats.max_recourse = self.stats.max_recourse.max(pruned.len());
        self.stats.max_op_count = self.stats.max_op_count.max(op_count);
        self.stats.max_steps = self.stats.max_steps.max(steps);
        self.stats.total_ops += op_count;
        let cert_ok = self.cert.verify().ok;
        self.events.push(DeletionEvent {
            t,
            deleted_edge: e,
            rebuild_level: Some(i),
            pruned: pruned.clone(),
            op_count,
            cert_ok,
            drained,
            conductance: None,
            active_jobs: Some(self.active_jobs()),
            steps_spent: Some(steps),
        });
        Ok(PruneDelta { pruned, op_count })
    }

    fn current(&self) -> &DecGraph {
        &self.current
    }

    fn remainder(&self) -> &DecGraph {
        self.cert.graph()
    }

    fn pruned(&self) -> &VertexSet {
        self.cert.pruned()
    }

    fn events(&self) -> &[DeletionEvent] {
        &self.events
    }

    fn limits(&self) -> &Limits {
        &self.limits
    }

    fn batches(&self) -> &BatchState {
        &self.batches
    }

    fn verify_certificate(&mut self) -> bool {
        self.cert.verify().ok
    }

    fn cert_state(&self) -> &BatchCertState {
        &self.cert
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::verify_certificate;
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

    fn hypercube(d: usize) -> DecGraph {
        let n = 1 << d;
        let mut e = Vec::new();
        for u in 0..n {
            for b in 0..d {
                let v = u ^ (1 << b);
                if u < v {
                    e.push((u, v));
                }
            }
        }
        DecGraph::new(n, &e).unwrap()
    }

    fn limits(g: &DecGraph, phi: Rational, consts: Constants) -> Limits {
        Limits::new(Params::new(g.n(), g.m(), phi).unwrap(), consts)
    }

    fn net_out(g: &DecGraph, flow: &[i64], v: VertexId) -> i64 {
        g.incident(v)
            .map(|e| if g.endpoints(e).0 == v { flow[e] } else { -flow[e] })
            .sum()
    }

    #[test]
    fn empty_source_set_has_zero_flow() {
        let g = complete(8);
        let lim = limits(&g, Rational::new(1, 2), Constants::paper());
        let mut fb = FlowBacktracker::initialize(&g, &VertexSet::new(), 2, &lim).unwrap();
        assert!(fb.flow().iter().all(|&f| f == 0));
    }

    #[test]
    fn single_source_on_k16_routes_its_demand() {
        let g = complete(16);
        let lim = limits(&g, Rational::new(1, 2), Constants::paper());
        let mut fb = FlowBacktracker::initialize(&g, &[5].into(), 2, &lim).unwrap();
        let sigma = lim.params.sigma;
        let want = 3 * 15 * sigma;
        assert!(fb.unroutable().is_empty());
        assert_eq!(net_out(&g, &fb.flow(), 5) as u64, want);
        let cap = lim.backtrack_cap(2);
        let arcs: Vec<_> = g.edges().iter().map(|&(a, b)| (a, b, cap)).collect();
        let mut s = vec![0; 16];
        s[5] = want;
        let t: Vec<u64> = (0..16).map(|v| if v == 5 { 0 } else { 8 * 15 * sigma }).collect();
        assert_eq!(exact_max_flow(16, &arcs, &s, &t).value, want);
    }

    #[test]
    fn empty_batch_changes_nothing() {
        let g = complete(16);
        let lim = limits(&g, Rational::new(1, 2), Constants::paper());
        let mut fb = FlowBacktracker::initialize(&g, &[5].into(), 2, &lim).unwrap();
        let before = fb.flow();
        assert!(fb.remove_batch(&[], &VertexSet::new()).unwrap().is_empty());
        assert_eq!(fb.flow(), before);
    }

    #[test]
    fn cutting_off_a_source_sends_it_to_rerun() {
        let g = complete(16);
        let lim = limits(&g, Rational::new(1, 2), Constants::paper());
        let mut fb = FlowBacktracker::initialize(&g, &[5].into(), 2, &lim).unwrap();
        let around: Vec<EdgeId> = g.incident(5).collect();
        let fresh = fb.remove_batch(&around, &VertexSet::new()).unwrap();
        assert_eq!(fresh, [5].into());
        assert_eq!(fb.q(5), 3 * 15 * lim.params.sigma);
        assert!(fb.flow().iter().all(|&f| f == 0));
    }

    #[test]
    fn batch_on_hypercube_keeps_certificate() {
        let g = hypercube(5);
        let lim = limits(&g, Rational::new(1, 4), Constants::paper());
        let mut fb = FlowBacktracker::initialize(&g, &[0, 31].into(), 2, &lim).unwrap();
        let p: Vec<EdgeId> = vec![0, 1, 7, 40, 41, 63];
        fb.remove_batch(&p, &[12].into()).unwrap();
        let cert = fb.certificate();
        assert!(verify_certificate(fb.graph(), &cert).ok);
        assert!(fb.rerun().iter().all(|v| fb.sources().contains(v)));
    }

    /// The flow of a chain must route (10lk+l+1)·d·σ out of every surviving
    /// source into sinks of at most (10k−1)·d·σ.
    fn assert_level_contract(w: &mut WorstCaseFlow, lim: &Limits, removed: &VertexSet) {
        let (l, k) = (w.level() as u64, lim.params.k as u64);
        let flow = w.flow();
        let g = w.view().clone();
        let sigma = lim.params.sigma;
        for v in g.alive_vertices() {
            let out = net_out(&g, &flow, v);
            if w.sources().contains(&v) && !removed.contains(&v) {
                assert!(
                    out as u64 >= (10 * l * k + l + 1) * g.d(v) * sigma,
                    "source {v} routes {out}"
                );
            } else {
                assert!(
                    -out <= ((10 * k - 1) * g.d(v) * sigma) as i64,
                    "sink {v} absorbs {}",
                    -out
                );
            }
        }
        for e in g.live_edges() {
            assert!(flow[e].unsigned_abs() <= lim.cert_cap());
        }
    }

    #[test]
    fn chain_without_batches_is_its_first_flow() {
        let g = hypercube(6);
        let lim = limits(&g, Rational::new(1, 2), Constants::paper());
        let s: VertexSet = [0].into();
        let mut w = WorstCaseFlow::start(g.clone(), &s, 1, &lim).unwrap();
        let theta = WorstCaseFlow::theta_for(1, lim.params.k);
        let mut fb = FlowBacktracker::initialize(&g, &s, theta, &lim).unwrap();
        assert_eq!(w.flow(), fb.flow());
        assert_level_contract(&mut w, &lim, &VertexSet::new());
    }

    #[test]
    fn chain_covers_lost_flow_after_a_batch() {
        let g = hypercube(6);
        let lim = limits(&g, Rational::new(1, 2), Constants::paper());
        let s: VertexSet = [0, 21].into();
        let mut w = WorstCaseFlow::start(g.clone(), &s, 1, &lim).unwrap();
        // kill half of the edges at vertex 0
        let p: Vec<EdgeId> = g.incident(0).take(3).collect();
        w.apply_batch(&p, &[42].into(), &lim).unwrap();
        assert_eq!(w.chain_len(), 2, "vertex 0 gave up and got a second backtracker");
        assert!(w.take_requests().is_empty());
        assert_level_contract(&mut w, &lim, &VertexSet::new());
        let q: Vec<EdgeId> = g.incident(21).take(2).collect();
        w.apply_batch(&q, &VertexSet::new(), &lim).unwrap();
        assert_level_contract(&mut w, &lim, &VertexSet::new());
    }

    #[test]
    fn full_budget_on_q5_meets_every_check() {
        let g = hypercube(5);
        let lim = limits(&g, Rational::new(1, 4), Constants::desk());
        let mut pr = WorstCasePruner::new(&g, lim).unwrap();
        let mut e = 0;
        for _ in 0..lim.deletion_budget() {
            while !pr.current().is_edge_alive(e) {
                e = (e + 1) % g.m();
            }
            let d = pr.process_deletion(e).unwrap();
            assert!(d.op_count <= lim.work_budget());
            assert!(pr.events().last().unwrap().cert_ok);
            e = (e + 5) % g.m();
        }
        assert!(pr.stats().swaps > 0);
        assert!(pr.stats().inline_rebuilds > 0);
    }

    #[test]
    fn barbell_is_rejected() {
        let mut e = Vec::new();
        for side in [0, 8] {
            for u in 0..8 {
                for v in u + 1..8 {
                    e.push((side + u, side + v));
                }
            }
        }
        e.push((0, 8));
        let g = DecGraph::new(16, &e).unwrap();
        let lim = limits(&g, Rational::new(1, 4), Constants::desk());
        assert!(matches!(
            WorstCasePruner::new(&g, lim),
            Err(PrunerError::NotAnExpander { .. })
        ));
    }
}
