//! Pruning with bounded recourse per deletion and amortized running time.
//!
//! Every deletion first drains edges around the live certificate sources of
//! each layer, then files the deletion into the batching scheme, recomputes
//! batch pruning from the rebuild index, reinitializes the certificate layers
//! from the new proposal sets and finally deletes the edge from the
//! certificate graph.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batchcert::{BatchCertError, BatchCertState};
use crate::batching::{BatchError, BatchState};
use crate::batchprune::{BatchPruner, PruneError};
use crate::dyngraph::{DecGraph, EdgeId, GraphError, VertexId, VertexSet};
use crate::meter::{block_on, Meter};
use crate::oracle::{conductance_exact, VolumeMeasure, MAX_EXHAUSTIVE_N};
use crate::params::Rational;
use crate::preset::{ExcessPolicy, Limits};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrunerError {
    #[error("input graph has conductance {found} below the claimed φ = {claimed}")]
    NotAnExpander { found: Rational, claimed: Rational },
    #[error("edge {0} is not alive in the current graph")]
    DeadEdge(EdgeId),
    #[error("layer {layer} still holds {remaining} unpruned vertices at its rebuild")]
    FullDrain { layer: usize, remaining: usize },
    #[error("deletion pruned {pruned} vertices, recourse budget {budget}")]
    RecourseExceeded { pruned: usize, budget: u64 },
    #[error("background rebuild of level {level} missed its deadline")]
    DeadlineMissed { level: usize },
    #[error("no background rebuild was running for level {level}")]
    NoJob { level: usize },
    #[error("background rebuild of level {level} was computed for different batches")]
    JobInputMismatch { level: usize },
    #[error("remainder differs from V ∖ ⋃(S_i ∪ A_i) at the swap of level {level}")]
    SwapSetMismatch { level: usize },
    #[error(transparent)]
    Batch(#[from] BatchError),
    #[error(transparent)]
    Prune(#[from] PruneError),
    #[error(transparent)]
    Cert(#[from] BatchCertError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl PrunerError {
    /// Short stable name of the failed check, for summaries.
    pub fn name(&self) -> &'static str {
        match self {
            PrunerError::NotAnExpander { .. } => "not_an_expander",
            PrunerError::DeadEdge(_) => "dead_edge",
            PrunerError::FullDrain { .. } => "full_drain",
            PrunerError::RecourseExceeded { .. } => "recourse_budget",
            PrunerError::DeadlineMissed { .. } => "job_deadline",
            PrunerError::NoJob { .. } => "job_missing",
            PrunerError::JobInputMismatch { .. } => "job_input",
            PrunerError::SwapSetMismatch { .. } => "swap_set_equality",
            PrunerError::Batch(BatchError::BudgetExhausted(_)) => "deletion_budget",
            PrunerError::Batch(_) => "batching",
            PrunerError::Prune(PruneError::ExcessBound { .. }) => "level_excess_bound",
            PrunerError::Prune(_) => "batch_prune",
            PrunerError::Cert(BatchCertError::RecourseUnitExceeded { .. }) => "recourse_unit",
            PrunerError::Cert(_) => "certificate",
            PrunerError::Graph(_) => "graph",
        }
    }
}

/// What one deletion did.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneDelta {
    pub pruned: Vec<VertexId>,
    pub op_count: u64,
}

/// Log record of one processed deletion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeletionEvent {
    pub t: u64,
    pub deleted_edge: EdgeId,
    pub rebuild_level: Option<usize>,
    pub pruned: Vec<VertexId>,
    pub op_count: u64,
    pub cert_ok: bool,
    pub drained: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conductance: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_jobs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_spent: Option<u64>,
}

/// Common interface of the two pruners.
pub trait DeletionPruner {
    fn process_deletion(&mut self, e: EdgeId) -> Result<PruneDelta, PrunerError>;
    /// The graph the adversary deletes from.
    fn current(&self) -> &DecGraph;
    /// The graph without the pruned vertices.
    fn remainder(&self) -> &DecGraph;
    fn pruned(&self) -> &VertexSet;
    fn events(&self) -> &[DeletionEvent];
    fn limits(&self) -> &Limits;
    fn batches(&self) -> &BatchState;
    fn verify_certificate(&mut self) -> bool;
    fn cert_state(&self) -> &BatchCertState;
}

/// Reject graphs that exhaustive search shows are not φ-expanders.
pub fn check_expander(g: &DecGraph, phi: Rational) -> Result<(), PrunerError> {
    if g.n() > MAX_EXHAUSTIVE_N {
        return Ok(());
    }
    let report = conductance_exact(g, VolumeMeasure::InitialD).expect("size checked");
    match report.conductance {
        Some(found) if found < phi => Err(PrunerError::NotAnExpander { found, claimed: phi }),
        _ => Ok(()),
    }
}

/// Sets S′_l..S′_k handed to the certificate after batch pruning reran from
/// `l`, with S′_k taking every level at or above k.
pub(crate) fn layer_sets(batches: &BatchState, l: usize) -> Vec<VertexSet> {
    let k = batches.k();
    let mut out: Vec<VertexSet> = (l..k).map(|j| batches.s(j).clone()).collect();
    let mut top = VertexSet::new();
    for j in k..=batches.lambda() {
        top.extend(batches.s(j).iter().copied());
    }
    out.push(top);
    out
}

/// Feed up to `eta` live edges at the sources of layer `i` to the
/// certificate, in ascending (vertex, edge) order. Edges into S_1..S_{i−1}
/// are skipped. Returns the pruned vertices and the number of edges drained.
pub(crate) fn drain_layer(
    cert: &mut BatchCertState,
    i: usize,
    eta: u64,
    pruned: &mut Vec<VertexId>,
) -> Result<u64, BatchCertError> {
    let lower: VertexSet = (1..i).flat_map(|j| cert.layer_set(j).iter().copied()).collect();
    let mut todo = Vec::new();
    for &v in cert.live_sources(i) {
        for e in cert.graph().incident(v) {
            if !lower.contains(&cert.graph().other(e, v)) {
                todo.push(e);
            }
        }
    }
    let mut done = 0;
    for e in todo {
        if done >= eta {
            break;
        }
        if cert.graph().is_edge_alive(e) {
            pruned.extend(cert.remove_edge(e)?);
            done += 1;
        }
    }
    Ok(done)
}

/// Check that layers `l..=k` hold no live sources before they are replaced.
/// Under the lenient policy leftover sources are pruned instead.
pub(crate) fn enforce_drain(
    cert: &mut BatchCertState,
    l: usize,
    policy: ExcessPolicy,
    pruned: &mut Vec<VertexId>,
) -> Result<(), PrunerError> {
    for i in l..=cert.k() {
        let left: Vec<VertexId> = cert.live_sources(i).iter().copied().collect();
        if left.is_empty() {
            continue;
        }
        match policy {
            ExcessPolicy::Fail => {
                return Err(PrunerError::FullDrain {
                    layer: i,
                    remaining: left.len(),
                })
            }
            ExcessPolicy::Prune => {
                for v in left {
                    pruned.extend(cert.force_prune(v)?);
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmortizedStats {
    /// rebuilds whose outgoing layers were not fully drained
    pub undrained_rebuilds: u64,
    pub max_recourse: usize,
    pub max_op_count: u64,
    pub total_ops: u64,
}

pub struct AmortizedPruner {
    limits: Limits,
    current: DecGraph,
    batches: BatchState,
    prune: BatchPruner,
    cert: BatchCertState,
    eta: u64,
    meter: Meter,
    events: Vec<DeletionEvent>,
    stats: AmortizedStats,
}

impl AmortizedPruner {
    pub fn new(g: &DecGraph, limits: Limits) -> Result<Self, PrunerError> {
        check_expander(g, limits.params.phi)?;
        let p = &limits.params;
        let meter = Meter::unlimited();
        let mut cert = BatchCertState::new(g, limits);
        cert.set_meter(meter.clone());
        let mut prune = BatchPruner::new(g, limits);
        prune.set_strict(limits.consts.excess_policy == ExcessPolicy::Fail);
        Ok(AmortizedPruner {
            limits,
            current: g.clone(),
            batches: BatchState::new(p.k, p.lambda, limits.deletion_budget()),
            prune,
            cert,
            eta: limits.drain_amortized(),
            meter,
            events: Vec::new(),
            stats: AmortizedStats::default(),
        })
    }

    /// Override the per-layer drain rate.
    pub fn set_drain_rate(&mut self, eta: u64) {
        self.eta = eta;
    }

    pub fn stats(&self) -> &AmortizedStats {
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
}

impl DeletionPruner for AmortizedPruner {
    fn process_deletion(&mut self, e: EdgeId) -> Result<PruneDelta, PrunerError> {
        if e >= self.current.m() || !self.current.is_edge_alive(e) {
            return Err(PrunerError::DeadEdge(e));
        }
        let start = self.meter.total();
        let k = self.limits.params.k;
        let mut pruned = Vec::new();
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
        block_on(self.prune.run_from_with(i, &mut self.batches, &self.meter))?;
        let sets = layer_sets(&self.batches, i);
        pruned.extend(self.cert.reinitialize(i, &sets)?);
        pruned.extend(self.cert.remove_edge(e)?);
        self.current.delete_edge(e)?;

        let op_count = self.meter.total() - start;
        let budget = self.limits.recourse_budget();
        if pruned.len() as u64 > budget {
            return Err(PrunerError::RecourseExceeded {
                pruned: pruned.len(),
                budget,
            });
        }
        self.stats.max_recourse = self.stats.max_recourse.max(pruned.len());
        self.stats.max_op_count = self.stats.max_op_count.max(op_count);
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
            active_jobs: None,
            steps_spent: None,
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

/// Record the remainder conductance in the last event (small graphs only).
pub fn annotate_conductance(events: &mut [DeletionEvent], remainder: &DecGraph) {
    if remainder.n() > MAX_EXHAUSTIVE_N {
        return;
    }
    if let (Some(last), Ok(r)) = (events.last_mut(), conductance_exact(remainder, VolumeMeasure::InitialD)) {
        last.conductance = r.conductance;
    }
}
