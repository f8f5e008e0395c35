//! Experiment plumbing: graph generators, the text graph format, deletion
//! adversaries, runs with JSONL/CSV output, and log verification by replay.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amortized::{AmortizedPruner, DeletionEvent, DeletionPruner, PrunerError};
use crate::batching::BatchState;
use crate::dyngraph::{DecGraph, EdgeId, GraphError, VertexId, VertexSet};
use crate::oracle::{conductance_exact, VolumeMeasure, MAX_EXHAUSTIVE_N};
use crate::params::{ParamError, Params, Rational};
use crate::preset::{Constants, Limits, PresetName};
use crate::worstcase::WorstCasePruner;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("bad graph kind {0:?}, expected e.g. hypercube:4")]
    BadSpec(String),
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
    #[error("graph file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("bad rational {0:?}, expected NUM/DEN")]
    BadRational(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Pruner(#[from] PrunerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Generator name and parameters, written `kind:p1:p2...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    Complete {
        n: usize,
    },
    Hypercube {
        d: usize,
    },
    RandomRegular {
        n: usize,
        d: usize,
    },
    /// two cliques joined by a path with `bridge` edges
    Barbell {
        a: usize,
        b: usize,
        bridge: usize,
    },
}

impl FromStr for GraphKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HarnessError::BadSpec(s.to_string());
        let mut parts = s.split(':');
        let kind = parts.next().ok_or_else(bad)?;
        let nums: Vec<usize> = parts.map(|p| p.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        match (kind, nums.as_slice()) {
            ("complete", &[n]) => Ok(GraphKind::Complete { n }),
            ("hypercube", &[d]) => Ok(GraphKind::Hypercube { d }),
            ("random_regular", &[n, d]) => Ok(GraphKind::RandomRegular { n, d }),
            ("barbell", &[a, b, bridge]) => Ok(GraphKind::Barbell { a, b, bridge }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphKind::Complete { n } => write!(f, "complete:{n}"),
            GraphKind::Hypercube { d } => write!(f, "hypercube:{d}"),
            GraphKind::RandomRegular { n, d } => write!(f, "random_regular:{n}:{d}"),
            GraphKind::Barbell { a, b, bridge } => write!(f, "barbell:{a}:{b}:{bridge}"),
        }
    }
}

pub fn complete(n: usize) -> DecGraph {
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            e.push((u, v));
        }
    }
    DecGraph::new(n, &e).expect("valid edges")
}

pub fn hypercube(d: usize) -> DecGraph {
    let n = 1usize << d;
    let mut e = Vec::new();
    for u in 0..n {
        for b in 0..d {
            let v = u ^ (1 << b);
            if u < v {
                e.push((u, v));
            }
        }
    }
    DecGraph::new(n, &e).expect("valid edges")
}

/// Cliques on `a` and `b` vertices whose first vertices are joined by a path
/// of `bridge` edges.
pub fn barbell(a: usize, b: usize, bridge: usize) -> Result<DecGraph, HarnessError> {
    if a < 2 || b < 2 || bridge == 0 {
        return Err(HarnessError::Infeasible(
            "barbell needs cliques of size ≥ 2 and a bridge".into(),
        ));
    }
    let n = a + b + bridge - 1;
    let mut e = Vec::new();
    for (base, size) in [(0, a), (a, b)] {
        for u in 0..size {
            for v in u + 1..size {
                e.push((base + u, base + v));
            }
        }
    }
    let mut prev = 0;
    for j in 0..bridge {
        let next = if j + 1 == bridge { a } else { a + b + j };
        e.push((prev, next));
        prev = next;
    }
    Ok(DecGraph::new(n, &e)?)
}

/// Simple `d`-regular graph from the configuration model, retrying whole
/// pairings until one has no self-loops or repeated edges.
pub fn random_regular(n: usize, d: usize, rng: &mut impl Rng) -> Result<DecGraph, HarnessError> {
    if (n * d) % 2 == 1 || d >= n {
        return Err(HarnessError::Infeasible(format!(
            "no simple {d}-regular graph on {n} vertices"
        )));
    }
    let mut stubs: Vec<VertexId> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    for _ in 0..10_000 {
        stubs.shuffle(rng);
        let mut edges: Vec<(VertexId, VertexId)> = stubs.chunks(2).map(|p| (p[0].min(p[1]), p[0].max(p[1]))).collect();
        if edges.iter().any(|&(u, v)| u == v) {
            continue;
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        return Ok(DecGraph::new(n, &edges)?);
    }
    Err(HarnessError::Infeasible(
        "configuration model kept producing multigraphs".into(),
    ))
}

/// Build the graph for `kind`; only `random_regular` uses the seed.
pub fn generate(kind: GraphKind, seed: u64) -> Result<DecGraph, HarnessError> {
    match kind {
        GraphKind::Complete { n } => Ok(complete(n)),
        GraphKind::Hypercube { d } => Ok(hypercube(d)),
        GraphKind::RandomRegular { n, d } => random_regular(n, d, &mut ChaCha8Rng::seed_from_u64(seed)),
        GraphKind::Barbell { a, b, bridge } => barbell(a, b, bridge),
    }
}

/// Write `g` as a header line `n m` and one line `u v` per edge.
pub fn write_graph(g: &DecGraph, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{} {}", g.n(), g.m())?;
    for &(u, v) in g.edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

pub fn read_graph(r: impl BufRead) -> Result<DecGraph, HarnessError> {
    let mut lines = r
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
    let pair = |line: usize, s: &str| -> Result<(usize, usize), HarnessError> {
        let parse = |t: Option<&str>| t.and_then(|t| t.parse().ok());
        let mut it = s.split_whitespace();
        match (parse(it.next()), parse(it.next()), it.next()) {
            (Some(a), Some(b), None) => Ok((a, b)),
            _ => Err(HarnessError::Parse {
                line,
                msg: format!("expected two integers, got {s:?}"),
            }),
        }
    };
    let (i, header) = lines.next().ok_or(HarnessError::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let (n, m) = pair(i + 1, &header?)?;
    let mut edges = Vec::with_capacity(m);
    for (i, l) in lines {
        edges.push(pair(i + 1, &l?)?);
    }
    if edges.len() != m {
        return Err(HarnessError::Parse {
            line: 1,
            msg: format!("header says {m} edges, found {}", edges.len()),
        });
    }
    Ok(DecGraph::new(n, &edges)?)
}

pub fn parse_rational(s: &str) -> Result<Rational, HarnessError> {
    let bad = || HarnessError::BadRational(s.to_string());
    let (p, q) = s.split_once('/').ok_or_else(bad)?;
    let p: u64 = p.trim().parse().map_err(|_| bad())?;
    let q: u64 = q.trim().parse().map_err(|_| bad())?;
    if q == 0 {
        return Err(bad());
    }
    Ok(Rational::new(p, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum AdversaryKind {
    /// uniform live edge
    Random,
    /// live edges of the remainder next to the pruned set first
    BoundaryTargeted,
    /// every edge of one vertex, then the next vertex
    VertexDrain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum PrunerKind {
    Amortized,
    Worstcase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Checks {
    /// the certificate check only (it runs on every step regardless)
    CertEveryStep,
    /// also the exhaustive conductance of the remainder (initial degrees) when n ≤ 20
    OracleSmall,
    None,
}

/// Deletion sequence generator driven by the experiment seed.
pub struct Adversary {
    kind: AdversaryKind,
    rng: ChaCha8Rng,
    target: Option<VertexId>,
}

impl Adversary {
    pub fn new(kind: AdversaryKind, seed: u64) -> Self {
        Adversary {
            kind,
            rng: ChaCha8Rng::seed_from_u64(seed),
            target: None,
        }
    }

    /// Next edge to delete from `current`, given the remainder and the
    /// pruned set. `None` when no edge is left.
    pub fn next(&mut self, current: &DecGraph, remainder: &DecGraph, pruned: &VertexSet) -> Option<EdgeId> {
        let live: Vec<EdgeId> = current.live_edges().collect();
        if live.is_empty() {
            return None;
        }
        match self.kind {
            AdversaryKind::Random => live.choose(&mut self.rng).copied(),
            AdversaryKind::BoundaryTargeted => {
                let near = |v: VertexId| {
                    current
                        .incident_all(v)
                        .iter()
                        .any(|&f| pruned.contains(&current.other(f, v)))
                };
                let inside: Vec<EdgeId> = live.iter().copied().filter(|&e| remainder.is_edge_alive(e)).collect();
                let boundary: Vec<EdgeId> = inside
                    .iter()
                    .copied()
                    .filter(|&e| {
                        let (u, v) = current.endpoints(e);
                        near(u) || near(v)
                    })
                    .collect();
                let pool = if !boundary.is_empty() {
                    boundary
                } else if !inside.is_empty() {
                    inside
                } else {
                    live
                };
                pool.choose(&mut self.rng).copied()
            }
            AdversaryKind::VertexDrain => loop {
                if let Some(t) = self.target {
                    if let Some(e) = current.incident(t).next() {
                        return Some(e);
                    }
                }
                let with_edges: Vec<VertexId> = current.alive_vertices().filter(|&v| current.cur_deg(v) > 0).collect();
                self.target = Some(*with_edges.choose(&mut self.rng)?);
            },
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Experiment {
    /// generator string, or the graph file the run read
    pub graph: String,
    pub phi: Rational,
    pub preset: PresetName,
    pub adversary: AdversaryKind,
    pub seed: u64,
    pub max_deletions: u64,
    pub pruner: PrunerKind,
    pub checks: Checks,
}

impl Experiment {
    pub fn limits(&self, g: &DecGraph) -> Result<Limits, HarnessError> {
        let params = Params::new(g.n(), g.m(), self.phi)?;
        Ok(Limits::new(params, Constants::named(self.preset)))
    }
}

fn build_pruner(exp: &Experiment, g: &DecGraph) -> Result<Box<dyn DeletionPruner>, HarnessError> {
    let limits = exp.limits(g)?;
    Ok(match exp.pruner {
        PrunerKind::Amortized => Box::new(AmortizedPruner::new(g, limits)?),
        PrunerKind::Worstcase => Box::new(WorstCasePruner::new(g, limits)?),
    })
}

/// One-row result of a run. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub pruner: PrunerKind,
    pub preset: PresetName,
    pub graph: String,
    pub n: usize,
    pub m: usize,
    pub phi: String,
    pub adversary: AdversaryKind,
    pub seed: u64,
    pub deletions_requested: u64,
    pub deletion_budget: u64,
    pub deletions: u64,
    pub pruned_total: usize,
    pub max_recourse: usize,
    pub mean_recourse: f64,
    pub recourse_budget: u64,
    pub recourse_respected: bool,
    pub max_op_count: u64,
    pub mean_op_count: f64,
    pub work_budget: u64,
    pub work_respected: bool,
    pub recourse_unit_budget: u64,
    pub max_unit_recourse: usize,
    pub recourse_unit_respected: bool,
    pub cert_all_ok: bool,
    pub min_conductance: Option<String>,
    pub final_conductance: Option<String>,
    pub expansion_floor: String,
    pub expansion_respected: Option<bool>,
    pub status: String,
    pub error: String,
}

pub struct RunOutput {
    pub experiment: Experiment,
    pub events: Vec<DeletionEvent>,
    pub summary: Summary,
}

fn ratio_str(r: Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Run the experiment on `g`. A pruner error ends the run early and is
/// recorded in the summary's status column.
pub fn run(exp: &Experiment, g: &DecGraph) -> Result<RunOutput, HarnessError> {
    let limits = exp.limits(g)?;
    let mut summary = Summary {
        pruner: exp.pruner,
        preset: exp.preset,
        graph: exp.graph.clone(),
        n: g.n(),
        m: g.m(),
        phi: ratio_str(exp.phi),
        adversary: exp.adversary,
        seed: exp.seed,
        deletions_requested: exp.max_deletions,
        deletion_budget: limits.deletion_budget(),
        deletions: 0,
        pruned_total: 0,
        max_recourse: 0,
        mean_recourse: 0.0,
        recourse_budget: limits.recourse_budget(),
        recourse_respected: true,
        max_op_count: 0,
        mean_op_count: 0.0,
        work_budget: limits.work_budget(),
        work_respected: true,
        recourse_unit_budget: limits.recourse_unit(),
        max_unit_recourse: 0,
        recourse_unit_respected: true,
        cert_all_ok: true,
        min_conductance: None,
        final_conductance: None,
        expansion_floor: ratio_str(limits.expansion_floor()),
        expansion_respected: None,
        status: "ok".into(),
        error: String::new(),
    };
    let mut pruner = match build_pruner(exp, g) {
        Ok(p) => p,
        Err(HarnessError::Pruner(e)) => {
            summary.status = e.name().into();
            summary.error = e.to_string();
            return Ok(RunOutput {
                experiment: exp.clone(),
                events: Vec::new(),
                summary,
            });
        }
        Err(e) => return Err(e),
    };
    let oracle = exp.checks == Checks::OracleSmall && g.n() <= MAX_EXHAUSTIVE_N;
    let mut events = Vec::new();
    let mut min_cond: Option<Rational> = None;
    let mut last_cond: Option<Rational> = None;
    let mut observe = |rem: &DecGraph, ev: Option<&mut DeletionEvent>| {
        if !oracle {
            return;
        }
        let c = conductance_exact(rem, VolumeMeasure::InitialD)
            .ok()
            .and_then(|r| r.conductance);
        if let Some(c) = c {
            min_cond = Some(min_cond.map_or(c, |m: Rational| m.min(c)));
        }
        last_cond = c;
        if let Some(ev) = ev {
            ev.conductance = c;
        }
    };
    observe(pruner.remainder(), None);
    summary.cert_all_ok = pruner.verify_certificate();
    let steps = exp.max_deletions.min(limits.deletion_budget());
    let mut adversary = Adversary::new(exp.adversary, exp.seed);
    for _ in 0..steps {
        let Some(e) = adversary.next(pruner.current(), pruner.remainder(), pruner.pruned()) else {
            break;
        };
        if let Err(err) = pruner.process_deletion(e) {
            summary.status = err.name().into();
            summary.error = err.to_string();
            break;
        }
        let mut ev = pruner.events().last().cloned().expect("event recorded");
        observe(pruner.remainder(), Some(&mut ev));
        events.push(ev);
    }
    let n_ev = events.len().max(1) as f64;
    summary.deletions = events.len() as u64;
    summary.pruned_total = pruner.pruned().len();
    summary.max_recourse = events.iter().map(|e| e.pruned.len()).max().unwrap_or(0);
    summary.mean_recourse = events.iter().map(|e| e.pruned.len()).sum::<usize>() as f64 / n_ev;
    summary.recourse_respected = summary.max_recourse as u64 <= summary.recourse_budget;
    summary.max_op_count = events.iter().map(|e| e.op_count).max().unwrap_or(0);
    summary.mean_op_count = events.iter().map(|e| e.op_count).sum::<u64>() as f64 / n_ev;
    summary.work_respected = summary.max_op_count <= summary.work_budget;
    summary.max_unit_recourse = pruner.cert_state().stats().max_delta;
    summary.recourse_unit_respected = summary.max_unit_recourse as u64 <= summary.recourse_unit_budget;
    summary.cert_all_ok &= events.iter().all(|e| e.cert_ok);
    if oracle {
        summary.min_conductance = min_cond.map(ratio_str);
        summary.final_conductance = last_cond.map(ratio_str);
        summary.expansion_respected = Some(min_cond.is_none_or(|c| c >= limits.expansion_floor()));
    }
    Ok(RunOutput {
        experiment: exp.clone(),
        events,
        summary,
    })
}

/// Write `events.jsonl`, `summary.csv`, `experiment.json` and `graph.txt`.
pub fn write_outputs(out: &RunOutput, g: &DecGraph, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("events.jsonl"))?);
    write_events(&out.events, &mut f)?;
    f.flush()?;
    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.serialize(&out.summary)?;
    w.flush()?;
    std::fs::write(
        dir.join("experiment.json"),
        serde_json::to_string_pretty(&out.experiment)?,
    )?;
    write_graph(
        g,
        std::io::BufWriter::new(std::fs::File::create(dir.join("graph.txt"))?),
    )?;
    Ok(())
}

pub fn write_events(events: &[DeletionEvent], mut w: impl Write) -> Result<(), HarnessError> {
    for ev in events {
        serde_json::to_writer(&mut w, ev)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_events(r: impl BufRead) -> Result<Vec<DeletionEvent>, HarnessError> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Check batch sizes and rebuild spacing in a batching history.
pub fn check_batch_history(batches: &BatchState) -> Vec<String> {
    let k = batches.k();
    let mut out = Vec::new();
    let mut last: Vec<Option<u64>> = vec![None; batches.lambda() + 1];
    for ev in batches.history() {
        for (j, &size) in ev.sizes.iter().enumerate() {
            let level = j + 1;
            let full = if level <= k { 1usize << (k - level) } else { 0 };
            if size != 0 && size != full && (level >= k || size != full / 2) {
                out.push(format!("batch_size: t={} level {level} has size {size}", ev.t));
            }
        }
        for (level, slot) in last.iter_mut().enumerate().skip(ev.rebuild_index) {
            if level + 1 < k {
                if let Some(prev) = *slot {
                    let gap = 1u64 << (k - level - 1);
                    if ev.t < prev + gap {
                        out.push(format!("rebuild_gap: level {level} rebuilt at {} after {prev}", ev.t));
                    }
                }
            }
            *slot = Some(ev.t);
        }
    }
    out
}

/// Replay the logged deletions and compare every record.
pub fn verify(exp: &Experiment, g: &DecGraph, events: &[DeletionEvent]) -> Result<VerifyReport, HarnessError> {
    let mut report = VerifyReport::default();
    let limits = exp.limits(g)?;
    let mut seen = VertexSet::new();
    for ev in events {
        for &v in &ev.pruned {
            if !seen.insert(v) {
                report
                    .failures
                    .push(format!("monotonicity: t={} prunes vertex {v} again", ev.t));
            }
        }
        if ev.pruned.len() as u64 > limits.recourse_budget() {
            report
                .failures
                .push(format!("recourse_budget: t={} pruned {}", ev.t, ev.pruned.len()));
        }
    }
    let mut pruner = match build_pruner(exp, g) {
        Ok(p) => p,
        Err(HarnessError::Pruner(e)) => {
            if !events.is_empty() {
                report.failures.push(format!("replay: {}", e.name()));
            }
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    for ev in events {
        report.checked += 1;
        match pruner.process_deletion(ev.deleted_edge) {
            Err(e) => {
                report.failures.push(format!("replay: t={} {}", ev.t, e.name()));
                break;
            }
            Ok(d) => {
                let replay = pruner.events().last().expect("event recorded");
                if replay.t != ev.t || replay.rebuild_level != ev.rebuild_level {
                    report.failures.push(format!(
                        "rebuild_level: t={} log {:?} replay {:?}",
                        ev.t, ev.rebuild_level, replay.rebuild_level
                    ));
                }
                if d.pruned != ev.pruned {
                    report.failures.push(format!(
                        "pruned_set: t={} log {} vertices, replay {}",
                        ev.t,
                        ev.pruned.len(),
                        d.pruned.len()
                    ));
                }
                if d.op_count != ev.op_count {
                    report.failures.push(format!(
                        "op_count: t={} log {} replay {}",
                        ev.t, ev.op_count, d.op_count
                    ));
                }
                if !replay.cert_ok || !ev.cert_ok {
                    report.failures.push(format!("certificate: t={} failed", ev.t));
                }
            }
        }
    }
    report.failures.extend(check_batch_history(pruner.batches()));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp(graph: &str, pruner: PrunerKind) -> Experiment {
        Experiment {
            graph: graph.into(),
            phi: Rational::new(1, 4),
            preset: PresetName::Desk,
            adversary: AdversaryKind::Random,
            seed: 7,
            max_deletions: 16,
            pruner,
            checks: Checks::None,
        }
    }

    #[test]
    fn generators() {
        let q = hypercube(4);
        assert_eq!((q.n(), q.m()), (16, 32));
        assert!((0..16).all(|v| q.d(v) == 4));
        assert_eq!(complete(6).m(), 15);
        let b = barbell(4, 5, 3).unwrap();
        assert_eq!((b.n(), b.m()), (11, 6 + 10 + 3));
        let r = generate(GraphKind::RandomRegular { n: 30, d: 3 }, 1).unwrap();
        assert!((0..30).all(|v| r.d(v) == 3));
        let mut seen: Vec<_> = r.edges().to_vec();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 45);
        assert!(matches!(
            generate(GraphKind::RandomRegular { n: 7, d: 3 }, 1),
            Err(HarnessError::Infeasible(_))
        ));
    }

    #[test]
    fn spec_strings() {
        for s in ["complete:5", "hypercube:3", "random_regular:10:4", "barbell:3:4:2"] {
            assert_eq!(s.parse::<GraphKind>().unwrap().to_string(), s);
        }
        assert!("hypercube".parse::<GraphKind>().is_err());
        assert!("torus:3".parse::<GraphKind>().is_err());
        assert_eq!(parse_rational("2/8").unwrap(), Rational::new(1, 4));
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn graph_text() {
        let g = barbell(3, 3, 1).unwrap();
        let mut buf = Vec::new();
        write_graph(&g, &mut buf).unwrap();
        assert!(buf.starts_with(b"6 7\n"));
        assert_eq!(read_graph(&buf[..]).unwrap().edges(), g.edges());
        assert!(matches!(
            read_graph(&b"3 2\n0 1\n"[..]),
            Err(HarnessError::Parse { .. })
        ));
        assert!(matches!(
            read_graph(&b"3 1\n0 x\n"[..]),
            Err(HarnessError::Parse { line: 2, .. })
        ));
        assert!(matches!(read_graph(&b"2 1\n0 5\n"[..]), Err(HarnessError::Graph(_))));
    }

    #[test]
    fn vertex_drain_empties_one_vertex_first() {
        let g = hypercube(4);
        let mut adv = Adversary::new(AdversaryKind::VertexDrain, 3);
        let mut cur = g.clone();
        let first = adv.next(&cur, &g, &VertexSet::new()).unwrap();
        let (u, v) = g.endpoints(first);
        cur.delete_edge(first).unwrap();
        let second = adv.next(&cur, &g, &VertexSet::new()).unwrap();
        let (a, b) = g.endpoints(second);
        let target = if a == u || b == u { u } else { v };
        assert!(a == target || b == target);
    }

    #[test]
    fn verify_accepts_own_log_and_rejects_edits() {
        for pruner in [PrunerKind::Amortized, PrunerKind::Worstcase] {
            let g = hypercube(4);
            let e = exp("hypercube:4", pruner);
            let out = run(&e, &g).unwrap();
            assert_eq!(out.summary.status, "ok");
            assert!(!out.events.is_empty());
            assert!(verify(&e, &g, &out.events).unwrap().pass());

            let mut forged = out.events.clone();
            forged[0].op_count += 1;
            let rep = verify(&e, &g, &forged).unwrap();
            assert!(rep.failures.iter().any(|f| f.starts_with("op_count")), "{rep:?}");

            let mut cut = out.events.clone();
            let at = cut.iter().position(|ev| !ev.pruned.is_empty()).unwrap();
            cut[at].pruned.pop();
            let rep = verify(&e, &g, &cut).unwrap();
            assert!(rep.failures.iter().any(|f| f.starts_with("pruned_set")), "{rep:?}");

            let mut twice = out.events.clone();
            let v = twice[at].pruned[0];
            twice.last_mut().unwrap().pruned.push(v);
            let rep = verify(&e, &g, &twice).unwrap();
            assert!(rep.failures.iter().any(|f| f.starts_with("monotonicity")), "{rep:?}");
        }
    }

    #[test]
    fn outputs_on_disk() {
        let g = hypercube(4);
        let e = exp("hypercube:4", PrunerKind::Worstcase);
        let out = run(&e, &g).unwrap();
        let dir = std::env::temp_dir().join(format!("pruning-harness-{}", std::process::id()));
        write_outputs(&out, &g, &dir).unwrap();
        let csv = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
        assert!(csv.starts_with("pruner,preset,graph,n,m,phi,adversary,seed,"));
        let events = read_events(std::io::BufReader::new(
            std::fs::File::open(dir.join("events.jsonl")).unwrap(),
        ))
        .unwrap();
        assert_eq!(events, out.events);
        let back: Experiment =
            serde_json::from_str(&std::fs::read_to_string(dir.join("experiment.json")).unwrap()).unwrap();
        assert_eq!(back, e);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn zero_deletions() {
        let g = hypercube(4);
        let mut e = exp("hypercube:4", PrunerKind::Amortized);
        e.max_deletions = 0;
        e.checks = Checks::OracleSmall;
        let out = run(&e, &g).unwrap();
        assert!(out.events.is_empty());
        assert!(out.summary.cert_all_ok);
        assert_eq!(out.summary.final_conductance.as_deref(), Some("1/4"));
    }

    #[test]
    fn requests_above_the_budget_are_capped() {
        // Q4 has 32 edges and a desk budget of 4, so 50 deletions cannot be run
        let g = hypercube(4);
        let mut e = exp("hypercube:4", PrunerKind::Worstcase);
        e.max_deletions = 50;
        let s = run(&e, &g).unwrap().summary;
        assert_eq!((s.deletions_requested, s.deletions), (50, 4));
        assert!(s.recourse_respected && s.work_respected && s.recourse_unit_respected && s.cert_all_ok);
        assert_eq!(s.status, "ok");
    }

    #[test]
    fn barbell_is_rejected_not_run() {
        let g = barbell(6, 6, 1).unwrap();
        let mut e = exp("barbell:6:6:1", PrunerKind::Amortized);
        e.phi = Rational::new(1, 2);
        let out = run(&e, &g).unwrap();
        assert_eq!(out.summary.status, "not_an_expander");
        assert!(out.events.is_empty());
    }
}
