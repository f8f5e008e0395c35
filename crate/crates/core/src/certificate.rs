//! Flow certificates: checking, composition, and the expansion they imply.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dyngraph::{DecGraph, EdgeId, VertexId, VertexSet};
use crate::params::{ceil_div_phi, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertError {
    #[error("second certificate's source rate {got} must equal {expected}")]
    GammaMismatch { expected: Rational, got: Rational },
    #[error("certificates use different flow scales ({0} vs {1})")]
    ScaleMismatch(u64, u64),
    #[error("source sets overlap at vertex {0}")]
    Overlap(VertexId),
    #[error("flow vectors have different lengths")]
    LengthMismatch,
    #[error("implied expansion needs {0}")]
    Precondition(&'static str),
}

/// A flow routing `gamma_source·d(v)` out of every `v ∈ sources` into sinks of
/// capacity `gamma_sink·d(t)` with per-edge congestion at most `c`. All three
/// are unscaled; the flow values are multiplied by `scale`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowCertificate {
    pub sources: VertexSet,
    /// signed net flow per edge, positive along the stored orientation
    pub flow: Vec<i64>,
    pub gamma_source: Rational,
    pub gamma_sink: Rational,
    pub c: Rational,
    pub scale: u64,
}

impl FlowCertificate {
    pub fn empty(m: usize, gamma_source: Rational, scale: u64) -> Self {
        FlowCertificate {
            sources: VertexSet::new(),
            flow: vec![0; m],
            gamma_source,
            gamma_sink: Rational::from_integer(0),
            c: Rational::from_integer(0),
            scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Capacity {
        edge: EdgeId,
        flow: i64,
        limit: Rational,
    },
    Source {
        vertex: VertexId,
        net_out: i64,
        required: Rational,
    },
    Sink {
        vertex: VertexId,
        absorbed: i64,
        allowed: Rational,
    },
    DeadSource {
        vertex: VertexId,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl CertReport {
    fn from(violations: Vec<Violation>) -> Self {
        CertReport {
            ok: violations.is_empty(),
            violations,
        }
    }
}

fn scaled(r: Rational, x: u64, scale: u64) -> Rational {
    r * Rational::from_integer(x * scale)
}

fn le(x: i64, bound: Rational) -> bool {
    x <= 0 || Rational::from_integer(x as u64) <= bound
}

fn ge(x: i64, bound: Rational) -> bool {
    x >= 0 && Rational::from_integer(x as u64) >= bound
}

/// Net flow out of each live vertex over live edges.
fn net_out(g: &DecGraph, flow: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; g.n()];
    for e in g.live_edges() {
        let (a, b) = g.endpoints(e);
        out[a] += flow[e];
        out[b] -= flow[e];
    }
    out
}

/// Check the certificate conditions on the live part of `g`, using frozen
/// degrees `d`.
pub fn verify_certificate(g: &DecGraph, cert: &FlowCertificate) -> CertReport {
    let mut v = Vec::new();
    let limit = cert.c * Rational::from_integer(cert.scale);
    for e in g.live_edges() {
        if !le(cert.flow[e].abs(), limit) {
            v.push(Violation::Capacity {
                edge: e,
                flow: cert.flow[e],
                limit,
            });
        }
    }
    let out = net_out(g, &cert.flow);
    for &s in &cert.sources {
        if !g.is_vertex_alive(s) {
            v.push(Violation::DeadSource { vertex: s });
            continue;
        }
        let required = scaled(cert.gamma_source, g.d(s), cert.scale);
        if !ge(out[s], required) {
            v.push(Violation::Source {
                vertex: s,
                net_out: out[s],
                required,
            });
        }
    }
    for t in g.alive_vertices() {
        if cert.sources.contains(&t) {
            continue;
        }
        let allowed = scaled(cert.gamma_sink, g.d(t), cert.scale);
        if !le(-out[t], allowed) {
            v.push(Violation::Sink {
                vertex: t,
                absorbed: -out[t],
                allowed,
            });
        }
    }
    CertReport::from(v)
}

/// The expansion guaranteed for the whole graph by a certificate whose
/// non-source part is an `alpha`-expander: `1/(3(c+δ))`.
pub fn implied_expansion(cert: &FlowCertificate, alpha: Rational, delta: Rational) -> Result<Rational, CertError> {
    let one = Rational::from_integer(1);
    if delta < one {
        return Err(CertError::Precondition("delta ≥ 1"));
    }
    if cert.gamma_source * delta < cert.gamma_sink {
        return Err(CertError::Precondition("gamma_source ≥ gamma_sink/delta"));
    }
    if *alpha.numer() == 0 || cert.c * alpha < Rational::from_integer(3) {
        return Err(CertError::Precondition("c ≥ 3/alpha"));
    }
    Ok(one / (Rational::from_integer(3) * (cert.c + delta)))
}

/// Combine a certificate on G with one on G minus its source set. The second
/// certificate's flow must vanish on edges touching the first source set.
pub fn compose(first: &FlowCertificate, second: &FlowCertificate) -> Result<FlowCertificate, CertError> {
    if first.scale != second.scale {
        return Err(CertError::ScaleMismatch(first.scale, second.scale));
    }
    if first.flow.len() != second.flow.len() {
        return Err(CertError::LengthMismatch);
    }
    let expected = first.gamma_source + first.gamma_sink;
    if second.sources.is_empty() && second.flow.iter().all(|&f| f == 0) {
        // the empty certificate composes with anything
    } else if second.gamma_source != expected {
        return Err(CertError::GammaMismatch {
            expected,
            got: second.gamma_source,
        });
    }
    if let Some(&v) = first.sources.intersection(&second.sources).next() {
        return Err(CertError::Overlap(v));
    }
    Ok(FlowCertificate {
        sources: first.sources.union(&second.sources).copied().collect(),
        flow: first.flow.iter().zip(&second.flow).map(|(a, b)| a + b).collect(),
        gamma_source: first.gamma_source,
        gamma_sink: first.gamma_sink + second.gamma_sink,
        c: first.c + second.c,
        scale: first.scale,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpCertReport {
    pub ok: bool,
    pub max_excess: u64,
    pub capacity_violations: usize,
}

/// Check that `flow` certifies expansion of `G′ = G[V∖A]∖B`, where G is the
/// full edge set of `g0`: on G′ it routes source `⌈8σ/φ⌉` per lost incident
/// edge into sinks `2·d(v)·σ` under capacity `⌈32σ/φ⌉` with no excess.
pub fn verify_exp_cert(
    g0: &DecGraph,
    a: &VertexSet,
    b: &BTreeSet<EdgeId>,
    flow: &[i64],
    phi: Rational,
    scale: u64,
) -> ExpCertReport {
    let n = g0.n();
    let unit = ceil_div_phi(8 * scale, phi) as i64;
    let cap = ceil_div_phi(32 * scale, phi) as i64;
    let mut lost = vec![0i64; n];
    let mut out = vec![0i64; n];
    let mut capacity_violations = 0;
    for (e, &(x, y)) in g0.edges().iter().enumerate() {
        let kept = !a.contains(&x) && !a.contains(&y) && !b.contains(&e);
        if kept {
            out[x] += flow[e];
            out[y] -= flow[e];
            if flow[e].abs() > cap {
                capacity_violations += 1;
            }
        } else {
            lost[x] += 1;
            lost[y] += 1;
        }
    }
    let mut max_excess = 0u64;
    for v in (0..n).filter(|v| !a.contains(v)) {
        let x = unit * lost[v] - 2 * g0.d(v) as i64 * scale as i64 - out[v];
        max_excess = max_excess.max(x.max(0) as u64);
    }
    ExpCertReport {
        ok: max_excess == 0 && capacity_violations == 0,
        max_excess,
        capacity_violations,
    }
}
