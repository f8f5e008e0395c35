use expander_pruning::batchcert::BatchCertState;
use expander_pruning::certificate::{compose, verify_certificate, FlowCertificate};
use expander_pruning::harness::{self, hypercube, random_regular, AdversaryKind, Checks, Experiment, PrunerKind};
use expander_pruning::linkcut::DynForest;
use expander_pruning::oracle::exact_max_flow;
use expander_pruning::preset::{Constants, Limits, PresetName};
use expander_pruning::{DecGraph, Params, Rational, VertexSet};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Max-flow certificate routing `gs·d(v)` out of each source into sinks
/// `gt·d(v)`, or `None` if it does not fit under capacity `cap`.
fn flow_cert(g: &DecGraph, sources: &VertexSet, gs: u64, gt: u64, cap: u64) -> Option<FlowCertificate> {
    let ids: Vec<_> = g.live_edges().collect();
    let arcs: Vec<_> = ids.iter().map(|&e| (g.endpoints(e).0, g.endpoints(e).1, cap)).collect();
    let alive = |v| g.is_vertex_alive(v);
    let s: Vec<u64> = (0..g.n())
        .map(|v| if sources.contains(&v) { gs * g.d(v) } else { 0 })
        .collect();
    let t: Vec<u64> = (0..g.n())
        .map(|v| {
            if !sources.contains(&v) && alive(v) {
                gt * g.d(v)
            } else {
                0
            }
        })
        .collect();
    let mf = exact_max_flow(g.n(), &arcs, &s, &t);
    if mf.value < s.iter().sum::<u64>() {
        return None;
    }
    let mut flow = vec![0; g.m()];
    for (i, &e) in ids.iter().enumerate() {
        flow[e] = mf.flow[i];
    }
    Some(FlowCertificate {
        sources: sources.clone(),
        flow,
        gamma_source: Rational::from_integer(gs),
        gamma_sink: Rational::from_integer(gt),
        c: Rational::from_integer(cap),
        scale: 1,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn update_then_undo_restores_flows(
        vals in proptest::collection::vec(0i64..10, 15),
        u in 0usize..16,
        delta in 0i64..50,
    ) {
        // arc i joins vertex i + 1 below vertex (i + 1) / 2: a binary tree rooted at 0
        let arcs: Vec<_> = (0..15).map(|i| ((i + 1) / 2, i + 1)).collect();
        let mut f = DynForest::new(16, arcs, vals);
        for a in 0..15 {
            f.insert(a).unwrap();
        }
        let before = f.flows();
        // the root has an empty path, so both calls are no-ops there
        f.update_flow(u, delta).unwrap();
        f.update_flow(u, -delta).unwrap();
        prop_assert_eq!(f.flows(), before);
    }

    #[test]
    fn composed_certificates_verify(seed in 0u64..1000, a in 0usize..12, b in 0usize..12) {
        prop_assume!(a != b);
        let g = random_regular(12, 4, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let first_src: VertexSet = [a].into();
        let first = flow_cert(&g, &first_src, 1, 1, 4);
        prop_assume!(first.is_some());
        let first = first.unwrap();
        let mut rest = g.clone();
        rest.remove_vertices(&first_src);
        let second = flow_cert(&rest, &[b].into(), 2, 1, 4);
        prop_assume!(second.is_some());
        let second = second.unwrap();
        prop_assert!(verify_certificate(&g, &first).ok);
        prop_assert!(verify_certificate(&rest, &second).ok);
        let both = compose(&first, &second).unwrap();
        prop_assert!(verify_certificate(&g, &both).ok, "{:?}", verify_certificate(&g, &both));
    }

    #[test]
    fn cert_state_stays_valid_under_removals(
        layer_pick in 0usize..8,
        picks in proptest::collection::vec(0usize..16, 1..4),
        order in proptest::collection::vec(0usize..1000, 1..40),
    ) {
        let g = hypercube(4);
        let limits = Limits::new(Params::new(16, 32, Rational::new(1, 4)).unwrap(), Constants::desk());
        let mut st = BatchCertState::new(&g, limits);
        let k = st.k();
        let l = 1 + layer_pick % k;
        let mut used = VertexSet::new();
        let sets: Vec<VertexSet> = (l..=k)
            .map(|j| picks.get(j - l).filter(|&&v| used.insert(v)).map(|&v| [v].into()).unwrap_or_default())
            .collect();
        st.reinitialize(l, &sets).unwrap();
        let sigma = limits.params.sigma as i64;
        for x in order {
            let live: Vec<_> = st.graph().live_edges().collect();
            if live.is_empty() {
                break;
            }
            st.remove_edge(live[x % live.len()]).unwrap();
            prop_assert!(st.verify().ok);
            for i in 1..=k {
                for v in st.layer_graph(i).alive_vertices().collect::<Vec<_>>() {
                    if !st.live_sources(i).contains(&v) {
                        prop_assert!(st.absorption_overshoot(i, v) <= g.d(v) as i64 * sigma);
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pruner_runs_keep_budgets_and_replay(
        seed in 0u64..10_000,
        adv in prop_oneof![Just(AdversaryKind::Random), Just(AdversaryKind::BoundaryTargeted), Just(AdversaryKind::VertexDrain)],
        pruner in prop_oneof![Just(PrunerKind::Amortized), Just(PrunerKind::Worstcase)],
        dim in 4usize..=5,
    ) {
        let g = hypercube(dim);
        let exp = Experiment {
            graph: format!("hypercube:{dim}"),
            phi: Rational::new(1, dim as u64),
            preset: PresetName::Desk,
            adversary: adv,
            seed,
            max_deletions: 1000,
            pruner,
            checks: Checks::None,
        };
        let out = harness::run(&exp, &g).unwrap();
        let s = &out.summary;
        prop_assert_eq!(&s.status, "ok");
        prop_assert!(s.recourse_respected && s.work_respected && s.recourse_unit_respected && s.cert_all_ok);
        prop_assert_eq!(s.deletions, s.deletion_budget);
        let mut seen = VertexSet::new();
        for ev in &out.events {
            for &v in &ev.pruned {
                prop_assert!(seen.insert(v));
            }
        }
        prop_assert_eq!(harness::run(&exp, &g).unwrap().events, out.events);
    }
}
