//! One batch-pruning call on Q5 after deleting the edges of a vertex.
use expander_pruning::batchprune::BatchPruner;
use expander_pruning::harness::hypercube;
use expander_pruning::preset::{Constants, Limits};
use expander_pruning::{Params, Rational, VertexSet};

fn main() {
    let g = hypercube(5);
    let limits = Limits::new(
        Params::new(g.n(), g.m(), Rational::new(1, 5)).unwrap(),
        Constants::desk(),
    );
    let mut bp = BatchPruner::new(&g, limits);
    let batch: Vec<_> = g.incident(0).take(2).collect();
    let prop = bp.run_level(1, &batch, &VertexSet::new()).unwrap();
    let rep = bp.report(1);
    println!("deleted {:?}; proposal has {} vertices", batch, prop.len());
    println!(
        "excess after flow {}, after level {}",
        rep.excess_after_flow, rep.excess_after_level
    );
    if let Some(c) = bp.exp_cert_report() {
        println!("expansion certificate ok: {}", c.ok);
    }
}
