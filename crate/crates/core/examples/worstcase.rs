//! Worst-case pruner on Q6: per-update work against the budget W.
use expander_pruning::amortized::DeletionPruner;
use expander_pruning::harness::{hypercube, Adversary, AdversaryKind};
use expander_pruning::preset::{Constants, Limits};
use expander_pruning::worstcase::WorstCasePruner;
use expander_pruning::{Params, Rational};

fn main() {
    let g = hypercube(6);
    let limits = Limits::new(
        Params::new(g.n(), g.m(), Rational::new(1, 6)).unwrap(),
        Constants::desk(),
    );
    let mut pr = WorstCasePruner::new(&g, limits).unwrap();
    let mut adv = Adversary::new(AdversaryKind::BoundaryTargeted, 2);
    let mut worst = 0;
    for _ in 0..limits.deletion_budget() {
        let e = adv.next(pr.current(), pr.remainder(), pr.pruned()).unwrap();
        let d = pr.process_deletion(e).unwrap();
        worst = worst.max(d.op_count);
        println!(
            "delete {e:3}: pruned {:2} ops {:6} jobs {:?}",
            d.pruned.len(),
            d.op_count,
            pr.active_jobs()
        );
    }
    println!("max op_count {worst} vs W {}; {:?}", limits.work_budget(), pr.stats());
}
