//! Amortized pruner on Q5 under random deletions.
use expander_pruning::amortized::{AmortizedPruner, DeletionPruner};
use expander_pruning::harness::{hypercube, Adversary, AdversaryKind};
use expander_pruning::preset::{Constants, Limits};
use expander_pruning::{Params, Rational};

fn main() {
    let g = hypercube(5);
    let limits = Limits::new(
        Params::new(g.n(), g.m(), Rational::new(1, 5)).unwrap(),
        Constants::desk(),
    );
    let mut pr = AmortizedPruner::new(&g, limits).unwrap();
    let mut adv = Adversary::new(AdversaryKind::Random, 1);
    for _ in 0..limits.deletion_budget() {
        let e = adv.next(pr.current(), pr.remainder(), pr.pruned()).unwrap();
        let d = pr.process_deletion(e).unwrap();
        println!(
            "delete {e:2}: pruned {:2} ops {:5} cert ok {}",
            d.pruned.len(),
            d.op_count,
            pr.events().last().unwrap().cert_ok
        );
    }
    println!("{} of {} vertices pruned; {:?}", pr.pruned().len(), g.n(), pr.stats());
}
