//! Exhaustive oracles: conductance of small graphs and an exact max flow.
use expander_pruning::harness::{barbell, complete, hypercube};
use expander_pruning::oracle::{conductance_exact, exact_max_flow, VolumeMeasure};

fn main() {
    for (name, g) in [
        ("K8", complete(8)),
        ("Q4", hypercube(4)),
        ("barbell 5+5", barbell(5, 5, 1).unwrap()),
    ] {
        let r = conductance_exact(&g, VolumeMeasure::Current).unwrap();
        println!("{name}: conductance {:?}, best cut {:?}", r.conductance, r.best_cut);
    }
    let g = hypercube(3);
    let arcs: Vec<_> = g.edges().iter().map(|&(a, b)| (a, b, 1)).collect();
    let mut s = vec![0; 8];
    let mut t = vec![0; 8];
    s[0] = 3;
    t[7] = 3;
    println!(
        "Q3 corner to corner max flow: {}",
        exact_max_flow(8, &arcs, &s, &t).value
    );
}
