//! Decremental graph basics: frozen degrees survive deletions.
use expander_pruning::harness::hypercube;
use expander_pruning::VertexSet;

fn main() {
    let mut g = hypercube(3);
    println!("Q3: n={} m={}", g.n(), g.m());
    g.delete_edge(0).unwrap();
    let (u, v) = g.endpoints(0);
    println!(
        "deleted edge 0 = ({u},{v}); d({u})={} cur_deg({u})={}",
        g.d(u),
        g.cur_deg(u)
    );
    let side: VertexSet = [0, 1, 2, 3].into();
    println!(
        "cut edges of {{0,1,2,3}}: {}, vol_d = {}",
        g.cut_count(&side),
        g.volume_d(&side)
    );
    let dropped = g.remove_vertices(&side);
    println!(
        "removed 4 vertices and {} edges; {} live edges left",
        dropped.len(),
        g.live_edge_count()
    );
    println!("deleting edge 0 again: {:?}", g.delete_edge(0));
}
