//! Local Dinitz on a path: a unit source flows to the far sink.
use expander_pruning::localflow::{dinitz_local, FlowState};
use expander_pruning::DecGraph;

fn main() {
    let g = DecGraph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
    let mut st = FlowState::new(&g, 3, 1);
    st.s[0] = 3;
    st.t[4] = 2;
    st.t[2] = 1;
    let rep = dinitz_local(&g, &mut st, 8).unwrap();
    println!("routed {} in {} rounds ({} ops)", rep.routed, rep.rounds, rep.ops);
    println!("flows {:?}, leftover excess {}", st.flows(), st.total_excess(&g));

    let mut over = FlowState::new(&g, 3, 1);
    over.s[0] = 5;
    over.t[4] = 1;
    println!(
        "source above total sink: {:?}",
        dinitz_local(&g, &mut over, 8).unwrap_err()
    );
}
