//! Delayed pruning: a source on a sparse graph loses its flow and is pruned.
use expander_pruning::batchcert::BatchCertState;
use expander_pruning::preset::{Constants, Limits};
use expander_pruning::{DecGraph, Params, Rational};

fn main() {
    let g = DecGraph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 2), (1, 3), (2, 4)]).unwrap();
    let limits = Limits::new(
        Params::new(g.n(), g.m(), Rational::from_integer(1)).unwrap(),
        Constants::desk(),
    );
    let mut st = BatchCertState::new(&g, limits);
    let k = st.k();
    st.reinitialize(k, &[[0].into()]).unwrap();
    println!("layer {k} source {{0}}; certificate ok: {}", st.verify().ok);
    for e in [0, 4] {
        let pruned = st.remove_edge(e).unwrap();
        println!("removed edge {e}: pruned {pruned:?}, counter q(0) = {}", st.q(k, 0));
    }
    let ok = st.verify().ok;
    println!("S_0 = {:?}; certificate ok: {ok}", st.pruned());
}
