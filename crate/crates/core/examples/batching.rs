//! The batch hierarchy over 20 deletions with k = 4.
use expander_pruning::batching::BatchState;

fn main() {
    let mut st = BatchState::new(4, 6, 1000);
    for e in 0..20 {
        let i = st.insert_deletion(e).unwrap();
        println!("t={e:2} rebuild level {i} sizes {:?}", st.sizes());
    }
}
