//! Dynamic forest: path minimum and path update on a chain of arcs.
use expander_pruning::linkcut::DynForest;

fn main() {
    // arc i enters vertex i+1 from vertex i, so 0 is the root
    let arcs: Vec<_> = (0..5).map(|i| (i, i + 1)).collect();
    let mut f = DynForest::new(6, arcs, vec![7, 3, 9, 4, 8]);
    for a in 0..5 {
        f.insert(a).unwrap();
    }
    println!("root of 5: {}", f.find_root(5));
    let min = f.find_min(5).unwrap();
    println!("min arc on root..5 path: {min} (value {})", f.read_current_flow(min));
    f.update_flow(5, -3).unwrap();
    println!("after subtracting 3: {:?}", f.flows());
    println!("subtracting 1 more: {:?}", f.update_flow(5, -1));
    f.delete(2).unwrap();
    println!("cut arc 2; root of 5 is now {}", f.find_root(5));
}
