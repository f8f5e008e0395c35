//! A full experiment: run, write the outputs, then verify the log by replay.
use expander_pruning::harness::{self, AdversaryKind, Checks, Experiment, PrunerKind};
use expander_pruning::preset::PresetName;
use expander_pruning::Rational;

fn main() {
    let g = harness::hypercube(4);
    let exp = Experiment {
        graph: "hypercube:4".into(),
        phi: Rational::new(1, 4),
        preset: PresetName::Desk,
        adversary: AdversaryKind::VertexDrain,
        seed: 5,
        max_deletions: 4,
        pruner: PrunerKind::Worstcase,
        checks: Checks::OracleSmall,
    };
    let out = harness::run(&exp, &g).unwrap();
    let dir = std::env::temp_dir().join("pruning-example");
    harness::write_outputs(&out, &g, &dir).unwrap();
    println!("wrote {}", dir.display());
    println!("{:#?}", out.summary);
    let rep = harness::verify(&exp, &g, &out.events).unwrap();
    println!("verify: {} events, pass = {}", rep.checked, rep.pass());
}
