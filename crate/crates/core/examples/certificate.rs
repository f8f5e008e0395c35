//! Flow certificates: a star center sends one unit per degree to its leaves.
use expander_pruning::certificate::{verify_certificate, FlowCertificate};
use expander_pruning::{DecGraph, Rational};

fn main() {
    let g = DecGraph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
    let cert = FlowCertificate {
        sources: [0].into(),
        flow: vec![1, 1, 1],
        gamma_source: Rational::from_integer(1),
        gamma_sink: Rational::from_integer(1),
        c: Rational::from_integer(1),
        scale: 1,
    };
    println!("valid: {:?}", verify_certificate(&g, &cert));
    let mut weak = cert.clone();
    weak.flow[2] = 0;
    println!("one leg missing: {:?}", verify_certificate(&g, &weak));
    let mut tight = cert;
    tight.gamma_sink = Rational::new(1, 2);
    println!("sinks too small: {}", verify_certificate(&g, &tight).ok);
}
