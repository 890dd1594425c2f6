//! Mines candidate parameter groups from description co-occurrence.

use constraintminer::doc::{build_cooccurrence, candidates, DEFAULT_FREQUENCY_FACTOR};
use constraintminer::oas::load_spec;

fn main() {
    let doc = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/benchmark/probe/payments/spec.oas.json")).unwrap();
    let spec = load_spec(&doc).unwrap();
    let m = build_cooccurrence(&spec);
    for (i, p) in m.params.iter().enumerate() {
        if m.total(i) > 0 {
            println!("{:<24} mentioned alongside others {} times", p, m.total(i));
        }
    }
    for factor in [1.0, DEFAULT_FREQUENCY_FACTOR] {
        println!("factor {}:", factor);
        for c in candidates(&spec, factor) {
            println!("  {}", serde_json::to_string(&c).unwrap());
        }
    }
}
