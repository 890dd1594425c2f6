//! Flattens an endpoint schema and builds the base probe request.

use constraintminer::oas::{build_base_request, load_spec, Overrides};

fn main() {
    let doc = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/benchmark/probe/payments/spec.oas.json")).unwrap();
    let spec = load_spec(&doc).expect("one endpoint");
    println!("{} {} ({} parameters)", spec.method, spec.endpoint_path, spec.len());
    for p in spec.flat() {
        println!("  {:<28} {:?} required={}", p.path, p.data_type, p.required);
    }
    let base = build_base_request(&spec, &Overrides::new(), &[]).unwrap();
    println!("{}", serde_json::to_string_pretty(&base).unwrap());
}
