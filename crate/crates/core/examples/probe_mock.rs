//! Mines candidates, then probes an in-process mock to recover its constraints.

use constraintminer::config::AnalysisConfig;
use constraintminer::pipeline::{self, ProbeOptions, Target};

fn main() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("benchmark/probe/payments");
    let out = std::env::temp_dir().join("constraintminer-probe-example");
    std::fs::create_dir_all(&out).unwrap();
    let spec = dir.join("spec.oas.json");

    pipeline::mine_docs(&spec, constraintminer::doc::DEFAULT_FREQUENCY_FACTOR, &out).unwrap();
    let opts = ProbeOptions { rate: 0.0, auth: None, config: AnalysisConfig::load(&dir.join("config.json")).unwrap() };
    let report = pipeline::probe(&spec, &Target::Scenario(dir.join("scenario.json")), &opts, &out).unwrap();

    println!("{} requests", report.requests);
    for c in &report.constraints {
        println!("{}", c);
    }
    for d in &report.diagnostics {
        println!("note: {}", d);
    }
    println!("artifacts in {}", out.display());
}
