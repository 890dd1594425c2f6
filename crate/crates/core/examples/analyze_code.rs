//! Extracts constraints from a benchmark controller.

use constraintminer::config::AnalysisConfig;
use constraintminer::pipeline::analyze_sources;

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "payments".into());
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("benchmark/supported").join(&name);
    let config = AnalysisConfig::load(&dir.join("config.json")).unwrap();
    let a = analyze_sources(&dir.join("src"), &config).unwrap();
    for c in &a.constraints {
        println!("{}", c);
    }
    for d in &a.diagnostics {
        println!("{:?} {}:{} {}", d.kind, d.file, d.line, d.text);
    }
    for g in &a.call_graphs {
        println!("call graph of {}: {} edges", g.root, g.edges.len());
    }
}
