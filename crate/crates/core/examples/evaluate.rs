//! Scores static analysis output against ground truth across the supported benchmark.

use constraintminer::config::AnalysisConfig;
use constraintminer::evaluation::{evaluate, load_ground_truth, render_table, summarize};
use constraintminer::pipeline::analyze_sources;

fn main() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("benchmark/supported");
    let mut dirs: Vec<_> = std::fs::read_dir(&root).unwrap().map(|e| e.unwrap().path()).collect();
    dirs.sort();
    let mut reports = Vec::new();
    for dir in dirs {
        let config = AnalysisConfig::load(&dir.join("config.json")).unwrap();
        let found = analyze_sources(&dir.join("src"), &config).unwrap().constraints;
        let truth = load_ground_truth(&dir.join("truth.gt")).unwrap();
        let name = dir.file_name().unwrap().to_string_lossy().into_owned();
        reports.push(evaluate(&name, &found, &truth).unwrap());
    }
    print!("{}", render_table(&summarize(reports)));
}
