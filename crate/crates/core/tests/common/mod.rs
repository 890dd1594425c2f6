#![allow(dead_code)]

pub mod oracle;
pub mod props;

use std::path::{Path, PathBuf};

use constraintminer::constraint::{domain_for, equivalent, parse_dsl};
use rand::rngs::StdRng;
use rand::SeedableRng;

/// The library's verdict on two DSL statements.
pub fn library_equivalent(a: &str, b: &str) -> bool {
    let a = parse_dsl(a).unwrap().pop().unwrap();
    let b = parse_dsl(b).unwrap().pop().unwrap();
    equivalent(&a, &b, &domain_for([&a, &b])).unwrap()
}

/// Compares library and oracle on `n` seeded random pairs; returns the
/// number of equivalent pairs or the first disagreement.
pub fn oracle_agreement(n: usize, seed: u64) -> Result<usize, String> {
    let g = oracle::Gen { params: vec!["a", "b", "c", "d"] };
    let mut r = StdRng::seed_from_u64(seed);
    let mut equivalent_pairs = 0;
    for _ in 0..n {
        let a = g.statement(&mut r);
        let b = g.partner(&mut r, &a);
        let o = oracle::equivalent(&a, &b);
        if library_equivalent(&a, &b) != o {
            return Err(format!("disagreement on `{}` / `{}` (oracle says {})", a, b, o));
        }
        equivalent_pairs += o as usize;
    }
    Ok(equivalent_pairs)
}

pub fn benchmark(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("benchmark").join(sub)
}

/// Immediate subdirectories in name order.
pub fn fixture_dirs(root: &Path) -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root).unwrap().map(|e| e.unwrap().path()).filter(|p| p.is_dir()).collect();
    dirs.sort();
    dirs
}
