//! File-to-file pipeline steps. Every step reads its inputs from disk and
//! writes its artifacts into an output directory so that later steps (and
//! the evaluation) can consume them independently.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{extract_constraints, Analysis, Diagnostic};
use crate::config::{AnalysisConfig, ConfigError};
use crate::constraint::{parse_dsl, union_dedup, write_document, Constraint, ConstraintError};
use crate::doc::{candidates, Candidate, DEFAULT_FREQUENCY_FACTOR};
use crate::evaluation::{evaluate, load_ground_truth, render_table, summarize, EvaluationError, Summary};
use crate::mock::{MockError, MockServer, Scenario};
use crate::oas::{build_base_request, load_spec, EndpointSpec, OasError};
use crate::probe::{enumerate_rows, fit_templates, run_probe, HttpClient, ProbeClient, ProbeError, ProbeResult, Prober};
use crate::source::{resolve_program, ProgramError, SourceFile};

pub const CANDIDATES: &str = "candidates.json";
pub const TABLES: &str = "tables";
pub const DOC_CONSTRAINTS: &str = "doc_constraints.gt";
pub const PROBE_DIAGNOSTICS: &str = "probe_diagnostics.json";
pub const CODE_CONSTRAINTS: &str = "code_constraints.gt";
pub const UNPARSED: &str = "unparsed.json";
pub const CALL_GRAPHS: &str = "call_graphs.json";
pub const COMBINED: &str = "combined.gt";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";

/// Environment variable whose value is sent as the `Authorization` header.
pub const AUTH_ENV: &str = "CONSTRAINTMINER_AUTH";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Oas { path: String, source: OasError },
    #[error("{path}: {source}")]
    Dsl { path: String, source: ConstraintError },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Mock(#[from] MockError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("base request to {url} was answered with {outcome}; adjust overrides or extraPaths in the config")]
    BaseRejected { url: String, outcome: String },
}

impl PipelineError {
    /// Process exit status: 2 for bad invocations or inputs, 1 for failures
    /// while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_)
            | PipelineError::Io { .. }
            | PipelineError::Oas { .. }
            | PipelineError::Dsl { .. }
            | PipelineError::Config(_)
            | PipelineError::Program(_)
            | PipelineError::Evaluation(EvaluationError::Io { .. } | EvaluationError::Dsl { .. }) => 2,
            PipelineError::Mock(MockError::Io { .. } | MockError::Json(_) | MockError::Oas(_) | MockError::Constraint(_)) => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.display().to_string(), source }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    write(path, &(serde_json::to_string_pretty(v)? + "\n"))
}

pub fn read_spec(path: &Path) -> Result<EndpointSpec> {
    load_spec(&read(path)?).map_err(|source| PipelineError::Oas { path: path.display().to_string(), source })
}

pub fn read_constraints(path: &Path) -> Result<Vec<Constraint>> {
    parse_dsl(&read(path)?).map_err(|source| PipelineError::Dsl { path: path.display().to_string(), source })
}

pub fn read_candidates(path: &Path) -> Result<Vec<Candidate>> {
    Ok(serde_json::from_str(&read(path)?)?)
}

/// Mines candidates from the spec descriptions into `out/candidates.json`.
pub fn mine_docs(spec: &Path, frequency_factor: f64, out: &Path) -> Result<Vec<Candidate>> {
    if frequency_factor.is_nan() || frequency_factor <= 0.0 {
        return Err(PipelineError::Usage(format!("--freq-factor must be positive, got {}", frequency_factor)));
    }
    let e = read_spec(spec)?;
    let cs = candidates(&e, frequency_factor);
    write_json(&out.join(CANDIDATES), &cs)?;
    log::info!("{}: {} candidates", e.endpoint_path, cs.len());
    Ok(cs)
}

/// Where probes go: a live URL or a scenario served by an in-process mock.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Url(String),
    Scenario(PathBuf),
}

impl Target {
    pub fn parse(s: &str) -> Target {
        if s.starts_with("http://") || s.starts_with("https://") {
            Target::Url(s.to_string())
        } else {
            Target::Scenario(PathBuf::from(s))
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProbeOptions {
    /// Requests per second; zero disables the limit.
    pub rate: f64,
    pub auth: Option<String>,
    pub config: AnalysisConfig,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { rate: 5.0, auth: None, config: AnalysisConfig::default() }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ProbeReport {
    #[serde(skip)]
    pub constraints: Vec<Constraint>,
    pub requests: usize,
    pub diagnostics: Vec<String>,
}

fn table_name(i: usize, c: &Candidate) -> String {
    let names: Vec<String> = c.paths.iter().map(|p| p.to_string()).collect();
    format!("{:03}_{}.csv", i, names.join("__"))
}

/// Probes every candidate (from `out/candidates.json`, mined first when
/// missing) and writes the tables plus the fitted constraints.
pub fn probe(spec: &Path, target: &Target, opts: &ProbeOptions, out: &Path) -> Result<ProbeReport> {
    let e = read_spec(spec)?;
    let cand_path = out.join(CANDIDATES);
    let cands = if cand_path.exists() {
        read_candidates(&cand_path)?
    } else {
        mine_docs(spec, DEFAULT_FREQUENCY_FACTOR, out)?
    };
    let _mock;
    let url = match target {
        Target::Url(u) => u.clone(),
        Target::Scenario(p) => {
            let server = MockServer::start(Scenario::load(p)?, SocketAddr::from(([127, 0, 0, 1], 0)))?;
            let url = server.url();
            _mock = server;
            url
        }
    };
    let client = HttpClient::new(opts.auth.clone());
    let overrides = opts.config.probe_overrides();
    let base = build_base_request(&e, &overrides, &opts.config.extra_param_paths())
        .map_err(|source| PipelineError::Oas { path: spec.display().to_string(), source })?;
    let mut prober = Prober::new(&client, url.clone(), base.clone(), opts.rate);

    let mut report = ProbeReport::default();
    prober.limiter.wait();
    let outcome = match client.post_json(&url, &base) {
        Ok(status) => ProbeResult::from_status(status),
        Err(e) => ProbeResult::Error(e.0),
    };
    report.requests += 1;
    if outcome != ProbeResult::Success {
        return Err(PipelineError::BaseRejected { url, outcome: outcome.to_string() });
    }

    let mut found = Vec::new();
    for (i, c) in cands.iter().enumerate() {
        let table = match enumerate_rows(c, &e, &overrides) {
            Ok(t) => t,
            Err(err) => {
                report.diagnostics.push(format!("candidate {}: {}", i, err));
                continue;
            }
        };
        report.requests += table.rows.len();
        let table = run_probe(table, &mut prober)?;
        write(&out.join(TABLES).join(table_name(i, c)), &table.to_csv()?)?;
        match fit_templates(&table) {
            Ok(fit) => {
                found.extend(fit.constraints);
                report.diagnostics.extend(fit.diagnostics);
            }
            Err(err) => report.diagnostics.push(format!("candidate {}: {}", i, err)),
        }
    }
    report.constraints = union_dedup(&[&found]);
    write(&out.join(DOC_CONSTRAINTS), &write_document(&report.constraints))?;
    write_json(&out.join(PROBE_DIAGNOSTICS), &report)?;
    Ok(report)
}

/// Every `.mj` file below `dir`, in path order, named relative to `dir`.
pub fn read_sources(dir: &Path) -> Result<Vec<SourceFile>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<SourceFile>) -> Result<()> {
        let mut entries: Vec<PathBuf> =
            fs::read_dir(dir).map_err(io_err(dir))?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>().map_err(io_err(dir))?;
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out)?;
            } else if p.extension().is_some_and(|x| x == "mj") {
                let name = p.strip_prefix(root).unwrap_or(&p).display().to_string();
                out.push(SourceFile { name, text: read(&p)? });
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    if out.is_empty() {
        return Err(PipelineError::Usage(format!("no .mj sources under {}", dir.display())));
    }
    Ok(out)
}

/// Static analysis without touching the filesystem beyond reading sources.
pub fn analyze_sources(src: &Path, config: &AnalysisConfig) -> Result<Analysis> {
    if config.controllers.is_empty() {
        return Err(PipelineError::Usage("config lists no controllers".into()));
    }
    let files = read_sources(src)?;
    let program = resolve_program(&files, &config.controllers, &config.request_models)?;
    Ok(extract_constraints(&program, config))
}

/// Writes `code_constraints.gt`, `unparsed.json` and `call_graphs.json`.
pub fn analyze_code(src: &Path, config: &AnalysisConfig, out: &Path) -> Result<Analysis> {
    let a = analyze_sources(src, config)?;
    write(&out.join(CODE_CONSTRAINTS), &write_document(&a.constraints))?;
    let diags: Vec<&Diagnostic> = a.diagnostics.iter().collect();
    write_json(&out.join(UNPARSED), &diags)?;
    write_json(&out.join(CALL_GRAPHS), &a.call_graphs)?;
    Ok(a)
}

/// Unions the doc and code artifacts present in `out` into `combined.gt`.
pub fn combine(out: &Path) -> Result<Vec<Constraint>> {
    let mut lists = Vec::new();
    for name in [CODE_CONSTRAINTS, DOC_CONSTRAINTS] {
        let p = out.join(name);
        if p.exists() {
            lists.push(read_constraints(&p)?);
        }
    }
    if lists.is_empty() {
        return Err(PipelineError::Usage(format!(
            "nothing to combine: neither {} nor {} exists in {}",
            CODE_CONSTRAINTS,
            DOC_CONSTRAINTS,
            out.display()
        )));
    }
    let refs: Vec<&[Constraint]> = lists.iter().map(Vec::as_slice).collect();
    let combined = union_dedup(&refs);
    write(&out.join(COMBINED), &write_document(&combined))?;
    Ok(combined)
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub pipeline: String,
    pub summary: Summary,
}

/// Scores every constraint artifact in `out` against `truth` and writes
/// `report.json` and `report.txt`.
pub fn evaluate_artifacts(truth: &Path, endpoint: &str, out: &Path) -> Result<Vec<PipelineReport>> {
    if !truth.is_file() {
        return Err(PipelineError::Usage(format!("ground truth {} does not exist", truth.display())));
    }
    let t = load_ground_truth(truth)?;
    let mut reports = Vec::new();
    for (pipeline, name) in [("doc", DOC_CONSTRAINTS), ("code", CODE_CONSTRAINTS), ("combined", COMBINED)] {
        let p = out.join(name);
        if !p.exists() {
            continue;
        }
        let identified = read_constraints(&p)?;
        let summary = summarize(vec![evaluate(endpoint, &identified, &t)?]);
        reports.push(PipelineReport { pipeline: pipeline.to_string(), summary });
    }
    if reports.is_empty() {
        return Err(PipelineError::Usage(format!("no constraint artifacts to evaluate in {}", out.display())));
    }
    write_json(&out.join(REPORT_JSON), &reports)?;
    let mut text = String::new();
    for r in &reports {
        text.push_str(&format!("== {} ==\n{}\n", r.pipeline, render_table(&r.summary)));
    }
    write(&out.join(REPORT_TXT), &text)?;
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_kinds() {
        assert_eq!(Target::parse("http://localhost:1/x"), Target::Url("http://localhost:1/x".into()));
        assert_eq!(Target::parse("s/scenario.json"), Target::Scenario("s/scenario.json".into()));
    }

    #[test]
    fn missing_truth_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = evaluate_artifacts(&dir.path().join("none.gt"), "/x", dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn combine_shares_overlap() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join(CODE_CONSTRAINTS), "present(a) -> invalid\nx > 3 -> invalid\n").unwrap();
        write(&dir.path().join(DOC_CONSTRAINTS), "present(x) and x > 3 -> invalid\nrequires(b, c)\n").unwrap();
        assert_eq!(combine(dir.path()).unwrap().len(), 3);
        assert_eq!(read_constraints(&dir.path().join(COMBINED)).unwrap().len(), 3);
    }

    #[test]
    fn table_names_are_stable() {
        assert_eq!(table_name(3, &Candidate::pair("card", "bankAccount")), "003_bankAccount__card.csv");
    }
}
