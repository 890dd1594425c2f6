use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use constraintminer::config::AnalysisConfig;
use constraintminer::doc::DEFAULT_FREQUENCY_FACTOR;
use constraintminer::mock::{serve, Scenario};
use constraintminer::pipeline::{self, PipelineError, ProbeOptions, Target, AUTH_ENV};
use constraintminer::probe::estimate_budget;

#[derive(Parser)]
#[command(name = "constraintminer", version, about = "Infer request constraints of web API endpoints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutDir {
    /// Directory receiving the artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Mine parameter candidates from spec descriptions.
    MineDocs {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FREQUENCY_FACTOR)]
        freq_factor: f64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Probe candidates against a URL or a mock scenario file.
    Probe {
        #[arg(long)]
        spec: PathBuf,
        /// `http(s)://` URL of the endpoint, or a scenario JSON served in-process.
        #[arg(long)]
        target: String,
        /// Supplies probe overrides and extraPaths.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Requests per second.
        #[arg(long, default_value_t = 5.0)]
        rate: f64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Extract constraints from handler source.
    AnalyzeCode {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Overrides maxDepth from the config.
        #[arg(long)]
        max_depth: Option<usize>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Union doc and code constraints, dropping equivalent duplicates.
    Combine {
        #[command(flatten)]
        out: OutDir,
    },
    /// Score the constraint artifacts against a ground truth.
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        /// Names the endpoint in the report.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Serve a mock endpoint until interrupted.
    ServeMock {
        /// Scenario JSON file.
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
    },
    /// Print the request count needed to probe an endpoint.
    EstimateBudget {
        #[arg(long)]
        params: u64,
        #[arg(long, default_value_t = 22)]
        top_k: u64,
        #[arg(long, default_value_t = 2)]
        values: u64,
    },
}

fn load_config(path: Option<&PathBuf>, max_depth: Option<usize>) -> Result<AnalysisConfig, PipelineError> {
    let mut c = match path {
        Some(p) => AnalysisConfig::load(p)?,
        None => AnalysisConfig::default(),
    };
    if let Some(d) = max_depth {
        if d == 0 {
            return Err(PipelineError::Usage("--max-depth must be at least 1".into()));
        }
        c.max_depth = d;
    }
    Ok(c)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::MineDocs { spec, freq_factor, out } => {
            let cs = pipeline::mine_docs(&spec, freq_factor, &out.out)?;
            println!("{} candidates -> {}", cs.len(), out.out.join(pipeline::CANDIDATES).display());
        }
        Command::Probe { spec, target, config, rate, out } => {
            if rate.is_nan() || rate < 0.0 {
                return Err(PipelineError::Usage("--rate must not be negative".into()));
            }
            let opts = ProbeOptions { rate, auth: std::env::var(AUTH_ENV).ok(), config: load_config(config.as_ref(), None)? };
            let r = pipeline::probe(&spec, &Target::parse(&target), &opts, &out.out)?;
            for d in &r.diagnostics {
                eprintln!("note: {}", d);
            }
            println!("{} requests, {} constraints -> {}", r.requests, r.constraints.len(), out.out.join(pipeline::DOC_CONSTRAINTS).display());
        }
        Command::AnalyzeCode { src, config, max_depth, out } => {
            let config = load_config(Some(&config), max_depth)?;
            let a = pipeline::analyze_code(&src, &config, &out.out)?;
            println!(
                "{} constraints, {} diagnostics -> {}",
                a.constraints.len(),
                a.diagnostics.len(),
                out.out.join(pipeline::CODE_CONSTRAINTS).display()
            );
        }
        Command::Combine { out } => {
            let cs = pipeline::combine(&out.out)?;
            println!("{} constraints -> {}", cs.len(), out.out.join(pipeline::COMBINED).display());
        }
        Command::Evaluate { truth, spec, out } => {
            let endpoint = match &spec {
                Some(s) => pipeline::read_spec(s)?.endpoint_path,
                None => truth.parent().and_then(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            };
            pipeline::evaluate_artifacts(&truth, &endpoint, &out.out)?;
            print!("{}", std::fs::read_to_string(out.out.join(pipeline::REPORT_TXT)).unwrap_or_default());
        }
        Command::ServeMock { target, listen } => {
            let scenario = Scenario::load(&target)?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| PipelineError::Usage(format!("cannot start runtime: {}", e)))?;
            rt.block_on(serve(
                scenario,
                listen,
                async {
                    tokio::signal::ctrl_c().await.ok();
                },
                |a| println!("serving on http://{}", a),
            ))?;
        }
        Command::EstimateBudget { params, top_k, values } => {
            println!("{}", estimate_budget(params, top_k, values));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
