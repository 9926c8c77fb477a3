use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use shortlens::absa::{
    classification_report, label_distribution, promote_accepted, read_gold, read_silver, stratified_split, write_gold,
    AbsaClassifier, SplitFractions,
};
use shortlens::analytics::ReportTable;
use shortlens::backend::conformance::check_backend;
use shortlens::backend::{BackendClient, BackendServer, RetryPolicy, StubBackend, StubScript};
use shortlens::pipeline::smoke::write_smoke_fixture;
use shortlens::pipeline::{ManifestSource, Pipeline, PipelineConfig, Stage, StageReport};
use shortlens::{Error, ErrorClass, Execution, Result};

const DEFAULT_BACKEND: &str = "http://127.0.0.1:8765";

#[derive(Parser)]
#[command(name = "shortlens", version, about = "Aspect sentiment and scene analysis for short news videos")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Pipeline config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Store directory; overrides the config.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// Model service base URL; overrides the config.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Worker count for every backend-bound stage.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for sampling and splits; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report what would run without calling the backend or writing.
    #[arg(long, global = true)]
    dry_run: bool,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Import the configured manifests (plus --manifest) into the store.
    Ingest {
        #[arg(long, requires = "outlet")]
        manifest: Option<PathBuf>,
        #[arg(long)]
        outlet: Option<String>,
    },
    /// Language probe over the first seconds of audio.
    Probe,
    /// Full transcription of English videos.
    Transcribe,
    /// Dependency-anchored aspect rows from transcripts.
    Link,
    /// Aspect sentiment for every linked row, plus the silver pool.
    Absa,
    /// Sample frames from the media directory.
    Sample,
    /// Scene labels for sampled frames.
    Scenes,
    /// Recompute all tables into <store>/aggregate.
    Aggregate,
    /// Draw the annotation sheet, or score it once annotated.
    Evaluate,
    /// Write report tables to a directory.
    Report {
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated table names; all when omitted.
        #[arg(long, value_delimiter = ',')]
        tables: Vec<String>,
    },
    /// Every stage from ingest to aggregate.
    Run,
    /// Serve the deterministic stub backend over HTTP.
    ServeStub {
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8765")]
        addr: String,
    },
    /// Check a model service against the wire contract.
    Conformance,
    /// Write the three-video smoke fixture.
    SmokeFixture {
        #[arg(long)]
        out: PathBuf,
    },
    /// Gold-set utilities.
    #[command(subcommand)]
    Gold(GoldCommand),
}

#[derive(Subcommand)]
enum GoldCommand {
    /// Label counts per aspect group.
    Stats {
        #[arg(long)]
        gold: PathBuf,
    },
    /// Append accepted silver candidates to a gold file.
    Promote {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        silver: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded split stratified by (group, label).
    Split {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        dev: f64,
        #[arg(long, default_value_t = 0.1)]
        test: f64,
    },
    /// Classify gold examples through the backend and score against gold labels.
    Score {
        #[arg(long)]
        gold: PathBuf,
    },
}

fn stage_of(cmd: &Command) -> Option<Stage> {
    Some(match cmd {
        Command::Ingest { .. } => Stage::Ingest,
        Command::Probe => Stage::Probe,
        Command::Transcribe => Stage::Transcribe,
        Command::Link => Stage::Link,
        Command::Absa => Stage::Absa,
        Command::Sample => Stage::Sample,
        Command::Scenes => Stage::Scenes,
        Command::Aggregate => Stage::Aggregate,
        Command::Evaluate => Stage::Evaluate,
        Command::Report { .. } => Stage::Report,
        _ => return None,
    })
}

fn load_config(g: &Global) -> Result<PipelineConfig> {
    let mut cfg = match &g.config {
        Some(path) => PipelineConfig::load(path)?,
        None => {
            let store = g
                .store
                .clone()
                .ok_or_else(|| Error::Config("either --config or --store is required".into()))?;
            PipelineConfig::new(store, g.backend.as_deref().unwrap_or(DEFAULT_BACKEND))
        }
    };
    if let Some(s) = &g.store {
        cfg.store_root = s.clone();
    }
    if let Some(b) = &g.backend {
        cfg.backend_url = b.clone();
    }
    if let Some(n) = g.workers {
        cfg.set_workers(n);
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

/// Exit status for a finished stage: per-video failures are data errors.
fn stage_status(reports: &[StageReport]) -> ExitCode {
    if reports.iter().any(|r| !r.failed.is_empty()) {
        ExitCode::from(ErrorClass::DataIntegrity.exit_code() as u8)
    } else {
        ExitCode::SUCCESS
    }
}

fn backend_client(g: &Global) -> Result<BackendClient> {
    let url = match (&g.backend, &g.config) {
        (Some(b), _) => b.clone(),
        (None, Some(_)) => load_config(g)?.backend_url,
        (None, None) => DEFAULT_BACKEND.to_string(),
    };
    Ok(BackendClient::http(&url)?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    if let Some(stage) = stage_of(&cli.command) {
        let mut cfg = load_config(g)?;
        if let Command::Ingest {
            manifest: Some(path),
            outlet: Some(outlet),
        } = &cli.command
        {
            cfg.manifests.push(ManifestSource {
                path: path.clone(),
                outlet: outlet.clone(),
                display_name: None,
            });
        }
        let mut pipeline = Pipeline::new(cfg)?.dry_run(g.dry_run);
        if let Command::Report { out, tables } = &cli.command {
            let tables = tables.iter().map(|t| t.parse()).collect::<Result<Vec<ReportTable>>>()?;
            pipeline = pipeline.report_to(out, tables);
        }
        let report = pipeline.run(stage)?;
        print_json(&report)?;
        return Ok(stage_status(&[report]));
    }
    match cli.command {
        Command::Run => {
            let pipeline = Pipeline::new(load_config(g)?)?.dry_run(g.dry_run);
            let reports = pipeline.run_all()?;
            print_json(&reports)?;
            Ok(stage_status(&reports))
        }
        Command::ServeStub { script, addr } => {
            let script = match script {
                Some(p) => StubScript::load(&p)?,
                None => StubScript::default(),
            };
            let server = BackendServer::spawn(Arc::new(StubBackend::new(script)), &addr)
                .map_err(|e| Error::Config(format!("cannot bind {addr}: {e}")))?;
            println!("listening on {}", server.base_url());
            server.join();
            Ok(ExitCode::SUCCESS)
        }
        Command::Conformance => {
            let client = backend_client(g)?.with_retry(RetryPolicy::none());
            let report = check_backend(&client);
            print_json(&report)?;
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(ErrorClass::Backend.exit_code() as u8)
            })
        }
        Command::SmokeFixture { out } => {
            let url = g.backend.as_deref().unwrap_or(DEFAULT_BACKEND);
            let f = write_smoke_fixture(&out, url)?;
            println!("{}", f.config_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Gold(cmd) => gold(g, cmd),
        _ => unreachable!("stage commands handled above"),
    }
}

fn gold(g: &Global, cmd: GoldCommand) -> Result<ExitCode> {
    match cmd {
        GoldCommand::Stats { gold } => {
            let dist = label_distribution(&read_gold(&gold)?);
            println!("group,neg,neut,pos,total");
            for (group, c) in &dist.rows {
                println!("{},{},{},{},{}", group.name(), c.neg, c.neut, c.pos, c.total());
            }
            let t = dist.grand_total();
            println!("total,{},{},{},{}", t.neg, t.neut, t.pos, t.total());
        }
        GoldCommand::Promote { gold, silver, out } => {
            let base = read_gold(&gold)?;
            let promoted = promote_accepted(&base, &read_silver(&silver)?)?;
            write_gold(&out, &promoted)?;
            println!("{} gold examples ({} promoted)", promoted.len(), promoted.len() - base.len());
        }
        GoldCommand::Split { gold, out, dev, test } => {
            let seed = g.seed.unwrap_or(0);
            let split = stratified_split(&read_gold(&gold)?, SplitFractions { dev, test }, seed)?;
            for (name, part) in [("train", &split.train), ("dev", &split.dev), ("test", &split.test)] {
                write_gold(&out.join(format!("{name}.jsonl")), part)?;
                println!("{name}: {}", part.len());
            }
        }
        GoldCommand::Score { gold } => {
            let examples = read_gold(&gold)?;
            let client = backend_client(g)?;
            let classifier = AbsaClassifier::new(&client);
            let pairs: Vec<(String, String)> = examples.iter().map(|e| (e.text.clone(), e.aspect.clone())).collect();
            let workers = g.workers.unwrap_or(shortlens::absa::DEFAULT_ABSA_WORKERS);
            let predicted = classifier
                .classify_batch(&pairs, Execution::bounded(workers))
                .into_iter()
                .map(|r| r.map(|c| c.prediction.label))
                .collect::<Result<Vec<_>>>()?;
            let gold_labels: Vec<_> = examples.iter().map(|e| e.label).collect();
            print_json(&classification_report(&predicted, &gold_labels)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ErrorClass::Usage.exit_code() } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
