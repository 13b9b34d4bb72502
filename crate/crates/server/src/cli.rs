use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use novobo_core::knowledge::{audit_document, ingest_exemplars, ExemplarRecord, KbDocument};
use novobo_core::session::store::SessionStore;
use novobo_core::KnowledgeBase;
use serde::Deserialize;

use crate::config::EngineConfig;
use crate::demo::run_demo;
use crate::service::serve;

#[derive(Debug, Parser)]
#[command(name = "novobo", version, about = "Gesture mentoring engine: HTTP service and operator tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Knowledge base maintenance.
    #[command(subcommand)]
    Kb(KbCommand),
    /// Stored session tools.
    #[command(subcommand)]
    Session(SessionCommand),
    /// Run one scripted round against an in-process stub service.
    Demo {
        #[arg(long, default_value_t = 7)]
        stub_seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum KbCommand {
    /// Check a knowledge base document and list every violation.
    Validate { path: PathBuf },
    /// Append exemplars to a knowledge base document.
    Ingest {
        /// JSON array of exemplars, or an object with an `exemplars` array.
        exemplars: PathBuf,
        #[arg(long)]
        kb: PathBuf,
        /// Output path; defaults to rewriting `--kb`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SessionCommand {
    /// Print a stored session document.
    Export {
        id: String,
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Knowledge base document (bundled fixture when omitted).
    #[arg(long)]
    pub kb: Option<PathBuf>,
    /// Scenario catalog (bundled catalog when omitted).
    #[arg(long)]
    pub scenarios: Option<PathBuf>,
    #[arg(long, default_value = "data")]
    pub data_dir: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Use the seeded stub provider instead of a live endpoint.
    #[arg(long)]
    pub stub_llm: bool,
    #[arg(long, default_value_t = 0)]
    pub stub_seed: u64,
    /// OpenAI-compatible API base, e.g. https://api.openai.com/v1
    #[arg(long)]
    pub llm_endpoint: Option<String>,
    /// Embedding API base; defaults to --llm-endpoint.
    #[arg(long)]
    pub embed_endpoint: Option<String>,
    #[arg(long)]
    pub model_reasoning: Option<String>,
    #[arg(long)]
    pub model_chat: Option<String>,
    #[arg(long)]
    pub model_embed: Option<String>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub max_inflight_llm: Option<usize>,
    #[arg(long)]
    pub request_timeout_ms: Option<u64>,
}

impl ServeArgs {
    pub fn into_config(self) -> EngineConfig {
        let d = EngineConfig::default();
        EngineConfig {
            kb_path: self.kb,
            catalog_path: self.scenarios,
            data_dir: self.data_dir,
            listen_port: self.port,
            llm_endpoint: self.llm_endpoint,
            embed_endpoint: self.embed_endpoint,
            model_reasoning: self.model_reasoning.unwrap_or(d.model_reasoning),
            model_chat: self.model_chat.unwrap_or(d.model_chat),
            model_embed: self.model_embed.unwrap_or(d.model_embed),
            embed_dim: self.embed_dim.unwrap_or(d.embed_dim),
            stub_mode: self.stub_llm,
            stub_seed: self.stub_seed,
            max_inflight_llm: self.max_inflight_llm.unwrap_or(d.max_inflight_llm),
            request_timeout_ms: self.request_timeout_ms.unwrap_or(d.request_timeout_ms),
        }
    }
}

const EXIT_FAILURE: u8 = 1;

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_FAILURE)
}

pub fn validate_kb(path: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(format!("cannot read {}: {e}", path.display())),
    };
    let doc = match KbDocument::from_json(&text) {
        Ok(d) => d,
        Err(e) => return fail(format!("{}: {e}", path.display())),
    };
    let problems = audit_document(&doc);
    if problems.is_empty() {
        println!(
            "{}: ok ({} gesture types, {} intentions, {} citations, {} exemplars)",
            path.display(),
            doc.gesture_types.len(),
            doc.intentions.len(),
            doc.citations.len(),
            doc.exemplars.len()
        );
        return ExitCode::SUCCESS;
    }
    eprintln!("{}: {} violation(s)", path.display(), problems.len());
    for p in &problems {
        eprintln!("  {}: {p}", p.code());
    }
    ExitCode::from(EXIT_FAILURE)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ExemplarFile {
    List(Vec<ExemplarRecord>),
    Wrapped { exemplars: Vec<ExemplarRecord> },
}

fn ingest(exemplars: &Path, kb: &Path, out: Option<&Path>) -> ExitCode {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()));
    let doc = match read(kb).and_then(|t| KbDocument::from_json(&t).map_err(|e| e.to_string())) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let records = match read(exemplars).and_then(|t| {
        serde_json::from_str::<ExemplarFile>(&t).map_err(|e| format!("{}: {e}", exemplars.display()))
    }) {
        Ok(ExemplarFile::List(r)) | Ok(ExemplarFile::Wrapped { exemplars: r }) => r,
        Err(e) => return fail(e),
    };
    let merged = match ingest_exemplars(&doc, &records) {
        Ok(d) => d,
        Err(problems) => {
            eprintln!("{} exemplar(s) rejected", problems.len());
            for (id, reason) in problems {
                eprintln!("  exemplar {id}: {reason}");
            }
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    if let Err(e) = KnowledgeBase::from_document(merged.clone()) {
        return fail(format!("merged knowledge base is invalid: {e}"));
    }
    let target = out.unwrap_or(kb);
    if let Err(e) = std::fs::write(target, merged.to_json()) {
        return fail(format!("cannot write {}: {e}", target.display()));
    }
    println!(
        "added {} exemplar(s); {} now holds {}",
        records.len(),
        target.display(),
        merged.exemplars.len()
    );
    ExitCode::SUCCESS
}

fn export_session(id: &str, data_dir: &Path) -> ExitCode {
    let store = match SessionStore::open(data_dir) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    match store.load(id) {
        Ok(Some(session)) => {
            print!("{}", session.export());
            ExitCode::SUCCESS
        }
        Ok(None) => fail(format!("no session `{id}` in {}", data_dir.display())),
        Err(e) => fail(e),
    }
}

pub async fn run(cli: Cli) -> ExitCode {
    match cli.command {
        Command::Serve(args) => match serve(args.into_config()).await {
            Ok(handle) => {
                println!("listening on {}", handle.base_url());
                match handle.run_until_ctrl_c().await {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => fail(e),
                }
            }
            Err(e) => fail(format!("{}: {e}", e.code())),
        },
        Command::Kb(KbCommand::Validate { path }) => validate_kb(&path),
        Command::Kb(KbCommand::Ingest { exemplars, kb, out }) => ingest(&exemplars, &kb, out.as_deref()),
        Command::Session(SessionCommand::Export { id, data_dir }) => export_session(&id, &data_dir),
        Command::Demo { stub_seed } => match run_demo(stub_seed).await {
            Ok(transcript) => {
                print!("{transcript}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
