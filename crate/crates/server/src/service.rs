use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use novobo_core::knowledge::KbError;
use novobo_core::llm::http::{OpenAiCompatChat, OpenAiCompatEmbedder, RoleModels};
use novobo_core::llm::stub::StubChat;
use novobo_core::llm::{Bounded, BoundedEmbedder, ChatProvider};
use novobo_core::retrieval::{Embedder, RetrievalError, StubEmbedder};
use novobo_core::scenario::CatalogError;
use novobo_core::session::store::{SessionStore, StoreError};
use novobo_core::{fixtures, Engine, KnowledgeBase, ScenarioCatalog};
use thiserror::Error;
use tokio::sync::{oneshot, Semaphore};
use tokio::task::JoinHandle;

use crate::app::{router, AppState, Mode};
use crate::config::{ConfigError, EngineConfig, API_KEY_ENV};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("knowledge base: {0}")]
    Kb(#[from] KbError),
    #[error("scenario catalog: {0}")]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("building the exemplar index failed: {0}")]
    Index(#[from] RetrievalError),
    #[error("port {0} is already in use")]
    AddressInUse(u16),
    #[error("cannot listen: {0}")]
    Io(#[from] std::io::Error),
}

impl ServeError {
    pub fn code(&self) -> &'static str {
        match self {
            ServeError::Config(e) => e.code(),
            ServeError::Kb(e) => e.code(),
            ServeError::Catalog(_) => "CatalogError",
            ServeError::Store(_) => "StorageError",
            ServeError::Index(e) => e.code(),
            ServeError::AddressInUse(_) => "AddressInUse",
            ServeError::Io(_) => "IoError",
        }
    }
}

pub struct ServiceHandle {
    addr: SocketAddr,
    state: Arc<AppState>,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting requests, lets in-flight ones finish, and rewrites
    /// every session snapshot.
    pub async fn shutdown(mut self) -> Result<(), ServeError> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        (&mut self.task)
            .await
            .map_err(|e| std::io::Error::other(e.to_string()))??;
        let flushed = self.state.flush().await?;
        tracing::info!(sessions = flushed, "snapshots flushed");
        Ok(())
    }

    /// Serves until the process receives Ctrl-C, then shuts down.
    pub async fn run_until_ctrl_c(self) -> Result<(), ServeError> {
        let _ = tokio::signal::ctrl_c().await;
        tracing::info!("shutting down");
        self.shutdown().await
    }
}

fn load_kb(config: &EngineConfig) -> Result<KnowledgeBase, KbError> {
    match &config.kb_path {
        Some(p) => KnowledgeBase::load(p),
        None => KnowledgeBase::from_json(fixtures::CANONICAL_KB),
    }
}

fn load_catalog(config: &EngineConfig) -> Result<ScenarioCatalog, CatalogError> {
    match &config.catalog_path {
        Some(p) => ScenarioCatalog::load(p),
        None => ScenarioCatalog::from_json(fixtures::SCENARIO_CATALOG),
    }
}

type Providers = (Arc<dyn ChatProvider>, Arc<dyn Embedder>, Mode);

fn providers(config: &EngineConfig) -> Result<Providers, ConfigError> {
    let api_key = std::env::var(API_KEY_ENV).ok();
    let live = config.validate(api_key.as_deref())?;
    let permits = Arc::new(Semaphore::new(config.max_inflight_llm));
    let timeout = Duration::from_millis(config.request_timeout_ms);
    Ok(match live {
        None => (
            Arc::new(Bounded::with_permits(StubChat::new(config.stub_seed), permits.clone(), timeout)),
            Arc::new(BoundedEmbedder::new(
                StubEmbedder::new(config.stub_seed, config.embed_dim),
                permits,
                timeout,
            )),
            Mode::Stub,
        ),
        Some(live) => {
            let models = RoleModels {
                reasoning: config.model_reasoning.clone(),
                chat: config.model_chat.clone(),
            };
            let chat = OpenAiCompatChat::new(&live.llm_endpoint, &live.api_key, models);
            let embedder = OpenAiCompatEmbedder::new(
                &live.embed_endpoint,
                &live.api_key,
                &config.model_embed,
                config.embed_dim,
            );
            (
                Arc::new(Bounded::with_permits(chat, permits.clone(), timeout)),
                Arc::new(BoundedEmbedder::new(embedder, permits, timeout)),
                Mode::Live,
            )
        }
    })
}

/// Loads everything, binds the port, and starts serving in the background.
pub async fn serve(config: EngineConfig) -> Result<ServiceHandle, ServeError> {
    let (chat, embedder, mode) = providers(&config)?;
    let kb = Arc::new(load_kb(&config)?);
    let catalog = load_catalog(&config)?;
    let store = SessionStore::open(&config.data_dir)?;
    let sessions = store.load_all()?;

    let listener = match tokio::net::TcpListener::bind(("127.0.0.1", config.listen_port)).await {
        Ok(l) => l,
        Err(e) if e.kind() == std::io::ErrorKind::AddrInUse => {
            return Err(ServeError::AddressInUse(config.listen_port))
        }
        Err(e) => return Err(e.into()),
    };
    let addr = listener.local_addr()?;

    let engine = Engine::build(kb, chat, embedder).await?;
    tracing::info!(
        %addr,
        mode = mode.as_str(),
        exemplars = engine.index().len(),
        sessions = sessions.len(),
        "engine ready"
    );
    let state = Arc::new(AppState::new(engine, catalog, store, mode, sessions));
    let app = router(state.clone());
    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = rx.await;
            })
            .await
    });
    Ok(ServiceHandle {
        addr,
        state,
        shutdown: Some(tx),
        task,
    })
}
