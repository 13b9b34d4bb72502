use std::path::PathBuf;

use thiserror::Error;

/// Environment variable holding the provider API key.
pub const API_KEY_ENV: &str = "NOVOBO_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    /// Knowledge base document; the bundled fixture when `None`.
    pub kb_path: Option<PathBuf>,
    /// Scenario catalog; the bundled catalog when `None`.
    pub catalog_path: Option<PathBuf>,
    pub data_dir: PathBuf,
    pub listen_port: u16,
    pub llm_endpoint: Option<String>,
    /// Defaults to `llm_endpoint`.
    pub embed_endpoint: Option<String>,
    pub model_reasoning: String,
    pub model_chat: String,
    pub model_embed: String,
    pub embed_dim: usize,
    pub stub_mode: bool,
    pub stub_seed: u64,
    pub max_inflight_llm: usize,
    pub request_timeout_ms: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            kb_path: None,
            catalog_path: None,
            data_dir: PathBuf::from("data"),
            listen_port: 8080,
            llm_endpoint: None,
            embed_endpoint: None,
            model_reasoning: "gpt-4o".into(),
            model_chat: "gpt-4o-mini".into(),
            model_embed: "text-embedding-3-small".into(),
            embed_dim: 256,
            stub_mode: false,
            stub_seed: 0,
            max_inflight_llm: 8,
            request_timeout_ms: 60_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("live mode needs an API key in ${API_KEY_ENV}")]
    MissingCredential,
    #[error("live mode needs --{0}")]
    MissingEndpoint(&'static str),
    #[error("{field} must be positive")]
    NotPositive { field: &'static str },
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::MissingCredential => "MissingCredential",
            ConfigError::MissingEndpoint(_) => "MissingEndpoint",
            ConfigError::NotPositive { .. } => "InvalidConfig",
        }
    }
}

/// Provider settings resolved for live mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiveProvider {
    pub llm_endpoint: String,
    pub embed_endpoint: String,
    pub api_key: String,
}

impl EngineConfig {
    pub fn stub(data_dir: impl Into<PathBuf>, seed: u64) -> Self {
        Self {
            data_dir: data_dir.into(),
            listen_port: 0,
            stub_mode: true,
            stub_seed: seed,
            ..Self::default()
        }
    }

    /// Checks the configuration. `api_key` is the value of [`API_KEY_ENV`];
    /// it is ignored in stub mode.
    pub fn validate(&self, api_key: Option<&str>) -> Result<Option<LiveProvider>, ConfigError> {
        for (field, value) in [
            ("embed-dim", self.embed_dim as u64),
            ("max-inflight-llm", self.max_inflight_llm as u64),
            ("request-timeout-ms", self.request_timeout_ms),
        ] {
            if value == 0 {
                return Err(ConfigError::NotPositive { field });
            }
        }
        if self.stub_mode {
            return Ok(None);
        }
        let api_key = api_key
            .filter(|k| !k.trim().is_empty())
            .ok_or(ConfigError::MissingCredential)?;
        let llm_endpoint = self
            .llm_endpoint
            .clone()
            .ok_or(ConfigError::MissingEndpoint("llm-endpoint"))?;
        let embed_endpoint = self
            .embed_endpoint
            .clone()
            .unwrap_or_else(|| llm_endpoint.clone());
        Ok(Some(LiveProvider {
            llm_endpoint,
            embed_endpoint,
            api_key: api_key.to_string(),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stub_needs_nothing() {
        assert_eq!(EngineConfig::stub("d", 1).validate(None), Ok(None));
    }

    #[test]
    fn live_needs_key_then_endpoint() {
        let mut c = EngineConfig::default();
        assert_eq!(c.validate(None), Err(ConfigError::MissingCredential));
        assert_eq!(c.validate(Some(" ")), Err(ConfigError::MissingCredential));
        assert_eq!(
            c.validate(Some("k")),
            Err(ConfigError::MissingEndpoint("llm-endpoint"))
        );
        c.llm_endpoint = Some("http://llm/v1".into());
        let live = c.validate(Some("k")).unwrap().unwrap();
        assert_eq!(live.embed_endpoint, "http://llm/v1");
    }

    #[test]
    fn zero_limits_rejected() {
        let mut c = EngineConfig::stub("d", 0);
        c.max_inflight_llm = 0;
        assert_eq!(c.validate(None).unwrap_err().code(), "InvalidConfig");
    }
}
