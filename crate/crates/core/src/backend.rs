//! Connection settings and a retrying JSON-over-HTTP client shared by the
//! classifier, chat, embedding and NLI backends.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentinel endpoint selecting the built-in offline backend.
pub const MOCK_ENDPOINT: &str = "mock";
/// Classifier-specific alias for [`MOCK_ENDPOINT`].
pub const LEXICON_ENDPOINT: &str = "lexicon";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    /// URL, or `mock` / `lexicon` for the offline backend.
    pub endpoint: String,
    /// Per-request timeout in seconds.
    pub timeout_secs: f64,
    /// Retries after the first failed attempt.
    pub max_retries: u32,
    /// Name of an environment variable holding a bearer token.
    pub api_key_env: Option<String>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            endpoint: MOCK_ENDPOINT.into(),
            timeout_secs: 30.0,
            max_retries: 3,
            api_key_env: None,
        }
    }
}

impl BackendConfig {
    pub fn mock() -> Self {
        Self::default()
    }

    pub fn http(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            ..Self::default()
        }
    }

    pub fn is_offline(&self) -> bool {
        matches!(self.endpoint.as_str(), MOCK_ENDPOINT | LEXICON_ENDPOINT)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(Error::Contract(format!(
                "backend timeout must be positive, got {}",
                self.timeout_secs
            )));
        }
        Ok(())
    }
}

/// Blocking JSON POST client with exponential backoff (0.5 s, doubling).
#[derive(Debug, Clone)]
pub struct HttpJsonClient {
    endpoint: String,
    agent: ureq::Agent,
    max_retries: u32,
    initial_backoff: Duration,
    bearer: Option<String>,
}

impl HttpJsonClient {
    pub fn new(config: &BackendConfig) -> Result<Self> {
        config.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        // Credentials come from the environment only and are never serialized.
        let bearer = config
            .api_key_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok());
        Ok(Self {
            endpoint: config.endpoint.clone(),
            agent,
            max_retries: config.max_retries,
            initial_backoff: Duration::from_millis(500),
            bearer,
        })
    }

    pub fn with_initial_backoff(mut self, backoff: Duration) -> Self {
        self.initial_backoff = backoff;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Sends `body`, retrying connection failures and 5xx answers.
    pub fn post<Req, Resp>(&self, body: &Req) -> Result<Resp>
    where
        Req: Serialize,
        Resp: DeserializeOwned,
    {
        let attempts = self.max_retries + 1;
        let mut backoff = self.initial_backoff;
        let mut last = String::new();
        for attempt in 1..=attempts {
            match self.try_once(body) {
                Ok(Attempt::Done(text)) => {
                    return serde_json::from_str(&text).map_err(|e| {
                        Error::Protocol(format!("{}: unexpected response body: {e}", self.endpoint))
                    });
                }
                Ok(Attempt::Rejected(status, text)) => {
                    return Err(Error::Protocol(format!(
                        "{} answered {status}: {}",
                        self.endpoint,
                        truncate(&text, 200)
                    )));
                }
                Err(msg) => last = msg,
            }
            if attempt < attempts {
                log::warn!("{}: attempt {attempt} failed ({last}), retrying in {backoff:?}", self.endpoint);
                std::thread::sleep(backoff);
                backoff *= 2;
            }
        }
        Err(Error::Transport {
            endpoint: self.endpoint.clone(),
            attempts,
            message: last,
        })
    }

    fn try_once<Req: Serialize>(&self, body: &Req) -> std::result::Result<Attempt, String> {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(token) = &self.bearer {
            req = req.header("Authorization", format!("Bearer {token}"));
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| e.to_string())?;
        match status {
            200..=299 => Ok(Attempt::Done(text)),
            500..=599 => Err(format!("server error {status}")),
            _ => Ok(Attempt::Rejected(status, text)),
        }
    }
}

enum Attempt {
    Done(String),
    Rejected(u16, String),
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}
