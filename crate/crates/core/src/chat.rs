//! Chat-model backends.

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::backend::{BackendConfig, HttpJsonClient};
use crate::error::{Error, Result};

pub mod mock;

pub use mock::RuleBasedChat;

/// Wire body: `{"system", "user", "temperature", "max_tokens"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    pub temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for &T {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        (**self).complete(request)
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for Arc<T> {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        (**self).complete(request)
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for Box<T> {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        (**self).complete(request)
    }
}

/// Builds the configured backend: the rule-based mock for offline sentinels.
pub fn from_config(config: &BackendConfig) -> Result<Arc<dyn ChatBackend>> {
    config.validate()?;
    if config.is_offline() {
        Ok(Arc::new(RuleBasedChat))
    } else {
        Ok(Arc::new(HttpChat::new(config)?))
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    text: String,
}

pub struct HttpChat {
    client: HttpJsonClient,
}

impl HttpChat {
    pub fn new(config: &BackendConfig) -> Result<Self> {
        Ok(Self {
            client: HttpJsonClient::new(config)?,
        })
    }

    pub fn with_client(client: HttpJsonClient) -> Self {
        Self { client }
    }
}

impl ChatBackend for HttpChat {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        let resp: ChatResponse = self.client.post(request)?;
        Ok(resp.text)
    }
}

/// Replays canned replies in order (repeating the last) and records requests.
#[derive(Debug, Default)]
pub struct ScriptedChat {
    replies: Vec<String>,
    seen: Mutex<Vec<ChatRequest>>,
}

impl ScriptedChat {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            replies: replies.into_iter().map(Into::into).collect(),
            seen: Mutex::new(Vec::new()),
        }
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.seen.lock().unwrap().clone()
    }

    pub fn calls(&self) -> usize {
        self.seen.lock().unwrap().len()
    }
}

impl ChatBackend for ScriptedChat {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        let mut seen = self.seen.lock().unwrap();
        let i = seen.len();
        seen.push(request.clone());
        self.replies
            .get(i)
            .or(self.replies.last())
            .cloned()
            .ok_or_else(|| Error::Protocol("scripted backend has no replies".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::testing;

    #[test]
    fn http_chat_wire_contract() {
        let (url, rx) = testing::serve(vec![(200, r#"{"text":"  calm  "}"#.into())]);
        let chat = HttpChat::new(&BackendConfig::http(url)).unwrap();
        let req = ChatRequest {
            system: "s".into(),
            user: "u".into(),
            temperature: 0.2,
            max_tokens: Some(150),
        };
        assert_eq!(chat.complete(&req).unwrap(), "  calm  ");
        let body = rx.recv().unwrap();
        assert_eq!(body, serde_json::json!({"system":"s","user":"u","temperature":0.2,"max_tokens":150}));
    }

    #[test]
    fn scripted_replays_and_records() {
        let chat = ScriptedChat::new(["a", "b"]);
        let req = ChatRequest {
            system: String::new(),
            user: "q".into(),
            temperature: 0.3,
            max_tokens: None,
        };
        let got: Vec<String> = (0..3).map(|_| chat.complete(&req).unwrap()).collect();
        assert_eq!(got, ["a", "b", "b"]);
        assert_eq!(chat.calls(), 3);
    }
}
