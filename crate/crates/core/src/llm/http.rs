//! Chat-completions HTTP provider.

use std::time::Duration;

use serde_json::{json, Value};

use super::{CompletionRequest, Provider, ProviderError, ProviderReply, TokenUsage};
use crate::error::{Error, Result};

pub const API_KEY_ENV: &str = "DIALEX_API_KEY";
pub const BASE_URL_ENV: &str = "DIALEX_BASE_URL";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

pub struct HttpProvider {
    base_url: String,
    api_key: String,
    http: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| Error::Config(format!("HTTP client: {e}")))?;
        Ok(HttpProvider {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            http,
        })
    }

    /// Reads the key from `DIALEX_API_KEY` and the endpoint from
    /// `DIALEX_BASE_URL` (defaulting to the OpenAI API).
    pub fn from_env() -> Result<Self> {
        let key = std::env::var(API_KEY_ENV).map_err(|_| Error::Config(format!("{API_KEY_ENV} is not set")))?;
        let base = std::env::var(BASE_URL_ENV).unwrap_or_else(|_| DEFAULT_BASE_URL.to_string());
        Self::new(base, key)
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url)
    }
}

/// Request body: one user message carrying the whole prompt.
pub(crate) fn request_body(request: &CompletionRequest) -> Value {
    json!({
        "model": request.model_id,
        "messages": [{"role": "user", "content": request.prompt}],
        "temperature": request.temperature,
        "max_tokens": request.max_output_tokens,
    })
}

pub(crate) fn parse_reply(body: &Value) -> std::result::Result<ProviderReply, ProviderError> {
    let text = body
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| ProviderError::Protocol("reply has no choices[0].message.content".into()))?;
    let usage = body.get("usage").and_then(|u| {
        Some(TokenUsage {
            prompt_tokens: u.get("prompt_tokens")?.as_u64()?,
            completion_tokens: u.get("completion_tokens")?.as_u64()?,
        })
    });
    Ok(ProviderReply {
        text: text.to_string(),
        usage,
    })
}

impl Provider for HttpProvider {
    fn complete(&self, request: &CompletionRequest) -> std::result::Result<ProviderReply, ProviderError> {
        let resp = self
            .http
            .post(self.endpoint())
            .bearer_auth(&self.api_key)
            .json(&request_body(request))
            .send()
            .map_err(|e| ProviderError::Transient {
                status: e.status().map(|s| s.as_u16()),
                message: e.to_string(),
            })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ProviderError::Transient {
            status: Some(status.as_u16()),
            message: e.to_string(),
        })?;
        if !status.is_success() {
            let code = Some(status.as_u16());
            let message = format!("HTTP {status}: {}", text.chars().take(300).collect::<String>());
            return Err(if status.as_u16() == 429 || status.is_server_error() {
                ProviderError::Transient { status: code, message }
            } else {
                ProviderError::Fatal { status: code, message }
            });
        }
        let body: Value =
            serde_json::from_str(&text).map_err(|e| ProviderError::Protocol(format!("reply is not JSON: {e}")))?;
        parse_reply(&body)
    }
}
