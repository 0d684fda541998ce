//! Provider-agnostic completion client.
//!
//! [`Client`] wraps a [`Provider`] with a persistent response cache, a
//! bounded retry loop for transient failures, and a cap on in-flight
//! requests. Decoding defaults to greedy (temperature 0).

mod cache;
mod http;
mod mock;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use cache::{CacheEntry, ResponseCache};
pub use http::{HttpProvider, API_KEY_ENV, BASE_URL_ENV, DEFAULT_BASE_URL};
pub use mock::{MockProvider, MockReply};

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";
pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 1024;
pub const DEFAULT_CONCURRENCY: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model_id: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl CompletionRequest {
    /// Greedy request with the default output bound.
    pub fn new(model_id: impl Into<String>, prompt: impl Into<String>) -> Self {
        CompletionRequest {
            model_id: model_id.into(),
            prompt: prompt.into(),
            temperature: 0.0,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(Error::Config(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if self.max_output_tokens == 0 {
            return Err(Error::Config("max_output_tokens must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResponse {
    pub text: String,
    pub from_cache: bool,
    /// Wall time measured by this client, including cache lookups.
    pub latency_ms: f64,
    pub provider_token_usage: Option<TokenUsage>,
}

/// What a provider returns on success.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderReply {
    pub text: String,
    pub usage: Option<TokenUsage>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderError {
    /// Transport failure, rate limiting or a server-side error; retried.
    Transient { status: Option<u16>, message: String },
    /// Rejected request; not retried.
    Fatal { status: Option<u16>, message: String },
    /// The reply could not be understood.
    Protocol(String),
}

pub trait Provider: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> std::result::Result<ProviderReply, ProviderError>;
}

impl<P: Provider + ?Sized> Provider for &P {
    fn complete(&self, request: &CompletionRequest) -> std::result::Result<ProviderReply, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn complete(&self, request: &CompletionRequest) -> std::result::Result<ProviderReply, ProviderError> {
        (**self).complete(request)
    }
}

/// SHA-256 of the prompt bytes, hex encoded.
pub fn prompt_digest(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Cache key over every request field, length-framed so that field
/// boundaries cannot shift.
pub fn cache_key(request: &CompletionRequest) -> String {
    let mut h = Sha256::new();
    h.update(b"dialex-completion-v1\0");
    h.update((request.model_id.len() as u64).to_be_bytes());
    h.update(request.model_id.as_bytes());
    h.update((request.prompt.len() as u64).to_be_bytes());
    h.update(request.prompt.as_bytes());
    // +0.0 and -0.0 are the same temperature.
    let temperature = if request.temperature == 0.0 { 0.0f64 } else { request.temperature };
    h.update(temperature.to_bits().to_be_bytes());
    h.update(u64::from(request.max_output_tokens).to_be_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    /// No waiting between attempts.
    pub fn immediate(max_retries: u32) -> Self {
        RetryPolicy {
            max_retries,
            base_delay: Duration::ZERO,
        }
    }

    /// Delay before retry number `retry` (0-based): base, 2*base, 4*base, ...
    pub fn delay(&self, retry: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(retry)
    }
}

struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(n: usize) -> Self {
        Limiter {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

/// Caching, retrying completion client. Safe to share between threads.
pub struct Client<P> {
    provider: P,
    cache: Option<ResponseCache>,
    retry: RetryPolicy,
    limiter: Limiter,
    provider_calls: AtomicUsize,
}

impl<P: Provider> Client<P> {
    pub fn new(provider: P) -> Self {
        Client {
            provider,
            cache: None,
            retry: RetryPolicy::default(),
            limiter: Limiter::new(DEFAULT_CONCURRENCY),
            provider_calls: AtomicUsize::new(0),
        }
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_concurrency(mut self, limit: usize) -> Self {
        self.limiter = Limiter::new(limit);
        self
    }

    pub fn provider(&self) -> &P {
        &self.provider
    }

    /// Provider invocations made through this client, retries included.
    pub fn provider_calls(&self) -> usize {
        self.provider_calls.load(Ordering::SeqCst)
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse> {
        request.validate()?;
        let started = Instant::now();
        let key = cache_key(request);
        if let Some(cache) = &self.cache {
            if let Some(entry) = cache.get(&key, request)? {
                return Ok(CompletionResponse {
                    text: entry.text,
                    from_cache: true,
                    latency_ms: started.elapsed().as_secs_f64() * 1e3,
                    provider_token_usage: entry.usage,
                });
            }
        }

        let _permit = self.limiter.acquire();
        let mut attempt = 0u32;
        let reply = loop {
            attempt += 1;
            self.provider_calls.fetch_add(1, Ordering::SeqCst);
            match self.provider.complete(request) {
                Ok(reply) => break reply,
                Err(ProviderError::Transient { status, message }) => {
                    if attempt > self.retry.max_retries {
                        return Err(Error::Provider {
                            attempts: attempt,
                            status,
                            message,
                        });
                    }
                    let wait = self.retry.delay(attempt - 1);
                    log::warn!("transient provider failure ({message}); retrying in {wait:?}");
                    std::thread::sleep(wait);
                }
                Err(ProviderError::Fatal { status, message }) => {
                    return Err(Error::Provider {
                        attempts: attempt,
                        status,
                        message,
                    })
                }
                Err(ProviderError::Protocol(m)) => return Err(Error::Protocol(m)),
            }
        };
        if let Some(cache) = &self.cache {
            cache.put(&key, request, &reply.text, reply.usage)?;
        }
        Ok(CompletionResponse {
            text: reply.text,
            from_cache: false,
            latency_ms: started.elapsed().as_secs_f64() * 1e3,
            provider_token_usage: reply.usage,
        })
    }
}
