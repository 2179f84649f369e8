//! Text-generation backends: a chat-completions client and a
//! content-addressed record/replay cache in front of it.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_API_KEY_ENV: &str = "SELFHWDEBUG_API_KEY";
pub const CACHE_DIR_ENV: &str = "SELFHWDEBUG_CACHE_DIR";
pub const DEFAULT_ENDPOINT: &str = "https://api.groq.com/openai/v1";

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("rate limited{}", .retry_after.map(|d| format!(" (retry after {}s)", d.as_secs_f64())).unwrap_or_default())]
    RateLimited { retry_after: Option<Duration> },
    #[error("transport error: {0}")]
    TransportError(String),
    #[error("no cached response for fingerprint {0}")]
    CacheMiss(String),
    #[error("model returned an empty response")]
    EmptyResponse,
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("cache entry {path}: {detail}")]
    Cache { path: PathBuf, detail: String },
}

fn default_temperature() -> f64 {
    0.6
}
fn default_top_p() -> f64 {
    1.0
}
fn default_max_tokens() -> u32 {
    2048
}
fn default_endpoint() -> String {
    DEFAULT_ENDPOINT.to_string()
}
fn default_key_env() -> String {
    DEFAULT_API_KEY_ENV.to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model_name: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_top_p")]
    pub top_p: f64,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
}

impl ModelConfig {
    pub fn new(model_name: &str) -> Self {
        ModelConfig {
            model_name: model_name.to_string(),
            temperature: default_temperature(),
            top_p: default_top_p(),
            max_output_tokens: default_max_tokens(),
            endpoint: default_endpoint(),
            api_key_env: default_key_env(),
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        let bad = |m: String| Err(ProviderError::InvalidConfig(m));
        if self.model_name.trim().is_empty() {
            return bad("empty model_name".into());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad(format!("top_p {} outside (0, 1]", self.top_p));
        }
        if self.max_output_tokens == 0 {
            return bad("max_output_tokens must be positive".into());
        }
        if self.endpoint.trim().is_empty() {
            return bad("empty endpoint".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProviderMode {
    Live,
    Replay,
    RecordThenReplay,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub total_tokens: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub usage: Option<Usage>,
    pub cache_hit: bool,
    pub request_fingerprint: String,
}

#[derive(Serialize)]
struct FingerprintFields<'a> {
    model: &'a str,
    temperature: f64,
    top_p: f64,
    prompt: &'a str,
}

/// SHA-256 (hex) of the canonical JSON of model, sampling parameters and prompt.
pub fn fingerprint(model: &str, temperature: f64, top_p: f64, prompt: &str) -> String {
    let canonical = serde_json::to_vec(&FingerprintFields {
        model,
        temperature,
        top_p,
        prompt,
    })
    .expect("plain struct serializes");
    hex::encode(Sha256::digest(canonical))
}

pub fn config_fingerprint(config: &ModelConfig, prompt: &str) -> String {
    fingerprint(&config.model_name, config.temperature, config.top_p, prompt)
}

/// On-disk form of one recorded exchange.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub fingerprint: String,
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    pub prompt: String,
    pub response: String,
    #[serde(default)]
    pub usage: Option<Usage>,
}

/// Write-once store of `<dir>/<fingerprint>.json` files.
#[derive(Clone, Debug)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ResponseCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, fingerprint: &str) -> PathBuf {
        self.dir.join(format!("{fingerprint}.json"))
    }

    pub fn get(&self, fingerprint: &str) -> Result<Option<CacheEntry>, ProviderError> {
        let path = self.path_for(fingerprint);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => {
                return Err(ProviderError::Cache {
                    path,
                    detail: e.to_string(),
                })
            }
        };
        let entry: CacheEntry = serde_json::from_str(&text).map_err(|e| ProviderError::Cache {
            path: path.clone(),
            detail: e.to_string(),
        })?;
        if entry.fingerprint != fingerprint {
            return Err(ProviderError::Cache {
                path,
                detail: format!("records fingerprint {}", entry.fingerprint),
            });
        }
        Ok(Some(entry))
    }

    /// Stores the entry unless one already exists. Returns whether it wrote.
    pub fn put(&self, entry: &CacheEntry) -> Result<bool, ProviderError> {
        let path = self.path_for(&entry.fingerprint);
        let err = |detail: String| ProviderError::Cache {
            path: path.clone(),
            detail,
        };
        if path.exists() {
            return Ok(false);
        }
        std::fs::create_dir_all(&self.dir).map_err(|e| err(e.to_string()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| err(e.to_string()))?;
        let mut text = serde_json::to_string_pretty(entry).map_err(|e| err(e.to_string()))?;
        text.push('\n');
        std::io::Write::write_all(&mut tmp, text.as_bytes()).map_err(|e| err(e.to_string()))?;
        match tmp.persist_noclobber(&path) {
            Ok(_) => Ok(true),
            Err(e) if e.error.kind() == std::io::ErrorKind::AlreadyExists => Ok(false),
            Err(e) => Err(err(e.error.to_string())),
        }
    }
}

/// Cache directory: `SELFHWDEBUG_CACHE_DIR` if set, else the configured one.
pub fn resolve_cache_dir(configured: &Path) -> PathBuf {
    match std::env::var_os(CACHE_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => configured.to_path_buf(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub retry_after: Option<Duration>,
    pub body: String,
}

/// One HTTP POST with a JSON body. `Err` means no reply was received.
pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, bearer: &str, body: &Value) -> Result<HttpReply, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build();
        UreqTransport {
            agent: ureq::Agent::new_with_config(config),
        }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(180))
    }
}

impl Transport for UreqTransport {
    fn post_json(&self, url: &str, bearer: &str, body: &Value) -> Result<HttpReply, String> {
        let mut resp = self
            .agent
            .post(url)
            .header("Authorization", &format!("Bearer {bearer}"))
            .send_json(body)
            .map_err(|e| e.to_string())?;
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|s| s.is_finite() && *s >= 0.0)
            .map(Duration::from_secs_f64);
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok(HttpReply {
            status,
            retry_after,
            body,
        })
    }
}

type Handler = dyn Fn(&str, &Value) -> Result<HttpReply, String> + Send + Sync;

/// Transport backed by a closure; counts and records every request.
pub struct CallbackTransport {
    handler: Box<Handler>,
    calls: AtomicUsize,
    requests: Mutex<Vec<Value>>,
}

impl CallbackTransport {
    pub fn new(handler: impl Fn(&str, &Value) -> Result<HttpReply, String> + Send + Sync + 'static) -> Self {
        CallbackTransport {
            handler: Box::new(handler),
            calls: AtomicUsize::new(0),
            requests: Mutex::new(Vec::new()),
        }
    }

    /// Replies to every request with a chat completion carrying `text`.
    pub fn constant(text: &str) -> Self {
        let body = chat_reply_body(text);
        Self::new(move |_, _| {
            Ok(HttpReply {
                status: 200,
                retry_after: None,
                body: body.clone(),
            })
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<Value> {
        self.requests.lock().unwrap().clone()
    }
}

impl Transport for CallbackTransport {
    fn post_json(&self, url: &str, _bearer: &str, body: &Value) -> Result<HttpReply, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.requests.lock().unwrap().push(body.clone());
        (self.handler)(url, body)
    }
}

/// A minimal successful chat-completions response body.
pub fn chat_reply_body(text: &str) -> String {
    json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]}).to_string()
}

/// Counting semaphore bounding in-flight requests.
struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
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

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    /// Upper bound on any single wait, including server-requested ones.
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            base_delay: Duration::from_secs(2),
            max_delay: Duration::from_secs(120),
        }
    }
}

impl RetryPolicy {
    /// Wait before attempt `attempt + 1` (attempt is 1-based).
    pub fn delay(&self, attempt: u32, retry_after: Option<Duration>) -> Duration {
        let backoff = self.base_delay.saturating_mul(1u32 << (attempt - 1).min(16));
        retry_after.unwrap_or(backoff).min(self.max_delay)
    }
}

type Sleeper = dyn Fn(Duration) + Send + Sync;
type KeyLookup = dyn Fn(&str) -> Option<String> + Send + Sync;

pub struct Provider {
    mode: ProviderMode,
    cache: ResponseCache,
    transport: Arc<dyn Transport>,
    limiter: Semaphore,
    retry: RetryPolicy,
    sleeper: Box<Sleeper>,
    key_lookup: Box<KeyLookup>,
}

impl Provider {
    pub fn new(mode: ProviderMode, cache_dir: impl Into<PathBuf>) -> Self {
        Provider {
            mode,
            cache: ResponseCache::new(cache_dir),
            transport: Arc::new(UreqTransport::default()),
            limiter: Semaphore::new(2),
            retry: RetryPolicy::default(),
            sleeper: Box::new(std::thread::sleep),
            key_lookup: Box::new(|name| std::env::var(name).ok()),
        }
    }

    pub fn with_transport(mut self, transport: Arc<dyn Transport>) -> Self {
        self.transport = transport;
        self
    }

    pub fn with_max_in_flight(mut self, n: usize) -> Self {
        self.limiter = Semaphore::new(n);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_sleeper(mut self, sleeper: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleeper = Box::new(sleeper);
        self
    }

    pub fn with_key_lookup(mut self, lookup: impl Fn(&str) -> Option<String> + Send + Sync + 'static) -> Self {
        self.key_lookup = Box::new(lookup);
        self
    }

    pub fn mode(&self) -> ProviderMode {
        self.mode
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    pub fn complete(&self, config: &ModelConfig, prompt: &str) -> Result<Completion, ProviderError> {
        config.validate()?;
        let fp = config_fingerprint(config, prompt);
        if self.mode != ProviderMode::Live {
            if let Some(entry) = self.cache.get(&fp)? {
                if entry.response.trim().is_empty() {
                    return Err(ProviderError::EmptyResponse);
                }
                log::debug!("cache hit {fp}");
                return Ok(Completion {
                    text: entry.response,
                    usage: entry.usage,
                    cache_hit: true,
                    request_fingerprint: fp,
                });
            }
            if self.mode == ProviderMode::Replay {
                return Err(ProviderError::CacheMiss(fp));
            }
        }
        let (text, usage) = self.live(config, prompt)?;
        if self.mode == ProviderMode::RecordThenReplay {
            self.cache.put(&CacheEntry {
                fingerprint: fp.clone(),
                model: config.model_name.clone(),
                temperature: config.temperature,
                top_p: config.top_p,
                prompt: prompt.to_string(),
                response: text.clone(),
                usage: usage.clone(),
            })?;
        }
        Ok(Completion {
            text,
            usage,
            cache_hit: false,
            request_fingerprint: fp,
        })
    }

    fn live(&self, config: &ModelConfig, prompt: &str) -> Result<(String, Option<Usage>), ProviderError> {
        let key = (self.key_lookup)(&config.api_key_env)
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| ProviderError::MissingApiKey(config.api_key_env.clone()))?;
        let url = format!("{}/chat/completions", config.endpoint.trim_end_matches('/'));
        let body = json!({
            "model": config.model_name,
            "temperature": config.temperature,
            "top_p": config.top_p,
            "max_tokens": config.max_output_tokens,
            "messages": [{"role": "user", "content": prompt}],
        });
        let attempts = self.retry.max_attempts.max(1);
        for attempt in 1..=attempts {
            let last = attempt == attempts;
            let reply = {
                let _permit = self.limiter.acquire();
                self.transport.post_json(&url, &key, &body)
            };
            let wait_hint = match reply {
                Ok(r) if (200..300).contains(&r.status) => return parse_reply(&r.body),
                Ok(r) if r.status == 429 => {
                    if last {
                        return Err(ProviderError::RateLimited {
                            retry_after: r.retry_after,
                        });
                    }
                    r.retry_after
                }
                Ok(r) if r.status == 408 || r.status >= 500 => {
                    if last {
                        return Err(ProviderError::TransportError(status_detail(&r)));
                    }
                    r.retry_after
                }
                Ok(r) => return Err(ProviderError::TransportError(status_detail(&r))),
                Err(e) => {
                    if last {
                        return Err(ProviderError::TransportError(e));
                    }
                    None
                }
            };
            let delay = self.retry.delay(attempt, wait_hint);
            log::warn!("request to {url} failed (attempt {attempt}/{attempts}); retrying in {delay:?}");
            (self.sleeper)(delay);
        }
        unreachable!("loop returns on the last attempt")
    }
}

fn status_detail(r: &HttpReply) -> String {
    let snippet: String = r.body.chars().take(200).collect();
    format!("HTTP {}: {snippet}", r.status)
}

fn parse_reply(body: &str) -> Result<(String, Option<Usage>), ProviderError> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| ProviderError::TransportError(format!("response is not JSON: {e}")))?;
    let text = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| ProviderError::TransportError("response has no choices[0].message.content".into()))?;
    if text.trim().is_empty() {
        return Err(ProviderError::EmptyResponse);
    }
    let usage = v.get("usage").map(|u| Usage {
        prompt_tokens: u.get("prompt_tokens").and_then(Value::as_u64),
        completion_tokens: u.get("completion_tokens").and_then(Value::as_u64),
        total_tokens: u.get("total_tokens").and_then(Value::as_u64),
    });
    Ok((text.to_string(), usage))
}
