//! JSON-over-HTTP client shared by the remote backends, with timeouts,
//! exponential-backoff retries and an on-disk response cache keyed by the
//! request content hash.

use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("request to {url} timed out after {attempts} attempt(s)")]
    Timeout { url: String, attempts: u32 },
    #[error("{url} answered HTTP {status}: {body}")]
    Status {
        url: String,
        status: u16,
        body: String,
    },
    #[error("transport error talking to {url}: {message}")]
    Transport { url: String, message: String },
    #[error("could not decode backend response: {0}")]
    Decode(String),
    #[error("no dump entry for {0}")]
    MissingEntry(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WireSettings {
    pub timeout_secs: f64,
    pub retries: u32,
    pub backoff_ms: u64,
    /// Maximum in-flight requests the endpoint accepts.
    pub concurrency: usize,
}

impl Default for WireSettings {
    fn default() -> Self {
        Self {
            timeout_secs: 30.0,
            retries: 3,
            backoff_ms: 250,
            concurrency: 4,
        }
    }
}

pub struct WireClient {
    url: String,
    settings: WireSettings,
    cache_dir: Option<PathBuf>,
    agent: ureq::Agent,
    network_calls: AtomicUsize,
}

impl std::fmt::Debug for WireClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WireClient")
            .field("url", &self.url)
            .field("settings", &self.settings)
            .field("cache_dir", &self.cache_dir)
            .finish()
    }
}

impl WireClient {
    pub fn new(url: impl Into<String>, settings: WireSettings, cache_dir: Option<PathBuf>) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs_f64(settings.timeout_secs))
            .build();
        Self {
            url: url.into(),
            settings,
            cache_dir,
            agent,
            network_calls: AtomicUsize::new(0),
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn settings(&self) -> &WireSettings {
        &self.settings
    }

    /// Requests that actually went over the network (cache hits excluded).
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::Relaxed)
    }

    pub fn post<Req, Resp>(&self, request: &Req) -> Result<Resp, BackendError>
    where
        Req: Serialize,
        Resp: Serialize + DeserializeOwned,
    {
        let body =
            serde_json::to_string(request).map_err(|e| BackendError::Decode(e.to_string()))?;
        let cache_path = self.cache_dir.as_ref().map(|dir| {
            dir.join(format!(
                "{}.json",
                content_hash(&[self.url.as_bytes(), body.as_bytes()])
            ))
        });
        if let Some(path) = &cache_path {
            if let Ok(cached) = fs::read_to_string(path) {
                if let Ok(resp) = serde_json::from_str(&cached) {
                    return Ok(resp);
                }
            }
        }
        let resp: Resp = self.post_with_retries(&body)?;
        if let Some(path) = &cache_path {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir)?;
            }
            let text =
                serde_json::to_string(&resp).map_err(|e| BackendError::Decode(e.to_string()))?;
            let tmp = path.with_extension("tmp");
            fs::write(&tmp, text)?;
            fs::rename(tmp, path)?;
        }
        Ok(resp)
    }

    fn post_with_retries<Resp: DeserializeOwned>(&self, body: &str) -> Result<Resp, BackendError> {
        let attempts = self.settings.retries + 1;
        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                let wait = self
                    .settings
                    .backoff_ms
                    .saturating_mul(1 << (attempt - 1).min(16));
                thread::sleep(Duration::from_millis(wait));
            }
            self.network_calls.fetch_add(1, Ordering::Relaxed);
            let result = self
                .agent
                .post(&self.url)
                .set("Content-Type", "application/json")
                .send_string(body);
            match result {
                Ok(resp) => {
                    let text = resp
                        .into_string()
                        .map_err(|e| BackendError::Decode(e.to_string()))?;
                    return serde_json::from_str(&text)
                        .map_err(|e| BackendError::Decode(e.to_string()));
                }
                Err(ureq::Error::Status(status, resp)) => {
                    let err = BackendError::Status {
                        url: self.url.clone(),
                        status,
                        body: resp.into_string().unwrap_or_default(),
                    };
                    if status < 500 && status != 429 {
                        return Err(err);
                    }
                    last = Some(err);
                }
                Err(ureq::Error::Transport(t)) => {
                    let message = t.to_string();
                    last = Some(if is_timeout(&t) {
                        BackendError::Timeout {
                            url: self.url.clone(),
                            attempts: attempt + 1,
                        }
                    } else {
                        BackendError::Transport {
                            url: self.url.clone(),
                            message,
                        }
                    });
                }
            }
        }
        Err(match last {
            Some(BackendError::Timeout { url, .. }) => BackendError::Timeout { url, attempts },
            Some(e) => e,
            None => unreachable!("at least one attempt is made"),
        })
    }
}

fn is_timeout(t: &ureq::Transport) -> bool {
    use std::error::Error;
    let mut source = t.source();
    while let Some(e) = source {
        if let Some(io) = e.downcast_ref::<std::io::Error>() {
            if matches!(
                io.kind(),
                std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock
            ) {
                return true;
            }
        }
        source = e.source();
    }
    t.to_string().to_lowercase().contains("timed out")
}

/// Hex SHA-256 over the concatenation of `parts`, each length-prefixed.
pub fn content_hash(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
