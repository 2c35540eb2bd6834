use std::time::Duration;

use chrono::{DateTime, Utc};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Request {
    pub source_id: String,
    pub url: String,
}

impl Request {
    pub fn new(source_id: &str, url: &str) -> Self {
        Self {
            source_id: source_id.to_owned(),
            url: url.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
    pub fetched_at: DateTime<Utc>,
}

impl Response {
    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FetchError {
    #[error("{url}: {message}")]
    Network { url: String, message: String },
    #[error("{url}: HTTP {status}")]
    Status { url: String, status: u16 },
    #[error("{url}: not recorded in cassette")]
    NotRecorded { url: String },
    #[error("{url}: live requests are disabled")]
    Offline { url: String },
}

/// Anything that can answer a GET.
pub trait Transport: Send + Sync {
    fn get(&self, request: &Request) -> Result<Response, FetchError>;
}

pub struct HttpConfig {
    pub timeout: Duration,
    pub user_agent: String,
    /// Honour `HTTP_PROXY` and friends.
    pub use_env_proxy: bool,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(20),
            user_agent: concat!("webrep/", env!("CARGO_PKG_VERSION")).to_owned(),
            use_env_proxy: true,
        }
    }
}

/// Plain HTTP(S) GET over reqwest's blocking client.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(config: HttpConfig) -> Result<Self, FetchError> {
        let mut builder = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .user_agent(config.user_agent);
        if !config.use_env_proxy {
            builder = builder.no_proxy();
        }
        let client = builder.build().map_err(|e| FetchError::Network {
            url: String::new(),
            message: e.to_string(),
        })?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn get(&self, request: &Request) -> Result<Response, FetchError> {
        let network = |e: reqwest::Error| FetchError::Network {
            url: request.url.clone(),
            message: e.to_string(),
        };
        let response = self.client.get(&request.url).send().map_err(network)?;
        let status = response.status().as_u16();
        let content_type = response
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .map(str::to_owned);
        let body = response.bytes().map_err(network)?.to_vec();
        Ok(Response {
            status,
            content_type,
            body,
            fetched_at: Utc::now(),
        })
    }
}

/// Refuses every request. Stands in for the network where none is allowed.
#[derive(Default)]
pub struct OfflineTransport {
    attempts: std::sync::atomic::AtomicUsize,
}

impl OfflineTransport {
    pub fn attempts(&self) -> usize {
        self.attempts.load(std::sync::atomic::Ordering::SeqCst)
    }
}

impl Transport for OfflineTransport {
    fn get(&self, request: &Request) -> Result<Response, FetchError> {
        self.attempts.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        Err(FetchError::Offline {
            url: request.url.clone(),
        })
    }
}
