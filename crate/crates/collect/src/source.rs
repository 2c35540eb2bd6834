use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use webrep_core::{Provenance, RawValue};

use crate::clock::Clock;
use crate::rate_limit::RateLimiter;
use crate::transport::{FetchError, Request, Transport};

pub const HOST_PLACEHOLDER: &str = "{host}";

/// How a response body becomes a value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ExtractionRule {
    /// First capture group (or the whole match) read as a number.
    /// Thousands separators `,` and `_` and inner whitespace are dropped.
    Regex { pattern: String },
    /// RFC 6901 pointer into a JSON body; numbers, booleans and numeric
    /// strings are accepted.
    JsonPointer { pointer: String },
    /// Boolean: does the body match?
    Matches { pattern: String },
    /// The whole body, trimmed, is a number.
    PlainNumber,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDescriptor {
    pub source_id: String,
    pub indicator_id: String,
    /// URL template with exactly one `{host}`.
    pub endpoint: String,
    pub extract: ExtractionRule,
    /// Requests per second.
    pub rate_limit: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SourceError {
    #[error("source {0}: rate limit must be a positive number")]
    RateLimit(String),
    #[error("source {source_id}: endpoint must contain exactly one {HOST_PLACEHOLDER}, found {found}")]
    Placeholder { source_id: String, found: usize },
    #[error("source {source_id}: bad pattern: {message}")]
    Pattern { source_id: String, message: String },
    #[error("source with empty id")]
    EmptyId,
}

impl SourceDescriptor {
    pub fn validate(&self) -> Result<(), SourceError> {
        if self.source_id.is_empty() {
            return Err(SourceError::EmptyId);
        }
        if !(self.rate_limit.is_finite() && self.rate_limit > 0.0) {
            return Err(SourceError::RateLimit(self.source_id.clone()));
        }
        let found = self.endpoint.matches(HOST_PLACEHOLDER).count();
        if found != 1 {
            return Err(SourceError::Placeholder {
                source_id: self.source_id.clone(),
                found,
            });
        }
        if let ExtractionRule::Regex { pattern } | ExtractionRule::Matches { pattern } = &self.extract {
            Regex::new(pattern).map_err(|e| SourceError::Pattern {
                source_id: self.source_id.clone(),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn url_for(&self, host: &str) -> String {
        self.endpoint.replacen(HOST_PLACEHOLDER, host, 1)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{0}")]
pub struct ParseError(pub String);

fn parse_number(text: &str) -> Result<f64, ParseError> {
    let cleaned: String = text
        .trim()
        .chars()
        .filter(|c| !matches!(c, ',' | '_') && !c.is_whitespace())
        .collect();
    match cleaned.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ParseError(format!("not a number: {:?}", text.trim()))),
    }
}

impl ExtractionRule {
    pub fn extract(&self, body: &str) -> Result<webrep_core::Value, ParseError> {
        use webrep_core::Value;
        let bad_pattern = |e: regex::Error| ParseError(format!("bad pattern: {e}"));
        match self {
            ExtractionRule::Regex { pattern } => {
                let re = Regex::new(pattern).map_err(bad_pattern)?;
                let caps = re
                    .captures(body)
                    .ok_or_else(|| ParseError(format!("pattern {pattern:?} did not match")))?;
                let m = caps.get(1).or_else(|| caps.get(0)).expect("group 0 always present");
                parse_number(m.as_str()).map(Value::Number)
            }
            ExtractionRule::Matches { pattern } => {
                let re = Regex::new(pattern).map_err(bad_pattern)?;
                Ok(Value::Boolean(re.is_match(body)))
            }
            ExtractionRule::PlainNumber => parse_number(body).map(Value::Number),
            ExtractionRule::JsonPointer { pointer } => {
                let doc: serde_json::Value =
                    serde_json::from_str(body).map_err(|e| ParseError(format!("invalid JSON: {e}")))?;
                match doc.pointer(pointer) {
                    Some(serde_json::Value::Bool(b)) => Ok(Value::Boolean(*b)),
                    Some(serde_json::Value::Number(n)) => n
                        .as_f64()
                        .filter(|v| v.is_finite())
                        .map(Value::Number)
                        .ok_or_else(|| ParseError(format!("{pointer}: number out of range"))),
                    Some(serde_json::Value::String(s)) => parse_number(s).map(Value::Number),
                    Some(other) => Err(ParseError(format!("{pointer}: unexpected {other}"))),
                    None => Err(ParseError(format!("{pointer}: not found"))),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IssueKind {
    Fetch(FetchError),
    Parse(ParseError),
    Probe(String),
    NoSource,
}

/// A cell that ended up Missing, and why.
#[derive(Debug, Clone, PartialEq)]
pub struct CellIssue {
    pub slug: String,
    pub indicator_id: String,
    pub source_id: String,
    pub kind: IssueKind,
}

impl fmt::Display for CellIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} via {}: ", self.slug, self.indicator_id, self.source_id)?;
        match &self.kind {
            IssueKind::Fetch(e) => write!(f, "fetch failed: {e}"),
            IssueKind::Parse(e) => write!(f, "parse failed: {e}"),
            IssueKind::Probe(e) => write!(f, "probe failed: {e}"),
            IssueKind::NoSource => write!(f, "no source configured"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub value: RawValue,
    pub issue: Option<IssueKind>,
}

/// Fetches and parses single cells, honouring per-source rate limits.
pub struct Collector {
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    limiters: Mutex<HashMap<String, Arc<RateLimiter>>>,
}

impl Collector {
    pub fn new(transport: Arc<dyn Transport>, clock: Arc<dyn Clock>) -> Self {
        Self {
            transport,
            clock,
            limiters: Mutex::new(HashMap::new()),
        }
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    fn limiter(&self, source: &SourceDescriptor) -> Arc<RateLimiter> {
        self.limiters
            .lock()
            .unwrap()
            .entry(source.source_id.clone())
            .or_insert_with(|| Arc::new(RateLimiter::new(source.rate_limit, self.clock.clone())))
            .clone()
    }

    /// Never fails: fetch and parse problems come back as a Missing value
    /// with the reason attached.
    pub fn collect_value(&self, host: &str, source: &SourceDescriptor) -> CellOutcome {
        let request = Request::new(&source.source_id, &source.url_for(host));
        self.limiter(source).acquire();
        let provenance = |at: DateTime<Utc>| Provenance::Collected {
            source_id: source.source_id.clone(),
            at,
        };
        let response = match self.transport.get(&request) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{}: {e}", source.source_id);
                return CellOutcome {
                    value: RawValue::missing(provenance(self.clock.wall())),
                    issue: Some(IssueKind::Fetch(e)),
                };
            }
        };
        if !response.is_success() {
            let e = FetchError::Status {
                url: request.url,
                status: response.status,
            };
            log::warn!("{}: {e}", source.source_id);
            return CellOutcome {
                value: RawValue::missing(provenance(response.fetched_at)),
                issue: Some(IssueKind::Fetch(e)),
            };
        }
        match source.extract.extract(&response.text()) {
            Ok(value) => CellOutcome {
                value: RawValue {
                    value,
                    provenance: provenance(response.fetched_at),
                },
                issue: None,
            },
            Err(e) => {
                log::warn!("{} {}: {e}", source.source_id, request.url);
                CellOutcome {
                    value: RawValue::missing(provenance(response.fetched_at)),
                    issue: Some(IssueKind::Parse(e)),
                }
            }
        }
    }
}
