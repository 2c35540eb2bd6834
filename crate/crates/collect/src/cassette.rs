//! Record/replay of HTTP exchanges for offline, deterministic collection.
//!
//! A cassette is a directory. `index.json` maps `(source_id, url)` keys to
//! entry files; each entry file holds the request line, a small header
//! subset and the raw response body:
//!
//! ```text
//! GET https://example.org/backlinks?site=anadolu.edu.tr
//! x-webrep-source: yahoo-backlinks
//!
//! HTTP/1.1 200
//! x-webrep-recorded-at: 2013-07-01T10:00:00.000000000Z
//! content-type: text/html
//!
//! <body bytes, verbatim>
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::transport::{FetchError, Request, Response, Transport};

const INDEX_FILE: &str = "index.json";
const SOURCE_HEADER: &str = "x-webrep-source";
const RECORDED_HEADER: &str = "x-webrep-recorded-at";

#[derive(Debug, Error)]
pub enum CassetteError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Index {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: malformed entry: {reason}")]
    Malformed { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CassetteMode {
    /// Forward to the live transport and store every response.
    Record,
    /// Serve stored responses only; never touches the network.
    Replay,
    /// Forward to the live transport, store nothing.
    Passthrough,
}

#[derive(Serialize, Deserialize)]
struct IndexEntry {
    source_id: String,
    url: String,
    file: String,
}

#[derive(Serialize, Deserialize, Default)]
struct Index {
    entries: Vec<IndexEntry>,
}

pub struct Cassette {
    dir: PathBuf,
    entries: Mutex<BTreeMap<Request, Response>>,
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CassetteError + '_ {
    move |source| CassetteError::Io {
        path: path.to_owned(),
        source,
    }
}

fn entry_file_name(request: &Request) -> String {
    let digest = Sha256::digest(format!("{}\n{}", request.source_id, request.url).as_bytes());
    format!("{}.http", &hex::encode(digest)[..16])
}

fn encode_entry(request: &Request, response: &Response) -> Vec<u8> {
    let mut out = format!(
        "GET {}\n{SOURCE_HEADER}: {}\n\nHTTP/1.1 {}\n{RECORDED_HEADER}: {}\n",
        request.url,
        request.source_id,
        response.status,
        response.fetched_at.to_rfc3339_opts(SecondsFormat::Nanos, true),
    );
    if let Some(ct) = &response.content_type {
        out.push_str(&format!("content-type: {ct}\n"));
    }
    out.push('\n');
    let mut bytes = out.into_bytes();
    bytes.extend_from_slice(&response.body);
    bytes
}

fn split_block(bytes: &[u8]) -> Option<(&[u8], &[u8])> {
    let at = bytes.windows(2).position(|w| w == b"\n\n")?;
    Some((&bytes[..at], &bytes[at + 2..]))
}

fn decode_entry(path: &Path, bytes: &[u8]) -> Result<(Request, Response), CassetteError> {
    let malformed = |reason: &str| CassetteError::Malformed {
        path: path.to_owned(),
        reason: reason.to_owned(),
    };
    let (request_block, rest) = split_block(bytes).ok_or_else(|| malformed("no request block"))?;
    let (response_head, body) = split_block(rest).ok_or_else(|| malformed("no response head"))?;
    let request_block = std::str::from_utf8(request_block).map_err(|_| malformed("request is not UTF-8"))?;
    let response_head = std::str::from_utf8(response_head).map_err(|_| malformed("head is not UTF-8"))?;

    let mut lines = request_block.lines();
    let url = lines
        .next()
        .and_then(|l| l.strip_prefix("GET "))
        .ok_or_else(|| malformed("bad request line"))?;
    let source_id = lines
        .find_map(|l| l.strip_prefix(SOURCE_HEADER).and_then(|v| v.strip_prefix(": ")))
        .ok_or_else(|| malformed("missing source header"))?;

    let mut lines = response_head.lines();
    let status = lines
        .next()
        .and_then(|l| l.strip_prefix("HTTP/1.1 "))
        .and_then(|s| s.trim().parse::<u16>().ok())
        .ok_or_else(|| malformed("bad status line"))?;
    let mut fetched_at = None;
    let mut content_type = None;
    for line in lines {
        if let Some(v) = line.strip_prefix(RECORDED_HEADER).and_then(|v| v.strip_prefix(": ")) {
            fetched_at = Some(
                DateTime::parse_from_rfc3339(v)
                    .map_err(|_| malformed("bad timestamp"))?
                    .with_timezone(&Utc),
            );
        } else if let Some(v) = line.strip_prefix("content-type: ") {
            content_type = Some(v.to_owned());
        }
    }
    Ok((
        Request::new(source_id, url),
        Response {
            status,
            content_type,
            body: body.to_vec(),
            fetched_at: fetched_at.ok_or_else(|| malformed("missing timestamp"))?,
        },
    ))
}

impl Cassette {
    /// Opens (or creates) the cassette directory and loads its entries.
    pub fn open(dir: &Path) -> Result<Self, CassetteError> {
        fs::create_dir_all(dir).map_err(io_error(dir))?;
        let index_path = dir.join(INDEX_FILE);
        let mut entries = BTreeMap::new();
        if index_path.exists() {
            let text = fs::read(&index_path).map_err(io_error(&index_path))?;
            let index: Index = serde_json::from_slice(&text).map_err(|source| CassetteError::Index {
                path: index_path.clone(),
                source,
            })?;
            for entry in index.entries {
                let path = dir.join(&entry.file);
                let bytes = fs::read(&path).map_err(io_error(&path))?;
                let (request, response) = decode_entry(&path, &bytes)?;
                if request.source_id != entry.source_id || request.url != entry.url {
                    return Err(CassetteError::Malformed {
                        path,
                        reason: "entry does not match its index key".into(),
                    });
                }
                entries.insert(request, response);
            }
        }
        Ok(Self {
            dir: dir.to_owned(),
            entries: Mutex::new(entries),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lookup(&self, request: &Request) -> Option<Response> {
        self.entries.lock().unwrap().get(request).cloned()
    }

    /// Stores one exchange and rewrites the index. Entries are written
    /// before the index so a crash never leaves dangling index keys.
    pub fn record(&self, request: &Request, response: &Response) -> Result<(), CassetteError> {
        let mut entries = self.entries.lock().unwrap();
        let path = self.dir.join(entry_file_name(request));
        fs::write(&path, encode_entry(request, response)).map_err(io_error(&path))?;
        entries.insert(request.clone(), response.clone());

        let index = Index {
            entries: entries
                .keys()
                .map(|r| IndexEntry {
                    source_id: r.source_id.clone(),
                    url: r.url.clone(),
                    file: entry_file_name(r),
                })
                .collect(),
        };
        let index_path = self.dir.join(INDEX_FILE);
        let mut json = serde_json::to_vec_pretty(&index).expect("index serializes");
        json.push(b'\n');
        fs::write(&index_path, json).map_err(io_error(&index_path))
    }
}

/// Transport wrapper implementing the three cassette modes.
pub struct CassetteTransport {
    cassette: Arc<Cassette>,
    mode: CassetteMode,
    live: Option<Arc<dyn Transport>>,
}

impl CassetteTransport {
    pub fn record(cassette: Arc<Cassette>, live: Arc<dyn Transport>) -> Self {
        Self {
            cassette,
            mode: CassetteMode::Record,
            live: Some(live),
        }
    }

    /// Replay holds no live transport at all.
    pub fn replay(cassette: Arc<Cassette>) -> Self {
        Self {
            cassette,
            mode: CassetteMode::Replay,
            live: None,
        }
    }

    pub fn passthrough(cassette: Arc<Cassette>, live: Arc<dyn Transport>) -> Self {
        Self {
            cassette,
            mode: CassetteMode::Passthrough,
            live: Some(live),
        }
    }

    pub fn mode(&self) -> CassetteMode {
        self.mode
    }

    pub fn cassette(&self) -> &Arc<Cassette> {
        &self.cassette
    }
}

impl Transport for CassetteTransport {
    fn get(&self, request: &Request) -> Result<Response, FetchError> {
        let live = || {
            self.live.as_ref().ok_or_else(|| FetchError::Offline {
                url: request.url.clone(),
            })
        };
        match self.mode {
            CassetteMode::Replay => self.cassette.lookup(request).ok_or_else(|| FetchError::NotRecorded {
                url: request.url.clone(),
            }),
            CassetteMode::Passthrough => live()?.get(request),
            CassetteMode::Record => {
                let response = live()?.get(request)?;
                if let Err(e) = self.cassette.record(request, &response) {
                    log::error!("cassette write failed: {e}");
                }
                Ok(response)
            }
        }
    }
}
