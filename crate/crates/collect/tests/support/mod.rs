//! Minimal HTTP/1.1 server on a loopback port. Each response closes the
//! connection, so the connection counter equals the request count.
#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use webrep_collect::{Clock, Request, Response, Transport};

pub struct TestServer {
    port: u16,
    connections: Arc<AtomicUsize>,
    routes: Arc<Mutex<HashMap<String, (u16, String)>>>,
}

impl TestServer {
    pub fn start() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let port = listener.local_addr().unwrap().port();
        let connections = Arc::new(AtomicUsize::new(0));
        let routes: Arc<Mutex<HashMap<String, (u16, String)>>> = Arc::default();
        let (c, r) = (connections.clone(), routes.clone());
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                c.fetch_add(1, Ordering::SeqCst);
                let r = r.clone();
                std::thread::spawn(move || serve(stream, &r));
            }
        });
        Self {
            port,
            connections,
            routes,
        }
    }

    /// `path` includes the query string.
    pub fn route(&self, path: &str, status: u16, body: &str) {
        self.routes.lock().unwrap().insert(path.to_owned(), (status, body.to_owned()));
    }

    pub fn base(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }

    pub fn port(&self) -> u16 {
        self.port
    }

    pub fn connections(&self) -> usize {
        self.connections.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, routes: &Mutex<HashMap<String, (u16, String)>>) {
    stream.set_read_timeout(Some(Duration::from_secs(5))).ok();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).is_err() {
        return;
    }
    loop {
        let mut line = String::new();
        match reader.read_line(&mut line) {
            Ok(0) | Err(_) => break,
            Ok(_) if line == "\r\n" || line == "\n" => break,
            Ok(_) => {}
        }
    }
    let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_owned();
    let (status, body) = routes
        .lock()
        .unwrap()
        .get(&path)
        .cloned()
        .unwrap_or((404, "not found".to_owned()));
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\ncontent-type: text/html\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
        body.len()
    );
}

/// Transport that notes the clock reading of every request before
/// delegating.
pub struct Timed<T> {
    pub inner: T,
    pub clock: Arc<dyn Clock>,
    pub log: Mutex<Vec<(String, Duration)>>,
}

impl<T: Transport> Transport for Timed<T> {
    fn get(&self, request: &Request) -> Result<Response, webrep_collect::FetchError> {
        self.log
            .lock()
            .unwrap()
            .push((request.source_id.clone(), self.clock.elapsed()));
        self.inner.get(request)
    }
}

/// Largest number of logged requests for `source` in any window of
/// length `window` starting at a request time.
pub fn max_in_window(log: &[(String, Duration)], source: &str, window: Duration) -> usize {
    let times: Vec<Duration> = log.iter().filter(|(s, _)| s == source).map(|(_, t)| *t).collect();
    times
        .iter()
        .map(|&start| times.iter().filter(|&&t| t >= start && t < start + window).count())
        .max()
        .unwrap_or(0)
}

/// Answers every request with 200 and a fixed body at the clock's wall time.
pub struct Fixed {
    pub clock: Arc<dyn Clock>,
    pub body: String,
}

impl Transport for Fixed {
    fn get(&self, _request: &Request) -> Result<Response, webrep_collect::FetchError> {
        Ok(Response {
            status: 200,
            content_type: None,
            body: self.body.clone().into_bytes(),
            fetched_at: self.clock.wall(),
        })
    }
}
