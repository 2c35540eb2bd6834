use std::net::{TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cassette::{Cassette, CassetteMode};
use crate::clock::Clock;
use crate::transport::{Request, Response};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeLocation {
    pub id: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePlan {
    pub locations: Vec<ProbeLocation>,
    pub attempts: usize,
    /// Pause between successive attempts at one location.
    #[serde(with = "duration_ms")]
    pub spread: Duration,
}

mod duration_ms {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbeError {
    #[error("invalid probe plan: {0}")]
    InvalidPlan(String),
    #[error("no probe location produced a measurement")]
    AllProbesFailed,
}

const WEIGHT_TOLERANCE: f64 = 1e-9;

impl ProbePlan {
    pub fn new(locations: Vec<ProbeLocation>, attempts: usize, spread: Duration) -> Result<Self, ProbeError> {
        let plan = Self {
            locations,
            attempts,
            spread,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), ProbeError> {
        let invalid = |m: String| Err(ProbeError::InvalidPlan(m));
        if self.locations.is_empty() {
            return invalid("no locations".into());
        }
        if self.attempts == 0 {
            return invalid("attempts must be at least 1".into());
        }
        if let Some(l) = self.locations.iter().find(|l| !(l.weight.is_finite() && l.weight >= 0.0)) {
            return invalid(format!("location {}: weight {} is not a non-negative number", l.id, l.weight));
        }
        let total: f64 = self.locations.iter().map(|l| l.weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return invalid(format!("weights sum to {total}, expected 1"));
        }
        Ok(())
    }

    /// Turkey at 0.5, four other regions at 0.125 each.
    pub fn default_plan() -> Self {
        let mut locations = vec![ProbeLocation {
            id: "tr".into(),
            weight: 0.5,
        }];
        locations.extend(["eu", "us", "asia", "oceania"].map(|id| ProbeLocation {
            id: id.into(),
            weight: 0.125,
        }));
        Self {
            locations,
            attempts: 5,
            spread: Duration::ZERO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub millis: f64,
    pub at: DateTime<Utc>,
}

/// One latency sample for `host` as seen from `location`.
pub trait LatencyProbe: Send + Sync {
    fn measure(&self, host: &str, location: &str, attempt: usize) -> Result<Measurement, String>;
}

/// Times a TCP handshake from this machine. The location label is not
/// used; run one prober per vantage point to get real geographic spread.
pub struct TcpConnectProbe {
    pub port: u16,
    pub timeout: Duration,
}

impl Default for TcpConnectProbe {
    fn default() -> Self {
        Self {
            port: 80,
            timeout: Duration::from_secs(5),
        }
    }
}

impl LatencyProbe for TcpConnectProbe {
    fn measure(&self, host: &str, _location: &str, _attempt: usize) -> Result<Measurement, String> {
        let addr = (host, self.port)
            .to_socket_addrs()
            .map_err(|e| format!("{host}: {e}"))?
            .next()
            .ok_or_else(|| format!("{host}: no address"))?;
        let at = Utc::now();
        let start = Instant::now();
        TcpStream::connect_timeout(&addr, self.timeout).map_err(|e| format!("{addr}: {e}"))?;
        Ok(Measurement {
            millis: start.elapsed().as_secs_f64() * 1e3,
            at,
        })
    }
}

/// Stores probe samples in a cassette so latency cells replay like any
/// other collected value. Failures are stored too, as status 599.
pub struct CassetteProbe {
    cassette: Arc<Cassette>,
    mode: CassetteMode,
    live: Option<Arc<dyn LatencyProbe>>,
}

const PROBE_FAILED: u16 = 599;

impl CassetteProbe {
    pub fn new(cassette: Arc<Cassette>, mode: CassetteMode, live: Option<Arc<dyn LatencyProbe>>) -> Self {
        Self { cassette, mode, live }
    }

    fn key(host: &str, location: &str, attempt: usize) -> Request {
        Request::new(&format!("probe:{location}"), &format!("latency://{host}/{attempt}"))
    }
}

impl LatencyProbe for CassetteProbe {
    fn measure(&self, host: &str, location: &str, attempt: usize) -> Result<Measurement, String> {
        let key = Self::key(host, location, attempt);
        if self.mode == CassetteMode::Replay {
            let r = self
                .cassette
                .lookup(&key)
                .ok_or_else(|| format!("{}: not recorded in cassette", key.url))?;
            if r.status != 200 {
                return Err(r.text());
            }
            let millis = r.text().parse::<f64>().map_err(|e| format!("{}: {e}", key.url))?;
            return Ok(Measurement { millis, at: r.fetched_at });
        }
        let live = self.live.as_ref().ok_or("no live prober configured")?;
        let result = live.measure(host, location, attempt);
        if self.mode == CassetteMode::Record {
            let response = match &result {
                Ok(m) => Response {
                    status: 200,
                    content_type: Some("text/plain".into()),
                    body: m.millis.to_string().into_bytes(),
                    fetched_at: m.at,
                },
                Err(e) => Response {
                    status: PROBE_FAILED,
                    content_type: Some("text/plain".into()),
                    body: e.clone().into_bytes(),
                    fetched_at: Utc::now(),
                },
            };
            if let Err(e) = self.cassette.record(&key, &response) {
                log::error!("cassette write failed: {e}");
            }
        }
        result
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationResult {
    pub id: String,
    pub weight: f64,
    /// `None` when every attempt failed.
    pub median_ms: Option<f64>,
    /// Weight actually applied after renormalizing over survivors.
    pub effective_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome {
    pub latency_ms: f64,
    pub locations: Vec<LocationResult>,
    /// Latest sample time.
    pub at: DateTime<Utc>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Weighted latency over the plan's locations, each location contributing
/// the median of its successful attempts.
pub fn probe_latency(
    host: &str,
    plan: &ProbePlan,
    probe: &dyn LatencyProbe,
    clock: &dyn Clock,
) -> Result<ProbeOutcome, ProbeError> {
    plan.validate()?;
    let mut latest: Option<DateTime<Utc>> = None;
    let mut locations: Vec<LocationResult> = plan
        .locations
        .iter()
        .map(|loc| {
            let mut samples = Vec::with_capacity(plan.attempts);
            for attempt in 0..plan.attempts {
                if attempt > 0 && !plan.spread.is_zero() {
                    clock.sleep(plan.spread);
                }
                match probe.measure(host, &loc.id, attempt) {
                    Ok(m) if m.millis.is_finite() && m.millis >= 0.0 => {
                        latest = Some(latest.map_or(m.at, |t| t.max(m.at)));
                        samples.push(m.millis);
                    }
                    Ok(m) => log::warn!("{host} from {}: discarding sample {}", loc.id, m.millis),
                    Err(e) => log::warn!("{host} from {}: {e}", loc.id),
                }
            }
            LocationResult {
                id: loc.id.clone(),
                weight: loc.weight,
                median_ms: (!samples.is_empty()).then(|| median(samples)),
                effective_weight: 0.0,
            }
        })
        .collect();

    let survivors: Vec<usize> = (0..locations.len()).filter(|&i| locations[i].median_ms.is_some()).collect();
    if survivors.is_empty() {
        return Err(ProbeError::AllProbesFailed);
    }
    let surviving_weight: f64 = survivors.iter().map(|&i| locations[i].weight).sum();
    for &i in &survivors {
        locations[i].effective_weight = if surviving_weight > 0.0 {
            locations[i].weight / surviving_weight
        } else {
            1.0 / survivors.len() as f64
        };
    }
    let medians = survivors.iter().map(|&i| locations[i].median_ms.unwrap());
    let lo = medians.clone().fold(f64::INFINITY, f64::min);
    let hi = medians.fold(f64::NEG_INFINITY, f64::max);
    let latency: f64 = survivors
        .iter()
        .map(|&i| locations[i].effective_weight * locations[i].median_ms.unwrap())
        .sum();
    Ok(ProbeOutcome {
        latency_ms: latency.clamp(lo, hi),
        locations,
        at: latest.expect("a survivor has at least one sample"),
    })
}
