//! Raw indicator acquisition: HTTP sources with per-source rate limits,
//! weighted multi-location latency probing, and cassettes that record and
//! replay every exchange for offline, repeatable runs.

pub mod cassette;
pub mod clock;
pub mod probe;
pub mod rate_limit;
pub mod snapshot;
pub mod source;
pub mod transport;

pub use cassette::{Cassette, CassetteError, CassetteMode, CassetteTransport};
pub use clock::{Clock, SystemClock, VirtualClock};
pub use probe::{
    probe_latency, CassetteProbe, LatencyProbe, Measurement, ProbeError, ProbeLocation, ProbeOutcome, ProbePlan,
    TcpConnectProbe,
};
pub use rate_limit::RateLimiter;
pub use snapshot::{
    collect_snapshot, load_sources, load_targets, CollectConfig, CollectError, CollectReport, ProbeJob, Target,
};
pub use source::{CellIssue, CellOutcome, Collector, ExtractionRule, IssueKind, ParseError, SourceDescriptor};
pub use transport::{FetchError, HttpConfig, HttpTransport, OfflineTransport, Request, Response, Transport};
