mod support;

use std::sync::Arc;
use std::time::Duration;

use chrono::DateTime;
use webrep_collect::{
    collect_snapshot, Cassette, CassetteTransport, Clock, CollectConfig, Collector, ExtractionRule, FetchError,
    HttpConfig, HttpTransport, IssueKind, SourceDescriptor, SystemClock, Target, Transport, VirtualClock,
};
use webrep_core::{build_default_indicator_set, Provenance, Value};

use support::{max_in_window, Fixed, TestServer, Timed};

const HOSTS: [&str; 3] = ["anadolu.edu.tr", "ankara.edu.tr", "metu.edu.tr"];

fn http() -> Arc<dyn Transport> {
    Arc::new(
        HttpTransport::new(HttpConfig {
            use_env_proxy: false,
            ..HttpConfig::default()
        })
        .unwrap(),
    )
}

fn server() -> TestServer {
    let s = TestServer::start();
    for (i, host) in HOSTS.iter().enumerate() {
        let links = [80400, 1_250, 33_120][i];
        s.route(
            &format!("/backlinks?site={host}"),
            200,
            &format!("<p>Results: Inlinks ({})</p>", links.to_string().replace("80400", "80,400")),
        );
        s.route(&format!("/graph/{host}"), 200, &format!(r#"{{"likes": {}}}"#, 1000 * (i + 1)));
    }
    s
}

fn sources(base: &str) -> Vec<SourceDescriptor> {
    vec![
        SourceDescriptor {
            source_id: "yahoo".into(),
            indicator_id: "yahoo_backlinks".into(),
            endpoint: format!("{base}/backlinks?site={{host}}"),
            extract: ExtractionRule::Regex {
                pattern: r"Inlinks \(([\d,]+)\)".into(),
            },
            rate_limit: 50.0,
        },
        SourceDescriptor {
            source_id: "facebook".into(),
            indicator_id: "fb_likes".into(),
            endpoint: format!("{base}/graph/{{host}}"),
            extract: ExtractionRule::JsonPointer {
                pointer: "/likes".into(),
            },
            rate_limit: 50.0,
        },
    ]
}

fn targets() -> Vec<Target> {
    HOSTS
        .iter()
        .enumerate()
        .map(|(i, h)| Target {
            name: format!("University {i}"),
            slug: None,
            population: 10_000 * (i as u64 + 1),
            host: (*h).to_owned(),
        })
        .collect()
}

fn config() -> CollectConfig {
    CollectConfig {
        parallelism: 3,
        label: "cassette-run".into(),
    }
}

fn replay_collector(dir: &std::path::Path) -> Collector {
    let cassette = Arc::new(Cassette::open(dir).unwrap());
    Collector::new(Arc::new(CassetteTransport::replay(cassette)), Arc::new(SystemClock::new()))
}

#[test]
fn backlinks_page_replays_as_number() {
    let server = server();
    let dir = tempfile::tempdir().unwrap();
    let source = &sources(&server.base())[0];
    let cassette = Arc::new(Cassette::open(dir.path()).unwrap());
    let recorder = Collector::new(
        Arc::new(CassetteTransport::record(cassette, http())),
        Arc::new(SystemClock::new()),
    );
    let live = recorder.collect_value("anadolu.edu.tr", source);
    assert_eq!(live.value.value, Value::Number(80400.0));

    let before = server.connections();
    let a = replay_collector(dir.path()).collect_value("anadolu.edu.tr", source);
    let b = replay_collector(dir.path()).collect_value("anadolu.edu.tr", source);
    assert_eq!(server.connections(), before);
    assert_eq!(a, live);
    assert_eq!(a, b);
    assert!(matches!(a.value.provenance, Provenance::Collected { ref source_id, .. } if source_id == "yahoo"));
}

#[test]
fn not_found_is_missing_with_fetch_error() {
    let server = server();
    let collector = Collector::new(http(), Arc::new(SystemClock::new()));
    let out = collector.collect_value("unknown.edu.tr", &sources(&server.base())[0]);
    assert!(out.value.is_missing());
    assert!(matches!(out.issue, Some(IssueKind::Fetch(FetchError::Status { status: 404, .. }))));
}

#[test]
fn record_then_replay_is_byte_identical() {
    let server = server();
    let dir = tempfile::tempdir().unwrap();
    let set = build_default_indicator_set();
    let srcs = sources(&server.base());

    let cassette = Arc::new(Cassette::open(dir.path()).unwrap());
    let recorder = Collector::new(
        Arc::new(CassetteTransport::record(cassette, http())),
        Arc::new(SystemClock::new()),
    );
    let recorded = collect_snapshot(&recorder, &targets(), &srcs, None, &set, &config()).unwrap();
    assert_eq!(server.connections(), 6);

    let first = collect_snapshot(&replay_collector(dir.path()), &targets(), &srcs, None, &set, &config()).unwrap();
    let second = collect_snapshot(&replay_collector(dir.path()), &targets(), &srcs, None, &set, &config()).unwrap();
    assert_eq!(server.connections(), 6);

    let bytes = |r: &webrep_collect::CollectReport| serde_json::to_vec(&r.snapshot).unwrap();
    assert_eq!(bytes(&recorded), bytes(&first));
    assert_eq!(bytes(&first), bytes(&second));
    assert_eq!(first.snapshot.content_hash(), second.snapshot.content_hash());

    let collected: usize = first
        .snapshot
        .entities
        .iter()
        .map(|e| e.values.values().filter(|v| !v.is_missing()).count())
        .sum();
    assert_eq!(collected, 6);
    let e = first.snapshot.entity("university-2").unwrap();
    assert_eq!(e.values["yahoo_backlinks"].value, Value::Number(33120.0));
    assert_eq!(e.values["fb_likes"].value, Value::Number(3000.0));
}

#[test]
fn failing_source_leaves_its_column_missing() {
    let server = server();
    let set = build_default_indicator_set();
    let mut srcs = sources(&server.base());
    srcs[1].endpoint = format!("{}/gone/{{host}}", server.base());
    let collector = Collector::new(http(), Arc::new(SystemClock::new()));
    let report = collect_snapshot(&collector, &targets(), &srcs, None, &set, &config()).unwrap();
    for e in &report.snapshot.entities {
        assert!(e.values["fb_likes"].is_missing());
        assert!(!e.values["yahoo_backlinks"].is_missing());
    }
    let fb_issues = report.issues.iter().filter(|i| i.source_id == "facebook").count();
    assert_eq!(fb_issues, 3);
}

#[test]
fn parse_failure_is_missing_with_parse_error() {
    let server = server();
    server.route("/backlinks?site=odd.edu.tr", 200, "<p>no count today</p>");
    let collector = Collector::new(http(), Arc::new(SystemClock::new()));
    let out = collector.collect_value("odd.edu.tr", &sources(&server.base())[0]);
    assert!(out.value.is_missing());
    assert!(matches!(out.issue, Some(IssueKind::Parse(_))));
}

#[test]
fn parallel_collection_respects_rate_limits_in_virtual_time() {
    let clock: Arc<dyn Clock> = Arc::new(VirtualClock::new(DateTime::UNIX_EPOCH));
    let transport = Arc::new(Timed {
        inner: Fixed {
            clock: clock.clone(),
            body: "7".into(),
        },
        clock: clock.clone(),
        log: Default::default(),
    });
    let mut srcs = sources("http://x");
    for s in &mut srcs {
        s.extract = ExtractionRule::PlainNumber;
    }
    srcs[0].rate_limit = 3.0;
    srcs[1].rate_limit = 0.5;
    let targets: Vec<Target> = (0..20)
        .map(|i| Target {
            name: format!("U{i}"),
            slug: None,
            population: 1,
            host: format!("u{i}.edu.tr"),
        })
        .collect();
    let collector = Collector::new(transport.clone(), clock.clone());
    let cfg = CollectConfig {
        parallelism: 8,
        label: "v".into(),
    };
    let report = collect_snapshot(&collector, &targets, &srcs, None, &build_default_indicator_set(), &cfg).unwrap();
    assert!(report.issues.iter().all(|i| i.source_id == "unsourced"));

    let log = transport.log.lock().unwrap();
    assert_eq!(log.len(), 40);
    assert!(max_in_window(&log, "yahoo", Duration::from_secs(1)) <= 3);
    assert!(max_in_window(&log, "facebook", Duration::from_secs(2)) <= 1);
}
