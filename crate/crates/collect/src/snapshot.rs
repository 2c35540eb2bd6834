use std::collections::BTreeSet;
use std::fs::File;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use webrep_core::indicator::SnapshotError;
use webrep_core::{slugify, EntityRecord, IndicatorSet, Provenance, RawValue, Snapshot};

use crate::probe::{probe_latency, LatencyProbe, ProbePlan};
use crate::source::{CellIssue, CellOutcome, Collector, IssueKind, SourceDescriptor, SourceError};

pub const PROBE_SOURCE_ID: &str = "probe";
pub const UNSOURCED: &str = "unsourced";

/// An entity to collect for, with the host its sources are queried about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub name: String,
    #[serde(default)]
    pub slug: Option<String>,
    pub population: u64,
    pub host: String,
}

impl Target {
    pub fn slug(&self) -> String {
        self.slug.clone().filter(|s| !s.is_empty()).unwrap_or_else(|| slugify(&self.name))
    }
}

pub struct ProbeJob<'a> {
    pub plan: &'a ProbePlan,
    pub probe: &'a dyn LatencyProbe,
    pub indicator_id: String,
}

pub struct CollectConfig {
    pub parallelism: usize,
    pub label: String,
}

#[derive(Debug, Error)]
pub enum CollectError {
    #[error("no targets to collect")]
    NoTargets,
    #[error("no sources configured")]
    NoSources,
    #[error("parallelism must be at least 1")]
    Parallelism,
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error("source {source_id} targets unknown indicator {indicator_id}")]
    UnknownIndicator { source_id: String, indicator_id: String },
    #[error("indicator {0} has more than one source")]
    DuplicateIndicator(String),
    #[error(transparent)]
    Probe(#[from] crate::probe::ProbeError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("{path}: {message}")]
    Input { path: String, message: String },
}

#[derive(Debug, Clone)]
pub struct CollectReport {
    pub snapshot: Snapshot,
    /// Every cell that came back Missing, in entity then indicator order.
    pub issues: Vec<CellIssue>,
}

enum Task {
    Cell { entity: usize, source: usize },
    Probe { entity: usize },
}

fn check_inputs(
    targets: &[Target],
    sources: &[SourceDescriptor],
    probe: Option<&ProbeJob>,
    set: &IndicatorSet,
    config: &CollectConfig,
) -> Result<(), CollectError> {
    if targets.is_empty() {
        return Err(CollectError::NoTargets);
    }
    if sources.is_empty() && probe.is_none() {
        return Err(CollectError::NoSources);
    }
    if config.parallelism == 0 {
        return Err(CollectError::Parallelism);
    }
    let mut covered = BTreeSet::new();
    let claims = sources
        .iter()
        .map(|s| (s.source_id.as_str(), s.indicator_id.as_str()))
        .chain(probe.map(|p| (PROBE_SOURCE_ID, p.indicator_id.as_str())));
    for (source_id, indicator_id) in claims {
        if !set.contains(indicator_id) {
            return Err(CollectError::UnknownIndicator {
                source_id: source_id.to_owned(),
                indicator_id: indicator_id.to_owned(),
            });
        }
        if !covered.insert(indicator_id) {
            return Err(CollectError::DuplicateIndicator(indicator_id.to_owned()));
        }
    }
    for s in sources {
        s.validate()?;
    }
    if let Some(p) = probe {
        p.plan.validate()?;
    }
    Ok(())
}

/// Collects every (target, indicator) cell. Fetches run on up to
/// `config.parallelism` threads; assembly is sequential, so the result
/// depends only on what the transport returns.
pub fn collect_snapshot(
    collector: &Collector,
    targets: &[Target],
    sources: &[SourceDescriptor],
    probe: Option<ProbeJob>,
    indicator_set: &IndicatorSet,
    config: &CollectConfig,
) -> Result<CollectReport, CollectError> {
    check_inputs(targets, sources, probe.as_ref(), indicator_set, config)?;

    let mut tasks = Vec::new();
    for entity in 0..targets.len() {
        tasks.extend((0..sources.len()).map(|source| Task::Cell { entity, source }));
        if probe.is_some() {
            tasks.push(Task::Probe { entity });
        }
    }
    let slots: Vec<Mutex<Option<(String, String, CellOutcome)>>> = tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);

    let run = |task: &Task| -> (String, String, CellOutcome) {
        match *task {
            Task::Cell { entity, source } => {
                let s = &sources[source];
                let outcome = collector.collect_value(&targets[entity].host, s);
                (s.indicator_id.clone(), s.source_id.clone(), outcome)
            }
            Task::Probe { entity } => {
                let job = probe.as_ref().expect("probe task implies a probe job");
                let host = &targets[entity].host;
                let outcome = match probe_latency(host, job.plan, job.probe, collector.clock().as_ref()) {
                    Ok(out) => CellOutcome {
                        value: RawValue::number(
                            out.latency_ms,
                            Provenance::Collected {
                                source_id: PROBE_SOURCE_ID.into(),
                                at: out.at,
                            },
                        ),
                        issue: None,
                    },
                    Err(e) => {
                        log::warn!("{host}: {e}");
                        CellOutcome {
                            value: RawValue::missing(Provenance::Collected {
                                source_id: PROBE_SOURCE_ID.into(),
                                at: collector.clock().wall(),
                            }),
                            issue: Some(IssueKind::Probe(e.to_string())),
                        }
                    }
                };
                (job.indicator_id.clone(), PROBE_SOURCE_ID.into(), outcome)
            }
        }
    };

    std::thread::scope(|scope| {
        for _ in 0..config.parallelism.min(tasks.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(task) = tasks.get(i) else { break };
                *slots[i].lock().unwrap() = Some(run(task));
            });
        }
    });

    let mut outcomes = slots.into_iter().map(|m| m.into_inner().unwrap().expect("every task ran"));
    let per_entity = sources.len() + usize::from(probe.is_some());
    let mut entities = Vec::with_capacity(targets.len());
    let mut cells = Vec::with_capacity(targets.len());
    for target in targets {
        let mut record = EntityRecord::new(&target.name, target.population);
        record.slug = target.slug();
        let collected: Vec<_> = outcomes.by_ref().take(per_entity).collect();
        cells.push(collected);
        entities.push(record);
    }

    let collected_at = cells
        .iter()
        .flatten()
        .filter_map(|(_, _, o)| match &o.value.provenance {
            Provenance::Collected { at, .. } => Some(*at),
            _ => None,
        })
        .max();
    let stamp: DateTime<Utc> = collected_at.unwrap_or_else(|| collector.clock().wall());

    let mut issues = Vec::new();
    for (record, collected) in entities.iter_mut().zip(cells) {
        for spec in indicator_set.iter() {
            let found = collected.iter().find(|(id, _, _)| *id == spec.id);
            let (value, issue) = match found {
                Some((_, source_id, o)) => (o.value.clone(), o.issue.clone().map(|k| (source_id.clone(), k))),
                None => (
                    RawValue::missing(Provenance::Collected {
                        source_id: UNSOURCED.into(),
                        at: stamp,
                    }),
                    Some((UNSOURCED.to_owned(), IssueKind::NoSource)),
                ),
            };
            if let Some((source_id, kind)) = issue {
                issues.push(CellIssue {
                    slug: record.slug.clone(),
                    indicator_id: spec.id.clone(),
                    source_id,
                    kind,
                });
            }
            record.set(&spec.id, value);
        }
    }

    let snapshot = Snapshot::new(&config.label, Some(stamp), indicator_set.clone(), entities)?;
    Ok(CollectReport { snapshot, issues })
}

fn input_error(path: &Path, message: impl ToString) -> CollectError {
    CollectError::Input {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

/// CSV with columns `name,population,host` and an optional `slug`.
pub fn load_targets(path: &Path) -> Result<Vec<Target>, CollectError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| input_error(path, e))?;
    reader
        .deserialize()
        .collect::<Result<Vec<Target>, _>>()
        .map_err(|e| input_error(path, e))
}

/// JSON array of source descriptors.
pub fn load_sources(path: &Path) -> Result<Vec<SourceDescriptor>, CollectError> {
    let file = File::open(path).map_err(|e| input_error(path, e))?;
    let sources: Vec<SourceDescriptor> =
        serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| input_error(path, e))?;
    for s in &sources {
        s.validate()?;
    }
    Ok(sources)
}
