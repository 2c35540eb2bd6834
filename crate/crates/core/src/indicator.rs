//! Indicator universe, entity records and snapshots.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorKind {
    Count,
    Boolean,
    CurrencyUsd,
    Milliseconds,
    Seconds,
    Percentage,
    Ratio,
}

/// Whether a larger indicator value raises or lowers reputation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSpec {
    pub id: String,
    pub name: String,
    pub kind: IndicatorKind,
    pub polarity: Polarity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collector_hint: Option<String>,
}

impl IndicatorSpec {
    pub fn new(id: &str, name: &str, kind: IndicatorKind, polarity: Polarity) -> Self {
        Self {
            id: id.to_owned(),
            name: name.to_owned(),
            kind,
            polarity,
            collector_hint: None,
        }
    }

    pub fn with_hint(mut self, hint: &str) -> Self {
        self.collector_hint = Some(hint.to_owned());
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndicatorSetError {
    #[error("indicator set is empty")]
    Empty,
    #[error("duplicate indicator id `{0}`")]
    DuplicateId(String),
    #[error("indicator set has no positive indicators")]
    NoPositive,
}

/// Ordered list of indicator specs. Order fixes the summation order of the
/// aggregate, so results are reproducible bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<IndicatorSpec>", into = "Vec<IndicatorSpec>")]
pub struct IndicatorSet {
    specs: Vec<IndicatorSpec>,
}

impl IndicatorSet {
    pub fn new(specs: Vec<IndicatorSpec>) -> Result<Self, IndicatorSetError> {
        if specs.is_empty() {
            return Err(IndicatorSetError::Empty);
        }
        let mut seen = BTreeSet::new();
        for spec in &specs {
            if !seen.insert(spec.id.as_str()) {
                return Err(IndicatorSetError::DuplicateId(spec.id.clone()));
            }
        }
        if !specs.iter().any(|s| s.polarity == Polarity::Positive) {
            return Err(IndicatorSetError::NoPositive);
        }
        Ok(Self { specs })
    }

    pub fn specs(&self) -> &[IndicatorSpec] {
        &self.specs
    }

    pub fn iter(&self) -> std::slice::Iter<'_, IndicatorSpec> {
        self.specs.iter()
    }

    /// Total indicator count (K).
    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// Count of positive-polarity indicators (C).
    pub fn positive_count(&self) -> usize {
        self.specs
            .iter()
            .filter(|s| s.polarity == Polarity::Positive)
            .count()
    }

    pub fn get(&self, id: &str) -> Option<&IndicatorSpec> {
        self.specs.iter().find(|s| s.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.get(id).is_some()
    }

    pub fn polarity(&self, id: &str) -> Option<Polarity> {
        self.get(id).map(|s| s.polarity)
    }

    /// Copy of this set with one indicator dropped.
    pub fn without(&self, id: &str) -> Result<Self, IndicatorSetError> {
        Self::new(self.specs.iter().filter(|s| s.id != id).cloned().collect())
    }

    /// Copy of this set with the polarity of `id` replaced. Unknown ids are ignored.
    pub fn with_polarity(&self, id: &str, polarity: Polarity) -> Result<Self, IndicatorSetError> {
        let specs = self
            .specs
            .iter()
            .cloned()
            .map(|mut s| {
                if s.id == id {
                    s.polarity = polarity;
                }
                s
            })
            .collect();
        Self::new(specs)
    }
}

impl TryFrom<Vec<IndicatorSpec>> for IndicatorSet {
    type Error = IndicatorSetError;

    fn try_from(specs: Vec<IndicatorSpec>) -> Result<Self, Self::Error> {
        Self::new(specs)
    }
}

impl From<IndicatorSet> for Vec<IndicatorSpec> {
    fn from(set: IndicatorSet) -> Self {
        set.specs
    }
}

impl Default for IndicatorSet {
    fn default() -> Self {
        build_default_indicator_set()
    }
}

/// The sixteen-indicator web reputation set. Only the Alexa rank and the
/// Alexa bounce rate are negative; ping latency is kept positive.
pub fn build_default_indicator_set() -> IndicatorSet {
    use IndicatorKind::*;
    use Polarity::*;

    let specs = vec![
        IndicatorSpec::new("fb_has_page", "Has a Facebook page", Boolean, Positive).with_hint("facebook"),
        IndicatorSpec::new("fb_likes", "Facebook like count", Count, Positive).with_hint("facebook"),
        IndicatorSpec::new("site_value_usd", "Estimated site value (USD)", CurrencyUsd, Positive)
            .with_hint("site-valuation"),
        IndicatorSpec::new("yahoo_backlinks", "Yahoo! backlinks", Count, Positive).with_hint("yahoo"),
        IndicatorSpec::new("google_backlinks", "Google backlinks", Count, Positive).with_hint("google"),
        IndicatorSpec::new("dmoz_listed", "Listed in DMOZ", Boolean, Positive).with_hint("dmoz"),
        IndicatorSpec::new("google_indexed", "Google indexed pages", Count, Positive).with_hint("google"),
        IndicatorSpec::new("yahoo_indexed", "Yahoo! indexed pages", Count, Positive).with_hint("yahoo"),
        IndicatorSpec::new("daily_unique_visitors", "Daily unique visitors", Count, Positive)
            .with_hint("traffic"),
        IndicatorSpec::new("plagiarism_count", "Plagiarism robot matches", Count, Positive)
            .with_hint("plagiarism"),
        IndicatorSpec::new("speed_ping_ms", "Weighted ping latency (ms)", Milliseconds, Positive)
            .with_hint("probe"),
        IndicatorSpec::new("alexa_rank", "Alexa rank", Count, Negative).with_hint("alexa"),
        IndicatorSpec::new("alexa_bounce", "Alexa bounce rate (%)", Percentage, Negative).with_hint("alexa"),
        IndicatorSpec::new("pageviews_per_user", "Page views per user", Ratio, Positive).with_hint("alexa"),
        IndicatorSpec::new("time_on_site_s", "Daily time on site (s)", Seconds, Positive).with_hint("alexa"),
        IndicatorSpec::new("sites_linking_in", "Sites linking in", Count, Positive).with_hint("alexa"),
    ];
    IndicatorSet::new(specs).expect("default indicator set is well formed")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Value {
    Number(f64),
    Boolean(bool),
    Missing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Provenance {
    Collected { source_id: String, at: DateTime<Utc> },
    FileImport,
    Fixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawValue {
    pub value: Value,
    pub provenance: Provenance,
}

impl RawValue {
    pub fn number(value: f64, provenance: Provenance) -> Self {
        Self { value: Value::Number(value), provenance }
    }

    pub fn boolean(value: bool, provenance: Provenance) -> Self {
        Self { value: Value::Boolean(value), provenance }
    }

    pub fn missing(provenance: Provenance) -> Self {
        Self { value: Value::Missing, provenance }
    }

    pub fn is_missing(&self) -> bool {
        self.value == Value::Missing
    }

    /// Numeric view used by the pipeline: booleans become exactly 0 or 1,
    /// missing values are `None`.
    pub fn as_f64(&self) -> Option<f64> {
        match self.value {
            Value::Number(v) => Some(v),
            Value::Boolean(b) => Some(if b { 1.0 } else { 0.0 }),
            Value::Missing => None,
        }
    }
}

/// ASCII key derived from a display name: diacritics folded, lowercased,
/// runs of non-alphanumerics collapsed to `-`.
pub fn slugify(name: &str) -> String {
    let folded = deunicode::deunicode(name).to_ascii_lowercase();
    let mut slug = String::with_capacity(folded.len());
    for c in folded.chars() {
        if c.is_ascii_alphanumeric() {
            slug.push(c);
        } else if !slug.is_empty() && !slug.ends_with('-') {
            slug.push('-');
        }
    }
    while slug.ends_with('-') {
        slug.pop();
    }
    slug
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub name: String,
    pub slug: String,
    /// Student count.
    pub population: u64,
    #[serde(default)]
    pub values: BTreeMap<String, RawValue>,
}

impl EntityRecord {
    pub fn new(name: &str, population: u64) -> Self {
        Self {
            name: name.to_owned(),
            slug: slugify(name),
            population,
            values: BTreeMap::new(),
        }
    }

    pub fn with_value(mut self, indicator_id: &str, value: RawValue) -> Self {
        self.values.insert(indicator_id.to_owned(), value);
        self
    }

    pub fn set(&mut self, indicator_id: &str, value: RawValue) {
        self.values.insert(indicator_id.to_owned(), value);
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SnapshotError {
    #[error("duplicate entity slug `{0}`")]
    DuplicateSlug(String),
    #[error("entity `{slug}` has a value for unknown indicator `{indicator}`")]
    UnknownIndicator { slug: String, indicator: String },
    #[error("entity with empty slug (name `{0}`)")]
    EmptySlug(String),
}

/// All raw indicator values for a set of entities at one point in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collected_at: Option<DateTime<Utc>>,
    pub indicator_set: IndicatorSet,
    pub entities: Vec<EntityRecord>,
}

impl Snapshot {
    pub fn new(
        label: &str,
        collected_at: Option<DateTime<Utc>>,
        indicator_set: IndicatorSet,
        entities: Vec<EntityRecord>,
    ) -> Result<Self, SnapshotError> {
        let snapshot = Self {
            label: label.to_owned(),
            collected_at,
            indicator_set,
            entities,
        };
        snapshot.check_structure()?;
        Ok(snapshot)
    }

    /// Structural invariants: unique non-empty slugs, no values for
    /// indicators outside the set.
    pub fn check_structure(&self) -> Result<(), SnapshotError> {
        let mut slugs = BTreeSet::new();
        for entity in &self.entities {
            if entity.slug.is_empty() {
                return Err(SnapshotError::EmptySlug(entity.name.clone()));
            }
            if !slugs.insert(entity.slug.as_str()) {
                return Err(SnapshotError::DuplicateSlug(entity.slug.clone()));
            }
            if let Some(key) = entity.values.keys().find(|k| !self.indicator_set.contains(k)) {
                return Err(SnapshotError::UnknownIndicator {
                    slug: entity.slug.clone(),
                    indicator: key.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn entity(&self, slug: &str) -> Option<&EntityRecord> {
        self.entities.iter().find(|e| e.slug == slug)
    }

    /// SHA-256 over the canonical JSON encoding, hex encoded.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("snapshot serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Copy with one indicator removed from the set and from every entity.
    pub fn without_indicator(&self, id: &str) -> Result<Self, IndicatorSetError> {
        let mut copy = self.clone();
        copy.indicator_set = self.indicator_set.without(id)?;
        for entity in &mut copy.entities {
            entity.values.remove(id);
        }
        Ok(copy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WarningKind {
    Missing,
    OutOfRange { value: f64, low: f64, high: f64 },
    KindMismatch { expected: IndicatorKind },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Warning {
    pub slug: String,
    pub indicator_id: String,
    pub kind: WarningKind,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            WarningKind::Missing => write!(f, "{}: {} is missing", self.slug, self.indicator_id),
            WarningKind::OutOfRange { value, low, high } => write!(
                f,
                "{}: {} = {} outside plausible range [{}, {}]",
                self.slug, self.indicator_id, value, low, high
            ),
            WarningKind::KindMismatch { expected } => write!(
                f,
                "{}: {} value does not match indicator kind {:?}",
                self.slug, self.indicator_id, expected
            ),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("{slug}: {indicator} is not finite")]
    NonFinite { slug: String, indicator: String },
    #[error(transparent)]
    Structure(#[from] SnapshotError),
}

/// Plausibility bounds per indicator kind. Bounds are generous: they catch
/// unit mistakes and garbage, not unusual institutions.
pub fn plausible_range(kind: IndicatorKind) -> (f64, f64) {
    match kind {
        IndicatorKind::Boolean => (0.0, 1.0),
        IndicatorKind::Percentage => (0.0, 100.0),
        IndicatorKind::Milliseconds => (0.0, 60_000.0),
        IndicatorKind::Seconds => (0.0, 86_400.0),
        IndicatorKind::Count | IndicatorKind::CurrencyUsd | IndicatorKind::Ratio => (0.0, f64::INFINITY),
    }
}

/// Soft checks on a snapshot. Absent and `Missing` cells both produce a
/// missing-value warning. Never mutates the snapshot.
pub fn validate_snapshot(snapshot: &Snapshot) -> Result<Vec<Warning>, ValidationError> {
    snapshot.check_structure()?;
    let mut warnings = Vec::new();
    for entity in &snapshot.entities {
        for spec in snapshot.indicator_set.iter() {
            let warn = |kind| Warning {
                slug: entity.slug.clone(),
                indicator_id: spec.id.clone(),
                kind,
            };
            match entity.values.get(&spec.id).map(|v| v.value) {
                None | Some(Value::Missing) => warnings.push(warn(WarningKind::Missing)),
                Some(Value::Boolean(_)) => {
                    if spec.kind != IndicatorKind::Boolean {
                        warnings.push(warn(WarningKind::KindMismatch { expected: spec.kind }));
                    }
                }
                Some(Value::Number(v)) => {
                    if !v.is_finite() {
                        return Err(ValidationError::NonFinite {
                            slug: entity.slug.clone(),
                            indicator: spec.id.clone(),
                        });
                    }
                    let (low, high) = plausible_range(spec.kind);
                    if spec.kind == IndicatorKind::Boolean && v != 0.0 && v != 1.0 {
                        warnings.push(warn(WarningKind::KindMismatch { expected: spec.kind }));
                    } else if v < low || v > high {
                        warnings.push(warn(WarningKind::OutOfRange { value: v, low, high }));
                    }
                }
            }
        }
    }
    Ok(warnings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_entity(name: &str, bounce: f64) -> EntityRecord {
        let mut e = EntityRecord::new(name, 1000);
        for spec in build_default_indicator_set().iter() {
            let v = match spec.kind {
                IndicatorKind::Boolean => RawValue::boolean(true, Provenance::Fixture),
                _ => RawValue::number(10.0, Provenance::Fixture),
            };
            e.set(&spec.id, v);
        }
        e.set("alexa_bounce", RawValue::number(bounce, Provenance::Fixture));
        e
    }

    fn snapshot_of(entities: Vec<EntityRecord>) -> Snapshot {
        Snapshot::new("t", None, build_default_indicator_set(), entities).unwrap()
    }

    #[test]
    fn default_set_shape() {
        let set = build_default_indicator_set();
        assert_eq!(set.len(), 16);
        assert_eq!(set.positive_count(), 14);
        let negatives: Vec<_> = set
            .iter()
            .filter(|s| s.polarity == Polarity::Negative)
            .map(|s| s.id.as_str())
            .collect();
        assert_eq!(negatives, ["alexa_rank", "alexa_bounce"]);
        assert_eq!(set.polarity("alexa_bounce"), Some(Polarity::Negative));
        assert_eq!(set.polarity("speed_ping_ms"), Some(Polarity::Positive));
        let ids: Vec<_> = set.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(
            ids,
            [
                "fb_has_page", "fb_likes", "site_value_usd", "yahoo_backlinks",
                "google_backlinks", "dmoz_listed", "google_indexed", "yahoo_indexed",
                "daily_unique_visitors", "plagiarism_count", "speed_ping_ms", "alexa_rank",
                "alexa_bounce", "pageviews_per_user", "time_on_site_s", "sites_linking_in",
            ]
        );
    }

    #[test]
    fn set_rejects_duplicates_and_all_negative() {
        let a = IndicatorSpec::new("a", "A", IndicatorKind::Count, Polarity::Positive);
        assert_eq!(
            IndicatorSet::new(vec![a.clone(), a.clone()]),
            Err(IndicatorSetError::DuplicateId("a".into()))
        );
        let n = IndicatorSpec::new("n", "N", IndicatorKind::Count, Polarity::Negative);
        assert_eq!(IndicatorSet::new(vec![n]), Err(IndicatorSetError::NoPositive));
        assert_eq!(IndicatorSet::new(vec![]), Err(IndicatorSetError::Empty));
    }

    #[test]
    fn set_json_rejects_duplicates() {
        let json = r#"[{"id":"a","name":"A","kind":"count","polarity":"positive"},
                       {"id":"a","name":"A","kind":"count","polarity":"positive"}]"#;
        assert!(serde_json::from_str::<IndicatorSet>(json).is_err());
    }

    #[test]
    fn slugs_fold_turkish_letters() {
        assert_eq!(slugify("İstanbul Üniversitesi"), "istanbul-universitesi");
        assert_eq!(slugify("Ağrı İbrahim Çeçen Üniversitesi"), "agri-ibrahim-cecen-universitesi");
        assert_eq!(slugify("Şırnak Üniversitesi"), "sirnak-universitesi");
        assert_eq!(slugify("Kilis 7 Aralık Üniversitesi"), "kilis-7-aralik-universitesi");
        assert_eq!(slugify("  Bezmîâlem  "), "bezmialem");
    }

    #[test]
    fn boolean_maps_to_unit_values() {
        assert_eq!(RawValue::boolean(true, Provenance::Fixture).as_f64(), Some(1.0));
        assert_eq!(RawValue::boolean(false, Provenance::Fixture).as_f64(), Some(0.0));
        assert_eq!(RawValue::missing(Provenance::Fixture).as_f64(), None);
    }

    #[test]
    fn structure_errors() {
        let e = EntityRecord::new("A", 1);
        let err = Snapshot::new("t", None, build_default_indicator_set(), vec![e.clone(), e]).unwrap_err();
        assert_eq!(err, SnapshotError::DuplicateSlug("a".into()));

        let e = EntityRecord::new("A", 1).with_value("nope", RawValue::missing(Provenance::Fixture));
        let err = Snapshot::new("t", None, build_default_indicator_set(), vec![e]).unwrap_err();
        assert!(matches!(err, SnapshotError::UnknownIndicator { .. }));
    }

    #[test]
    fn bounce_at_published_maximum_is_plausible() {
        let s = snapshot_of(vec![full_entity("A", 90.0)]);
        assert!(validate_snapshot(&s).unwrap().is_empty());
    }

    #[test]
    fn bounce_over_hundred_warns() {
        let s = snapshot_of(vec![full_entity("A", 150.0)]);
        let w = validate_snapshot(&s).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].indicator_id, "alexa_bounce");
        assert!(matches!(w[0].kind, WarningKind::OutOfRange { high, .. } if high == 100.0));
    }

    #[test]
    fn missing_like_count_warns() {
        let mut e = full_entity("A", 50.0);
        e.set("fb_likes", RawValue::missing(Provenance::Fixture));
        let mut absent = full_entity("B", 50.0);
        absent.values.remove("fb_likes");
        let w = validate_snapshot(&snapshot_of(vec![e, absent])).unwrap();
        assert_eq!(w.len(), 2);
        assert!(w.iter().all(|w| w.kind == WarningKind::Missing && w.indicator_id == "fb_likes"));
    }

    #[test]
    fn negative_count_and_slow_ping_warn() {
        let mut e = full_entity("A", 50.0);
        e.set("yahoo_backlinks", RawValue::number(-1.0, Provenance::Fixture));
        e.set("speed_ping_ms", RawValue::number(60_001.0, Provenance::Fixture));
        e.set("dmoz_listed", RawValue::number(0.5, Provenance::Fixture));
        let w = validate_snapshot(&snapshot_of(vec![e])).unwrap();
        assert_eq!(w.len(), 3);
    }

    #[test]
    fn non_finite_is_hard_error() {
        let mut e = full_entity("A", 50.0);
        e.set("fb_likes", RawValue::number(f64::NAN, Provenance::Fixture));
        let err = validate_snapshot(&snapshot_of(vec![e])).unwrap_err();
        assert!(matches!(err, ValidationError::NonFinite { .. }));
    }

    #[test]
    fn validation_is_pure() {
        let mut e = full_entity("A", 150.0);
        e.set("fb_likes", RawValue::missing(Provenance::Fixture));
        let s = snapshot_of(vec![e, full_entity("B", 10.0)]);
        let before = s.content_hash();
        let first = validate_snapshot(&s).unwrap();
        let second = validate_snapshot(&s).unwrap();
        assert_eq!(first, second);
        assert_eq!(before, s.content_hash());
    }

    #[test]
    fn without_indicator_drops_values() {
        let s = snapshot_of(vec![full_entity("A", 1.0)]);
        let t = s.without_indicator("dmoz_listed").unwrap();
        assert_eq!(t.indicator_set.len(), 15);
        assert!(!t.entities[0].values.contains_key("dmoz_listed"));
        t.check_structure().unwrap();
    }
}
