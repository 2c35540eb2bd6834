//! Min-max scaling of indicator series and polarity signing.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::indicator::{Polarity, Snapshot};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalizeError {
    #[error("series `{0}` is empty")]
    EmptySeries(String),
    #[error("series `{indicator}` has a non-finite value at `{key}`")]
    NonFinite { indicator: String, key: String },
    #[error("snapshot has {0} entities; at least 2 are required")]
    TooFewEntities(usize),
}

/// Result of scaling a plain slice onto [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Scaled<T> {
    pub values: Vec<T>,
    pub min: T,
    pub max: T,
    pub degenerate: bool,
}

/// `(x - min) / (max - min)` for every element. A constant slice maps to
/// all zeros and is flagged degenerate. Non-finite input yields the index
/// of the first offending element.
pub fn min_max_scale<T: Scalar>(values: &[T]) -> Result<Scaled<T>, Option<usize>> {
    if values.is_empty() {
        return Err(None);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Some(i));
    }
    let (min, max) = values
        .iter()
        .fold((values[0], values[0]), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if min == max {
        return Ok(Scaled {
            values: vec![T::zero(); values.len()],
            min,
            max,
            degenerate: true,
        });
    }
    let span = max - min;
    Ok(Scaled {
        values: values.iter().map(|&v| (v - min) / span).collect(),
        min,
        max,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedSeries<T> {
    pub indicator_id: String,
    pub values: BTreeMap<String, T>,
    pub source_min: T,
    pub source_max: T,
    pub degenerate: bool,
}

pub fn min_max_normalize<T: Scalar>(
    indicator_id: &str,
    series: &BTreeMap<String, T>,
) -> Result<NormalizedSeries<T>, NormalizeError> {
    let raw: Vec<T> = series.values().copied().collect();
    let scaled = min_max_scale(&raw).map_err(|at| match at {
        None => NormalizeError::EmptySeries(indicator_id.to_owned()),
        Some(i) => NormalizeError::NonFinite {
            indicator: indicator_id.to_owned(),
            key: series.keys().nth(i).cloned().unwrap_or_default(),
        },
    })?;
    Ok(NormalizedSeries {
        indicator_id: indicator_id.to_owned(),
        values: series.keys().cloned().zip(scaled.values).collect(),
        source_min: scaled.min,
        source_max: scaled.max,
        degenerate: scaled.degenerate,
    })
}

/// Normalized series with polarity applied: negative indicators live in [-1, 0].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignedSeries<T> {
    pub indicator_id: String,
    pub polarity: Polarity,
    pub values: BTreeMap<String, T>,
    pub degenerate: bool,
}

pub fn apply_polarity<T: Scalar>(series: &NormalizedSeries<T>, polarity: Polarity) -> SignedSeries<T> {
    let values = match polarity {
        Polarity::Positive => series.values.clone(),
        // 0 - v keeps a zero as +0 rather than -0.
        Polarity::Negative => series
            .values
            .iter()
            .map(|(k, &v)| (k.clone(), T::zero() - v))
            .collect(),
    };
    SignedSeries {
        indicator_id: series.indicator_id.clone(),
        polarity,
        values,
        degenerate: series.degenerate,
    }
}

/// Raw numeric series for one indicator. Booleans enter as 0/1 and missing
/// or absent cells as 0.
pub fn raw_series<T: Scalar>(snapshot: &Snapshot, indicator_id: &str) -> BTreeMap<String, T> {
    snapshot
        .entities
        .iter()
        .map(|e| {
            let v = e.values.get(indicator_id).and_then(|r| r.as_f64()).unwrap_or(0.0);
            (e.slug.clone(), T::of(v))
        })
        .collect()
}

/// One normalized series per indicator, in indicator-set order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedSnapshot<T> {
    pub series: Vec<NormalizedSeries<T>>,
}

impl<T: Scalar> NormalizedSnapshot<T> {
    pub fn get(&self, indicator_id: &str) -> Option<&NormalizedSeries<T>> {
        self.series.iter().find(|s| s.indicator_id == indicator_id)
    }

    pub fn degenerate_ids(&self) -> BTreeSet<String> {
        self.series
            .iter()
            .filter(|s| s.degenerate)
            .map(|s| s.indicator_id.clone())
            .collect()
    }
}

pub fn normalize_snapshot<T: Scalar>(snapshot: &Snapshot) -> Result<NormalizedSnapshot<T>, NormalizeError> {
    if snapshot.entities.len() < 2 {
        return Err(NormalizeError::TooFewEntities(snapshot.entities.len()));
    }
    let series = snapshot
        .indicator_set
        .iter()
        .map(|spec| min_max_normalize(&spec.id, &raw_series::<T>(snapshot, &spec.id)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(NormalizedSnapshot { series })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicator::{build_default_indicator_set, EntityRecord, Provenance, RawValue};

    fn series(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn endpoints_and_midpoint() {
        let n = min_max_normalize("x", &series(&[("a", 0.0), ("b", 5.0), ("c", 10.0)])).unwrap();
        assert_eq!(n.values["a"], 0.0);
        assert_eq!(n.values["b"], 0.5);
        assert_eq!(n.values["c"], 1.0);
        assert!(!n.degenerate);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let n = min_max_normalize("x", &series(&[("a", 7.0), ("b", 7.0)])).unwrap();
        assert!(n.degenerate);
        assert!(n.values.values().all(|&v| v == 0.0));
    }

    #[test]
    fn alexa_rank_extremes() {
        let n = min_max_normalize(
            "alexa_rank",
            &series(&[("best", 924.0), ("mid", 1_000_000.0), ("worst", 26_992_405.0)]),
        )
        .unwrap();
        assert_eq!(n.values["best"], 0.0);
        assert_eq!(n.values["worst"], 1.0);
        assert_eq!(n.source_min, 924.0);
        assert_eq!(n.source_max, 26_992_405.0);
    }

    #[test]
    fn errors() {
        assert_eq!(
            min_max_normalize::<f64>("x", &BTreeMap::new()),
            Err(NormalizeError::EmptySeries("x".into()))
        );
        assert_eq!(
            min_max_normalize("x", &series(&[("a", 1.0), ("b", f64::INFINITY)])),
            Err(NormalizeError::NonFinite { indicator: "x".into(), key: "b".into() })
        );
    }

    #[test]
    fn polarity_signs() {
        let n = min_max_normalize("x", &series(&[("a", 0.0), ("b", 3.0), ("c", 10.0)])).unwrap();
        let pos = apply_polarity(&n, Polarity::Positive);
        let neg = apply_polarity(&n, Polarity::Negative);
        assert_eq!(pos.values["b"], 0.3);
        assert_eq!(neg.values["b"], -0.3);
        assert_eq!(neg.values["a"], 0.0);
        assert!(neg.values["a"].is_sign_positive());
        assert_eq!(neg.values["c"], -1.0);
    }

    #[test]
    fn generic_over_f32() {
        let s: BTreeMap<String, f32> = [("a".to_string(), 2.0f32), ("b".into(), 4.0), ("c".into(), 6.0)]
            .into_iter()
            .collect();
        let n = min_max_normalize("x", &s).unwrap();
        assert_eq!(n.values["b"], 0.5f32);
    }

    fn entity(name: &str, base: f64, dmoz: bool) -> EntityRecord {
        let mut e = EntityRecord::new(name, 100);
        for (i, spec) in build_default_indicator_set().iter().enumerate() {
            e.set(&spec.id, RawValue::number(base + i as f64, Provenance::Fixture));
        }
        e.set("dmoz_listed", RawValue::boolean(dmoz, Provenance::Fixture));
        e.set("fb_has_page", RawValue::boolean(base > 1.0, Provenance::Fixture));
        e
    }

    #[test]
    fn snapshot_all_listed_in_directory_is_degenerate() {
        let s = Snapshot::new(
            "t",
            None,
            build_default_indicator_set(),
            vec![entity("A", 1.0, true), entity("B", 5.0, true), entity("C", 9.0, true)],
        )
        .unwrap();
        let n = normalize_snapshot::<f64>(&s).unwrap();
        assert_eq!(n.degenerate_ids().into_iter().collect::<Vec<_>>(), ["dmoz_listed"]);
        assert_eq!(n.series.len(), 16);
    }

    #[test]
    fn two_entities_map_to_zero_and_one() {
        let s = Snapshot::new(
            "t",
            None,
            build_default_indicator_set(),
            vec![entity("A", 1.0, false), entity("B", 5.0, true)],
        )
        .unwrap();
        let n = normalize_snapshot::<f64>(&s).unwrap();
        for series in &n.series {
            assert!(!series.degenerate, "{}", series.indicator_id);
            assert_eq!(series.values["a"], 0.0);
            assert_eq!(series.values["b"], 1.0);
        }
    }

    #[test]
    fn missing_counts_as_zero() {
        let mut a = entity("A", 1.0, true);
        a.set("fb_likes", RawValue::missing(Provenance::Fixture));
        let b = entity("B", 5.0, true);
        let s = Snapshot::new("t", None, build_default_indicator_set(), vec![a, b]).unwrap();
        let raw = raw_series::<f64>(&s, "fb_likes");
        assert_eq!(raw["a"], 0.0);
    }

    #[test]
    fn one_entity_rejected() {
        let s = Snapshot::new("t", None, build_default_indicator_set(), vec![entity("A", 1.0, true)]).unwrap();
        assert_eq!(normalize_snapshot::<f64>(&s), Err(NormalizeError::TooFewEntities(1)));
    }
}
