//! End-to-end index computation over a snapshot.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::indicator::{Snapshot, SnapshotError};
use crate::normalization::{apply_polarity, normalize_snapshot, NormalizeError};
use crate::scalar::Scalar;
use crate::stats::{descriptive_stats, SeriesStats, StatsError, StdConvention};
use crate::wri::{compute_wri, final_rescale, population_normalize, Flags, PopulationMode, PopulationScale, WriError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Structure(#[from] SnapshotError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Index(#[from] WriError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexResult<T> {
    pub slug: String,
    pub name: String,
    pub wri: T,
    pub pop_normalized: T,
    pub final_index: T,
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PipelineOptions {
    pub population_mode: PopulationMode,
    pub std_convention: StdConvention,
}

impl PipelineOptions {
    pub fn new(population_mode: PopulationMode, std_convention: StdConvention) -> Self {
        Self {
            population_mode,
            std_convention,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineOutput<T> {
    /// One result per entity, ordered by slug.
    pub results: Vec<IndexResult<T>>,
    /// Statistics of the final index.
    pub stats: SeriesStats<T>,
    pub degenerate_indicators: Vec<String>,
}

/// normalize -> sign -> aggregate -> population divide -> rescale.
///
/// Every step is keyed by slug, so entity order in the snapshot has no
/// effect on any number produced.
pub fn run_pipeline<T: Scalar>(snapshot: &Snapshot, options: PipelineOptions) -> Result<PipelineOutput<T>, PipelineError> {
    snapshot.check_structure()?;
    let normalized = normalize_snapshot::<T>(snapshot)?;
    let degenerate = normalized.degenerate_ids();

    let signed: Vec<_> = snapshot
        .indicator_set
        .iter()
        .zip(&normalized.series)
        .map(|(spec, series)| apply_polarity(series, spec.polarity))
        .collect();

    let populations: Vec<u64> = snapshot.entities.iter().map(|e| e.population).collect();
    let scale = PopulationScale::<T>::from_populations(&populations)?;

    let mut partial = BTreeMap::new();
    for entity in &snapshot.entities {
        let per_indicator: BTreeMap<String, T> = signed
            .iter()
            .map(|s| (s.indicator_id.clone(), s.values[&entity.slug]))
            .collect();
        let wri = compute_wri(&per_indicator, &snapshot.indicator_set, &degenerate)?;
        let pop = population_normalize(wri.value, entity.population, options.population_mode, &scale);
        let mut flags = wri.flags;
        flags.extend(pop.flags);
        partial.insert(entity.slug.clone(), (entity.name.clone(), wri.value, pop.value, flags));
    }

    let pop_values: BTreeMap<String, T> = partial.iter().map(|(k, v)| (k.clone(), v.2)).collect();
    let rescaled = final_rescale(&pop_values)?;

    let results: Vec<IndexResult<T>> = partial
        .into_iter()
        .map(|(slug, (name, wri, pop_normalized, flags))| IndexResult {
            final_index: rescaled[&slug],
            slug,
            name,
            wri,
            pop_normalized,
            flags,
        })
        .collect();
    let finals: Vec<T> = results.iter().map(|r| r.final_index).collect();
    let stats = descriptive_stats(&finals, options.std_convention)?;

    Ok(PipelineOutput {
        results,
        stats,
        degenerate_indicators: degenerate.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicator::{build_default_indicator_set, EntityRecord, Polarity, Provenance, RawValue};
    use crate::wri::IndexFlag;

    fn uniform_entity(name: &str, positive: f64, negative: f64, population: u64) -> EntityRecord {
        let mut e = EntityRecord::new(name, population);
        for spec in build_default_indicator_set().iter() {
            let v = match spec.polarity {
                Polarity::Positive => positive,
                Polarity::Negative => negative,
            };
            e.set(&spec.id, RawValue::number(v, Provenance::Fixture));
        }
        e
    }

    #[test]
    fn dominant_entity_takes_extremes() {
        let s = Snapshot::new(
            "t",
            None,
            build_default_indicator_set(),
            vec![uniform_entity("A", 10.0, 1.0, 500), uniform_entity("B", 1.0, 10.0, 500)],
        )
        .unwrap();
        let out = run_pipeline::<f64>(&s, PipelineOptions::default()).unwrap();
        assert_eq!(out.results[0].slug, "a");
        assert_eq!(out.results[0].final_index, 1.0);
        assert_eq!(out.results[0].wri, 1.0);
        assert_eq!(out.results[1].final_index, 0.0);
        assert_eq!(out.stats.count, 2);
    }

    #[test]
    fn zero_population_flag_surfaces() {
        let s = Snapshot::new(
            "t",
            None,
            build_default_indicator_set(),
            vec![
                uniform_entity("A", 10.0, 1.0, 0),
                uniform_entity("B", 1.0, 10.0, 500),
                uniform_entity("C", 5.0, 5.0, 50),
            ],
        )
        .unwrap();
        let out = run_pipeline::<f32>(&s, PipelineOptions::default()).unwrap();
        let a = &out.results[0];
        assert!(a.flags.contains(&IndexFlag::ZeroPopulationGuard));
        assert!(out.results.iter().all(|r| (0.0..=1.0).contains(&r.final_index)));
    }

    #[test]
    fn identical_entities_cannot_be_rescaled() {
        let s = Snapshot::new(
            "t",
            None,
            build_default_indicator_set(),
            vec![uniform_entity("A", 1.0, 1.0, 5), uniform_entity("B", 1.0, 1.0, 5)],
        )
        .unwrap();
        assert!(matches!(
            run_pipeline::<f64>(&s, PipelineOptions::default()),
            Err(PipelineError::Index(WriError::NoPositiveIndicators))
        ));
    }
}
