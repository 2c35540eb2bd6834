//! Web reputation index for a set of institutions.
//!
//! Raw web indicators (backlinks, indexed pages, traffic, latency, ...) are
//! min-max normalized per indicator, signed by polarity, averaged over the
//! positive indicators, divided by a student-population term and rescaled
//! onto [0, 1]. The numeric modules are generic over [`Scalar`] (`f32` or
//! `f64`); the aliases below fix the common `f64` instantiation.

pub mod indicator;
pub mod io;
pub mod normalization;
pub mod pipeline;
pub mod ranking;
pub mod scalar;
pub mod stats;
pub mod wri;

pub use indicator::{
    build_default_indicator_set, slugify, validate_snapshot, EntityRecord, IndicatorKind, IndicatorSet,
    IndicatorSpec, Polarity, Provenance, RawValue, Snapshot, Value, Warning,
};
pub use normalization::{apply_polarity, min_max_normalize, normalize_snapshot};
pub use pipeline::{run_pipeline, PipelineError, PipelineOptions};
pub use ranking::{bottom_k, kendall_tau, rank, top_k, Scored};
pub use scalar::Scalar;
pub use stats::{descriptive_stats, StdConvention};
pub use wri::{compute_wri, final_rescale, population_normalize, IndexFlag, PopulationMode};

pub type NormalizedSeries = normalization::NormalizedSeries<f64>;
pub type SignedSeries = normalization::SignedSeries<f64>;
pub type IndexResult = pipeline::IndexResult<f64>;
pub type PipelineOutput = pipeline::PipelineOutput<f64>;
pub type SeriesStats = stats::SeriesStats<f64>;
pub type Ranking = ranking::Ranking<f64>;
pub type RankEntry = ranking::RankEntry<f64>;
pub type PopulationScale = wri::PopulationScale<f64>;

pub type IndexResultF32 = pipeline::IndexResult<f32>;
pub type PipelineOutputF32 = pipeline::PipelineOutput<f32>;
pub type SeriesStatsF32 = stats::SeriesStats<f32>;
pub type RankingF32 = ranking::Ranking<f32>;
