//! Aggregation of signed indicators into the web reputation index, and the
//! population divisor applied afterwards.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicator::{IndicatorSet, Polarity};
use crate::normalization::min_max_scale;
use crate::scalar::Scalar;
use crate::stats::{descriptive_stats, SeriesStats, StdConvention};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WriError {
    #[error("no non-degenerate positive indicators to divide by")]
    NoPositiveIndicators,
    #[error("no signed value for indicator `{0}`")]
    MissingSignedValue(String),
    #[error("all index values are equal; cannot rescale")]
    DegenerateIndex,
    #[error("{0} values given; rescaling needs at least 2")]
    TooFewValues(usize),
    #[error("no populations to scale against")]
    NoPopulations,
}

/// Non-nominal paths taken while computing an entity's index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexFlag {
    WriOutOfRange,
    ZeroPopulationGuard,
    DegenerateIndicatorsExcluded,
}

impl IndexFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::WriOutOfRange => "wri_out_of_range",
            Self::ZeroPopulationGuard => "zero_population_guard",
            Self::DegenerateIndicatorsExcluded => "degenerate_indicators_excluded",
        }
    }
}

impl fmt::Display for IndexFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndexFlag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Self::WriOutOfRange, Self::ZeroPopulationGuard, Self::DegenerateIndicatorsExcluded]
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown flag `{s}`"))
    }
}

pub type Flags = BTreeSet<IndexFlag>;

#[derive(Debug, Clone, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub flags: Flags,
}

/// `(sum of positive values - sum of negative magnitudes) / C'` where C' is
/// the number of non-degenerate positive indicators. Degenerate indicators
/// are skipped entirely. Sums run in indicator-set order. The result is not
/// clamped; values outside [0, 1] are flagged.
pub fn compute_wri<T: Scalar>(
    signed: &BTreeMap<String, T>,
    set: &IndicatorSet,
    degenerate: &BTreeSet<String>,
) -> Result<Flagged<T>, WriError> {
    let mut positive_sum = T::zero();
    let mut negative_sum = T::zero();
    let mut positive_count = 0usize;
    for spec in set.iter().filter(|s| !degenerate.contains(&s.id)) {
        let v = *signed
            .get(&spec.id)
            .ok_or_else(|| WriError::MissingSignedValue(spec.id.clone()))?;
        match spec.polarity {
            Polarity::Positive => {
                positive_sum = positive_sum + v;
                positive_count += 1;
            }
            Polarity::Negative => negative_sum = negative_sum + v.abs(),
        }
    }
    if positive_count == 0 {
        return Err(WriError::NoPositiveIndicators);
    }
    let value = (positive_sum - negative_sum) / T::of_count(positive_count);
    let mut flags = Flags::new();
    if value < T::zero() || value > T::one() {
        flags.insert(IndexFlag::WriOutOfRange);
    }
    if set.iter().any(|s| degenerate.contains(&s.id)) {
        flags.insert(IndexFlag::DegenerateIndicatorsExcluded);
    }
    Ok(Flagged { value, flags })
}

/// How the population divisor is formed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationMode {
    /// Divide by the raw student count, with 1 substituted for 0.
    #[default]
    FormulaLiteral,
    /// Divide by the min-max normalized student count, with the smallest
    /// nonzero normalized count substituted for 0.
    TextLiteral,
}

impl FromStr for PopulationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "formula" | "formula_literal" => Ok(Self::FormulaLiteral),
            "text" | "text_literal" => Ok(Self::TextLiteral),
            other => Err(format!("unknown population mode `{other}`")),
        }
    }
}

/// Population summary of a snapshot, needed to build divisors.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationScale<T> {
    pub stats: SeriesStats<T>,
    /// Smallest strictly positive min-max normalized population, if any.
    pub min_positive_normalized: Option<T>,
}

impl<T: Scalar> PopulationScale<T> {
    pub fn from_populations(populations: &[u64]) -> Result<Self, WriError> {
        let values: Vec<T> = populations.iter().map(|&p| T::of(p as f64)).collect();
        let stats = descriptive_stats(&values, StdConvention::Population).map_err(|_| WriError::NoPopulations)?;
        let min_positive_normalized = min_max_scale(&values)
            .ok()
            .and_then(|s| s.values.into_iter().filter(|v| *v > T::zero()).reduce(T::min));
        Ok(Self {
            stats,
            min_positive_normalized,
        })
    }

    /// `(p - min) / (max - min)`, or 0 when all populations are equal.
    pub fn normalized(&self, population: u64) -> T {
        let span = self.stats.max - self.stats.min;
        if span <= T::zero() {
            return T::zero();
        }
        (T::of(population as f64) - self.stats.min) / span
    }
}

pub fn population_divisor<T: Scalar>(population: u64, mode: PopulationMode, scale: &PopulationScale<T>) -> Flagged<T> {
    let mut flags = Flags::new();
    let value = match mode {
        PopulationMode::FormulaLiteral => {
            if population == 0 {
                flags.insert(IndexFlag::ZeroPopulationGuard);
                T::one()
            } else {
                T::of(population as f64)
            }
        }
        PopulationMode::TextLiteral => {
            let normalized = scale.normalized(population);
            if normalized > T::zero() {
                normalized
            } else {
                flags.insert(IndexFlag::ZeroPopulationGuard);
                scale.min_positive_normalized.unwrap_or_else(T::one)
            }
        }
    };
    Flagged { value, flags }
}

/// Divides a WRI value by the population divisor for `mode`.
pub fn population_normalize<T: Scalar>(
    wri: T,
    population: u64,
    mode: PopulationMode,
    scale: &PopulationScale<T>,
) -> Flagged<T> {
    let divisor = population_divisor(population, mode, scale);
    Flagged {
        value: wri / divisor.value,
        flags: divisor.flags,
    }
}

/// Min-max rescale of the population-normalized values back onto [0, 1].
pub fn final_rescale<T: Scalar>(values: &BTreeMap<String, T>) -> Result<BTreeMap<String, T>, WriError> {
    if values.len() < 2 {
        return Err(WriError::TooFewValues(values.len()));
    }
    let raw: Vec<T> = values.values().copied().collect();
    let scaled = min_max_scale(&raw).map_err(|_| WriError::DegenerateIndex)?;
    if scaled.degenerate {
        return Err(WriError::DegenerateIndex);
    }
    Ok(values.keys().cloned().zip(scaled.values).collect())
}
