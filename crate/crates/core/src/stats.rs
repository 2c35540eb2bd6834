use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("no values to summarize")]
    EmptyInput,
}

/// Divisor used for the standard deviation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdConvention {
    /// Divide by N.
    #[default]
    Population,
    /// Divide by N - 1.
    Sample,
}

impl FromStr for StdConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "population" => Ok(Self::Population),
            "sample" => Ok(Self::Sample),
            other => Err(format!("unknown std convention `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats<T> {
    pub mean: T,
    pub max: T,
    pub min: T,
    pub std: T,
    pub count: usize,
}

impl<T: Scalar> SeriesStats<T> {
    pub fn to_f64(&self) -> SeriesStats<f64> {
        SeriesStats {
            mean: self.mean.to_f64_lossy(),
            max: self.max.to_f64_lossy(),
            min: self.min.to_f64_lossy(),
            std: self.std.to_f64_lossy(),
            count: self.count,
        }
    }
}

/// Mean, extremes and standard deviation (two-pass). The mean is clamped
/// into [min, max] to absorb rounding on near-constant input. A single
/// value has zero deviation under either convention.
pub fn descriptive_stats<T: Scalar>(values: &[T], convention: StdConvention) -> Result<SeriesStats<T>, StatsError> {
    let first = *values.first().ok_or(StatsError::EmptyInput)?;
    let (min, max) = values
        .iter()
        .fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let n = T::of_count(values.len());
    let mean = (values.iter().copied().sum::<T>() / n).max(min).min(max);
    let squares: T = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
    let divisor = match convention {
        StdConvention::Population => n,
        StdConvention::Sample => n - T::one(),
    };
    let std = if values.len() < 2 {
        T::zero()
    } else {
        (squares / divisor).sqrt()
    };
    Ok(SeriesStats {
        mean,
        max,
        min,
        std,
        count: values.len(),
    })
}
