use std::path::Path;

use serde::Serialize;

use super::{create, csv_err, io_err, DatasetError};
use crate::scalar::Scalar;
use crate::stats::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin<T> {
    pub low: T,
    pub high: T,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatterPoint<T> {
    /// 1-based position in the input order.
    pub ordinal: usize,
    pub value: T,
}

/// Equal-width histogram over `range` (default: the data extremes). The
/// last bin is closed on the right; values outside the range are clamped
/// into the edge bins so the counts always add up to `values.len()`.
pub fn emit_histogram<T: Scalar>(
    values: &[T],
    bins: usize,
    range: Option<(T, T)>,
) -> Result<Vec<HistogramBin<T>>, StatsError> {
    if values.is_empty() || bins == 0 {
        return Err(StatsError::EmptyInput);
    }
    let (low, high) = range.unwrap_or_else(|| {
        values
            .iter()
            .fold((values[0], values[0]), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    });
    let width = (high - low) / T::of_count(bins);
    let mut out: Vec<HistogramBin<T>> = (0..bins)
        .map(|i| HistogramBin {
            low: low + width * T::of_count(i),
            high: if i + 1 == bins { high } else { low + width * T::of_count(i + 1) },
            count: 0,
        })
        .collect();
    for &v in values {
        let slot = if width > T::zero() {
            ((v - low) / width).floor().to_isize().unwrap_or(0)
        } else {
            0
        };
        let slot = slot.clamp(0, bins as isize - 1) as usize;
        out[slot].count += 1;
    }
    Ok(out)
}

pub fn emit_scatter<T: Scalar>(values: &[T]) -> Result<Vec<ScatterPoint<T>>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    Ok(values
        .iter()
        .enumerate()
        .map(|(i, &value)| ScatterPoint { ordinal: i + 1, value })
        .collect())
}

pub fn write_histogram_csv<T: Scalar>(bins: &[HistogramBin<T>], path: &Path) -> Result<(), DatasetError> {
    let mut writer = csv::Writer::from_writer(create(path)?);
    writer.write_record(["bin_low", "bin_high", "count"]).map_err(csv_err(path))?;
    for b in bins {
        writer
            .write_record([
                format!("{:.6}", b.low.to_f64_lossy()),
                format!("{:.6}", b.high.to_f64_lossy()),
                b.count.to_string(),
            ])
            .map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))
}

pub fn write_scatter_csv<T: Scalar>(points: &[ScatterPoint<T>], path: &Path) -> Result<(), DatasetError> {
    let mut writer = csv::Writer::from_writer(create(path)?);
    writer.write_record(["ordinal", "value"]).map_err(csv_err(path))?;
    for p in points {
        writer
            .write_record([p.ordinal.to_string(), format!("{:.6}", p.value.to_f64_lossy())])
            .map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))
}
