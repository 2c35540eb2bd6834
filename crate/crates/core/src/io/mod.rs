//! File formats: snapshots, result sets, the embedded appendix fixture and
//! plot data. All machine formats are UTF-8 with dot decimals.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::indicator::{IndicatorSetError, SnapshotError};

mod fixture;
mod plot;
mod results;
mod snapshot;

pub use fixture::{load_appendix_fixture, save_fixture, short_name, AppendixFixture, FixtureEntry, DECLARED_TOTAL};
pub use plot::{emit_histogram, emit_scatter, write_histogram_csv, write_scatter_csv, HistogramBin, ScatterPoint};
pub use results::{
    load_index_values, load_results, round6, save_results, stats_sidecar_path, ResultRow, ResultSet, StatsRecord,
};
pub use snapshot::{load_indicator_set, load_snapshot, load_snapshot_with, save_snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Json,
}

impl DataFormat {
    /// Guesses from the file extension; anything but `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Self::Json,
            _ => Self::Csv,
        }
    }
}

impl FromStr for DataFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}{}: {message}", column.as_ref().map(|c| format!(", column `{c}`")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        line: u64,
        column: Option<String>,
        message: String,
    },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    IndicatorSet(#[from] IndicatorSetError),
    #[error("nothing to write")]
    Empty,
}

impl DatasetError {
    /// True for errors caused by the content of a file rather than by
    /// the file system.
    pub fn is_parse_error(&self) -> bool {
        !matches!(self, Self::Io { .. } | Self::Empty)
            && !matches!(self, Self::Csv { source, .. } if source.is_io_error())
    }

    pub(crate) fn schema(path: &Path, message: impl Into<String>) -> Self {
        Self::Schema {
            path: path.to_owned(),
            message: message.into(),
        }
    }
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>, DatasetError> {
    File::open(path).map(BufReader::new).map_err(|source| DatasetError::Io {
        path: path.to_owned(),
        source,
    })
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>, DatasetError> {
    File::create(path).map(BufWriter::new).map_err(|source| DatasetError::Io {
        path: path.to_owned(),
        source,
    })
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_owned(),
        source,
    }
}

pub(crate) fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> DatasetError + '_ {
    move |source| DatasetError::Csv {
        path: path.to_owned(),
        source,
    }
}

pub(crate) fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> DatasetError + '_ {
    move |source| DatasetError::Json {
        path: path.to_owned(),
        source,
    }
}
