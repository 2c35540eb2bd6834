use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::fixture::AppendixFixture;
use super::{create, csv_err, io_err, json_err, open, DataFormat, DatasetError};
use crate::indicator::slugify;
use crate::pipeline::IndexResult;
use crate::ranking::{rank, Scored};
use crate::scalar::Scalar;
use crate::stats::{SeriesStats, StdConvention};
use crate::wri::{Flags, IndexFlag};

/// Rounds to the 6 decimals used in every result file.
pub fn round6(v: f64) -> f64 {
    format!("{v:.6}").parse().unwrap_or(v)
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

/// One line of a result file. `wri` and `pop_normalized` are absent for
/// rows that only carry a published final index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub rank: usize,
    pub slug: String,
    pub name: String,
    pub wri: Option<f64>,
    pub pop_normalized: Option<f64>,
    pub final_index: f64,
    #[serde(default)]
    pub flags: Flags,
}

impl ResultRow {
    pub fn from_result<T: Scalar>(r: &IndexResult<T>) -> Self {
        Self {
            rank: 0,
            slug: r.slug.clone(),
            name: r.name.clone(),
            wri: Some(r.wri.to_f64_lossy()),
            pop_normalized: Some(r.pop_normalized.to_f64_lossy()),
            final_index: r.final_index.to_f64_lossy(),
            flags: r.flags.clone(),
        }
    }

    pub fn published(slug: &str, name: &str, final_index: f64) -> Self {
        Self {
            rank: 0,
            slug: slug.to_owned(),
            name: name.to_owned(),
            wri: None,
            pop_normalized: None,
            final_index,
            flags: Flags::new(),
        }
    }

    fn rounded(&self, rank: usize) -> Self {
        Self {
            rank,
            wri: self.wri.map(round6),
            pop_normalized: self.pop_normalized.map(round6),
            final_index: round6(self.final_index),
            ..self.clone()
        }
    }
}

impl Scored<f64> for ResultRow {
    fn slug(&self) -> &str {
        &self.slug
    }
    fn name(&self) -> &str {
        &self.name
    }
    fn score(&self) -> f64 {
        self.final_index
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    pub std: f64,
    pub count: usize,
    pub std_convention: StdConvention,
}

impl StatsRecord {
    pub fn new<T: Scalar>(stats: &SeriesStats<T>, std_convention: StdConvention) -> Self {
        let s = stats.to_f64();
        Self {
            mean: s.mean,
            max: s.max,
            min: s.min,
            std: s.std,
            count: s.count,
            std_convention,
        }
    }

    fn rounded(&self) -> Self {
        Self {
            mean: round6(self.mean),
            max: round6(self.max),
            min: round6(self.min),
            std: round6(self.std),
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub results: Vec<ResultRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<StatsRecord>,
}

/// `results.csv` -> `results.stats.csv`.
pub fn stats_sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    path.with_file_name(format!("{stem}.stats.csv"))
}

/// Writes rows in rank order (descending final index, slug tie-break) with
/// 6-decimal values. CSV output puts the statistics in a sidecar file.
pub fn save_results(rows: &[ResultRow], stats: &StatsRecord, path: &Path, format: DataFormat) -> Result<(), DatasetError> {
    if rows.is_empty() {
        return Err(DatasetError::Empty);
    }
    let ranking = rank("results", rows);
    let ordered: Vec<ResultRow> = ranking
        .entries
        .iter()
        .map(|e| {
            let row = rows.iter().find(|r| r.slug == e.slug).expect("ranked slug comes from rows");
            row.rounded(e.rank)
        })
        .collect();
    let stats = stats.rounded();

    let mut out = create(path)?;
    match format {
        DataFormat::Json => {
            let set = ResultSet {
                results: ordered,
                stats: Some(stats),
            };
            serde_json::to_writer_pretty(&mut out, &set).map_err(json_err(path))?;
            out.write_all(b"\n").map_err(io_err(path))?;
        }
        DataFormat::Csv => {
            let mut writer = csv::Writer::from_writer(&mut out);
            writer
                .write_record(["rank", "slug", "name", "wri", "pop_normalized", "final_index", "flags"])
                .map_err(csv_err(path))?;
            for r in &ordered {
                let flags: Vec<&str> = r.flags.iter().map(|f| f.as_str()).collect();
                writer
                    .write_record([
                        r.rank.to_string(),
                        r.slug.clone(),
                        r.name.clone(),
                        r.wri.map(fmt6).unwrap_or_default(),
                        r.pop_normalized.map(fmt6).unwrap_or_default(),
                        fmt6(r.final_index),
                        flags.join(";"),
                    ])
                    .map_err(csv_err(path))?;
            }
            writer.flush().map_err(io_err(path))?;
            drop(writer);

            let sidecar = stats_sidecar_path(path);
            let mut writer = csv::Writer::from_writer(create(&sidecar)?);
            writer
                .write_record(["mean", "max", "min", "std", "count", "std_convention"])
                .map_err(csv_err(&sidecar))?;
            let convention = match stats.std_convention {
                StdConvention::Population => "population",
                StdConvention::Sample => "sample",
            };
            writer
                .write_record([
                    fmt6(stats.mean),
                    fmt6(stats.max),
                    fmt6(stats.min),
                    fmt6(stats.std),
                    stats.count.to_string(),
                    convention.to_owned(),
                ])
                .map_err(csv_err(&sidecar))?;
            writer.flush().map_err(io_err(&sidecar))?;
        }
    }
    out.flush().map_err(io_err(path))
}

fn parse_f64(path: &Path, line: u64, column: &str, cell: &str) -> Result<Option<f64>, DatasetError> {
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Some)
        .ok_or_else(|| DatasetError::Parse {
            path: path.to_owned(),
            line,
            column: Some(column.to_owned()),
            message: format!("`{cell}` is not a finite number"),
        })
}

/// Reads a file written by [`save_results`]. For CSV the stats sidecar is
/// read when present.
pub fn load_results(path: &Path, format: DataFormat) -> Result<ResultSet, DatasetError> {
    match format {
        DataFormat::Json => serde_json::from_reader(open(path)?).map_err(json_err(path)),
        DataFormat::Csv => {
            let mut reader = csv::Reader::from_reader(open(path)?);
            let expected = ["rank", "slug", "name", "wri", "pop_normalized", "final_index", "flags"];
            if reader.headers().map_err(csv_err(path))?.iter().ne(expected) {
                return Err(DatasetError::schema(path, format!("header must be {}", expected.join(","))));
            }
            let mut results = Vec::new();
            for record in reader.records() {
                let record = record.map_err(csv_err(path))?;
                let line = record.position().map_or(0, |p| p.line());
                let rank = record[0].parse::<usize>().map_err(|e| DatasetError::Parse {
                    path: path.to_owned(),
                    line,
                    column: Some("rank".into()),
                    message: e.to_string(),
                })?;
                let final_index = parse_f64(path, line, "final_index", &record[5])?.ok_or_else(|| {
                    DatasetError::Parse {
                        path: path.to_owned(),
                        line,
                        column: Some("final_index".into()),
                        message: "empty".into(),
                    }
                })?;
                let flags = record[6]
                    .split(';')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<IndexFlag>())
                    .collect::<Result<Flags, _>>()
                    .map_err(|message| DatasetError::Parse {
                        path: path.to_owned(),
                        line,
                        column: Some("flags".into()),
                        message,
                    })?;
                results.push(ResultRow {
                    rank,
                    slug: record[1].to_owned(),
                    name: record[2].to_owned(),
                    wri: parse_f64(path, line, "wri", &record[3])?,
                    pop_normalized: parse_f64(path, line, "pop_normalized", &record[4])?,
                    final_index,
                    flags,
                });
            }
            let sidecar = stats_sidecar_path(path);
            let stats = if sidecar.exists() {
                let mut reader = csv::Reader::from_reader(open(&sidecar)?);
                reader
                    .deserialize::<StatsRecord>()
                    .next()
                    .transpose()
                    .map_err(csv_err(&sidecar))?
            } else {
                None
            };
            Ok(ResultSet { results, stats })
        }
    }
}

/// Reads `(slug, name, value)` triples from either a result file
/// (`final_index`) or a fixture export (`normalized_index`).
pub fn load_index_values(path: &Path, format: DataFormat) -> Result<Vec<ResultRow>, DatasetError> {
    match format {
        DataFormat::Json => {
            let doc: serde_json::Value = serde_json::from_reader(open(path)?).map_err(json_err(path))?;
            if doc.get("results").is_some() {
                let set: ResultSet = serde_json::from_value(doc).map_err(json_err(path))?;
                Ok(set.results)
            } else if doc.get("entries").is_some() {
                let fixture: AppendixFixture = serde_json::from_value(doc).map_err(json_err(path))?;
                Ok(fixture.to_rows())
            } else {
                Err(DatasetError::schema(path, "expected a `results` or `entries` document"))
            }
        }
        DataFormat::Csv => {
            let mut reader = csv::Reader::from_reader(open(path)?);
            let headers = reader.headers().map_err(csv_err(path))?.clone();
            let find = |name: &str| headers.iter().position(|h| h == name);
            let value_col = find("final_index")
                .or_else(|| find("normalized_index"))
                .ok_or_else(|| DatasetError::schema(path, "no final_index or normalized_index column"))?;
            let name_col = find("name").ok_or_else(|| DatasetError::schema(path, "no name column"))?;
            let slug_col = find("slug");
            let mut rows = Vec::new();
            for record in reader.records() {
                let record = record.map_err(csv_err(path))?;
                let line = record.position().map_or(0, |p| p.line());
                let name = &record[name_col];
                let slug = slug_col.map_or_else(|| slugify(name), |c| record[c].to_owned());
                let value = parse_f64(path, line, &headers[value_col], &record[value_col])?.ok_or_else(|| {
                    DatasetError::Parse {
                        path: path.to_owned(),
                        line,
                        column: Some(headers[value_col].to_owned()),
                        message: "empty".into(),
                    }
                })?;
                rows.push(ResultRow::published(&slug, name, value));
            }
            Ok(rows)
        }
    }
}
