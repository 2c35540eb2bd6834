//! The published normalized index table for 170 Turkish universities,
//! embedded verbatim (decimal commas converted to points).

use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::results::ResultRow;
use super::{create, csv_err, io_err, json_err, DataFormat, DatasetError};
use crate::indicator::slugify;

const APPENDIX_CSV: &str = include_str!("../../data/appendix.csv");

/// Institution count stated alongside the published summary statistics.
pub const DECLARED_TOTAL: usize = 170;

pub const PROVENANCE: &str = "published appendix table";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub name: String,
    pub slug: String,
    pub normalized_index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixFixture {
    pub provenance: String,
    pub declared_total: usize,
    pub row_count: usize,
    /// Rows in published order (ascending index).
    pub entries: Vec<FixtureEntry>,
}

impl AppendixFixture {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.normalized_index).collect()
    }

    /// Whether the row count agrees with the declared institution count.
    pub fn is_complete(&self) -> bool {
        self.row_count == self.declared_total
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.normalized_index)
    }

    pub fn to_rows(&self) -> Vec<ResultRow> {
        self.entries
            .iter()
            .map(|e| ResultRow::published(&e.slug, &e.name, e.normalized_index))
            .collect()
    }
}

#[derive(Deserialize)]
struct Row {
    name: String,
    normalized_index: f64,
}

fn parse_embedded() -> AppendixFixture {
    let entries: Vec<FixtureEntry> = csv::Reader::from_reader(APPENDIX_CSV.as_bytes())
        .deserialize::<Row>()
        .map(|r| {
            let r = r.expect("embedded appendix parses");
            FixtureEntry {
                slug: slugify(&r.name),
                name: r.name,
                normalized_index: r.normalized_index,
            }
        })
        .collect();
    AppendixFixture {
        provenance: PROVENANCE.to_owned(),
        declared_total: DECLARED_TOTAL,
        row_count: entries.len(),
        entries,
    }
}

pub fn load_appendix_fixture() -> AppendixFixture {
    static FIXTURE: OnceLock<AppendixFixture> = OnceLock::new();
    FIXTURE.get_or_init(parse_embedded).clone()
}

/// Abbreviated name as printed in the top/bottom tables.
pub fn short_name(name: &str) -> String {
    match name {
        "Karamanoğlu Mehmetbey Üniversitesi" => "K. Mehmetbey".to_owned(),
        "Ağrı İbrahim Çeçen Üniversitesi" => "Ağrı İ. Çeçen".to_owned(),
        _ => name.strip_suffix(" Üniversitesi").unwrap_or(name).to_owned(),
    }
}

pub fn save_fixture(fixture: &AppendixFixture, path: &Path, format: DataFormat) -> Result<(), DatasetError> {
    let mut out = create(path)?;
    match format {
        DataFormat::Json => {
            serde_json::to_writer_pretty(&mut out, fixture).map_err(json_err(path))?;
            out.write_all(b"\n").map_err(io_err(path))?;
        }
        DataFormat::Csv => {
            let mut writer = csv::Writer::from_writer(&mut out);
            writer
                .write_record(["slug", "name", "normalized_index"])
                .map_err(csv_err(path))?;
            for e in &fixture.entries {
                writer
                    .write_record([e.slug.as_str(), e.name.as_str(), &format!("{:.6}", e.normalized_index)])
                    .map_err(csv_err(path))?;
            }
            writer.flush().map_err(io_err(path))?;
        }
    }
    out.flush().map_err(io_err(path))
}
