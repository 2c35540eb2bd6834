use std::io::Write;
use std::path::Path;

use super::{create, csv_err, io_err, json_err, open, DataFormat, DatasetError};
use crate::indicator::{build_default_indicator_set, EntityRecord, IndicatorSet, Provenance, RawValue, Snapshot, Value};

const FIXED_COLUMNS: [&str; 3] = ["slug", "name", "population"];

/// Loads a snapshot using the default indicator set for CSV input.
pub fn load_snapshot(path: &Path, format: DataFormat) -> Result<Snapshot, DatasetError> {
    load_snapshot_with(path, format, None)
}

/// Loads a snapshot. CSV files are interpreted against `indicator_set`
/// (default set when `None`); JSON files carry their own set, which must
/// equal `indicator_set` when one is given.
pub fn load_snapshot_with(
    path: &Path,
    format: DataFormat,
    indicator_set: Option<&IndicatorSet>,
) -> Result<Snapshot, DatasetError> {
    match format {
        DataFormat::Json => {
            let snapshot: Snapshot = serde_json::from_reader(open(path)?).map_err(json_err(path))?;
            if let Some(expected) = indicator_set {
                if &snapshot.indicator_set != expected {
                    return Err(DatasetError::schema(path, "snapshot indicator set differs from the override"));
                }
            }
            snapshot.check_structure()?;
            Ok(snapshot)
        }
        DataFormat::Csv => {
            let set = indicator_set.cloned().unwrap_or_else(build_default_indicator_set);
            load_csv(path, set)
        }
    }
}

fn load_csv(path: &Path, set: IndicatorSet) -> Result<Snapshot, DatasetError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    if headers.len() < FIXED_COLUMNS.len() || headers.iter().take(3).ne(FIXED_COLUMNS) {
        return Err(DatasetError::schema(path, "header must start with slug,name,population"));
    }
    let indicator_columns: Vec<&str> = headers.iter().skip(3).collect();
    for (i, column) in indicator_columns.iter().enumerate() {
        if !set.contains(column) {
            return Err(DatasetError::schema(path, format!("unknown indicator column `{column}`")));
        }
        if indicator_columns[..i].contains(column) {
            return Err(DatasetError::schema(path, format!("duplicate indicator column `{column}`")));
        }
    }

    let mut entities = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let line = record.position().map_or(0, |p| p.line());
        let parse_error = |column: &str, message: String| DatasetError::Parse {
            path: path.to_owned(),
            line,
            column: Some(column.to_owned()),
            message,
        };
        if record.len() != headers.len() {
            return Err(DatasetError::Parse {
                path: path.to_owned(),
                line,
                column: None,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let population = record[2]
            .parse::<u64>()
            .map_err(|e| parse_error("population", format!("`{}`: {e}", &record[2])))?;
        let mut entity = EntityRecord {
            name: record[1].to_owned(),
            slug: record[0].to_owned(),
            population,
            values: Default::default(),
        };
        for (column, cell) in indicator_columns.iter().zip(record.iter().skip(3)) {
            let value = parse_cell(cell).map_err(|m| parse_error(column, m))?;
            entity.set(column, RawValue { value, provenance: Provenance::FileImport });
        }
        entities.push(entity);
    }

    let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("snapshot");
    Ok(Snapshot::new(label, None, set, entities)?)
}

fn parse_cell(cell: &str) -> Result<Value, String> {
    match cell {
        "" => Ok(Value::Missing),
        "true" => Ok(Value::Boolean(true)),
        "false" => Ok(Value::Boolean(false)),
        _ => {
            let v: f64 = cell.parse().map_err(|e| format!("`{cell}`: {e}"))?;
            if v.is_finite() {
                Ok(Value::Number(v))
            } else {
                Err(format!("`{cell}` is not finite"))
            }
        }
    }
}

fn format_cell(value: Option<&RawValue>) -> String {
    match value.map(|v| v.value) {
        None | Some(Value::Missing) => String::new(),
        Some(Value::Boolean(b)) => b.to_string(),
        // Display prints the shortest representation that parses back exactly.
        Some(Value::Number(v)) => v.to_string(),
    }
}

/// Writes a snapshot. CSV keeps only values (provenance, label and
/// timestamp are dropped); JSON keeps everything.
pub fn save_snapshot(snapshot: &Snapshot, path: &Path, format: DataFormat) -> Result<(), DatasetError> {
    let mut out = create(path)?;
    match format {
        DataFormat::Json => {
            serde_json::to_writer_pretty(&mut out, snapshot).map_err(json_err(path))?;
            out.write_all(b"\n").map_err(io_err(path))?;
        }
        DataFormat::Csv => {
            let mut writer = csv::Writer::from_writer(&mut out);
            let header = FIXED_COLUMNS
                .iter()
                .copied()
                .chain(snapshot.indicator_set.iter().map(|s| s.id.as_str()));
            writer.write_record(header).map_err(csv_err(path))?;
            for e in &snapshot.entities {
                let mut row = vec![e.slug.clone(), e.name.clone(), e.population.to_string()];
                row.extend(snapshot.indicator_set.iter().map(|s| format_cell(e.values.get(&s.id))));
                writer.write_record(&row).map_err(csv_err(path))?;
            }
            writer.flush().map_err(io_err(path))?;
        }
    }
    out.flush().map_err(io_err(path))
}

/// Reads an indicator-set override (JSON array of specs).
pub fn load_indicator_set(path: &Path) -> Result<IndicatorSet, DatasetError> {
    serde_json::from_reader(open(path)?).map_err(json_err(path))
}
