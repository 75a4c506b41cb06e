//! Series files: one value per line, or a named column of a CSV file with a
//! header row. Lines starting with `#` are comments.

use std::path::Path;

pub const MIN_VALUES: usize = 30;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SeriesError {
    #[error("line {line}: {message}")]
    Line { line: u64, message: String },
    #[error("{0}")]
    File(String),
}

fn at(line: u64, message: impl Into<String>) -> SeriesError {
    SeriesError::Line { line, message: message.into() }
}

fn parse_value(field: &str, line: u64) -> Result<f64, SeriesError> {
    let v: f64 = field.trim().parse().map_err(|_| at(line, format!("cannot parse '{}' as a number", field.trim())))?;
    if !v.is_finite() {
        return Err(at(line, format!("value '{}' is not finite", field.trim())));
    }
    Ok(v)
}

/// Parses series text. With `column = None` the file must hold a single
/// column, with or without a header.
pub fn parse_series(text: &str, column: Option<&str>) -> Result<Vec<f64>, SeriesError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut index: Option<usize> = None;
    let mut width = 0;
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            at(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if first {
            first = false;
            let is_header = match column {
                Some(_) => true,
                None => record.len() > 1 || record[0].parse::<f64>().is_err(),
            };
            if is_header {
                width = record.len();
                let idx = match column {
                    Some(name) => record
                        .iter()
                        .position(|h| h == name)
                        .ok_or_else(|| at(line, format!("no column named '{name}' in header")))?,
                    None if record.len() == 1 => 0,
                    None => {
                        return Err(at(line, format!("header has {} columns; choose one with --column", record.len())))
                    }
                };
                index = Some(idx);
                continue;
            }
            width = 1;
            index = Some(0);
        }
        let idx = index.expect("set on first record");
        if width == 1 && record.len() != 1 {
            return Err(at(line, format!("expected one value per line, found {} fields", record.len())));
        }
        let field = record.get(idx).ok_or_else(|| at(line, format!("row has no field {}", idx + 1)))?;
        values.push(parse_value(field, line)?);
    }
    if values.len() < MIN_VALUES {
        return Err(SeriesError::File(format!(
            "series has {} values; at least {MIN_VALUES} are required",
            values.len()
        )));
    }
    Ok(values)
}

pub fn read_series(path: &Path, column: Option<&str>) -> Result<Vec<f64>, SeriesError> {
    let text = std::fs::read_to_string(path).map_err(|e| SeriesError::File(format!("{}: {e}", path.display())))?;
    parse_series(&text, column)
}

/// One value per line with 17 significant digits, which parses back exactly.
pub fn format_series(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 24);
    for v in values {
        out.push_str(&format!("{v:.16e}\n"));
    }
    out
}
