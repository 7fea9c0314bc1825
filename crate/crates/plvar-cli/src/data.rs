//! CSV series files: rows are time steps, columns are variables, with an
//! optional header line.

use std::path::Path;

use plvar::TimeSeries;

use crate::error::{CliError, CliResult};

pub fn read_series(path: &Path) -> CliResult<TimeSeries> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_series(&text).map_err(|e| match e {
        CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses CSV text. The first record is treated as a header when any of its
/// fields fails to parse as a number.
pub fn parse_series(text: &str) -> CliResult<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut names = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("malformed CSV: {e}")))?;
        if i == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
            names = Some(record.iter().map(str::to_owned).collect::<Vec<_>>());
            continue;
        }
        let line = i + 1;
        let row = record
            .iter()
            .enumerate()
            .map(|(j, f)| {
                let v: f64 = f.parse().map_err(|_| {
                    CliError::Input(format!("line {line}, column {}: '{f}' is not a number", column_label(&names, j)))
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(CliError::Input(format!("line {line}, column {}: non-finite value", column_label(&names, j))))
                }
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Input("no data rows".into()));
    }
    let series = TimeSeries::from_rows(&rows)?;
    match names {
        Some(n) => Ok(series.with_names(n)?),
        None => Ok(series),
    }
}

fn column_label(names: &Option<Vec<String>>, j: usize) -> String {
    match names.as_ref().and_then(|n| n.get(j)) {
        Some(name) => format!("{} ({name})", j + 1),
        None => (j + 1).to_string(),
    }
}

/// Formats a series as CSV with a header. Floats use the shortest
/// representation that parses back to the same value.
pub fn format_series(series: &TimeSeries) -> String {
    let d = series.dim();
    let header: Vec<String> = match series.names() {
        Some(n) => n.to_vec(),
        None => (0..d).map(|j| format!("x{j}")).collect(),
    };
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&header).expect("writing to memory");
    for t in 0..series.len() {
        writer.write_record(series.values().row(t).iter().map(|v| v.to_string())).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("writing to memory")).expect("CSV output is UTF-8")
}
