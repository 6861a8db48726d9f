//! CSV readers and writers.
//!
//! Floats are written with `Display`, the shortest representation that
//! round-trips, and a missing outcome is an empty field.

use std::path::Path;

use drmean_core::Dataset;
use nalgebra::DMatrix;

use crate::{CliError, CliResult};

fn data_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {msg}", path.display()))
}

fn reader(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(path, e))
}

fn parse_f64(path: &Path, row: usize, col: &str, field: &str) -> CliResult<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| data_err(path, format!("row {row}, column {col}: {field:?} is not a finite number")))
}

/// Read a dataset CSV with columns `t`, `y` and numeric covariates.
///
/// Rows are numbered from 1 after the header. Returns the dataset and
/// warnings for outcomes present on nonrespondents, which are ignored.
pub fn read_dataset(path: &Path) -> CliResult<(Dataset, Vec<String>)> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| data_err(path, e))?.clone();
    if headers.is_empty() {
        return Err(data_err(path, "empty file"));
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_err(path, format!("missing column {name:?}")))
    };
    let (ti, yi) = (find("t")?, find("y")?);
    let cov_idx: Vec<usize> = (0..headers.len()).filter(|&k| k != ti && k != yi).collect();
    let names: Vec<String> = cov_idx.iter().map(|&k| headers[k].to_string()).collect();

    let (mut t, mut y, mut cov, mut warnings) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| data_err(path, format!("row {row}: {e}")))?;
        let tv = match &rec[ti] {
            "0" => 0u8,
            "1" => 1u8,
            other => return Err(data_err(path, format!("row {row}, column t: {other:?} is not 0 or 1"))),
        };
        let yfield = &rec[yi];
        let yv = match (tv, yfield.is_empty()) {
            (1, true) => return Err(data_err(path, format!("row {row}: y is missing for a respondent"))),
            (1, false) => Some(parse_f64(path, row, "y", yfield)?),
            (_, false) => {
                warnings.push(format!("row {row}: y given where t = 0; ignored"));
                None
            }
            _ => None,
        };
        for &k in &cov_idx {
            cov.push(parse_f64(path, row, &headers[k], &rec[k])?);
        }
        t.push(tv);
        y.push(yv);
    }
    if t.is_empty() {
        return Err(data_err(path, "no data rows"));
    }
    let covariates = DMatrix::from_row_slice(t.len(), names.len(), &cov);
    let data = Dataset::new(t, y, covariates, names).map_err(|e| data_err(path, e))?;
    Ok((data, warnings))
}

/// Write a dataset in the format read by [`read_dataset`].
pub fn write_dataset<W: std::io::Write>(out: W, data: &Dataset) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "y".to_string()];
    header.extend(data.names.iter().cloned());
    w.write_record(&header).map_err(anyhow::Error::from)?;
    for i in 0..data.n() {
        let mut rec = vec![data.t[i].to_string(), data.y[i].map(|v| v.to_string()).unwrap_or_default()];
        rec.extend((0..data.covariates.ncols()).map(|j| data.covariates[(i, j)].to_string()));
        w.write_record(&rec).map_err(anyhow::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

/// Values of one column over the rows that pass every `column=value` filter.
pub fn read_column(path: &Path, column: &str, filters: &[(String, String)]) -> CliResult<Vec<f64>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| data_err(path, e))?.clone();
    let idx = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_err(path, format!("missing column {name:?}")))
    };
    let vi = idx(column)?;
    let fi: Vec<(usize, &str)> = filters
        .iter()
        .map(|(k, v)| Ok((idx(k)?, v.as_str())))
        .collect::<CliResult<_>>()?;
    let mut values = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| data_err(path, format!("row {row}: {e}")))?;
        if fi.iter().all(|&(k, v)| &rec[k] == v) && !rec[vi].is_empty() {
            values.push(parse_f64(path, row, column, &rec[vi])?);
        }
    }
    Ok(values)
}
