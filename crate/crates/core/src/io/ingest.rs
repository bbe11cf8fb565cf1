use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use super::config::AnalysisConfig;
use crate::assignment::Dataset;
use crate::{Error, Result};

/// Parsed dataset and the listwise-deletion audit.
#[derive(Clone, Debug, PartialEq)]
pub struct Ingested {
    pub data: Dataset,
    pub total_rows: usize,
    pub dropped_rows: usize,
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f == "." || ["na", "nan", "null"].iter().any(|m| f.eq_ignore_ascii_case(m))
}

pub fn ingest_csv(path: &Path, config: &AnalysisConfig) -> Result<Ingested> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, config)
}

/// Reads a headed CSV, keeping the configured columns and dropping rows
/// with any of them missing.
pub fn ingest_reader<R: Read>(reader: R, config: &AnalysisConfig) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(name.to_string()))
    };
    let treatment_col = column(&config.treatment)?;
    let winner_col = config.winner.as_deref().map(column).transpose()?;
    let outcome_cols = config.outcomes.iter().map(|c| column(c)).collect::<Result<Vec<_>>>()?;
    let covariate_cols = config.covariates.iter().map(|c| column(c)).collect::<Result<Vec<_>>>()?;

    let mut required: Vec<usize> = vec![treatment_col];
    required.extend(winner_col);
    required.extend(&outcome_cols);
    required.extend(&covariate_cols);

    let (mut w, mut y, mut x) = (Vec::new(), Vec::new(), Vec::new());
    let mut total_rows = 0;
    let mut dropped_rows = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        total_rows += 1;
        let line = r + 2;
        if required.iter().any(|&c| record.get(c).is_none_or(is_missing)) {
            dropped_rows += 1;
            continue;
        }
        let num = |c: usize| -> Result<f64> {
            let raw = &record[c];
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::DataIntegrity(format!("line {line}, column `{}`: `{raw}` is not a number", &headers[c])))
        };
        let prize = num(treatment_col)?;
        if let Some(wc) = winner_col {
            let won = num(wc)?;
            if won != 0.0 && won != 1.0 {
                return Err(Error::DataIntegrity(format!("line {line}: winner flag {won} is not 0 or 1")));
            }
            if won == 1.0 && prize <= 0.0 {
                return Err(Error::DataIntegrity(format!("line {line}: winner with nonpositive prize {prize}")));
            }
            if won == 0.0 && prize != 0.0 {
                return Err(Error::DataIntegrity(format!("line {line}: non-winner with prize {prize}")));
            }
        } else if prize < 0.0 {
            return Err(Error::DataIntegrity(format!("line {line}: negative prize {prize}")));
        }
        w.push(prize);
        y.push(outcome_cols.iter().map(|&c| num(c)).collect::<Result<Vec<_>>>()?);
        x.push(covariate_cols.iter().map(|&c| num(c)).collect::<Result<Vec<_>>>()?);
    }
    if dropped_rows > 0 {
        log::info!("dropped {dropped_rows} of {total_rows} rows with missing required fields");
    }
    let n = w.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if let Some(expected) = config.expected_rows {
        if expected != n {
            return Err(Error::DataIntegrity(format!(
                "{n} complete rows, configuration expects {expected}"
            )));
        }
    }
    let outcomes = DMatrix::from_fn(n, outcome_cols.len(), |i, j| y[i][j]);
    let covariates = DMatrix::from_fn(n, covariate_cols.len(), |i, j| x[i][j]);
    Ok(Ingested {
        data: Dataset::new(outcomes, w, covariates)?,
        total_rows,
        dropped_rows,
    })
}

/// Writes a dataset as CSV with columns `prize, y0.., x0..`, the layout
/// that [`AnalysisConfig::for_columns`] describes.
pub fn dataset_csv(data: &Dataset) -> String {
    use std::fmt::Write as _;
    let (years, d) = (data.n_years(), data.covariates().ncols());
    let mut header = vec!["prize".to_string()];
    header.extend((0..years).map(|j| format!("y{j}")));
    header.extend((0..d).map(|k| format!("x{k}")));
    let mut s = header.join(",");
    s.push('\n');
    for i in 0..data.n_units() {
        let _ = write!(s, "{}", data.treatment()[i]);
        for j in 0..years {
            let _ = write!(s, ",{}", data.outcomes()[(i, j)]);
        }
        for k in 0..d {
            let _ = write!(s, ",{}", data.covariates()[(i, k)]);
        }
        s.push('\n');
    }
    s
}
