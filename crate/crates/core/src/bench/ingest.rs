//! CSV ingestion for user-supplied estimation problems.

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which columns of the file play which role.
///
/// Exactly one of `y` (real outputs) or `label` (`±1` classes) names the
/// response. Exactly one of `u` (regressor columns of a linear model) or
/// `inputs` (input locations for kernel methods) must be non-empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CsvSchema {
    pub y: Option<String>,
    pub label: Option<String>,
    #[serde(default)]
    pub u: Vec<String>,
    #[serde(default)]
    pub inputs: Vec<String>,
    /// Subtract column means from the response and every regressor or input
    /// column.
    #[serde(default)]
    pub detrend: bool,
}

impl CsvSchema {
    pub fn validate(&self) -> Result<()> {
        match (&self.y, &self.label) {
            (Some(_), Some(_)) => return Err(Error::Config("schema names both y and label".into())),
            (None, None) => return Err(Error::Config("schema needs a y or label column".into())),
            _ => {}
        }
        if self.u.is_empty() == self.inputs.is_empty() {
            return Err(Error::Config(
                "schema needs exactly one of u (regressors) or inputs (locations)".into(),
            ));
        }
        if self.label.is_some() && !self.u.is_empty() {
            return Err(Error::Config("labels are only supported with input locations".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimationProblem {
    /// `y = U θ + e`.
    Linear {
        u: DMatrix<f64>,
        y: DVector<f64>,
        columns: Vec<String>,
    },
    /// Outputs (or `±1` labels) at input locations.
    Points {
        inputs: Vec<Vec<f64>>,
        y: DVector<f64>,
        labeled: bool,
    },
}

impl EstimationProblem {
    pub fn rows(&self) -> usize {
        match self {
            EstimationProblem::Linear { y, .. } | EstimationProblem::Points { y, .. } => y.len(),
        }
    }
}

/// Reads a header-first numeric CSV file.
pub fn ingest_csv(path: &Path, schema: &CsvSchema) -> Result<EstimationProblem> {
    let file = std::fs::File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    ingest_reader(file, schema, &path.display().to_string())
}

/// As [`ingest_csv`] from any reader; `source` labels diagnostics.
pub fn ingest_reader<R: Read>(reader: R, schema: &CsvSchema, source: &str) -> Result<EstimationProblem> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Data(format!("{source}: cannot read header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let index_of = |name: &String| {
        header.iter().position(|h| h == name).ok_or_else(|| {
            Error::Data(format!(
                "{source}: column '{name}' not found in header [{}]",
                header.join(", ")
            ))
        })
    };
    let response = index_of(schema.y.as_ref().or(schema.label.as_ref()).expect("validated"))?;
    let features: Vec<usize> = if schema.u.is_empty() { &schema.inputs } else { &schema.u }
        .iter()
        .map(index_of)
        .collect::<Result<_>>()?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { pos, expected_len, len } => Error::Data(format!(
                "{source}:{}: row has {len} fields, header has {expected_len}",
                pos.as_ref().map_or(0, |p| p.line())
            )),
            _ => Error::Data(format!("{source}: {e}")),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    Error::Data(format!(
                        "{source}:{line}: column '{}': cannot parse '{cell}' as a finite number",
                        header[j]
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::Data(format!("{source}: no data rows")));
    }

    let mut y = DVector::from_iterator(n, rows.iter().map(|r| r[response]));
    let mut x = DMatrix::from_fn(n, features.len(), |i, j| rows[i][features[j]]);
    if schema.label.is_some() {
        if let Some((i, v)) = y.iter().enumerate().find(|(_, &v)| v != 1.0 && v != -1.0) {
            return Err(Error::Data(format!(
                "{source}: label column must hold ±1, data row {} has {v}",
                i + 1
            )));
        }
    } else if schema.detrend {
        y.add_scalar_mut(-y.mean());
    }
    if schema.detrend {
        for mut col in x.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
    }

    Ok(if schema.u.is_empty() {
        EstimationProblem::Points {
            inputs: x.row_iter().map(|r| r.iter().copied().collect()).collect(),
            y,
            labeled: schema.label.is_some(),
        }
    } else {
        EstimationProblem::Linear {
            u: x,
            y,
            columns: schema.u.clone(),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_schema() -> CsvSchema {
        CsvSchema {
            y: Some("y".into()),
            u: vec!["a".into(), "b".into()],
            ..Default::default()
        }
    }

    #[test]
    fn ragged_row_reports_line() {
        let text = "y,a,b\n1,2,3\n4,5\n";
        let err = ingest_reader(text.as_bytes(), &linear_schema(), "t.csv").unwrap_err();
        assert!(err.to_string().contains("t.csv:3"), "{err}");
    }

    #[test]
    fn non_numeric_cell() {
        let text = "y,a,b\n1,2,x\n";
        let err = ingest_reader(text.as_bytes(), &linear_schema(), "t.csv").unwrap_err();
        assert!(err.to_string().contains("column 'b'"), "{err}");
    }

    #[test]
    fn labels_must_be_binary() {
        let schema = CsvSchema {
            label: Some("c".into()),
            inputs: vec!["x".into()],
            ..Default::default()
        };
        let err = ingest_reader("c,x\n1,0\n2,1\n".as_bytes(), &schema, "t.csv").unwrap_err();
        assert!(err.to_string().contains("±1"));
    }
}
