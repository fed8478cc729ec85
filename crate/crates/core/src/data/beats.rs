use std::path::Path;

use crate::classical::Tensor;
use crate::error::{Error, Result};

use super::Dataset;

/// Samples per beat (one second at 360 Hz).
pub const BEAT_FEATURES: usize = 360;

/// Reads headerless rows of `BEAT_FEATURES` reals, a 0/1 label and an
/// integer subject id. Rows and columns in errors are 1-based.
pub fn load_beats_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let fail = |row: usize, column: usize, message: String| Error::Csv {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fail(0, 0, e.to_string()))?;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut subjects = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| fail(row, 0, e.to_string()))?;
        if record.len() != BEAT_FEATURES + 2 {
            return Err(fail(
                row,
                record.len(),
                format!(
                    "expected {} columns ({BEAT_FEATURES} features, label, subject), found {}",
                    BEAT_FEATURES + 2,
                    record.len()
                ),
            ));
        }
        for (c, field) in record.iter().take(BEAT_FEATURES).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| fail(row, c + 1, format!("not a number: {field:?}")))?;
            data.push(v);
        }
        let label = &record[BEAT_FEATURES];
        labels.push(match label.parse::<f64>() {
            Ok(0.0) => 0,
            Ok(1.0) => 1,
            _ => {
                return Err(fail(
                    row,
                    BEAT_FEATURES + 1,
                    format!("label must be 0 or 1, got {label:?}"),
                ))
            }
        });
        let subject = &record[BEAT_FEATURES + 1];
        subjects.push(subject.parse::<i64>().map_err(|_| {
            fail(
                row,
                BEAT_FEATURES + 2,
                format!("bad subject id {subject:?}"),
            )
        })?);
    }
    if labels.is_empty() {
        return Err(fail(0, 0, "no rows".into()));
    }
    let samples = Tensor::new(vec![labels.len(), BEAT_FEATURES], data)?;
    Dataset::new(samples, labels, Some(subjects))
}
