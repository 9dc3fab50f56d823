//! CSV ingestion: header-driven design matrix and response extraction.

use anyhow::{bail, Context, Result};
use proxyreg::linalg::Matrix;
use proxyreg::solvers::LossFamily;
use std::path::Path;

/// Parsed dataset: design matrix in header order (target column removed),
/// the response vector, feature names, and how many rows were dropped for
/// missing values.
#[derive(Debug, Clone)]
pub struct IngestedData {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub feature_names: Vec<String>,
    pub dropped_rows: usize,
}

/// Load a CSV with a header row: the target column becomes y, the remaining
/// columns form X in header order. Rows with any empty cell are dropped and
/// counted; a non-numeric non-empty cell is an error naming its position.
pub fn ingest_csv(path: &Path, target: &str, loss: LossFamily) -> Result<IngestedData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers: Vec<String> =
        reader.headers().context("reading header row")?.iter().map(str::to_string).collect();
    let target_idx = headers.iter().position(|h| h == target).with_context(|| {
        format!(
            "target column '{target}' not found in {}; available columns: {}",
            path.display(),
            headers.join(", ")
        )
    })?;
    let feature_names: Vec<String> =
        headers.iter().enumerate().filter(|(i, _)| *i != target_idx).map(|(_, h)| h.clone()).collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    let mut dropped_rows = 0usize;
    for (line, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("reading row {}", line + 2))?;
        if record.len() != headers.len() {
            bail!(
                "{}: row {} has {} cells, header has {}",
                path.display(),
                line + 2,
                record.len(),
                headers.len()
            );
        }
        if record.iter().any(|c| c.is_empty()) {
            dropped_rows += 1;
            continue;
        }
        let mut feats = Vec::with_capacity(headers.len() - 1);
        let mut target_val = 0.0;
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().with_context(|| {
                format!(
                    "{}: non-numeric cell '{}' at row {}, column '{}'",
                    path.display(),
                    cell,
                    line + 2,
                    headers[col]
                )
            })?;
            if col == target_idx {
                target_val = v;
            } else {
                feats.push(v);
            }
        }
        if loss == LossFamily::Logistic && target_val != 0.0 && target_val != 1.0 {
            bail!(
                "{}: logistic mode needs a binary (0/1) target, got {} at row {}",
                path.display(),
                target_val,
                line + 2
            );
        }
        rows.push(feats);
        y.push(target_val);
    }
    if rows.is_empty() {
        bail!("{}: no usable rows (dropped {dropped_rows})", path.display());
    }
    let x = Matrix::from_rows(&rows).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    Ok(IngestedData { x, y, feature_names, dropped_rows })
}

/// Gold and proxy files must share a header schema; a mismatch reports the
/// symmetric difference of their feature sets.
pub fn check_schema_match(gold: &IngestedData, proxy: &IngestedData) -> Result<()> {
    if gold.feature_names == proxy.feature_names {
        return Ok(());
    }
    let only_gold: Vec<&String> =
        gold.feature_names.iter().filter(|n| !proxy.feature_names.contains(n)).collect();
    let only_proxy: Vec<&String> =
        proxy.feature_names.iter().filter(|n| !gold.feature_names.contains(n)).collect();
    if only_gold.is_empty() && only_proxy.is_empty() {
        bail!(
            "gold and proxy files share columns but in different order; reorder to a common schema"
        );
    }
    bail!(
        "gold and proxy column schemas differ; only in gold: [{}], only in proxy: [{}]",
        only_gold.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "),
        only_proxy.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_simple_file() {
        let f = write_tmp("y,x1\n1,2\n0,3\n1,4\n");
        let d = ingest_csv(f.path(), "y", LossFamily::Squared).unwrap();
        assert_eq!(d.x.rows(), 3);
        assert_eq!(d.x.data(), &[2.0, 3.0, 4.0]);
        assert_eq!(d.y, vec![1.0, 0.0, 1.0]);
        assert_eq!(d.feature_names, vec!["x1"]);
        assert_eq!(d.dropped_rows, 0);
    }

    #[test]
    fn drops_and_counts_missing_rows() {
        let f = write_tmp("y,x1,x2\n1,2,3\n0,,5\n1,4,6\n");
        let d = ingest_csv(f.path(), "y", LossFamily::Squared).unwrap();
        assert_eq!(d.x.rows(), 2);
        assert_eq!(d.dropped_rows, 1);
    }

    #[test]
    fn missing_target_names_available_columns() {
        let f = write_tmp("y,x1\n1,2\n");
        let err = ingest_csv(f.path(), "z", LossFamily::Squared).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("'z'") && msg.contains("y, x1"), "{msg}");
    }

    #[test]
    fn non_numeric_cell_reports_position() {
        let f = write_tmp("y,x1\n1,2\n0,abc\n");
        let err = ingest_csv(f.path(), "y", LossFamily::Squared).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("abc") && msg.contains("row 3") && msg.contains("x1"), "{msg}");
    }

    #[test]
    fn logistic_needs_binary_target() {
        let f = write_tmp("y,x1\n0.5,2\n");
        assert!(ingest_csv(f.path(), "y", LossFamily::Logistic).is_err());
    }

    #[test]
    fn schema_mismatch_lists_difference() {
        let a = write_tmp("y,x1,x2\n1,2,3\n");
        let b = write_tmp("y,x1,x3\n1,2,3\n");
        let da = ingest_csv(a.path(), "y", LossFamily::Squared).unwrap();
        let db = ingest_csv(b.path(), "y", LossFamily::Squared).unwrap();
        let err = check_schema_match(&da, &db).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("x2") && msg.contains("x3"), "{msg}");
    }
}
