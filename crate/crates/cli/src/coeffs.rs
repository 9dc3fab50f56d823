//! Coefficient file I/O: a fitted β is a single-column CSV with header
//! "beta" (row order = feature order); a recovered bias is a two-column
//! "feature,delta" CSV.

use anyhow::{bail, Context, Result};
use proxyreg::BiasVector;
use std::path::Path;

pub fn write_beta_csv(path: &Path, beta: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["beta"])?;
    for v in beta {
        w.write_record([v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_beta_csv(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = r.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h == "beta")
        .with_context(|| format!("{}: no 'beta' column", path.display()))?;
    let mut beta = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let cell = rec.get(col).unwrap_or("");
        let v: f64 = cell
            .parse()
            .with_context(|| format!("{}: bad value '{cell}' at row {}", path.display(), i + 2))?;
        beta.push(v);
    }
    if beta.is_empty() {
        bail!("{}: empty coefficient file", path.display());
    }
    Ok(beta)
}

pub fn write_delta_csv(path: &Path, feature_names: &[String], bias: &BiasVector) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["feature", "delta"])?;
    for (j, v) in bias.delta.iter().enumerate() {
        let name = feature_names.get(j).cloned().unwrap_or_else(|| format!("x{j}"));
        w.write_record([name, v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("beta.csv");
        write_beta_csv(&p, &[1.5, -0.25, 0.0]).unwrap();
        assert_eq!(read_beta_csv(&p).unwrap(), vec![1.5, -0.25, 0.0]);
    }

    #[test]
    fn delta_uses_feature_names() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("delta.csv");
        let bias = BiasVector::from_delta(vec![0.0, 0.3]);
        write_delta_csv(&p, &["price".into(), "stars".into()], &bias).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("feature,delta\n"));
        assert!(text.contains("stars,0.3"));
    }
}
