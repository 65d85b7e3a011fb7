//! CSV ingestion and emission.
//!
//! Source files carry one header row with feature columns (`x1..xd` by
//! default, arbitrary names otherwise) plus an outcome column `y` and an
//! optional id column. Target files carry the same feature columns; a
//! single row is read as the target point, several rows as a target sample
//! whose centroid becomes the point. All files are UTF-8, comma-delimited,
//! `.` decimal separator.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::data::{Dataset, TargetSpec, WeightVector};
use crate::error::{Error, Result};
use crate::solver::ConvergenceTrace;

/// Renders a float with 17 significant digits, enough for exact f64
/// round-trips through text.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column layout of a parsed source file.
#[derive(Debug, Clone)]
pub struct SourceColumns {
    pub feature_names: Vec<String>,
    pub y_column: String,
    pub id_column: Option<String>,
}

/// Reads a source CSV. Every column except `y_column` (default `y`) and the
/// optional id column is taken as a feature, in header order.
pub fn read_source_csv(
    path: &Path,
    y_column: &str,
    id_column: Option<&str>,
) -> Result<(Dataset, SourceColumns)> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|s| s.to_string()).collect();
    let y_idx = headers
        .iter()
        .position(|h| h == y_column)
        .ok_or_else(|| Error::InvalidConfig(format!("source file has no `{y_column}` column")))?;
    let id_idx = match id_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::InvalidConfig(format!("source file has no `{name}` column"))
        })?),
        None => None,
    };
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&j| j != y_idx && Some(j) != id_idx)
        .collect();
    if feature_idx.is_empty() {
        return Err(Error::EmptyInput("source file has no feature columns"));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut outcomes: Vec<f64> = Vec::new();
    let mut ids: Vec<String> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(feature_idx.len());
        for &j in &feature_idx {
            row.push(parse_cell(&record[j], i + 1, &headers[j])?);
        }
        outcomes.push(parse_cell(&record[y_idx], i + 1, y_column)?);
        ids.push(match id_idx {
            Some(j) => record[j].to_string(),
            None => (i + 1).to_string(),
        });
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("source file has no data rows"));
    }
    let d = rows[0].len();
    let features = DMatrix::from_row_iterator(rows.len(), d, rows.iter().flatten().copied());
    let data = Dataset::new(features, DVector::from_vec(outcomes), Some(ids))?;
    let columns = SourceColumns {
        feature_names: feature_idx.iter().map(|&j| headers[j].clone()).collect(),
        y_column: y_column.to_string(),
        id_column: id_column.map(|s| s.to_string()),
    };
    Ok((data, columns))
}

/// Reads a target CSV whose feature columns must match the source layout.
/// One data row yields a bare point; several yield a sample with its
/// centroid as the point.
pub fn read_target_csv(path: &Path, feature_names: &[String]) -> Result<TargetSpec> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|s| s.to_string()).collect();
    let mut idx = Vec::with_capacity(feature_names.len());
    for name in feature_names {
        let j = headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::InvalidConfig(format!("target file is missing feature column `{name}`"))
        })?;
        idx.push(j);
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(idx.len());
        for (&j, name) in idx.iter().zip(feature_names) {
            row.push(parse_cell(&record[j], i + 1, name)?);
        }
        rows.push(row);
    }
    match rows.len() {
        0 => Err(Error::EmptyInput("target file has no data rows")),
        1 => TargetSpec::from_point(DVector::from_vec(rows.pop().unwrap())),
        m => {
            let d = rows[0].len();
            let sample = DMatrix::from_row_iterator(m, d, rows.iter().flatten().copied());
            TargetSpec::from_sample(sample)
        }
    }
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    let trimmed = cell.trim();
    let value = trimmed.parse::<f64>().map_err(|_| Error::NonFinite {
        row,
        column: format!("{column} (value `{trimmed}`)"),
    })?;
    if !value.is_finite() {
        return Err(Error::NonFinite {
            row,
            column: format!("{column} (value `{trimmed}`)"),
        });
    }
    Ok(value)
}

/// Writes weights as `unit_id,weight` rows.
pub fn write_weights_csv(path: &Path, unit_ids: &[String], w: &WeightVector) -> Result<()> {
    if unit_ids.len() != w.len() {
        return Err(Error::DimensionMismatch {
            context: "unit id count vs weight length",
            expected: w.len(),
            found: unit_ids.len(),
        });
    }
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "unit_id,weight")?;
    for (id, wi) in unit_ids.iter().zip(w.weights().iter()) {
        writeln!(out, "{id},{}", fmt_g17(*wi))?;
    }
    Ok(())
}

/// Reads a `unit_id,weight` file back.
pub fn read_weights_csv(path: &Path) -> Result<(Vec<String>, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let w_idx = headers
        .iter()
        .position(|h| h == "weight")
        .ok_or_else(|| Error::InvalidConfig("weights file has no `weight` column".to_string()))?;
    let id_idx = headers.iter().position(|h| h == "unit_id");
    let mut ids = Vec::new();
    let mut weights = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        weights.push(parse_cell(&record[w_idx], i + 1, "weight")?);
        ids.push(match id_idx {
            Some(j) => record[j].to_string(),
            None => (i + 1).to_string(),
        });
    }
    if weights.is_empty() {
        return Err(Error::EmptyInput("weights file has no data rows"));
    }
    Ok((ids, weights))
}

/// Writes the per-epoch objective trace as `epoch,total,term_a,term_b,term_c`.
pub fn write_trace_csv(path: &Path, trace: &ConvergenceTrace) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "epoch,total,term_a,term_b,term_c")?;
    for row in &trace.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.epoch,
            fmt_g17(row.total),
            fmt_g17(row.term_a),
            fmt_g17(row.term_b),
            fmt_g17(row.term_c)
        )?;
    }
    Ok(())
}

/// Writes a dataset in the standard source layout (`x1..xd`, `y`).
pub fn write_source_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    let names: Vec<String> = (1..=data.dim()).map(|j| format!("x{j}")).collect();
    writeln!(out, "{},y", names.join(","))?;
    for i in 0..data.n() {
        let mut cells: Vec<String> = (0..data.dim())
            .map(|j| fmt_g17(data.features()[(i, j)]))
            .collect();
        cells.push(fmt_g17(data.outcomes()[i]));
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Writes a target in the standard layout; the bare point when no sample is
/// attached, otherwise the full sample.
pub fn write_target_csv(path: &Path, target: &TargetSpec) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    let names: Vec<String> = (1..=target.dim()).map(|j| format!("x{j}")).collect();
    writeln!(out, "{}", names.join(","))?;
    match target.sample() {
        Some(sample) => {
            for i in 0..sample.nrows() {
                let cells: Vec<String> = (0..sample.ncols()).map(|j| fmt_g17(sample[(i, j)])).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        None => {
            let cells: Vec<String> = target.point().iter().map(|&v| fmt_g17(v)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Provenance;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fmt_g17_round_trips_exactly() {
        for &x in &[
            0.1,
            -3.25e-17,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            123456.789012345678,
            0.0,
        ] {
            let parsed: f64 = fmt_g17(x).parse().unwrap();
            assert_eq!(parsed.to_bits(), x.to_bits(), "{x}");
        }
    }

    #[test]
    fn source_target_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("source.csv");
        let tgt = dir.path().join("target.csv");
        let data = Dataset::from_rows(
            &[vec![0.25, 1.5], vec![0.75, -0.5], vec![0.1, 0.9]],
            &[1.0, 2.0, 3.0],
        )
        .unwrap();
        let target = TargetSpec::from_point(DVector::from_column_slice(&[1.25, 0.5])).unwrap();
        write_source_csv(&src, &data).unwrap();
        write_target_csv(&tgt, &target).unwrap();

        let (parsed, cols) = read_source_csv(&src, "y", None).unwrap();
        assert_eq!(cols.feature_names, vec!["x1", "x2"]);
        assert_eq!(parsed.features(), data.features());
        assert_eq!(parsed.outcomes(), data.outcomes());
        let parsed_target = read_target_csv(&tgt, &cols.feature_names).unwrap();
        assert_eq!(parsed_target.point(), target.point());
    }

    #[test]
    fn multi_row_target_becomes_sample_with_centroid() {
        let dir = tempfile::tempdir().unwrap();
        let tgt = dir.path().join("target.csv");
        std::fs::write(&tgt, "x1,x2\n1.0,2.0\n3.0,6.0\n").unwrap();
        let t = read_target_csv(&tgt, &["x1".to_string(), "x2".to_string()]).unwrap();
        assert!(t.sample().is_some());
        assert_abs_diff_eq!(t.point()[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.point()[1], 4.0, epsilon = 1e-15);
    }

    #[test]
    fn bad_cell_reports_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("source.csv");
        std::fs::write(&src, "x1,y\n1.0,2.0\noops,3.0\n").unwrap();
        let err = read_source_csv(&src, "y", None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2"), "{msg}");
        assert!(msg.contains("x1"), "{msg}");
    }

    #[test]
    fn nan_and_infinite_cells_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("source.csv");
        std::fs::write(&src, "width,y\n1.0,2.0\nNaN,3.0\n").unwrap();
        let msg = read_source_csv(&src, "y", None).unwrap_err().to_string();
        assert!(msg.contains("row 2") && msg.contains("width"), "{msg}");
        std::fs::write(&src, "width,y\n1e999,2.0\n").unwrap();
        assert!(read_source_csv(&src, "y", None).is_err());
    }

    #[test]
    fn weights_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weights.csv");
        let w = WeightVector::new(
            DVector::from_column_slice(&[-0.123456789012345678, 1.1]),
            Provenance::External,
        )
        .unwrap();
        let ids = vec!["a".to_string(), "b".to_string()];
        write_weights_csv(&path, &ids, &w).unwrap();
        let (rids, rw) = read_weights_csv(&path).unwrap();
        assert_eq!(rids, ids);
        assert_eq!(rw[0].to_bits(), w.weights()[0].to_bits());
        assert_eq!(rw[1].to_bits(), w.weights()[1].to_bits());
    }
}
