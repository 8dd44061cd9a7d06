//! Experiment harness behind the `fairclust` binary: method runs, table
//! aggregation, EMD queries, oracle spot checks and ratio certificates.

pub mod certify;
pub mod run;
pub mod table;

use std::path::Path;

use fairclust::{ColoredDataset, FairError, Result};

/// Reads a headed CSV of numeric columns.
pub fn read_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| FairError::Parse(format!("{}: row {}: `{v}` is not a number", path.display(), r + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a headed CSV with a `color` column (integer labels from 0) and
/// numeric feature columns.
pub fn read_colored(path: &Path) -> Result<ColoredDataset> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let color_col = headers
        .iter()
        .position(|h| h == "color")
        .ok_or_else(|| FairError::MissingColumn("color".into()))?;
    let mut rows = Vec::new();
    let mut colors = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |v: &str| FairError::Parse(format!("{}: row {}: bad value `{v}`", path.display(), r + 1));
        let mut row = Vec::new();
        for (c, v) in rec.iter().enumerate() {
            if c == color_col {
                colors.push(v.trim().parse::<usize>().map_err(|_| bad(v))?);
            } else {
                row.push(v.trim().parse::<f64>().map_err(|_| bad(v))?);
            }
        }
        rows.push(row);
    }
    ColoredDataset::from_rows(rows, colors)
}

/// Two equal-size point sets as a two-color dataset.
pub fn two_class_dataset(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> Result<ColoredDataset> {
    if a.len() != b.len() {
        return Err(FairError::Unbalanced {
            color: 1,
            count: b.len(),
            expected: a.len(),
        });
    }
    let colors = (0..a.len() + b.len()).map(|i| usize::from(i >= a.len())).collect();
    ColoredDataset::from_rows(a.into_iter().chain(b).collect(), colors)
}
