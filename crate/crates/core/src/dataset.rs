//! Points, colorings and the ground metric.

use serde::{Deserialize, Serialize};

use crate::error::{FairError, Result};
use crate::norm::{lq_distance, Exponent};

/// Tolerance for the metric axioms of a user-supplied distance matrix.
pub const METRIC_TOLERANCE: f64 = 1e-9;

/// A point in feature space; all coordinates finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorPoint(Vec<f64>);

impl VectorPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some((axis, &value)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(FairError::NonFinite { point: 0, axis, value });
        }
        Ok(VectorPoint(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<VectorPoint> for Vec<f64> {
    fn from(p: VectorPoint) -> Vec<f64> {
        p.0
    }
}

/// `ℓq` norm of `a - b`.
pub fn point_distance(a: &VectorPoint, b: &VectorPoint, q: Exponent) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(FairError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(lq_distance(a.coords(), b.coords(), q))
}

/// Symmetric distance matrix for general finite metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry, zero diagonal, nonnegativity and the triangle
    /// inequality, each up to [`METRIC_TOLERANCE`].
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(FairError::InvalidMetric(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        let m = DistanceMatrix { n, entries };
        for i in 0..n {
            if m.get(i, i).abs() > METRIC_TOLERANCE {
                return Err(FairError::InvalidMetric(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let d = m.get(i, j);
                if !d.is_finite() || d < -METRIC_TOLERANCE {
                    return Err(FairError::InvalidMetric(format!("bad entry at ({i},{j})")));
                }
                if (d - m.get(j, i)).abs() > METRIC_TOLERANCE {
                    return Err(FairError::InvalidMetric(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if m.get(i, k) > m.get(i, j) + m.get(j, k) + METRIC_TOLERANCE {
                        return Err(FairError::InvalidMetric(format!(
                            "triangle inequality violated for ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Points(Vec<VectorPoint>),
    Matrix(DistanceMatrix),
}

/// Point set with a coloring `c: [N] -> [ℓ]`.
///
/// Construction checks that colors are `0..ℓ` and every color occurs, but
/// not that the classes have equal size; fair methods call
/// [`ColoredDataset::ensure_balanced`] before doing any work.
#[derive(Debug, Clone, PartialEq)]
pub struct ColoredDataset {
    geometry: Geometry,
    colors: Vec<usize>,
    classes: Vec<Vec<usize>>,
}

impl ColoredDataset {
    pub fn from_points(points: Vec<VectorPoint>, colors: Vec<usize>) -> Result<Self> {
        if let Some(first) = points.first() {
            let d = first.dim();
            if let Some(bad) = points.iter().find(|p| p.dim() != d) {
                return Err(FairError::DimensionMismatch {
                    left: d,
                    right: bad.dim(),
                });
            }
        }
        Self::build(Geometry::Points(points), colors)
    }

    /// Convenience constructor from raw rows; rejects non-finite values.
    pub fn from_rows(rows: Vec<Vec<f64>>, colors: Vec<usize>) -> Result<Self> {
        let points = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                VectorPoint::new(r).map_err(|e| match e {
                    FairError::NonFinite { axis, value, .. } => FairError::NonFinite { point: i, axis, value },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_points(points, colors)
    }

    /// A single-color dataset, for running unconstrained solvers.
    pub fn uncolored(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        Self::from_rows(rows, vec![0; n])
    }

    pub fn from_distance_matrix(matrix: DistanceMatrix, colors: Vec<usize>) -> Result<Self> {
        Self::build(Geometry::Matrix(matrix), colors)
    }

    fn build(geometry: Geometry, colors: Vec<usize>) -> Result<Self> {
        let len = match &geometry {
            Geometry::Points(p) => p.len(),
            Geometry::Matrix(m) => m.len(),
        };
        if colors.len() != len {
            return Err(FairError::InvalidColoring(format!(
                "{} colors for {len} points",
                colors.len()
            )));
        }
        if len == 0 {
            return Err(FairError::InvalidColoring("empty dataset".into()));
        }
        let num_colors = colors.iter().max().map_or(0, |m| m + 1);
        let mut classes = vec![Vec::new(); num_colors];
        for (i, &c) in colors.iter().enumerate() {
            classes[c].push(i);
        }
        if let Some(missing) = classes.iter().position(Vec::is_empty) {
            return Err(FairError::InvalidColoring(format!("color {missing} has no points")));
        }
        Ok(ColoredDataset {
            geometry,
            colors,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn num_colors(&self) -> usize {
        self.classes.len()
    }

    pub fn color(&self, i: usize) -> usize {
        self.colors[i]
    }

    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    /// Point indices of color `c`, in input order.
    pub fn class(&self, c: usize) -> &[usize] {
        &self.classes[c]
    }

    pub fn is_balanced(&self) -> bool {
        let n = self.classes[0].len();
        self.classes.iter().all(|c| c.len() == n)
    }

    /// Returns the common class size `n`, or the first offending color.
    pub fn ensure_balanced(&self) -> Result<usize> {
        let expected = self.classes[0].len();
        for (color, class) in self.classes.iter().enumerate() {
            if class.len() != expected {
                return Err(FairError::Unbalanced {
                    color,
                    count: class.len(),
                    expected,
                });
            }
        }
        Ok(expected)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn points(&self) -> Option<&[VectorPoint]> {
        match &self.geometry {
            Geometry::Points(p) => Some(p),
            Geometry::Matrix(_) => None,
        }
    }

    pub fn point(&self, i: usize) -> Option<&VectorPoint> {
        self.points().map(|p| &p[i])
    }

    pub fn dim(&self) -> Option<usize> {
        self.points().map(|p| p[0].dim())
    }

    /// Ground distance between dataset points `i` and `j`. The exponent is
    /// ignored in distance-matrix mode.
    #[inline]
    pub fn distance(&self, i: usize, j: usize, q: Exponent) -> f64 {
        match &self.geometry {
            Geometry::Points(p) => lq_distance(p[i].coords(), p[j].coords(), q),
            Geometry::Matrix(m) => m.get(i, j),
        }
    }

    /// Subset of the dataset with the given point order and coloring
    /// preserved. Used by tests and the harness.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let colors: Vec<usize> = indices.iter().map(|&i| self.colors[i]).collect();
        let geometry = match &self.geometry {
            Geometry::Points(p) => Geometry::Points(indices.iter().map(|&i| p[i].clone()).collect()),
            Geometry::Matrix(m) => Geometry::Matrix(DistanceMatrix {
                n: indices.len(),
                entries: indices
                    .iter()
                    .flat_map(|&i| indices.iter().map(move |&j| m.get(i, j)))
                    .collect(),
            }),
        };
        Self::build(geometry, colors)
    }

    /// Keeps the first index of every group of coincident points.
    pub fn distinct(&self, members: &[usize]) -> Vec<usize> {
        let mut kept: Vec<usize> = Vec::with_capacity(members.len());
        for &i in members {
            let dup = match &self.geometry {
                Geometry::Points(p) => kept.iter().any(|&j| p[i] == p[j]),
                Geometry::Matrix(m) => kept.iter().any(|&j| m.get(i, j) <= 0.0),
            };
            if !dup {
                kept.push(i);
            }
        }
        kept
    }
}
