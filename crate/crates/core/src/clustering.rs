//! Center sets, clusterings, cost evaluation and balance certificates.

use serde::{Deserialize, Serialize};

use crate::dataset::{ColoredDataset, Geometry, VectorPoint};
use crate::error::{FairError, Result};
use crate::norm::{lq_distance, Exponent, NormSpec};

/// Relative tolerance for comparing a stored cost with a recomputed one.
pub const COST_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Centers {
    /// Indices of dataset points (medoid convention; the only option in
    /// distance-matrix mode).
    Medoids(Vec<usize>),
    /// Arbitrary coordinates, e.g. k-means centroids.
    Coordinates(Vec<VectorPoint>),
}

/// At most `k` pairwise-distinct centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterSet {
    centers: Centers,
    k: usize,
}

impl CenterSet {
    pub fn medoids(indices: Vec<usize>, k: usize) -> Result<Self> {
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != indices.len() {
            return Err(FairError::InvalidArgument("duplicate medoid index".into()));
        }
        Self::checked(Centers::Medoids(indices), k)
    }

    pub fn coordinates(points: Vec<VectorPoint>, k: usize) -> Result<Self> {
        for (i, a) in points.iter().enumerate() {
            if points[..i].iter().any(|b| b == a) {
                return Err(FairError::InvalidArgument("duplicate center coordinates".into()));
            }
        }
        Self::checked(Centers::Coordinates(points), k)
    }

    fn checked(centers: Centers, k: usize) -> Result<Self> {
        let set = CenterSet { centers, k };
        if set.is_empty() || set.len() > k {
            return Err(FairError::InvalidArgument(format!(
                "need 1..={k} centers, got {}",
                set.len()
            )));
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        match &self.centers {
            Centers::Medoids(m) => m.len(),
            Centers::Coordinates(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn centers(&self) -> &Centers {
        &self.centers
    }

    pub fn medoid_indices(&self) -> Option<&[usize]> {
        match &self.centers {
            Centers::Medoids(m) => Some(m),
            Centers::Coordinates(_) => None,
        }
    }

    /// Checks the centers can be evaluated against `dataset`.
    pub fn validate_for(&self, dataset: &ColoredDataset) -> Result<()> {
        match (&self.centers, dataset.geometry()) {
            (Centers::Medoids(m), _) => {
                if let Some(&bad) = m.iter().find(|&&i| i >= dataset.len()) {
                    return Err(FairError::InvalidArgument(format!("medoid {bad} out of range")));
                }
                Ok(())
            }
            (Centers::Coordinates(_), Geometry::Matrix(_)) => Err(FairError::CoordinatesRequired),
            (Centers::Coordinates(c), Geometry::Points(p)) => {
                let d = p[0].dim();
                match c.iter().find(|x| x.dim() != d) {
                    Some(x) => Err(FairError::DimensionMismatch {
                        left: d,
                        right: x.dim(),
                    }),
                    None => Ok(()),
                }
            }
        }
    }

    /// Distance from dataset point `i` to center `c`.
    #[inline]
    pub fn distance(&self, dataset: &ColoredDataset, i: usize, c: usize, q: Exponent) -> f64 {
        match &self.centers {
            Centers::Medoids(m) => dataset.distance(i, m[c], q),
            Centers::Coordinates(cs) => {
                let p = dataset.point(i).expect("validated: coordinates need points");
                lq_distance(p.coords(), cs[c].coords(), q)
            }
        }
    }

    /// Nearest center of point `i`; ties go to the lowest center index.
    pub fn nearest(&self, dataset: &ColoredDataset, i: usize, q: Exponent) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for c in 0..self.len() {
            let d = self.distance(dataset, i, c, q);
            if d < best.1 {
                best = (c, d);
            }
        }
        best
    }
}

/// A clustering of every dataset point to one center, with its cost.
///
/// Fair methods only ever return balanced instances; [`verify_balance`]
/// produces the certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairClustering {
    pub centers: CenterSet,
    pub assignment: Vec<usize>,
    pub cost: f64,
    pub norm: NormSpec,
}

impl FairClustering {
    /// Builds a clustering and computes its cost.
    pub fn evaluate(
        dataset: &ColoredDataset,
        centers: CenterSet,
        assignment: Vec<usize>,
        norm: NormSpec,
    ) -> Result<Self> {
        centers.validate_for(dataset)?;
        if assignment.len() != dataset.len() {
            return Err(FairError::InvalidArgument(format!(
                "assignment covers {} of {} points",
                assignment.len(),
                dataset.len()
            )));
        }
        if let Some(&bad) = assignment.iter().find(|&&c| c >= centers.len()) {
            return Err(FairError::InvalidArgument(format!("center index {bad} out of range")));
        }
        let cost = cost_of(dataset, &centers, &assignment, norm);
        Ok(FairClustering {
            centers,
            assignment,
            cost,
            norm,
        })
    }

    /// Per-point distance to the assigned center.
    pub fn distances(&self, dataset: &ColoredDataset) -> Vec<f64> {
        self.assignment
            .iter()
            .enumerate()
            .map(|(i, &c)| self.centers.distance(dataset, i, c, self.norm.q))
            .collect()
    }

    /// Largest point-to-center distance.
    pub fn radius(&self, dataset: &ColoredDataset) -> f64 {
        self.distances(dataset).into_iter().fold(0.0, f64::max)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centers.len()];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Same assignment and centers, re-costed under another norm.
    pub fn with_norm(&self, dataset: &ColoredDataset, norm: NormSpec) -> Self {
        FairClustering {
            centers: self.centers.clone(),
            assignment: self.assignment.clone(),
            cost: cost_of(dataset, &self.centers, &self.assignment, norm),
            norm,
        }
    }
}

fn cost_of(dataset: &ColoredDataset, centers: &CenterSet, assignment: &[usize], norm: NormSpec) -> f64 {
    norm.p.aggregate(
        assignment
            .iter()
            .enumerate()
            .map(|(i, &c)| centers.distance(dataset, i, c, norm.q)),
    )
}

/// Recomputes `‖A − C‖_{p,q}` for the clustering.
pub fn clustering_cost(dataset: &ColoredDataset, clustering: &FairClustering) -> f64 {
    cost_of(dataset, &clustering.centers, &clustering.assignment, clustering.norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub balanced: bool,
    /// `histograms[c][color]` = number of points of `color` in cluster `c`.
    pub histograms: Vec<Vec<usize>>,
}

pub fn verify_balance(dataset: &ColoredDataset, clustering: &FairClustering) -> BalanceReport {
    balance_of(dataset, &clustering.assignment, clustering.centers.len())
}

/// Balance report for a raw label vector with `clusters` labels.
pub fn balance_of(dataset: &ColoredDataset, labels: &[usize], clusters: usize) -> BalanceReport {
    let ell = dataset.num_colors();
    let mut histograms = vec![vec![0usize; ell]; clusters];
    for (i, &c) in labels.iter().enumerate() {
        histograms[c][dataset.color(i)] += 1;
    }
    let balanced = labels.len() == dataset.len() && histograms.iter().all(|h| h.iter().all(|&x| x == h[0]));
    BalanceReport { balanced, histograms }
}
