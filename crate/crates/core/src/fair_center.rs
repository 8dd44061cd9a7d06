//! Fair k-center: farthest-first centers over the pooled colors, then a
//! balanced assignment to them.

use serde::{Deserialize, Serialize};

use crate::assignment::bottleneck_fair_assign;
use crate::clustering::{CenterSet, FairClustering};
use crate::dataset::ColoredDataset;
use crate::error::{FairError, Result};
use crate::fair_reduce::{algorithm2, DEFAULT_DELTA};
use crate::matching::EmdMode;
use crate::norm::{Exponent, NormSpec};
use crate::solvers::farthest_first;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KCenterCenters {
    pub centers: CenterSet,
    /// Dataset indices in traversal order.
    pub order: Vec<usize>,
    /// Distance of each added center to the ones before it (non-increasing).
    pub radii: Vec<f64>,
}

/// Farthest-first traversal over all points, ignoring colors.
pub fn fair_kcenter_centers(dataset: &ColoredDataset, k: usize, q: Exponent, seed: u64) -> Result<KCenterCenters> {
    if k > dataset.len() {
        return Err(FairError::TooFewPoints {
            k,
            available: dataset.len(),
        });
    }
    let all: Vec<usize> = (0..dataset.len()).collect();
    let t = farthest_first(dataset, &all, k, q, seed)?;
    Ok(KCenterCenters {
        centers: CenterSet::medoids(t.order.clone(), k)?,
        order: t.order,
        radii: t.radii,
    })
}

/// Balanced assignment to `centers` under `(∞,q)`.
///
/// One color: nearest center. Two colors: optimal bottleneck assignment via
/// flow. More colors: fairlets from the sampled decomposition, each sent
/// whole to the center minimizing its largest point distance.
pub fn fair_kcenter_assign(
    dataset: &ColoredDataset,
    centers: &CenterSet,
    q: Exponent,
    seed: u64,
) -> Result<FairClustering> {
    dataset.ensure_balanced()?;
    centers.validate_for(dataset)?;
    let norm = NormSpec::new(Exponent::Infinite, q);
    match dataset.num_colors() {
        1 => {
            let assignment = (0..dataset.len()).map(|i| centers.nearest(dataset, i, q).0).collect();
            FairClustering::evaluate(dataset, centers.clone(), assignment, norm)
        }
        2 => bottleneck_fair_assign(dataset, centers, q),
        _ => {
            let fairlets = algorithm2(
                dataset,
                NormSpec::new(Exponent::ONE, q),
                DEFAULT_DELTA,
                EmdMode::Exact,
                seed,
            )?;
            let f = fairlets.clustering;
            let mut members = vec![Vec::new(); f.centers.len()];
            for (x, &s) in f.assignment.iter().enumerate() {
                members[s].push(x);
            }
            let mut assignment = vec![0; dataset.len()];
            for group in &members {
                let mut best = (0, f64::INFINITY);
                for c in 0..centers.len() {
                    let r = group
                        .iter()
                        .map(|&x| centers.distance(dataset, x, c, q))
                        .fold(0.0, f64::max);
                    if r < best.1 {
                        best = (c, r);
                    }
                }
                for &x in group {
                    assignment[x] = best.0;
                }
            }
            FairClustering::evaluate(dataset, centers.clone(), assignment, norm)
        }
    }
}

/// Centers and assignment in one call.
pub fn fair_kcenter(dataset: &ColoredDataset, k: usize, q: Exponent, seed: u64) -> Result<FairClustering> {
    let c = fair_kcenter_centers(dataset, k, q, seed)?;
    fair_kcenter_assign(dataset, &c.centers, q, seed)
}
