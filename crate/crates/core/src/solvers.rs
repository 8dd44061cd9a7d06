//! Unconstrained `(k,p,q)`-clustering solvers, used as the black box of the
//! fair reductions.
//!
//! Every solver clusters a subset `members` of a dataset and is a
//! deterministic function of its inputs and seed. Medoid solvers return
//! dataset indices; Lloyd returns coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::CenterSet;
use crate::dataset::{ColoredDataset, VectorPoint};
use crate::error::{FairError, Result};
use crate::norm::{Exponent, NormSpec};
use crate::oracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverAlgorithm {
    /// Single-swap local search over medoids (5-approximation for k-median).
    LocalSearchKMedian,
    /// k-median++ seeding followed by k-medoids refinement.
    KppSeedMedoids,
    /// Gonzalez traversal (2-approximation for k-center).
    FarthestFirst,
    LloydKMeans,
    /// Exhaustive search over center subsets; tiny inputs only (α = 1).
    Exhaustive,
}

/// Where medoid solvers may place centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidatePool {
    /// Only the points being clustered.
    #[default]
    Members,
    /// Any point of the dataset.
    AllPoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub algorithm: SolverAlgorithm,
    pub seed: u64,
    /// Iteration cap for k-medoids and Lloyd. Local search uses `100·k`.
    pub max_iterations: usize,
    /// Minimum relative improvement for a step to count.
    pub improvement_threshold: f64,
    #[serde(default)]
    pub candidates: CandidatePool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algorithm: SolverAlgorithm::LocalSearchKMedian,
            seed: 0,
            max_iterations: 100,
            improvement_threshold: 1e-4,
            candidates: CandidatePool::Members,
        }
    }
}

impl SolverConfig {
    pub fn new(algorithm: SolverAlgorithm, seed: u64) -> Self {
        SolverConfig {
            algorithm,
            seed,
            ..Default::default()
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SolverConfig { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(FairError::InvalidArgument("max_iterations must be >= 1".into()));
        }
        if !(self.improvement_threshold > 0.0 && self.improvement_threshold < 1.0) {
            return Err(FairError::InvalidArgument(
                "improvement_threshold must lie in (0,1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub centers: CenterSet,
    /// Cost of the members under the solver's norm (rooted).
    pub cost: f64,
    /// `labels[m]` is the center of `members[m]`.
    pub labels: Vec<usize>,
    /// Objective after every iteration (powered for medoid solvers, sum of
    /// squares for Lloyd).
    pub trace: Vec<f64>,
}

/// Dispatches on `config.algorithm`.
pub fn solve_unconstrained(
    dataset: &ColoredDataset,
    members: &[usize],
    k: usize,
    norm: NormSpec,
    config: &SolverConfig,
) -> Result<Solution> {
    config.validate()?;
    let all: Vec<usize>;
    let candidates = match config.candidates {
        CandidatePool::Members => members,
        CandidatePool::AllPoints => {
            all = (0..dataset.len()).collect();
            &all
        }
    };
    match config.algorithm {
        SolverAlgorithm::LocalSearchKMedian => local_search_kmedian(dataset, members, candidates, k, norm, config),
        SolverAlgorithm::KppSeedMedoids => {
            let seeds = kpp_seed(dataset, members, k, norm, config.seed)?;
            kmedoids_refine(dataset, members, &seeds, norm, config)
        }
        SolverAlgorithm::FarthestFirst => {
            let t = farthest_first(dataset, members, k, norm.q, config.seed)?;
            let centers = CenterSet::medoids(t.order, k)?;
            Ok(solution_for(dataset, members, centers, norm, Vec::new()))
        }
        SolverAlgorithm::LloydKMeans => {
            let s = lloyd_kmeans(dataset, members, k, config)?;
            Ok(solution_for(dataset, members, s.centers, norm, s.trace))
        }
        SolverAlgorithm::Exhaustive => {
            let (centers, _) = oracle::brute_unconstrained_opt(dataset, members, candidates, k, norm)?;
            Ok(solution_for(dataset, members, centers, norm, Vec::new()))
        }
    }
}

/// Nearest-center labels of `members` and their rooted cost.
pub fn assign_nearest(
    dataset: &ColoredDataset,
    members: &[usize],
    centers: &CenterSet,
    norm: NormSpec,
) -> (Vec<usize>, f64) {
    let mut acc = 0.0;
    let labels = members
        .iter()
        .map(|&i| {
            let (c, d) = centers.nearest(dataset, i, norm.q);
            acc = norm.p.combine(acc, norm.p.power(d));
            c
        })
        .collect();
    (labels, norm.p.root(acc))
}

fn solution_for(
    dataset: &ColoredDataset,
    members: &[usize],
    centers: CenterSet,
    norm: NormSpec,
    trace: Vec<f64>,
) -> Solution {
    let (labels, cost) = assign_nearest(dataset, members, &centers, norm);
    Solution {
        centers,
        cost,
        labels,
        trace,
    }
}

fn check_members(members: &[usize], k: usize) -> Result<()> {
    if members.is_empty() {
        return Err(FairError::InvalidArgument("no points to cluster".into()));
    }
    if k == 0 {
        return Err(FairError::InvalidArgument("k must be >= 1".into()));
    }
    Ok(())
}

/// Sampling weight exponent: `d^p` for finite `p` (1 for k-median, 2 for
/// k-means), plain distance for `p = ∞`.
fn seed_weight(norm: NormSpec) -> Exponent {
    match norm.p {
        Exponent::Finite(_) => norm.p,
        Exponent::Infinite => Exponent::ONE,
    }
}

/// k-median++ / k-means++ seeding over `members`.
///
/// The first center is uniform; each next one is drawn with probability
/// proportional to `d(x, chosen)^w`. Stops early once every remaining point
/// coincides with a chosen center, so the result may hold fewer than `k`
/// centers.
pub fn kpp_seed(dataset: &ColoredDataset, members: &[usize], k: usize, norm: NormSpec, seed: u64) -> Result<CenterSet> {
    check_members(members, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = kpp_indices(dataset, members, k, norm, &mut rng);
    CenterSet::medoids(chosen, k)
}

pub(crate) fn kpp_indices<R: Rng>(
    dataset: &ColoredDataset,
    pool: &[usize],
    k: usize,
    norm: NormSpec,
    rng: &mut R,
) -> Vec<usize> {
    let w = seed_weight(norm);
    let first = pool[rng.random_range(0..pool.len())];
    let mut chosen = vec![first];
    let mut nearest: Vec<f64> = pool.iter().map(|&i| dataset.distance(i, first, norm.q)).collect();
    while chosen.len() < k {
        let weights: Vec<f64> = nearest.iter().map(|&d| w.power(d)).collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = weights.iter().rposition(|&x| x > 0.0).unwrap();
        for (m, &x) in weights.iter().enumerate() {
            if x > 0.0 && target < x {
                pick = m;
                break;
            }
            target -= x;
        }
        let c = pool[pick];
        chosen.push(c);
        for (m, &i) in pool.iter().enumerate() {
            nearest[m] = nearest[m].min(dataset.distance(i, c, norm.q));
        }
    }
    chosen
}

/// Nearest, its slot and the second-nearest powered distance.
#[derive(Clone, Copy)]
struct Nearest {
    d1: f64,
    slot: usize,
    d2: f64,
}

/// Powered distance table `members × candidates`.
struct Table {
    cols: usize,
    d: Vec<f64>,
}

impl Table {
    fn new(dataset: &ColoredDataset, members: &[usize], candidates: &[usize], norm: NormSpec) -> Self {
        let d = members
            .iter()
            .flat_map(|&i| {
                candidates
                    .iter()
                    .map(move |&c| norm.p.power(dataset.distance(i, c, norm.q)))
            })
            .collect();
        Table {
            cols: candidates.len(),
            d,
        }
    }

    #[inline]
    fn get(&self, m: usize, c: usize) -> f64 {
        self.d[m * self.cols + c]
    }

    fn nearest(&self, rows: usize, centers: &[usize]) -> Vec<Nearest> {
        (0..rows)
            .map(|m| {
                let mut n = Nearest {
                    d1: f64::INFINITY,
                    slot: 0,
                    d2: f64::INFINITY,
                };
                for (slot, &c) in centers.iter().enumerate() {
                    let d = self.get(m, c);
                    if d < n.d1 {
                        n.d2 = n.d1;
                        n.d1 = d;
                        n.slot = slot;
                    } else if d < n.d2 {
                        n.d2 = d;
                    }
                }
                n
            })
            .collect()
    }
}

/// Single-swap local search on powered distances.
///
/// Starts from k-median++ seeds drawn from the candidate pool and applies
/// the best improving swap while it improves the objective by at least
/// `improvement_threshold` (relative), up to `100·k` swaps. All `k` removal
/// deltas for one incoming candidate are evaluated in a single pass using
/// nearest and second-nearest distances.
pub fn local_search_kmedian(
    dataset: &ColoredDataset,
    members: &[usize],
    candidates: &[usize],
    k: usize,
    norm: NormSpec,
    config: &SolverConfig,
) -> Result<Solution> {
    config.validate()?;
    check_members(members, k)?;
    let cand = dataset.distinct(candidates);
    let requested = k;
    let k = k.min(cand.len());
    let table = Table::new(dataset, members, &cand, norm);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds = kpp_indices(dataset, &cand, k, norm, &mut rng);
    let position: std::collections::HashMap<usize, usize> = cand.iter().enumerate().map(|(pos, &i)| (i, pos)).collect();
    let mut centers: Vec<usize> = seeds.iter().map(|i| position[i]).collect();
    let mut is_center = vec![false; cand.len()];
    for &c in &centers {
        is_center[c] = true;
    }
    // top up with the farthest candidates if seeding stopped early
    while centers.len() < k {
        let near = table.nearest(members.len(), &centers);
        let pick = (0..cand.len())
            .filter(|&c| !is_center[c])
            .max_by(|&a, &b| {
                let da: f64 = (0..members.len()).map(|m| table.get(m, a).min(near[m].d1)).sum();
                let db: f64 = (0..members.len()).map(|m| table.get(m, b).min(near[m].d1)).sum();
                db.total_cmp(&da).then(b.cmp(&a))
            })
            .expect("k <= distinct candidates");
        centers.push(pick);
        is_center[pick] = true;
    }

    if norm.p.is_infinite() {
        return Ok(bottleneck_swaps(
            &table,
            members.len(),
            &cand,
            centers,
            requested,
            config,
        ));
    }
    let mut near = table.nearest(members.len(), &centers);
    let mut cost: f64 = near.iter().map(|n| n.d1).sum();
    let mut trace = vec![cost];
    let mut per_slot = vec![0.0; k];
    for _ in 0..100 * k {
        if cost <= 0.0 {
            break;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for x in (0..cand.len()).filter(|&x| !is_center[x]) {
            let mut shared = 0.0;
            per_slot.fill(0.0);
            for (m, n) in near.iter().enumerate() {
                let dx = table.get(m, x);
                let keep = dx.min(n.d1);
                shared += keep - n.d1;
                per_slot[n.slot] += dx.min(n.d2) - keep;
            }
            for (slot, extra) in per_slot.iter().enumerate() {
                let delta = shared + extra;
                if best.is_none_or(|(b, _, _)| delta < b) {
                    best = Some((delta, x, slot));
                }
            }
        }
        match best {
            Some((delta, x, slot)) if -delta >= config.improvement_threshold * cost => {
                is_center[centers[slot]] = false;
                centers[slot] = x;
                is_center[x] = true;
                near = table.nearest(members.len(), &centers);
                cost = near.iter().map(|n| n.d1).sum();
                trace.push(cost);
            }
            _ => break,
        }
    }
    let centers = CenterSet::medoids(centers.iter().map(|&c| cand[c]).collect(), requested)?;
    let labels = near.iter().map(|n| n.slot).collect();
    Ok(Solution {
        centers,
        cost: norm.p.root(cost),
        labels,
        trace,
    })
}

/// Swap search for `p = ∞`: the objective is the largest nearest distance,
/// so every swap is evaluated directly.
fn bottleneck_swaps(
    table: &Table,
    rows: usize,
    cand: &[usize],
    mut centers: Vec<usize>,
    k: usize,
    config: &SolverConfig,
) -> Solution {
    let radius = |cs: &[usize]| table.nearest(rows, cs).iter().fold(0.0, |r: f64, n| r.max(n.d1));
    let mut cost = radius(&centers);
    let mut trace = vec![cost];
    let mut is_center = vec![false; cand.len()];
    centers.iter().for_each(|&c| is_center[c] = true);
    for _ in 0..100 * centers.len() {
        if cost <= 0.0 {
            break;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for x in (0..cand.len()).filter(|&x| !is_center[x]) {
            for slot in 0..centers.len() {
                let mut trial = centers.clone();
                trial[slot] = x;
                let r = radius(&trial);
                if best.is_none_or(|(b, _, _)| r < b) {
                    best = Some((r, x, slot));
                }
            }
        }
        match best {
            Some((r, x, slot)) if cost - r >= config.improvement_threshold * cost => {
                is_center[centers[slot]] = false;
                centers[slot] = x;
                is_center[x] = true;
                cost = r;
                trace.push(cost);
            }
            _ => break,
        }
    }
    let near = table.nearest(rows, &centers);
    Solution {
        centers: CenterSet::medoids(centers.iter().map(|&c| cand[c]).collect(), k).expect("distinct candidates"),
        cost,
        labels: near.iter().map(|n| n.slot).collect(),
        trace,
    }
}

/// True if no single swap of a center for a candidate improves the powered
/// objective by a relative `threshold` or more.
pub fn is_swap_stable(
    dataset: &ColoredDataset,
    members: &[usize],
    candidates: &[usize],
    centers: &CenterSet,
    norm: NormSpec,
    threshold: f64,
) -> bool {
    let current = centers.medoid_indices().expect("medoid centers").to_vec();
    let powered = |cs: &[usize]| -> f64 {
        members
            .iter()
            .map(|&i| {
                cs.iter()
                    .map(|&c| norm.p.power(dataset.distance(i, c, norm.q)))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum()
    };
    let base = powered(&current);
    for &x in &dataset.distinct(candidates) {
        if current.contains(&x) {
            continue;
        }
        for slot in 0..current.len() {
            let mut trial = current.clone();
            trial[slot] = x;
            if base - powered(&trial) >= threshold * base && base > 0.0 {
                return false;
            }
        }
    }
    true
}

/// Alternating k-medoids: nearest assignment, then each cluster's medoid
/// (chosen among its members) is recomputed. An empty cluster is re-seeded
/// at the point currently farthest from its center.
pub fn kmedoids_refine(
    dataset: &ColoredDataset,
    members: &[usize],
    initial: &CenterSet,
    norm: NormSpec,
    config: &SolverConfig,
) -> Result<Solution> {
    config.validate()?;
    initial.validate_for(dataset)?;
    let mut centers = initial
        .medoid_indices()
        .ok_or_else(|| FairError::InvalidArgument("k-medoids needs medoid centers".into()))?
        .to_vec();
    let k = initial.k();
    let powered = |i: usize, c: usize| norm.p.power(dataset.distance(i, c, norm.q));
    let assign = |centers: &[usize]| -> (Vec<usize>, Vec<f64>, f64) {
        let mut labels = Vec::with_capacity(members.len());
        let mut dist = Vec::with_capacity(members.len());
        let mut acc = 0.0;
        for &i in members {
            let (slot, d) = centers
                .iter()
                .enumerate()
                .map(|(s, &c)| (s, powered(i, c)))
                .fold((0, f64::INFINITY), |best, x| if x.1 < best.1 { x } else { best });
            labels.push(slot);
            dist.push(d);
            acc = norm.p.combine(acc, d);
        }
        (labels, dist, acc)
    };

    let (mut labels, mut dist, mut cost) = assign(&centers);
    let mut trace = vec![cost];
    for _ in 0..config.max_iterations {
        let mut next = centers.clone();
        for slot in 0..centers.len() {
            let cluster: Vec<usize> = (0..members.len()).filter(|&m| labels[m] == slot).collect();
            if cluster.is_empty() {
                let far = (0..members.len())
                    .filter(|&m| !next.contains(&members[m]) && dist[m] > 0.0)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
                if let Some(m) = far {
                    next[slot] = members[m];
                }
                continue;
            }
            let spread = |c: usize| {
                cluster
                    .iter()
                    .fold(0.0, |acc, &m| norm.p.combine(acc, powered(members[m], c)))
            };
            let mut best = (centers[slot], spread(centers[slot]));
            for &m in &cluster {
                let s = spread(members[m]);
                if s < best.1 {
                    best = (members[m], s);
                }
            }
            next[slot] = best.0;
        }
        let (l, d, c) = assign(&next);
        if c > cost {
            break;
        }
        let improvement = cost - c;
        centers = next;
        labels = l;
        dist = d;
        cost = c;
        trace.push(cost);
        if improvement < config.improvement_threshold * cost || cost == 0.0 {
            break;
        }
    }
    Ok(Solution {
        centers: CenterSet::medoids(centers, k)?,
        cost: norm.p.root(cost),
        labels,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Traversal {
    /// Dataset indices in visit order.
    pub order: Vec<usize>,
    /// `radii[i-1] = d(c_i, {c_0..c_{i-1}})` for each added center `c_i`.
    pub radii: Vec<f64>,
}

/// Gonzalez farthest-first traversal with a uniformly seeded first center.
pub fn farthest_first(
    dataset: &ColoredDataset,
    members: &[usize],
    k: usize,
    q: Exponent,
    seed: u64,
) -> Result<Traversal> {
    check_members(members, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = members[rng.random_range(0..members.len())];
    Ok(farthest_first_from(dataset, members, first, k, q))
}

/// Traversal from a fixed first center; ties go to the earliest member.
/// Stops early when every member coincides with a chosen center.
pub fn farthest_first_from(
    dataset: &ColoredDataset,
    members: &[usize],
    first: usize,
    k: usize,
    q: Exponent,
) -> Traversal {
    let mut order = vec![first];
    let mut radii = Vec::new();
    let mut nearest: Vec<f64> = members.iter().map(|&i| dataset.distance(i, first, q)).collect();
    while order.len() < k {
        let (pos, far) = nearest
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (m, &d)| if d > best.1 { (m, d) } else { best });
        if far <= 0.0 {
            break;
        }
        let c = members[pos];
        order.push(c);
        radii.push(far);
        for (m, &i) in members.iter().enumerate() {
            nearest[m] = nearest[m].min(dataset.distance(i, c, q));
        }
    }
    Traversal { order, radii }
}

/// Lloyd's algorithm on squared Euclidean distance, seeded by k-means++.
/// `Solution::cost` is the sum of squared distances.
pub fn lloyd_kmeans(dataset: &ColoredDataset, members: &[usize], k: usize, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    check_members(members, k)?;
    let points = dataset.points().ok_or(FairError::CoordinatesRequired)?;
    let dim = points[0].dim();
    let sq = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum() };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds = kpp_indices(dataset, members, k, NormSpec::k_means(), &mut rng);
    let mut centroids: Vec<Vec<f64>> = seeds.iter().map(|&i| points[i].coords().to_vec()).collect();

    let assign = |centroids: &[Vec<f64>]| -> (Vec<usize>, Vec<f64>, f64) {
        let mut labels = Vec::with_capacity(members.len());
        let mut dist = Vec::with_capacity(members.len());
        for &i in members {
            let (c, d) = centroids
                .iter()
                .enumerate()
                .map(|(c, x)| (c, sq(points[i].coords(), x)))
                .fold((0, f64::INFINITY), |best, x| if x.1 < best.1 { x } else { best });
            labels.push(c);
            dist.push(d);
        }
        let sse = dist.iter().sum();
        (labels, dist, sse)
    };

    let (mut labels, mut dist, mut sse) = assign(&centroids);
    let mut trace = vec![sse];
    for _ in 0..config.max_iterations {
        let mut sums = vec![vec![0.0; dim]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (m, &i) in members.iter().enumerate() {
            counts[labels[m]] += 1;
            for (s, x) in sums[labels[m]].iter_mut().zip(points[i].coords()) {
                *s += x;
            }
        }
        let mut next = centroids.clone();
        let mut taken: Vec<usize> = Vec::new();
        for c in 0..centroids.len() {
            if counts[c] > 0 {
                next[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                let far = (0..members.len())
                    .filter(|m| !taken.contains(m))
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
                if let Some(m) = far {
                    taken.push(m);
                    next[c] = points[members[m]].coords().to_vec();
                }
            }
        }
        let (l, d, s) = assign(&next);
        if s > sse {
            break;
        }
        let improvement = sse - s;
        centroids = next;
        labels = l;
        dist = d;
        sse = s;
        trace.push(sse);
        if improvement < config.improvement_threshold * sse || sse == 0.0 {
            break;
        }
    }

    // merge coincident centroids so the center set stays distinct
    let mut unique: Vec<Vec<f64>> = Vec::new();
    let mut remap = vec![0; centroids.len()];
    for (c, x) in centroids.iter().enumerate() {
        remap[c] = match unique.iter().position(|u| u == x) {
            Some(u) => u,
            None => {
                unique.push(x.clone());
                unique.len() - 1
            }
        };
    }
    let labels = labels.into_iter().map(|l| remap[l]).collect();
    let centers = CenterSet::coordinates(unique.into_iter().map(VectorPoint::new).collect::<Result<_>>()?, k)?;
    Ok(Solution {
        centers,
        cost: sse,
        labels,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::Centers;

    fn line(xs: &[f64]) -> ColoredDataset {
        ColoredDataset::uncolored(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    fn all(ds: &ColoredDataset) -> Vec<usize> {
        (0..ds.len()).collect()
    }

    fn l1() -> NormSpec {
        NormSpec::new(Exponent::ONE, Exponent::ONE)
    }

    #[test]
    fn local_search_small_line() {
        let ds = line(&[0., 1., 10., 11.]);
        let m = all(&ds);
        let s = local_search_kmedian(&ds, &m, &m, 2, l1(), &SolverConfig::default()).unwrap();
        assert_eq!(s.cost, 2.0);
        let c = s.centers.medoid_indices().unwrap();
        assert!(c.iter().any(|&i| i < 2) && c.iter().any(|&i| i >= 2));
    }

    #[test]
    fn local_search_k_equals_points_is_free() {
        let ds = line(&[3., 1., 4., 1.5, 9.]);
        let m = all(&ds);
        let s = local_search_kmedian(&ds, &m, &m, 5, l1(), &SolverConfig::default()).unwrap();
        assert_eq!(s.cost, 0.0);
    }

    #[test]
    fn local_search_uses_every_distinct_point_when_k_is_large() {
        let ds = line(&[1., 1., 2.]);
        let m = all(&ds);
        let s = local_search_kmedian(&ds, &m, &m, 3, l1(), &SolverConfig::default()).unwrap();
        assert_eq!((s.centers.len(), s.centers.k(), s.cost), (2, 3, 0.0));
    }

    #[test]
    fn local_search_bottleneck() {
        let ds = line(&[0., 1., 2., 10., 11., 12.]);
        let m = all(&ds);
        let s = local_search_kmedian(
            &ds,
            &m,
            &m,
            2,
            NormSpec::new(Exponent::Infinite, Exponent::ONE),
            &SolverConfig::default(),
        )
        .unwrap();
        // single swaps can stall on a plateau of the max objective
        assert!(s.cost == 1.0 || s.cost == 2.0);
        assert!(s.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn kpp_single_center_and_separated_groups() {
        let ds = line(&[5., 5., 5., 20., 20.]);
        let m = all(&ds);
        for seed in 0..50 {
            let c = kpp_seed(&ds, &m, 1, l1(), seed).unwrap();
            assert_eq!(c.len(), 1);
            let c = kpp_seed(&ds, &m, 2, l1(), seed).unwrap();
            let idx = c.medoid_indices().unwrap();
            assert_eq!(idx.len(), 2);
            assert!(idx.iter().any(|&i| i < 3) && idx.iter().any(|&i| i >= 3));
        }
        // only two distinct locations: a third center is never drawn
        assert_eq!(kpp_seed(&ds, &m, 3, l1(), 1).unwrap().len(), 2);
    }

    #[test]
    fn kmedoids_examples() {
        let ds = line(&[0., 1., 10., 11.]);
        let m = all(&ds);
        let start = CenterSet::medoids(vec![1, 2], 2).unwrap();
        let s = kmedoids_refine(&ds, &m, &start, l1(), &SolverConfig::default()).unwrap();
        assert_eq!(s.cost, 2.0);
        // fixed point
        let s2 = kmedoids_refine(&ds, &m, &s.centers, l1(), &SolverConfig::default()).unwrap();
        assert_eq!(s2.centers, s.centers);
        // bad start converges too
        let start = CenterSet::medoids(vec![0, 1], 2).unwrap();
        let s = kmedoids_refine(&ds, &m, &start, l1(), &SolverConfig::default()).unwrap();
        assert_eq!(s.cost, 2.0);
    }

    #[test]
    fn kmedoids_reseeds_empty_cluster() {
        // centers 0 and 1 coincide in location with an empty second cluster
        let ds = line(&[0., 0., 10., 12.]);
        let m = all(&ds);
        let start = CenterSet::medoids(vec![0, 1], 2).unwrap();
        let s = kmedoids_refine(&ds, &m, &start, l1(), &SolverConfig::default()).unwrap();
        assert_eq!(s.cost, 2.0);
        assert!(s.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn farthest_first_examples() {
        let ds = line(&[0., 1., 100.]);
        let m = all(&ds);
        let t = farthest_first_from(&ds, &m, 0, 1, Exponent::ONE);
        assert_eq!(t.order, vec![0]);
        let t = farthest_first_from(&ds, &m, 0, 2, Exponent::ONE);
        assert_eq!(t.order, vec![0, 2]);
        assert_eq!(t.radii, vec![100.0]);
        let seeded = farthest_first(&ds, &m, 1, Exponent::ONE, 9).unwrap();
        assert_eq!(seeded.order.len(), 1);
    }

    #[test]
    fn lloyd_examples() {
        let ds = ColoredDataset::uncolored(vec![vec![2., 2.]; 4]).unwrap();
        let s = lloyd_kmeans(&ds, &all(&ds), 1, &SolverConfig::default()).unwrap();
        assert_eq!(s.cost, 0.0);

        let ds = ColoredDataset::uncolored(vec![vec![0., 0.], vec![0., 2.], vec![50., 0.], vec![50., 2.]]).unwrap();
        let s = lloyd_kmeans(&ds, &all(&ds), 2, &SolverConfig::default()).unwrap();
        let Centers::Coordinates(cs) = s.centers.centers() else {
            panic!()
        };
        let mut got: Vec<Vec<f64>> = cs.iter().map(|c| c.coords().to_vec()).collect();
        got.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(got, vec![vec![0., 1.], vec![50., 1.]]);
        assert_eq!(s.cost, 4.0);
    }

    #[test]
    fn dispatch_uses_norm_cost() {
        let ds = line(&[0., 1., 10., 11.]);
        let m = all(&ds);
        for algorithm in [
            SolverAlgorithm::LocalSearchKMedian,
            SolverAlgorithm::KppSeedMedoids,
            SolverAlgorithm::Exhaustive,
        ] {
            let s = solve_unconstrained(&ds, &m, 2, l1(), &SolverConfig::new(algorithm, 3)).unwrap();
            assert_eq!(s.cost, 2.0, "{algorithm:?}");
        }
        let bad = SolverConfig {
            improvement_threshold: 1.5,
            ..Default::default()
        };
        assert!(solve_unconstrained(&ds, &m, 2, l1(), &bad).is_err());
    }
}
