//! Min-cost transportation from unit-supply points to capacitated centers,
//! and the fair assignments built on it.
//!
//! The solver starts from the nearest-center assignment (optimal for its own
//! histogram) and runs successive shortest paths from over-full to
//! under-full centers. Paths live in the residual graph contracted onto the
//! centers: the arc `a -> b` costs `min_{x in a} cost(x,b) - cost(x,a)`.
//! Every augmentation moves one unit, so the final flow is integral.

use serde::{Deserialize, Serialize};

use crate::clustering::{balance_of, CenterSet, FairClustering};
use crate::dataset::ColoredDataset;
use crate::error::{FairError, Result};
use crate::matching::hopcroft_karp;
use crate::norm::{Exponent, NormSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportInstance {
    sources: usize,
    /// Per-center capacities; must sum to the number of sources.
    pub demands: Vec<usize>,
    /// Row-major `sources × centers`.
    costs: Vec<f64>,
}

impl TransportInstance {
    pub fn new(costs: Vec<Vec<f64>>, demands: Vec<usize>) -> Result<Self> {
        let k = demands.len();
        if k == 0 {
            return Err(FairError::Infeasible("no centers".into()));
        }
        let sources = costs.len();
        let mut flat = Vec::with_capacity(sources * k);
        for row in &costs {
            if row.len() != k {
                return Err(FairError::InvalidArgument(format!(
                    "cost row has {} entries for {k} centers",
                    row.len()
                )));
            }
            if row.iter().any(|c| !c.is_finite()) {
                return Err(FairError::InvalidArgument("transport costs must be finite".into()));
            }
            flat.extend_from_slice(row);
        }
        let total: usize = demands.iter().sum();
        if total != sources {
            return Err(FairError::Infeasible(format!("supply {sources} != demand {total}")));
        }
        Ok(TransportInstance {
            sources,
            demands,
            costs: flat,
        })
    }

    pub fn sources(&self) -> usize {
        self.sources
    }

    pub fn centers(&self) -> usize {
        self.demands.len()
    }

    #[inline]
    pub fn cost(&self, source: usize, center: usize) -> f64 {
        self.costs[source * self.demands.len() + center]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportSolution {
    pub assignment: Vec<usize>,
    pub cost: f64,
}

pub fn min_cost_transport(instance: &TransportInstance) -> Result<TransportSolution> {
    let k = instance.centers();
    let n = instance.sources();
    let mut assignment: Vec<usize> = (0..n)
        .map(|s| {
            (0..k).fold(0, |best, c| {
                if instance.cost(s, c) < instance.cost(s, best) {
                    c
                } else {
                    best
                }
            })
        })
        .collect();
    let mut load = vec![0usize; k];
    for &c in &assignment {
        load[c] += 1;
    }

    // Arc costs are differences, so rounding can fake tiny negative cycles;
    // relaxations must beat the current distance by more than this.
    let scale = instance.costs.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let eps = 1e-12 * scale;
    let mut arc_cost = vec![f64::INFINITY; k * k];
    let mut arc_point = vec![usize::MAX; k * k];
    let mut dist = vec![f64::INFINITY; k];
    let mut pred = vec![usize::MAX; k];
    loop {
        let excess: Vec<usize> = (0..k).filter(|&c| load[c] > instance.demands[c]).collect();
        if excess.is_empty() {
            break;
        }
        arc_cost.fill(f64::INFINITY);
        arc_point.fill(usize::MAX);
        for (s, &a) in assignment.iter().enumerate() {
            let here = instance.cost(s, a);
            for b in 0..k {
                if b == a {
                    continue;
                }
                let delta = instance.cost(s, b) - here;
                if delta < arc_cost[a * k + b] {
                    arc_cost[a * k + b] = delta;
                    arc_point[a * k + b] = s;
                }
            }
        }
        // Bellman-Ford from all over-full centers; the residual graph has no
        // negative cycles because the current flow is optimal for its loads.
        dist.fill(f64::INFINITY);
        pred.fill(usize::MAX);
        for &c in &excess {
            dist[c] = 0.0;
        }
        for _ in 0..k {
            let mut changed = false;
            for a in 0..k {
                if !dist[a].is_finite() {
                    continue;
                }
                for b in 0..k {
                    let w = arc_cost[a * k + b];
                    if w.is_finite() && dist[a] + w < dist[b] - eps {
                        dist[b] = dist[a] + w;
                        pred[b] = a;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let target = (0..k)
            .filter(|&c| load[c] < instance.demands[c] && dist[c].is_finite())
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)))
            .ok_or_else(|| FairError::Infeasible("no augmenting path".into()))?;
        let mut moves = Vec::new();
        let mut b = target;
        while pred[b] != usize::MAX {
            if moves.len() == k {
                return Err(FairError::Infeasible("cycle in augmenting path".into()));
            }
            let a = pred[b];
            moves.push((arc_point[a * k + b], b));
            b = a;
        }
        for (s, to) in moves {
            assignment[s] = to;
        }
        load[b] -= 1;
        load[target] += 1;
    }
    let cost = assignment.iter().enumerate().map(|(s, &c)| instance.cost(s, c)).sum();
    Ok(TransportSolution { assignment, cost })
}

fn check_sizes(dataset: &ColoredDataset, centers: &CenterSet, sizes: &[usize]) -> Result<usize> {
    let n = dataset.ensure_balanced()?;
    centers.validate_for(dataset)?;
    if sizes.len() != centers.len() {
        return Err(FairError::InvalidArgument(format!(
            "{} sizes for {} centers",
            sizes.len(),
            centers.len()
        )));
    }
    let total: usize = sizes.iter().sum();
    if total != n {
        return Err(FairError::Infeasible(format!(
            "sizes sum to {total}, each color has {n} points"
        )));
    }
    Ok(n)
}

/// Fair assignment with prescribed per-center, per-color counts. Each color
/// is an independent transportation problem on powered distances; for
/// `p = ∞` each color instead gets its optimal bottleneck assignment.
pub fn fair_assign_fixed_sizes(
    dataset: &ColoredDataset,
    centers: &CenterSet,
    sizes: &[usize],
    norm: NormSpec,
) -> Result<FairClustering> {
    check_sizes(dataset, centers, sizes)?;
    let mut assignment = vec![0usize; dataset.len()];
    for color in 0..dataset.num_colors() {
        let class = dataset.class(color);
        let labels = match norm.p {
            Exponent::Finite(_) => {
                let costs = class
                    .iter()
                    .map(|&i| {
                        (0..centers.len())
                            .map(|c| norm.p.power(centers.distance(dataset, i, c, norm.q)))
                            .collect()
                    })
                    .collect();
                min_cost_transport(&TransportInstance::new(costs, sizes.to_vec())?)?.assignment
            }
            Exponent::Infinite => bottleneck_with_sizes(dataset, class, centers, sizes, norm.q)?,
        };
        for (&i, c) in class.iter().zip(labels) {
            assignment[i] = c;
        }
    }
    FairClustering::evaluate(dataset, centers.clone(), assignment, norm)
}

/// Assignment of `class` with exact center counts minimizing the largest
/// point-to-center distance.
fn bottleneck_with_sizes(
    dataset: &ColoredDataset,
    class: &[usize],
    centers: &CenterSet,
    sizes: &[usize],
    q: Exponent,
) -> Result<Vec<usize>> {
    let dist: Vec<Vec<f64>> = class
        .iter()
        .map(|&i| (0..centers.len()).map(|c| centers.distance(dataset, i, c, q)).collect())
        .collect();
    let mut radii: Vec<f64> = dist.iter().flatten().copied().collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let feasible = |r: f64| -> Result<Option<Vec<usize>>> {
        let costs = dist
            .iter()
            .map(|row| row.iter().map(|&d| if d <= r { 0.0 } else { 1.0 }).collect())
            .collect();
        let sol = min_cost_transport(&TransportInstance::new(costs, sizes.to_vec())?)?;
        Ok((sol.cost == 0.0).then_some(sol.assignment))
    };
    let (mut lo, mut hi) = (0, radii.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(radii[mid])?.is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(feasible(radii[lo])?.expect("every edge admitted at the largest radius"))
}

/// Upper bound on size vectors searched for `ℓ >= 3`.
pub const MAX_SIZE_VECTORS: usize = 200_000;

/// Balanced assignment to `centers` with every point within `radius`, or
/// `None` if none exists.
///
/// `ℓ = 1` is nearest-center; `ℓ = 2` is a max-flow through the centers
/// (red point -> center -> blue point, so each center receives equal counts);
/// `ℓ >= 3` searches shared size vectors with a threshold feasibility flow
/// per color, and errors beyond [`MAX_SIZE_VECTORS`].
pub fn kcenter_feasible_assign(
    dataset: &ColoredDataset,
    centers: &CenterSet,
    radius: f64,
    q: Exponent,
) -> Result<Option<FairClustering>> {
    let n = dataset.ensure_balanced()?;
    centers.validate_for(dataset)?;
    let k = centers.len();
    let norm = NormSpec::new(Exponent::Infinite, q);
    let within = |i: usize, c: usize| centers.distance(dataset, i, c, q) <= radius;
    let ell = dataset.num_colors();
    let labels = match ell {
        1 => {
            let mut labels = Vec::with_capacity(dataset.len());
            for i in 0..dataset.len() {
                let (c, d) = centers.nearest(dataset, i, q);
                if d > radius {
                    return Ok(None);
                }
                labels.push(c);
            }
            Some(labels)
        }
        2 => two_color_flow(dataset, k, &within),
        _ => {
            let count = compositions_count(n, k);
            if count > MAX_SIZE_VECTORS {
                return Err(FairError::TooLarge(format!(
                    "{count} size vectors for n = {n}, k = {k}"
                )));
            }
            let mut found = None;
            for sizes in compositions(n, k) {
                if let Some(l) = sized_threshold_assign(dataset, k, &sizes, &within) {
                    found = Some(l);
                    break;
                }
            }
            found
        }
    };
    labels
        .map(|l| {
            debug_assert!(balance_of(dataset, &l, k).balanced);
            FairClustering::evaluate(dataset, centers.clone(), l, norm)
        })
        .transpose()
}

/// Optimal balanced radius for the given centers: binary search over the
/// distinct point-to-center distances with [`kcenter_feasible_assign`].
pub fn bottleneck_fair_assign(dataset: &ColoredDataset, centers: &CenterSet, q: Exponent) -> Result<FairClustering> {
    dataset.ensure_balanced()?;
    centers.validate_for(dataset)?;
    let mut radii: Vec<f64> = (0..dataset.len())
        .flat_map(|i| (0..centers.len()).map(move |c| (i, c)))
        .map(|(i, c)| centers.distance(dataset, i, c, q))
        .collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let (mut lo, mut hi) = (0, radii.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if kcenter_feasible_assign(dataset, centers, radii[mid], q)?.is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    kcenter_feasible_assign(dataset, centers, radii[lo], q)?
        .ok_or_else(|| FairError::Infeasible("no balanced assignment at any radius".into()))
}

fn two_color_flow(dataset: &ColoredDataset, k: usize, within: &dyn Fn(usize, usize) -> bool) -> Option<Vec<usize>> {
    let red = dataset.class(0);
    let blue = dataset.class(1);
    // red s is adjacent to blue t iff some center reaches both; a perfect
    // matching then yields the center for each pair.
    let mut via = vec![vec![usize::MAX; blue.len()]; red.len()];
    let adjacency: Vec<Vec<usize>> = red
        .iter()
        .enumerate()
        .map(|(s, &r)| {
            let mut adj = Vec::new();
            for (t, &b) in blue.iter().enumerate() {
                if let Some(c) = (0..k).find(|&c| within(r, c) && within(b, c)) {
                    via[s][t] = c;
                    adj.push(t);
                }
            }
            adj
        })
        .collect();
    let matched = hopcroft_karp(red.len(), blue.len(), &adjacency);
    let mut labels = vec![0; dataset.len()];
    for (s, t) in matched.into_iter().enumerate() {
        let t = t?;
        let c = via[s][t];
        labels[red[s]] = c;
        labels[blue[t]] = c;
    }
    Some(labels)
}

fn sized_threshold_assign(
    dataset: &ColoredDataset,
    k: usize,
    sizes: &[usize],
    within: &dyn Fn(usize, usize) -> bool,
) -> Option<Vec<usize>> {
    let mut labels = vec![0; dataset.len()];
    for color in 0..dataset.num_colors() {
        let class = dataset.class(color);
        // expand each center into `sizes[c]` slots
        let slots: Vec<usize> = (0..k).flat_map(|c| std::iter::repeat_n(c, sizes[c])).collect();
        let adjacency: Vec<Vec<usize>> = class
            .iter()
            .map(|&i| (0..slots.len()).filter(|&s| within(i, slots[s])).collect())
            .collect();
        let matched = hopcroft_karp(class.len(), slots.len(), &adjacency);
        for (&i, slot) in class.iter().zip(matched) {
            labels[i] = slots[slot?];
        }
    }
    Some(labels)
}

pub(crate) fn compositions_count(n: usize, k: usize) -> usize {
    // C(n + k - 1, k - 1), saturating
    let mut acc: u128 = 1;
    for i in 1..k as u128 {
        acc = acc * (n as u128 + i) / i;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// All vectors of `k` nonnegative integers summing to `n`, in
/// lexicographic order.
pub(crate) fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(remaining: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for x in 0..=remaining {
            prefix.push(x);
            rec(remaining - x, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}
