//! Exhaustive solvers for tiny instances. They share no code path with the
//! algorithms they certify beyond cost evaluation.

use std::collections::HashMap;

use crate::assignment::{TransportInstance, TransportSolution};
use crate::clustering::{CenterSet, FairClustering};
use crate::dataset::{ColoredDataset, VectorPoint};
use crate::error::{FairError, Result};
use crate::matching::{CostMatrix, Matching};
use crate::norm::{Exponent, NormSpec};

pub const MAX_MATCHING_SIZE: usize = 8;
pub const MAX_POINTS: usize = 12;
pub const MAX_K: usize = 3;

/// Minimum over all `n!` permutations (Heap's algorithm).
pub fn brute_matching(cost: &CostMatrix, norm: NormSpec) -> Result<Matching> {
    let n = cost.len();
    if n > MAX_MATCHING_SIZE {
        return Err(FairError::TooLarge(format!("{n}! permutations")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = (cost.total(&perm, norm.p), perm.clone());
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let total = cost.total(&perm, norm.p);
            if total < best.0 {
                best = (total, perm.clone());
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(Matching::from_permutation(cost, best.1, norm))
}

/// Calls `f` on every `size`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, size: usize, mut f: impl FnMut(&[usize])) {
    if size > n {
        return;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        f(&idx);
        let mut i = size;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - size {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Best medoid center set for `members` drawn from `candidates`, with
/// nearest-center assignment. Returns the centers and rooted cost.
pub fn brute_unconstrained_opt(
    dataset: &ColoredDataset,
    members: &[usize],
    candidates: &[usize],
    k: usize,
    norm: NormSpec,
) -> Result<(CenterSet, f64)> {
    let cand = dataset.distinct(candidates);
    if k == 0 || members.is_empty() || cand.is_empty() {
        return Err(FairError::InvalidArgument("need k >= 1 and nonempty inputs".into()));
    }
    let size = k.min(cand.len());
    if members.len() > MAX_POINTS || cand.len() > 2 * MAX_POINTS || (size > MAX_K && size < cand.len()) {
        return Err(FairError::TooLarge(format!(
            "{} points, {} candidates, k = {k}",
            members.len(),
            cand.len()
        )));
    }
    let powered: Vec<Vec<f64>> = members
        .iter()
        .map(|&i| {
            cand.iter()
                .map(|&c| norm.p.power(dataset.distance(i, c, norm.q)))
                .collect()
        })
        .collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for_each_subset(cand.len(), size, |subset| {
        let total = powered.iter().fold(0.0, |acc, row| {
            let d = subset.iter().map(|&c| row[c]).fold(f64::INFINITY, f64::min);
            norm.p.combine(acc, d)
        });
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, subset.to_vec()));
        }
    });
    let (total, subset) = best.expect("at least one subset");
    let centers = CenterSet::medoids(subset.iter().map(|&c| cand[c]).collect(), k)?;
    Ok((centers, norm.p.root(total)))
}

/// For one color class and fixed centers: the cheapest powered assignment
/// for every achievable per-center histogram.
fn best_per_histogram(
    dataset: &ColoredDataset,
    class: &[usize],
    centers: &CenterSet,
    norm: NormSpec,
) -> HashMap<Vec<usize>, (f64, Vec<usize>)> {
    let k = centers.len();
    let dist: Vec<Vec<f64>> = class
        .iter()
        .map(|&i| {
            (0..k)
                .map(|c| norm.p.power(centers.distance(dataset, i, c, norm.q)))
                .collect()
        })
        .collect();
    let mut out: HashMap<Vec<usize>, (f64, Vec<usize>)> = HashMap::new();
    let mut labels = vec![0usize; class.len()];
    loop {
        let mut hist = vec![0usize; k];
        let mut total = 0.0;
        for (m, &c) in labels.iter().enumerate() {
            hist[c] += 1;
            total = norm.p.combine(total, dist[m][c]);
        }
        match out.get(&hist) {
            Some((b, _)) if *b <= total => {}
            _ => {
                out.insert(hist, (total, labels.clone()));
            }
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == labels.len() {
                return out;
            }
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

/// Optimal balanced assignment of the whole dataset to fixed centers.
pub fn brute_balanced_assignment(
    dataset: &ColoredDataset,
    centers: &CenterSet,
    norm: NormSpec,
) -> Result<FairClustering> {
    let n = dataset.ensure_balanced()?;
    centers.validate_for(dataset)?;
    let per_color = (centers.len() as f64).powi(n as i32);
    if per_color > 1e6 {
        return Err(FairError::TooLarge(format!("{} assignments per color", per_color)));
    }
    let (total, assignment) =
        best_balanced(dataset, centers, norm).ok_or_else(|| FairError::Infeasible("no balanced assignment".into()))?;
    let _ = total;
    FairClustering::evaluate(dataset, centers.clone(), assignment, norm)
}

fn best_balanced(dataset: &ColoredDataset, centers: &CenterSet, norm: NormSpec) -> Option<(f64, Vec<usize>)> {
    let tables: Vec<_> = (0..dataset.num_colors())
        .map(|c| best_per_histogram(dataset, dataset.class(c), centers, norm))
        .collect();
    let mut keys: Vec<&Vec<usize>> = tables[0].keys().collect();
    keys.sort();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for hist in keys {
        let mut total = 0.0;
        let mut feasible = true;
        for t in &tables {
            match t.get(hist) {
                Some((v, _)) => total = norm.p.combine(total, *v),
                None => {
                    feasible = false;
                    break;
                }
            }
        }
        if feasible && best.as_ref().is_none_or(|(b, _)| total < *b) {
            let mut assignment = vec![0; dataset.len()];
            for (color, t) in tables.iter().enumerate() {
                for (&i, &c) in dataset.class(color).iter().zip(&t[hist].1) {
                    assignment[i] = c;
                }
            }
            best = Some((total, assignment));
        }
    }
    best
}

/// Global optimum among balanced clusterings with at most `k` medoid
/// centers drawn from the whole dataset.
pub fn brute_fair_opt(dataset: &ColoredDataset, k: usize, norm: NormSpec) -> Result<FairClustering> {
    let n = dataset.ensure_balanced()?;
    let total = dataset.len();
    if total > MAX_POINTS || (k > MAX_K && total > 8) {
        return Err(FairError::TooLarge(format!("{total} points with k = {k}")));
    }
    if k == 0 {
        return Err(FairError::InvalidArgument("k must be >= 1".into()));
    }
    let cand = dataset.distinct(&(0..total).collect::<Vec<_>>());
    let size = k.min(cand.len());
    let _ = n;
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    for_each_subset(cand.len(), size, |subset| {
        let medoids: Vec<usize> = subset.iter().map(|&c| cand[c]).collect();
        let centers = CenterSet::medoids(medoids.clone(), k).expect("distinct subset");
        if let Some((t, assignment)) = best_balanced(dataset, &centers, norm) {
            if best.as_ref().is_none_or(|(b, _, _)| t < *b) {
                best = Some((t, medoids, assignment));
            }
        }
    });
    let (_, medoids, assignment) = best.expect("one cluster holding everything is balanced");
    FairClustering::evaluate(dataset, CenterSet::medoids(medoids, k)?, assignment, norm)
}

/// Fair k-means optimum with exact centroids: every balanced labeling into
/// at most `k` clusters is enumerated. Cost is reported under `(2,2)`, i.e.
/// the square root of the sum of squares.
pub fn brute_fair_opt_kmeans(dataset: &ColoredDataset, k: usize) -> Result<FairClustering> {
    dataset.ensure_balanced()?;
    let points = dataset.points().ok_or(FairError::CoordinatesRequired)?;
    let total = dataset.len();
    if total > MAX_POINTS || k > MAX_K || k == 0 {
        return Err(FairError::TooLarge(format!("{total} points with k = {k}")));
    }
    let dim = points[0].dim();
    let ell = dataset.num_colors();
    // restricted growth strings: canonical labelings without relabeling twins
    let mut labels = vec![0usize; total];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let used = labels.iter().max().unwrap() + 1;
        let mut hist = vec![vec![0usize; ell]; used];
        for (i, &l) in labels.iter().enumerate() {
            hist[l][dataset.color(i)] += 1;
        }
        if hist.iter().all(|h| h.iter().all(|&x| x == h[0])) {
            let mut sse = 0.0;
            for l in 0..used {
                let members: Vec<usize> = (0..total).filter(|&i| labels[i] == l).collect();
                let mut centroid = vec![0.0; dim];
                for &i in &members {
                    for (c, x) in centroid.iter_mut().zip(points[i].coords()) {
                        *c += x;
                    }
                }
                centroid.iter_mut().for_each(|c| *c /= members.len() as f64);
                for &i in &members {
                    sse += points[i]
                        .coords()
                        .iter()
                        .zip(&centroid)
                        .map(|(x, c)| (x - c) * (x - c))
                        .sum::<f64>();
                }
            }
            if best.as_ref().is_none_or(|(b, _)| sse < *b) {
                best = Some((sse, labels.clone()));
            }
        }
        if !next_growth_string(&mut labels, k) {
            break;
        }
    }
    let (_, labels) = best.expect("single cluster is balanced");
    let used = labels.iter().max().unwrap() + 1;
    let centroids = (0..used)
        .map(|l| {
            let members: Vec<usize> = (0..total).filter(|&i| labels[i] == l).collect();
            let mut c = vec![0.0; dim];
            for &i in &members {
                for (a, x) in c.iter_mut().zip(points[i].coords()) {
                    *a += x;
                }
            }
            VectorPoint::new(c.into_iter().map(|a| a / members.len() as f64).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    // distinct balanced clusters can share a centroid; merge them
    let mut unique: Vec<VectorPoint> = Vec::new();
    let mut remap = vec![0; used];
    for (l, c) in centroids.into_iter().enumerate() {
        remap[l] = match unique.iter().position(|u| *u == c) {
            Some(u) => u,
            None => {
                unique.push(c);
                unique.len() - 1
            }
        };
    }
    let assignment = labels.into_iter().map(|l| remap[l]).collect();
    FairClustering::evaluate(
        dataset,
        CenterSet::coordinates(unique, k)?,
        assignment,
        NormSpec::k_means(),
    )
}

fn next_growth_string(labels: &mut [usize], k: usize) -> bool {
    let n = labels.len();
    for i in (1..n).rev() {
        let max_prefix = labels[..i].iter().copied().max().unwrap_or(0);
        if labels[i] <= max_prefix && labels[i] + 1 < k {
            labels[i] += 1;
            for l in labels[i + 1..].iter_mut() {
                *l = 0;
            }
            return true;
        }
    }
    false
}

/// Exhaustive transportation optimum (assignments with exact counts).
pub fn brute_transport(instance: &TransportInstance) -> Result<TransportSolution> {
    let n = instance.sources();
    let k = instance.centers();
    if (k as f64).powi(n as i32) > 2e6 {
        return Err(FairError::TooLarge(format!("{k}^{n} assignments")));
    }
    let mut labels = vec![0usize; n];
    let mut best: Option<TransportSolution> = None;
    loop {
        let mut counts = vec![0usize; k];
        for &c in &labels {
            counts[c] += 1;
        }
        if counts == instance.demands {
            let cost: f64 = labels.iter().enumerate().map(|(s, &c)| instance.cost(s, c)).sum();
            if best.as_ref().is_none_or(|b| cost < b.cost) {
                best = Some(TransportSolution {
                    assignment: labels.clone(),
                    cost,
                });
            }
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return best.ok_or_else(|| FairError::Infeasible("no assignment meets demands".into()));
            }
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

/// Fair k-center optimum (medoid convention), a convenience for `p = ∞`.
pub fn brute_fair_kcenter(dataset: &ColoredDataset, k: usize, q: Exponent) -> Result<FairClustering> {
    brute_fair_opt(dataset, k, NormSpec::new(Exponent::Infinite, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::verify_balance;

    fn l1() -> NormSpec {
        NormSpec::new(Exponent::ONE, Exponent::ONE)
    }

    fn line(xs: &[f64], colors: Vec<usize>) -> ColoredDataset {
        ColoredDataset::from_rows(xs.iter().map(|&x| vec![x]).collect(), colors).unwrap()
    }

    #[test]
    fn subsets_are_lexicographic() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, |s| seen.push(s.to_vec()));
        assert_eq!(
            seen,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        let mut count = 0;
        for_each_subset(3, 3, |_| count += 1);
        assert_eq!(count, 1);
    }

    #[test]
    fn brute_matching_examples() {
        let one = CostMatrix::new(vec![vec![4.0]]).unwrap();
        assert_eq!(brute_matching(&one, l1()).unwrap().permutation, vec![0]);
        let c = CostMatrix::new(vec![vec![1., 2.], vec![2., 1.]]).unwrap();
        assert_eq!(brute_matching(&c, l1()).unwrap().cost, 2.0);
        let big = CostMatrix::new(vec![vec![0.0; 9]; 9]).unwrap();
        assert!(brute_matching(&big, l1()).is_err());
    }

    #[test]
    fn brute_unconstrained_examples() {
        let ds = line(&[0., 1., 10., 11.], vec![0; 4]);
        let m: Vec<usize> = (0..4).collect();
        assert_eq!(brute_unconstrained_opt(&ds, &m, &m, 2, l1()).unwrap().1, 2.0);
        assert_eq!(brute_unconstrained_opt(&ds, &m, &m, 4, l1()).unwrap().1, 0.0);
    }

    #[test]
    fn brute_fair_examples() {
        let ds = line(&[0., 10., 1., 11.], vec![0, 0, 1, 1]);
        let opt = brute_fair_opt(&ds, 1, l1()).unwrap();
        assert_eq!(opt.cost, 20.0);
        let center = opt.centers.medoid_indices().unwrap()[0];
        assert!(center == 1 || center == 2, "center at 10 or at 1");
        assert!(verify_balance(&ds, &opt).balanced);

        // single color: equals the unconstrained optimum
        let ds1 = line(&[0., 1., 10., 11.], vec![0; 4]);
        let m: Vec<usize> = (0..4).collect();
        let (_, u) = brute_unconstrained_opt(&ds1, &m, &m, 2, l1()).unwrap();
        assert_eq!(brute_fair_opt(&ds1, 2, l1()).unwrap().cost, u);
    }

    #[test]
    fn fair_opt_with_n_clusters_is_the_matching() {
        let ds = line(&[0., 5., 7., 1., 6., 9.], vec![0, 0, 0, 1, 1, 1]);
        let opt = brute_fair_opt(&ds, 3, l1()).unwrap();
        let cm = CostMatrix::between(&ds, 0, 1, l1());
        assert_eq!(opt.cost, brute_matching(&cm, l1()).unwrap().cost);
    }

    #[test]
    fn kmeans_oracle() {
        let ds = line(&[0., 2., 10., 12.], vec![0, 1, 0, 1]);
        let opt = brute_fair_opt_kmeans(&ds, 2).unwrap();
        // pairs {0,2} and {10,12}: squared deviations 1+1+1+1
        assert_eq!(opt.cost, 2.0);
        assert!(verify_balance(&ds, &opt).balanced);
    }

    #[test]
    fn growth_strings_count_set_partitions() {
        // Stirling numbers: S(4,1)+S(4,2)+S(4,3) = 1 + 7 + 6 = 14
        let mut labels = vec![0; 4];
        let mut count = 1;
        while next_growth_string(&mut labels, 3) {
            count += 1;
        }
        assert_eq!(count, 14);
    }

    #[test]
    fn brute_transport_example() {
        let inst = TransportInstance::new(vec![vec![0., 10.], vec![1., 9.]], vec![1, 1]).unwrap();
        let sol = brute_transport(&inst).unwrap();
        assert_eq!(sol.cost, 9.0);
        assert_eq!(sol.assignment, vec![0, 1]);
    }

    #[test]
    fn balanced_assignment_oracle() {
        let ds = line(&[0., 1., 10., 11.], vec![0, 1, 0, 1]);
        let centers = CenterSet::medoids(vec![0, 2], 2).unwrap();
        let a = brute_balanced_assignment(&ds, &centers, NormSpec::new(Exponent::Infinite, Exponent::ONE)).unwrap();
        assert_eq!(a.cost, 1.0);
    }

    #[test]
    fn size_limits() {
        let ds = line(&[0.; 14], (0..14).map(|i| i % 2).collect());
        assert!(matches!(brute_fair_opt(&ds, 2, l1()), Err(FairError::TooLarge(_))));
    }
}
