//! Min-cost perfect `(p,q)`-matchings between color classes and the earth
//! mover's distance they induce.

use serde::{Deserialize, Serialize};

use crate::dataset::ColoredDataset;
use crate::error::{FairError, Result};
use crate::exec::Exec;
use crate::norm::{Exponent, NormSpec};

/// Square matrix of powered ground distances: `d_q(a_s, b_t)^p` for finite
/// `p`, the raw distance for `p = ∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(FairError::InvalidArgument(format!(
                    "cost matrix is not square: row of {} in {n} rows",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(FairError::InvalidArgument(
                    "cost entries must be finite and >= 0".into(),
                ));
            }
            entries.extend_from_slice(row);
        }
        Ok(CostMatrix { n, entries })
    }

    /// Cost matrix between color classes `from` and `to`.
    pub fn between(dataset: &ColoredDataset, from: usize, to: usize, norm: NormSpec) -> Self {
        let a = dataset.class(from);
        let b = dataset.class(to);
        assert_eq!(a.len(), b.len(), "classes must have equal size");
        let entries = a
            .iter()
            .flat_map(|&i| b.iter().map(move |&j| norm.p.power(dataset.distance(i, j, norm.q))))
            .collect();
        CostMatrix { n: a.len(), entries }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.n + col]
    }

    /// Powered total of a permutation, accumulated in row order.
    pub fn total(&self, permutation: &[usize], p: Exponent) -> f64 {
        permutation
            .iter()
            .enumerate()
            .fold(0.0, |acc, (r, &c)| p.combine(acc, self.get(r, c)))
    }
}

/// A bijection between two classes of equal size together with its cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    /// `permutation[s] = t` pairs row point `s` with column point `t`.
    pub permutation: Vec<usize>,
    /// Rooted `(p,q)`-cost of the permutation.
    pub cost: f64,
    pub norm: NormSpec,
}

impl Matching {
    pub fn from_permutation(cost: &CostMatrix, permutation: Vec<usize>, norm: NormSpec) -> Self {
        let total = cost.total(&permutation, norm.p);
        Matching {
            permutation,
            cost: norm.p.root(total),
            norm,
        }
    }

    pub fn identity(n: usize, norm: NormSpec) -> Self {
        Matching {
            permutation: (0..n).collect(),
            cost: 0.0,
            norm,
        }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.permutation.len()];
        for (s, &t) in self.permutation.iter().enumerate() {
            inv[t] = s;
        }
        Matching {
            permutation: inv,
            cost: self.cost,
            norm: self.norm,
        }
    }

    pub fn is_bijection(&self) -> bool {
        let n = self.permutation.len();
        let mut seen = vec![false; n];
        self.permutation
            .iter()
            .all(|&t| t < n && !std::mem::replace(&mut seen[t], true))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmdMode {
    #[default]
    Exact,
    Greedy,
}

/// Exact optimum: Hungarian algorithm for finite `p`, bottleneck search for
/// `p = ∞`.
pub fn min_cost_perfect_matching(cost: &CostMatrix, norm: NormSpec) -> Matching {
    let permutation = match norm.p {
        Exponent::Finite(_) => hungarian(cost),
        Exponent::Infinite => bottleneck(cost),
    };
    Matching::from_permutation(cost, permutation, norm)
}

/// O(n³) shortest-augmenting-path Hungarian method with row/column
/// potentials. Returns `row -> column`.
pub fn hungarian(cost: &CostMatrix) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based bookkeeping; index 0 is the virtual root column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[col0] = true;
            let r = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let reduced = cost.get(r - 1, col - 1) - u[r] - v[col];
                if reduced < minv[col] {
                    minv[col] = reduced;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for col in 1..=n {
        assignment[owner[col] - 1] = col - 1;
    }
    assignment
}

/// Bottleneck assignment: binary search over the sorted distinct entries for
/// the smallest threshold admitting a perfect matching.
pub fn bottleneck(cost: &CostMatrix) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let mut values = cost.entries.clone();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let (mut lo, mut hi) = (0, values.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching_below(cost, values[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    perfect_matching_below(cost, values[lo]).expect("largest entry admits every edge")
}

/// Perfect matching using only entries `<= threshold`, via Hopcroft–Karp.
fn perfect_matching_below(cost: &CostMatrix, threshold: f64) -> Option<Vec<usize>> {
    let n = cost.len();
    let adjacency: Vec<Vec<usize>> = (0..n)
        .map(|r| (0..n).filter(|&c| cost.get(r, c) <= threshold).collect())
        .collect();
    let matched = hopcroft_karp(n, n, &adjacency);
    if matched.iter().all(Option::is_some) {
        Some(matched.into_iter().map(Option::unwrap).collect())
    } else {
        None
    }
}

/// Maximum bipartite matching; returns the partner of each left vertex.
pub(crate) fn hopcroft_karp(left: usize, right: usize, adjacency: &[Vec<usize>]) -> Vec<Option<usize>> {
    const FREE: usize = usize::MAX;
    let mut match_left = vec![FREE; left];
    let mut match_right = vec![FREE; right];
    let mut dist = vec![0usize; left];
    loop {
        // BFS layering from free left vertices.
        let mut queue = std::collections::VecDeque::new();
        for l in 0..left {
            if match_left[l] == FREE {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adjacency[l] {
                let m = match_right[r];
                if m == FREE {
                    found = true;
                } else if dist[m] == usize::MAX {
                    dist[m] = dist[l] + 1;
                    queue.push_back(m);
                }
            }
        }
        if !found {
            break;
        }
        fn augment(
            l: usize,
            adjacency: &[Vec<usize>],
            match_left: &mut [usize],
            match_right: &mut [usize],
            dist: &mut [usize],
        ) -> bool {
            for &r in &adjacency[l] {
                let m = match_right[r];
                if m == usize::MAX || (dist[m] == dist[l] + 1 && augment(m, adjacency, match_left, match_right, dist)) {
                    match_left[l] = r;
                    match_right[r] = l;
                    return true;
                }
            }
            dist[l] = usize::MAX;
            false
        }
        for l in 0..left {
            if match_left[l] == FREE {
                augment(l, adjacency, &mut match_left, &mut match_right, &mut dist);
            }
        }
    }
    match_left.into_iter().map(|r| (r != FREE).then_some(r)).collect()
}

/// Repeatedly pairs the globally cheapest unmatched row and column; ties go
/// to the lexicographically smallest `(row, column)`.
pub fn greedy_matching(cost: &CostMatrix, norm: NormSpec) -> Matching {
    let n = cost.len();
    let mut cells: Vec<(usize, usize)> = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).collect();
    cells.sort_by(|&(r1, c1), &(r2, c2)| {
        cost.get(r1, c1)
            .total_cmp(&cost.get(r2, c2))
            .then((r1, c1).cmp(&(r2, c2)))
    });
    let mut permutation = vec![usize::MAX; n];
    let mut col_used = vec![false; n];
    let mut remaining = n;
    for (r, c) in cells {
        if remaining == 0 {
            break;
        }
        if permutation[r] == usize::MAX && !col_used[c] {
            permutation[r] = c;
            col_used[c] = true;
            remaining -= 1;
        }
    }
    Matching::from_permutation(cost, permutation, norm)
}

pub fn match_classes(
    dataset: &ColoredDataset,
    from: usize,
    to: usize,
    norm: NormSpec,
    mode: EmdMode,
) -> Result<Matching> {
    let n = dataset.ensure_balanced()?;
    check_color(dataset, from)?;
    check_color(dataset, to)?;
    if from == to {
        return Ok(Matching::identity(n, norm));
    }
    let cost = CostMatrix::between(dataset, from, to, norm);
    Ok(match mode {
        EmdMode::Exact => min_cost_perfect_matching(&cost, norm),
        EmdMode::Greedy => greedy_matching(&cost, norm),
    })
}

fn check_color(dataset: &ColoredDataset, c: usize) -> Result<()> {
    if c >= dataset.num_colors() {
        return Err(FairError::InvalidArgument(format!(
            "color {c} out of range (ℓ = {})",
            dataset.num_colors()
        )));
    }
    Ok(())
}

/// Earth mover's distance between color classes `i` and `j`.
pub fn emd(dataset: &ColoredDataset, i: usize, j: usize, norm: NormSpec) -> Result<f64> {
    Ok(match_classes(dataset, i, j, norm, EmdMode::Exact)?.cost)
}

/// All pairwise EMD values with the matchings that realize them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmdTable {
    pub num_colors: usize,
    pub norm: NormSpec,
    pub mode: EmdMode,
    /// Row-major `ℓ × ℓ` matrix of EMD values.
    pub values: Vec<f64>,
    matchings: Vec<Matching>,
}

impl EmdTable {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.num_colors + j]
    }

    /// `π_{i,j}`: position `s` in class `i` maps to position
    /// `permutation[s]` in class `j`.
    pub fn matching(&self, i: usize, j: usize) -> &Matching {
        &self.matchings[i * self.num_colors + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.num_colors).map(<[f64]>::to_vec).collect()
    }

    /// `(Σ_j EMD(i,j)^p)^{1/p}`, or the row maximum for `p = ∞`.
    pub fn aggregate(&self, i: usize) -> f64 {
        self.norm.p.aggregate((0..self.num_colors).map(|j| self.value(i, j)))
    }

    /// Color minimizing [`EmdTable::aggregate`]; lowest index on ties.
    pub fn best_base_color(&self) -> usize {
        let mut best = (0, f64::INFINITY);
        for i in 0..self.num_colors {
            let a = self.aggregate(i);
            if a < best.1 {
                best = (i, a);
            }
        }
        best.0
    }
}

pub fn pairwise_emd_table(dataset: &ColoredDataset, norm: NormSpec) -> Result<EmdTable> {
    pairwise_emd_table_with(dataset, norm, EmdMode::Exact, Exec::default())
}

pub fn pairwise_emd_table_with(
    dataset: &ColoredDataset,
    norm: NormSpec,
    mode: EmdMode,
    exec: Exec,
) -> Result<EmdTable> {
    let n = dataset.ensure_balanced()?;
    let ell = dataset.num_colors();
    let pairs: Vec<(usize, usize)> = (0..ell).flat_map(|i| (i + 1..ell).map(move |j| (i, j))).collect();
    let solved = exec.map_slice(&pairs, |&(i, j)| {
        let cost = CostMatrix::between(dataset, i, j, norm);
        match mode {
            EmdMode::Exact => min_cost_perfect_matching(&cost, norm),
            EmdMode::Greedy => greedy_matching(&cost, norm),
        }
    });
    let mut matchings = vec![Matching::identity(n, norm); ell * ell];
    let mut values = vec![0.0; ell * ell];
    for (&(i, j), m) in pairs.iter().zip(solved) {
        values[i * ell + j] = m.cost;
        values[j * ell + i] = m.cost;
        matchings[j * ell + i] = m.inverse();
        matchings[i * ell + j] = m;
    }
    Ok(EmdTable {
        num_colors: ell,
        norm,
        mode,
        values,
        matchings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> CostMatrix {
        CostMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn p1() -> NormSpec {
        NormSpec::new(Exponent::ONE, Exponent::ONE)
    }

    #[test]
    fn exact_matching_examples() {
        let x = min_cost_perfect_matching(&m(&[&[0., 1.], &[1., 0.]]), p1());
        assert_eq!(x.permutation, vec![0, 1]);
        assert_eq!(x.cost, 0.0);
        let x = min_cost_perfect_matching(&m(&[&[1., 2.], &[2., 1.]]), p1());
        assert_eq!(x.permutation, vec![0, 1]);
        assert_eq!(x.cost, 2.0);
    }

    #[test]
    fn hungarian_picks_off_diagonal() {
        let c = m(&[&[4., 1., 3.], &[2., 0., 5.], &[3., 2., 2.]]);
        let x = min_cost_perfect_matching(&c, p1());
        assert_eq!(x.cost, 5.0);
        assert!(x.is_bijection());
    }

    #[test]
    fn bottleneck_minimizes_max() {
        let c = m(&[&[1., 9.], &[2., 8.]]);
        let norm = NormSpec::new(Exponent::Infinite, Exponent::ONE);
        let x = min_cost_perfect_matching(&c, norm);
        // identity: max(1,8)=8, swap: max(9,2)=9
        assert_eq!(x.permutation, vec![0, 1]);
        assert_eq!(x.cost, 8.0);
    }

    #[test]
    fn greedy_examples() {
        let g = greedy_matching(&m(&[&[0., 5.], &[5., 0.]]), p1());
        assert_eq!((g.permutation.clone(), g.cost), (vec![0, 1], 0.0));
        let g = greedy_matching(&m(&[&[1., 2.], &[2., 1.]]), p1());
        assert_eq!((g.permutation.clone(), g.cost), (vec![0, 1], 2.0));
        // greedy takes the 0 first and pays 10 for the rest; optimum is 2
        let c = m(&[&[0., 1.], &[1., 10.]]);
        assert_eq!(greedy_matching(&c, p1()).cost, 10.0);
        assert_eq!(min_cost_perfect_matching(&c, p1()).cost, 2.0);
    }

    #[test]
    fn one_dimensional_emd() {
        let ds = ColoredDataset::from_rows(vec![vec![0.], vec![10.], vec![1.], vec![9.]], vec![0, 0, 1, 1]).unwrap();
        assert_eq!(emd(&ds, 0, 1, p1()).unwrap(), 2.0);
        assert_eq!(emd(&ds, 1, 1, p1()).unwrap(), 0.0);
        assert!(emd(&ds, 0, 2, p1()).is_err());
    }

    #[test]
    fn table_shapes() {
        let ds = ColoredDataset::uncolored(vec![vec![0.], vec![3.]]).unwrap();
        let t = pairwise_emd_table(&ds, p1()).unwrap();
        assert_eq!(t.rows(), vec![vec![0.0]]);
        let ds = ColoredDataset::from_rows(vec![vec![0.], vec![10.], vec![1.], vec![9.]], vec![0, 0, 1, 1]).unwrap();
        let t = pairwise_emd_table(&ds, p1()).unwrap();
        assert_eq!(t.rows(), vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
        assert_eq!(t.matching(1, 0), &t.matching(0, 1).inverse());
    }

    #[test]
    fn unbalanced_table_is_rejected() {
        let ds = ColoredDataset::from_rows(vec![vec![0.], vec![1.], vec![2.]], vec![0, 1, 1]).unwrap();
        assert!(matches!(
            pairwise_emd_table(&ds, p1()),
            Err(FairError::Unbalanced { .. })
        ));
    }
}
