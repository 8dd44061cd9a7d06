//! Fair-to-unfair reductions: cluster one color, relay the others through
//! min-cost matchings.
//!
//! [`Reducer`] holds a pairwise EMD table and caches one unconstrained
//! solution per base color, so the variants can be compared on identical
//! solver outputs.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::fair_assign_fixed_sizes;
use crate::clustering::{CenterSet, FairClustering};
use crate::dataset::ColoredDataset;
use crate::error::{FairError, Result};
use crate::exec::{derive_seed, Exec};
use crate::matching::{pairwise_emd_table_with, EmdMode, EmdTable, Matching};
use crate::norm::{Exponent, NormSpec};
use crate::solvers::{solve_unconstrained, Solution, SolverConfig};

/// Default failure probability for the sampled fairlet decomposition.
pub const DEFAULT_DELTA: f64 = 0.1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub matching: Duration,
    pub solve: Duration,
    pub assign: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionResult {
    pub clustering: FairClustering,
    pub base_color: usize,
    /// `(color, cost)` for every base color tried.
    pub per_color_candidates: Vec<(usize, f64)>,
    pub emd_table: EmdTable,
    pub wall_times: PhaseTimes,
}

/// Relays every color through `π_{base,j}`: base points go to their nearest
/// center (lowest index on ties), partners follow.
///
/// `matchings[j]` must be `π_{base,j}`.
pub fn assign_via_matchings(
    dataset: &ColoredDataset,
    base: usize,
    centers: &CenterSet,
    matchings: &[Matching],
    norm: NormSpec,
) -> Result<FairClustering> {
    relay(dataset, base, centers, |j| matchings.get(j), norm)
}

fn relay<'m>(
    dataset: &ColoredDataset,
    base: usize,
    centers: &CenterSet,
    matching: impl Fn(usize) -> Option<&'m Matching>,
    norm: NormSpec,
) -> Result<FairClustering> {
    let n = dataset.ensure_balanced()?;
    centers.validate_for(dataset)?;
    if base >= dataset.num_colors() {
        return Err(FairError::InvalidArgument(format!("base color {base} out of range")));
    }
    let base_class = dataset.class(base);
    let labels: Vec<usize> = base_class
        .iter()
        .map(|&x| centers.nearest(dataset, x, norm.q).0)
        .collect();
    let mut assignment = vec![0; dataset.len()];
    for j in 0..dataset.num_colors() {
        let class = dataset.class(j);
        if j == base {
            for (&x, &c) in class.iter().zip(&labels) {
                assignment[x] = c;
            }
            continue;
        }
        let pi = matching(j).ok_or(FairError::MissingMatching { from: base, to: j })?;
        if pi.permutation.len() != n || !pi.is_bijection() {
            return Err(FairError::MissingMatching { from: base, to: j });
        }
        for (s, &c) in labels.iter().enumerate() {
            assignment[class[pi.permutation[s]]] = c;
        }
    }
    FairClustering::evaluate(dataset, centers.clone(), assignment, norm)
}

/// Shared state for the reduction variants on one dataset and one `k`.
pub struct Reducer<'a> {
    dataset: &'a ColoredDataset,
    table: &'a EmdTable,
    k: usize,
    config: SolverConfig,
    exec: Exec,
    solutions: Vec<OnceLock<(Result<Solution>, Duration)>>,
}

impl<'a> Reducer<'a> {
    /// The table's norm is the clustering norm.
    pub fn new(dataset: &'a ColoredDataset, table: &'a EmdTable, k: usize, config: SolverConfig) -> Result<Self> {
        dataset.ensure_balanced()?;
        if k == 0 {
            return Err(FairError::InvalidArgument("k must be >= 1".into()));
        }
        if table.num_colors != dataset.num_colors() {
            return Err(FairError::InvalidArgument("EMD table does not match dataset".into()));
        }
        config.validate()?;
        Ok(Reducer {
            dataset,
            table,
            k,
            config,
            exec: Exec::default(),
            solutions: (0..dataset.num_colors()).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn norm(&self) -> NormSpec {
        self.table.norm
    }

    /// Unconstrained solution on color `i`, seeded by `(seed, i)`.
    pub fn solution(&self, i: usize) -> Result<&Solution> {
        let (sol, _) = self.solutions[i].get_or_init(|| {
            let start = Instant::now();
            let config = self.config.with_seed(derive_seed(self.config.seed, i as u64));
            let sol = solve_unconstrained(self.dataset, self.dataset.class(i), self.k, self.norm(), &config);
            (sol, start.elapsed())
        });
        sol.as_ref().map_err(Clone::clone)
    }

    /// Time the solver took on color `i`, whether or not it was cached.
    fn solve_time(&self, i: usize) -> Result<Duration> {
        self.solution(i)?;
        Ok(self.solutions[i].get().expect("initialized").1)
    }

    fn solve_all(&self) -> Result<Duration> {
        let times = self.exec.map(self.dataset.num_colors(), |i| self.solve_time(i));
        times.into_iter().sum()
    }

    /// Relay clustering for base color `i` on its cached solution.
    pub fn relay_from(&self, i: usize) -> Result<FairClustering> {
        let sol = self.solution(i)?;
        relay(
            self.dataset,
            i,
            &sol.centers,
            |j| Some(self.table.matching(i, j)),
            self.norm(),
        )
    }

    fn result(&self, candidates: Vec<(usize, FairClustering)>, times: PhaseTimes) -> ReductionResult {
        let per_color_candidates = candidates.iter().map(|(i, c)| (*i, c.cost)).collect();
        let (base_color, clustering) = candidates
            .into_iter()
            .reduce(|best, next| if next.1.cost < best.1.cost { next } else { best })
            .expect("at least one candidate");
        ReductionResult {
            clustering,
            base_color,
            per_color_candidates,
            emd_table: self.table.clone(),
            wall_times: times,
        }
    }

    /// Every color as base; keeps the cheapest (lowest index on ties).
    pub fn algorithm1(&self) -> Result<ReductionResult> {
        let solve = self.solve_all()?;
        let start = Instant::now();
        let candidates = self
            .exec
            .map(self.dataset.num_colors(), |i| self.relay_from(i).map(|c| (i, c)))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let times = PhaseTimes {
            solve,
            assign: start.elapsed(),
            ..Default::default()
        };
        Ok(self.result(candidates, times))
    }

    /// Only the color with the smallest aggregated EMD row.
    pub fn variant_q(&self) -> Result<ReductionResult> {
        self.single_base(self.table.best_base_color())
    }

    /// Relay from one given base color.
    pub fn single_base(&self, base: usize) -> Result<ReductionResult> {
        let solve = self.solve_time(base)?;
        let start = Instant::now();
        let clustering = self.relay_from(base)?;
        let times = PhaseTimes {
            solve,
            assign: start.elapsed(),
            ..Default::default()
        };
        Ok(self.result(vec![(base, clustering)], times))
    }

    /// Per base color: nearest assignment of the base fixes cluster sizes,
    /// then every color is assigned optimally under those sizes.
    pub fn variant_excellent(&self) -> Result<ReductionResult> {
        let solve = self.solve_all()?;
        let start = Instant::now();
        let candidates = self
            .exec
            .map(self.dataset.num_colors(), |i| {
                let sol = self.solution(i)?;
                let mut sizes = vec![0; sol.centers.len()];
                for &x in self.dataset.class(i) {
                    sizes[sol.centers.nearest(self.dataset, x, self.norm().q).0] += 1;
                }
                fair_assign_fixed_sizes(self.dataset, &sol.centers, &sizes, self.norm()).map(|c| (i, c))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let times = PhaseTimes {
            solve,
            assign: start.elapsed(),
            ..Default::default()
        };
        Ok(self.result(candidates, times))
    }

    /// Relay from the base color drawn by the sampled fairlet decomposition.
    pub fn sampled_base(&self, delta: f64, seed: u64) -> Result<ReductionResult> {
        let base = sample_base_color(self.table, delta, seed)?.0;
        self.single_base(base)
    }
}

fn timed_table(dataset: &ColoredDataset, norm: NormSpec, exec: Exec) -> Result<(EmdTable, Duration)> {
    let start = Instant::now();
    let table = pairwise_emd_table_with(dataset, norm, EmdMode::Exact, exec)?;
    Ok((table, start.elapsed()))
}

fn with_matching_time(mut r: ReductionResult, t: Duration) -> ReductionResult {
    r.wall_times.matching = t;
    r
}

pub fn algorithm1(
    dataset: &ColoredDataset,
    k: usize,
    norm: NormSpec,
    config: &SolverConfig,
) -> Result<ReductionResult> {
    algorithm1_with(dataset, k, norm, config, Exec::default())
}

pub fn algorithm1_with(
    dataset: &ColoredDataset,
    k: usize,
    norm: NormSpec,
    config: &SolverConfig,
    exec: Exec,
) -> Result<ReductionResult> {
    dataset.ensure_balanced()?;
    let (table, t) = timed_table(dataset, norm, exec)?;
    let r = Reducer::new(dataset, &table, k, *config)?
        .with_exec(exec)
        .algorithm1()?;
    Ok(with_matching_time(r, t))
}

pub fn variant_q(dataset: &ColoredDataset, k: usize, norm: NormSpec, config: &SolverConfig) -> Result<ReductionResult> {
    dataset.ensure_balanced()?;
    let (table, t) = timed_table(dataset, norm, Exec::default())?;
    let r = Reducer::new(dataset, &table, k, *config)?.variant_q()?;
    Ok(with_matching_time(r, t))
}

pub fn variant_excellent(
    dataset: &ColoredDataset,
    k: usize,
    norm: NormSpec,
    config: &SolverConfig,
) -> Result<ReductionResult> {
    dataset.ensure_balanced()?;
    let (table, t) = timed_table(dataset, norm, Exec::default())?;
    let r = Reducer::new(dataset, &table, k, *config)?.variant_excellent()?;
    Ok(with_matching_time(r, t))
}

/// Number of base colors drawn for failure probability `delta`.
pub fn sample_count(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(FairError::InvalidArgument(format!("delta = {delta} must lie in (0,1)")));
    }
    Ok(((1.0 / delta).log2().ceil() as usize).max(1))
}

/// Draws colors uniformly with replacement and returns the one with the
/// smallest `Σ_j EMD(t,j)`, plus the draws.
fn sample_base_color(table: &EmdTable, delta: f64, seed: u64) -> Result<(usize, Vec<usize>)> {
    let draws = sample_count(delta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampled: Vec<usize> = (0..draws).map(|_| rng.random_range(0..table.num_colors)).collect();
    let best = sampled
        .iter()
        .copied()
        .reduce(|a, b| if table.aggregate(b) < table.aggregate(a) { b } else { a })
        .expect("at least one draw");
    Ok((best, sampled))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Algorithm2Result {
    /// `n` fairlets, one point per color, centered at base-color points.
    pub clustering: FairClustering,
    pub base_color: usize,
    pub sampled_colors: Vec<usize>,
    pub emd_table: EmdTable,
}

/// Fairlet decomposition centered at the points of color `base`.
pub fn fairlet_decomposition(dataset: &ColoredDataset, table: &EmdTable, base: usize) -> Result<FairClustering> {
    let n = dataset.ensure_balanced()?;
    let centers = CenterSet::medoids(dataset.class(base).to_vec(), n)?;
    let mut assignment = vec![0; dataset.len()];
    for j in 0..dataset.num_colors() {
        let class = dataset.class(j);
        let pi = table.matching(base, j);
        for s in 0..n {
            assignment[class[pi.permutation[s]]] = s;
        }
    }
    FairClustering::evaluate(dataset, centers, assignment, table.norm)
}

/// Sampled fairlet decomposition for `p = 1`.
pub fn algorithm2(
    dataset: &ColoredDataset,
    norm: NormSpec,
    delta: f64,
    mode: EmdMode,
    seed: u64,
) -> Result<Algorithm2Result> {
    algorithm2_with(dataset, norm, delta, mode, seed, Exec::default())
}

pub fn algorithm2_with(
    dataset: &ColoredDataset,
    norm: NormSpec,
    delta: f64,
    mode: EmdMode,
    seed: u64,
    exec: Exec,
) -> Result<Algorithm2Result> {
    if norm.p != Exponent::ONE {
        return Err(FairError::InvalidExponent(format!(
            "fairlet sampling needs p = 1, got p = {}",
            norm.p
        )));
    }
    sample_count(delta)?;
    let table = pairwise_emd_table_with(dataset, norm, mode, exec)?;
    algorithm2_from_table(dataset, table, delta, seed)
}

pub fn algorithm2_from_table(
    dataset: &ColoredDataset,
    table: EmdTable,
    delta: f64,
    seed: u64,
) -> Result<Algorithm2Result> {
    let (base, sampled) = sample_base_color(&table, delta, seed)?;
    let clustering = fairlet_decomposition(dataset, &table, base)?;
    Ok(Algorithm2Result {
        clustering,
        base_color: base,
        sampled_colors: sampled,
        emd_table: table,
    })
}

/// Cheapest fairlet decomposition over all base colors (cost of the best
/// `k = n` relay clustering).
pub fn fairlet_bound(dataset: &ColoredDataset, table: &EmdTable) -> Result<FairClustering> {
    fairlet_decomposition(dataset, table, table.best_base_color())
}

/// Clusters a precomputed fairlet decomposition: `fairlets[x]` is the
/// fairlet id of point `x`. Each fairlet is represented by its medoid; the
/// representatives are clustered and every fairlet follows its
/// representative.
pub fn cluster_external_fairlets(
    dataset: &ColoredDataset,
    fairlets: &[usize],
    k: usize,
    norm: NormSpec,
    config: &SolverConfig,
) -> Result<FairClustering> {
    dataset.ensure_balanced()?;
    if fairlets.len() != dataset.len() {
        return Err(FairError::InvalidArgument(format!(
            "{} fairlet ids for {} points",
            fairlets.len(),
            dataset.len()
        )));
    }
    let count = fairlets.iter().max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); count];
    for (x, &f) in fairlets.iter().enumerate() {
        groups[f].push(x);
    }
    groups.retain(|g| !g.is_empty());
    let ell = dataset.num_colors();
    let mut reps = Vec::with_capacity(groups.len());
    for g in &groups {
        let mut hist = vec![0usize; ell];
        g.iter().for_each(|&x| hist[dataset.color(x)] += 1);
        if hist.iter().any(|&h| h != hist[0]) {
            return Err(FairError::InvalidArgument(format!(
                "fairlet containing point {} is unbalanced",
                g[0]
            )));
        }
        let medoid = *g
            .iter()
            .min_by(|&&a, &&b| {
                let sa: f64 = g.iter().map(|&y| dataset.distance(a, y, norm.q)).sum();
                let sb: f64 = g.iter().map(|&y| dataset.distance(b, y, norm.q)).sum();
                sa.total_cmp(&sb)
            })
            .expect("nonempty fairlet");
        reps.push(medoid);
    }
    let sol = solve_unconstrained(dataset, &reps, k, norm, config)?;
    let mut assignment = vec![0; dataset.len()];
    for (g, &label) in groups.iter().zip(&sol.labels) {
        for &x in g {
            assignment[x] = label;
        }
    }
    FairClustering::evaluate(dataset, sol.centers, assignment, norm)
}
