//! Ratio certificates on random tiny instances against the exhaustive
//! oracles.

use fairclust::clustering::CenterSet;
use fairclust::fair_center::fair_kcenter_centers;
use fairclust::fair_reduce::Reducer;
use fairclust::matching::pairwise_emd_table;
use fairclust::oracle::{brute_balanced_assignment, brute_fair_opt};
use fairclust::solvers::CandidatePool;
use fairclust::{ColoredDataset, Exponent, NormSpec, Result, SolverAlgorithm, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const ALGORITHM1_BOUND: f64 = 3.0;
pub const Q_BOUND: f64 = 5.0;
pub const KCENTER_BOUND: f64 = 3.0;
/// Relative slack on the ratio comparisons, for rounding in the costs.
pub const RATIO_TOLERANCE: f64 = 1e-9;

/// Balanced dataset of `ell` colors with `n` points each, uniform in
/// `[0, 10)^dim`. With `grid`, coordinates are integers, so ties and
/// coincident points occur.
pub fn random_instance<R: Rng>(rng: &mut R, ell: usize, n: usize, dim: usize, grid: bool) -> ColoredDataset {
    let rows = (0..ell * n)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let x = rng.random::<f64>() * 10.0;
                    if grid {
                        x.floor()
                    } else {
                        x
                    }
                })
                .collect()
        })
        .collect();
    let colors = (0..ell * n).map(|i| i / n).collect();
    ColoredDataset::from_rows(rows, colors).expect("valid instance")
}

/// The inner solver with approximation factor 1: exhaustive, with centers
/// allowed anywhere in the dataset.
pub fn exact_solver() -> SolverConfig {
    SolverConfig {
        candidates: CandidatePool::AllPoints,
        ..SolverConfig::new(SolverAlgorithm::Exhaustive, 0)
    }
}

/// `value / opt`, with `0/0 = 1`.
pub fn ratio(value: f64, opt: f64) -> f64 {
    if opt > 0.0 {
        value / opt
    } else if value <= 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub trials: usize,
    pub seed: u64,
    pub min_colors: usize,
    pub max_colors: usize,
    pub max_n: usize,
    pub max_k: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            trials: 1000,
            seed: 0,
            min_colors: 2,
            max_colors: 3,
            max_n: 4,
            max_k: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub trials: usize,
    pub max_algorithm1_ratio: f64,
    pub max_q_ratio: f64,
    pub max_kcenter_ratio: f64,
    pub algorithm1_violations: usize,
    pub q_violations: usize,
    pub kcenter_violations: usize,
}

impl CertifyReport {
    pub fn passed(&self) -> bool {
        self.algorithm1_violations + self.q_violations + self.kcenter_violations == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRatios {
    pub algorithm1: f64,
    pub q: f64,
    pub kcenter: f64,
}

/// Reduction ratios under `(p,q)` and the fair k-center existence ratio
/// for one instance.
pub fn trial(ds: &ColoredDataset, k: usize, norm: NormSpec, seed: u64) -> Result<TrialRatios> {
    let opt = brute_fair_opt(ds, k, norm)?;
    let table = pairwise_emd_table(ds, norm)?;
    let red = Reducer::new(ds, &table, k, exact_solver())?;
    let a = red.algorithm1()?;
    let q = red.variant_q()?;

    let kc = NormSpec::new(Exponent::Infinite, norm.q);
    let kopt = brute_fair_opt(ds, k, kc)?;
    let centers: CenterSet = fair_kcenter_centers(ds, k, norm.q, seed)?.centers;
    let best_on_centers = brute_balanced_assignment(ds, &centers, kc)?;
    Ok(TrialRatios {
        algorithm1: ratio(a.clustering.cost, opt.cost),
        q: ratio(q.clustering.cost, opt.cost),
        kcenter: ratio(best_on_centers.cost, kopt.cost),
    })
}

pub fn cmd_certify(opts: &CertifyOptions) -> Result<CertifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = CertifyReport {
        trials: opts.trials,
        max_algorithm1_ratio: 0.0,
        max_q_ratio: 0.0,
        max_kcenter_ratio: 0.0,
        algorithm1_violations: 0,
        q_violations: 0,
        kcenter_violations: 0,
    };
    let over = |r: f64, bound: f64| r > bound * (1.0 + RATIO_TOLERANCE);
    for _ in 0..opts.trials {
        let ell = rng.random_range(opts.min_colors..=opts.max_colors);
        let max_n = opts.max_n.min(12 / ell).max(1);
        let n = rng.random_range(1..=max_n);
        let dim = rng.random_range(1..=2);
        let grid = rng.random_bool(0.5);
        let ds = random_instance(&mut rng, ell, n, dim, grid);
        let k = rng.random_range(1..=opts.max_k.min(ds.len()));
        let p = [Exponent::ONE, Exponent::TWO, Exponent::Infinite][rng.random_range(0..3)];
        let q = [Exponent::ONE, Exponent::TWO][rng.random_range(0..2)];
        let t = trial(&ds, k, NormSpec::new(p, q), rng.random())?;
        report.max_algorithm1_ratio = report.max_algorithm1_ratio.max(t.algorithm1);
        report.max_q_ratio = report.max_q_ratio.max(t.q);
        report.max_kcenter_ratio = report.max_kcenter_ratio.max(t.kcenter);
        report.algorithm1_violations += usize::from(over(t.algorithm1, ALGORITHM1_BOUND));
        report.q_violations += usize::from(over(t.q, Q_BOUND));
        report.kcenter_violations += usize::from(over(t.kcenter, KCENTER_BOUND));
    }
    Ok(report)
}
