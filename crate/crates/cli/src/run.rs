//! The method matrix: every sample × k × method becomes one record.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use clap::ValueEnum;
use fairclust::clustering::balance_of;
use fairclust::data::{balanced_subsample, prepare, DatasetSpec};
use fairclust::exec::{derive_seed, derive_seed2};
use fairclust::fair_center::fair_kcenter;
use fairclust::fair_reduce::{cluster_external_fairlets, fairlet_bound, Reducer, DEFAULT_DELTA};
use fairclust::matching::{pairwise_emd_table_with, EmdMode};
use fairclust::solvers::{kmedoids_refine, kpp_seed};
use fairclust::{ColoredDataset, Exec, FairError, NormSpec, Result, SolverAlgorithm, SolverConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Method {
    /// Best fairlet decomposition (`k = n`); constant in `k`.
    FairletBound,
    /// k-median++ seeding plus k-medoids on the whole sample, ignoring colors.
    #[value(name = "kmedian_pp")]
    #[serde(rename = "kmedian_pp")]
    Baseline,
    Excellent,
    Algorithm1,
    Q,
    Algorithm2,
    FairKcenter,
    ExternalFairlets,
}

impl Method {
    pub const DEFAULT: [Method; 6] = [
        Method::FairletBound,
        Method::Baseline,
        Method::Excellent,
        Method::Algorithm1,
        Method::Q,
        Method::Algorithm2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::FairletBound => "fairlet_bound",
            Method::Baseline => "kmedian_pp",
            Method::Excellent => "excellent",
            Method::Algorithm1 => "algorithm1",
            Method::Q => "q",
            Method::Algorithm2 => "algorithm2",
            Method::FairKcenter => "fair_kcenter",
            Method::ExternalFairlets => "external_fairlets",
        }
    }

    pub fn is_fair(self) -> bool {
        self != Method::Baseline
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = FairError;

    fn from_str(s: &str) -> Result<Self> {
        <Method as ValueEnum>::from_str(s, false).map_err(|_| FairError::Parse(format!("unknown method `{s}`")))
    }
}

/// One `(sample, method, k)` outcome. `cost` is empty when the method
/// failed on that sample; `status` then holds the error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub dataset: String,
    pub sample_id: usize,
    pub method: Method,
    pub k: usize,
    pub cost: Option<f64>,
    pub balanced: bool,
    pub base_color: Option<usize>,
    pub seed: u64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub dataset: String,
    pub sample_id: usize,
    pub method: Method,
    pub k: usize,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub methods: Vec<Method>,
    pub k_min: usize,
    pub k_max: usize,
    pub norm: NormSpec,
    /// Overrides the spec's seed.
    pub seed: Option<u64>,
    /// Overrides the spec's sample count.
    pub samples: Option<usize>,
    pub solver: SolverAlgorithm,
    pub delta: f64,
    /// Fairlet id per point, per sample, for [`Method::ExternalFairlets`].
    pub fairlets: Option<HashMap<usize, Vec<usize>>>,
    pub exec: Exec,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            methods: Method::DEFAULT.to_vec(),
            k_min: 2,
            k_max: 20,
            norm: NormSpec::k_median(),
            seed: None,
            samples: None,
            solver: SolverAlgorithm::LocalSearchKMedian,
            delta: DEFAULT_DELTA,
            fairlets: None,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub records: Vec<Record>,
    pub timings: Vec<Timing>,
}

const ALGORITHM2_STREAM: u64 = u64::MAX;

/// Runs every sample of `spec`. Records come back sorted by sample, `k`,
/// then method.
pub fn cmd_run(spec: &DatasetSpec, opts: &RunOptions) -> Result<RunOutput> {
    if opts.k_min == 0 || opts.k_min > opts.k_max {
        return Err(FairError::InvalidArgument(format!(
            "bad k range {}..={}",
            opts.k_min, opts.k_max
        )));
    }
    if opts.methods.is_empty() {
        return Err(FairError::InvalidArgument("no methods selected".into()));
    }
    if opts.methods.contains(&Method::ExternalFairlets) && opts.fairlets.is_none() {
        return Err(FairError::InvalidArgument("external_fairlets needs --fairlets".into()));
    }
    let mut spec = spec.clone();
    if let Some(seed) = opts.seed {
        spec.seed = seed;
    }
    if let Some(n) = opts.samples {
        spec.num_samples = n;
    }
    let pool = prepare(&spec)?;
    let per_sample = opts.exec.map(spec.num_samples, |s| {
        let seed = derive_seed(spec.seed, s as u64);
        match balanced_subsample(&pool, spec.subsample_size, seed) {
            Ok(ds) => run_sample(&spec.name, s, seed, &ds, opts),
            Err(e) => failed_sample(&spec.name, s, seed, opts, &e),
        }
    });
    let mut out = RunOutput::default();
    for (records, timings) in per_sample {
        out.records.extend(records);
        out.timings.extend(timings);
    }
    Ok(out)
}

fn failed_sample(name: &str, s: usize, seed: u64, opts: &RunOptions, e: &FairError) -> (Vec<Record>, Vec<Timing>) {
    let mut methods = opts.methods.clone();
    methods.sort();
    methods.dedup();
    let records = (opts.k_min..=opts.k_max)
        .flat_map(|k| methods.iter().map(move |&m| (k, m)))
        .map(|(k, method)| Record {
            dataset: name.to_string(),
            sample_id: s,
            method,
            k,
            cost: None,
            balanced: false,
            base_color: None,
            seed,
            status: e.to_string(),
        })
        .collect();
    (records, Vec::new())
}

struct Outcome {
    cost: f64,
    balanced: bool,
    base_color: Option<usize>,
    elapsed: Duration,
}

fn run_sample(name: &str, s: usize, seed: u64, ds: &ColoredDataset, opts: &RunOptions) -> (Vec<Record>, Vec<Timing>) {
    let mut methods = opts.methods.clone();
    methods.sort();
    methods.dedup();
    let norm = opts.norm;
    let start = Instant::now();
    let table = pairwise_emd_table_with(ds, norm, EmdMode::Exact, Exec::Sequential);
    let table_time = start.elapsed();
    let all: Vec<usize> = (0..ds.len()).collect();

    let start = Instant::now();
    let bound = table.as_ref().map_err(Clone::clone).and_then(|t| fairlet_bound(ds, t));
    let bound_time = start.elapsed() + table_time;

    let mut records = Vec::new();
    let mut timings = Vec::new();
    for k in opts.k_min..=opts.k_max {
        let k_seed = derive_seed(seed, k as u64);
        let config = SolverConfig::new(opts.solver, k_seed);
        let reducer = table
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|t| Reducer::new(ds, t, k, config).map(|r| r.with_exec(Exec::Sequential)));
        for &method in &methods {
            let outcome: Result<Outcome> = match method {
                Method::FairletBound => bound.clone().map(|c| Outcome {
                    cost: c.cost,
                    balanced: fairclust::verify_balance(ds, &c).balanced,
                    base_color: None,
                    elapsed: bound_time,
                }),
                Method::Baseline => {
                    let start = Instant::now();
                    kpp_seed(ds, &all, k, norm, derive_seed2(k_seed, 0, 1))
                        .and_then(|c| kmedoids_refine(ds, &all, &c, norm, &config))
                        .map(|sol| Outcome {
                            cost: sol.cost,
                            balanced: balance_of(ds, &sol.labels, sol.centers.len()).balanced,
                            base_color: None,
                            elapsed: start.elapsed(),
                        })
                }
                Method::Algorithm1 | Method::Q | Method::Excellent | Method::Algorithm2 => {
                    reducer.as_ref().map_err(Clone::clone).and_then(|r| {
                        let res = match method {
                            Method::Algorithm1 => r.algorithm1(),
                            Method::Q => r.variant_q(),
                            Method::Excellent => r.variant_excellent(),
                            _ => r.sampled_base(opts.delta, derive_seed(seed, ALGORITHM2_STREAM)),
                        }?;
                        let w = res.wall_times;
                        let uses_table = method != Method::Excellent;
                        Ok(Outcome {
                            cost: res.clustering.cost,
                            balanced: fairclust::verify_balance(ds, &res.clustering).balanced,
                            base_color: Some(res.base_color),
                            elapsed: w.solve + w.assign + if uses_table { table_time } else { Duration::ZERO },
                        })
                    })
                }
                Method::FairKcenter => {
                    let start = Instant::now();
                    fair_kcenter(ds, k, norm.q, k_seed).map(|c| {
                        let c = c.with_norm(ds, norm);
                        Outcome {
                            cost: c.cost,
                            balanced: fairclust::verify_balance(ds, &c).balanced,
                            base_color: None,
                            elapsed: start.elapsed(),
                        }
                    })
                }
                Method::ExternalFairlets => {
                    let start = Instant::now();
                    opts.fairlets
                        .as_ref()
                        .and_then(|f| f.get(&s))
                        .ok_or_else(|| FairError::InvalidArgument(format!("no external fairlets for sample {s}")))
                        .and_then(|f| cluster_external_fairlets(ds, f, k, norm, &config))
                        .map(|c| Outcome {
                            cost: c.cost,
                            balanced: fairclust::verify_balance(ds, &c).balanced,
                            base_color: None,
                            elapsed: start.elapsed(),
                        })
                }
            };
            let (cost, balanced, base_color, status) = match &outcome {
                Ok(o) => (Some(o.cost), o.balanced, o.base_color, "ok".to_string()),
                Err(e) => (None, false, None, e.to_string()),
            };
            records.push(Record {
                dataset: name.to_string(),
                sample_id: s,
                method,
                k,
                cost,
                balanced,
                base_color,
                seed,
                status,
            });
            if let Ok(o) = outcome {
                timings.push(Timing {
                    dataset: name.to_string(),
                    sample_id: s,
                    method,
                    k,
                    wall_time_ms: o.elapsed.as_secs_f64() * 1e3,
                });
            }
        }
    }
    (records, timings)
}

pub fn write_csv<T: Serialize, W: std::io::Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(FairError::from)).collect()
}

/// Reads `sample_id,point,fairlet` rows into per-sample fairlet id vectors.
pub fn read_fairlets(path: &Path) -> Result<HashMap<usize, Vec<usize>>> {
    #[derive(Deserialize)]
    struct Row {
        sample_id: usize,
        point: usize,
        fairlet: usize,
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for r in rdr.deserialize() {
        let r: Row = r?;
        rows.entry(r.sample_id).or_default().push((r.point, r.fairlet));
    }
    rows.into_iter()
        .map(|(s, mut v)| {
            v.sort_unstable();
            if v.iter().enumerate().any(|(i, &(p, _))| p != i) {
                return Err(FairError::Parse(format!(
                    "sample {s}: fairlet points must be 0..n without gaps"
                )));
            }
            Ok((s, v.into_iter().map(|(_, f)| f).collect()))
        })
        .collect()
}
