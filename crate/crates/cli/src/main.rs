use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fairclust::data::{balanced_subsample, prepare, DatasetSpec};
use fairclust::exec::derive_seed;
use fairclust::fair_reduce::DEFAULT_DELTA;
use fairclust::matching::{match_classes, pairwise_emd_table_with, EmdMode};
use fairclust::oracle::brute_fair_opt;
use fairclust::{Exec, Exponent, FairError, NormSpec, Result, SolverAlgorithm};
use fairclust_cli::certify::{cmd_certify, CertifyOptions};
use fairclust_cli::run::{cmd_run, read_fairlets, read_records, write_csv, Method, RunOptions};
use fairclust_cli::table::{cmd_table, Bucket, DEFAULT_BUCKETS};
use fairclust_cli::{read_colored, read_points, two_class_dataset};

#[derive(Parser)]
#[command(name = "fairclust", version, about = "Fair (k,p,q)-clustering experiments")]
struct Cli {
    /// Master seed (overrides the config's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Output directory for run and table files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Precomputed fairlets: CSV with columns sample_id,point,fairlet.
    #[arg(long, global = true)]
    fairlets: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the method matrix over samples and k; writes records.csv and timings.csv.
    Run {
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        #[arg(long, default_value_t = 2)]
        k_min: usize,
        #[arg(long, default_value_t = 20)]
        k_max: usize,
        #[arg(long, default_value = "1")]
        p: Exponent,
        #[arg(long, default_value = "2")]
        q: Exponent,
        /// Number of samples (overrides the config).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value = "local_search", value_parser = parse_solver)]
        solver: SolverAlgorithm,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        /// Run samples one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Aggregate records.csv into mean and std per method and k bucket.
    Table {
        records: PathBuf,
        /// Comma-separated LO-HI ranges.
        #[arg(long, value_delimiter = ',')]
        buckets: Option<Vec<Bucket>>,
    },
    /// EMD between two point files, or the pairwise table of a config's sample.
    Emd {
        config: Option<PathBuf>,
        #[arg(long, requires = "b")]
        a: Option<PathBuf>,
        #[arg(long, requires = "a")]
        b: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        sample: usize,
        #[arg(long, default_value = "1")]
        p: Exponent,
        #[arg(long, default_value = "2")]
        q: Exponent,
        /// Greedy matching instead of the exact optimum.
        #[arg(long)]
        greedy: bool,
    },
    /// Exhaustive fair optimum of a tiny CSV instance (columns: features + color).
    Oracle {
        points: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "1")]
        p: Exponent,
        #[arg(long, default_value = "2")]
        q: Exponent,
    },
    /// Check approximation ratios against exhaustive optima on random tiny instances.
    Certify {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 2)]
        min_colors: usize,
        #[arg(long, default_value_t = 3)]
        max_colors: usize,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
        #[arg(long, default_value_t = 2)]
        max_k: usize,
    },
}

fn parse_solver(s: &str) -> std::result::Result<SolverAlgorithm, String> {
    Ok(match s {
        "local_search" => SolverAlgorithm::LocalSearchKMedian,
        "kpp_medoids" => SolverAlgorithm::KppSeedMedoids,
        "farthest_first" => SolverAlgorithm::FarthestFirst,
        "lloyd" => SolverAlgorithm::LloydKMeans,
        "exhaustive" => SolverAlgorithm::Exhaustive,
        _ => {
            return Err(format!(
                "unknown solver `{s}` (local_search, kpp_medoids, farthest_first, lloyd, exhaustive)"
            ))
        }
    })
}

fn json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| FairError::Parse(e.to_string()))
}

fn create(dir: &Path, name: &str) -> Result<fs::File> {
    fs::create_dir_all(dir)?;
    Ok(fs::File::create(dir.join(name))?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| FairError::InvalidArgument(e.to_string()))?;
    }
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Run {
            config,
            methods,
            k_min,
            k_max,
            p,
            q,
            samples,
            solver,
            delta,
            sequential,
        } => {
            let spec = DatasetSpec::from_file(&config)?;
            let fairlets = cli.fairlets.as_deref().map(read_fairlets).transpose()?;
            let mut methods = methods.unwrap_or_else(|| Method::DEFAULT.to_vec());
            if fairlets.is_some() && !methods.contains(&Method::ExternalFairlets) {
                methods.push(Method::ExternalFairlets);
            }
            let opts = RunOptions {
                methods,
                k_min,
                k_max,
                norm: NormSpec::new(p, q),
                seed: cli.seed,
                samples,
                solver,
                delta,
                fairlets,
                exec: if sequential { Exec::Sequential } else { Exec::Parallel },
            };
            let out = cmd_run(&spec, &opts)?;
            let dir = cli.out.unwrap_or_else(|| PathBuf::from("."));
            write_csv(&out.records, create(&dir, "records.csv")?)?;
            write_csv(&out.timings, create(&dir, "timings.csv")?)?;
            let failed = out.records.iter().filter(|r| r.cost.is_none()).count();
            if cli.json {
                let summary = serde_json::json!({
                    "records": out.records.len(),
                    "failed": failed,
                    "records_csv": dir.join("records.csv"),
                    "timings_csv": dir.join("timings.csv"),
                });
                writeln!(stdout, "{}", json(&summary)?)?;
            } else {
                writeln!(
                    stdout,
                    "{} records ({failed} failed) written to {}",
                    out.records.len(),
                    dir.join("records.csv").display()
                )?;
            }
        }
        Command::Table { records, buckets } => {
            let records = read_records(&records)?;
            let buckets = buckets.unwrap_or_else(|| DEFAULT_BUCKETS.to_vec());
            let table = cmd_table(&records, &buckets)?;
            if let Some(dir) = &cli.out {
                write_csv(&table.cells, create(dir, "table.csv")?)?;
                writeln!(create(dir, "table.json")?, "{}", json(&table)?)?;
            }
            if cli.json {
                writeln!(stdout, "{}", json(&table)?)?;
            } else {
                write_csv(&table.cells, &mut stdout)?;
            }
        }
        Command::Emd {
            config,
            a,
            b,
            sample,
            p,
            q,
            greedy,
        } => {
            let norm = NormSpec::new(p, q);
            let mode = if greedy { EmdMode::Greedy } else { EmdMode::Exact };
            match (config, a, b) {
                (_, Some(a), Some(b)) => {
                    let ds = two_class_dataset(read_points(&a)?, read_points(&b)?)?;
                    let m = match_classes(&ds, 0, 1, norm, mode)?;
                    if cli.json {
                        let v = serde_json::json!({"emd": m.cost, "permutation": m.permutation});
                        writeln!(stdout, "{}", json(&v)?)?;
                    } else {
                        writeln!(stdout, "{}", m.cost)?;
                    }
                }
                (Some(config), None, None) => {
                    let mut spec = DatasetSpec::from_file(&config)?;
                    if let Some(seed) = cli.seed {
                        spec.seed = seed;
                    }
                    let pool = prepare(&spec)?;
                    let ds = balanced_subsample(&pool, spec.subsample_size, derive_seed(spec.seed, sample as u64))?;
                    let table = pairwise_emd_table_with(&ds, norm, mode, Exec::default())?;
                    if cli.json {
                        let v = serde_json::json!({"norm": norm.to_string(), "emd": table.rows()});
                        writeln!(stdout, "{}", json(&v)?)?;
                    } else {
                        for row in table.rows() {
                            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
                            writeln!(stdout, "{}", cells.join(","))?;
                        }
                    }
                }
                _ => return Err(FairError::InvalidArgument("give a config or both --a and --b".into())),
            }
        }
        Command::Oracle { points, k, p, q } => {
            let ds = read_colored(&points)?;
            let opt = brute_fair_opt(&ds, k, NormSpec::new(p, q))?;
            if cli.json {
                writeln!(stdout, "{}", json(&opt)?)?;
            } else {
                writeln!(stdout, "cost {}", opt.cost)?;
                writeln!(stdout, "centers {:?}", opt.centers.medoid_indices().unwrap_or_default())?;
                writeln!(stdout, "assignment {:?}", opt.assignment)?;
            }
        }
        Command::Certify {
            trials,
            min_colors,
            max_colors,
            max_n,
            max_k,
        } => {
            let report = cmd_certify(&CertifyOptions {
                trials,
                seed: cli.seed.unwrap_or(0),
                min_colors,
                max_colors,
                max_n,
                max_k,
            })?;
            if cli.json {
                writeln!(stdout, "{}", json(&report)?)?;
            } else {
                writeln!(stdout, "trials {}", report.trials)?;
                writeln!(
                    stdout,
                    "algorithm1 / OPT  max {:.4}  violations {}",
                    report.max_algorithm1_ratio, report.algorithm1_violations
                )?;
                writeln!(
                    stdout,
                    "q / OPT           max {:.4}  violations {}",
                    report.max_q_ratio, report.q_violations
                )?;
                writeln!(
                    stdout,
                    "k-center on FF    max {:.4}  violations {}",
                    report.max_kcenter_ratio, report.kcenter_violations
                )?;
            }
            if !report.passed() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
