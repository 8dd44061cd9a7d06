//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use fairclust::assignment::{min_cost_transport, TransportInstance};
use fairclust::data::{DatasetSpec, Source, SyntheticSpec};
use fairclust::fair_center::{fair_kcenter, fair_kcenter_centers};
use fairclust::fair_reduce::{algorithm2, cluster_external_fairlets, fairlet_bound, Reducer, DEFAULT_DELTA};
use fairclust::matching::{emd, hungarian, pairwise_emd_table, CostMatrix, EmdMode};
use fairclust::oracle::{
    brute_balanced_assignment, brute_fair_kcenter, brute_fair_opt, brute_matching, brute_transport,
};
use fairclust::{verify_balance, ColoredDataset, Exec, Exponent, NormSpec, SolverAlgorithm, SolverConfig};
use fairclust_cli::certify::{cmd_certify, random_instance, ratio, CertifyOptions, KCENTER_BOUND, RATIO_TOLERANCE};
use fairclust_cli::run::{cmd_run, read_records, write_csv, Method, RunOptions};
use fairclust_cli::table::{cmd_table, DEFAULT_BUCKETS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Triangle-inequality slack, relative to the larger side.
const METRIC_TOLERANCE: f64 = 1e-9;
/// Slack on the method ordering of the trend check.
const TREND_SLACK: f64 = 0.02;
/// Relative spread allowed between fairlet-row bucket means.
const CONSTANT_TOLERANCE: f64 = 1e-9;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn p_choices() -> [Exponent; 3] {
    [Exponent::ONE, Exponent::TWO, Exponent::Infinite]
}

fn q_choices() -> [Exponent; 2] {
    [Exponent::ONE, Exponent::TWO]
}

fn int_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, max: u32) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| f64::from(rng.random_range(0..=max))).collect())
        .collect()
}

fn balance_invariant() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut outputs, mut bad) = (0usize, Vec::new());
    for run in 0..2000 {
        let ell = [2, 3, 4, 8][rng.random_range(0..4)];
        let n = rng.random_range(1..=8);
        let dim = rng.random_range(1..=3);
        let grid = rng.random_bool(0.5);
        let ds = random_instance(&mut rng, ell, n, dim, grid);
        let k = rng.random_range(1..=n.min(6));
        let p = p_choices()[rng.random_range(0..3)];
        let q = q_choices()[rng.random_range(0..2)];
        let norm = NormSpec::new(p, q);
        let seed: u64 = rng.random();
        let config = SolverConfig::new(SolverAlgorithm::LocalSearchKMedian, seed);

        let table = pairwise_emd_table(&ds, norm).expect("table");
        let red = Reducer::new(&ds, &table, k, config).expect("reducer");
        let a2 = algorithm2(
            &ds,
            NormSpec::new(Exponent::ONE, q),
            DEFAULT_DELTA,
            EmdMode::Exact,
            seed,
        )
        .expect("a2");
        let fairlet_ids = a2.clustering.assignment.clone();
        let outputs_here = [
            ("algorithm1", red.algorithm1().map(|r| r.clustering)),
            ("q", red.variant_q().map(|r| r.clustering)),
            ("excellent", red.variant_excellent().map(|r| r.clustering)),
            (
                "sampled_base",
                red.sampled_base(DEFAULT_DELTA, seed).map(|r| r.clustering),
            ),
            ("algorithm2", Ok(a2.clustering)),
            ("fairlet_bound", fairlet_bound(&ds, &table)),
            ("fair_kcenter", fair_kcenter(&ds, k, q, seed)),
            (
                "external_fairlets",
                cluster_external_fairlets(&ds, &fairlet_ids, k, norm, &config),
            ),
        ];
        for (name, c) in outputs_here {
            outputs += 1;
            match c {
                Ok(c) if verify_balance(&ds, &c).balanced => {}
                Ok(_) => bad.push(format!("run {run} {name}: unbalanced")),
                Err(e) => bad.push(format!("run {run} {name}: {e}")),
            }
        }
    }
    let first = bad.first().cloned().unwrap_or_default();
    outcome(
        bad.is_empty(),
        format!(
            "{}/{outputs} fair outputs balanced over 2000 runs {first}",
            outputs - bad.len()
        ),
    )
}

fn matching_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let norm = NormSpec::new(Exponent::ONE, Exponent::ONE);
    let mut mismatches = 0;
    for _ in 0..500 {
        let n = rng.random_range(1..=7);
        let cost = CostMatrix::new(int_matrix(&mut rng, n, n, 50)).expect("matrix");
        let perm = hungarian(&cost);
        let brute = brute_matching(&cost, norm).expect("brute");
        if cost.total(&perm, Exponent::ONE) != brute.cost {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches}/500 Hungarian costs differ from enumeration"),
    )
}

fn emd_metricity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut asym_table, mut asym_direct, mut triangle) = (0, 0, 0);
    for _ in 0..500 {
        let n = rng.random_range(1..=6);
        let dim = rng.random_range(1..=3);
        let grid = rng.random_bool(0.3);
        let ds = random_instance(&mut rng, 3, n, dim, grid);
        let norm = NormSpec::new(p_choices()[rng.random_range(0..3)], q_choices()[rng.random_range(0..2)]);
        let t = pairwise_emd_table(&ds, norm).expect("table");
        for i in 0..3 {
            for j in 0..3 {
                if t.value(i, j) != t.value(j, i) {
                    asym_table += 1;
                }
                let (a, b) = (emd(&ds, i, j, norm).unwrap(), emd(&ds, j, i, norm).unwrap());
                if (a - b).abs() > METRIC_TOLERANCE * a.max(b).max(1.0) {
                    asym_direct += 1;
                }
                for m in 0..3 {
                    let lhs = t.value(i, m);
                    let rhs = t.value(i, j) + t.value(j, m);
                    if lhs > rhs + METRIC_TOLERANCE * rhs.max(1.0) {
                        triangle += 1;
                    }
                }
            }
        }
    }
    outcome(
        asym_table + asym_direct + triangle == 0,
        format!(
            "500 triples: {asym_table} table asymmetries, {asym_direct} direct asymmetries, {triangle} triangle violations"
        ),
    )
}

fn reduction_ratios() -> Outcome {
    let report = cmd_certify(&CertifyOptions {
        trials: 1000,
        seed: 404,
        ..Default::default()
    })
    .expect("certify");
    outcome(
        report.algorithm1_violations + report.q_violations == 0,
        format!(
            "1000 instances: max algorithm1/OPT {:.4} ({} over 3), max q/OPT {:.4} ({} over 5)",
            report.max_algorithm1_ratio, report.algorithm1_violations, report.max_q_ratio, report.q_violations
        ),
    )
}

/// Every multiset of `n` values from `0..=max`, in nondecreasing order.
fn multisets(n: usize, max: i64) -> Vec<Vec<i64>> {
    fn rec(n: usize, lo: i64, max: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in lo..=max {
            cur.push(v);
            rec(n, v, max, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, 0, max, &mut Vec::new(), &mut out);
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Exact 1-D EMD by enumerating all bijections.
fn emd_1d(a: &[i64], b: &[i64], perms: &[Vec<usize>]) -> i64 {
    perms
        .iter()
        .map(|p| a.iter().zip(p).map(|(x, &j)| (x - b[j]).abs()).sum())
        .min()
        .unwrap_or(0)
}

fn fair_median_sampling() -> Outcome {
    const GRID: i64 = 15;
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let norm = NormSpec::new(Exponent::ONE, Exponent::ONE);
    let (mut within, mut ratios) = (0usize, Vec::new());
    for trial in 0..200 {
        let n = rng.random_range(1..=4);
        let classes: Vec<Vec<i64>> = if trial % 2 == 0 {
            // Aligned triples with the middle color at the median.
            let mid: Vec<i64> = (0..n).map(|_| rng.random_range(3..=GRID - 3)).collect();
            vec![
                mid.iter().map(|m| m - rng.random_range(0..=3)).collect(),
                mid.clone(),
                mid.iter().map(|m| m + rng.random_range(0..=3)).collect(),
            ]
        } else {
            (0..3)
                .map(|_| (0..n).map(|_| rng.random_range(0..=GRID)).collect())
                .collect()
        };
        let perms = permutations(n);
        let opt_b = multisets(n, GRID)
            .iter()
            .map(|b| classes.iter().map(|a| emd_1d(a, b, &perms)).sum::<i64>())
            .min()
            .expect("grid is nonempty") as f64;
        let rows = classes.iter().flatten().map(|&x| vec![x as f64]).collect();
        let colors = (0..3 * n).map(|i| i / n).collect();
        let ds = ColoredDataset::from_rows(rows, colors).expect("dataset");
        let cost = algorithm2(&ds, norm, DEFAULT_DELTA, EmdMode::Exact, rng.random())
            .expect("algorithm2")
            .clustering
            .cost;
        within += usize::from(cost <= 2.0 * opt_b * (1.0 + RATIO_TOLERANCE));
        ratios.push(ratio(cost, opt_b));
    }
    let m = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / m;
    let sd = (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    let se = sd / m.sqrt();
    let share = within as f64 / m;
    outcome(
        share >= 0.9 && mean - 3.0 * se <= 2.0,
        format!(
            "{within}/200 within 2·OPT_B, mean ratio {mean:.4} ± {:.4} (3σ)",
            3.0 * se
        ),
    )
}

fn kcenter_existence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (mut violations, mut worst) = (0, 0.0f64);
    for _ in 0..500 {
        let ell = rng.random_range(1..=3);
        let n = rng.random_range(1..=(12 / ell).min(4));
        let dim = rng.random_range(1..=2);
        let grid = rng.random_bool(0.5);
        let ds = random_instance(&mut rng, ell, n, dim, grid);
        let k = rng.random_range(1..=ds.len().min(3));
        let q = q_choices()[rng.random_range(0..2)];
        let centers = fair_kcenter_centers(&ds, k, q, rng.random()).expect("centers").centers;
        let on_centers =
            brute_balanced_assignment(&ds, &centers, NormSpec::new(Exponent::Infinite, q)).expect("assignment");
        let opt = brute_fair_kcenter(&ds, k, q).expect("opt");
        let r = ratio(on_centers.cost, opt.cost);
        worst = worst.max(r);
        if r > KCENTER_BOUND * (1.0 + RATIO_TOLERANCE) {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("500 instances: max ratio {worst:.4}, {violations} over 3"),
    )
}

fn transport_integrality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let (mut cost_diff, mut count_diff) = (0, 0);
    for _ in 0..300 {
        let k = rng.random_range(1..=4);
        let mut demands = vec![0; k];
        for _ in 0..8 {
            demands[rng.random_range(0..k)] += 1;
        }
        let inst = TransportInstance::new(int_matrix(&mut rng, 8, k, 40), demands.clone()).expect("instance");
        let flow = min_cost_transport(&inst).expect("flow");
        let brute = brute_transport(&inst).expect("brute");
        if flow.cost != brute.cost {
            cost_diff += 1;
        }
        for sol in [&flow, &brute] {
            let mut counts = vec![0; k];
            for &c in &sol.assignment {
                counts[c] += 1;
            }
            if counts != demands {
                count_diff += 1;
            }
        }
    }
    outcome(
        cost_diff + count_diff == 0,
        format!("300 instances: {cost_diff} cost mismatches, {count_diff} count mismatches"),
    )
}

fn two_color_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let norm = NormSpec::new(Exponent::ONE, Exponent::ONE);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=4);
        let dim = rng.random_range(1..=2);
        let ds = random_instance(&mut rng, 2, n, dim, true);
        let a2 = algorithm2(&ds, norm, DEFAULT_DELTA, EmdMode::Exact, rng.random()).expect("algorithm2");
        let opt = brute_fair_opt(&ds, n, norm).expect("opt");
        if a2.clustering.cost != opt.cost {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches}/200 differ from the exhaustive fair n-median"),
    )
}

// Comparisons that fail on NaN, i.e. on a missing table cell.
fn lt(a: f64, b: f64) -> bool {
    a < b
}

fn le(a: f64, b: f64) -> bool {
    a <= b
}

fn synthetic_spec(colors: usize, subsample: usize, samples: usize, seed: u64) -> DatasetSpec {
    DatasetSpec {
        name: "synthetic".into(),
        source: Source::Synthetic(SyntheticSpec {
            colors,
            points_per_color: 2000,
            dim: 2,
            components: 6,
            spread: 1.0,
            box_size: 30.0,
        }),
        feature_columns: Vec::new(),
        protected: Vec::new(),
        subsample_size: subsample,
        num_samples: samples,
        seed,
        normalize: false,
    }
}

fn trend() -> Outcome {
    let spec = synthetic_spec(8, 1000, 100, 11);
    let out = cmd_run(&spec, &RunOptions::default()).expect("run");
    let records = &out.records;
    let failed = records.iter().filter(|r| r.cost.is_none()).count();
    let unbalanced = records.iter().filter(|r| r.method.is_fair() && !r.balanced).count();

    let mut notes = Vec::new();
    if records.len() != 11400 || failed > 0 || unbalanced > 0 {
        notes.push(format!(
            "{} records, {failed} failed, {unbalanced} unbalanced",
            records.len()
        ));
    }
    let table = cmd_table(records, &DEFAULT_BUCKETS).expect("table");
    let mean = |m, b| table.get(m, b).map(|c| c.mean).unwrap_or(f64::NAN);
    let fair = [
        Method::FairletBound,
        Method::Excellent,
        Method::Algorithm1,
        Method::Q,
        Method::Algorithm2,
    ];
    for &b in &DEFAULT_BUCKETS[1..] {
        for m in fair {
            if !lt(mean(Method::Baseline, b), mean(m, b)) {
                notes.push(format!("baseline not below {m} in {b}"));
            }
        }
    }
    let chain = [Method::Excellent, Method::Algorithm1, Method::Q, Method::Algorithm2];
    for &b in &DEFAULT_BUCKETS {
        for w in chain.windows(2) {
            if !le(mean(w[0], b), mean(w[1], b) * (1.0 + TREND_SLACK)) {
                notes.push(format!("{} above {} in {b}", w[0], w[1]));
            }
        }
    }
    let bounds: Vec<f64> = DEFAULT_BUCKETS.iter().map(|&b| mean(Method::FairletBound, b)).collect();
    let spread = bounds.iter().fold(0.0f64, |acc, &x| acc.max((x - bounds[0]).abs()));
    if !le(spread, CONSTANT_TOLERANCE * bounds[0]) {
        notes.push(format!("fairlet row varies by {spread}"));
    }

    // Per-record check at k ≥ 6: baseline below every fair method on the same sample.
    let (mut pairs, mut below) = (0, 0);
    for base in records.iter().filter(|r| r.method == Method::Baseline && r.k >= 6) {
        for r in records
            .iter()
            .filter(|r| r.sample_id == base.sample_id && r.k == base.k && r.method.is_fair())
        {
            pairs += 1;
            below += usize::from(base.cost <= r.cost);
        }
    }
    let share = below as f64 / pairs.max(1) as f64;
    if share < 0.95 {
        notes.push(format!(
            "baseline below fair in only {:.1}% of k≥6 records",
            100.0 * share
        ));
    }
    let summary = chain
        .iter()
        .map(|&m| format!("{m} {:.0}", mean(m, DEFAULT_BUCKETS[1])))
        .collect::<Vec<_>>()
        .join(" ≤ ");
    outcome(
        notes.is_empty(),
        format!(
            "k∈[6,10]: kmedian_pp {:.0} < {summary}; fairlet row {:.1}; {}",
            mean(Method::Baseline, DEFAULT_BUCKETS[1]),
            bounds[0],
            if notes.is_empty() {
                "all orderings hold".to_string()
            } else {
                notes.join("; ")
            }
        ),
    )
}

fn determinism() -> Outcome {
    let spec = synthetic_spec(4, 40, 6, 23);
    let mut methods = Method::DEFAULT.to_vec();
    methods.push(Method::FairKcenter);
    let opts = |exec| RunOptions {
        methods: methods.clone(),
        k_min: 2,
        k_max: 8,
        exec,
        ..Default::default()
    };
    let emit = |exec| {
        let mut buf = Vec::new();
        write_csv(&cmd_run(&spec, &opts(exec)).expect("run").records, &mut buf).expect("csv");
        buf
    };
    let first = emit(Exec::Parallel);
    let replay = emit(Exec::Parallel);
    let sequential = emit(Exec::Sequential);

    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("records.csv");
    std::fs::write(&path, &first).expect("write");
    let mut reemitted = Vec::new();
    write_csv(&read_records(&path).expect("read"), &mut reemitted).expect("csv");

    let checks = [
        (first == replay, "replay"),
        (first == sequential, "sequential"),
        (first == reemitted, "round trip"),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.0).map(|c| c.1).collect();
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            format!(
                "{} bytes identical across replay, sequential run and CSV round trip",
                first.len()
            )
        } else {
            format!("differs: {}", failed.join(", "))
        },
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("balance invariant", Duration::from_secs(120), balance_invariant),
        ("matching exactness", Duration::from_secs(30), matching_exactness),
        ("EMD metricity", Duration::from_secs(60), emd_metricity),
        (
            "reduction ratio certificate",
            Duration::from_secs(300),
            reduction_ratios,
        ),
        ("sampled fair n-median", Duration::from_secs(120), fair_median_sampling),
        ("fair k-center existence", Duration::from_secs(180), kcenter_existence),
        ("transport integrality", Duration::from_secs(60), transport_integrality),
        ("two-color optimality", Duration::from_secs(60), two_color_optimality),
        ("trend reproduction", Duration::from_secs(900), trend),
        ("determinism", Duration::MAX, determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut all = true;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let passed = o.passed && in_time;
        all &= passed;
        let time_note = if in_time {
            String::new()
        } else {
            format!(" over budget {budget:?}")
        };
        println!(
            "{} {:>2} {name}: {} [{:.1}s{time_note}]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
