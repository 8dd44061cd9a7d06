//! Aggregation of run records into mean/std per method and k-bucket.
//!
//! Standard deviations use the population convention (divide by the count).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use fairclust::{FairError, Result};
use serde::{Deserialize, Serialize};

use crate::run::{Method, Record};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: usize,
    pub hi: usize,
}

impl Bucket {
    pub fn contains(self, k: usize) -> bool {
        (self.lo..=self.hi).contains(&k)
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

impl FromStr for Bucket {
    type Err = FairError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || FairError::Parse(format!("bucket `{s}` is not LO-HI"));
        let (lo, hi) = s.split_once('-').ok_or_else(bad)?;
        let lo = lo.trim().parse().map_err(|_| bad())?;
        let hi = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        Ok(Bucket { lo, hi })
    }
}

pub const DEFAULT_BUCKETS: [Bucket; 3] = [
    Bucket { lo: 2, hi: 5 },
    Bucket { lo: 6, hi: 10 },
    Bucket { lo: 11, hi: 20 },
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: Method,
    pub bucket: String,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub std_convention: String,
    pub buckets: Vec<Bucket>,
    pub cells: Vec<Cell>,
}

impl Table {
    pub fn get(&self, method: Method, bucket: Bucket) -> Option<&Cell> {
        let name = bucket.to_string();
        self.cells.iter().find(|c| c.method == method && c.bucket == name)
    }
}

/// Mean and population standard deviation. Values are sorted first so the
/// result does not depend on input order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Groups successful records by method and bucket. Records with `k` outside
/// every bucket are ignored.
pub fn cmd_table(records: &[Record], buckets: &[Bucket]) -> Result<Table> {
    let mut groups: BTreeMap<(Method, Bucket), Vec<f64>> = BTreeMap::new();
    for r in records {
        let Some(cost) = r.cost else { continue };
        for &b in buckets {
            if b.contains(r.k) {
                groups.entry((r.method, b)).or_default().push(cost);
            }
        }
    }
    if groups.is_empty() {
        return Err(FairError::InvalidArgument("no records to aggregate".into()));
    }
    let cells = groups
        .into_iter()
        .map(|((method, bucket), costs)| {
            let (mean, std) = mean_std(&costs);
            Cell {
                method,
                bucket: bucket.to_string(),
                count: costs.len(),
                mean,
                std,
            }
        })
        .collect();
    Ok(Table {
        std_convention: "population".into(),
        buckets: buckets.to_vec(),
        cells,
    })
}
