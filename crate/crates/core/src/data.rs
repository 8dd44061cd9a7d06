//! Dataset specs, CSV ingestion, protected-attribute coloring and balanced
//! subsampling.
//!
//! A spec is a TOML file:
//!
//! ```toml
//! name = "adult"
//! subsample_size = 1000
//! num_samples = 100
//! seed = 7
//! feature_columns = ["age", "fnlwgt"]
//!
//! [source]
//! kind = "csv"
//! path = "data/adult.csv"
//!
//! [[protected]]
//! column = "sex"
//! rule = "membership"
//! zero = ["Female"]
//! one = ["Male"]
//! ```
//!
//! `k` protected columns yield `2^k` colors: bit `b` of a row's color is the
//! label of the `b`-th protected column.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::ColoredDataset;
use crate::error::{FairError, Result};
use crate::exec::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    /// Numeric: `< threshold` is side 0, `>= threshold` side 1.
    Threshold { threshold: f64 },
    /// Categorical: values in `zero` are side 0, values in `one` side 1.
    /// Without `one`, every value outside `zero` is side 1. Rows matching
    /// neither side are dropped.
    Membership {
        zero: Vec<String>,
        #[serde(default)]
        one: Option<Vec<String>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectedAttribute {
    pub column: String,
    #[serde(flatten)]
    pub rule: Rule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub colors: usize,
    /// Pool size per color, before subsampling.
    pub points_per_color: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_components")]
    pub components: usize,
    /// Standard deviation of every mixture component.
    #[serde(default = "default_spread")]
    pub spread: f64,
    /// Component means are uniform in `[0, box_size]^dim`.
    #[serde(default = "default_box")]
    pub box_size: f64,
}

fn default_dim() -> usize {
    2
}
fn default_components() -> usize {
    6
}
fn default_spread() -> f64 {
    1.0
}
fn default_box() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Csv { path: PathBuf },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub source: Source,
    #[serde(default)]
    pub feature_columns: Vec<String>,
    #[serde(default)]
    pub protected: Vec<ProtectedAttribute>,
    pub subsample_size: usize,
    pub num_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Min-max scale every feature to `[0,1]` before sampling.
    #[serde(default)]
    pub normalize: bool,
}

impl DatasetSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: DatasetSpec = toml::from_str(text).map_err(|e| FairError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a spec; relative CSV paths resolve against the spec's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut spec = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let Source::Csv { path: csv } = &mut spec.source {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.subsample_size == 0 || self.num_samples == 0 {
            return Err(FairError::InvalidArgument(
                "subsample_size and num_samples must be >= 1".into(),
            ));
        }
        match &self.source {
            Source::Csv { .. } => {
                if self.feature_columns.is_empty() {
                    return Err(FairError::InvalidArgument("no feature columns".into()));
                }
                if !(1..=3).contains(&self.protected.len()) {
                    return Err(FairError::InvalidArgument(format!(
                        "need 1 to 3 protected columns, got {}",
                        self.protected.len()
                    )));
                }
            }
            Source::Synthetic(s) => {
                if s.colors == 0 || s.points_per_color == 0 || s.dim == 0 || s.components == 0 {
                    return Err(FairError::InvalidArgument("synthetic sizes must be >= 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn num_colors(&self) -> usize {
        match &self.source {
            Source::Csv { .. } => 1 << self.protected.len(),
            Source::Synthetic(s) => s.colors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based data row (the header is row 0).
    pub row: usize,
    pub reason: String,
}

/// Selected columns of a CSV after parsing and deduplication.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawTable {
    pub features: Vec<Vec<f64>>,
    /// `protected[r][a]` is the raw value of protected column `a` in row `r`.
    pub protected: Vec<Vec<String>>,
    pub rejected: Vec<Rejection>,
    pub duplicates: usize,
}

pub fn load_csv(spec: &DatasetSpec) -> Result<RawTable> {
    let Source::Csv { path } = &spec.source else {
        return Err(FairError::InvalidArgument("spec source is not a CSV file".into()));
    };
    let file = std::fs::File::open(path).map_err(|e| FairError::Io(format!("{}: {e}", path.display())))?;
    read_csv(file, &spec.feature_columns, &spec.protected)
}

/// Parses CSV text from any reader. Rows with a missing or non-numeric
/// feature are rejected; exact duplicates of the selected columns dropped.
pub fn read_csv<R: std::io::Read>(
    reader: R,
    features: &[String],
    protected: &[ProtectedAttribute],
) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| FairError::MissingColumn(name.to_string()))
    };
    let fcols = features.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
    let pcols = protected.iter().map(|p| find(&p.column)).collect::<Result<Vec<_>>>()?;
    let mut table = RawTable::default();
    let mut seen: HashSet<(Vec<u64>, Vec<String>)> = HashSet::new();
    for (r, record) in rdr.records().enumerate() {
        let row = r + 1;
        let record = record?;
        let mut values = Vec::with_capacity(fcols.len());
        let mut bad = None;
        for (&c, name) in fcols.iter().zip(features) {
            match record.get(c).filter(|s| !s.is_empty()) {
                None => {
                    bad = Some(format!("missing value for `{name}`"));
                    break;
                }
                Some(s) => match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => values.push(v),
                    _ => {
                        bad = Some(format!("non-numeric value `{s}` for `{name}`"));
                        break;
                    }
                },
            }
        }
        if let Some(reason) = bad {
            table.rejected.push(Rejection { row, reason });
            continue;
        }
        let prot: Vec<String> = pcols.iter().map(|&c| record.get(c).unwrap_or("").to_string()).collect();
        let key = (values.iter().map(|v| v.to_bits()).collect(), prot.clone());
        if !seen.insert(key) {
            table.duplicates += 1;
            continue;
        }
        table.features.push(values);
        table.protected.push(prot);
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dichotomy {
    /// `None` for rows matching neither side.
    pub labels: Vec<Option<u8>>,
    pub dropped: usize,
}

pub fn dichotomize(column: &str, values: &[String], rule: &Rule) -> Result<Dichotomy> {
    let labels: Vec<Option<u8>> = values
        .iter()
        .map(|v| match rule {
            Rule::Threshold { threshold } => v.parse::<f64>().ok().map(|x| u8::from(x >= *threshold)),
            Rule::Membership { zero, one } => {
                if zero.contains(v) {
                    Some(0)
                } else {
                    match one {
                        Some(one) => one.contains(v).then_some(1),
                        None => Some(1),
                    }
                }
            }
        })
        .collect();
    for side in 0..2u8 {
        if !labels.contains(&Some(side)) {
            return Err(FairError::EmptySide {
                column: column.to_string(),
                side,
            });
        }
    }
    let dropped = labels.iter().filter(|l| l.is_none()).count();
    Ok(Dichotomy { labels, dropped })
}

/// Feature rows with their color labels, before subsampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColoredTable {
    pub rows: Vec<Vec<f64>>,
    pub colors: Vec<usize>,
    pub num_colors: usize,
    /// Rows dropped by dichotomization.
    pub dropped: usize,
    pub rejected: Vec<Rejection>,
    pub duplicates: usize,
}

impl ColoredTable {
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_colors];
        self.colors.iter().for_each(|&c| sizes[c] += 1);
        sizes
    }

    /// Min-max scales each feature to `[0,1]`; constant features become 0.
    pub fn normalize(&mut self) {
        let Some(dim) = self.rows.first().map(Vec::len) else {
            return;
        };
        for a in 0..dim {
            let (lo, hi) = self
                .rows
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r[a]), hi.max(r[a]))
                });
            let span = hi - lo;
            for r in &mut self.rows {
                r[a] = if span > 0.0 { (r[a] - lo) / span } else { 0.0 };
            }
        }
    }
}

/// Colors a raw table: bit `b` of the color is the label of protected
/// attribute `b`.
pub fn color_table(raw: RawTable, protected: &[ProtectedAttribute]) -> Result<ColoredTable> {
    let mut labels = vec![0usize; raw.features.len()];
    let mut keep = vec![true; raw.features.len()];
    for (b, attr) in protected.iter().enumerate() {
        let values: Vec<String> = raw.protected.iter().map(|r| r[b].clone()).collect();
        let d = dichotomize(&attr.column, &values, &attr.rule)?;
        for (r, l) in d.labels.into_iter().enumerate() {
            match l {
                Some(bit) => labels[r] |= usize::from(bit) << b,
                None => keep[r] = false,
            }
        }
    }
    let dropped = keep.iter().filter(|k| !**k).count();
    let (rows, colors) = raw
        .features
        .into_iter()
        .zip(labels)
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(rc, _)| rc)
        .unzip();
    Ok(ColoredTable {
        rows,
        colors,
        num_colors: 1 << protected.len(),
        dropped,
        rejected: raw.rejected,
        duplicates: raw.duplicates,
    })
}

/// Gaussian mixture pool in which every color draws components with its
/// own weights, so color classes are spatially skewed.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<ColoredTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.spread).map_err(|e| FairError::InvalidArgument(e.to_string()))?;
    let means: Vec<Vec<f64>> = (0..spec.components)
        .map(|_| (0..spec.dim).map(|_| rng.random::<f64>() * spec.box_size).collect())
        .collect();
    let mut rows = Vec::with_capacity(spec.colors * spec.points_per_color);
    let mut colors = Vec::with_capacity(rows.capacity());
    for c in 0..spec.colors {
        let weights: Vec<f64> = (0..spec.components).map(|_| rng.random::<f64>().powi(3)).collect();
        let total: f64 = weights.iter().sum();
        for _ in 0..spec.points_per_color {
            let mut u = rng.random::<f64>() * total;
            let mut m = spec.components - 1;
            for (j, w) in weights.iter().enumerate() {
                if u < *w {
                    m = j;
                    break;
                }
                u -= w;
            }
            rows.push(means[m].iter().map(|mu| mu + noise.sample(&mut rng)).collect());
            colors.push(c);
        }
    }
    Ok(ColoredTable {
        rows,
        colors,
        num_colors: spec.colors,
        dropped: 0,
        rejected: Vec::new(),
        duplicates: 0,
    })
}

/// Loads (or generates) and colors the full pool described by `spec`.
pub fn prepare(spec: &DatasetSpec) -> Result<ColoredTable> {
    spec.validate()?;
    let mut table = match &spec.source {
        Source::Csv { .. } => color_table(load_csv(spec)?, &spec.protected)?,
        Source::Synthetic(s) => generate_synthetic(s, spec.seed)?,
    };
    if spec.normalize {
        table.normalize();
    }
    Ok(table)
}

/// Uniform sample without replacement of `size / ℓ` rows per color.
pub fn balanced_subsample(table: &ColoredTable, size: usize, seed: u64) -> Result<ColoredDataset> {
    let ell = table.num_colors;
    if ell == 0 || size == 0 || !size.is_multiple_of(ell) {
        return Err(FairError::InvalidArgument(format!(
            "sample size {size} is not a positive multiple of {ell} colors"
        )));
    }
    let per = size / ell;
    let mut by_color = vec![Vec::new(); ell];
    for (r, &c) in table.colors.iter().enumerate() {
        by_color[c].push(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(size);
    let mut colors = Vec::with_capacity(size);
    for (c, members) in by_color.iter().enumerate() {
        if members.len() < per {
            return Err(FairError::InsufficientRows {
                color: c,
                needed: per,
                available: members.len(),
            });
        }
        let mut picked: Vec<usize> = sample(&mut rng, members.len(), per)
            .into_iter()
            .map(|m| members[m])
            .collect();
        picked.sort_unstable();
        for r in picked {
            rows.push(table.rows[r].clone());
            colors.push(c);
        }
    }
    ColoredDataset::from_rows(rows, colors)
}

/// Sample `s` of a spec, seeded by `(spec.seed, s)`.
pub fn sample_of(spec: &DatasetSpec, table: &ColoredTable, s: usize) -> Result<ColoredDataset> {
    balanced_subsample(table, spec.subsample_size, derive_seed(spec.seed, s as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    fn threshold(column: &str, t: f64) -> ProtectedAttribute {
        ProtectedAttribute {
            column: column.into(),
            rule: Rule::Threshold { threshold: t },
        }
    }

    #[test]
    fn header_only_is_empty() {
        let t = read_csv("a,b\n".as_bytes(), &s(&["a"]), &[threshold("b", 1.0)]).unwrap();
        assert!(t.features.is_empty());
    }

    #[test]
    fn missing_and_bad_values_rejected() {
        let text = "a,b,g\n1,2,x\n,3,y\nfoo,1,x\n1,2,x\n4,5,y\n";
        let t = read_csv(text.as_bytes(), &s(&["a", "b"]), &[threshold("g", 0.0)]).unwrap();
        assert_eq!(t.features, vec![vec![1., 2.], vec![4., 5.]]);
        assert_eq!(t.rejected.iter().map(|r| r.row).collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(t.duplicates, 1);
        assert!(matches!(
            read_csv(text.as_bytes(), &s(&["zzz"]), &[]),
            Err(FairError::MissingColumn(c)) if c == "zzz"
        ));
    }

    #[test]
    fn dichotomize_rules() {
        let ages = s(&["23", "50", "71", "49"]);
        let d = dichotomize("age", &ages, &Rule::Threshold { threshold: 50.0 }).unwrap();
        assert_eq!(d.labels, vec![Some(0), Some(1), Some(1), Some(0)]);

        let edu = s(&["Graduate School", "University", "High School", "University"]);
        let rule = Rule::Membership {
            zero: s(&["Graduate School"]),
            one: Some(s(&["University"])),
        };
        let d = dichotomize("education", &edu, &rule).unwrap();
        assert_eq!(d.labels, vec![Some(0), Some(1), None, Some(1)]);
        assert_eq!(d.dropped, 1);

        let flat = s(&["3", "3"]);
        assert!(matches!(
            dichotomize("x", &flat, &Rule::Threshold { threshold: 1.0 }),
            Err(FairError::EmptySide { side: 0, .. })
        ));
    }

    #[test]
    fn three_attributes_give_eight_colors() {
        let mut text = String::from("age,fnlwgt,education-num,capital-gain,hours-per-week,sex,race,old\n");
        for i in 0..16 {
            let sex = if i % 2 == 0 { "Male" } else { "Female" };
            let race = if (i / 2) % 2 == 0 { "White" } else { "Black" };
            text.push_str(&format!(
                "{},{},{},{},{},{sex},{race},{}\n",
                20 + i,
                1000 + i,
                9,
                0,
                40,
                40 + 5 * (i / 4)
            ));
        }
        let prot = vec![
            ProtectedAttribute {
                column: "sex".into(),
                rule: Rule::Membership {
                    zero: s(&["Female"]),
                    one: Some(s(&["Male"])),
                },
            },
            ProtectedAttribute {
                column: "race".into(),
                rule: Rule::Membership {
                    zero: s(&["White"]),
                    one: None,
                },
            },
            threshold("old", 50.0),
        ];
        let feats = s(&["age", "fnlwgt", "education-num", "capital-gain", "hours-per-week"]);
        let raw = read_csv(text.as_bytes(), &feats, &prot).unwrap();
        let t = color_table(raw, &prot).unwrap();
        assert_eq!(t.num_colors, 8);
        assert_eq!(t.class_sizes(), vec![2; 8]);
        assert_eq!(t.rows[0].len(), 5);
    }

    fn pool() -> ColoredTable {
        generate_synthetic(
            &SyntheticSpec {
                colors: 8,
                points_per_color: 200,
                dim: 2,
                components: 4,
                spread: 1.0,
                box_size: 20.0,
            },
            1,
        )
        .unwrap()
    }

    #[test]
    fn subsample_sizes() {
        let t = pool();
        let one = balanced_subsample(&t, 8, 0).unwrap();
        assert_eq!(one.len(), 8);
        assert!(one.is_balanced());
        let big = balanced_subsample(&t, 1000, 3).unwrap();
        assert_eq!(big.class(7).len(), 125);
        assert_eq!(balanced_subsample(&t, 1000, 3).unwrap(), big);
        assert!(balanced_subsample(&t, 12, 0).is_err());
        assert!(matches!(
            balanced_subsample(&t, 8 * 201, 0),
            Err(FairError::InsufficientRows { color: 0, .. })
        ));
    }

    #[test]
    fn spec_round_trip() {
        let text = r#"
name = "toy"
subsample_size = 16
num_samples = 3
seed = 9
feature_columns = ["a"]

[source]
kind = "csv"
path = "toy.csv"

[[protected]]
column = "age"
rule = "threshold"
threshold = 50.0

[[protected]]
column = "sex"
rule = "membership"
zero = ["F"]
"#;
        let spec = DatasetSpec::from_toml(text).unwrap();
        assert_eq!(spec.num_colors(), 4);
        assert_eq!(spec.protected[0].rule, Rule::Threshold { threshold: 50.0 });
        let back = DatasetSpec::from_toml(&toml::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn normalize_to_unit_box() {
        let mut t = pool();
        t.normalize();
        for a in 0..2 {
            let lo = t.rows.iter().map(|r| r[a]).fold(f64::INFINITY, f64::min);
            let hi = t.rows.iter().map(|r| r[a]).fold(f64::NEG_INFINITY, f64::max);
            assert_eq!((lo, hi), (0.0, 1.0));
        }
    }
}
