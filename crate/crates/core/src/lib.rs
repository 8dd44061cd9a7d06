//! Fair `(k,p,q)`-clustering: every cluster must hold the same number of
//! points of each color.
//!
//! The main entry points are the reductions in [`fair_reduce`], which
//! cluster a single color with an ordinary solver and relay the other
//! colors through min-cost perfect matchings, and [`fair_center`] for the
//! `p = ∞` case. [`oracle`] has exhaustive solvers for tiny instances.

pub mod assignment;
pub mod clustering;
pub mod data;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod fair_center;
pub mod fair_reduce;
pub mod matching;
pub mod norm;
pub mod oracle;
pub mod solvers;

pub use clustering::{verify_balance, BalanceReport, CenterSet, Centers, FairClustering};
pub use dataset::{ColoredDataset, DistanceMatrix, VectorPoint};
pub use error::{FairError, Result};
pub use exec::Exec;
pub use matching::{EmdMode, EmdTable};
pub use norm::{Exponent, NormSpec};
pub use solvers::{SolverAlgorithm, SolverConfig};
