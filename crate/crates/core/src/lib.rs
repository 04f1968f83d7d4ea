//! Nonparametric rank-based tests for factorial repeated-measures designs
//! with missing values.
//!
//! Three quadratic-form statistics are provided, the Wald-type (WTS),
//! ANOVA-type (ATS) and modified ANOVA-type (MATS) statistic, each calibrated
//! by a wild bootstrap of the centered rank vectors. A data generator and a
//! Monte Carlo harness reproduce type-I error and power studies.

pub mod analysis;
pub mod bootstrap;
pub mod cli;
pub mod contrasts;
pub mod covariance;
pub mod datagen;
pub mod data;
pub mod error;
pub mod harness;
pub mod io;
pub mod numerics;
pub mod precise;
pub mod ranking;
pub mod seed;
pub mod statistics;

pub use analysis::Analysis;
pub use bootstrap::{bootstrap_pvalue, bootstrap_tests, BootstrapConfig, StatReport, TestReport};
pub use contrasts::{hypothesis_matrix, ContrastSpec, HypothesisKind};
pub use data::{CellCounts, GroupData, IncompleteDataset, ValidatedDataset};
pub use error::{Error, Result};
pub use statistics::{StatKind, StatValue};
