//! Wild bootstrap of centered rank vectors.
//!
//! Each replicate multiplies every subject's centered rank vector `Z_ik` by an
//! independent Rademacher sign `W_ik`, recomputes `p̂*`, `V̂*_n` and `D̂*_n`, and
//! evaluates the starred statistics. The p-value of an observed statistic `T`
//! is `#{b : T*_b ≥ T} / B`.
//!
//! Replicate `b` draws its signs from stream `b` of the configured seed, so the
//! replicate sequence is the same whether it is computed serially or on any
//! number of threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::Analysis;
use crate::contrasts::ContrastSpec;
use crate::covariance::{self, CovarianceEstimate};
use crate::data::{CellCounts, ValidatedDataset};
use crate::error::{Error, Result};
use crate::ranking::CenteredRanks;
use crate::seed;
use crate::statistics::{self, StatKind, StatValue};

pub const DEFAULT_REPLICATES: usize = 999;

/// Threshold on `‖T p̂‖` below which an observed statistic with a degenerate
/// studentizer is reported as zero.
const NULL_EFFECT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    pub statistics: Vec<StatKind>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: DEFAULT_REPLICATES,
            seed: 1,
            statistics: StatKind::ALL.to_vec(),
        }
    }
}

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            ..Self::default()
        }
    }

    pub fn with_statistics(mut self, statistics: &[StatKind]) -> Self {
        self.statistics = statistics.to_vec();
        self
    }

    fn check(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidDesign("at least one bootstrap replicate is required".into()));
        }
        Ok(())
    }
}

/// Rademacher signs, one per subject, per group.
pub fn draw_weights(group_sizes: &[usize], rng: &mut impl Rng) -> Vec<Vec<f64>> {
    group_sizes
        .iter()
        .map(|&ni| {
            (0..ni)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect()
        })
        .collect()
}

/// Weights of replicate `index` under `seed`.
pub fn replicate_weights(group_sizes: &[usize], seed: u64, index: usize) -> Vec<Vec<f64>> {
    draw_weights(group_sizes, &mut seed::stream(seed, index as u64))
}

fn starred(z: &CenteredRanks, weights: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = z.occasions();
    (0..z.groups())
        .map(|i| {
            z.group_values(i)
                .iter()
                .enumerate()
                .map(|(pos, &v)| weights[i][pos / d] * v)
                .collect()
        })
        .collect()
}

/// `p̂*_ij = (1/λ_ij.) Σ_k λ_ijk W_ik Z_ijk / N`.
pub fn bootstrap_effects(z: &CenteredRanks, counts: &CellCounts, weights: &[Vec<f64>]) -> Vec<f64> {
    let d = z.occasions();
    let nn = counts.total_observed() as f64;
    let mut p = vec![0.0; z.groups() * d];
    for i in 0..z.groups() {
        let values = z.group_values(i);
        let mask = z.group_mask(i);
        for (pos, (&v, &m)) in values.iter().zip(mask).enumerate() {
            if m {
                p[i * d + pos % d] += weights[i][pos / d] * v;
            }
        }
        for j in 0..d {
            p[i * d + j] /= counts.lambda(i, j) as f64 * nn;
        }
    }
    p
}

/// `V̂*_n` and `D̂*_n` from `Z* = W Z`, using the same estimator as the data.
pub fn bootstrap_covariance(
    z: &CenteredRanks,
    counts: &CellCounts,
    weights: &[Vec<f64>],
) -> CovarianceEstimate {
    let zs = starred(z, weights);
    covariance::estimate_from(
        zs.iter().enumerate().map(|(i, v)| (v.as_slice(), z.group_mask(i))),
        counts,
    )
}

/// Starred statistics of one replicate; `None` marks a degenerate studentizer.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReplicateStats {
    pub wts: Option<f64>,
    pub ats: Option<f64>,
    pub mats: Option<f64>,
}

impl ReplicateStats {
    pub fn get(&self, kind: StatKind) -> Option<f64> {
        match kind {
            StatKind::Wts => self.wts,
            StatKind::Ats => self.ats,
            StatKind::Mats => self.mats,
        }
    }
}

pub fn bootstrap_statistics(
    p_star: &[f64],
    cov_star: &CovarianceEstimate,
    contrast: &ContrastSpec,
    n: usize,
    kinds: &[StatKind],
) -> Result<ReplicateStats> {
    let mut out = ReplicateStats::default();
    for &kind in kinds {
        let v = match kind {
            StatKind::Wts => statistics::wts_value(p_star, &cov_star.vn, contrast, n),
            StatKind::Ats => statistics::ats_value(p_star, &cov_star.vn, contrast, n).map(|(v, _)| v),
            StatKind::Mats => statistics::mats_value(p_star, &cov_star.dn, contrast, n),
        };
        let v = match v {
            Ok(v) => Some(v),
            Err(Error::DegenerateTrace(_)) | Err(Error::ZeroDiagonal { .. }) => None,
            Err(e) => return Err(e),
        };
        match kind {
            StatKind::Wts => out.wts = v,
            StatKind::Ats => out.ats = v,
            StatKind::Mats => out.mats = v,
        }
    }
    Ok(out)
}

/// All `B` replicates for several contrasts at once; replicate `b` uses the
/// same signs for every contrast and statistic.
pub fn replicate_all(
    analysis: &Analysis,
    contrasts: &[ContrastSpec],
    config: &BootstrapConfig,
) -> Result<Vec<Vec<ReplicateStats>>> {
    config.check()?;
    let sizes = analysis.counts.group_sizes().to_vec();
    let n = analysis.n();
    let per_replicate: Vec<Vec<ReplicateStats>> = (0..config.replicates)
        .into_par_iter()
        .with_min_len(16)
        .map(|b| {
            let w = replicate_weights(&sizes, config.seed, b);
            let p_star = bootstrap_effects(&analysis.centered, &analysis.counts, &w);
            let cov_star = bootstrap_covariance(&analysis.centered, &analysis.counts, &w);
            contrasts
                .iter()
                .map(|c| bootstrap_statistics(&p_star, &cov_star, c, n, &config.statistics))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    // transpose to contrast-major
    let mut out = vec![Vec::with_capacity(config.replicates); contrasts.len()];
    for rep in per_replicate {
        for (h, s) in rep.into_iter().enumerate() {
            out[h].push(s);
        }
    }
    Ok(out)
}

/// `#{b : T*_b ≥ T} / B`, with degenerate replicates counted as `T*_b = 0`.
pub fn pvalue(observed: f64, replicates: impl IntoIterator<Item = Option<f64>>) -> f64 {
    let mut b = 0usize;
    let mut hits = 0usize;
    for t in replicates {
        b += 1;
        if t.unwrap_or(0.0) >= observed {
            hits += 1;
        }
    }
    hits as f64 / b as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub statistic: StatKind,
    /// `None` when the observed studentizer is degenerate and the effect is not null.
    pub value: Option<f64>,
    pub dof: Option<f64>,
    pub p_asymptotic: Option<f64>,
    pub p_bootstrap: Option<f64>,
    pub degenerate_replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub hypothesis: String,
    pub contrast_rank: usize,
    pub replicates: usize,
    pub seed: u64,
    pub statistics: Vec<StatReport>,
    pub warnings: Vec<String>,
}

impl TestReport {
    pub fn get(&self, kind: StatKind) -> Option<&StatReport> {
        self.statistics.iter().find(|s| s.statistic == kind)
    }
}

/// Observed statistic, falling back to zero when the studentizer is
/// degenerate but the contrasted effect vanishes.
fn observed(
    analysis: &Analysis,
    kind: StatKind,
    contrast: &ContrastSpec,
    warnings: &mut Vec<String>,
) -> Result<Option<StatValue>> {
    match analysis.statistic(kind, contrast) {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::DegenerateTrace(_) | Error::ZeroDiagonal { .. })) => {
            let tp = contrast.projection() * nalgebra::DVector::from_column_slice(analysis.effects.as_slice());
            if tp.norm() <= NULL_EFFECT_TOL {
                warnings.push(format!("{kind}: {e}; contrasted effects are zero, statistic set to 0"));
                Ok(Some(StatValue {
                    kind,
                    value: 0.0,
                    dof: None,
                    p_asymptotic: match kind {
                        StatKind::Mats => None,
                        _ => Some(1.0),
                    },
                }))
            } else {
                warnings.push(format!("{kind}: {e}; statistic unavailable"));
                Ok(None)
            }
        }
        Err(e) => Err(e),
    }
}

/// Observed statistics and wild bootstrap p-values for several hypotheses.
pub fn bootstrap_tests(
    analysis: &Analysis,
    contrasts: &[ContrastSpec],
    config: &BootstrapConfig,
) -> Result<Vec<TestReport>> {
    for c in contrasts {
        if c.columns() != analysis.effects.len() {
            return Err(Error::DimensionMismatch(format!(
                "contrast `{}` has {} columns, design has {} cells",
                c.label,
                c.columns(),
                analysis.effects.len()
            )));
        }
    }
    let reps = replicate_all(analysis, contrasts, config)?;
    let mut reports = Vec::with_capacity(contrasts.len());
    for (contrast, reps) in contrasts.iter().zip(reps) {
        let mut warnings: Vec<String> = analysis
            .covariance
            .degenerate
            .iter()
            .map(|e| {
                format!(
                    "covariance entry (group {}, occasions {},{}) has a non-positive denominator; set to 0",
                    e.group + 1,
                    e.occasion + 1,
                    e.other + 1
                )
            })
            .collect();
        let mut stats = Vec::with_capacity(config.statistics.len());
        for &kind in &config.statistics {
            let obs = observed(analysis, kind, contrast, &mut warnings)?;
            let degenerate = reps.iter().filter(|r| r.get(kind).is_none()).count();
            if degenerate > 0 {
                warnings.push(format!(
                    "{kind}: {degenerate} of {} bootstrap replicates were degenerate and counted as 0",
                    config.replicates
                ));
            }
            stats.push(StatReport {
                statistic: kind,
                value: obs.map(|o| o.value),
                dof: obs.and_then(|o| o.dof),
                p_asymptotic: obs.and_then(|o| o.p_asymptotic),
                p_bootstrap: obs.map(|o| pvalue(o.value, reps.iter().map(|r| r.get(kind)))),
                degenerate_replicates: degenerate,
            });
        }
        reports.push(TestReport {
            hypothesis: contrast.label.clone(),
            contrast_rank: contrast.rank(),
            replicates: config.replicates,
            seed: config.seed,
            statistics: stats,
            warnings,
        });
    }
    Ok(reports)
}

/// Wild bootstrap test of one hypothesis.
pub fn bootstrap_pvalue(
    data: &ValidatedDataset,
    contrast: &ContrastSpec,
    config: &BootstrapConfig,
) -> Result<TestReport> {
    let analysis = Analysis::new(data);
    let mut r = bootstrap_tests(&analysis, std::slice::from_ref(contrast), config)?;
    Ok(r.remove(0))
}
