//! Synthetic repeated-measures data for calibration and power studies.
//!
//! Continuous data come from a Gaussian copula: a multivariate normal draw
//! with the standardized covariance setting is pushed through `Φ` and then
//! through the inverse CDF of the chosen marginal. Ordinal data use
//! `int(4 (c Z_ik + Y_ijk) / (c + 1)) + 1` with uniform `Z`, `Y`.
//!
//! Missingness injectors only remove entries; observed values are never
//! altered. Pipelines apply shifts before missingness.

use nalgebra::Cholesky;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use crate::data::{GroupData, IncompleteDataset};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Correlation parameter of the autoregressive setting.
pub const AR_RHO: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginal {
    Normal,
    /// Laplace with location 0 and scale 1.
    DoubleExponential,
    /// `exp(N(0, 1))`.
    Lognormal,
    /// χ² with 15 degrees of freedom.
    Chisq15,
    Ordinal { c: f64 },
}

impl Marginal {
    pub fn name(&self) -> String {
        match self {
            Marginal::Normal => "normal".into(),
            Marginal::DoubleExponential => "double_exponential".into(),
            Marginal::Lognormal => "lognormal".into(),
            Marginal::Chisq15 => "chisq15".into(),
            Marginal::Ordinal { c } => format!("ordinal(c={c})"),
        }
    }

    /// Maps a standard normal coordinate to this marginal via `F⁻¹(Φ(z))`.
    fn quantile_of_normal(&self, z: f64) -> f64 {
        match self {
            Marginal::Normal => z,
            Marginal::Lognormal => z.exp(),
            Marginal::DoubleExponential => {
                // evaluate the tail on the side with precision
                if z < 0.0 {
                    (2.0 * std_normal_cdf(z)).ln()
                } else {
                    -(2.0 * std_normal_cdf(-z)).ln()
                }
            }
            Marginal::Chisq15 => {
                let u = std_normal_cdf(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
                ChiSquared::new(15.0).expect("valid dof").inverse_cdf(u)
            }
            Marginal::Ordinal { .. } => unreachable!("ordinal data are not copula-generated"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceSetting {
    /// `ρ^|l-j|` with `ρ = 0.6`.
    Ar,
    /// Identity.
    Cs,
    /// `d - |l-j|`.
    Toeplitz,
}

impl CovarianceSetting {
    pub fn name(self) -> &'static str {
        match self {
            CovarianceSetting::Ar => "ar",
            CovarianceSetting::Cs => "cs",
            CovarianceSetting::Toeplitz => "toeplitz",
        }
    }
}

pub fn covariance_setting(kind: CovarianceSetting, d: usize) -> Matrix {
    Matrix::from_fn(d, d, |l, j| {
        let lag = l.abs_diff(j);
        match kind {
            CovarianceSetting::Ar => AR_RHO.powi(lag as i32),
            CovarianceSetting::Cs => f64::from(u8::from(lag == 0)),
            CovarianceSetting::Toeplitz => (d - lag) as f64,
        }
    })
}

/// Standardizes a covariance matrix to a correlation matrix.
pub fn to_correlation(cov: &Matrix) -> Matrix {
    let s: Vec<f64> = cov.diagonal().iter().map(|v| v.sqrt()).collect();
    Matrix::from_fn(cov.nrows(), cov.ncols(), |l, j| cov[(l, j)] / (s[l] * s[j]))
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub marginal: Marginal,
    pub covariance: CovarianceSetting,
    pub group_sizes: Vec<usize>,
    pub d: usize,
    /// Per-group location shift `μ₁`; empty means no shift.
    #[serde(default)]
    pub shifts: Vec<Vec<f64>>,
}

impl GeneratorSpec {
    pub fn new(marginal: Marginal, covariance: CovarianceSetting, group_sizes: &[usize], d: usize) -> Self {
        Self {
            marginal,
            covariance,
            group_sizes: group_sizes.to_vec(),
            d,
            shifts: Vec::new(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.d == 0 || self.group_sizes.is_empty() || self.group_sizes.contains(&0) {
            return Err(Error::InvalidDesign("generator needs d ≥ 1 and nonempty groups".into()));
        }
        if !self.shifts.is_empty() {
            if self.shifts.len() != self.group_sizes.len() {
                return Err(Error::DimensionMismatch("one shift vector per group is required".into()));
            }
            if self.shifts.iter().any(|s| s.len() != self.d) {
                return Err(Error::DimensionMismatch("shift vectors must have length d".into()));
            }
        }
        Ok(())
    }
}

/// Draws a fully observed dataset (copula or ordinal model), then applies the
/// configured shifts.
pub fn generate(spec: &GeneratorSpec, rng: &mut impl Rng) -> Result<IncompleteDataset> {
    spec.check()?;
    let mut data = match spec.marginal {
        Marginal::Ordinal { c } => ordinal_sample(c, &spec.group_sizes, spec.d, rng)?,
        _ => copula_sample(spec, rng)?,
    };
    for (i, mu) in spec.shifts.iter().enumerate() {
        data = shift_alternative(&data, i, mu)?;
    }
    Ok(data)
}

/// Gaussian-copula draw with the configured marginal and covariance setting.
/// Shifts are not applied here.
pub fn copula_sample(spec: &GeneratorSpec, rng: &mut impl Rng) -> Result<IncompleteDataset> {
    let d = spec.d;
    let corr = to_correlation(&covariance_setting(spec.covariance, d));
    let chol = Cholesky::new(corr).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let mut groups = Vec::with_capacity(spec.group_sizes.len());
    let mut e = vec![0.0; d];
    for &ni in &spec.group_sizes {
        let mut rows = Vec::with_capacity(ni);
        for _ in 0..ni {
            for x in e.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            let row: Vec<f64> = (0..d)
                .map(|j| {
                    let z: f64 = (0..=j).map(|m| l[(j, m)] * e[m]).sum();
                    spec.marginal.quantile_of_normal(z)
                })
                .collect();
            rows.push(row);
        }
        groups.push(GroupData::complete(d, &rows)?);
    }
    IncompleteDataset::new(d, groups)
}

/// Ordinal scores in {1, 2, 3, 4}; `Z_ik` is shared by a subject's occasions.
pub fn ordinal_sample(c: f64, group_sizes: &[usize], d: usize, rng: &mut impl Rng) -> Result<IncompleteDataset> {
    if !(c >= 0.0) {
        return Err(Error::InvalidDesign(format!("ordinal constant c must be ≥ 0, got {c}")));
    }
    let mut groups = Vec::with_capacity(group_sizes.len());
    for &ni in group_sizes {
        let mut rows = Vec::with_capacity(ni);
        for _ in 0..ni {
            let z: f64 = rng.random();
            let row: Vec<f64> = (0..d)
                .map(|_| {
                    let y: f64 = rng.random();
                    (4.0 * (c * z + y) / (c + 1.0)).floor() + 1.0
                })
                .collect();
            rows.push(row);
        }
        groups.push(GroupData::complete(d, &rows)?);
    }
    IncompleteDataset::new(d, groups)
}

/// Adds `mu` to every observed value of group `group`.
pub fn shift_alternative(data: &IncompleteDataset, group: usize, mu: &[f64]) -> Result<IncompleteDataset> {
    if mu.len() != data.occasions() {
        return Err(Error::DimensionMismatch(format!(
            "shift of length {} for {} occasions",
            mu.len(),
            data.occasions()
        )));
    }
    if group >= data.groups() {
        return Err(Error::DimensionMismatch(format!("no group {group}")));
    }
    let mut out = data.clone();
    let g = out.group_mut(group);
    for k in 0..g.subjects() {
        for (j, &m) in mu.iter().enumerate() {
            if let Some(x) = g.get(k, j) {
                g.set(k, j, Some(x + m));
            }
        }
    }
    Ok(out)
}

/// Location-shift patterns for power studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// `(0, …, 0, ζ, …, ζ)`: the second half of the occasions shifted; `(0,0,ζ,ζ)` for d = 4.
    Alternative1,
    /// `(0, …, 0, ζ)`: only the last occasion shifted.
    Alternative2,
}

impl Alternative {
    pub fn pattern(self, d: usize, zeta: f64) -> Vec<f64> {
        (0..d)
            .map(|j| match self {
                Alternative::Alternative1 if j >= d / 2 => zeta,
                Alternative::Alternative2 if j + 1 == d => zeta,
                _ => 0.0,
            })
            .collect()
    }
}

/// `(determining occasion, target occasion)`, zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarPair {
    pub obs: usize,
    pub miss: usize,
}

impl MarPair {
    pub const fn new(obs: usize, miss: usize) -> Self {
        Self { obs, miss }
    }
}

/// Pair lists for MAR injection: `{1,2},{3,4}` for d = 4,
/// `{1,2},{1,3},{6,7},{6,8}` for d = 8 (one-based), consecutive pairs otherwise.
pub fn default_mar_pairs(d: usize) -> Vec<MarPair> {
    match d {
        4 => vec![MarPair::new(0, 1), MarPair::new(2, 3)],
        8 => vec![
            MarPair::new(0, 1),
            MarPair::new(0, 2),
            MarPair::new(5, 6),
            MarPair::new(5, 7),
        ],
        _ => (0..d / 2).map(|p| MarPair::new(2 * p, 2 * p + 1)).collect(),
    }
}

pub fn check_pairs(pairs: &[MarPair], d: usize) -> Result<()> {
    for p in pairs {
        if p.obs >= d || p.miss >= d {
            return Err(Error::InvalidDesign(format!("MAR pair {p:?} outside {d} occasions")));
        }
        if p.obs == p.miss {
            return Err(Error::InvalidDesign(format!("MAR pair {p:?} uses one occasion twice")));
        }
        if pairs.iter().any(|q| q.miss == p.obs) {
            return Err(Error::InvalidDesign(format!(
                "occasion {} determines missingness and cannot itself be a target",
                p.obs
            )));
        }
    }
    Ok(())
}

/// Missing-data mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    /// Each entry independently missing with probability `r`.
    Mcar(f64),
    /// 2σ bands of the determining occasion: 15% / 30% / 15%.
    Mar1,
    /// Median split of the determining occasion: 10% / 30%.
    Mar2,
}

impl Mechanism {
    pub fn name(&self) -> String {
        match self {
            Mechanism::Mcar(r) => format!("mcar({r})"),
            Mechanism::Mar1 => "mar1".into(),
            Mechanism::Mar2 => "mar2".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessSpec {
    pub mechanism: Mechanism,
    /// MAR pairs; `None` selects [`default_mar_pairs`].
    #[serde(default)]
    pub pairs: Option<Vec<MarPair>>,
}

impl MissingnessSpec {
    pub fn new(mechanism: Mechanism) -> Self {
        Self { mechanism, pairs: None }
    }

    pub fn inject(&self, data: &IncompleteDataset, rng: &mut impl Rng) -> Result<IncompleteDataset> {
        let pairs = || self.pairs.clone().unwrap_or_else(|| default_mar_pairs(data.occasions()));
        match self.mechanism {
            Mechanism::Mcar(r) => inject_mcar(data, r, rng),
            Mechanism::Mar1 => inject_mar1(data, &pairs(), rng),
            Mechanism::Mar2 => inject_mar2(data, &pairs(), rng),
        }
    }
}

/// One uniform draw per entry, in group / subject / occasion order.
pub fn inject_mcar(data: &IncompleteDataset, r: f64, rng: &mut impl Rng) -> Result<IncompleteDataset> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidDesign(format!("missing rate must lie in [0, 1), got {r}")));
    }
    let mut out = data.clone();
    for i in 0..out.groups() {
        let g = out.group_mut(i);
        for k in 0..g.subjects() {
            for j in 0..g.occasions() {
                let u: f64 = rng.random();
                if u < r {
                    g.mask_out(k, j);
                }
            }
        }
    }
    Ok(out)
}

fn observed_column(g: &GroupData, j: usize) -> Vec<f64> {
    (0..g.subjects()).filter_map(|k| g.get(k, j)).collect()
}

fn sample_sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Per group and pair, removes the target entry with a probability chosen
/// from the determining entry's stratum. One uniform draw per subject.
fn inject_by_stratum(
    data: &IncompleteDataset,
    pairs: &[MarPair],
    rng: &mut impl Rng,
    stratum_rate: impl Fn(&[f64]) -> Box<dyn Fn(f64) -> f64>,
) -> Result<IncompleteDataset> {
    check_pairs(pairs, data.occasions())?;
    let mut out = data.clone();
    for i in 0..out.groups() {
        for p in pairs {
            // strata come from the original values of the determining occasion
            let column = observed_column(data.group(i), p.obs);
            let rate = stratum_rate(&column);
            let g = out.group_mut(i);
            for k in 0..g.subjects() {
                let u: f64 = rng.random();
                if let Some(x) = data.group(i).get(k, p.obs) {
                    if u < rate(x) {
                        g.mask_out(k, p.miss);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// MAR1: bands `(-∞, -2σ)`, `[-2σ, 2σ]`, `(2σ, ∞)` of the determining
/// occasion, σ its sample standard deviation within the group; target missing
/// with probability 15%, 30%, 15%.
pub fn inject_mar1(data: &IncompleteDataset, pairs: &[MarPair], rng: &mut impl Rng) -> Result<IncompleteDataset> {
    inject_by_stratum(data, pairs, rng, |col| {
        let s = sample_sd(col);
        Box::new(move |x| if x < -2.0 * s || x > 2.0 * s { 0.15 } else { 0.30 })
    })
}

/// MAR2: determining value `≤ median` → 10%, above → 30%.
pub fn inject_mar2(data: &IncompleteDataset, pairs: &[MarPair], rng: &mut impl Rng) -> Result<IncompleteDataset> {
    inject_by_stratum(data, pairs, rng, |col| {
        let m = if col.is_empty() { 0.0 } else { median(col) };
        Box::new(move |x| if x <= m { 0.10 } else { 0.30 })
    })
}
