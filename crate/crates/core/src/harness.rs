//! Monte Carlo type-I error and power studies.
//!
//! A config describes a grid of data-generating settings (sample sizes,
//! occasions, marginal, covariance setting, missingness). Each setting is a
//! *cell* with its own seed derived from the master seed and the cell
//! descriptor; replication `r` of a cell derives its seed from the cell seed
//! and `r`. Hypotheses and shift sizes `ζ` are evaluated on the same draws, so
//! the `ζ = 0` row of a power run coincides with a type-I run of the same
//! cell.
//!
//! A replication whose missingness leaves a cell with fewer than two
//! observations is redrawn (new data and new mask from the next streams of
//! the same replication seed), up to [`MAX_ATTEMPTS`] times.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::Analysis;
use crate::bootstrap::{bootstrap_tests, BootstrapConfig};
use crate::contrasts::{hypothesis_matrix, ContrastSpec, HypothesisKind};
use crate::data::ValidatedDataset;
use crate::datagen::{
    check_pairs, generate, Alternative, CovarianceSetting, GeneratorSpec, Marginal, MarPair, Mechanism,
    MissingnessSpec,
};
use crate::error::{Error, Result};
use crate::seed::{child_seed, derive_seed, stream};
use crate::statistics::StatKind;

pub const SCHEMA_VERSION: u32 = 1;
pub const MAX_ATTEMPTS: usize = 100;
pub const DEFAULT_NSIM: usize = 2000;
pub const DEFAULT_BOOTSTRAP: usize = 499;

/// A test procedure: an asymptotic reference distribution or a wild
/// bootstrap of one statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// WTS against `χ²_{rank(C)}`.
    Wts,
    /// ATS against `F(f̂, ∞)`.
    Ats,
    WtsBoot,
    AtsBoot,
    MatsBoot,
}

impl TestKind {
    pub const ALL: [TestKind; 5] = [
        TestKind::Wts,
        TestKind::Ats,
        TestKind::WtsBoot,
        TestKind::AtsBoot,
        TestKind::MatsBoot,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TestKind::Wts => "T_W",
            TestKind::Ats => "T_A",
            TestKind::WtsBoot => "T_W*",
            TestKind::AtsBoot => "T_A*",
            TestKind::MatsBoot => "T_M*",
        }
    }

    pub fn statistic(self) -> StatKind {
        match self {
            TestKind::Wts | TestKind::WtsBoot => StatKind::Wts,
            TestKind::Ats | TestKind::AtsBoot => StatKind::Ats,
            TestKind::MatsBoot => StatKind::Mats,
        }
    }

    pub fn is_bootstrap(self) -> bool {
        matches!(self, TestKind::WtsBoot | TestKind::AtsBoot | TestKind::MatsBoot)
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSpec {
    pub alternative: Alternative,
    /// One-based index of the shifted group.
    #[serde(default = "one")]
    pub group: usize,
    pub zeta: Vec<f64>,
}

fn one() -> usize {
    1
}
fn default_seed() -> u64 {
    1
}
fn default_nsim() -> usize {
    DEFAULT_NSIM
}
fn default_bootstrap() -> usize {
    DEFAULT_BOOTSTRAP
}
fn default_alpha() -> f64 {
    0.05
}
fn default_covariances() -> Vec<CovarianceSetting> {
    vec![CovarianceSetting::Ar]
}
fn default_tests() -> Vec<TestKind> {
    TestKind::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_nsim")]
    pub nsim: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_replicates: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Group sizes per design, e.g. `[[10, 10], [5, 5]]`.
    pub sample_sizes: Vec<Vec<usize>>,
    pub occasions: Vec<usize>,
    pub marginals: Vec<Marginal>,
    #[serde(default = "default_covariances")]
    pub covariances: Vec<CovarianceSetting>,
    pub missingness: Vec<Mechanism>,
    /// One-based `[determining, target]` occasion pairs for MAR mechanisms.
    #[serde(default)]
    pub mar_pairs: Option<Vec<[usize; 2]>>,
    pub hypotheses: Vec<HypothesisKind>,
    #[serde(default = "default_tests")]
    pub tests: Vec<TestKind>,
    #[serde(default)]
    pub power: Option<PowerSpec>,
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

fn config_err(pointer: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        pointer: pointer.into(),
        message: message.into(),
    }
}

impl SimulationConfig {
    /// A config with desk-scale defaults and a single value on every axis.
    pub fn single(
        sizes: &[usize],
        d: usize,
        marginal: Marginal,
        covariance: CovarianceSetting,
        mechanism: Mechanism,
        hypothesis: HypothesisKind,
    ) -> Self {
        Self {
            master_seed: default_seed(),
            nsim: DEFAULT_NSIM,
            bootstrap_replicates: DEFAULT_BOOTSTRAP,
            alpha: default_alpha(),
            sample_sizes: vec![sizes.to_vec()],
            occasions: vec![d],
            marginals: vec![marginal],
            covariances: vec![covariance],
            missingness: vec![mechanism],
            mar_pairs: None,
            hypotheses: vec![hypothesis],
            tests: default_tests(),
            power: None,
        }
    }

    /// Parses a JSON config and validates it. Errors point at the offending
    /// field with a JSON pointer.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = json_pointer(e.path());
            config_err(pointer, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Field-level checks; errors carry a JSON pointer to the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.nsim == 0 {
            return Err(config_err("/nsim", "must be at least 1"));
        }
        if self.bootstrap_replicates == 0 && self.tests.iter().any(|t| t.is_bootstrap()) {
            return Err(config_err("/bootstrap_replicates", "must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(config_err("/alpha", "must lie in (0, 1)"));
        }
        for (name, len) in [
            ("sample_sizes", self.sample_sizes.len()),
            ("occasions", self.occasions.len()),
            ("marginals", self.marginals.len()),
            ("covariances", self.covariances.len()),
            ("missingness", self.missingness.len()),
            ("hypotheses", self.hypotheses.len()),
            ("tests", self.tests.len()),
        ] {
            if len == 0 {
                return Err(config_err(format!("/{name}"), "must not be empty"));
            }
        }
        for (s, sizes) in self.sample_sizes.iter().enumerate() {
            if sizes.is_empty() {
                return Err(config_err(format!("/sample_sizes/{s}"), "needs at least one group"));
            }
            if let Some(g) = sizes.iter().position(|&n| n < 2) {
                return Err(config_err(format!("/sample_sizes/{s}/{g}"), "groups need at least 2 subjects"));
            }
        }
        if let Some(j) = self.occasions.iter().position(|&d| d == 0) {
            return Err(config_err(format!("/occasions/{j}"), "must be at least 1"));
        }
        for (m, mech) in self.missingness.iter().enumerate() {
            if let Mechanism::Mcar(r) = mech {
                if !(0.0..1.0).contains(r) {
                    return Err(config_err(format!("/missingness/{m}/mcar"), "rate must lie in [0, 1)"));
                }
            }
        }
        for (m, marginal) in self.marginals.iter().enumerate() {
            if let Marginal::Ordinal { c } = marginal {
                if !(*c >= 0.0) {
                    return Err(config_err(format!("/marginals/{m}/ordinal/c"), "must be ≥ 0"));
                }
            }
        }
        if let Some(h) = self.hypotheses.iter().position(|h| *h == HypothesisKind::Custom) {
            return Err(config_err(format!("/hypotheses/{h}"), "custom contrasts are not supported in simulations"));
        }
        if let Some(pairs) = &self.mar_pairs {
            for (p, [o, m]) in pairs.iter().enumerate() {
                if *o == 0 || *m == 0 {
                    return Err(config_err(format!("/mar_pairs/{p}"), "occasions are one-based"));
                }
            }
        }
        if let Some(power) = &self.power {
            if power.zeta.is_empty() {
                return Err(config_err("/power/zeta", "must not be empty"));
            }
            if power.group == 0 {
                return Err(config_err("/power/group", "groups are one-based"));
            }
        }
        Ok(())
    }

    fn mar_pairs_zero_based(&self) -> Option<Vec<MarPair>> {
        self.mar_pairs
            .as_ref()
            .map(|v| v.iter().map(|[o, m]| MarPair::new(o - 1, m - 1)).collect())
    }

    fn zetas(&self) -> Vec<f64> {
        self.power.as_ref().map(|p| p.zeta.clone()).unwrap_or_else(|| vec![0.0])
    }

    fn statistics(&self) -> Vec<StatKind> {
        let mut s: Vec<StatKind> = self.tests.iter().map(|t| t.statistic()).collect();
        s.sort();
        s.dedup();
        s
    }
}

/// One data-generating setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    pub group_sizes: Vec<usize>,
    pub d: usize,
    pub marginal: Marginal,
    pub covariance: CovarianceSetting,
    pub missingness: Mechanism,
    pub descriptor: String,
    pub seed: u64,
}

impl Cell {
    fn generator(&self) -> GeneratorSpec {
        GeneratorSpec::new(self.marginal, self.covariance, &self.group_sizes, self.d)
    }
}

/// Expands the config grid into cells and checks every hypothesis against
/// every design.
pub fn plan(config: &SimulationConfig) -> Result<Vec<Cell>> {
    config.validate()?;
    let pairs = config.mar_pairs_zero_based();
    let mut cells = Vec::new();
    for sizes in &config.sample_sizes {
        for &d in &config.occasions {
            for h in &config.hypotheses {
                if !h.applies_to(sizes.len(), d) {
                    return Err(Error::InvalidDesign(format!(
                        "hypothesis `{h}` is not defined for a={}, d={d}",
                        sizes.len()
                    )));
                }
            }
            if let Some(power) = &config.power {
                if power.group > sizes.len() {
                    return Err(Error::InvalidDesign(format!(
                        "power shift targets group {} of {}",
                        power.group,
                        sizes.len()
                    )));
                }
            }
            for m in &config.missingness {
                if !matches!(m, Mechanism::Mcar(_)) {
                    if let Some(p) = &pairs {
                        check_pairs(p, d)?;
                    }
                }
            }
            for marginal in &config.marginals {
                for cov in &config.covariances {
                    for mech in &config.missingness {
                        let pair_label = match (mech, &pairs) {
                            (Mechanism::Mcar(_), _) | (_, None) => String::new(),
                            (_, Some(p)) => format!(";pairs={p:?}"),
                        };
                        let descriptor = format!(
                            "n={sizes:?};d={d};marginal={};cov={};miss={}{pair_label}",
                            marginal.name(),
                            cov.name(),
                            mech.name()
                        );
                        cells.push(Cell {
                            id: cells.len(),
                            group_sizes: sizes.clone(),
                            d,
                            marginal: *marginal,
                            covariance: *cov,
                            missingness: *mech,
                            seed: derive_seed(config.master_seed, &descriptor),
                            descriptor,
                        });
                    }
                }
            }
        }
    }
    Ok(cells)
}

/// p-values of the five procedures for one replication and hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TestPValues {
    pub wts: Option<f64>,
    pub ats: Option<f64>,
    pub wts_boot: Option<f64>,
    pub ats_boot: Option<f64>,
    pub mats_boot: Option<f64>,
}

impl TestPValues {
    pub fn get(&self, t: TestKind) -> Option<f64> {
        match t {
            TestKind::Wts => self.wts,
            TestKind::Ats => self.ats,
            TestKind::WtsBoot => self.wts_boot,
            TestKind::AtsBoot => self.ats_boot,
            TestKind::MatsBoot => self.mats_boot,
        }
    }

    fn set(&mut self, t: TestKind, p: Option<f64>) {
        match t {
            TestKind::Wts => self.wts = p,
            TestKind::Ats => self.ats = p,
            TestKind::WtsBoot => self.wts_boot = p,
            TestKind::AtsBoot => self.ats_boot = p,
            TestKind::MatsBoot => self.mats_boot = p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub cell: usize,
    pub hypothesis: HypothesisKind,
    pub zeta: f64,
    pub replication: usize,
    pub seed: u64,
    /// Number of data draws needed to obtain a valid dataset.
    pub attempts: usize,
    pub pvalues: TestPValues,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub cell: usize,
    pub group_sizes: String,
    pub d: usize,
    pub marginal: String,
    pub covariance: String,
    pub missingness: String,
    pub hypothesis: HypothesisKind,
    pub zeta: f64,
    pub test: TestKind,
    pub rejections: usize,
    /// Replications contributing a p-value.
    pub valid: usize,
    /// `None` when no replication produced a p-value.
    pub rate: Option<f64>,
    /// `√(rate (1 - rate) / valid)`.
    pub se: Option<f64>,
    /// Replications without a p-value for this test.
    pub unavailable: usize,
    pub redraws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub schema_version: u32,
    pub config: SimulationConfig,
    pub cells: Vec<Cell>,
    pub summary: Vec<SummaryRow>,
    pub records: Vec<ReplicationRecord>,
}

impl SimulationResult {
    pub fn row(&self, cell: usize, hypothesis: HypothesisKind, zeta: f64, test: TestKind) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.cell == cell && r.hypothesis == hypothesis && r.zeta == zeta && r.test == test)
    }

    /// Rebuilds the summary table from the replication records.
    pub fn reaggregate(&self) -> Vec<SummaryRow> {
        aggregate(&self.config, &self.cells, &self.records)
    }
}

fn draw_valid(
    cell: &Cell,
    missing: &MissingnessSpec,
    shift: Option<(usize, &[f64])>,
    rep_seed: u64,
) -> std::result::Result<(ValidatedDataset, usize), (Error, usize)> {
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let mut data_rng = stream(rep_seed, 2 * attempt as u64);
        let mut miss_rng = stream(rep_seed, 2 * attempt as u64 + 1);
        let step = (|| {
            let mut spec = cell.generator();
            if let Some((g, mu)) = shift {
                spec.shifts = (0..cell.group_sizes.len())
                    .map(|i| if i == g { mu.to_vec() } else { vec![0.0; cell.d] })
                    .collect();
            }
            let full = generate(&spec, &mut data_rng)?;
            let holed = missing.inject(&full, &mut miss_rng)?;
            holed.validate()
        })();
        match step {
            Ok(v) => return Ok((v, attempt + 1)),
            Err(e @ Error::EmptyCell { .. }) => last = Some(e),
            Err(e) => return Err((e, attempt + 1)),
        }
    }
    Err((last.expect("at least one attempt"), MAX_ATTEMPTS))
}

fn run_replication(
    config: &SimulationConfig,
    cell: &Cell,
    contrasts: &[ContrastSpec],
    replication: usize,
) -> Vec<ReplicationRecord> {
    let missing = MissingnessSpec {
        mechanism: cell.missingness,
        pairs: config.mar_pairs_zero_based(),
    };
    let rep_seed = child_seed(cell.seed, replication as u64);
    let boot = BootstrapConfig::new(config.bootstrap_replicates.max(1), derive_seed(rep_seed, "bootstrap"))
        .with_statistics(&config.statistics());
    let need_boot = config.tests.iter().any(|t| t.is_bootstrap());
    let mut out = Vec::new();
    for zeta in config.zetas() {
        let pattern = config
            .power
            .as_ref()
            .map(|p| (p.group - 1, p.alternative.pattern(cell.d, zeta)));
        let shift = pattern.as_ref().map(|(g, mu)| (*g, mu.as_slice()));
        let mut records: Vec<ReplicationRecord> = contrasts
            .iter()
            .map(|c| ReplicationRecord {
                cell: cell.id,
                hypothesis: c.kind,
                zeta,
                replication,
                seed: rep_seed,
                attempts: 0,
                pvalues: TestPValues::default(),
                error: None,
            })
            .collect();
        let outcome = draw_valid(cell, &missing, shift, rep_seed).and_then(|(data, attempts)| {
            let analysis = Analysis::new(&data);
            let cfg = if need_boot {
                boot.clone()
            } else {
                BootstrapConfig::new(1, boot.seed).with_statistics(&boot.statistics)
            };
            bootstrap_tests(&analysis, contrasts, &cfg)
                .map(|r| (r, attempts))
                .map_err(|e| (e, attempts))
        });
        match outcome {
            Ok((reports, attempts)) => {
                for (rec, rep) in records.iter_mut().zip(reports) {
                    rec.attempts = attempts;
                    for &t in &config.tests {
                        let s = rep.get(t.statistic());
                        let p = s.and_then(|s| if t.is_bootstrap() { s.p_bootstrap } else { s.p_asymptotic });
                        rec.pvalues.set(t, p);
                    }
                }
            }
            Err((e, attempts)) => {
                for rec in &mut records {
                    rec.attempts = attempts;
                    rec.error = Some(e.to_string());
                }
            }
        }
        out.extend(records);
    }
    out
}

/// Summary rows ordered by cell, hypothesis (config order), ζ, test.
pub fn aggregate(config: &SimulationConfig, cells: &[Cell], records: &[ReplicationRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for cell in cells {
        for &h in &config.hypotheses {
            for zeta in config.zetas() {
                let recs: Vec<&ReplicationRecord> = records
                    .iter()
                    .filter(|r| r.cell == cell.id && r.hypothesis == h && r.zeta == zeta)
                    .collect();
                let redraws = recs.iter().map(|r| r.attempts.saturating_sub(1)).sum();
                for &t in &config.tests {
                    let ps: Vec<f64> = recs.iter().filter_map(|r| r.pvalues.get(t)).collect();
                    let valid = ps.len();
                    let rejections = ps.iter().filter(|&&p| p <= config.alpha).count();
                    let rate = (valid > 0).then(|| rejections as f64 / valid as f64);
                    let se = rate.map(|r| (r * (1.0 - r) / valid as f64).sqrt());
                    rows.push(SummaryRow {
                        cell: cell.id,
                        group_sizes: cell
                            .group_sizes
                            .iter()
                            .map(usize::to_string)
                            .collect::<Vec<_>>()
                            .join(";"),
                        d: cell.d,
                        marginal: cell.marginal.name(),
                        covariance: cell.covariance.name().to_string(),
                        missingness: cell.missingness.name(),
                        hypothesis: h,
                        zeta,
                        test: t,
                        rejections,
                        valid,
                        rate,
                        se,
                        unavailable: recs.len() - valid,
                        redraws,
                    });
                }
            }
        }
    }
    rows
}

/// Runs every cell of the config.
pub fn simulate(config: &SimulationConfig) -> Result<SimulationResult> {
    let cells = plan(config)?;
    let jobs: Vec<(usize, usize)> = cells
        .iter()
        .flat_map(|c| (0..config.nsim).map(move |r| (c.id, r)))
        .collect();
    let contrasts_per_cell: Vec<Vec<ContrastSpec>> = cells
        .iter()
        .map(|c| {
            config
                .hypotheses
                .iter()
                .map(|&h| hypothesis_matrix(c.group_sizes.len(), c.d, h))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let records: Vec<ReplicationRecord> = jobs
        .par_iter()
        .flat_map_iter(|&(c, r)| run_replication(config, &cells[c], &contrasts_per_cell[c], r))
        .collect();
    let summary = aggregate(config, &cells, &records);
    Ok(SimulationResult {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        cells,
        summary,
        records,
    })
}

/// Type-I error study: the config must not carry a shift alternative.
pub fn simulate_type1(config: &SimulationConfig) -> Result<SimulationResult> {
    if config.power.is_some() {
        return Err(config_err("/power", "type-I error studies run under the null; remove the shift"));
    }
    simulate(config)
}

/// Power study over the config's `ζ` grid.
pub fn simulate_power(config: &SimulationConfig) -> Result<SimulationResult> {
    if config.power.is_none() {
        return Err(config_err("/power", "a power study needs a shift alternative"));
    }
    simulate(config)
}
