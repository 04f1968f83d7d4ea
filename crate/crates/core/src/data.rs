//! Incompletely observed repeated-measures data.
//!
//! A dataset has `a` independent groups, each with `n_i` subjects observed at
//! the same `d` occasions. Every entry is either an observed real or missing;
//! missingness is carried structurally as `None`, so the observation mask can
//! never disagree with the values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest observed count per cell for which the variance estimators are finite.
pub const MIN_CELL_COUNT: usize = 2;

/// One group: `n_i` subjects × `d` occasions, stored subject-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupData {
    d: usize,
    values: Vec<Option<f64>>,
}

impl GroupData {
    /// Builds a group from per-subject rows. Every row must have length `d`.
    pub fn from_rows(d: usize, rows: &[Vec<Option<f64>>]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * d);
        for (k, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "subject {k} has {} occasions, expected {d}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(Self { d, values })
    }

    /// Builds a fully observed group from complete rows.
    pub fn complete(d: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<Option<f64>>> = rows
            .iter()
            .map(|r| r.iter().copied().map(Some).collect())
            .collect();
        Self::from_rows(d, &rows)
    }

    pub fn subjects(&self) -> usize {
        self.values.len().checked_div(self.d).unwrap_or(0)
    }

    pub fn occasions(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, subject: usize, occasion: usize) -> Option<f64> {
        self.values[subject * self.d + occasion]
    }

    #[inline]
    pub fn is_observed(&self, subject: usize, occasion: usize) -> bool {
        self.values[subject * self.d + occasion].is_some()
    }

    pub fn set(&mut self, subject: usize, occasion: usize, value: Option<f64>) {
        self.values[subject * self.d + occasion] = value;
    }

    /// Marks an entry missing without touching any other entry.
    pub fn mask_out(&mut self, subject: usize, occasion: usize) {
        self.values[subject * self.d + occasion] = None;
    }

    pub fn row(&self, subject: usize) -> &[Option<f64>] {
        &self.values[subject * self.d..(subject + 1) * self.d]
    }

    /// Subject-major flat view of all entries.
    pub fn entries(&self) -> &[Option<f64>] {
        &self.values
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [Option<f64>] {
        &mut self.values
    }
}

/// `a` groups × `d` occasions × `n_i` subjects with optional missing entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncompleteDataset {
    d: usize,
    groups: Vec<GroupData>,
}

impl IncompleteDataset {
    pub fn new(d: usize, groups: Vec<GroupData>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDesign("at least one occasion is required".into()));
        }
        if groups.is_empty() {
            return Err(Error::InvalidDesign("at least one group is required".into()));
        }
        for (i, g) in groups.iter().enumerate() {
            if g.occasions() != d {
                return Err(Error::DimensionMismatch(format!(
                    "group {i} has {} occasions, expected {d}",
                    g.occasions()
                )));
            }
            if g.subjects() == 0 {
                return Err(Error::InvalidDesign(format!("group {i} has no subjects")));
            }
        }
        Ok(Self { d, groups })
    }

    /// Convenience constructor from nested rows `groups[i][k][j]`.
    pub fn from_nested(groups: &[Vec<Vec<Option<f64>>>]) -> Result<Self> {
        let d = groups
            .first()
            .and_then(|g| g.first())
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidDesign("empty dataset".into()))?;
        let groups = groups
            .iter()
            .map(|rows| GroupData::from_rows(d, rows))
            .collect::<Result<Vec<_>>>()?;
        Self::new(d, groups)
    }

    pub fn from_complete(groups: &[Vec<Vec<f64>>]) -> Result<Self> {
        let nested: Vec<Vec<Vec<Option<f64>>>> = groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|r| r.iter().copied().map(Some).collect())
                    .collect()
            })
            .collect();
        Self::from_nested(&nested)
    }

    pub fn groups(&self) -> usize {
        self.groups.len()
    }

    pub fn occasions(&self) -> usize {
        self.d
    }

    pub fn group(&self, i: usize) -> &GroupData {
        &self.groups[i]
    }

    pub fn group_mut(&mut self, i: usize) -> &mut GroupData {
        &mut self.groups[i]
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(GroupData::subjects).collect()
    }

    /// Total number of subjects `n`.
    pub fn subjects(&self) -> usize {
        self.groups.iter().map(GroupData::subjects).sum()
    }

    /// Total number of observed entries `N`.
    pub fn observed(&self) -> usize {
        self.groups
            .iter()
            .map(|g| g.entries().iter().filter(|v| v.is_some()).count())
            .sum()
    }

    /// Applies `f` to every observed value, leaving the mask untouched.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for g in &mut out.groups {
            for x in g.entries_mut().iter_mut().flatten() {
                *x = f(*x);
            }
        }
        out
    }

    pub fn counts(&self) -> CellCounts {
        CellCounts::of(self)
    }

    /// Checks that every cell can support variance estimation.
    pub fn validate(self) -> Result<ValidatedDataset> {
        let counts = self.counts();
        for i in 0..self.groups() {
            for j in 0..self.d {
                let observed = counts.lambda(i, j);
                if observed < MIN_CELL_COUNT {
                    return Err(Error::EmptyCell {
                        group: i,
                        occasion: j,
                        observed,
                    });
                }
            }
        }
        Ok(ValidatedDataset { data: self, counts })
    }
}

/// Observation counts: `λ_ij.`, the pairwise co-observation counts `Δ_i,jj'`,
/// `n_i`, `n` and `N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    d: usize,
    group_sizes: Vec<usize>,
    lambda: Vec<usize>,
    delta: Vec<usize>,
    n: usize,
    total_observed: usize,
}

impl CellCounts {
    fn of(data: &IncompleteDataset) -> Self {
        let d = data.occasions();
        let a = data.groups();
        let mut lambda = vec![0usize; a * d];
        let mut delta = vec![0usize; a * d * d];
        for i in 0..a {
            let g = data.group(i);
            for k in 0..g.subjects() {
                let row = g.row(k);
                for j in 0..d {
                    if row[j].is_none() {
                        continue;
                    }
                    lambda[i * d + j] += 1;
                    for jp in 0..d {
                        if row[jp].is_some() {
                            delta[(i * d + j) * d + jp] += 1;
                        }
                    }
                }
            }
        }
        let group_sizes = data.group_sizes();
        let n = group_sizes.iter().sum();
        let total_observed = lambda.iter().sum();
        Self {
            d,
            group_sizes,
            lambda,
            delta,
            n,
            total_observed,
        }
    }

    pub fn groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn occasions(&self) -> usize {
        self.d
    }

    /// `λ_ij.`
    #[inline]
    pub fn lambda(&self, i: usize, j: usize) -> usize {
        self.lambda[i * self.d + j]
    }

    /// `Δ_i,jj'`
    #[inline]
    pub fn delta(&self, i: usize, j: usize, jp: usize) -> usize {
        self.delta[(i * self.d + j) * self.d + jp]
    }

    /// `n_i`
    pub fn group_size(&self, i: usize) -> usize {
        self.group_sizes[i]
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    /// Total number of subjects `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of observations `N`.
    pub fn total_observed(&self) -> usize {
        self.total_observed
    }
}

/// A dataset whose cells all hold at least [`MIN_CELL_COUNT`] observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedDataset {
    data: IncompleteDataset,
    counts: CellCounts,
}

impl ValidatedDataset {
    pub fn data(&self) -> &IncompleteDataset {
        &self.data
    }

    pub fn counts(&self) -> &CellCounts {
        &self.counts
    }

    pub fn into_inner(self) -> IncompleteDataset {
        self.data
    }
}
