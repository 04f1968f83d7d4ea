//! Pooled mid-ranks and relative marginal effects.
//!
//! All observed values, across every group and occasion, are ranked together.
//! Ties are detected by exact equality and receive the average of the integer
//! ranks they span.

use crate::data::ValidatedDataset;

/// Mid-ranks of `values`, in input order.
///
/// The rank of `x` equals `1/2 + Σ_y c(x - y)` with `c(u) = 0, 1/2, 1` for
/// `u < 0, u = 0, u > 0`.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let v = values[order[start]];
        let mut end = start + 1;
        // `==` rather than total_cmp so that -0.0 and 0.0 tie.
        while end < order.len() && values[order[end]] == v {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let r = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = r;
        }
        start = end;
    }
    ranks
}

/// Ranks `R_ijk` and cell mean ranks `R̄_ij.` for a validated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    d: usize,
    total_observed: usize,
    /// Per group, subject-major; zero at missing entries.
    ranks: Vec<Vec<f64>>,
    masks: Vec<Vec<bool>>,
    cell_means: Vec<f64>,
}

impl RankTable {
    pub fn new(data: &ValidatedDataset) -> Self {
        let ds = data.data();
        let counts = data.counts();
        let d = ds.occasions();
        let a = ds.groups();

        let mut pooled = Vec::with_capacity(counts.total_observed());
        for i in 0..a {
            pooled.extend(ds.group(i).entries().iter().flatten().copied());
        }
        let pooled_ranks = midranks(&pooled);

        let mut ranks = Vec::with_capacity(a);
        let mut masks = Vec::with_capacity(a);
        let mut cell_means = vec![0.0; a * d];
        let mut next = 0;
        for i in 0..a {
            let entries = ds.group(i).entries();
            let mut r = vec![0.0; entries.len()];
            let mut m = vec![false; entries.len()];
            for (pos, v) in entries.iter().enumerate() {
                if v.is_some() {
                    r[pos] = pooled_ranks[next];
                    m[pos] = true;
                    cell_means[i * d + pos % d] += pooled_ranks[next];
                    next += 1;
                }
            }
            for j in 0..d {
                cell_means[i * d + j] /= counts.lambda(i, j) as f64;
            }
            ranks.push(r);
            masks.push(m);
        }
        Self {
            d,
            total_observed: counts.total_observed(),
            ranks,
            masks,
            cell_means,
        }
    }

    pub fn groups(&self) -> usize {
        self.ranks.len()
    }

    pub fn occasions(&self) -> usize {
        self.d
    }

    /// `R_ijk`, or `None` when the entry is missing.
    pub fn rank(&self, i: usize, k: usize, j: usize) -> Option<f64> {
        let pos = k * self.d + j;
        self.masks[i][pos].then(|| self.ranks[i][pos])
    }

    /// `R̄_ij.`
    pub fn cell_mean(&self, i: usize, j: usize) -> f64 {
        self.cell_means[i * self.d + j]
    }

    pub fn total_observed(&self) -> usize {
        self.total_observed
    }

    /// Group `i` ranks, subject-major, zero at missing entries.
    pub fn group_ranks(&self, i: usize) -> &[f64] {
        &self.ranks[i]
    }

    pub fn group_mask(&self, i: usize) -> &[bool] {
        &self.masks[i]
    }

    /// Relative effect estimates `p̂_ij = (R̄_ij. - 1/2) / N`, group-major.
    pub fn effects(&self) -> EffectVector {
        let n = self.total_observed as f64;
        EffectVector(self.cell_means.iter().map(|r| (r - 0.5) / n).collect())
    }

    /// Centered ranks `Z_ijk = R_ijk - R̄_ij.`.
    pub fn centered(&self) -> CenteredRanks {
        let d = self.d;
        let z = self
            .ranks
            .iter()
            .zip(&self.masks)
            .enumerate()
            .map(|(i, (r, m))| {
                r.iter()
                    .zip(m)
                    .enumerate()
                    .map(|(pos, (&x, &obs))| {
                        if obs {
                            x - self.cell_means[i * d + pos % d]
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        CenteredRanks {
            d,
            z,
            masks: self.masks.clone(),
        }
    }
}

/// `p̂ = (p̂_11, ..., p̂_ad)`, ordered group-major then occasion.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectVector(pub Vec<f64>);

impl EffectVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Centered rank vectors `Z_ik` with their observation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredRanks {
    d: usize,
    z: Vec<Vec<f64>>,
    masks: Vec<Vec<bool>>,
}

impl CenteredRanks {
    pub fn groups(&self) -> usize {
        self.z.len()
    }

    pub fn occasions(&self) -> usize {
        self.d
    }

    pub fn subjects(&self, i: usize) -> usize {
        self.z[i].len() / self.d
    }

    /// `Z_ijk`, undefined (`None`) where the entry is missing.
    pub fn get(&self, i: usize, k: usize, j: usize) -> Option<f64> {
        let pos = k * self.d + j;
        self.masks[i][pos].then(|| self.z[i][pos])
    }

    /// Group `i` centered ranks, subject-major, zero at missing entries.
    pub fn group_values(&self, i: usize) -> &[f64] {
        &self.z[i]
    }

    pub fn group_mask(&self, i: usize) -> &[bool] {
        &self.masks[i]
    }
}

/// Ranks the dataset and returns the rank table with `p̂`.
pub fn relative_effects(data: &ValidatedDataset) -> (RankTable, EffectVector) {
    let table = RankTable::new(data);
    let effects = table.effects();
    (table, effects)
}

/// Centered ranks from a rank table.
pub fn centered_ranks(table: &RankTable) -> CenteredRanks {
    table.centered()
}
