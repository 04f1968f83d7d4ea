//! Rank-based covariance estimation with missing values.
//!
//! For group `i` and occasions `j, j'` the estimator is
//!
//! ```text
//! v_i(j,j') = n_i Σ_k λ_ijk λ_ij'k (x_ijk - x̄_ij.)(x_ij'k - x̄_ij'.)
//!             / (N² ((λ_ij. - 1)(λ_ij'. - 1) + Δ_i,jj' - 1))
//! ```
//!
//! which for `j = j'` reduces to the variance form with denominator
//! `N² λ_ij. (λ_ij. - 1)`. The same kernel serves the ranks `R` and the
//! bootstrap values `Z* = W Z`.

use serde::Serialize;

use crate::data::CellCounts;
use crate::numerics::{Matrix, Vector};
use crate::ranking::RankTable;

/// An off-diagonal entry whose denominator was not positive and was set to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DegenerateEntry {
    pub group: usize,
    pub occasion: usize,
    pub other: usize,
}

/// Per-group blocks `V̂_i`, the assembled `V̂_n` and its diagonal `D̂_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub blocks: Vec<Matrix>,
    pub vn: Matrix,
    pub dn: Vector,
    pub degenerate: Vec<DegenerateEntry>,
}

fn masked_mean(values: &[f64], mask: &[bool], d: usize, j: usize) -> f64 {
    let (mut s, mut c) = (0.0, 0usize);
    for (x, &m) in values.iter().skip(j).step_by(d).zip(mask.iter().skip(j).step_by(d)) {
        if m {
            s += x;
            c += 1;
        }
    }
    s / c as f64
}

/// Denominator of the `(j, j')` entry, without the `N²` factor.
fn denominator(counts: &CellCounts, i: usize, j: usize, jp: usize) -> f64 {
    let lj = counts.lambda(i, j) as f64;
    let ljp = counts.lambda(i, jp) as f64;
    (lj - 1.0) * (ljp - 1.0) + counts.delta(i, j, jp) as f64 - 1.0
}

/// Covariance block for one group from subject-major `values` under `mask`.
///
/// Returns the block and the off-diagonal positions that had a degenerate
/// denominator.
pub fn group_block(
    values: &[f64],
    mask: &[bool],
    counts: &CellCounts,
    i: usize,
) -> (Matrix, Vec<DegenerateEntry>) {
    let d = counts.occasions();
    let ni = counts.group_size(i);
    let nn = counts.total_observed() as f64;
    let means: Vec<f64> = (0..d).map(|j| masked_mean(values, mask, d, j)).collect();

    let mut dev = vec![0.0; values.len()];
    for (pos, (x, &m)) in values.iter().zip(mask).enumerate() {
        if m {
            dev[pos] = x - means[pos % d];
        }
    }

    let mut block = Matrix::zeros(d, d);
    let mut degenerate = Vec::new();
    for j in 0..d {
        for jp in j..d {
            let den = denominator(counts, i, j, jp);
            if den <= 0.0 {
                degenerate.push(DegenerateEntry {
                    group: i,
                    occasion: j,
                    other: jp,
                });
                continue;
            }
            let mut num = 0.0;
            for k in 0..ni {
                let (a, b) = (k * d + j, k * d + jp);
                if mask[a] && mask[b] {
                    num += dev[a] * dev[b];
                }
            }
            let v = ni as f64 * num / (nn * nn * den);
            block[(j, jp)] = v;
            block[(jp, j)] = v;
        }
    }
    (block, degenerate)
}

/// `v̂_i(j,j)`.
pub fn vhat_diag(ranks: &RankTable, counts: &CellCounts, i: usize, j: usize) -> f64 {
    vhat_offdiag(ranks, counts, i, j, j).unwrap_or(0.0)
}

/// `v̂_i(j,j')`; `None` when the denominator is not positive.
pub fn vhat_offdiag(
    ranks: &RankTable,
    counts: &CellCounts,
    i: usize,
    j: usize,
    jp: usize,
) -> Option<f64> {
    let d = counts.occasions();
    let values = ranks.group_ranks(i);
    let mask = ranks.group_mask(i);
    let den = denominator(counts, i, j, jp);
    if den <= 0.0 {
        return None;
    }
    let (mj, mjp) = (ranks.cell_mean(i, j), ranks.cell_mean(i, jp));
    let num: f64 = (0..counts.group_size(i))
        .filter(|k| mask[k * d + j] && mask[k * d + jp])
        .map(|k| (values[k * d + j] - mj) * (values[k * d + jp] - mjp))
        .sum();
    let nn = counts.total_observed() as f64;
    Some(counts.group_size(i) as f64 * num / (nn * nn * den))
}

/// Block-diagonal `V̂_n = ⊕_i (n / n_i) V̂_i` and `D̂_n = diag(V̂_n)`.
pub fn assemble(blocks: Vec<Matrix>, counts: &CellCounts, degenerate: Vec<DegenerateEntry>) -> CovarianceEstimate {
    let d = counts.occasions();
    let a = blocks.len();
    let n = counts.n() as f64;
    let mut vn = Matrix::zeros(a * d, a * d);
    for (i, b) in blocks.iter().enumerate() {
        let w = n / counts.group_size(i) as f64;
        vn.view_mut((i * d, i * d), (d, d)).copy_from(&(b * w));
    }
    let dn = vn.diagonal();
    CovarianceEstimate {
        blocks,
        vn,
        dn,
        degenerate,
    }
}

/// Full estimate from raw per-group values (ranks or bootstrap values).
pub fn estimate_from<'a>(
    groups: impl IntoIterator<Item = (&'a [f64], &'a [bool])>,
    counts: &CellCounts,
) -> CovarianceEstimate {
    let mut blocks = Vec::with_capacity(counts.groups());
    let mut degenerate = Vec::new();
    for (i, (values, mask)) in groups.into_iter().enumerate() {
        let (b, deg) = group_block(values, mask, counts, i);
        blocks.push(b);
        degenerate.extend(deg);
    }
    assemble(blocks, counts, degenerate)
}

/// `V̂_n` and `D̂_n` from the rank table.
pub fn estimate(ranks: &RankTable, counts: &CellCounts) -> CovarianceEstimate {
    estimate_from(
        (0..ranks.groups()).map(|i| (ranks.group_ranks(i), ranks.group_mask(i))),
        counts,
    )
}
