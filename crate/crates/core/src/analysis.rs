//! Observed-data quantities shared by every statistic and the bootstrap.

use crate::contrasts::ContrastSpec;
use crate::covariance::{self, CovarianceEstimate};
use crate::data::{CellCounts, ValidatedDataset};
use crate::error::Result;
use crate::precise::PreciseEstimate;
use crate::ranking::{CenteredRanks, EffectVector, RankTable};
use crate::statistics::{self, StatKind, StatValue};

/// Ranks, `p̂`, `V̂_n`, `D̂_n` and centered ranks for one dataset.
///
/// Observed WTS and MATS values come from the double-double copy in
/// `precise`; ATS and every bootstrap replicate use the `f64` estimates.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub counts: CellCounts,
    pub ranks: RankTable,
    pub effects: EffectVector,
    pub covariance: CovarianceEstimate,
    pub centered: CenteredRanks,
    pub precise: PreciseEstimate,
}

impl Analysis {
    pub fn new(data: &ValidatedDataset) -> Self {
        let counts = data.counts().clone();
        let ranks = RankTable::new(data);
        let effects = ranks.effects();
        let covariance = covariance::estimate(&ranks, &counts);
        let centered = ranks.centered();
        let precise = PreciseEstimate::new(&ranks, &counts);
        Self {
            counts,
            ranks,
            effects,
            covariance,
            centered,
            precise,
        }
    }

    /// Total subject count `n`.
    pub fn n(&self) -> usize {
        self.counts.n()
    }

    pub fn statistic(&self, kind: StatKind, contrast: &ContrastSpec) -> Result<StatValue> {
        let p = self.effects.as_slice();
        let n = self.n();
        match kind {
            StatKind::Wts => {
                statistics::check_len(p, contrast)?;
                Ok(statistics::wts_from_value(self.precise.wts(contrast, n), contrast))
            }
            StatKind::Ats => statistics::ats(p, &self.covariance.vn, contrast, n),
            StatKind::Mats => {
                statistics::check_len(p, contrast)?;
                statistics::check_diagonal(&self.covariance.dn)?;
                Ok(statistics::mats_from_value(self.precise.mats(contrast, n)))
            }
        }
    }
}
