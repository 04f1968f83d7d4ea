//! Hypothesis contrast matrices `C` and projections `T = Cᵀ[CCᵀ]⁺C`.
//!
//! Effect vectors are ordered group-major, so index `i·d + j` refers to group
//! `i`, occasion `j`, matching the Kronecker forms below.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{centering, kron, pinv, rank, Matrix};

/// Tolerance on `|C·1|` for user-supplied contrasts.
pub const CONTRAST_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HypothesisKind {
    /// No group effect: `P_a ⊗ (1/d) 1_dᵀ`.
    Group,
    /// No time effect: `(1/a) 1_aᵀ ⊗ P_d`.
    Time,
    /// No group × time interaction: `P_a ⊗ P_d`.
    Interaction,
    Custom,
}

impl HypothesisKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HypothesisKind::Group => "group",
            HypothesisKind::Time => "time",
            HypothesisKind::Interaction => "interaction",
            HypothesisKind::Custom => "custom",
        }
    }

    /// Whether the canonical hypothesis is defined for an `a × d` design.
    pub fn applies_to(self, a: usize, d: usize) -> bool {
        match self {
            HypothesisKind::Group => a >= 2,
            HypothesisKind::Time => d >= 2,
            HypothesisKind::Interaction => a >= 2 && d >= 2,
            HypothesisKind::Custom => true,
        }
    }
}

impl fmt::Display for HypothesisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HypothesisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "group" => Ok(HypothesisKind::Group),
            "time" => Ok(HypothesisKind::Time),
            "interaction" => Ok(HypothesisKind::Interaction),
            "custom" => Ok(HypothesisKind::Custom),
            other => Err(Error::InvalidDesign(format!("unknown hypothesis `{other}`"))),
        }
    }
}

/// A contrast matrix with its projection and rank.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastSpec {
    pub kind: HypothesisKind,
    pub label: String,
    c: Matrix,
    scaled: Matrix,
    t: Matrix,
    rank: usize,
}

impl ContrastSpec {
    /// Wraps a user-supplied matrix after checking that every row sums to zero.
    pub fn custom(label: impl Into<String>, c: Matrix) -> Result<Self> {
        for (row, r) in c.row_iter().enumerate() {
            let sum: f64 = r.iter().sum();
            let scale = r.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            if sum.abs() > CONTRAST_TOL * scale {
                return Err(Error::NotAContrast { row, sum });
            }
        }
        let scaled = c.clone();
        Ok(Self::from_parts(HypothesisKind::Custom, label.into(), c, scaled))
    }

    fn from_parts(kind: HypothesisKind, label: String, c: Matrix, scaled: Matrix) -> Self {
        let t = projection(&c);
        let rank = rank(&c);
        Self {
            kind,
            label,
            c,
            scaled,
            t,
            rank,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.c
    }

    /// A positive multiple of `C` whose entries are exact in `f64`: `a·d·C`
    /// for the canonical hypotheses, `C` itself for custom ones.
    pub fn scaled_matrix(&self) -> &Matrix {
        &self.scaled
    }

    pub fn projection(&self) -> &Matrix {
        &self.t
    }

    /// `rank(C)`, the WTS degrees of freedom.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn columns(&self) -> usize {
        self.c.ncols()
    }
}

/// Canonical contrast for an `a × d` design.
pub fn hypothesis_matrix(a: usize, d: usize, kind: HypothesisKind) -> Result<ContrastSpec> {
    if a == 0 || d == 0 {
        return Err(Error::InvalidDesign("a and d must be at least 1".into()));
    }
    if !kind.applies_to(a, d) || kind == HypothesisKind::Custom {
        return Err(Error::InvalidDesign(format!(
            "hypothesis `{kind}` is not defined for a={a}, d={d}"
        )));
    }
    let mean_row = |m: usize| Matrix::from_element(1, m, 1.0 / m as f64);
    let c = match kind {
        HypothesisKind::Group => kron(&centering(a), &mean_row(d)),
        HypothesisKind::Time => kron(&mean_row(a), &centering(d)),
        HypothesisKind::Interaction => kron(&centering(a), &centering(d)),
        HypothesisKind::Custom => unreachable!(),
    };
    // m·P_m = m·I - J has integer entries
    let scaled_centering = |m: usize| Matrix::identity(m, m) * m as f64 - Matrix::from_element(m, m, 1.0);
    let ones = |m: usize| Matrix::from_element(1, m, 1.0);
    let scaled = match kind {
        HypothesisKind::Group => kron(&scaled_centering(a), &ones(d)),
        HypothesisKind::Time => kron(&ones(a), &scaled_centering(d)),
        HypothesisKind::Interaction => kron(&scaled_centering(a), &scaled_centering(d)),
        HypothesisKind::Custom => unreachable!(),
    };
    Ok(ContrastSpec::from_parts(kind, kind.as_str().to_string(), c, scaled))
}

/// `T = Cᵀ [C Cᵀ]⁺ C`.
pub fn projection(c: &Matrix) -> Matrix {
    let cct = c * c.transpose();
    let t = c.transpose() * pinv(&cct) * c;
    // symmetrize rounding noise
    (&t + t.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn row_sums_zero(c: &Matrix) {
        for r in c.row_iter() {
            assert!(r.iter().sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn group_contrast_a2_d4() {
        let spec = hypothesis_matrix(2, 4, HypothesisKind::Group).unwrap();
        let c = spec.matrix();
        assert_eq!(c.shape(), (2, 8));
        let first = [1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0];
        for (j, &s) in first.iter().enumerate() {
            assert_relative_eq!(c[(0, j)], s / 8.0, epsilon = 1e-15);
            assert_relative_eq!(c[(1, j)], -s / 8.0, epsilon = 1e-15);
        }
        assert_eq!(spec.rank(), 1);
        row_sums_zero(c);
    }

    #[test]
    fn interaction_rank_is_product() {
        let spec = hypothesis_matrix(2, 4, HypothesisKind::Interaction).unwrap();
        assert_eq!(spec.rank(), 3);
        row_sums_zero(spec.matrix());
        let spec = hypothesis_matrix(3, 4, HypothesisKind::Interaction).unwrap();
        assert_eq!(spec.rank(), 6);
    }

    #[test]
    fn one_group_time_is_centering() {
        let spec = hypothesis_matrix(1, 4, HypothesisKind::Time).unwrap();
        assert_relative_eq!(spec.matrix().clone(), centering(4), epsilon = 1e-15);
        assert_eq!(spec.rank(), 3);
        assert_relative_eq!(spec.projection().clone(), centering(4), epsilon = 1e-12);
    }

    #[test]
    fn unsupported_kinds_are_rejected() {
        assert!(matches!(
            hypothesis_matrix(1, 4, HypothesisKind::Group),
            Err(Error::InvalidDesign(_))
        ));
        assert!(hypothesis_matrix(2, 1, HypothesisKind::Time).is_err());
        assert!(hypothesis_matrix(2, 1, HypothesisKind::Interaction).is_err());
        assert!(hypothesis_matrix(2, 1, HypothesisKind::Group).is_ok());
    }

    #[test]
    fn projection_properties() {
        for &(a, d) in &[(2, 2), (2, 4), (3, 3), (2, 8)] {
            for kind in [HypothesisKind::Group, HypothesisKind::Time, HypothesisKind::Interaction] {
                let spec = hypothesis_matrix(a, d, kind).unwrap();
                let t = spec.projection();
                assert_eq!(t.clone(), t.transpose());
                assert!((t * t - t).norm() < 1e-10);
                let ones = Matrix::from_element(a * d, 1, 1.0);
                assert!((t * &ones).norm() < 1e-12);
                assert_eq!(rank(t), spec.rank());
            }
        }
    }

    #[test]
    fn projection_ignores_scaling_and_duplicates() {
        let base = hypothesis_matrix(2, 3, HypothesisKind::Interaction).unwrap();
        let t0 = base.projection().clone();
        let scaled = projection(&(base.matrix() * 7.0));
        assert_relative_eq!(scaled, t0, epsilon = 1e-12);
        let c = base.matrix();
        let mut dup = Matrix::zeros(c.nrows() * 2, c.ncols());
        dup.view_mut((0, 0), c.shape()).copy_from(c);
        dup.view_mut((c.nrows(), 0), c.shape()).copy_from(c);
        assert_relative_eq!(projection(&dup), t0, epsilon = 1e-10);
    }

    #[test]
    fn scaled_form_is_an_exact_multiple() {
        for &(a, d) in &[(2, 3), (3, 4), (1, 5), (4, 1)] {
            for kind in [HypothesisKind::Group, HypothesisKind::Time, HypothesisKind::Interaction] {
                if !kind.applies_to(a, d) {
                    continue;
                }
                let spec = hypothesis_matrix(a, d, kind).unwrap();
                let s = spec.scaled_matrix();
                assert!(s.iter().all(|x| x.fract() == 0.0));
                assert_relative_eq!(s / (a * d) as f64, spec.matrix().clone(), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn custom_contrast_validation() {
        let ok = Matrix::from_row_slice(1, 4, &[1.0, -1.0, 0.0, 0.0]);
        assert!(ContrastSpec::custom("first", ok).is_ok());
        let bad = Matrix::from_row_slice(1, 4, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            ContrastSpec::custom("bad", bad),
            Err(Error::NotAContrast { row: 0, .. })
        ));
    }
}
