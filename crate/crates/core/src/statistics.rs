//! Quadratic-form test statistics.
//!
//! * WTS: `n p̂ᵀCᵀ[C V̂_n Cᵀ]⁺C p̂`, asymptotically `χ²_f` with `f = rank(C)`.
//! * ATS: `n p̂ᵀT p̂ / tr(T V̂_n)`, referred to `F(f̂, ∞)` with
//!   `f̂ = tr(T V̂_n)² / tr(T V̂_n T V̂_n)`.
//! * MATS: `n p̂ᵀCᵀ[C D̂_n Cᵀ]⁺C p̂`; no asymptotic reference distribution is
//!   used, only the bootstrap.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::contrasts::ContrastSpec;
use crate::error::{Error, Result};
use crate::numerics::{pinv, quadform, trace_of_product, Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StatKind {
    Wts,
    Ats,
    Mats,
}

impl StatKind {
    pub const ALL: [StatKind; 3] = [StatKind::Wts, StatKind::Ats, StatKind::Mats];

    pub fn as_str(self) -> &'static str {
        match self {
            StatKind::Wts => "WTS",
            StatKind::Ats => "ATS",
            StatKind::Mats => "MATS",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "wts" => Some(StatKind::Wts),
            "ats" => Some(StatKind::Ats),
            "mats" => Some(StatKind::Mats),
            _ => None,
        }
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An observed statistic with its degrees-of-freedom quantity and
/// asymptotic p-value where one is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatValue {
    pub kind: StatKind,
    pub value: f64,
    pub dof: Option<f64>,
    pub p_asymptotic: Option<f64>,
}

/// Upper tail of the χ² distribution with (possibly fractional) `df`.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    if !(x > 0.0) {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    gamma_ur(df / 2.0, x / 2.0).clamp(0.0, 1.0)
}

fn contrasted(p: &[f64], c: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; c.nrows()];
    for (r, o) in out.iter_mut().enumerate() {
        *o = c.row(r).iter().zip(p).map(|(a, b)| a * b).sum();
    }
    out
}

pub(crate) fn check_len(p: &[f64], contrast: &ContrastSpec) -> Result<()> {
    if p.len() != contrast.columns() {
        return Err(Error::DimensionMismatch(format!(
            "effect vector of length {} for contrast with {} columns",
            p.len(),
            contrast.columns()
        )));
    }
    Ok(())
}

/// `n (Cp)ᵀ [C S Cᵀ]⁺ (Cp)`, clamped at zero.
fn studentized(p: &[f64], s: &Matrix, c: &Matrix, n: f64) -> Result<f64> {
    let cp = contrasted(p, c);
    let middle = c * s * c.transpose();
    let q = quadform(&cp, &pinv(&middle))?;
    Ok((n * q).max(0.0))
}

/// WTS value only.
pub fn wts_value(p: &[f64], vn: &Matrix, contrast: &ContrastSpec, n: usize) -> Result<f64> {
    check_len(p, contrast)?;
    studentized(p, vn, contrast.matrix(), n as f64)
}

/// ATS value and `f̂`.
pub fn ats_value(p: &[f64], vn: &Matrix, contrast: &ContrastSpec, n: usize) -> Result<(f64, f64)> {
    check_len(p, contrast)?;
    let t = contrast.projection();
    let tv = t * vn;
    let tr = tv.trace();
    if !(tr > 0.0) {
        return Err(Error::DegenerateTrace(tr));
    }
    let q = quadform(p, t)?;
    let value = (n as f64 * q / tr).max(0.0);
    let f_hat = tr * tr / trace_of_product(&tv, &tv)?;
    Ok((value, f_hat))
}

pub(crate) fn check_diagonal(dn: &Vector) -> Result<()> {
    match dn.iter().position(|&x| !(x > 0.0)) {
        Some(index) => Err(Error::ZeroDiagonal { index }),
        None => Ok(()),
    }
}

/// MATS value only.
pub fn mats_value(p: &[f64], dn: &Vector, contrast: &ContrastSpec, n: usize) -> Result<f64> {
    check_len(p, contrast)?;
    check_diagonal(dn)?;
    let d = Matrix::from_diagonal(dn);
    studentized(p, &d, contrast.matrix(), n as f64)
}

pub fn wts(p: &[f64], vn: &Matrix, contrast: &ContrastSpec, n: usize) -> Result<StatValue> {
    Ok(wts_from_value(wts_value(p, vn, contrast, n)?, contrast))
}

/// WTS report for a value computed elsewhere.
pub fn wts_from_value(value: f64, contrast: &ContrastSpec) -> StatValue {
    let f = contrast.rank() as f64;
    StatValue {
        kind: StatKind::Wts,
        value,
        dof: Some(f),
        p_asymptotic: Some(chi2_sf(value, f)),
    }
}

pub fn ats(p: &[f64], vn: &Matrix, contrast: &ContrastSpec, n: usize) -> Result<StatValue> {
    let (value, f_hat) = ats_value(p, vn, contrast, n)?;
    Ok(StatValue {
        kind: StatKind::Ats,
        value,
        dof: Some(f_hat),
        // F(f, ∞) is χ²_f / f
        p_asymptotic: Some(chi2_sf(f_hat * value, f_hat)),
    })
}

pub fn mats(p: &[f64], dn: &Vector, contrast: &ContrastSpec, n: usize) -> Result<StatValue> {
    Ok(mats_from_value(mats_value(p, dn, contrast, n)?))
}

pub fn mats_from_value(value: f64) -> StatValue {
    StatValue {
        kind: StatKind::Mats,
        value,
        dof: None,
        p_asymptotic: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrasts::{hypothesis_matrix, HypothesisKind};
    use crate::numerics::centering;
    use approx::assert_relative_eq;

    fn time4() -> ContrastSpec {
        hypothesis_matrix(1, 4, HypothesisKind::Time).unwrap()
    }

    #[test]
    fn chi2_sf_reference_values() {
        // χ²₁ upper 5% point and χ²₃ at 7.814727903251178
        assert_relative_eq!(chi2_sf(3.841458820694124, 1.0), 0.05, epsilon = 1e-12);
        assert_relative_eq!(chi2_sf(7.814727903251178, 3.0), 0.05, epsilon = 1e-12);
        // χ²₂ has survival exp(-x/2)
        assert_relative_eq!(chi2_sf(3.0, 2.0), (-1.5f64).exp(), epsilon = 1e-14);
        assert_eq!(chi2_sf(0.0, 2.5), 1.0);
    }

    #[test]
    fn null_effects_give_zero() {
        let spec = time4();
        let p = [0.3; 4];
        let v = Matrix::identity(4, 4);
        let w = wts(&p, &v, &spec, 10).unwrap();
        assert!(w.value.abs() < 1e-12);
        assert_relative_eq!(w.p_asymptotic.unwrap(), 1.0);
        let a = ats(&p, &v, &spec, 10).unwrap();
        assert!(a.value.abs() < 1e-12);
        assert_relative_eq!(a.p_asymptotic.unwrap(), 1.0);
        let m = mats(&p, &v.diagonal(), &spec, 10).unwrap();
        assert!(m.value.abs() < 1e-12);
    }

    #[test]
    fn wts_is_invariant_to_scaling_the_contrast() {
        let spec = time4();
        let scaled = ContrastSpec::custom("3C", spec.matrix() * 3.0).unwrap();
        let p = [0.2, 0.4, 0.5, 0.9];
        let v = Matrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 0.3 });
        let a = wts_value(&p, &v, &spec, 12).unwrap();
        let b = wts_value(&p, &v, &scaled, 12).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn two_sample_scalar_wts() {
        let spec = hypothesis_matrix(2, 1, HypothesisKind::Group).unwrap();
        let (n1, n2) = (4usize, 6usize);
        let n = (n1 + n2) as f64;
        let (v1, v2) = (0.02, 0.035);
        let p: [f64; 2] = [0.4, 0.6];
        let vn = Matrix::from_diagonal(&Vector::from_vec(vec![n / n1 as f64 * v1, n / n2 as f64 * v2]));
        let expected = n * (p[0] - p[1]).powi(2) / (n / n1 as f64 * v1 + n / n2 as f64 * v2);
        assert_relative_eq!(wts_value(&p, &vn, &spec, 10).unwrap(), expected, max_relative = 1e-12);
        assert_eq!(spec.rank(), 1);
    }

    #[test]
    fn ats_dof_single_eigenvalue() {
        // TV of rank one
        let spec = hypothesis_matrix(2, 1, HypothesisKind::Group).unwrap();
        let vn = Matrix::from_diagonal(&Vector::from_vec(vec![0.3, 0.7]));
        let (_, f) = ats_value(&[0.4, 0.6], &vn, &spec, 5).unwrap();
        assert_relative_eq!(f, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ats_dof_equal_eigenvalues() {
        for m in 2..7 {
            let spec = hypothesis_matrix(1, m, HypothesisKind::Time).unwrap();
            assert_relative_eq!(spec.projection().clone(), centering(m), epsilon = 1e-12);
            let p: Vec<f64> = (0..m).map(|j| j as f64 / m as f64).collect();
            let (_, f) = ats_value(&p, &Matrix::identity(m, m), &spec, 5).unwrap();
            assert_relative_eq!(f, (m - 1) as f64, epsilon = 1e-10);
        }
    }

    #[test]
    fn degenerate_inputs() {
        let spec = time4();
        let p = [0.1, 0.2, 0.3, 0.4];
        assert!(matches!(
            ats_value(&p, &Matrix::zeros(4, 4), &spec, 5),
            Err(Error::DegenerateTrace(_))
        ));
        let dn = Vector::from_vec(vec![1.0, 0.0, 1.0, 1.0]);
        assert_eq!(
            mats_value(&p, &dn, &spec, 5).unwrap_err(),
            Error::ZeroDiagonal { index: 1 }
        );
        assert!(wts_value(&p[..3], &Matrix::identity(4, 4), &spec, 5).is_err());
    }

    #[test]
    fn mats_equals_wts_for_diagonal_covariance() {
        let spec = hypothesis_matrix(2, 2, HypothesisKind::Interaction).unwrap();
        let dn = Vector::from_vec(vec![0.1, 0.2, 0.15, 0.3]);
        let p = [0.3, 0.6, 0.55, 0.45];
        let w = wts_value(&p, &Matrix::from_diagonal(&dn), &spec, 20).unwrap();
        let m = mats_value(&p, &dn, &spec, 20).unwrap();
        assert_relative_eq!(w, m, max_relative = 1e-13);
    }
}
