//! Double-double evaluation of the observed quadratic forms
//! `n (Cp̂)ᵀ [C S Cᵀ]⁺ (Cp̂)` with `S = V̂_n` (WTS) or `S = D̂_n` (MATS).
//!
//! When `C V̂_n Cᵀ` is nearly singular its condition number multiplies the
//! rounding error carried by `V̂_n` and `C`, and an `f64` evaluation can lose
//! most of its digits. Here `p̂` and `V̂_n` are rebuilt from the ranks in
//! double-double arithmetic (about 32 significant digits), the contrast is
//! taken in its exactly representable scaled form, and the pseudoinverse
//! comes from a cyclic Jacobi eigendecomposition. Bootstrap replicates are
//! only compared against the observed value and stay in `f64`.

use twofloat::TwoFloat;

use crate::contrasts::ContrastSpec;
use crate::data::CellCounts;
use crate::numerics::{Matrix, DEFAULT_RTOL};
use crate::ranking::RankTable;

type Dd = TwoFloat;

const MAX_SWEEPS: usize = 60;

fn zero() -> Dd {
    Dd::from(0.0)
}

/// `a / b` to double-double accuracy. The `TwoFloat / TwoFloat` operator
/// forms its residual in plain `f64` and is only good to about 1e-16, so
/// divide by the leading word and correct with the exact residual.
pub fn div(a: Dd, b: Dd) -> Dd {
    if b.hi().is_infinite() && a.hi().is_finite() {
        return zero();
    }
    let q = a / b.hi();
    q + (a - q * b) / b.hi()
}

/// Dense square matrix of double-doubles, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DdMatrix {
    n: usize,
    data: Vec<Dd>,
}

impl DdMatrix {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> Dd {
        self.data[r * self.n + c]
    }

    fn set(&mut self, r: usize, c: usize, v: Dd) {
        self.data[r * self.n + c] = v;
    }

    /// Nearest `f64` matrix.
    pub fn to_f64(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |r, c| self.get(r, c).hi())
    }

    fn diagonal(&self) -> DdMatrix {
        let mut out = DdMatrix::zeros(self.n);
        for k in 0..self.n {
            out.set(k, k, self.get(k, k));
        }
        out
    }
}

/// `p̂` and `V̂_n` in double-double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct PreciseEstimate {
    pub effects: Vec<Dd>,
    pub vn: DdMatrix,
    d: usize,
}

impl PreciseEstimate {
    pub fn new(ranks: &RankTable, counts: &CellCounts) -> Self {
        let (a, d) = (counts.groups(), counts.occasions());
        let nn = counts.total_observed() as f64;
        let n = counts.n() as f64;
        let mut effects = vec![zero(); a * d];
        let mut vn = DdMatrix::zeros(a * d);
        for i in 0..a {
            let values = ranks.group_ranks(i);
            let mask = ranks.group_mask(i);
            let ni = counts.group_size(i);
            let observed = |j: usize| (0..ni).filter(move |&k| mask[k * d + j]).map(move |k| values[k * d + j]);
            // rank sums are exact: half-integers well below 2^52
            let means: Vec<Dd> = (0..d)
                .map(|j| {
                    let lambda = counts.lambda(i, j) as f64;
                    let sum: f64 = observed(j).sum();
                    effects[i * d + j] = Dd::new_sub(sum, lambda / 2.0) / (lambda * nn);
                    Dd::from(sum) / lambda
                })
                .collect();
            for j in 0..d {
                for jp in j..d {
                    let lj = counts.lambda(i, j) as f64;
                    let ljp = counts.lambda(i, jp) as f64;
                    let den = (lj - 1.0) * (ljp - 1.0) + counts.delta(i, j, jp) as f64 - 1.0;
                    if den <= 0.0 {
                        continue;
                    }
                    let mut num = zero();
                    for k in 0..ni {
                        let (x, y) = (k * d + j, k * d + jp);
                        if mask[x] && mask[y] {
                            num += (values[x] - means[j]) * (values[y] - means[jp]);
                        }
                    }
                    // (n / n_i) · n_i · num / (N² den)
                    let v = div(num * n, Dd::new_mul(nn * nn, den));
                    vn.set(i * d + j, i * d + jp, v);
                    vn.set(i * d + jp, i * d + j, v);
                }
            }
        }
        Self { effects, vn, d }
    }

    /// Observed WTS value.
    pub fn wts(&self, contrast: &ContrastSpec, n: usize) -> f64 {
        self.studentized(&self.vn, contrast, n)
    }

    /// Observed MATS value.
    pub fn mats(&self, contrast: &ContrastSpec, n: usize) -> f64 {
        self.studentized(&self.vn.diagonal(), contrast, n)
    }

    fn studentized(&self, s: &DdMatrix, contrast: &ContrastSpec, n: usize) -> f64 {
        let c = contrast.scaled_matrix();
        let (m, cols) = c.shape();
        let x: Vec<Dd> = (0..m)
            .map(|r| (0..cols).fold(zero(), |acc, u| acc + self.effects[u] * c[(r, u)]))
            .collect();
        // C S, using the block structure of S
        let d = self.d;
        let mut cs = vec![zero(); m * cols];
        for r in 0..m {
            for v in 0..cols {
                let block = v / d * d;
                let mut acc = zero();
                for u in block..block + d {
                    let cu = c[(r, u)];
                    if cu != 0.0 {
                        acc += s.get(u, v) * cu;
                    }
                }
                cs[r * cols + v] = acc;
            }
        }
        let mut middle = DdMatrix::zeros(m);
        for r in 0..m {
            for q in r..m {
                let mut acc = zero();
                for v in 0..cols {
                    let cq = c[(q, v)];
                    if cq != 0.0 {
                        acc += cs[r * cols + v] * cq;
                    }
                }
                middle.set(r, q, acc);
                middle.set(q, r, acc);
            }
        }
        let q = pinv_quadform(&x, middle, DEFAULT_RTOL);
        (q * n as f64).hi().max(0.0)
    }
}

/// `xᵀ M⁺ x` for symmetric `M`, dropping eigenvalues with
/// `|λ| ≤ rtol · max|λ|`.
pub fn pinv_quadform(x: &[Dd], m: DdMatrix, rtol: f64) -> Dd {
    let (values, vectors) = jacobi_eigen(m);
    let n = values.len();
    let top = values.iter().fold(0.0f64, |t, v| t.max(v.hi().abs()));
    let mut q = zero();
    if !(top > 0.0 && top.is_finite()) {
        return q;
    }
    for (k, &lambda) in values.iter().enumerate() {
        if lambda.hi().abs() <= rtol * top {
            continue;
        }
        let proj = (0..n).fold(zero(), |acc, r| acc + vectors.get(r, k) * x[r]);
        q += div(proj * proj, lambda);
    }
    q
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvalues and the eigenvectors as columns.
pub fn jacobi_eigen(mut a: DdMatrix) -> (Vec<Dd>, DdMatrix) {
    let n = a.n;
    let mut v = DdMatrix::zeros(n);
    for k in 0..n {
        v.set(k, k, Dd::from(1.0));
    }
    let scale: f64 = a.data.iter().map(|x| x.hi() * x.hi()).sum();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a.get(p, q).hi().powi(2))
            .sum();
        if off <= 1e-62 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                let diag = a.get(p, p).hi().abs() + a.get(q, q).hi().abs();
                if apq.hi().abs() <= 1e-36 * diag {
                    a.set(p, q, zero());
                    a.set(q, p, zero());
                    continue;
                }
                let theta = div(a.get(q, q) - a.get(p, p), apq * 2.0);
                let t = if theta.hi().abs() > 1e150 {
                    div(Dd::from(0.5), theta)
                } else {
                    let root = (theta * theta + 1.0).sqrt();
                    if theta >= 0.0 {
                        div(Dd::from(1.0), theta + root)
                    } else {
                        div(Dd::from(-1.0), root - theta)
                    }
                };
                let c = div(Dd::from(1.0), (t * t + 1.0).sqrt());
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a.get(k, p), a.get(k, q));
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let (apk, aqk) = (a.get(p, k), a.get(q, k));
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let (vkp, vkq) = (v.get(k, p), v.get(k, q));
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    ((0..n).map(|k| a.get(k, k)).collect(), v)
}
