//! The same estimators and statistics in exact rational arithmetic. Data
//! values only enter through comparisons, so everything downstream of the
//! ranks is a rational number and can be computed without rounding.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Rows;

pub type Q = BigRational;
pub type QMatrix = Vec<Vec<Q>>;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().expect("finite rational")
}

fn zeros(r: usize, c: usize) -> QMatrix {
    vec![vec![Q::zero(); c]; r]
}

pub fn mul(x: &QMatrix, y: &QMatrix) -> QMatrix {
    let (r, k, c) = (x.len(), y.len(), y.first().map_or(0, Vec::len));
    let mut out = zeros(r, c);
    for i in 0..r {
        for l in 0..k {
            if x[i][l].is_zero() {
                continue;
            }
            for j in 0..c {
                if !y[l][j].is_zero() {
                    out[i][j] += &x[i][l] * &y[l][j];
                }
            }
        }
    }
    out
}

pub fn transpose(x: &QMatrix) -> QMatrix {
    let c = x.first().map_or(0, Vec::len);
    (0..c).map(|j| x.iter().map(|row| row[j].clone()).collect()).collect()
}

fn column(v: &[Q]) -> QMatrix {
    v.iter().map(|x| vec![x.clone()]).collect()
}

fn trace(x: &QMatrix) -> Q {
    (0..x.len()).map(|i| x[i][i].clone()).fold(Q::zero(), |a, b| a + b)
}

/// Inverse by Gauss–Jordan elimination; `None` when singular.
pub fn inverse(x: &QMatrix) -> Option<QMatrix> {
    let n = x.len();
    let mut a: QMatrix = x
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for v in a[col].iter_mut() {
            *v *= &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (v, p) in a[r].iter_mut().zip(&pivot_row) {
                    *v -= &f * p;
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Indices of a maximal set of linearly independent columns.
fn independent_columns(x: &QMatrix) -> Vec<usize> {
    let mut a = x.clone();
    let (rows, cols) = (a.len(), a.first().map_or(0, Vec::len));
    let mut picked = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..rows {
            if !a[i][c].is_zero() {
                let f = &a[i][c] / &a[r][c];
                let pivot_row = a[r].clone();
                for (v, pv) in a[i].iter_mut().zip(&pivot_row) {
                    *v -= &f * pv;
                }
            }
        }
        picked.push(c);
        r += 1;
    }
    picked
}

/// Moore–Penrose inverse through the full-rank factorization `M = F G`,
/// `M⁺ = Gᵀ (G Gᵀ)⁻¹ (Fᵀ F)⁻¹ Fᵀ`.
pub fn pinv(m: &QMatrix) -> QMatrix {
    let cols = independent_columns(m);
    if cols.is_empty() {
        return zeros(m.first().map_or(0, Vec::len), m.len());
    }
    let f: QMatrix = m.iter().map(|row| cols.iter().map(|&c| row[c].clone()).collect()).collect();
    let ft = transpose(&f);
    let ftf_inv = inverse(&mul(&ft, &f)).expect("independent columns");
    let g = mul(&mul(&ftf_inv, &ft), m);
    let gt = transpose(&g);
    let ggt_inv = inverse(&mul(&g, &gt)).expect("full row rank");
    mul(&mul(&mul(&gt, &ggt_inv), &ftf_inv), &ft)
}

fn quad(x: &QMatrix, m: &QMatrix) -> Q {
    mul(&mul(&transpose(x), m), x)[0][0].clone()
}

/// Ranks (as exact halves), `p̂` and `V̂_n`.
pub struct Exact {
    pub a: usize,
    pub d: usize,
    pub n: usize,
    pub p: Vec<Q>,
    pub v: QMatrix,
}

pub fn exact_reference(groups: &[Rows]) -> Exact {
    let a = groups.len();
    let d = groups[0][0].len();
    let pooled: Vec<f64> = groups.iter().flatten().flatten().flatten().copied().collect();
    let big_n = pooled.len() as i64;
    let n: usize = groups.iter().map(Vec::len).sum();
    // 2R = 1 + Σ 2c(x - y)
    let rank = |x: f64| {
        let twice: i64 = 1 + pooled.iter().map(|&y| if x > y { 2 } else if x == y { 1 } else { 0 }).sum::<i64>();
        q(twice, 2)
    };
    let ranks: Vec<Vec<Vec<Option<Q>>>> = groups
        .iter()
        .map(|g| g.iter().map(|row| row.iter().map(|x| x.map(rank)).collect()).collect())
        .collect();

    let big_n_q = q(big_n, 1);
    let mut p = Vec::with_capacity(a * d);
    let mut v = zeros(a * d, a * d);
    for (i, g) in ranks.iter().enumerate() {
        let lambda = |j: usize| g.iter().filter(|r| r[j].is_some()).count() as i64;
        let mean = |j: usize| {
            let s = g.iter().filter_map(|r| r[j].clone()).fold(Q::zero(), |acc, x| acc + x);
            s / q(lambda(j), 1)
        };
        for j in 0..d {
            p.push((mean(j) - q(1, 2)) / &big_n_q);
        }
        let ni = g.len() as i64;
        for j in 0..d {
            for jp in 0..d {
                let both = g.iter().filter(|r| r[j].is_some() && r[jp].is_some()).count() as i64;
                let den = (lambda(j) - 1) * (lambda(jp) - 1) + both - 1;
                if den <= 0 {
                    continue;
                }
                let (mj, mjp) = (mean(j), mean(jp));
                let num = g
                    .iter()
                    .filter_map(|r| Some((r[j].clone()? - &mj) * (r[jp].clone()? - &mjp)))
                    .fold(Q::zero(), |acc, x| acc + x);
                let vij = q(ni, 1) * num / (&big_n_q * &big_n_q * q(den, 1));
                v[i * d + j][i * d + jp] = q(n as i64, ni) * vij;
            }
        }
    }
    Exact { a, d, n, p, v }
}

fn centering(m: usize) -> QMatrix {
    (0..m)
        .map(|r| (0..m).map(|c| q(if r == c { 1 } else { 0 }, 1) - q(1, m as i64)).collect())
        .collect()
}

/// Canonical contrasts entry by entry: 0 group, 1 time, 2 interaction.
pub fn contrast(a: usize, d: usize, which: usize) -> QMatrix {
    let (pa, pd) = (centering(a), centering(d));
    match which {
        0 => (0..a).map(|r| (0..a * d).map(|c| &pa[r][c / d] / q(d as i64, 1)).collect()).collect(),
        1 => (0..d).map(|r| (0..a * d).map(|c| &pd[r][c % d] / q(a as i64, 1)).collect()).collect(),
        _ => (0..a * d)
            .map(|r| (0..a * d).map(|c| &pa[r / d][c / d] * &pd[r % d][c % d]).collect())
            .collect(),
    }
}

/// Full-row-rank rows of [`contrast`]: drop the last group and/or occasion.
pub fn reduced(a: usize, d: usize, which: usize) -> QMatrix {
    let c = contrast(a, d, which);
    let keep: Vec<usize> = match which {
        0 => (0..a - 1).collect(),
        1 => (0..d - 1).collect(),
        _ => (0..a * d).filter(|r| r / d < a - 1 && r % d < d - 1).collect(),
    };
    keep.into_iter().map(|r| c[r].clone()).collect()
}

pub struct ExactStats {
    pub wts: Q,
    pub ats: Option<(Q, Q)>,
    pub mats: Option<Q>,
}

/// `n xᵀ S⁻¹ x` with `x = K p`, `S = K M Kᵀ` when `S` is invertible;
/// otherwise the full contrast with the exact pseudoinverse.
fn studentized(p: &QMatrix, m: &QMatrix, c: &QMatrix, k: &QMatrix, n: &Q) -> Q {
    let s = mul(&mul(k, m), &transpose(k));
    let value = match inverse(&s) {
        Some(inv) => quad(&mul(k, p), &inv),
        None => quad(&mul(c, p), &pinv(&mul(&mul(c, m), &transpose(c)))),
    };
    let value = n * value;
    if value.is_negative() {
        Q::zero()
    } else {
        value
    }
}

pub fn exact_statistics(e: &Exact, which: usize) -> ExactStats {
    let (c, k) = (contrast(e.a, e.d, which), reduced(e.a, e.d, which));
    let n = q(e.n as i64, 1);
    let p = column(&e.p);
    let wts = studentized(&p, &e.v, &c, &k, &n);

    let kt = transpose(&k);
    let t = mul(&mul(&kt, &inverse(&mul(&k, &kt)).expect("independent rows")), &k);
    let tv = mul(&t, &e.v);
    let tr = trace(&tv);
    let ats = tr.is_positive().then(|| {
        let value = &n * quad(&p, &t) / &tr;
        let value = if value.is_negative() { Q::zero() } else { value };
        let f = &tr * &tr / trace(&mul(&tv, &tv));
        (value, f)
    });

    let dim = e.v.len();
    let diag: QMatrix = (0..dim)
        .map(|r| (0..dim).map(|c| if r == c { e.v[r][r].clone() } else { Q::zero() }).collect())
        .collect();
    let mats = (0..dim)
        .all(|r| e.v[r][r].is_positive())
        .then(|| studentized(&p, &diag, &c, &k, &n));
    ExactStats { wts, ats, mats }
}
