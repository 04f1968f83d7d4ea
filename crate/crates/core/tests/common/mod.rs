//! Reference implementations written straight from the defining formulas.
//! They share no code with the library beyond the matrix type; only
//! [`compare_with_library`] calls into it.

#![allow(dead_code)]

pub mod exact;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

pub type Rows = Vec<Vec<Option<f64>>>;

/// `c(u)`: 0, ½ or 1.
pub fn count(u: f64) -> f64 {
    if u < 0.0 {
        0.0
    } else if u == 0.0 {
        0.5
    } else {
        1.0
    }
}

/// Mid-ranks by the counting function, `O(N²)`.
pub fn counting_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&x| 0.5 + values.iter().map(|&y| count(x - y)).sum::<f64>())
        .collect()
}

/// Everything the test statistics are built from.
pub struct Reference {
    pub a: usize,
    pub d: usize,
    pub n: usize,
    pub big_n: usize,
    pub ranks: Vec<Vec<Vec<Option<f64>>>>,
    pub p: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn reference(groups: &[Rows]) -> Reference {
    let a = groups.len();
    let d = groups[0][0].len();
    let pooled: Vec<f64> = groups.iter().flatten().flatten().flatten().copied().collect();
    let big_n = pooled.len();
    let n: usize = groups.iter().map(Vec::len).sum();
    let nf = big_n as f64;

    let ranks: Vec<Vec<Vec<Option<f64>>>> = groups
        .iter()
        .map(|g| {
            g.iter()
                .map(|row| {
                    row.iter()
                        .map(|x| x.map(|x| 0.5 + pooled.iter().map(|&y| count(x - y)).sum::<f64>()))
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut p = Vec::with_capacity(a * d);
    for g in &ranks {
        for j in 0..d {
            let obs: Vec<f64> = g.iter().filter_map(|r| r[j]).collect();
            p.push((obs.iter().sum::<f64>() / obs.len() as f64 - 0.5) / nf);
        }
    }
    let v = covariance_of(&ranks, big_n);
    Reference { a, d, n, big_n, ranks, p, v }
}

/// `V̂_n` for arbitrary per-subject values (ranks or bootstrap values), with
/// `N` the total number of observed values.
pub fn covariance_of(values: &[Rows], big_n: usize) -> DMatrix<f64> {
    let a = values.len();
    let d = values[0][0].len();
    let n: usize = values.iter().map(Vec::len).sum();
    let nf = big_n as f64;
    let lambda = |i: usize, j: usize| values[i].iter().filter(|r| r[j].is_some()).count();
    let mean = |i: usize, j: usize| values[i].iter().filter_map(|r| r[j]).sum::<f64>() / lambda(i, j) as f64;
    let mut v = DMatrix::zeros(a * d, a * d);
    for i in 0..a {
        let ni = values[i].len() as f64;
        for j in 0..d {
            for jp in 0..d {
                let both = values[i].iter().filter(|r| r[j].is_some() && r[jp].is_some()).count() as f64;
                let den = (lambda(i, j) as f64 - 1.0) * (lambda(i, jp) as f64 - 1.0) + both - 1.0;
                if den <= 0.0 {
                    continue;
                }
                let (mj, mjp) = (mean(i, j), mean(i, jp));
                let num: f64 = values[i]
                    .iter()
                    .filter_map(|r| Some((r[j]? - mj) * (r[jp]? - mjp)))
                    .sum();
                let vij = ni * num / (nf * nf * den);
                v[(i * d + j, i * d + jp)] = n as f64 / ni * vij;
            }
        }
    }
    v
}

/// Bootstrap effects and covariance for one set of signs `w[i][k]`.
pub fn bootstrap_reference(r: &Reference, w: &[Vec<f64>]) -> (Vec<f64>, DMatrix<f64>) {
    let nf = r.big_n as f64;
    let z: Vec<Rows> = r
        .ranks
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let means: Vec<f64> = (0..r.d)
                .map(|j| {
                    let obs: Vec<f64> = g.iter().filter_map(|row| row[j]).collect();
                    obs.iter().sum::<f64>() / obs.len() as f64
                })
                .collect();
            g.iter()
                .enumerate()
                .map(|(k, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, x)| x.map(|x| w[i][k] * (x - means[j])))
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut p = Vec::with_capacity(r.a * r.d);
    for g in &z {
        for j in 0..r.d {
            let obs: Vec<f64> = g.iter().filter_map(|row| row[j]).collect();
            p.push(obs.iter().sum::<f64>() / obs.len() as f64 / nf);
        }
    }
    (p, covariance_of(&z, r.big_n))
}

/// Complete-data covariance: `⊕ (n/n_i) S_i / N²` with `S_i` the sample
/// covariance matrix of the rank vectors of group `i`.
pub fn complete_covariance(r: &Reference) -> DMatrix<f64> {
    let (a, d) = (r.a, r.d);
    let nf = r.big_n as f64;
    let mut v = DMatrix::zeros(a * d, a * d);
    for i in 0..a {
        let rows: Vec<DMatrix<f64>> = r.ranks[i]
            .iter()
            .map(|row| DMatrix::from_iterator(d, 1, row.iter().map(|x| x.unwrap())))
            .collect();
        let ni = rows.len() as f64;
        let mean = rows.iter().fold(DMatrix::zeros(d, 1), |acc, x| acc + x) / ni;
        let s = rows
            .iter()
            .map(|x| (x - &mean) * (x - &mean).transpose())
            .fold(DMatrix::zeros(d, d), |acc, m| acc + m)
            / (ni - 1.0);
        let block = s * (r.n as f64 / ni) / (nf * nf);
        v.view_mut((i * d, i * d), (d, d)).copy_from(&block);
    }
    v
}

fn centering(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |r, c| if r == c { 1.0 } else { 0.0 } - 1.0 / m as f64)
}

/// Contrast matrices built entry by entry.
pub fn group_contrast(a: usize, d: usize) -> DMatrix<f64> {
    let pa = centering(a);
    DMatrix::from_fn(a, a * d, |r, c| pa[(r, c / d)] / d as f64)
}

pub fn time_contrast(a: usize, d: usize) -> DMatrix<f64> {
    let pd = centering(d);
    DMatrix::from_fn(d, a * d, |r, c| pd[(r, c % d)] / a as f64)
}

pub fn interaction_contrast(a: usize, d: usize) -> DMatrix<f64> {
    let (pa, pd) = (centering(a), centering(d));
    DMatrix::from_fn(a * d, a * d, |r, c| pa[(r / d, c / d)] * pd[(r % d, c % d)])
}

/// Pseudoinverse of a symmetric matrix by eigendecomposition, dropping
/// eigenvalues below `1e-10` of the largest in magnitude.
pub fn sym_pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let top = eig.eigenvalues.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let k = m.nrows();
    let mut out = DMatrix::zeros(k, k);
    for (idx, &lam) in eig.eigenvalues.iter().enumerate() {
        if top > 0.0 && lam.abs() > 1e-10 * top {
            let u = eig.eigenvectors.column(idx);
            out += (u * u.transpose()) / lam;
        }
    }
    out
}

pub struct Stats {
    pub wts: f64,
    pub ats: Option<(f64, f64)>,
    pub mats: Option<f64>,
}

fn quad(x: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    (x.transpose() * m * x)[(0, 0)]
}

/// Linearly independent rows with the same row space as the full contrast:
/// rows indexed without the last group and/or the last occasion.
pub fn reduced_group(a: usize, d: usize) -> DMatrix<f64> {
    group_contrast(a, d).rows(0, a - 1).into_owned()
}

pub fn reduced_time(a: usize, d: usize) -> DMatrix<f64> {
    time_contrast(a, d).rows(0, d - 1).into_owned()
}

pub fn reduced_interaction(a: usize, d: usize) -> DMatrix<f64> {
    let keep: Vec<usize> = (0..a * d).filter(|r| r / d < a - 1 && r % d < d - 1).collect();
    interaction_contrast(a, d).select_rows(&keep)
}

/// `n xᵀ S⁻¹ x` for `x = K p`, `S = K M Kᵀ` by LU when `S` is well
/// conditioned. Otherwise the full contrast `C` and an eigen
/// pseudoinverse, since with a singular `M` the value depends on the
/// choice of rows.
fn studentized(p: &DMatrix<f64>, m: &DMatrix<f64>, c: &DMatrix<f64>, k: &DMatrix<f64>, n: f64) -> f64 {
    let s = k * m * k.transpose();
    let eig = SymmetricEigen::new(s.clone()).eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x.abs()), hi.max(x.abs())));
    let q = match (hi > 0.0 && lo > 1e-8 * hi).then(|| s.lu().try_inverse()).flatten() {
        Some(inv) => quad(&(k * p), &inv),
        None => quad(&(c * p), &sym_pinv(&(c * m * c.transpose()))),
    };
    (n * q).max(0.0)
}

/// Statistics for the full contrast `c` with reduced form `k`.
pub fn statistics(p: &[f64], v: &DMatrix<f64>, c: &DMatrix<f64>, k: &DMatrix<f64>, n: usize) -> Stats {
    let n = n as f64;
    let p = DMatrix::from_column_slice(p.len(), 1, p);
    let wts = studentized(&p, v, c, k, n);

    let t = k.transpose() * (k * k.transpose()).lu().try_inverse().expect("independent rows") * k;
    let tv = &t * v;
    let tr = tv.trace();
    let ats = (tr > 0.0).then(|| {
        let value = (n * quad(&p, &t) / tr).max(0.0);
        (value, tr * tr / (&tv * &tv).trace())
    });

    let diag = DMatrix::from_diagonal(&v.diagonal());
    let mats = v.diagonal().iter().all(|&x| x > 0.0).then(|| studentized(&p, &diag, c, k, n));
    Stats { wts, ats, mats }
}

/// `|x - y| ≤ tol · max(1, |y|)`.
pub fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * y.abs().max(1.0)
}

/// Values on a coarse grid so that ties occur.
pub fn random_value(rng: &mut impl Rng, tie_grid: bool) -> f64 {
    let z: f64 = rng.random_range(-3.0..3.0);
    if tie_grid {
        (z * 2.0).round() / 2.0
    } else {
        z
    }
}

/// Random dataset with every cell holding at least two values.
pub fn random_dataset(rng: &mut impl Rng, a: usize, d: usize, sizes: &[usize], miss: f64, ties: bool) -> Vec<Rows> {
    loop {
        let groups: Vec<Rows> = (0..a)
            .map(|i| {
                (0..sizes[i])
                    .map(|_| {
                        (0..d)
                            .map(|_| (!rng.random_bool(miss)).then(|| random_value(rng, ties)))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let ok = groups
            .iter()
            .all(|g| (0..d).all(|j| g.iter().filter(|r| r[j].is_some()).count() >= 2));
        if ok {
            return groups;
        }
    }
}

/// Checks `p̂`, `V̂_n` and every statistic of every applicable hypothesis
/// against the exact rational reference at relative tolerance `tol`.
pub fn compare_with_library(groups: &[Rows], tol: f64) -> Result<(), String> {
    use exact::{exact_reference, exact_statistics, to_f64};
    use rankwild::{hypothesis_matrix, Analysis, HypothesisKind, IncompleteDataset, StatKind};

    let e = exact_reference(groups);
    let data = IncompleteDataset::from_nested(groups)
        .and_then(|d| d.validate())
        .map_err(|e| e.to_string())?;
    let lib = Analysis::new(&data);
    for (k, (x, y)) in lib.effects.as_slice().iter().zip(&e.p).enumerate() {
        if !close(*x, to_f64(y), tol) {
            return Err(format!("p[{k}]: {x} vs {}", to_f64(y)));
        }
    }
    for (row, want) in e.v.iter().enumerate() {
        for (col, y) in want.iter().enumerate() {
            let (x, y) = (lib.covariance.vn[(row, col)], to_f64(y));
            if !close(x, y, tol) {
                return Err(format!("V[{row},{col}]: {x} vs {y}"));
            }
        }
    }
    let kinds = [HypothesisKind::Group, HypothesisKind::Time, HypothesisKind::Interaction];
    for (which, kind) in kinds.into_iter().enumerate() {
        if !kind.applies_to(e.a, e.d) {
            continue;
        }
        let spec = hypothesis_matrix(e.a, e.d, kind).map_err(|e| e.to_string())?;
        let want = exact_statistics(&e, which);
        let wts = lib.statistic(StatKind::Wts, &spec).map_err(|e| e.to_string())?;
        if !close(wts.value, to_f64(&want.wts), tol) {
            return Err(format!("{kind} WTS: {} vs {}", wts.value, to_f64(&want.wts)));
        }
        match (lib.statistic(StatKind::Ats, &spec), want.ats) {
            (Ok(got), Some((value, f))) => {
                let (value, f) = (to_f64(&value), to_f64(&f));
                if !close(got.value, value, tol) || !close(got.dof.unwrap(), f, tol) {
                    return Err(format!("{kind} ATS: ({}, {:?}) vs ({value}, {f})", got.value, got.dof));
                }
            }
            (Err(_), None) => {}
            (got, want) => return Err(format!("{kind} ATS: {got:?} vs {:?}", want.map(|(v, f)| (to_f64(&v), to_f64(&f))))),
        }
        match (lib.statistic(StatKind::Mats, &spec), want.mats.as_ref().map(to_f64)) {
            (Ok(got), Some(value)) if close(got.value, value, tol) => {}
            (Err(_), None) => {}
            (got, want) => return Err(format!("{kind} MATS: {got:?} vs {want:?}")),
        }
    }
    Ok(())
}
