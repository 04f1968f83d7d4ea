//! Rank-based covariance estimate `V̂_n` with missing values.
//!
//! cargo run --example covariance

use rankwild::{Analysis, IncompleteDataset};

fn main() -> rankwild::Result<()> {
    let data = IncompleteDataset::from_nested(&[vec![
        vec![Some(0.3), Some(1.9), Some(0.7)],
        vec![Some(1.7), None, Some(0.5)],
        vec![Some(-0.4), Some(2.5), None],
        vec![Some(2.2), Some(2.4), Some(-2.0)],
        vec![None, Some(0.1), Some(1.1)],
        vec![Some(0.9), Some(-1.0), Some(0.4)],
    ]])?
    .validate()?;

    let counts = data.counts();
    for j in 0..3 {
        for jp in 0..3 {
            print!("Δ({},{}) = {}  ", j + 1, jp + 1, counts.delta(0, j, jp));
        }
        println!();
    }

    let analysis = Analysis::new(&data);
    println!("V_n =\n{:.6}", analysis.covariance.vn);
    println!("D_n = {:.6}", analysis.covariance.dn.transpose());
    for e in &analysis.covariance.degenerate {
        println!("entry ({}, {}) of group {} has no usable pairs", e.occasion + 1, e.other + 1, e.group + 1);
    }
    Ok(())
}
