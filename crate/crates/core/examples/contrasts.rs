//! Standard hypothesis matrices and a custom contrast.
//!
//! cargo run --example contrasts

use rankwild::numerics::Matrix;
use rankwild::{hypothesis_matrix, ContrastSpec, HypothesisKind};

fn main() -> rankwild::Result<()> {
    let (a, d) = (2, 3);
    for kind in [HypothesisKind::Group, HypothesisKind::Time, HypothesisKind::Interaction] {
        let spec = hypothesis_matrix(a, d, kind)?;
        println!("{kind}: rank {}\nC =\n{:.4}", spec.rank(), spec.matrix());
    }

    // first occasion against the mean of the two later ones, in group 1 only
    let c = Matrix::from_row_slice(1, a * d, &[1.0, -0.5, -0.5, 0.0, 0.0, 0.0]);
    let custom = ContrastSpec::custom("baseline vs follow-up, group 1", c)?;
    println!("{}: rank {}\nT =\n{:.4}", custom.label, custom.rank(), custom.projection());

    // rows must sum to zero
    let bad = Matrix::from_row_slice(1, a * d, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    match ContrastSpec::custom("bad", bad) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
