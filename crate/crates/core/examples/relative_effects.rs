//! Pooled mid-ranks and relative effects of a small incomplete dataset.
//!
//! cargo run --example relative_effects

use rankwild::ranking::relative_effects;
use rankwild::IncompleteDataset;

fn main() -> rankwild::Result<()> {
    // two groups, three occasions, `None` marks a missing value
    let data = IncompleteDataset::from_nested(&[
        vec![
            vec![Some(2.0), Some(3.0), None],
            vec![Some(1.0), Some(1.0), Some(2.0)],
            vec![Some(3.0), None, Some(4.0)],
        ],
        vec![
            vec![Some(4.0), Some(3.0), Some(3.0)],
            vec![None, Some(5.0), Some(4.0)],
            vec![Some(2.0), Some(6.0), Some(5.0)],
        ],
    ])?
    .validate()?;

    let (ranks, effects) = relative_effects(&data);
    println!("N = {} observed values", ranks.total_observed());
    for i in 0..ranks.groups() {
        for k in 0..data.counts().group_size(i) {
            let row: Vec<String> = (0..ranks.occasions())
                .map(|j| ranks.rank(i, k, j).map_or("  -".into(), |r| format!("{r:>4.1}")))
                .collect();
            println!("group {} subject {}: {}", i + 1, k + 1, row.join(" "));
        }
    }
    let d = ranks.occasions();
    for (idx, p) in effects.as_slice().iter().enumerate() {
        println!("p[{},{}] = {p:.4}", idx / d + 1, idx % d + 1);
    }

    // any strictly increasing transform leaves the effects unchanged
    let logged = data.data().map_values(|x| x.ln()).validate()?;
    assert_eq!(relative_effects(&logged).1, effects);
    println!("log-transformed data give identical effects");
    Ok(())
}
