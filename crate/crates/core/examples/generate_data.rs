//! Copula and ordinal data generation with MCAR and MAR missingness.
//!
//! cargo run --example generate_data

use rankwild::datagen::{
    default_mar_pairs, generate, CovarianceSetting, GeneratorSpec, Marginal, Mechanism, MissingnessSpec,
};
use rankwild::seed::stream;

fn main() -> rankwild::Result<()> {
    let d = 4;
    let mut rng = stream(5, 0);
    for marginal in [
        Marginal::Normal,
        Marginal::DoubleExponential,
        Marginal::Lognormal,
        Marginal::Chisq15,
        Marginal::Ordinal { c: 1.0 },
    ] {
        let spec = GeneratorSpec::new(marginal, CovarianceSetting::Ar, &[2000], d);
        let data = generate(&spec, &mut rng)?;
        let g = data.group(0);
        let first: Vec<f64> = (0..g.subjects()).filter_map(|k| g.get(k, 0)).collect();
        let mean = first.iter().sum::<f64>() / first.len() as f64;
        println!("{:<20} mean at occasion 1: {mean:.3}", marginal.name());
    }

    let spec = GeneratorSpec::new(Marginal::Normal, CovarianceSetting::Cs, &[1000], d);
    let full = generate(&spec, &mut rng)?;
    println!("MAR pairs for d = {d}: {:?}", default_mar_pairs(d));
    for mech in [Mechanism::Mcar(0.1), Mechanism::Mar1, Mechanism::Mar2] {
        let holed = MissingnessSpec::new(mech).inject(&full, &mut rng)?;
        let g = holed.group(0);
        let rates: Vec<String> = (0..d)
            .map(|j| {
                let miss = (0..g.subjects()).filter(|&k| !g.is_observed(k, j)).count();
                format!("{:.3}", miss as f64 / g.subjects() as f64)
            })
            .collect();
        println!("{:<10} missing share per occasion: {}", mech.name(), rates.join(" "));
    }
    Ok(())
}
