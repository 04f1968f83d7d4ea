//! WTS, ATS and MATS with their asymptotic p-values.
//!
//! cargo run --example statistics

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rankwild::datagen::{generate, CovarianceSetting, GeneratorSpec, Marginal, MissingnessSpec, Mechanism};
use rankwild::{hypothesis_matrix, Analysis, HypothesisKind, StatKind};

fn main() -> rankwild::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut spec = GeneratorSpec::new(Marginal::Lognormal, CovarianceSetting::Cs, &[15, 15], 4);
    spec.shifts = vec![vec![0.0; 4], vec![0.0, 0.0, 0.8, 0.8]];
    let full = generate(&spec, &mut rng)?;
    let data = MissingnessSpec::new(Mechanism::Mcar(0.15)).inject(&full, &mut rng)?.validate()?;

    let analysis = Analysis::new(&data);
    for kind in [HypothesisKind::Group, HypothesisKind::Time, HypothesisKind::Interaction] {
        let contrast = hypothesis_matrix(2, 4, kind)?;
        for stat in StatKind::ALL {
            let v = analysis.statistic(stat, &contrast)?;
            let dof = v.dof.map_or("-".into(), |f| format!("{f:.3}"));
            let p = v.p_asymptotic.map_or("-".into(), |p| format!("{p:.4}"));
            println!("{kind:<12} {stat:<5} value {:>9.4}  df {dof:>6}  p {p}", v.value);
        }
    }
    Ok(())
}
