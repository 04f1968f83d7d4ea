//! Power of the bootstrap ATS along a shift grid in a one-sample design.
//!
//! cargo run --release --example power_curve -- [nsim] [B]

use rankwild::datagen::{Alternative, CovarianceSetting, Marginal, Mechanism};
use rankwild::harness::{simulate_power, PowerSpec, SimulationConfig, TestKind};
use rankwild::HypothesisKind;

fn main() -> rankwild::Result<()> {
    let mut args = std::env::args().skip(1);
    let nsim = args.next().and_then(|s| s.parse().ok()).unwrap_or(300);
    let b = args.next().and_then(|s| s.parse().ok()).unwrap_or(199);

    let mut config = SimulationConfig::single(
        &[15],
        4,
        Marginal::Normal,
        CovarianceSetting::Ar,
        Mechanism::Mcar(0.3),
        HypothesisKind::Time,
    );
    config.nsim = nsim;
    config.bootstrap_replicates = b;
    config.tests = vec![TestKind::Ats, TestKind::AtsBoot, TestKind::MatsBoot];
    config.power = Some(PowerSpec {
        alternative: Alternative::Alternative1,
        group: 1,
        zeta: vec![0.0, 0.25, 0.5, 1.0, 1.5],
    });

    let result = simulate_power(&config)?;
    println!("{:>6} {:>8} {:>8} {:>8}", "zeta", "T_A", "T_A*", "T_M*");
    for zeta in &config.power.as_ref().unwrap().zeta {
        let rate = |t| result.row(0, HypothesisKind::Time, *zeta, t).and_then(|r| r.rate).unwrap_or(f64::NAN);
        println!(
            "{zeta:>6.2} {:>8.3} {:>8.3} {:>8.3}",
            rate(TestKind::Ats),
            rate(TestKind::AtsBoot),
            rate(TestKind::MatsBoot)
        );
    }
    Ok(())
}
