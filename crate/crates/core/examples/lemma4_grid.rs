//! Checks `Var(sqrt((X + τ/(1+eˣ))² + c²)) < Var(sqrt(X² + c²))` on a grid of
//! τ and c² for two distributions of X on [1.5, ∞).

use cgnn::diagnostics::{verify_lemma4, Lemma4Config, NormDistribution};

fn main() -> anyhow::Result<()> {
    let dists = [
        NormDistribution::Uniform { low: 1.5, high: 6.0 },
        NormDistribution::ShiftedExponential { low: 1.5, rate: 1.0 },
    ];
    for distribution in dists {
        let mut held = 0;
        let mut worst_gap = f64::INFINITY;
        for ti in 1..=10 {
            for ci in 0..10 {
                let cfg = Lemma4Config {
                    tau: ti as f64 / 10.0,
                    c_sq: ci as f64 * 0.5,
                    n_samples: 100_000,
                    distribution,
                    seed: 0,
                };
                let r = verify_lemma4(&cfg)?;
                held += r.holds as usize;
                worst_gap = worst_gap.min(r.var_without - r.var_with);
            }
        }
        println!("{distribution:?}: holds on {held}/100, smallest variance gap {worst_gap:.3e}");
    }
    Ok(())
}
