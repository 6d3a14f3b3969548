//! The regulariser against the two usual norm controls, weight decay and
//! cosine scoring, compared by final norm variance and μ⁺/μ⁻ ratio.

use cgnn::synthetic::PlantedPartition;
use cgnn::train::{train, ScoreKind, TrainConfig};

fn main() -> anyhow::Result<()> {
    let mut g = PlantedPartition::default().generate()?;
    g.row_normalize_features();
    let base = TrainConfig { epochs: 200, hidden_dim: 64, diagnostics_pairs: 4000, ..Default::default() };
    let modes = [
        ("plain", TrainConfig { reg_enabled: false, ..base.clone() }),
        ("regulariser", base.clone()),
        ("weight decay", TrainConfig { reg_enabled: false, weight_decay: 0.5, ..base.clone() }),
        ("cosine", TrainConfig { reg_enabled: false, score_mode: ScoreKind::Cosine, ..base.clone() }),
    ];
    println!("{:<14} {:>12} {:>12} {:>8}", "mode", "norm_mean", "norm_var", "ratio");
    for (name, cfg) in modes {
        let out = train(&g, &cfg)?;
        let r = out.trace.last().unwrap();
        println!("{:<14} {:>12.4} {:>12.4e} {:>8.3}", name, r.norm_mean, r.norm_var, r.ratio.unwrap_or(f64::NAN));
    }
    Ok(())
}
