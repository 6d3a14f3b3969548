//! Finite-difference check of the full objective for every strategy,
//! regulariser setting and score mode on the built-in toy graph.

use cgnn::diagnostics::gradcheck;
use cgnn::strategy::StrategyKind;
use cgnn::synthetic::toy_graph;
use cgnn::train::{ScoreKind, TrainConfig};

fn main() -> anyhow::Result<()> {
    let g = toy_graph();
    for strategy in [StrategyKind::Lc, StrategyKind::Ml, StrategyKind::Co] {
        for reg_enabled in [false, true] {
            for score_mode in [ScoreKind::Dot, ScoreKind::Cosine] {
                let cfg = TrainConfig { strategy, reg_enabled, score_mode, epochs: 1, hidden_dim: 4, lc_rounds: 1, ..Default::default() };
                let r = gradcheck(&g, &cfg, 1e-5)?;
                println!(
                    "{strategy} reg={:<5} {:<6} max rel err {:.2e} ({} coords, {} kinks skipped)",
                    reg_enabled,
                    format!("{score_mode:?}"),
                    r.max_rel_error,
                    r.checked,
                    r.skipped_kinks
                );
            }
        }
    }
    Ok(())
}
