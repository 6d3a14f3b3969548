//! Ablation of the three contrast strategies with and without the
//! regulariser, scored by linear-probe accuracy over three seeds.

use cgnn::eval::{nc_protocol, NodeSplitSizes, ProbeConfig};
use cgnn::strategy::StrategyKind;
use cgnn::synthetic::PlantedPartition;
use cgnn::train::TrainConfig;

fn main() -> anyhow::Result<()> {
    let mut g = PlantedPartition { feature_signal: 0.4, ..Default::default() }.generate()?;
    g.row_normalize_features();
    let sizes = NodeSplitSizes { per_class_train: 10, num_val: 20, num_test: 100 };
    let seeds = [0, 1, 2];

    println!("{:<4} {:>16} {:>16}", "", "without reg", "with reg");
    for strategy in [StrategyKind::Lc, StrategyKind::Ml, StrategyKind::Co] {
        let mut cells = vec![];
        for reg_enabled in [false, true] {
            let cfg = TrainConfig { strategy, reg_enabled, epochs: 100, hidden_dim: 64, lc_rounds: 10, ..Default::default() };
            let report = nc_protocol(&g, &cfg, &sizes, &seeds, &seeds, &ProbeConfig::default())?;
            cells.push(report.summary());
        }
        println!("{:<4} {:>16} {:>16}", strategy, cells[0], cells[1]);
    }
    Ok(())
}
