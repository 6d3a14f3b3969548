//! k-means on ML embeddings, raw and PCA-projected, scored by Acc/NMI/F1.

use cgnn::eval::eval_clustering;
use cgnn::strategy::StrategyKind;
use cgnn::synthetic::PlantedPartition;
use cgnn::train::{embed, train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let mut g = PlantedPartition::default().generate()?;
    g.row_normalize_features();
    let cfg = TrainConfig { strategy: StrategyKind::Ml, epochs: 100, hidden_dim: 64, ..Default::default() };
    let z = embed(&g, &train(&g, &cfg)?.params)?;

    let ev = eval_clustering(&z, g.labels().unwrap(), g.num_classes(), 32, &[0, 1, 2, 3, 4])?;
    for v in [&ev.raw, &ev.pca] {
        println!("{:>3}: acc {}  nmi {}  f1 {}", v.name, v.acc.summary(), v.nmi.summary(), v.f1_macro.summary());
    }
    println!("better variant: {}", ev.best);
    Ok(())
}
