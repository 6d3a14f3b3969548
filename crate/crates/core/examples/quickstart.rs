//! Train an LC encoder with the regulariser on a planted-partition graph and
//! probe the embeddings with a linear classifier.

use cgnn::eval::{linear_probe, node_splits_for_seed, NodeSplitSizes, ProbeConfig};
use cgnn::synthetic::PlantedPartition;
use cgnn::train::{embed, train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let mut g = PlantedPartition::default().generate()?;
    g.row_normalize_features();
    println!("graph: {} nodes, {} edges, {} classes", g.num_nodes(), g.num_edges(), g.num_classes());

    let cfg = TrainConfig { epochs: 100, hidden_dim: 64, lc_rounds: 10, ..Default::default() };
    let out = train(&g, &cfg)?;
    let first = &out.trace[0];
    let last = out.trace.last().unwrap();
    println!("loss {:.4} -> {:.4}", first.loss_total, last.loss_total);

    let z = embed(&g, &out.params)?;
    let sizes = NodeSplitSizes { per_class_train: 10, num_val: 20, num_test: 100 };
    let splits = node_splits_for_seed(&g, &sizes, 0)?;
    let acc = linear_probe(&z, g.labels().unwrap(), &splits, &ProbeConfig::default())?;
    println!("probe accuracy: {:.1}%", 100.0 * acc);
    Ok(())
}
