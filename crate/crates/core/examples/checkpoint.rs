//! Saves trained parameters to params.bin and checks that the reloaded
//! model embeds bit-identically.

use cgnn::checkpoint::{load_checkpoint, save_checkpoint};
use cgnn::diagnostics::norm_stats;
use cgnn::synthetic::PlantedPartition;
use cgnn::train::{embed, train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let g = PlantedPartition::default().generate()?;
    let out = train(&g, &TrainConfig { epochs: 20, hidden_dim: 32, lc_rounds: 5, ..Default::default() })?;
    let tmp = tempfile::tempdir()?;
    let path = tmp.path().join("params.bin");
    save_checkpoint(&out.params, &path)?;
    println!("params.bin: {} bytes", std::fs::metadata(&path)?.len());

    let back = load_checkpoint(&path)?;
    let (z0, z1) = (embed(&g, &out.params)?, embed(&g, &back)?);
    println!("identical embeddings: {}", z0 == z1);
    println!("{:?}", norm_stats(&z1)?);
    Ok(())
}
